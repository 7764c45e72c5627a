//! One-dimensional solvers: golden-section maximization of concave functions
//! and safeguarded bisection/Newton root finding for monotone functions.

/// `1/phi^2`, the golden-section interval reduction factor.
const INV_GOLD: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
}

/// Maximizes a concave `f` on `[lo, hi]` by golden-section search until the
/// bracket shrinks below `rel_tol * max(1, |x|)`, followed by one parabolic
/// polish step. Value accuracy is near machine precision; the maximizer is
/// limited to ~sqrt(eps) by the flatness of smooth peaks.
pub fn golden_max(lo: f64, hi: f64, rel_tol: f64, f: impl Fn(f64) -> f64) -> GoldenResult {
    debug_assert!(hi >= lo);
    let (mut lo, mut hi) = (lo, hi);
    let mut a = lo + INV_GOLD * (hi - lo);
    let mut b = hi - INV_GOLD * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    let mut iter = 0usize;
    while hi - lo > rel_tol * lo.abs().max(1.0) && iter < 400 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = hi - INV_GOLD * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = lo + INV_GOLD * (hi - lo);
            fa = f(a);
        }
        iter += 1;
    }
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    // Parabolic vertex through (lo, x, hi); kept only when it improves.
    let (flo, fhi) = (f(lo), f(hi));
    let d1 = (x - lo) * (fx - fhi);
    let d2 = (x - hi) * (fx - flo);
    let denom = d1 - d2;
    if denom.abs() > 0.0 {
        let vertex = x - 0.5 * ((x - lo) * d1 - (x - hi) * d2) / denom;
        if vertex.is_finite() && vertex > lo && vertex < hi {
            let fv = f(vertex);
            if fv >= fx {
                x = vertex;
                fx = fv;
            }
        }
    }
    GoldenResult { x, value: fx }
}

/// Solves `g(t) = target` for increasing `g` on `[lo, hi]` by bisection with
/// Newton polish steps when a derivative is supplied. Assumes
/// `g(lo) <= target <= g(hi)`.
pub fn solve_increasing(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    abs_tol: f64,
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
) -> f64 {
    for _ in 0..200 {
        if hi - lo <= abs_tol {
            break;
        }
        let t = 0.5 * (lo + hi);
        let gt = g(t);
        if gt < target {
            lo = t;
        } else {
            hi = t;
        }
        // Newton step from the midpoint, kept only if it stays bracketed.
        let d = dg(t);
        if d > 0.0 {
            let tn = t - (gt - target) / d;
            if tn > lo && tn < hi {
                let gn = g(tn);
                if gn < target {
                    lo = tn;
                } else {
                    hi = tn;
                }
            }
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn golden_finds_parabola_peak() {
        let r = golden_max(0.0, 5.0, 1e-12, |x| -(x - 2.0) * (x - 2.0) + 3.0);
        assert_relative_eq!(r.x, 2.0, epsilon = 1e-7);
        assert_relative_eq!(r.value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn golden_flat_region_stays_in_bracket() {
        let r = golden_max(0.0, 1.0, 1e-12, |_| 1.0);
        assert!(r.x >= 0.0 && r.x <= 1.0);
    }

    #[test]
    fn bisection_newton_root() {
        let t = solve_increasing(0.0, 10.0, 2.0, 1e-14, |x| x * x, |x| 2.0 * x);
        assert_relative_eq!(t, 2.0f64.sqrt(), epsilon = 1e-12);
    }
}
