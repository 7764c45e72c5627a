//! Binary quantum hypothesis testing.
//!
//! Exact minimum type-I error oracles (a quantum Neyman-Pearson sweep and a
//! type-class accelerated classical oracle), the Nussbaum-Szkola reduction,
//! the quantum Hoeffding achievability bound, and the martingale-test upper
//! bound with the refined Azuma inequality.

use crate::divergence::binary_kl;
use crate::error::{Error, Result};
use crate::exponent;
use crate::operator::{spectral_decompose, DensityOperator};

/// Pair of classical vectors on a common outcome set. `p` is a probability
/// vector; `q` is nonnegative and may be sub-normalized off `p`'s support.
#[derive(Debug, Clone)]
pub struct ClassicalPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl ClassicalPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::InvalidParameter(
                "classical pair needs equal-length outcome vectors".into(),
            ));
        }
        for &v in p.iter().chain(q.iter()) {
            if !(v >= 0.0) {
                return Err(Error::ProbabilityOutOfRange { value: v });
            }
        }
        let sp: f64 = p.iter().sum();
        if (sp - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "p sums to {sp}, expected 1"
            )));
        }
        Ok(ClassicalPair { p, q })
    }

    /// Nussbaum-Szkola image of a quantum pair: over the `d^2` outcome grid
    /// `(x,y)`, `p = l_x |<g_y|f_x>|^2` and `q = m_y |<g_y|f_x>|^2`, built
    /// from the deterministic (descending) eigenbases.
    pub fn nussbaum_szkola(rho: &DensityOperator, sigma: &DensityOperator) -> Self {
        let sr = rho.spectral();
        let ss = sigma.spectral();
        let d = rho.dim();
        let overlap = ss.basis.adjoint() * &sr.basis; // entry (y,x) = <g_y|f_x>
        let mut p = Vec::with_capacity(d * d);
        let mut q = Vec::with_capacity(d * d);
        for x in 0..d {
            let lam = sr.eigenvalues[x].max(0.0);
            for y in 0..d {
                let w = overlap[(y, x)].norm_sqr();
                p.push(lam * w);
                q.push(ss.eigenvalues[y].max(0.0) * w);
            }
        }
        ClassicalPair { p, q }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Classical relative entropy `sum p log(p/q)` over the support of `p`.
    pub fn rel_entropy(&self) -> f64 {
        let mut acc = 0.0;
        for (&pi, &qi) in self.p.iter().zip(&self.q) {
            if pi > 0.0 {
                if qi <= 0.0 {
                    return f64::INFINITY;
                }
                acc += pi * (pi / qi).ln();
            }
        }
        acc
    }

    /// Classical relative-entropy variance.
    pub fn rel_var(&self) -> f64 {
        let d = self.rel_entropy();
        if !d.is_finite() {
            return f64::INFINITY;
        }
        let mut second = 0.0;
        for (&pi, &qi) in self.p.iter().zip(&self.q) {
            if pi > 0.0 {
                second += pi * (pi / qi).ln().powi(2);
            }
        }
        (second - d * d).max(0.0)
    }

    /// Classical Rényi divergence of order `alpha`.
    pub fn renyi(&self, alpha: f64) -> f64 {
        let mut acc = 0.0;
        for (&pi, &qi) in self.p.iter().zip(&self.q) {
            if pi > 0.0 && qi > 0.0 {
                acc += pi.powf(alpha) * qi.powf(1.0 - alpha);
            } else if pi > 0.0 && alpha > 1.0 {
                return f64::INFINITY;
            }
        }
        acc.ln() / (alpha - 1.0)
    }

    /// Largest absolute deviation of the log-likelihood ratio from its mean,
    /// over the support of `p`.
    pub fn log_ratio_span(&self) -> Result<f64> {
        let d = self.rel_entropy();
        if !d.is_finite() {
            return Err(Error::SupportViolation {
                context: "log-likelihood ratio unbounded: q vanishes on supp(p)".into(),
            });
        }
        let mut b = 0.0f64;
        for (&pi, &qi) in self.p.iter().zip(&self.q) {
            if pi > 0.0 {
                b = b.max(((pi / qi).ln() - d).abs());
            }
        }
        Ok(b)
    }
}

/// Outcome of an exact Neyman-Pearson optimization.
#[derive(Debug, Clone, Copy)]
pub struct TestResult {
    /// Minimum type-I error.
    pub alpha: f64,
    /// Achieved type-II error (equals the budget up to randomization grain).
    pub beta: f64,
    /// Likelihood threshold of the optimal test.
    pub threshold: f64,
    /// Weight on the boundary eigenspace / boundary type class.
    pub randomization: f64,
}

/// Exact minimum type-I error for `rho^(x)n` vs `sigma^(x)n` with type-II
/// budget `mu`, by a quantum Neyman-Pearson threshold sweep.
///
/// The positive part of `rho^n - t sigma^n` fixes the deterministic piece of
/// the test; `t` is found by bisection on the (nonincreasing) type-II error,
/// and the zero eigenspace at the crossing is weighted so the budget is met
/// exactly.
pub fn exact_min_type1(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    n: u32,
    mu: f64,
    dim_cap: usize,
) -> Result<TestResult> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::MuOutOfRange { mu });
    }
    let rho_n = rho.kron_power(n, dim_cap)?;
    let sigma_n = sigma.kron_power(n, dim_cap)?;
    let d = rho_n.dim();

    let scale_r = rho_n.spectral().spectral_radius();
    let scale_s = sigma_n.spectral().spectral_radius();
    let smallest_sigma = sigma_n
        .spectral()
        .eigenvalues
        .iter()
        .copied()
        .filter(|&v| v > sigma_n.spectral().support_cutoff())
        .fold(f64::INFINITY, f64::min);

    // (alpha_strict, beta_strict, alpha_zero, beta_zero) at threshold t with
    // a boundary band of half-width `band`.
    let point = |t: f64, band: f64| -> (f64, f64, f64, f64) {
        let a = rho_n.matrix() - sigma_n.matrix() * nalgebra::Complex::new(t, 0.0);
        let s = spectral_decompose(&a);
        let mut keep_r = 0.0;
        let mut keep_s = 0.0;
        let mut zero_r = 0.0;
        let mut zero_s = 0.0;
        for i in 0..d {
            let v = s.basis.column(i);
            let ev = s.eigenvalues[i];
            let wr = (v.adjoint() * rho_n.matrix() * v)[(0, 0)].re;
            let ws = (v.adjoint() * sigma_n.matrix() * v)[(0, 0)].re;
            if ev > band {
                keep_r += wr;
                keep_s += ws;
            } else if ev >= -band {
                zero_r += wr;
                zero_s += ws;
            }
        }
        (1.0 - keep_r, keep_s, zero_r, zero_s)
    };

    let base_band = 1e-12 * (scale_r + scale_s).max(1.0);
    let beta_at = |t: f64| point(t, base_band).1;

    if beta_at(0.0) <= mu {
        // Even the full support projector of rho^n fits the budget.
        let (_, beta, _, _) = point(0.0, base_band);
        return Ok(TestResult {
            alpha: 0.0,
            beta,
            threshold: 0.0,
            randomization: 0.0,
        });
    }

    let mut hi = if smallest_sigma.is_finite() {
        4.0 * scale_r / smallest_sigma + 1.0
    } else {
        1.0
    };
    let mut guard = 0;
    while beta_at(hi) > mu {
        hi *= 16.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::NonConvergence {
                tol: mu,
                iterations: guard,
                residual: beta_at(hi),
            });
        }
    }

    let mut lo = 0.0f64;
    for _ in 0..120 {
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if beta_at(mid) > mu {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Boundary band wide enough to absorb the residual bisection interval.
    let band = base_band.max(4.0 * (hi - lo) * scale_s);
    let (alpha_strict, beta_strict, zero_r, zero_s) = point(hi, band);
    let budget = mu - beta_strict;
    let c = if zero_s > 1e-15 {
        (budget / zero_s).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(TestResult {
        alpha: (alpha_strict - c * zero_r).clamp(0.0, 1.0),
        beta: beta_strict + c * zero_s,
        threshold: hi,
        randomization: c,
    })
}

#[derive(Debug, Clone)]
struct TypeClass {
    log_ratio: f64,
    p_mass: f64,
    q_mass: f64,
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

fn count_type_classes(n: u64, k: u64) -> u64 {
    // C(n + k - 1, k - 1), saturating.
    let mut acc: f64 = 1.0;
    for i in 0..(k - 1) {
        acc *= (n + i + 1) as f64 / (i + 1) as f64;
        if acc > 1e18 {
            return u64::MAX;
        }
    }
    acc.round() as u64
}

/// Exact classical Neyman-Pearson for `n` i.i.d. draws of a [`ClassicalPair`],
/// accelerated by type classes: the likelihood ratio depends only on the
/// empirical type, so classes are sorted by ratio and the boundary class is
/// randomized to hit the budget exactly.
pub fn exact_min_type1_commuting(
    pair: &ClassicalPair,
    n: u32,
    mu: f64,
    class_cap: u64,
) -> Result<TestResult> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::MuOutOfRange { mu });
    }
    // Outcomes that neither hypothesis can produce are irrelevant; outcomes
    // with p = 0 are never accepted by an optimal test with mu < 1.
    let outcomes: Vec<(f64, f64)> = pair
        .p
        .iter()
        .zip(&pair.q)
        .filter(|&(&p, &q)| p > 0.0 || q > 0.0)
        .map(|(&p, &q)| (p, q))
        .collect();
    let reject_only_q: f64 = outcomes
        .iter()
        .filter(|&&(p, _)| p == 0.0)
        .map(|&(_, q)| q)
        .sum();
    let live: Vec<(f64, f64)> = outcomes.into_iter().filter(|&(p, _)| p > 0.0).collect();
    let _ = reject_only_q;
    let k = live.len();
    let count = count_type_classes(n as u64, k as u64);
    if count > class_cap {
        return Err(Error::TypeClassCapExceeded {
            count,
            cap: class_cap,
        });
    }

    let lf = ln_factorials(n as usize);
    let ln_p: Vec<f64> = live.iter().map(|&(p, _)| p.ln()).collect();
    let ln_q: Vec<f64> = live
        .iter()
        .map(|&(_, q)| if q > 0.0 { q.ln() } else { f64::NEG_INFINITY })
        .collect();

    let mut classes = Vec::with_capacity(count.min(1 << 22) as usize);
    let mut counts = vec![0u32; k];
    enumerate_types(
        n,
        0,
        &mut counts,
        &mut |counts: &[u32]| {
            let mut ln_coeff = lf[n as usize];
            let mut lp = 0.0;
            let mut lq = 0.0;
            for (i, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                ln_coeff -= lf[c as usize];
                lp += c as f64 * ln_p[i];
                lq += c as f64 * ln_q[i];
            }
            classes.push(TypeClass {
                log_ratio: lp - lq,
                p_mass: (ln_coeff + lp).exp(),
                q_mass: if lq.is_finite() {
                    (ln_coeff + lq).exp()
                } else {
                    0.0
                },
            });
        },
    );

    // Descending by ratio; infinite ratios (q-mass zero) first.
    classes.sort_by(|a, b| b.log_ratio.partial_cmp(&a.log_ratio).unwrap());

    let mut alpha = 1.0;
    let mut beta = 0.0;
    let mut idx = 0;
    while idx < classes.len() {
        // One group = classes with numerically equal log ratio.
        let mut gp = 0.0;
        let mut gq = 0.0;
        let lead = classes[idx].log_ratio;
        let tol = 1e-10 * lead.abs().max(1.0);
        let mut end = idx;
        while end < classes.len()
            && (classes[end].log_ratio == lead || (lead - classes[end].log_ratio).abs() <= tol)
        {
            gp += classes[end].p_mass;
            gq += classes[end].q_mass;
            end += 1;
        }
        if beta + gq <= mu {
            alpha -= gp;
            beta += gq;
            idx = end;
            continue;
        }
        let c = if gq > 0.0 { (mu - beta) / gq } else { 0.0 };
        return Ok(TestResult {
            alpha: (alpha - c * gp).clamp(0.0, 1.0),
            beta: beta + c * gq,
            threshold: lead.exp(),
            randomization: c,
        });
    }
    Ok(TestResult {
        alpha: alpha.clamp(0.0, 1.0),
        beta,
        threshold: 0.0,
        randomization: 0.0,
    })
}

fn enumerate_types(remaining: u32, i: usize, counts: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
    if i == counts.len() - 1 {
        counts[i] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[i] = c;
        enumerate_types(remaining - c, i + 1, counts, visit);
    }
    counts[i] = 0;
}

/// Value plus its exponent decomposition `value = prefactor * exp(-n * exponent)`.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub value: f64,
    pub exponent: f64,
    pub prefactor: f64,
    pub s_star: Option<f64>,
    pub valid_n: bool,
}

/// Quantum Hoeffding achievability bound
/// `exp(-n sup_(0<a<=1) (a-1)/a (r - D_a(rho||sigma)))`, evaluated in the
/// `s`-parametrization as `sup_(s>=0) { E_h(s) - s r }`.
pub fn audenaert_bound(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    n: u32,
    r: f64,
) -> Result<BoundReport> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter("rate r must be nonnegative".into()));
    }
    let sp = exponent::sp_exponent_state(r, rho, sigma)?;
    let exponent = if sp.value.is_finite() { sp.value } else { f64::INFINITY };
    Ok(BoundReport {
        value: (-(n as f64) * exponent).exp(),
        exponent,
        prefactor: 1.0,
        s_star: Some(sp.s_star),
        valid_n: true,
    })
}

/// Refined Azuma tail bound `2 exp(-n h((bx+v)/(b^2+v) || v/(b^2+v)))` for a
/// martingale with conditional variance at most `v` and increments bounded
/// by `b`.
pub fn refined_azuma(x: f64, v: f64, b: f64, n: u32) -> f64 {
    let denom = b * b + v;
    let q = v / denom;
    let p = ((b * x + v) / denom).min(1.0);
    2.0 * (-(n as f64) * binary_kl(p, q)).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct MartingaleBound {
    pub report: BoundReport,
    /// Increment bound `b` over the joint support.
    pub b: f64,
    /// Relative-entropy variance of the pair.
    pub variance: f64,
    /// Multiplicative correction `1 - a b / (3V (1 + V/b^2))`.
    pub correction: f64,
}

/// Upper bound on the type-I error of the likelihood-threshold martingale
/// test at threshold `exp(n (D - a))`:
/// `2 exp(-n a^2/(2V) (1 - a b / (3V(1 + V/b^2))))`. Its type-II error is at
/// most `exp(-n (D - a))` by construction.
pub fn martingale_alpha_bound(pair: &ClassicalPair, n: u32, a: f64) -> Result<MartingaleBound> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(
            "rate offset a must be positive".into(),
        ));
    }
    let v = pair.rel_var();
    if !(v > 1e-12) {
        return Err(Error::DegenerateVariance { variance: v });
    }
    let b = pair.log_ratio_span()?;
    let correction = 1.0 - a * b / (3.0 * v * (1.0 + v / (b * b)));
    let exponent = a * a / (2.0 * v) * correction;
    Ok(MartingaleBound {
        report: BoundReport {
            value: 2.0 * (-(n as f64) * exponent).exp(),
            exponent,
            prefactor: 2.0,
            s_star: None,
            valid_n: true,
        },
        b,
        variance: v,
        correction,
    })
}
