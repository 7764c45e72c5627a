//! Strong large deviation machinery: tilted cumulants and their
//! Legendre-Fenchel transforms, the minimal tilted curvature, the
//! Chaganty-Sethuraman lower bound, and the sharp / weak converse bounds
//! built from them.

use crate::channel::{self, CqChannel, InputDistribution};
use crate::divergence::{binary_entropy, SupportPolicy};
use crate::error::{Error, Result};
use crate::exponent;
use crate::hypothesis::{BoundReport, ClassicalPair};
use crate::operator::{spectral_decompose, DensityOperator};
use crate::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltDirection {
    /// Tilt of `log(q/p)` under `p`.
    Zero,
    /// Tilt of `log(p/q)` under `q` (restricted to the support of `p`).
    One,
}

/// Weighted family of per-symbol classical pairs with exponential tilting.
///
/// For heterogeneous sequences the per-symbol cumulants are averaged with the
/// empirical type. Outcomes of `q` outside the support of `p` are dropped at
/// construction; they cannot contribute to the exponent.
#[derive(Debug, Clone)]
pub struct TiltedFamily {
    /// (weight, outcomes); outcome = (p, q) with p > 0.
    components: Vec<(f64, Vec<(f64, f64)>)>,
    direction: TiltDirection,
}

impl TiltedFamily {
    pub fn from_pair(pair: &ClassicalPair, direction: TiltDirection) -> Result<Self> {
        Self::from_weighted_pairs(vec![(1.0, pair.clone())], direction)
    }

    pub fn from_weighted_pairs(
        pairs: Vec<(f64, ClassicalPair)>,
        direction: TiltDirection,
    ) -> Result<Self> {
        let mut components = Vec::new();
        for (weight, pair) in pairs {
            if weight <= 0.0 {
                continue;
            }
            let mut outcomes = Vec::new();
            for (&p, &q) in pair.p().iter().zip(pair.q()) {
                if p > 0.0 {
                    if q <= 0.0 {
                        return Err(Error::SupportViolation {
                            context: "tilted family needs q > 0 on supp(p)".into(),
                        });
                    }
                    outcomes.push((p, q));
                }
            }
            components.push((weight, outcomes));
        }
        Ok(TiltedFamily {
            components,
            direction,
        })
    }

    /// Per-symbol Nussbaum-Szkola pairs of `(W_x, sigma)` weighted by `p`.
    pub fn from_channel(
        w: &CqChannel,
        sigma: &DensityOperator,
        p: &InputDistribution,
        direction: TiltDirection,
    ) -> Result<Self> {
        let pairs = p
            .support()
            .into_iter()
            .map(|x| {
                (
                    p.weight(x),
                    ClassicalPair::nussbaum_szkola(w.output(x), sigma),
                )
            })
            .collect();
        Self::from_weighted_pairs(pairs, direction)
    }

    /// `(Lambda, Lambda', Lambda'')` at tilt `t`: log moment generating
    /// function of the log-likelihood ratio with its tilted mean and
    /// variance.
    pub fn cumulant(&self, t: f64) -> (f64, f64, f64) {
        let mut lam = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (weight, outcomes) in &self.components {
            let mut z = 0.0;
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for &(p, q) in outcomes {
                let (base, x) = match self.direction {
                    TiltDirection::Zero => (p, (q / p).ln()),
                    TiltDirection::One => (q, (p / q).ln()),
                };
                let e = base * (t * x).exp();
                z += e;
                m1 += e * x;
                m2 += e * x * x;
            }
            let mean = m1 / z;
            lam += weight * z.ln();
            d1 += weight * mean;
            d2 += weight * (m2 / z - mean * mean);
        }
        (lam, d1, d2)
    }

    /// Minimum of `Lambda''` over `t` in `[0,1]`, by a dense grid with local
    /// golden refinement. Strictly positive for non-degenerate pairs.
    pub fn min_curvature(&self) -> f64 {
        let steps = 1000;
        let mut best_t = 0.0;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let v = self.cumulant(t).2;
            if v < best {
                best = v;
                best_t = t;
            }
        }
        let lo = (best_t - 1e-3).max(0.0);
        let hi = (best_t + 1e-3).min(1.0);
        let refined = solve::golden_max(lo, hi, 1e-12, |t| -self.cumulant(t).2);
        best.min(-refined.value)
    }
}

/// Legendre-Fenchel transform restricted to the tilt window `[0,1]`.
#[derive(Debug, Clone, Copy)]
pub struct LfResult {
    pub value: f64,
    pub t_star: f64,
    /// False when `z` fell outside the range of `Lambda'` over `[0,1]` and a
    /// boundary value was returned.
    pub in_window: bool,
}

/// `Lambda*(z) = sup_t { z t - Lambda(t) }` with the supremum over `[0,1]`;
/// the optimizer is interior exactly when `z` lies between the boundary
/// slopes, and is then found by bisection with Newton polish.
pub fn legendre_fenchel(fam: &TiltedFamily, z: f64) -> LfResult {
    let (l0, d0, _) = fam.cumulant(0.0);
    let (l1, d1, _) = fam.cumulant(1.0);
    if z <= d0 {
        return LfResult {
            value: -l0,
            t_star: 0.0,
            in_window: z == d0,
        };
    }
    if z >= d1 {
        return LfResult {
            value: z - l1,
            t_star: 1.0,
            in_window: z == d1,
        };
    }
    let t = solve::solve_increasing(
        0.0,
        1.0,
        z,
        1e-14,
        |t| fam.cumulant(t).1,
        |t| fam.cumulant(t).2,
    );
    let (l, _, _) = fam.cumulant(t);
    LfResult {
        value: z * t - l,
        t_star: t,
        in_window: true,
    }
}

/// Minimum tilted curvature for the per-symbol family of `(W_x, sigma)`
/// pairs, guarded by the variance floor `nu`.
pub fn v_min(
    w: &CqChannel,
    sigma: &DensityOperator,
    p: &InputDistribution,
    nu: f64,
) -> Result<f64> {
    let v = channel::cond_rel_var(w, sigma, p, SupportPolicy::Strict)?;
    if v < nu {
        return Err(Error::VarianceBelowNu { variance: v, nu });
    }
    let fam = TiltedFamily::from_channel(w, sigma, p, TiltDirection::Zero)?;
    Ok(fam.min_curvature())
}

/// A finitely supported distribution of one summand.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    /// (value, probability) atoms.
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// `(log E[e^(tX)], tilted mean, tilted variance)`.
    fn cumulant(&self, t: f64) -> (f64, f64, f64) {
        let mut z = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for &(x, p) in &self.atoms {
            let e = p * (t * x).exp();
            z += e;
            m1 += e * x;
            m2 += e * x * x;
        }
        let mean = m1 / z;
        (z.ln(), mean, m2 / z - mean * mean)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CsBound {
    pub bound: f64,
    pub t_star: f64,
    /// Average tilted variance `m_2` at the solving tilt.
    pub m2: f64,
    /// Always false: the inequality is guaranteed only for `n` beyond an
    /// implicit threshold, so callers must treat the bound as asymptotic.
    pub valid_n: bool,
}

/// Chaganty-Sethuraman lower bound on `Pr{ Z_n / n >= T_n }` for a sum of
/// independent summands distributed by weighted `measures`:
/// `(1-eta) / (t* sqrt(2 pi n m2)) exp(-n Lambda*(T_n))`.
pub fn cs_lower_bound(
    measures: &[(f64, DiscreteMeasure)],
    t_n: f64,
    eta: f64,
    n: u64,
) -> Result<CsBound> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter("eta must lie in (0,1)".into()));
    }
    let joint = |t: f64| -> (f64, f64, f64) {
        let mut acc = (0.0, 0.0, 0.0);
        for (w, m) in measures {
            let (l, d1, d2) = m.cumulant(t);
            acc.0 += w * l;
            acc.1 += w * d1;
            acc.2 += w * d2;
        }
        acc
    };
    let mean = joint(0.0).1;
    if t_n <= mean {
        return Err(Error::TiltNotInUnitInterval {
            target: t_n,
            context: format!("threshold does not exceed the mean {mean:.6e}"),
        });
    }
    let mut hi = 1.0;
    while joint(hi).1 < t_n && hi < 1e4 {
        hi *= 2.0;
    }
    if joint(hi).1 < t_n {
        return Err(Error::TiltNotInUnitInterval {
            target: t_n,
            context: "threshold exceeds the attainable range of the tilted mean".into(),
        });
    }
    let t_star = solve::solve_increasing(0.0, hi, t_n, 1e-13, |t| joint(t).1, |t| joint(t).2);
    let (l, _, m2) = joint(t_star);
    let rate = t_n * t_star - l;
    let bound = (1.0 - eta) / (t_star * (2.0 * std::f64::consts::PI * n as f64 * m2).sqrt())
        * (-(n as f64) * rate).exp();
    Ok(CsBound {
        bound,
        t_star,
        m2,
        valid_n: false,
    })
}

/// Parameters shared by the converse bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundConfig {
    /// Slack parameter in (0, 1/2).
    pub eta: f64,
    /// Variance floor; `None` uses half the conditional variance.
    pub nu: Option<f64>,
    /// Threshold margin for the Wolfowitz strong converse.
    pub kappa: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            eta: 0.25,
            nu: None,
            kappa: 0.1,
        }
    }
}

impl BoundConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return Err(Error::InvalidParameter("eta must lie in (0, 1/2)".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter("kappa must be positive".into()));
        }
        Ok(())
    }
}

/// Sharp converse lower bound assembled from the tilted-cumulant machinery.
#[derive(Debug, Clone, Copy)]
pub struct SharpBoundReport {
    /// `min(1, prefactor exp(-n exponent))`.
    pub lower_bound: f64,
    /// Sphere-packing exponent at the backed-off rate.
    pub exponent: f64,
    pub s_star: f64,
    /// `A / (s* sqrt(n))`.
    pub prefactor: f64,
    /// Constant `A = (1-eta) / (2 sqrt(2 pi v_min))`.
    pub a_const: f64,
    /// Constant `K` making the rate backoff `K log n / n` dominate the
    /// explicit `log n/(2n) + x/n` form for all `n >= 3`.
    pub k_const: f64,
    /// Rate backoff `c_n = K log n / n`.
    pub c_n: f64,
    pub v_min: f64,
    /// True when the backed-off rate stayed inside `(D_0, D)` and the raw
    /// bound was a genuine probability; the concentration step itself remains
    /// asymptotic (its threshold blocklength is not computable).
    pub valid_n: bool,
}

/// Lower bound on the minimum type-I error at type-II budget `exp(-n R_n)`
/// against the product of `sigma`, for codeword type `p`.
pub fn sharp_converse_bound(
    w: &CqChannel,
    sigma: &DensityOperator,
    p: &InputDistribution,
    n: u64,
    r_n: f64,
    cfg: &BoundConfig,
) -> Result<SharpBoundReport> {
    cfg.validate()?;
    let d = channel::cond_rel_entropy(w, sigma, p, SupportPolicy::Strict)?;
    let d0 = channel::cond_d0(w, sigma, p)?;
    if !(d0 < r_n && r_n < d) {
        return Err(Error::RateOutOfWindow { rate: r_n, d0, d });
    }
    let v = channel::cond_rel_var(w, sigma, p, SupportPolicy::Strict)?;
    let nu = cfg.nu.unwrap_or(0.5 * v);
    if nu > v {
        return Err(Error::VarianceBelowNu { variance: v, nu });
    }
    let vmin = v_min(w, sigma, p, nu)?;

    let a_const = (1.0 - cfg.eta) / (2.0 * (2.0 * std::f64::consts::PI * vmin).sqrt());
    let x = (2.0 * (2.0 * std::f64::consts::PI * vmin).sqrt()).ln() - (1.0 - cfg.eta).ln();
    let k_const = 0.5 + x.max(0.0) / 3.0f64.ln();
    let c_n = k_const * (n as f64).ln() / n as f64;
    let shifted = r_n - c_n;

    let sp = exponent::sp_exponent_2(shifted, p, w, sigma)?;
    if !sp.value.is_finite() {
        return Ok(SharpBoundReport {
            lower_bound: 0.0,
            exponent: f64::INFINITY,
            s_star: sp.s_star,
            prefactor: 0.0,
            a_const,
            k_const,
            c_n,
            v_min: vmin,
            valid_n: false,
        });
    }
    let prefactor = a_const / (sp.s_star * (n as f64).sqrt());
    let raw = prefactor * (-(n as f64) * sp.value).exp();
    Ok(SharpBoundReport {
        lower_bound: raw.min(1.0),
        exponent: sp.value,
        s_star: sp.s_star,
        prefactor,
        a_const,
        k_const,
        c_n,
        v_min: vmin,
        valid_n: shifted > d0 && raw <= 1.0,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct WeakConverseBound {
    pub report: BoundReport,
    /// `max_x V(W_x||sigma)` over the channel image.
    pub a_v: f64,
    /// `xi = sqrt(2 A_v / eta)`.
    pub xi: f64,
    /// Smallest blocklength with `exp(-xi sqrt(n)) <= eta/2`.
    pub n0: u64,
    pub f_eta: f64,
}

/// Weak converse lower bound
/// `f(eta) exp(-n Esp~(R - 2 xi/sqrt(n), P, sigma) / (1-eta))`.
pub fn weak_converse_bound(
    w: &CqChannel,
    sigma: &DensityOperator,
    p: &InputDistribution,
    n: u64,
    r: f64,
    cfg: &BoundConfig,
) -> Result<WeakConverseBound> {
    cfg.validate()?;
    let mut a_v = 0.0f64;
    for x in 0..w.len() {
        a_v = a_v.max(crate::divergence::rel_var(
            w.output(x),
            sigma,
            SupportPolicy::Strict,
        )?);
    }
    let xi = (2.0 * a_v / cfg.eta).sqrt();
    let n0 = smallest_valid_n(xi, cfg.eta);
    if n < n0 {
        return Err(Error::BelowN0 { n, required: n0 });
    }
    let f_eta = (-binary_entropy(1.0 - cfg.eta) / (1.0 - cfg.eta)).exp();
    let shifted = r - 2.0 * xi / (n as f64).sqrt();
    let sp = exponent::sp_exponent_tilde(shifted, p, w, sigma)?;
    let exponent = if sp.value.is_finite() {
        sp.value / (1.0 - cfg.eta)
    } else {
        f64::INFINITY
    };
    let value = if exponent.is_finite() {
        f_eta * (-(n as f64) * exponent).exp()
    } else {
        0.0
    };
    Ok(WeakConverseBound {
        report: BoundReport {
            value,
            exponent,
            prefactor: f_eta,
            s_star: Some(sp.s_star),
            valid_n: true,
        },
        a_v,
        xi,
        n0,
        f_eta,
    })
}

fn smallest_valid_n(xi: f64, eta: f64) -> u64 {
    let root = (2.0 / eta).ln() / xi;
    (root * root).ceil().max(1.0) as u64
}

/// Wolfowitz-style strong converse floor `1 - A_v/(n kappa^2) - exp(-n kappa)`,
/// clamped to `[0, 1)`.
pub fn wolfowitz_alpha_lower(a_v: f64, n: u64, kappa: f64) -> f64 {
    (1.0 - a_v / (n as f64 * kappa * kappa) - (-(n as f64) * kappa).exp()).max(0.0)
}

#[derive(Debug, Clone, Copy)]
pub struct ChebyshevTail {
    pub bound: f64,
    pub exact: f64,
}

/// Quantum Chebyshev bound `Tr[rho {rho - gamma sigma >= 0}] <=
/// V(rho||sigma) / (log gamma - D)^2`, plus the exact left side.
pub fn chebyshev_tail(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    gamma: f64,
) -> Result<ChebyshevTail> {
    let d = crate::divergence::rel_entropy(rho, sigma, SupportPolicy::Strict)?;
    let log_gamma = gamma.ln();
    if !(log_gamma > d) {
        return Err(Error::GammaBelowThreshold { log_gamma, d });
    }
    let v = crate::divergence::rel_var(rho, sigma, SupportPolicy::Strict)?;
    let bound = v / (log_gamma - d).powi(2);

    let a = rho.matrix() - sigma.matrix() * nalgebra::Complex::new(gamma, 0.0);
    let s = spectral_decompose(&a);
    let tol = 1e-12 * s.spectral_radius().max(1.0);
    let mut exact = 0.0;
    for (i, &ev) in s.eigenvalues.iter().enumerate() {
        if ev >= -tol {
            let v_i = s.basis.column(i);
            exact += (v_i.adjoint() * rho.matrix() * v_i)[(0, 0)].re;
        }
    }
    Ok(ChebyshevTail { bound, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::sp_exponent_state;
    use crate::sample;
    use approx::assert_relative_eq;
    use num_bigint::BigUint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rho0() -> DensityOperator {
        DensityOperator::from_probs(&[0.5, 0.5]).unwrap()
    }

    fn sigma0() -> DensityOperator {
        DensityOperator::from_probs(&[0.25, 0.75]).unwrap()
    }

    fn fam0(direction: TiltDirection) -> TiltedFamily {
        let pair = ClassicalPair::nussbaum_szkola(&rho0(), &sigma0());
        TiltedFamily::from_pair(&pair, direction).unwrap()
    }

    fn d_pair() -> f64 {
        0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln()
    }

    #[test]
    fn cumulant_endpoints_vanish() {
        let fam = fam0(TiltDirection::Zero);
        assert!(fam.cumulant(0.0).0.abs() < 1e-12);
        assert!(fam.cumulant(1.0).0.abs() < 1e-12);
        // Slope at 0 is minus the relative entropy.
        assert_relative_eq!(fam.cumulant(0.0).1, -d_pair(), epsilon = 1e-12);
    }

    #[test]
    fn cumulant_symmetry_between_directions() {
        let f0 = fam0(TiltDirection::Zero);
        let f1 = fam0(TiltDirection::One);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let a = f0.cumulant(t);
            let b = f1.cumulant(1.0 - t);
            assert!((a.0 - b.0).abs() <= 1e-10);
            assert!((a.1 + b.1).abs() <= 1e-9);
            assert!((a.2 - b.2).abs() <= 1e-9);
        }
    }

    #[test]
    fn cumulant_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let rho = sample::random_density(2, &mut rng);
            let sigma = sample::random_density(2, &mut rng);
            let pair = ClassicalPair::nussbaum_szkola(&rho, &sigma);
            let fam = TiltedFamily::from_pair(&pair, TiltDirection::Zero).unwrap();
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                assert!(fam.cumulant(t).2 >= -1e-10);
            }
        }
    }

    #[test]
    fn legendre_fenchel_at_slope_origin() {
        let fam = fam0(TiltDirection::Zero);
        let lf = legendre_fenchel(&fam, -d_pair());
        assert!(lf.value.abs() < 1e-10);
        assert!(lf.t_star.abs() < 1e-6);
        // Any z: the transform is nonnegative because t = 0 is feasible.
        for z in [-0.5, -0.1, 0.0, 0.2, 0.7] {
            assert!(legendre_fenchel(&fam, z).value >= -1e-12);
        }
    }

    #[test]
    fn regularity_identities_on_rate_grid() {
        let f0 = fam0(TiltDirection::Zero);
        let f1 = fam0(TiltDirection::One);
        let d = d_pair();
        for k in 1..=20 {
            let r = d * (0.05 + 0.9 * (k - 1) as f64 / 19.0);
            let sp = sp_exponent_state(r, &rho0(), &sigma0()).unwrap();
            let phi = sp.value;

            let lf0 = legendre_fenchel(&f0, phi - r);
            assert!(
                (lf0.value - phi).abs() <= 1e-6,
                "rate {r}: Lambda*0 = {} vs phi = {phi}",
                lf0.value
            );
            let lf1 = legendre_fenchel(&f1, r - phi);
            assert!(
                (lf1.value - r).abs() <= 1e-6,
                "rate {r}: Lambda*1 = {} vs r = {r}",
                lf1.value
            );
            let t_pred = sp.s_star / (1.0 + sp.s_star);
            assert!(
                (lf0.t_star - t_pred).abs() <= 1e-6,
                "rate {r}: t* = {} vs s*/(1+s*) = {t_pred}",
                lf0.t_star
            );
            assert!(lf0.t_star > 0.0 && lf0.t_star < 1.0);
        }
    }

    #[test]
    fn v_min_basics() {
        let single = CqChannel::new(vec!["a".into()], vec![rho0()]).unwrap();
        let p = InputDistribution::uniform(1);
        let v = channel::cond_rel_var(&single, &sigma0(), &p, SupportPolicy::Strict).unwrap();
        let vm = v_min(&single, &sigma0(), &p, 0.5 * v).unwrap();
        // t = 0 curvature equals V, so the minimum cannot exceed it.
        assert!(vm <= v + 1e-12);
        assert!(vm > 0.0);

        // Degenerate pair rejected by the variance floor.
        let same = CqChannel::new(vec!["a".into()], vec![sigma0()]).unwrap();
        assert!(matches!(
            v_min(&same, &sigma0(), &p, 1e-3),
            Err(Error::VarianceBelowNu { .. })
        ));
    }

    #[test]
    fn v_min_invariant_under_relabeling() {
        let pair = ClassicalPair::new(vec![0.5, 0.5], vec![0.25, 0.75]).unwrap();
        let flipped = ClassicalPair::new(vec![0.5, 0.5], vec![0.75, 0.25]).unwrap();
        let a = TiltedFamily::from_pair(&pair, TiltDirection::Zero)
            .unwrap()
            .min_curvature();
        let b = TiltedFamily::from_pair(&flipped, TiltDirection::Zero)
            .unwrap()
            .min_curvature();
        assert_relative_eq!(a, b, epsilon = 1e-10);
    }

    fn binomial_upper_tail(n: u64, k_min: u64) -> f64 {
        let mut num = BigUint::from(0u32);
        let mut coeff = BigUint::from(1u32);
        // C(n, k) built iteratively; accumulate k >= k_min.
        for k in 0..=n {
            if k >= k_min {
                num += &coeff;
            }
            if k < n {
                coeff = coeff * BigUint::from(n - k) / BigUint::from(k + 1);
            }
        }
        let denom = BigUint::from(1u32) << n;
        // Scale to f64 via a ratio of big integers.
        let scale = BigUint::from(1u128 << 63);
        let scaled = (num * &scale) / denom;
        let digits = scaled.to_u64_digits();
        let lo = digits.first().copied().unwrap_or(0) as f64;
        let hi = digits.get(1).copied().unwrap_or(0) as f64;
        (hi * 2f64.powi(64) + lo) / 2f64.powi(63)
    }

    #[test]
    fn cs_bound_bernoulli_example() {
        let m = DiscreteMeasure {
            atoms: vec![(0.0, 0.5), (1.0, 0.5)],
        };
        let exact20 = binomial_upper_tail(20, 15);
        assert_relative_eq!(exact20, 21700.0 / 1048576.0, epsilon = 1e-12);

        let cs = cs_lower_bound(&[(1.0, m.clone())], 0.75, 0.25, 20).unwrap();
        assert!(!cs.valid_n);
        assert_relative_eq!(cs.t_star, 3.0f64.ln(), epsilon = 1e-9);
        assert_relative_eq!(cs.m2, 3.0 / 16.0, epsilon = 1e-9);
        assert!(cs.bound <= exact20);
        assert!(cs.bound >= 0.3 * exact20, "ratio {}", cs.bound / exact20);

        for n in [50u64, 100, 200] {
            let k_min = (0.75 * n as f64).ceil() as u64;
            let exact = binomial_upper_tail(n, k_min);
            let cs = cs_lower_bound(&[(1.0, m.clone())], 0.75, 0.25, n).unwrap();
            assert!(
                cs.bound <= exact,
                "n={n}: bound {} exceeds exact {exact}",
                cs.bound
            );
        }
    }

    #[test]
    fn cs_bound_degenerate_threshold() {
        let m = DiscreteMeasure {
            atoms: vec![(0.0, 0.5), (1.0, 0.5)],
        };
        assert!(matches!(
            cs_lower_bound(&[(1.0, m)], 0.5, 0.25, 10),
            Err(Error::TiltNotInUnitInterval { .. })
        ));
    }

    #[test]
    fn sharp_converse_window_and_monotonicity() {
        let single = CqChannel::new(vec!["a".into()], vec![rho0()]).unwrap();
        let p = InputDistribution::uniform(1);
        let cfg = BoundConfig::default();
        let d = d_pair();

        assert!(matches!(
            sharp_converse_bound(&single, &sigma0(), &p, 100, d + 0.01, &cfg),
            Err(Error::RateOutOfWindow { .. })
        ));

        // The bound's exponent grows as the rate sinks deeper below D.
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let r = d * k as f64 / 9.0;
            let rep = sharp_converse_bound(&single, &sigma0(), &p, 4000, r, &cfg).unwrap();
            assert!(rep.exponent <= prev + 1e-12);
            prev = rep.exponent;
        }
    }

    #[test]
    fn weak_converse_values() {
        let single = CqChannel::new(vec!["a".into()], vec![rho0()]).unwrap();
        let p = InputDistribution::uniform(1);
        let cfg = BoundConfig::default();
        let f_eta_oracle = (-binary_entropy(0.75) / 0.75).exp();
        assert_relative_eq!(
            binary_entropy(0.75),
            -(0.75f64.ln() * 0.75 + 0.25f64.ln() * 0.25),
            epsilon = 1e-12
        );

        let wb = weak_converse_bound(&single, &sigma0(), &p, 100_000, 0.05, &cfg).unwrap();
        assert_relative_eq!(wb.f_eta, f_eta_oracle, epsilon = 1e-12);
        assert!((wb.f_eta - 0.4724).abs() < 1e-3);

        // Rates past D give a zero exponent and the bare prefactor.
        let wb = weak_converse_bound(&single, &sigma0(), &p, 100_000, d_pair() + 0.05, &cfg)
            .unwrap();
        assert!(wb.report.exponent.abs() < 1e-12);
        assert_relative_eq!(wb.report.value, f_eta_oracle, epsilon = 1e-10);

        // Below the admissible blocklength the bound refuses to evaluate.
        assert!(matches!(
            weak_converse_bound(&single, &sigma0(), &p, 1, 0.05, &cfg),
            Err(Error::BelowN0 { .. })
        ));
    }

    #[test]
    fn wolfowitz_values() {
        let v = wolfowitz_alpha_lower(0.3, 100, 0.3);
        assert_relative_eq!(v, 1.0 - 0.3 / 9.0 - (-30.0f64).exp(), epsilon = 1e-12);
        assert!((v - 0.9666667).abs() < 1e-6);
        assert_eq!(wolfowitz_alpha_lower(1e9, 100, 0.3), 0.0);
        let mut prev = 0.0;
        for kappa in [0.5, 1.0, 2.0, 4.0] {
            let v = wolfowitz_alpha_lower(0.3, 50, kappa);
            assert!(v >= prev);
            assert!(v < 1.0);
            prev = v;
        }
    }

    #[test]
    fn chebyshev_tail_cases() {
        let d = d_pair();
        let v = 0.5 * 2.0f64.ln().powi(2) + 0.5 * (2.0f64 / 3.0).ln().powi(2) - d * d;
        let t = chebyshev_tail(&rho0(), &sigma0(), (d + 1.0).exp()).unwrap();
        assert_relative_eq!(t.bound, v, epsilon = 1e-9);
        assert!(t.exact <= t.bound + 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let rho = sample::random_density(2, &mut rng);
        let t = chebyshev_tail(&rho, &rho, 2.0f64.exp()).unwrap();
        assert!(t.exact.abs() < 1e-10 && t.bound.abs() < 1e-12);

        for _ in 0..100 {
            let rho = sample::random_density(2, &mut rng);
            let sigma = sample::random_density(2, &mut rng);
            let d = crate::divergence::rel_entropy(&rho, &sigma, SupportPolicy::Strict).unwrap();
            let t = chebyshev_tail(&rho, &sigma, (d + 0.5).exp()).unwrap();
            assert!(t.exact <= t.bound + 1e-10);
        }

        assert!(matches!(
            chebyshev_tail(&rho0(), &sigma0(), 1.0),
            Err(Error::GammaBelowThreshold { .. })
        ));
    }
}
