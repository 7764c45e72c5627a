//! Two-state information quantities.
//!
//! Relative entropy, the Petz and log-Euclidean Rényi families, both
//! relative-entropy variances, the hockey-stick divergence, and the binary
//! entropy utilities. All values are in nats.
//!
//! Support handling is selectable per call: under [`SupportPolicy::Strict`] a
//! support violation is an error; under [`SupportPolicy::Extended`] the value
//! is `+inf`, which is what exponent code wants to propagate.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::operator::{
    spectral_decompose, support_contained, CMatrix, DensityOperator, HermitianOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportPolicy {
    #[default]
    Strict,
    Extended,
}

fn support_failure(policy: SupportPolicy, context: &str) -> Result<f64> {
    match policy {
        SupportPolicy::Strict => Err(Error::SupportViolation {
            context: context.to_string(),
        }),
        SupportPolicy::Extended => Ok(f64::INFINITY),
    }
}

/// Quantum relative entropy `D(rho||sigma) = Tr[rho (log rho - log sigma)]`.
pub fn rel_entropy(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    policy: SupportPolicy,
) -> Result<f64> {
    if !support_contained(rho.op(), sigma.op())? {
        return support_failure(policy, "rel_entropy requires supp(rho) within supp(sigma)");
    }
    let l = log_diff(rho, sigma)?;
    Ok((rho.matrix() * &l).trace().re)
}

/// Petz Rényi divergence `(alpha-1)^-1 log Tr[rho^alpha sigma^(1-alpha)]`.
pub fn renyi_petz(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
    policy: SupportPolicy,
) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    if alpha > 1.0 && !support_contained(rho.op(), sigma.op())? {
        return support_failure(policy, "renyi_petz with alpha > 1 requires rho << sigma");
    }
    let ra = rho.op().power(alpha)?;
    let sb = sigma.op().power(1.0 - alpha)?;
    let tr = (ra.matrix() * sb.matrix()).trace().re;
    if tr <= 0.0 {
        // Orthogonal supports: the trace vanishes and the divergence blows up.
        return support_failure(policy, "renyi_petz trace vanished (orthogonal supports)");
    }
    Ok(tr.ln() / (alpha - 1.0))
}

/// Log-Euclidean Rényi divergence
/// `(alpha-1)^-1 log Tr[exp(alpha log rho + (1-alpha) log sigma)]`.
///
/// Intended for states with full support on a common space; rank-deficient
/// inputs are handled by compressing onto the intersection of supports.
pub fn renyi_log_euclidean(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
    policy: SupportPolicy,
) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    let tr = log_euclidean_trace(rho, sigma, alpha, policy)?;
    if !tr.is_finite() || tr <= 0.0 {
        return support_failure(policy, "log-Euclidean trace vanished");
    }
    Ok(tr.ln() / (alpha - 1.0))
}

/// `Tr[exp(alpha log rho + (1-alpha) log sigma)]`, compressed onto the
/// intersection of the supports.
pub fn log_euclidean_trace(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
    policy: SupportPolicy,
) -> Result<f64> {
    let (a_rho, a_sigma) = compressed_logs(rho, sigma, policy)?;
    if a_rho.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let m = &a_rho * Complex::new(alpha, 0.0) + &a_sigma * Complex::new(1.0 - alpha, 0.0);
    let h = HermitianOperator::new(m)?;
    Ok(h.exp().trace())
}

/// Support-restricted `log rho - log sigma` compressed onto the intersection
/// of the two supports (identity compression for full-rank pairs).
pub(crate) fn compressed_logs(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    policy: SupportPolicy,
) -> Result<(CMatrix, CMatrix)> {
    let d = rho.dim();
    let cutoff_r = rho.spectral().support_cutoff();
    let cutoff_s = sigma.spectral().support_cutoff();
    let full_r = rho.spectral().eigenvalues.iter().all(|&v| v > cutoff_r);
    let full_s = sigma.spectral().eigenvalues.iter().all(|&v| v > cutoff_s);
    if policy == SupportPolicy::Strict && !full_s {
        return Err(Error::SupportViolation {
            context: "log-Euclidean family requires full-support sigma under the strict policy"
                .into(),
        });
    }
    let log_r = rho.op().log()?;
    let log_s = sigma.op().log()?;
    if full_r && full_s {
        return Ok((log_r.matrix().clone(), log_s.matrix().clone()));
    }
    // Intersection of ranges: eigenvectors of P_rho + P_sigma at eigenvalue 2.
    let joint = rho.op().support_projector()? + sigma.op().support_projector()?;
    let s = spectral_decompose(&joint);
    let cols: Vec<usize> = (0..d).filter(|&i| s.eigenvalues[i] > 2.0 - 1e-8).collect();
    let k = cols.len();
    let mut basis = CMatrix::zeros(d, k);
    for (j, &i) in cols.iter().enumerate() {
        basis.set_column(j, &s.basis.column(i));
    }
    let a_r = basis.adjoint() * log_r.matrix() * &basis;
    let a_s = basis.adjoint() * log_s.matrix() * &basis;
    Ok((a_r, a_s))
}

fn log_diff(rho: &DensityOperator, sigma: &DensityOperator) -> Result<CMatrix> {
    Ok(rho.op().log()?.matrix() - sigma.op().log()?.matrix())
}

/// Relative entropy variance `Tr[rho (log rho - log sigma)^2] - D^2`.
pub fn rel_var(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    policy: SupportPolicy,
) -> Result<f64> {
    if !support_contained(rho.op(), sigma.op())? {
        return support_failure(policy, "rel_var requires supp(rho) within supp(sigma)");
    }
    let l = log_diff(rho, sigma)?;
    let d = (rho.matrix() * &l).trace().re;
    let second = (rho.matrix() * &l * &l).trace().re;
    Ok((second - d * d).max(0.0))
}

/// Logarithmic mean `(a-b)/(log a - log b)`, continuous at `a = b`.
fn log_mean(a: f64, b: f64) -> f64 {
    let r = (a - b) / b;
    if r.abs() < 1e-14 {
        0.5 * (a + b)
    } else {
        (a - b) / r.ln_1p()
    }
}

/// Kubo-Mori-style variance
/// `int_0^1 Tr[rho^(1-t) L rho^t L] dt - D^2` with `L = log rho - log sigma`,
/// evaluated with the analytic kernel `(l_i - l_j)/(log l_i - log l_j)` in
/// the eigenbasis of `rho` instead of quadrature.
pub fn rel_var_tilde(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    policy: SupportPolicy,
) -> Result<f64> {
    if !support_contained(rho.op(), sigma.op())? {
        return support_failure(policy, "rel_var_tilde requires supp(rho) within supp(sigma)");
    }
    let l = log_diff(rho, sigma)?;
    let s = rho.spectral();
    let cutoff = s.support_cutoff();
    let l_eig = s.basis.adjoint() * &l * &s.basis;
    let d = rho.dim();
    let mut second = 0.0;
    for i in 0..d {
        let li = s.eigenvalues[i];
        if li <= cutoff {
            continue;
        }
        for j in 0..d {
            let lj = s.eigenvalues[j];
            if lj <= cutoff {
                continue;
            }
            second += l_eig[(i, j)].norm_sqr() * log_mean(li, lj);
        }
    }
    let dval = (rho.matrix() * &l).trace().re;
    Ok((second - dval * dval).max(0.0))
}

/// Hockey-stick divergence `Tr[(rho - gamma sigma)_+]`.
pub fn hockey_stick(rho: &DensityOperator, sigma: &DensityOperator, gamma: f64) -> f64 {
    let diff = rho.matrix() - sigma.matrix() * Complex::new(gamma, 0.0);
    HermitianOperator::new(diff)
        .expect("difference of Hermitian matrices is Hermitian")
        .positive_part_trace()
}

/// Binary hockey-stick divergence `(p - gamma q)_+ + ((1-p) - gamma (1-q))_+`.
pub fn binary_hockey_stick(p: f64, q: f64, gamma: f64) -> Result<f64> {
    for v in [p, q] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ProbabilityOutOfRange { value: v });
        }
    }
    Ok((p - gamma * q).max(0.0) + ((1.0 - p) - gamma * (1.0 - q)).max(0.0))
}

fn xlnx(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

/// Binary entropy `h(p)` in nats.
pub fn binary_entropy(p: f64) -> f64 {
    -xlnx(p) - xlnx(1.0 - p)
}

/// Binary KL divergence `h(p||q) = p log(p/q) + (1-p) log((1-p)/(1-q))`,
/// with the `0 log 0 = 0` convention; infinite when `q` has a zero where `p`
/// does not.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| {
        if a <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Min-relative entropy `D_0(rho||sigma) = -log Tr[P_rho sigma]`, the exact
/// `alpha -> 0` limit of the Petz family.
pub fn d0(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let proj = rho.op().support_projector()?;
    let overlap = (proj * sigma.matrix()).trace().re;
    if overlap <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-overlap.ln())
}

/// Trace distance `0.5 ||rho - sigma||_1`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> f64 {
    let diff = rho.matrix() - sigma.matrix();
    let h = HermitianOperator::new(diff).expect("Hermitian difference");
    0.5 * h.eigenvalues().iter().map(|v| v.abs()).sum::<f64>()
}
