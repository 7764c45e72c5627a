//! Auxiliary exponent functions and sphere-packing exponents.
//!
//! Three concave-in-`s` families drive every bound in this crate. With
//! `u = 1/(1+s)` and per-state data `G(a) = Tr[rho^a sigma^(1-a)]`:
//!
//! - `E0t(s,P,sigma) = -log sum_x P(x) G_x(1-s)`, the modified random-coding
//!   auxiliary function;
//! - `Eh(s,P,sigma) = sum_x P(x) (-(1+s) log G_x(u))`, the Hoeffding-side
//!   auxiliary function built on the Petz Rényi divergence;
//! - `Eht(s,P,sigma)`, the same construction on the log-Euclidean Rényi
//!   divergence, with `G` replaced by `Tr[exp(a log rho + (1-a) log sigma)]`.
//!
//! All three expose analytic first, second, and third `s`-derivatives.
//! For the Petz families the derivatives reduce to weighted moments of
//! `log lambda_i - log mu_j` over the eigen-overlap of the pair; for the
//! log-Euclidean family they come from Fréchet derivatives of the matrix
//! exponential evaluated with divided differences.
//!
//! On top of these sit the sphere-packing exponents `sup_s {E(s) - sR}`, the
//! critical rate, the third-derivative bound used by Taylor expansions, the
//! random-coding (Hayashi) upper bound, and the quadratic behaviour of the
//! exponent just below capacity.

use nalgebra::Complex;

use crate::channel::{ChannelAnalysis, CqChannel, InputDistribution};
use crate::divergence::{self, SupportPolicy};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::hypothesis::BoundReport;
use crate::operator::{spectral_decompose, CMatrix, DensityOperator};
use crate::solve;

/// Function value and first three `s`-derivatives at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct AuxEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl std::ops::AddAssign for AuxEval {
    fn add_assign(&mut self, rhs: AuxEval) {
        self.value += rhs.value;
        self.d1 += rhs.d1;
        self.d2 += rhs.d2;
        self.d3 += rhs.d3;
    }
}

impl AuxEval {
    fn scaled(self, w: f64) -> AuxEval {
        AuxEval {
            value: w * self.value,
            d1: w * self.d1,
            d2: w * self.d2,
            d3: w * self.d3,
        }
    }
}

/// Eigen-overlap of a state pair, restricted to the joint support:
/// weights `|<g_j|f_i>|^2` with the log-eigenvalues on both sides.
#[derive(Debug, Clone)]
pub(crate) struct PetzKernel {
    terms: Vec<(f64, f64, f64)>, // (weight, ln lambda_i, ln mu_j)
    /// rho-mass outside supp(sigma); nonzero means rho is not << sigma.
    missing: f64,
    /// Tr[P_rho sigma], the D_0 overlap.
    d0_overlap: f64,
}

impl PetzKernel {
    pub(crate) fn new(rho: &DensityOperator, sigma: &DensityOperator) -> Self {
        let sr = rho.spectral();
        let ss = sigma.spectral();
        let d = rho.dim();
        let cut_r = sr.support_cutoff();
        let cut_s = ss.support_cutoff();
        let overlap = ss.basis.adjoint() * &sr.basis;
        let mut terms = Vec::new();
        let mut missing = 0.0;
        let mut d0_overlap = 0.0;
        for i in 0..d {
            let lam = sr.eigenvalues[i];
            if lam <= cut_r {
                continue;
            }
            for j in 0..d {
                let w = overlap[(j, i)].norm_sqr();
                if w == 0.0 {
                    continue;
                }
                let mu = ss.eigenvalues[j];
                if mu <= cut_s {
                    missing += lam * w;
                } else {
                    terms.push((w, lam.ln(), mu.ln()));
                    d0_overlap += mu * w;
                }
            }
        }
        PetzKernel {
            terms,
            missing,
            d0_overlap,
        }
    }

    fn require_support(&self, context: &str) -> Result<()> {
        if self.missing > 1e-9 {
            return Err(Error::SupportViolation {
                context: format!("{context}: rho-mass {:.3e} outside supp(sigma)", self.missing),
            });
        }
        Ok(())
    }

    /// `[G, G', G'', G''']` at Rényi weight `a`, where
    /// `G(a) = sum w exp(a ln l + (1-a) ln m)` and each derivative inserts a
    /// factor `(ln l - ln m)`.
    fn g(&self, a: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for &(w, ll, lm) in &self.terms {
            let base = w * (a * ll + (1.0 - a) * lm).exp();
            let x = ll - lm;
            out[0] += base;
            out[1] += base * x;
            out[2] += base * x * x;
            out[3] += base * x * x * x;
        }
        out
    }

    fn d0(&self) -> f64 {
        if self.d0_overlap <= 0.0 {
            f64::INFINITY
        } else {
            -self.d0_overlap.ln()
        }
    }
}

/// `(psi, psi', psi'', psi''')` from `(f, f', f'', f''')` for `psi = log f`.
fn log_derivs(f: [f64; 4]) -> [f64; 4] {
    let a = f[1] / f[0];
    let b = f[2] / f[0];
    let c = f[3] / f[0];
    [f[0].ln(), a, b - a * a, c - 3.0 * a * b + 2.0 * a * a * a]
}

/// Value and `s`-derivatives of `E(s) = -(1+s) psi(1/(1+s))` from the
/// `a`-derivatives of `psi`.
fn perspective_eval(psi: [f64; 4], s: f64) -> AuxEval {
    let u = 1.0 / (1.0 + s);
    AuxEval {
        value: -(1.0 + s) * psi[0],
        d1: -psi[0] + u * psi[1],
        d2: -u.powi(3) * psi[2],
        d3: 3.0 * u.powi(4) * psi[2] + u.powi(5) * psi[3],
    }
}

/// `E_h(s,P,sigma) = s D_{1/(1+s)}(W||sigma|P)` with analytic derivatives.
#[derive(Debug, Clone)]
pub struct EhFamily {
    components: Vec<(f64, PetzKernel)>,
}

impl EhFamily {
    pub fn new(w: &CqChannel, sigma: &DensityOperator, p: &InputDistribution) -> Result<Self> {
        let mut components = Vec::new();
        for x in p.support() {
            let kernel = PetzKernel::new(w.output(x), sigma);
            kernel.require_support(&format!("E_h at symbol {:?}", w.symbols()[x]))?;
            components.push((p.weight(x), kernel));
        }
        Ok(EhFamily { components })
    }

    /// Point-mass instance for a single state pair.
    pub fn from_state(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Self> {
        let kernel = PetzKernel::new(rho, sigma);
        kernel.require_support("E_h")?;
        Ok(EhFamily {
            components: vec![(1.0, kernel)],
        })
    }

    pub fn eval(&self, s: f64) -> AuxEval {
        let u = 1.0 / (1.0 + s);
        let mut acc = AuxEval::default();
        for (w, kernel) in &self.components {
            acc += perspective_eval(log_derivs(kernel.g(u)), s).scaled(*w);
        }
        acc
    }

    /// `D(W||sigma|P)`, the slope at `s = 0`.
    pub fn d_at_origin(&self) -> f64 {
        self.eval(0.0).d1
    }

    /// `D_0(W||sigma|P)`, the conditional support-overlap exponent.
    pub fn d0(&self) -> f64 {
        self.components.iter().map(|(w, k)| w * k.d0()).sum()
    }
}

/// `E0t(s,P,sigma) = s D_{1-s}(P o W || P (x) sigma)` with analytic
/// derivatives; the trace collapses to `-log sum_x P(x) Tr[W_x^{1-s} sigma^s]`.
#[derive(Debug, Clone)]
pub struct E0TildeFamily {
    components: Vec<(f64, PetzKernel)>,
}

impl E0TildeFamily {
    pub fn new(w: &CqChannel, sigma: &DensityOperator, p: &InputDistribution) -> Result<Self> {
        let mut components = Vec::new();
        for x in p.support() {
            let kernel = PetzKernel::new(w.output(x), sigma);
            kernel.require_support(&format!("E0t at symbol {:?}", w.symbols()[x]))?;
            components.push((p.weight(x), kernel));
        }
        Ok(E0TildeFamily { components })
    }

    pub fn eval(&self, s: f64) -> AuxEval {
        // F(s) = sum_x P(x) G_x(1-s); derivatives alternate sign under the
        // substitution a = 1-s.
        let mut f = [0.0; 4];
        for (w, kernel) in &self.components {
            let g = kernel.g(1.0 - s);
            f[0] += w * g[0];
            f[1] -= w * g[1];
            f[2] += w * g[2];
            f[3] -= w * g[3];
        }
        let a = f[1] / f[0];
        let b = f[2] / f[0];
        let c = f[3] / f[0];
        AuxEval {
            value: -f[0].ln(),
            d1: -a,
            d2: -b + a * a,
            d3: -c + 3.0 * a * b - 2.0 * a * a * a,
        }
    }

    /// `D(P o W || P (x) sigma)`, the slope at `s = 0`.
    pub fn d_at_origin(&self) -> f64 {
        self.eval(0.0).d1
    }
}

/// First divided difference of `exp`.
fn dd_exp1(a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let h = 0.5 * (a - b);
    if h.abs() < 1e-6 {
        let h2 = h * h;
        mid.exp() * (1.0 + h2 / 6.0 + h2 * h2 / 120.0)
    } else {
        mid.exp() * h.sinh() / h
    }
}

/// Second divided difference of `exp`, stable under coalescing arguments.
fn dd_exp2(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let spread = v[0] - v[2];
    if spread < 1e-3 {
        let mean = (v[0] + v[1] + v[2]) / 3.0;
        let d: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let sum2: f64 = d.iter().map(|x| x * x).sum();
        let prod = d[0] * d[1] * d[2];
        mean.exp() * (0.5 + sum2 / 48.0 + prod / 120.0)
    } else {
        (dd_exp1(v[0], v[1]) - dd_exp1(v[1], v[2])) / (v[0] - v[2])
    }
}

/// Log-Euclidean pair data: compressed support-restricted logarithms.
#[derive(Debug, Clone)]
pub(crate) struct FlatKernel {
    a_rho: CMatrix,
    a_sigma: CMatrix,
}

impl FlatKernel {
    fn new(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Self> {
        let (a_rho, a_sigma) = divergence::compressed_logs(rho, sigma, SupportPolicy::Extended)?;
        if a_rho.nrows() == 0 {
            return Err(Error::SupportViolation {
                context: "log-Euclidean family needs intersecting supports".into(),
            });
        }
        Ok(FlatKernel { a_rho, a_sigma })
    }

    /// `[f, f', f'', f''']` for `f(a) = Tr[exp(a A_rho + (1-a) A_sigma)]`,
    /// via Fréchet derivatives of `exp` in the eigenbasis of the exponent.
    fn f(&self, a: f64) -> [f64; 4] {
        let m = &self.a_rho * Complex::new(a, 0.0) + &self.a_sigma * Complex::new(1.0 - a, 0.0);
        let sym = (&m + m.adjoint()) * Complex::new(0.5, 0.0);
        let s = spectral_decompose(&sym);
        let l = s.basis.adjoint() * (&self.a_rho - &self.a_sigma) * &s.basis;
        let k = s.eigenvalues.len();
        let ev = &s.eigenvalues;

        let f0: f64 = ev.iter().map(|m| m.exp()).sum();
        let f1: f64 = (0..k).map(|i| ev[i].exp() * l[(i, i)].re).sum();
        let mut f2 = 0.0;
        for i in 0..k {
            for j in 0..k {
                f2 += l[(i, j)].norm_sqr() * dd_exp1(ev[i], ev[j]);
            }
        }
        let mut f3 = 0.0;
        for i in 0..k {
            for j in 0..k {
                for r in 0..k {
                    let prod = l[(i, j)] * l[(j, r)] * l[(r, i)];
                    f3 += prod.re * dd_exp2(ev[i], ev[j], ev[r]);
                }
            }
        }
        [f0, f1, f2, 2.0 * f3]
    }
}

/// `Eht(s,P,sigma) = s D^b_{1/(1+s)}(W||sigma|P)` with analytic derivatives.
#[derive(Debug, Clone)]
pub struct EhTildeFamily {
    components: Vec<(f64, FlatKernel)>,
}

impl EhTildeFamily {
    pub fn new(w: &CqChannel, sigma: &DensityOperator, p: &InputDistribution) -> Result<Self> {
        let mut components = Vec::new();
        for x in p.support() {
            let petz = PetzKernel::new(w.output(x), sigma);
            petz.require_support(&format!("Eht at symbol {:?}", w.symbols()[x]))?;
            components.push((p.weight(x), FlatKernel::new(w.output(x), sigma)?));
        }
        Ok(EhTildeFamily { components })
    }

    pub fn from_state(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Self> {
        let petz = PetzKernel::new(rho, sigma);
        petz.require_support("Eht")?;
        Ok(EhTildeFamily {
            components: vec![(1.0, FlatKernel::new(rho, sigma)?)],
        })
    }

    pub fn eval(&self, s: f64) -> AuxEval {
        let u = 1.0 / (1.0 + s);
        let mut acc = AuxEval::default();
        for (w, kernel) in &self.components {
            acc += perspective_eval(log_derivs(kernel.f(u)), s).scaled(*w);
        }
        acc
    }

    pub fn d_at_origin(&self) -> f64 {
        self.eval(0.0).d1
    }
}

/// One-shot evaluation of `E0t` and its derivatives.
pub fn aux_e0_tilde_eval(
    s: f64,
    p: &InputDistribution,
    w: &CqChannel,
    sigma: &DensityOperator,
) -> Result<AuxEval> {
    Ok(E0TildeFamily::new(w, sigma, p)?.eval(s))
}

/// One-shot evaluation of `E_h` and its derivatives.
pub fn aux_eh_eval(
    s: f64,
    p: &InputDistribution,
    w: &CqChannel,
    sigma: &DensityOperator,
) -> Result<AuxEval> {
    Ok(EhFamily::new(w, sigma, p)?.eval(s))
}

/// One-shot evaluation of `Eht` and its derivatives.
pub fn aux_eh_tilde_eval(
    s: f64,
    p: &InputDistribution,
    w: &CqChannel,
    sigma: &DensityOperator,
) -> Result<AuxEval> {
    Ok(EhTildeFamily::new(w, sigma, p)?.eval(s))
}

/// Classic random-coding auxiliary function
/// `-log Tr[(sum_x P(x) W_x^(1/(1+s)))^(1+s)]`, by direct matrix calculus.
pub fn aux_e0(s: f64, p: &InputDistribution, w: &CqChannel) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter("aux_e0 needs s >= 0".into()));
    }
    let d = w.dim();
    let mut acc = CMatrix::zeros(d, d);
    for x in p.support() {
        let pow = w.output(x).op().power(1.0 / (1.0 + s))?;
        acc += pow.matrix() * Complex::new(p.weight(x), 0.0);
    }
    let inner = crate::operator::HermitianOperator::new(acc)?;
    let total = inner.power(1.0 + s)?.trace();
    Ok(-total.ln())
}

/// Result of a sphere-packing maximization `sup_(s>=0) {E(s) - sR}`.
#[derive(Debug, Clone, Copy)]
pub struct SpExponentResult {
    /// The exponent; `+inf` below the conditional `D_0`.
    pub value: f64,
    /// Maximizing `s` (0 on the flat region, `+inf` on the divergent one).
    pub s_star: f64,
    /// True when the maximizer was not interior (rate at or past a boundary).
    pub at_boundary: bool,
    /// The `s`-interval actually searched.
    pub window: (f64, f64),
}

/// Shared solver: assumes `eval` is concave in `s` with nonincreasing `d1`.
///
/// The bracket starts at `[0,1]` and doubles while the slope at the right
/// edge still exceeds `R` (the supremum is attained in `[0,1]` only above the
/// critical rate), capped at `s = 1e3`.
fn sp_maximize(
    eval: &dyn Fn(f64) -> AuxEval,
    r: f64,
    d0: f64,
    d_origin: f64,
) -> SpExponentResult {
    if r < d0 {
        return SpExponentResult {
            value: f64::INFINITY,
            s_star: f64::INFINITY,
            at_boundary: true,
            window: (0.0, f64::INFINITY),
        };
    }
    if r >= d_origin {
        return SpExponentResult {
            value: 0.0,
            s_star: 0.0,
            at_boundary: false,
            window: (0.0, 0.0),
        };
    }
    let mut hi = 1.0f64;
    while eval(hi).d1 > r && hi < 1e3 {
        hi = (hi * 2.0).min(1e3);
    }
    if eval(hi).d1 > r {
        let e = eval(hi);
        return SpExponentResult {
            value: e.value - hi * r,
            s_star: hi,
            at_boundary: true,
            window: (0.0, hi),
        };
    }
    let g = |s: f64| eval(s).value - s * r;
    let best = solve::golden_max(0.0, hi, 1e-10, g);
    // The slope is analytic and strictly decreasing through r here, so the
    // stationary point can be pinned far more precisely than a value-based
    // search allows.
    let s_star = solve::solve_increasing(0.0, hi, -r, 1e-15, |s| -eval(s).d1, |s| -eval(s).d2);
    let polished = g(s_star);
    let (value, s_star) = if polished >= best.value {
        (polished, s_star)
    } else {
        (best.value, best.x)
    };
    if value <= 0.0 {
        return SpExponentResult {
            value: 0.0,
            s_star: 0.0,
            at_boundary: false,
            window: (0.0, hi),
        };
    }
    SpExponentResult {
        value,
        s_star,
        at_boundary: false,
        window: (0.0, hi),
    }
}

/// Sphere-packing exponent `sup_(s>=0) {E_h(s,P,sigma) - sR}`; `+inf` below
/// the conditional `D_0`, zero at and above the conditional `D`.
pub fn sp_exponent_2(
    r: f64,
    p: &InputDistribution,
    w: &CqChannel,
    sigma: &DensityOperator,
) -> Result<SpExponentResult> {
    let fam = EhFamily::new(w, sigma, p)?;
    let d0 = fam.d0();
    let d = fam.d_at_origin();
    Ok(sp_maximize(&|s| fam.eval(s), r, d0, d))
}

/// Point-mass version of [`sp_exponent_2`] for a single state pair.
pub fn sp_exponent_state(
    r: f64,
    rho: &DensityOperator,
    sigma: &DensityOperator,
) -> Result<SpExponentResult> {
    let fam = EhFamily::from_state(rho, sigma)?;
    let d0 = fam.d0();
    let d = fam.d_at_origin();
    Ok(sp_maximize(&|s| fam.eval(s), r, d0, d))
}

/// Dual-form weak sphere-packing exponent `sup_(s>=0) {Eht(s,P,sigma) - sR}`.
pub fn sp_exponent_tilde(
    r: f64,
    p: &InputDistribution,
    w: &CqChannel,
    sigma: &DensityOperator,
) -> Result<SpExponentResult> {
    let fam = EhTildeFamily::new(w, sigma, p)?;
    let petz = EhFamily::new(w, sigma, p)?;
    // The divergent threshold of the tilde family is not needed for rates in
    // (0, D]; below the Petz D_0 the bracket cap flags the boundary instead.
    let d = fam.d_at_origin();
    Ok(sp_maximize(&|s| fam.eval(s), r, petz.d0().min(r), d))
}

/// All distributions on `k` symbols with weights on a grid of the given step.
pub fn simplex_grid(k: usize, step: f64) -> Vec<InputDistribution> {
    let m = (1.0 / step).round() as u32;
    let mut out = Vec::new();
    let mut counts = vec![0u32; k];
    fn rec(m: u32, i: usize, counts: &mut Vec<u32>, out: &mut Vec<InputDistribution>) {
        if i == counts.len() - 1 {
            counts[i] = m;
            let total: u32 = counts.iter().sum();
            let w: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
            out.push(InputDistribution::new(w).unwrap());
            return;
        }
        for c in 0..=m {
            counts[i] = c;
            rec(m - c, i + 1, counts, out);
        }
        counts[i] = 0;
    }
    rec(m, 0, &mut counts, &mut out);
    out
}

/// Critical rate: largest slope of `E_h` at `s = 1` over the supplied
/// distributions.
pub fn critical_rate(
    w: &CqChannel,
    sigma: &DensityOperator,
    points: &[InputDistribution],
) -> Result<f64> {
    // d1 is linear in P, so per-symbol slopes are evaluated once.
    let mut per_symbol = Vec::with_capacity(w.len());
    for x in 0..w.len() {
        let kernel = PetzKernel::new(w.output(x), sigma);
        kernel.require_support(&format!("critical rate at symbol {:?}", w.symbols()[x]))?;
        per_symbol.push(perspective_eval(log_derivs(kernel.g(0.5)), 1.0).d1);
    }
    let mut best = f64::NEG_INFINITY;
    for p in points {
        let d1: f64 = (0..w.len()).map(|x| p.weight(x) * per_symbol[x]).sum();
        best = best.max(d1);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxFamily {
    E0Tilde,
    Eh,
}

#[derive(Debug, Clone)]
pub struct UpsilonOptions {
    pub s_step: f64,
    pub p_step: f64,
    pub refine: bool,
    pub parallelism: Parallelism,
}

impl Default for UpsilonOptions {
    fn default() -> Self {
        UpsilonOptions {
            s_step: 1e-2,
            p_step: 1e-2,
            refine: true,
            parallelism: Parallelism::default(),
        }
    }
}

/// Third-derivative bound together with the grid that produced it.
#[derive(Debug, Clone)]
pub struct UpsilonReport {
    pub value: f64,
    pub s_at: f64,
    pub p_at: Vec<f64>,
    pub s_step: f64,
    pub p_step: f64,
}

/// `max |d^3 E / d s^3|` over `s in [0,1]` and a simplex grid of input
/// distributions, with local refinement around the best grid point.
pub fn third_derivative_bound(
    w: &CqChannel,
    sigma: &DensityOperator,
    family: AuxFamily,
    opts: &UpsilonOptions,
) -> Result<UpsilonReport> {
    let k = w.len();
    let kernels: Vec<PetzKernel> = (0..k)
        .map(|x| {
            let kern = PetzKernel::new(w.output(x), sigma);
            kern.require_support("third derivative bound").map(|_| kern)
        })
        .collect::<Result<_>>()?;
    let grid = simplex_grid(k, opts.p_step);
    let s_count = (1.0 / opts.s_step).round() as usize + 1;

    let d3_at = |s: f64, p: &InputDistribution| -> f64 {
        match family {
            AuxFamily::Eh => {
                let u = 1.0 / (1.0 + s);
                let mut acc = 0.0;
                for x in 0..k {
                    if p.weight(x) > 0.0 {
                        acc += p.weight(x) * perspective_eval(log_derivs(kernels[x].g(u)), s).d3;
                    }
                }
                acc
            }
            AuxFamily::E0Tilde => {
                let mut f = [0.0; 4];
                for x in 0..k {
                    let wx = p.weight(x);
                    if wx > 0.0 {
                        let g = kernels[x].g(1.0 - s);
                        f[0] += wx * g[0];
                        f[1] -= wx * g[1];
                        f[2] += wx * g[2];
                        f[3] -= wx * g[3];
                    }
                }
                let a = f[1] / f[0];
                let b = f[2] / f[0];
                let c = f[3] / f[0];
                -c + 3.0 * a * b - 2.0 * a * a * a
            }
        }
    };

    // Coarse scan, parallel over the s-grid; ties resolve to the lowest
    // (s index, P index) pair.
    let rows = exec::map_range(opts.parallelism, s_count, |si| {
        let s = (si as f64 * opts.s_step).min(1.0);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (pi, p) in grid.iter().enumerate() {
            let v = d3_at(s, p).abs();
            if v > best.1 {
                best = (pi, v);
            }
        }
        (best.1, si, best.0)
    });
    let (mut value, si, pi) = rows
        .into_iter()
        .enumerate()
        .map(|(i, (v, si, pi))| {
            debug_assert_eq!(i, si);
            (v, si, pi)
        })
        .fold((f64::NEG_INFINITY, 0, 0), |acc, cur| {
            if cur.0 > acc.0 {
                cur
            } else {
                acc
            }
        });
    let mut s_at = (si as f64 * opts.s_step).min(1.0);
    let mut p_at = grid[pi].clone();

    if opts.refine {
        // Fine re-scan of s in the neighbouring cells, then a local simplex
        // polish of P with shrinking steps.
        let lo = (s_at - opts.s_step).max(0.0);
        let hi = (s_at + opts.s_step).min(1.0);
        for i in 0..=200 {
            let s = lo + (hi - lo) * i as f64 / 200.0;
            let v = d3_at(s, &p_at).abs();
            if v > value {
                value = v;
                s_at = s;
            }
        }
        let mut step = opts.p_step;
        for _ in 0..8 {
            let mut improved = false;
            for a in 0..k {
                for b in 0..k {
                    if a == b {
                        continue;
                    }
                    let mut wts = p_at.weights().to_vec();
                    if wts[b] < step {
                        continue;
                    }
                    wts[a] += step;
                    wts[b] -= step;
                    let cand = InputDistribution::new(wts).unwrap();
                    let v = d3_at(s_at, &cand).abs();
                    if v > value {
                        value = v;
                        p_at = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }

    Ok(UpsilonReport {
        value,
        s_at,
        p_at: p_at.weights().to_vec(),
        s_step: opts.s_step,
        p_step: opts.p_step,
    })
}

/// Random-coding upper bound on the average error:
/// `4 exp(-n max_(0<=s<=1) {E0t(s,P,PW) - sR})`. The raw bound is returned
/// and may exceed 1.
pub fn hayashi_bound(
    n: u64,
    r: f64,
    w: &CqChannel,
    p: &InputDistribution,
) -> Result<BoundReport> {
    let sigma = w.output_average(p);
    let fam = E0TildeFamily::new(w, &sigma, p)?;
    let best = solve::golden_max(0.0, 1.0, 1e-12, |s| fam.eval(s).value - s * r);
    let exponent = best.value.max(0.0);
    let s_star = if best.value <= 0.0 { 0.0 } else { best.x };
    Ok(BoundReport {
        value: 4.0 * (-(n as f64) * exponent).exp(),
        exponent,
        prefactor: 4.0,
        s_star: Some(s_star),
        valid_n: true,
    })
}

/// Quadratic behaviour of the sphere-packing exponent just below capacity.
#[derive(Debug, Clone, Copy)]
pub struct AroundCapacity {
    /// `E_sp2(C - delta, P*, P*W) / delta^2`, which approaches `1/(2 V_W)`.
    pub ratio_bound: f64,
    /// `s* / delta`, which approaches `1/V_W`.
    pub s_star_ratio: f64,
}

pub fn exponent_around_capacity(
    analysis: &ChannelAnalysis,
    delta: f64,
) -> Result<AroundCapacity> {
    let v_w = analysis.peripheral.v_w;
    if v_w <= 1e-10 {
        return Err(Error::DegenerateChannel { v_w });
    }
    let c = analysis.capacity.capacity;
    if !(delta > 0.0 && delta <= 0.2 * c) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0, 0.2 C] with C = {c}"
        )));
    }
    let sp = sp_exponent_2(
        c - delta,
        &analysis.capacity.achiever,
        &analysis.channel,
        &analysis.sigma_star,
    )?;
    Ok(AroundCapacity {
        ratio_bound: sp.value / (delta * delta),
        s_star_ratio: sp.s_star / delta,
    })
}
