//! Classical-quantum channels: input distributions, empirical types,
//! conditional divergences, mutual information, capacity, dispersions, and
//! the minimal peripheral information variance.

use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::divergence::{self, SupportPolicy};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::operator::{CMatrix, DensityOperator};
use crate::solve;

/// Probability vector over the channel alphabet, normalized within 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    weights: Vec<f64>,
}

impl InputDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty distribution".into()));
        }
        for &w in &weights {
            if !(w >= 0.0) {
                return Err(Error::ProbabilityOutOfRange { value: w });
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(InputDistribution { weights })
    }

    pub fn uniform(k: usize) -> Self {
        InputDistribution {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut weights = vec![0.0; k];
        weights[at] = 1.0;
        InputDistribution { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }
}

/// Map from a finite alphabet to density operators on a common space.
///
/// The output average under the uniform input must have full support; this
/// is validated at construction.
#[derive(Debug, Clone)]
pub struct CqChannel {
    symbols: Vec<String>,
    outputs: Vec<DensityOperator>,
    dim: usize,
}

impl CqChannel {
    pub fn new(symbols: Vec<String>, outputs: Vec<DensityOperator>) -> Result<Self> {
        if symbols.len() != outputs.len() || outputs.is_empty() {
            return Err(Error::InvalidParameter(
                "channel needs one output state per symbol".into(),
            ));
        }
        let dim = outputs[0].dim();
        if outputs.iter().any(|o| o.dim() != dim) {
            return Err(Error::InvalidParameter(
                "channel outputs must share one dimension".into(),
            ));
        }
        let ch = CqChannel {
            symbols,
            outputs,
            dim,
        };
        let avg = ch.output_average(&InputDistribution::uniform(ch.len()));
        let min_ev = avg.op().min_eigenvalue();
        if min_ev < 1e-12 {
            return Err(Error::ChannelNotFullSupport {
                min_eigenvalue: min_ev,
            });
        }
        Ok(ch)
    }

    /// Binary symmetric channel with crossover `p`, embedded as commuting
    /// qubit outputs.
    pub fn binary_symmetric(p: f64) -> Result<Self> {
        let w0 = DensityOperator::from_probs(&[1.0 - p, p])?;
        let w1 = DensityOperator::from_probs(&[p, 1.0 - p])?;
        Self::new(vec!["0".into(), "1".into()], vec![w0, w1])
    }

    /// Single-symbol wrapper used to feed a bare state pair through
    /// channel-shaped machinery; skips the full-support validation, which is
    /// a channel-model assumption rather than a hypothesis-testing one.
    pub fn single_state(rho: &DensityOperator) -> Self {
        CqChannel {
            symbols: vec!["x".into()],
            outputs: vec![rho.clone()],
            dim: rho.dim(),
        }
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn output(&self, x: usize) -> &DensityOperator {
        &self.outputs[x]
    }

    pub fn outputs(&self) -> &[DensityOperator] {
        &self.outputs
    }

    pub fn symbol_index(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol {
                symbol: symbol.to_string(),
            })
    }

    /// Empirical type of a symbol sequence: occurrence counts over `n`.
    pub fn empirical_type<S: AsRef<str>>(&self, sequence: &[S]) -> Result<InputDistribution> {
        if sequence.is_empty() {
            return Err(Error::InvalidParameter("empty sequence has no type".into()));
        }
        let mut counts = vec![0usize; self.len()];
        for s in sequence {
            counts[self.symbol_index(s.as_ref())?] += 1;
        }
        let n = sequence.len() as f64;
        InputDistribution::new(counts.into_iter().map(|c| c as f64 / n).collect())
    }

    /// `P W = sum_x P(x) W_x`.
    pub fn output_average(&self, p: &InputDistribution) -> DensityOperator {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (x, out) in self.outputs.iter().enumerate() {
            let w = p.weight(x);
            if w > 0.0 {
                acc += out.matrix() * Complex::new(w, 0.0);
            }
        }
        DensityOperator::from_matrix(acc).expect("convex combination of densities")
    }
}

fn cond_sum(
    w: &CqChannel,
    p: &InputDistribution,
    mut f: impl FnMut(usize) -> Result<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for x in p.support() {
        let v = f(x).map_err(|e| match e {
            Error::SupportViolation { context } => Error::SupportViolation {
                context: format!("symbol {:?}: {context}", w.symbols[x]),
            },
            other => other,
        })?;
        acc += p.weight(x) * v;
    }
    Ok(acc)
}

/// `D(W||sigma|P) = sum_x P(x) D(W_x||sigma)`.
pub fn cond_rel_entropy(
    w: &CqChannel,
    sigma: &DensityOperator,
    p: &InputDistribution,
    policy: SupportPolicy,
) -> Result<f64> {
    cond_sum(w, p, |x| divergence::rel_entropy(w.output(x), sigma, policy))
}

/// `V(W||sigma|P)`.
pub fn cond_rel_var(
    w: &CqChannel,
    sigma: &DensityOperator,
    p: &InputDistribution,
    policy: SupportPolicy,
) -> Result<f64> {
    cond_sum(w, p, |x| divergence::rel_var(w.output(x), sigma, policy))
}

/// `V~(W||sigma|P)`.
pub fn cond_rel_var_tilde(
    w: &CqChannel,
    sigma: &DensityOperator,
    p: &InputDistribution,
    policy: SupportPolicy,
) -> Result<f64> {
    cond_sum(w, p, |x| {
        divergence::rel_var_tilde(w.output(x), sigma, policy)
    })
}

/// `D_0(W||sigma|P)`, the conditional support-overlap exponent.
pub fn cond_d0(w: &CqChannel, sigma: &DensityOperator, p: &InputDistribution) -> Result<f64> {
    cond_sum(w, p, |x| divergence::d0(w.output(x), sigma))
}

/// Mutual information `I(P,W) = D(W||PW|P)`.
pub fn mutual_information(p: &InputDistribution, w: &CqChannel) -> f64 {
    let avg = w.output_average(p);
    cond_rel_entropy(w, &avg, p, SupportPolicy::Strict)
        .expect("supp(W_x) lies inside supp(PW) for x in supp(P)")
}

#[derive(Debug, Clone)]
pub struct CapacityOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions {
            tol: 1e-9,
            max_iter: 20_000,
            restarts: 10,
            seed: 42,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub capacity: f64,
    pub achiever: InputDistribution,
    pub gradient_residual: f64,
    pub iterations: usize,
}

/// Residual of the capacity first-order conditions at `p`: on the support all
/// `D(W_x||PW)` must equal the capacity, off the support they may not exceed
/// it.
fn kkt_residual(grads: &[f64], value: f64, p: &InputDistribution) -> f64 {
    let mut res: f64 = 0.0;
    for (x, &g) in grads.iter().enumerate() {
        if p.weight(x) > 0.0 {
            res = res.max((g - value).abs());
        } else {
            res = res.max((g - value).max(0.0));
        }
    }
    res
}

fn gradients(w: &CqChannel, p: &InputDistribution) -> Vec<f64> {
    let avg = w.output_average(p);
    (0..w.len())
        .map(|x| {
            divergence::rel_entropy(w.output(x), &avg, SupportPolicy::Extended)
                .expect("extended policy never errors here")
        })
        .collect()
}

/// One ascent run of pairwise Frank-Wolfe from `start`.
///
/// The ascent direction moves mass from the worst on-support symbol to the
/// best symbol overall, which respects the simplex and avoids the sublinear
/// zig-zag of plain Frank-Wolfe near faces. Step sizes come from an exact
/// golden-section line search (the objective is concave along segments).
fn frank_wolfe_run(
    w: &CqChannel,
    start: InputDistribution,
    tol: f64,
    max_iter: usize,
) -> (CapacityResult, bool) {
    let mut p = start;
    let mut iterations = 0;
    loop {
        let grads = gradients(w, &p);
        let value = mutual_information(&p, w);
        let residual = kkt_residual(&grads, value, &p);
        if residual <= tol || iterations >= max_iter {
            return (
                CapacityResult {
                    capacity: value,
                    achiever: p,
                    gradient_residual: residual,
                    iterations,
                },
                residual <= tol,
            );
        }
        iterations += 1;

        let mut best = 0usize;
        let mut worst = None;
        for x in 0..w.len() {
            if grads[x] > grads[best] {
                best = x;
            }
            if p.weight(x) > 0.0 {
                worst = match worst {
                    None => Some(x),
                    Some(r) if grads[x] < grads[r] => Some(x),
                    keep => keep,
                };
            }
        }
        let worst = worst.expect("distribution has support");
        if best == worst {
            // Single-symbol support and already optimal on it.
            continue;
        }
        let gamma_max = p.weight(worst);
        let base = p.clone();
        let objective = |gamma: f64| {
            let mut wts = base.weights().to_vec();
            wts[best] += gamma;
            wts[worst] -= gamma;
            wts[worst] = wts[worst].max(0.0);
            let total: f64 = wts.iter().sum();
            for v in &mut wts {
                *v /= total;
            }
            mutual_information(&InputDistribution { weights: wts }, w)
        };
        let step = solve::golden_max(0.0, gamma_max, 1e-12, objective);
        // A golden-section point never reaches the endpoint exactly; when the
        // boundary is at least as good, land on it so the worst symbol is
        // actually dropped rather than left with epsilon mass.
        let gamma = if objective(gamma_max) >= step.value {
            gamma_max
        } else {
            step.x
        };
        let mut wts = p.weights().to_vec();
        wts[best] += gamma;
        wts[worst] = (wts[worst] - gamma).max(0.0);
        if wts[worst] < 1e-14 {
            wts[worst] = 0.0;
        }
        let total: f64 = wts.iter().sum();
        for v in &mut wts {
            *v /= total;
        }
        p = InputDistribution { weights: wts };
    }
}

/// Channel capacity `C_W = max_P I(P,W)` by multistart pairwise Frank-Wolfe.
///
/// Restart 0 begins at the uniform distribution; the rest begin at seeded
/// Dirichlet draws. The best run wins, ties going to the lowest restart
/// index, so the result is deterministic for a fixed seed.
pub fn capacity(w: &CqChannel, opts: &CapacityOptions) -> Result<CapacityResult> {
    let starts: Vec<InputDistribution> = (0..opts.restarts.max(1))
        .map(|i| {
            if i == 0 {
                InputDistribution::uniform(w.len())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
                crate::sample::random_distribution(w.len(), &mut rng)
            }
        })
        .collect();

    let runs = exec::map_collect(opts.parallelism, &starts, |p0| {
        frank_wolfe_run(w, p0.clone(), opts.tol, opts.max_iter)
    });

    let mut best: Option<(usize, CapacityResult, bool)> = None;
    for (i, (res, ok)) in runs.into_iter().enumerate() {
        let better = match &best {
            None => true,
            Some((_, b, _)) => res.capacity > b.capacity,
        };
        if better {
            best = Some((i, res, ok));
        }
    }
    let (_, result, converged) = best.expect("at least one restart");
    if !converged {
        return Err(Error::NonConvergence {
            tol: opts.tol,
            iterations: result.iterations,
            residual: result.gradient_residual,
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy)]
pub struct Dispersion {
    /// Conditional information variance `V(P,W)`.
    pub v: f64,
    /// Unconditional information variance `U(P,W)`.
    pub u: f64,
    /// Kubo-Mori flavoured conditional variance `V~(P,W)`.
    pub v_tilde: f64,
}

/// The three dispersion quantities at input distribution `P`.
///
/// `U` is evaluated literally as the relative-entropy variance of the
/// block-diagonal joint state `P o W` against `P (x) PW`.
pub fn dispersion(p: &InputDistribution, w: &CqChannel) -> Dispersion {
    let avg = w.output_average(p);
    let v = cond_rel_var(w, &avg, p, SupportPolicy::Strict).expect("support holds on supp(P)");
    let v_tilde =
        cond_rel_var_tilde(w, &avg, p, SupportPolicy::Strict).expect("support holds on supp(P)");

    let d = w.dim();
    let k = w.len();
    let mut joint = CMatrix::zeros(d * k, d * k);
    let mut product = CMatrix::zeros(d * k, d * k);
    for x in 0..k {
        let px = Complex::new(p.weight(x), 0.0);
        joint
            .view_mut((x * d, x * d), (d, d))
            .copy_from(&(w.output(x).matrix() * px));
        product
            .view_mut((x * d, x * d), (d, d))
            .copy_from(&(avg.matrix() * px));
    }
    let joint = DensityOperator::from_matrix(joint).expect("block density");
    let product = DensityOperator::from_matrix(product).expect("block density");
    let u = divergence::rel_var(&joint, &product, SupportPolicy::Strict)
        .expect("joint state supported inside the product state");

    Dispersion { v, u, v_tilde }
}

#[derive(Debug, Clone)]
pub struct PeripheralOptions {
    pub tol: f64,
    /// Relaxation of the capacity-achieving constraint: `I >= C - delta_relax`.
    pub delta_relax: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for PeripheralOptions {
    fn default() -> Self {
        PeripheralOptions {
            tol: 1e-9,
            delta_relax: 1e-8,
            restarts: 8,
            max_iter: 400,
            seed: 42,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeripheralVariance {
    pub v_w: f64,
    pub v_tilde_w: f64,
    /// Distribution at which `v_w` is attained.
    pub witness: InputDistribution,
    /// True when the achiever was certified unique and no search was needed.
    pub unique_achiever: bool,
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimal peripheral information variances `V_W` and `V~_W`.
///
/// When KKT strict complementarity certifies a unique achiever, the single
/// evaluation at the capacity achiever is returned. Otherwise both variances
/// are minimized over the relaxed set `{P : I(P,W) >= C - delta_relax}` by
/// penalized multistart projected descent with numeric gradients.
pub fn min_peripheral_variance(
    w: &CqChannel,
    cap: &CapacityResult,
    opts: &PeripheralOptions,
) -> Result<PeripheralVariance> {
    let grads = gradients(w, &cap.achiever);
    let tol_active = (10.0 * opts.tol).max(1e-8);
    let active: Vec<usize> = (0..w.len())
        .filter(|&x| grads[x] >= cap.capacity - tol_active)
        .collect();
    let support = cap.achiever.support();

    if active == support && outputs_independent(w, &active) {
        let disp = dispersion(&cap.achiever, w);
        return Ok(PeripheralVariance {
            v_w: disp.v,
            v_tilde_w: disp.v_tilde,
            witness: cap.achiever.clone(),
            unique_achiever: true,
        });
    }

    let (v_w, witness) = minimize_over_achievers(w, cap, opts, false);
    let (v_tilde_w, _) = minimize_over_achievers(w, cap, opts, true);
    Ok(PeripheralVariance {
        v_w,
        v_tilde_w,
        witness,
        unique_achiever: false,
    })
}

/// Linear independence of `{(vec W_x, 1)}` over the active set; this is what
/// makes `P` the unique solution of `PW = omega*`, `sum P = 1`.
fn outputs_independent(w: &CqChannel, active: &[usize]) -> bool {
    let d = w.dim();
    let rows = 2 * d * d + 1;
    let mut m = nalgebra::DMatrix::<f64>::zeros(rows, active.len());
    for (col, &x) in active.iter().enumerate() {
        let mat = w.output(x).matrix();
        for i in 0..d {
            for j in 0..d {
                m[(2 * (i * d + j), col)] = mat[(i, j)].re;
                m[(2 * (i * d + j) + 1, col)] = mat[(i, j)].im;
            }
        }
        m[(rows - 1, col)] = 1.0;
    }
    m.rank(1e-9) == active.len()
}

fn minimize_over_achievers(
    w: &CqChannel,
    cap: &CapacityResult,
    opts: &PeripheralOptions,
    tilde: bool,
) -> (f64, InputDistribution) {
    let c = cap.capacity;
    let floor = c - opts.delta_relax;
    let penalty_weight = 1e8;
    let objective = |wts: &[f64]| -> f64 {
        let p = InputDistribution {
            weights: wts.to_vec(),
        };
        let disp_val = {
            let avg = w.output_average(&p);
            if tilde {
                cond_rel_var_tilde(w, &avg, &p, SupportPolicy::Strict).unwrap_or(f64::INFINITY)
            } else {
                cond_rel_var(w, &avg, &p, SupportPolicy::Strict).unwrap_or(f64::INFINITY)
            }
        };
        let slack = (floor - mutual_information(&p, w)).max(0.0);
        disp_val + penalty_weight * slack * slack
    };

    let k = w.len();
    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|i| {
            if i == 0 {
                cap.achiever.weights().to_vec()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1000 + i as u64));
                let r = crate::sample::random_distribution(k, &mut rng);
                cap.achiever
                    .weights()
                    .iter()
                    .zip(r.weights())
                    .map(|(a, b)| 0.7 * a + 0.3 * b)
                    .collect()
            }
        })
        .collect();

    let runs = exec::map_collect(opts.parallelism, &starts, |start| {
        let mut x = project_simplex(start);
        let mut fx = objective(&x);
        let h = 1e-6;
        for _ in 0..opts.max_iter {
            let mut grad = vec![0.0; k];
            for i in 0..k {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                grad[i] = (objective(&project_simplex(&xp)) - objective(&project_simplex(&xm)))
                    / (2.0 * h);
            }
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-12 {
                break;
            }
            let mut step = 0.1;
            let mut improved = false;
            while step > 1e-14 {
                let cand: Vec<f64> = x
                    .iter()
                    .zip(&grad)
                    .map(|(xi, gi)| xi - step * gi / gnorm)
                    .collect();
                let cand = project_simplex(&cand);
                let fc = objective(&cand);
                if fc < fx - 1e-15 {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (fx, x)
    });

    let mut best = (f64::INFINITY, cap.achiever.weights().to_vec());
    for (fx, x) in runs {
        if fx < best.0 {
            best = (fx, x);
        }
    }
    let witness = InputDistribution { weights: best.1 };
    // Report the raw variance at the witness (without the penalty term).
    let avg = w.output_average(&witness);
    let value = if tilde {
        cond_rel_var_tilde(w, &avg, &witness, SupportPolicy::Strict).unwrap_or(best.0)
    } else {
        cond_rel_var(w, &avg, &witness, SupportPolicy::Strict).unwrap_or(best.0)
    };
    (value, witness)
}

/// Precomputed capacity data bundled for exponent and sweep code.
#[derive(Debug, Clone)]
pub struct ChannelAnalysis {
    pub channel: CqChannel,
    pub capacity: CapacityResult,
    pub sigma_star: DensityOperator,
    pub peripheral: PeripheralVariance,
}

impl ChannelAnalysis {
    pub fn new(channel: CqChannel, opts: &CapacityOptions) -> Result<Self> {
        let cap = capacity(&channel, opts)?;
        let sigma_star = channel.output_average(&cap.achiever);
        let peripheral = min_peripheral_variance(
            &channel,
            &cap,
            &PeripheralOptions {
                tol: opts.tol,
                seed: opts.seed,
                parallelism: opts.parallelism,
                ..Default::default()
            },
        )?;
        Ok(ChannelAnalysis {
            channel,
            capacity: cap,
            sigma_star,
            peripheral,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bsc01() -> CqChannel {
        CqChannel::binary_symmetric(0.1).unwrap()
    }

    fn bsc_capacity_oracle(p: f64) -> f64 {
        2.0f64.ln() - crate::divergence::binary_entropy(p)
    }

    fn bsc_v_oracle(p: f64) -> f64 {
        // V(W_x || PW) with PW maximally mixed; same value for both symbols.
        let d = bsc_capacity_oracle(p);
        (1.0 - p) * ((1.0 - p) / 0.5).ln().powi(2) + p * (p / 0.5).ln().powi(2) - d * d
    }

    #[test]
    fn empirical_type_counts() {
        let w = bsc01();
        let t = w.empirical_type(&["0", "1", "0"]).unwrap();
        assert_relative_eq!(t.weight(0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(t.weight(1), 1.0 / 3.0, epsilon = 1e-15);

        let single = w.empirical_type(&["1"]).unwrap();
        assert_eq!(single.weights(), &[0.0, 1.0]);

        assert!(matches!(
            w.empirical_type(&["0", "z"]),
            Err(Error::UnknownSymbol { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq: Vec<&str> = (0..37)
            .map(|_| if rand::Rng::random::<bool>(&mut rng) { "0" } else { "1" })
            .collect();
        let t = w.empirical_type(&seq).unwrap();
        assert_relative_eq!(t.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn output_average_cases() {
        let w = bsc01();
        let point = InputDistribution::point_mass(2, 1);
        assert_eq!(w.output_average(&point), *w.output(1));

        let orth = CqChannel::new(
            vec!["a".into(), "b".into()],
            vec![
                DensityOperator::from_probs(&[1.0, 0.0]).unwrap(),
                DensityOperator::from_probs(&[0.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let avg = orth.output_average(&InputDistribution::uniform(2));
        assert_relative_eq!(avg.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(avg.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn full_support_validation() {
        let res = CqChannel::new(
            vec!["a".into(), "b".into()],
            vec![
                DensityOperator::from_probs(&[1.0, 0.0]).unwrap(),
                DensityOperator::from_probs(&[1.0, 0.0]).unwrap(),
            ],
        );
        assert!(matches!(res, Err(Error::ChannelNotFullSupport { .. })));
    }

    #[test]
    fn conditional_entropies_bsc_closed_form() {
        let w = bsc01();
        let uniform = InputDistribution::uniform(2);
        let sigma = DensityOperator::maximally_mixed(2);
        let d = cond_rel_entropy(&w, &sigma, &uniform, SupportPolicy::Strict).unwrap();
        assert_relative_eq!(d, bsc_capacity_oracle(0.1), epsilon = 1e-12);

        let v = cond_rel_var(&w, &sigma, &uniform, SupportPolicy::Strict).unwrap();
        assert_relative_eq!(v, bsc_v_oracle(0.1), epsilon = 1e-12);

        // sigma equal to the single output makes the divergence vanish.
        let point = InputDistribution::point_mass(2, 0);
        let d0 = cond_rel_entropy(&w, w.output(0), &point, SupportPolicy::Strict).unwrap();
        assert!(d0.abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        let w = bsc01();
        assert!(mutual_information(&InputDistribution::point_mass(2, 0), &w).abs() < 1e-12);
        assert_relative_eq!(
            mutual_information(&InputDistribution::uniform(2), &w),
            bsc_capacity_oracle(0.1),
            epsilon = 1e-12
        );

        let orth = CqChannel::new(
            vec!["a".into(), "b".into()],
            vec![
                DensityOperator::from_probs(&[1.0, 0.0]).unwrap(),
                DensityOperator::from_probs(&[0.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        assert_relative_eq!(
            mutual_information(&InputDistribution::uniform(2), &orth),
            2.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn capacity_bsc_and_orthogonal() {
        let opts = CapacityOptions::default();
        let res = capacity(&bsc01(), &opts).unwrap();
        assert_relative_eq!(res.capacity, bsc_capacity_oracle(0.1), epsilon = 1e-9);
        assert!(res.gradient_residual <= opts.tol);
        assert!((res.achiever.weight(0) - 0.5).abs() < 1e-6);

        let orth = CqChannel::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                DensityOperator::from_probs(&[1.0, 0.0, 0.0]).unwrap(),
                DensityOperator::from_probs(&[0.0, 1.0, 0.0]).unwrap(),
                DensityOperator::from_probs(&[0.0, 0.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let res = capacity(&orth, &opts).unwrap();
        assert_relative_eq!(res.capacity, 3.0f64.ln(), epsilon = 1e-8);
        for x in 0..3 {
            assert!((res.achiever.weight(x) - 1.0 / 3.0).abs() < 1e-5);
        }
    }

    #[test]
    fn capacity_identical_outputs_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = sample::random_density(2, &mut rng);
        let w = CqChannel::new(vec!["a".into(), "b".into()], vec![rho.clone(), rho]).unwrap();
        let res = capacity(&w, &CapacityOptions::default()).unwrap();
        assert!(res.capacity.abs() < 1e-10);
        assert!(res.gradient_residual <= 1e-9);
    }

    #[test]
    fn capacity_dominates_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = sample::random_channel(3, 2, &mut rng);
        let res = capacity(&w, &CapacityOptions::default()).unwrap();
        for _ in 0..100 {
            let p = sample::random_distribution(3, &mut rng);
            assert!(mutual_information(&p, &w) <= res.capacity + 1e-8);
        }
    }

    #[test]
    fn mutual_information_concavity_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = sample::random_channel(3, 2, &mut rng);
        for _ in 0..100 {
            let p1 = sample::random_distribution(3, &mut rng);
            let p2 = sample::random_distribution(3, &mut rng);
            let mid = InputDistribution::new(
                p1.weights()
                    .iter()
                    .zip(p2.weights())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )
            .unwrap();
            let lhs = mutual_information(&mid, &w);
            let rhs = 0.5 * (mutual_information(&p1, &w) + mutual_information(&p2, &w));
            assert!(lhs >= rhs - 1e-9);
        }
    }

    #[test]
    fn capacity_invariant_under_symbol_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = sample::random_channel(3, 2, &mut rng);
        let perm = [2usize, 0, 1];
        let wp = CqChannel::new(
            perm.iter().map(|&i| w.symbols()[i].clone()).collect(),
            perm.iter().map(|&i| w.output(i).clone()).collect(),
        )
        .unwrap();
        let opts = CapacityOptions::default();
        let r1 = capacity(&w, &opts).unwrap();
        let r2 = capacity(&wp, &opts).unwrap();
        assert_relative_eq!(r1.capacity, r2.capacity, epsilon = 1e-9);
        for (k, &i) in perm.iter().enumerate() {
            assert!((r2.achiever.weight(k) - r1.achiever.weight(i)).abs() < 1e-5);
        }
    }

    #[test]
    fn dispersion_point_mass_vanishes() {
        let w = bsc01();
        let d = dispersion(&InputDistribution::point_mass(2, 0), &w);
        assert!(d.v.abs() < 1e-12 && d.u.abs() < 1e-10 && d.v_tilde.abs() < 1e-12);
    }

    #[test]
    fn dispersion_bsc_uniform_matches_closed_form() {
        let w = bsc01();
        let d = dispersion(&InputDistribution::uniform(2), &w);
        assert_relative_eq!(d.v, bsc_v_oracle(0.1), epsilon = 1e-10);
        // Commuting channel: both variances coincide.
        assert_relative_eq!(d.v, d.v_tilde, epsilon = 1e-10);
    }

    #[test]
    fn v_equals_u_at_capacity_achiever() {
        let w = bsc01();
        let cap = capacity(&w, &CapacityOptions::default()).unwrap();
        let d = dispersion(&cap.achiever, &w);
        assert!((d.v - d.u).abs() <= 1e-8, "V = {} vs U = {}", d.v, d.u);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let wq = sample::random_channel(3, 2, &mut rng);
        let cap = capacity(&wq, &CapacityOptions::default()).unwrap();
        let d = dispersion(&cap.achiever, &wq);
        assert!((d.v - d.u).abs() <= 1e-6, "V = {} vs U = {}", d.v, d.u);
    }

    #[test]
    fn peripheral_variance_bsc_unique_achiever() {
        let w = bsc01();
        let cap = capacity(&w, &CapacityOptions::default()).unwrap();
        let pv = min_peripheral_variance(&w, &cap, &PeripheralOptions::default()).unwrap();
        assert!(pv.unique_achiever);
        assert_relative_eq!(pv.v_w, bsc_v_oracle(0.1), epsilon = 1e-8);
    }

    #[test]
    fn peripheral_variance_duplicated_symbol() {
        let w = bsc01();
        let dup = CqChannel::new(
            vec!["0".into(), "0b".into(), "1".into()],
            vec![w.output(0).clone(), w.output(0).clone(), w.output(1).clone()],
        )
        .unwrap();
        let cap = capacity(&dup, &CapacityOptions::default()).unwrap();
        let pv = min_peripheral_variance(&dup, &cap, &PeripheralOptions::default()).unwrap();
        assert!(!pv.unique_achiever);
        assert_relative_eq!(pv.v_w, bsc_v_oracle(0.1), epsilon = 1e-6);
    }

    #[test]
    fn peripheral_variance_identical_outputs_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = sample::random_density(2, &mut rng);
        let w = CqChannel::new(vec!["a".into(), "b".into()], vec![rho.clone(), rho]).unwrap();
        let cap = capacity(&w, &CapacityOptions::default()).unwrap();
        let pv = min_peripheral_variance(&w, &cap, &PeripheralOptions::default()).unwrap();
        assert!(pv.v_w.abs() < 1e-9);
    }

    #[test]
    fn positive_peripheral_variance_implies_positive_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for k in [2usize, 3] {
            let w = sample::random_channel(k, 2, &mut rng);
            let cap = capacity(&w, &CapacityOptions::default()).unwrap();
            let pv = min_peripheral_variance(&w, &cap, &PeripheralOptions::default()).unwrap();
            if pv.v_w > 1e-9 {
                assert!(cap.capacity > 0.0);
            }
        }
    }
}
