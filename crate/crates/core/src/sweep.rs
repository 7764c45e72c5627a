//! Moderate-deviation sweep harness.
//!
//! Generates rate sequences `C - a_n` (or `D - a_n`), evaluates the
//! achievability and converse bounds plus the exact small-`n` oracles, and
//! normalizes everything by `n a_n^2` so the rows can be compared against the
//! `-1/(2V)` limit. Rows are computed independently (in parallel with the
//! `parallel` feature) and emitted in ascending `n` regardless of scheduling.

use std::io::Write as _;
use std::path::Path;

use crate::channel::{ChannelAnalysis, CqChannel, InputDistribution};
use crate::divergence::{self, SupportPolicy};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::exponent;
use crate::hypothesis::{self, ClassicalPair};
use crate::ldp::{self, BoundConfig};
use crate::operator::{max_abs_entry, DensityOperator, DEFAULT_DIM_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    /// `a_n = c n^(-t)`.
    Power,
    /// `a_n = c n^(-t) log n`.
    PowerLog,
}

/// Moderate-deviation sequence: `t` in `(0, 1/2)` guarantees `a_n -> 0`
/// while `a_n sqrt(n) -> inf`.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub coefficient: f64,
    pub exponent_t: f64,
    pub n_grid: Vec<u64>,
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.coefficient > 0.0) {
            return Err(Error::InvalidParameter(
                "sequence coefficient must be positive".into(),
            ));
        }
        if !(self.exponent_t > 0.0 && self.exponent_t < 0.5) {
            return Err(Error::InvalidParameter(
                "sequence exponent must lie in (0, 1/2)".into(),
            ));
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter(
                "n grid must be nonempty and positive".into(),
            ));
        }
        Ok(())
    }

    pub fn a_n(&self, n: u64) -> f64 {
        let base = self.coefficient * (n as f64).powf(-self.exponent_t);
        match self.kind {
            SequenceKind::Power => base,
            SequenceKind::PowerLog => base * (n as f64).ln(),
        }
    }
}

/// One sweep row; all `*_norm` columns are `log(value) / (n a_n^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub a_n: f64,
    pub rate: f64,
    pub upper_norm: f64,
    pub upper_norm_martingale: Option<f64>,
    pub lower_norm: Option<f64>,
    pub exact_norm: Option<f64>,
    pub target: f64,
    pub upper_valid: bool,
    pub lower_valid: bool,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Cap on `dim^n` for the exact quantum oracle.
    pub dim_cap: usize,
    /// Cap on the number of type classes for the commuting oracle.
    pub class_cap: u64,
    pub bound_cfg: BoundConfig,
    pub parallelism: Parallelism,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dim_cap: DEFAULT_DIM_CAP,
            class_cap: 2_000_000,
            bound_cfg: BoundConfig::default(),
            parallelism: Parallelism::default(),
        }
    }
}

fn commuting(rho: &DensityOperator, sigma: &DensityOperator) -> bool {
    let c = rho.matrix() * sigma.matrix() - sigma.matrix() * rho.matrix();
    max_abs_entry(&c) <= 1e-10
}

/// Merge outcomes with numerically equal log-likelihood ratios; a sufficient
/// statistic for every Neyman-Pearson quantity on product distributions.
fn merged_by_ratio(pair: &ClassicalPair) -> ClassicalPair {
    let mut live: Vec<(f64, f64, f64)> = pair
        .p()
        .iter()
        .zip(pair.q())
        .filter(|&(&p, &q)| p > 0.0 || q > 0.0)
        .map(|(&p, &q)| {
            let ratio = if p > 0.0 && q > 0.0 {
                (p / q).ln()
            } else if p > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            (ratio, p, q)
        })
        .collect();
    live.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut p: Vec<f64> = Vec::new();
    let mut q: Vec<f64> = Vec::new();
    let mut last_ratio = f64::NAN;
    for (ratio, pi, qi) in live {
        let tol = 1e-11 * last_ratio.abs().max(1.0);
        let same = if last_ratio.is_nan() {
            false
        } else if last_ratio.is_infinite() {
            ratio == last_ratio
        } else {
            ratio.is_finite() && (ratio - last_ratio).abs() <= tol
        };
        if same {
            *p.last_mut().unwrap() += pi;
            *q.last_mut().unwrap() += qi;
        } else {
            p.push(pi);
            q.push(qi);
            last_ratio = ratio;
        }
    }
    ClassicalPair::new(p, q).expect("merging preserves normalization")
}

/// Hypothesis-testing sweep: rates `r_n = D - a_n`, upper bounds from the
/// quantum Hoeffding and martingale tests, lower bounds from the sharp
/// converse, exact values where an oracle is feasible.
pub fn ht_sweep(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    spec: &SequenceSpec,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let d = divergence::rel_entropy(rho, sigma, SupportPolicy::Strict)?;
    let v = divergence::rel_var(rho, sigma, SupportPolicy::Strict)?;
    if v <= 1e-12 {
        return Err(Error::DegenerateVariance { variance: v });
    }
    let d0 = divergence::d0(rho, sigma)?;
    let pair = merged_by_ratio(&ClassicalPair::nussbaum_szkola(rho, sigma));
    let is_commuting = commuting(rho, sigma);
    let target = -1.0 / (2.0 * v);
    let single = CqChannel::single_state(rho);
    let p1 = InputDistribution::uniform(1);

    let mut grid = spec.n_grid.clone();
    grid.sort_unstable();
    let rows = exec::map_collect(cfg.parallelism, &grid, |&n| -> Result<SweepRow> {
        let a = spec.a_n(n);
        let r = d - a;
        let na2 = n as f64 * a * a;

        let upper = hypothesis::audenaert_bound(rho, sigma, n as u32, r.max(0.0))?;
        let upper_norm = (upper.prefactor.ln() - n as f64 * upper.exponent) / na2;

        let mart = hypothesis::martingale_alpha_bound(&pair, n as u32, a)?;
        let upper_norm_martingale =
            Some((mart.report.prefactor.ln() - n as f64 * mart.report.exponent) / na2);

        let (lower_norm, lower_valid) = if r > d0 && r < d {
            match ldp::sharp_converse_bound(&single, sigma, &p1, n, r, &cfg.bound_cfg) {
                Ok(rep) if rep.exponent.is_finite() && rep.prefactor > 0.0 => (
                    Some((rep.prefactor.ln() - n as f64 * rep.exponent) / na2),
                    rep.valid_n,
                ),
                Ok(_) => (None, false),
                Err(_) => (None, false),
            }
        } else {
            (None, false)
        };

        let exact_alpha = exact_alpha_if_feasible(rho, sigma, &pair, is_commuting, n, r, cfg)?;
        let exact_norm = exact_alpha.and_then(|alpha| {
            if alpha > 0.0 {
                Some(alpha.ln() / na2)
            } else {
                None
            }
        });

        Ok(SweepRow {
            n,
            a_n: a,
            rate: r,
            upper_norm,
            upper_norm_martingale,
            lower_norm,
            exact_norm,
            target,
            upper_valid: true,
            lower_valid,
        })
    });
    rows.into_iter().collect()
}

fn exact_alpha_if_feasible(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    pair: &ClassicalPair,
    is_commuting: bool,
    n: u64,
    r: f64,
    cfg: &SweepConfig,
) -> Result<Option<f64>> {
    if r <= 0.0 {
        // Type-II budget at or above 1: the trivial test has no type-I error.
        return Ok(Some(0.0));
    }
    let mu = (-(n as f64) * r).exp();
    if mu <= 0.0 || mu >= 1.0 {
        return Ok(None);
    }
    if is_commuting {
        match hypothesis::exact_min_type1_commuting(pair, n as u32, mu, cfg.class_cap) {
            Ok(t) => return Ok(Some(t.alpha)),
            Err(Error::TypeClassCapExceeded { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    if n <= u32::MAX as u64 {
        match hypothesis::exact_min_type1(rho, sigma, n as u32, mu, cfg.dim_cap) {
            Ok(t) => return Ok(Some(t.alpha)),
            Err(Error::DimensionCapExceeded { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Channel-coding sweep: rates `R_n = C - a_n`, achievability from the
/// random-coding bound at the capacity achiever, converse from the sharp
/// bound at the achiever's type. Exact channel error is not computed.
pub fn channel_sweep(
    analysis: &ChannelAnalysis,
    spec: &SequenceSpec,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let v_w = analysis.peripheral.v_w;
    if v_w <= 1e-12 {
        return Err(Error::DegenerateChannel { v_w });
    }
    let c = analysis.capacity.capacity;
    let p_star = &analysis.capacity.achiever;
    let sigma = &analysis.sigma_star;
    let w = &analysis.channel;
    let d0 = crate::channel::cond_d0(w, sigma, p_star)?;
    let target = -1.0 / (2.0 * v_w);

    let mut grid = spec.n_grid.clone();
    grid.sort_unstable();
    let rows = exec::map_collect(cfg.parallelism, &grid, |&n| -> Result<SweepRow> {
        let a = spec.a_n(n);
        let rate = c - a;
        let na2 = n as f64 * a * a;

        let upper = exponent::hayashi_bound(n, rate, w, p_star)?;
        let upper_norm = (upper.prefactor.ln() - n as f64 * upper.exponent) / na2;

        let (lower_norm, lower_valid) = if rate > d0 && rate < c {
            match ldp::sharp_converse_bound(w, sigma, p_star, n, rate, &cfg.bound_cfg) {
                Ok(rep) if rep.exponent.is_finite() && rep.prefactor > 0.0 => (
                    Some((rep.prefactor.ln() - n as f64 * rep.exponent) / na2),
                    rep.valid_n,
                ),
                Ok(_) => (None, false),
                Err(_) => (None, false),
            }
        } else {
            (None, false)
        };

        Ok(SweepRow {
            n,
            a_n: a,
            rate,
            upper_norm,
            upper_norm_martingale: None,
            lower_norm,
            exact_norm: None,
            target,
            upper_valid: true,
            lower_valid,
        })
    });
    rows.into_iter().collect()
}

/// Normalized sphere-packing exponents at the capacity achiever for both the
/// Petz and log-Euclidean families; the two trend to `1/(2 V_W)` and
/// `1/(2 V~_W)`, which differ exactly when the channel is genuinely quantum.
#[derive(Debug, Clone, Copy)]
pub struct GapRow {
    pub n: u64,
    pub a_n: f64,
    pub esp2_norm: f64,
    pub esp_tilde_norm: f64,
}

pub fn gap_report(analysis: &ChannelAnalysis, spec: &SequenceSpec) -> Result<Vec<GapRow>> {
    spec.validate()?;
    let c = analysis.capacity.capacity;
    let p_star = &analysis.capacity.achiever;
    let mut rows = Vec::new();
    for &n in &spec.n_grid {
        let a = spec.a_n(n);
        let sp2 = exponent::sp_exponent_2(c - a, p_star, &analysis.channel, &analysis.sigma_star)?;
        let spt =
            exponent::sp_exponent_tilde(c - a, p_star, &analysis.channel, &analysis.sigma_star)?;
        rows.push(GapRow {
            n,
            a_n: a,
            esp2_norm: sp2.value / (a * a),
            esp_tilde_norm: spt.value / (a * a),
        });
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows in the fixed CSV schema. Floats use the shortest
/// representation that round-trips, so re-parsing reproduces the rows
/// bit-exactly; the file is written atomically (temp file + rename).
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    writeln!(
        tmp,
        "n,a_n,rate,upper_norm,upper_norm_martingale,lower_norm,exact_norm,target,upper_valid,lower_valid"
    )?;
    for r in rows {
        writeln!(
            tmp,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.a_n,
            r.rate,
            r.upper_norm,
            fmt_opt(r.upper_norm_martingale),
            fmt_opt(r.lower_norm),
            fmt_opt(r.exact_norm),
            r.target,
            r.upper_valid,
            r.lower_valid
        )?;
    }
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(format!("persisting {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Reads back a CSV produced by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty csv".into()))?;
    if header
        != "n,a_n,rate,upper_norm,upper_norm_martingale,lower_norm,exact_norm,target,upper_valid,lower_valid"
    {
        return Err(Error::Io(format!("unexpected csv header: {header}")));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            Ok(Some(s.parse().map_err(|e| {
                Error::Io(format!("bad float {s:?}: {e}"))
            })?))
        }
    };
    let mut rows = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Io(format!("bad csv row: {line}")));
        }
        rows.push(SweepRow {
            n: f[0].parse().map_err(|e| Error::Io(format!("{e}")))?,
            a_n: f[1].parse().map_err(|e| Error::Io(format!("{e}")))?,
            rate: f[2].parse().map_err(|e| Error::Io(format!("{e}")))?,
            upper_norm: f[3].parse().map_err(|e| Error::Io(format!("{e}")))?,
            upper_norm_martingale: parse_opt(f[4])?,
            lower_norm: parse_opt(f[5])?,
            exact_norm: parse_opt(f[6])?,
            target: f[7].parse().map_err(|e| Error::Io(format!("{e}")))?,
            upper_valid: f[8].parse().map_err(|e| Error::Io(format!("{e}")))?,
            lower_valid: f[9].parse().map_err(|e| Error::Io(format!("{e}")))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CapacityOptions;
    use approx::assert_relative_eq;

    fn rho0() -> DensityOperator {
        DensityOperator::from_probs(&[0.5, 0.5]).unwrap()
    }

    fn sigma0() -> DensityOperator {
        DensityOperator::from_probs(&[0.25, 0.75]).unwrap()
    }

    fn spec(n_grid: Vec<u64>) -> SequenceSpec {
        SequenceSpec {
            kind: SequenceKind::Power,
            coefficient: 1.0,
            exponent_t: 1.0 / 3.0,
            n_grid,
        }
    }

    #[test]
    fn sequence_validation() {
        assert!(spec(vec![10]).validate().is_ok());
        let mut bad = spec(vec![10]);
        bad.exponent_t = 0.5;
        assert!(bad.validate().is_err());
        bad.exponent_t = 0.3;
        bad.coefficient = 0.0;
        assert!(bad.validate().is_err());
        let log_spec = SequenceSpec {
            kind: SequenceKind::PowerLog,
            coefficient: 2.0,
            exponent_t: 0.4,
            n_grid: vec![100],
        };
        assert_relative_eq!(
            log_spec.a_n(100),
            2.0 * 100f64.powf(-0.4) * 100f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn merged_pair_collapses_degenerate_outcomes() {
        let pair = ClassicalPair::nussbaum_szkola(&rho0(), &sigma0());
        let merged = merged_by_ratio(&pair);
        assert_eq!(merged.len(), 2);
        let mut ps = merged.p().to_vec();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(ps[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ht_sweep_rejects_degenerate_pair() {
        let err = ht_sweep(&rho0(), &rho0(), &spec(vec![10, 100]), &SweepConfig::default());
        assert!(matches!(err, Err(Error::DegenerateVariance { .. })));
    }

    #[test]
    fn ht_sweep_small_grid_rows() {
        let rows = ht_sweep(
            &rho0(),
            &sigma0(),
            &spec(vec![4, 8, 16]),
            &SweepConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(row.upper_valid);
            // a_n = n^(-1/3) exceeds D here, so mu >= 1 and the exact test is
            // trivially perfect; the normalized column is then absent.
            assert!(row.rate <= 0.0);
            assert!(row.exact_norm.is_none());
        }
    }

    #[test]
    fn ht_sweep_trend_toward_target() {
        let rows = ht_sweep(
            &rho0(),
            &sigma0(),
            &spec(vec![100, 10_000, 1_000_000]),
            &SweepConfig::default(),
        )
        .unwrap();
        let target = rows[0].target;
        let last = rows.last().unwrap();
        assert!(
            (last.upper_norm - target).abs() <= 0.1 * target.abs(),
            "upper_norm {} vs target {target}",
            last.upper_norm
        );
        // Monotone approach (in distance to the target) beyond n = 1e4.
        assert!(
            (rows[2].upper_norm - target).abs()
                <= (rows[1].upper_norm - target).abs() + 0.05 * target.abs()
        );
    }

    #[test]
    fn ht_sweep_coefficient_free_limit() {
        let mut norms = Vec::new();
        for coeff in [0.5, 1.0, 2.0] {
            let mut sp = spec(vec![1_000_000]);
            sp.coefficient = coeff;
            let rows = ht_sweep(&rho0(), &sigma0(), &sp, &SweepConfig::default()).unwrap();
            norms.push(rows[0].upper_norm);
        }
        let spread = (norms.iter().cloned().fold(f64::MIN, f64::max)
            - norms.iter().cloned().fold(f64::MAX, f64::min))
        .abs();
        assert!(
            spread <= 0.1 * norms[1].abs(),
            "spread {spread} across {norms:?}"
        );
    }

    #[test]
    fn ht_sweep_sandwich_on_valid_rows() {
        // Fixed-coefficient sweep at moderate n where the exact oracle runs.
        let mut sp = spec((4..=20).collect());
        sp.coefficient = 0.3;
        let rows = ht_sweep(&rho0(), &sigma0(), &sp, &SweepConfig::default()).unwrap();
        for row in rows {
            if let (Some(lo), Some(ex)) = (row.lower_norm, row.exact_norm) {
                if row.lower_valid {
                    // Normalized logs flip the inequality direction.
                    assert!(lo <= ex + 1e-9);
                }
                assert!(ex <= row.upper_norm + 1e-9);
            }
        }
    }

    #[test]
    fn channel_sweep_bsc_trend() {
        let analysis = ChannelAnalysis::new(
            CqChannel::binary_symmetric(0.1).unwrap(),
            &CapacityOptions::default(),
        )
        .unwrap();
        let rows = channel_sweep(
            &analysis,
            &spec(vec![100, 10_000, 1_000_000]),
            &SweepConfig::default(),
        )
        .unwrap();
        let target = rows[0].target;
        let last = rows.last().unwrap();
        assert!(
            (last.upper_norm - target).abs() <= 0.1 * target.abs(),
            "upper_norm {} vs target {target}",
            last.upper_norm
        );
        assert!(rows.iter().all(|r| r.exact_norm.is_none()));
    }

    #[test]
    fn channel_sweep_rejects_degenerate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(57);
        use rand::SeedableRng;
        let rho = crate::sample::random_density(2, &mut rng);
        let w = CqChannel::new(vec!["a".into(), "b".into()], vec![rho.clone(), rho]).unwrap();
        let analysis = ChannelAnalysis::new(w, &CapacityOptions::default()).unwrap();
        assert!(matches!(
            channel_sweep(&analysis, &spec(vec![100]), &SweepConfig::default()),
            Err(Error::DegenerateChannel { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");

        emit_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);

        let rows = ht_sweep(
            &rho0(),
            &sigma0(),
            &spec(vec![6, 50, 400, 20_000]),
            &SweepConfig::default(),
        )
        .unwrap();
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), rows.len() + 1);

        let parsed = read_csv(&path).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.n, b.n);
            assert_eq!(a.a_n.to_bits(), b.a_n.to_bits());
            assert_eq!(a.upper_norm.to_bits(), b.upper_norm.to_bits());
            assert_eq!(
                a.upper_norm_martingale.map(f64::to_bits),
                b.upper_norm_martingale.map(f64::to_bits)
            );
            assert_eq!(a.lower_norm.map(f64::to_bits), b.lower_norm.map(f64::to_bits));
            assert_eq!(a.exact_norm.map(f64::to_bits), b.exact_norm.map(f64::to_bits));
            assert_eq!(a.target.to_bits(), b.target.to_bits());
            assert_eq!(a.upper_valid, b.upper_valid);
            assert_eq!(a.lower_valid, b.lower_valid);
        }
    }
}
