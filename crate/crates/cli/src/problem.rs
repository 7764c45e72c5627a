//! Problem-file schema (version 1).
//!
//! A JSON document with named states and channels; complex entries are
//! `[re, im]` pairs. Unknown top-level keys are rejected. The optional
//! `tolerances` block may tighten (never loosen) the validation applied to
//! parsed matrices.

use std::collections::BTreeMap;

use moddev::channel::CqChannel;
use moddev::operator::{CMatrix, DensityOperator, TOL_HERM, TOL_PSD, TOL_TRACE};
use nalgebra::Complex;
use serde::Deserialize;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    #[serde(default)]
    pub states: BTreeMap<String, MatrixJson>,
    #[serde(default)]
    pub channels: BTreeMap<String, ChannelJson>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub alphabet: Vec<String>,
    pub matrices: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_herm")]
    pub herm: f64,
    #[serde(default = "default_psd")]
    pub psd: f64,
    #[serde(default = "default_trace")]
    pub trace: f64,
}

fn default_herm() -> f64 {
    TOL_HERM
}
fn default_psd() -> f64 {
    TOL_PSD
}
fn default_trace() -> f64 {
    TOL_TRACE
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: default_herm(),
            psd: default_psd(),
            trace: default_trace(),
        }
    }
}

/// Parse failure (exit 2) as opposed to a violated precondition (exit 3).
#[derive(Debug)]
pub enum LoadError {
    Parse(String),
    Invalid(String),
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, LoadError> {
    let pf: ProblemFile = serde_json::from_str(text)
        .map_err(|e| LoadError::Parse(format!("problem file: {e}")))?;
    if pf.version != 1 {
        return Err(LoadError::Parse(format!(
            "unsupported problem file version {} (expected 1)",
            pf.version
        )));
    }
    let t = pf.tolerances;
    if t.herm > TOL_HERM || t.psd > TOL_PSD || t.trace > TOL_TRACE {
        return Err(LoadError::Invalid(format!(
            "tolerances may only tighten the built-in limits (herm <= {TOL_HERM:e}, psd <= {TOL_PSD:e}, trace <= {TOL_TRACE:e})"
        )));
    }
    Ok(pf)
}

fn matrix_from_json(name: &str, m: &MatrixJson) -> Result<CMatrix, LoadError> {
    let d = m.len();
    if d == 0 || m.iter().any(|row| row.len() != d) {
        return Err(LoadError::Invalid(format!(
            "matrix {name:?} must be square and nonempty"
        )));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| {
        Complex::new(m[i][j][0], m[i][j][1])
    }))
}

fn validate_density(
    name: &str,
    raw: &CMatrix,
    tol: &Tolerances,
) -> Result<DensityOperator, LoadError> {
    let dev = moddev::operator::max_abs_entry(&(raw - raw.adjoint()));
    if dev > tol.herm {
        return Err(LoadError::Invalid(format!(
            "state {name:?} violates Hermiticity: deviation {dev:.3e} > {:.3e}",
            tol.herm
        )));
    }
    let state = DensityOperator::from_matrix(raw.clone())
        .map_err(|e| LoadError::Invalid(format!("state {name:?}: {e}")))?;
    let min_ev = state.spectral().eigenvalues.last().copied().unwrap_or(0.0);
    if min_ev < -tol.psd {
        return Err(LoadError::Invalid(format!(
            "state {name:?} has eigenvalue {min_ev:.3e} below -{:.3e}",
            tol.psd
        )));
    }
    let tr = state.op().trace();
    if (tr - 1.0).abs() > tol.trace {
        return Err(LoadError::Invalid(format!(
            "state {name:?} trace {tr} deviates from 1 beyond {:.3e}",
            tol.trace
        )));
    }
    Ok(state)
}

impl ProblemFile {
    pub fn state(&self, name: &str) -> Result<DensityOperator, LoadError> {
        let m = self
            .states
            .get(name)
            .ok_or_else(|| LoadError::Invalid(format!("state {name:?} not found")))?;
        let raw = matrix_from_json(name, m)?;
        validate_density(name, &raw, &self.tolerances)
    }

    pub fn channel(&self, name: &str) -> Result<CqChannel, LoadError> {
        let ch = self
            .channels
            .get(name)
            .ok_or_else(|| LoadError::Invalid(format!("channel {name:?} not found")))?;
        if ch.alphabet.len() != ch.matrices.len() {
            return Err(LoadError::Invalid(format!(
                "channel {name:?}: alphabet and matrices lengths differ"
            )));
        }
        let mut outputs = Vec::with_capacity(ch.matrices.len());
        for (sym, m) in ch.alphabet.iter().zip(&ch.matrices) {
            let label = format!("{name}:{sym}");
            let raw = matrix_from_json(&label, m)?;
            outputs.push(validate_density(&label, &raw, &self.tolerances)?);
        }
        CqChannel::new(ch.alphabet.clone(), outputs)
            .map_err(|e| LoadError::Invalid(format!("channel {name:?}: {e}")))
    }
}
