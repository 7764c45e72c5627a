//! Seeded random operators, states, and channels.
//!
//! Used by the capacity solver's restarts and throughout the test suites.
//! Everything is driven by a caller-supplied RNG so runs are reproducible.

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::channel::{CqChannel, InputDistribution};
use crate::operator::{CMatrix, DensityOperator, HermitianOperator};

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; u clamped away from 0.
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn ginibre(dim: usize, rng: &mut impl Rng) -> CMatrix {
    DMatrix::from_fn(dim, dim, |_, _| {
        Complex::new(standard_normal(rng), standard_normal(rng))
    })
}

/// GUE-style random Hermitian matrix, entries O(1).
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = ginibre(dim, rng);
    let h = (&g + g.adjoint()) * Complex::new(0.5, 0.0);
    HermitianOperator::from_trusted(h)
}

/// Full-rank random density operator `G G^dagger / Tr`.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = ginibre(dim, rng);
    let mut p = &g * g.adjoint();
    // A ridge keeps the spectrum comfortably away from zero so that
    // support-sensitive quantities stay well-conditioned in tests.
    for i in 0..dim {
        p[(i, i)] += Complex::new(0.05, 0.0);
    }
    let tr = p.trace().re;
    p /= Complex::new(tr, 0.0);
    DensityOperator::from_matrix(p).expect("construction is PSD and unit trace")
}

/// Random probability vector (flat Dirichlet).
pub fn random_distribution(k: usize, rng: &mut impl Rng) -> InputDistribution {
    let mut w: Vec<f64> = (0..k)
        .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
        .collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    InputDistribution::new(w).expect("normalized by construction")
}

/// Random c-q channel with `symbols` inputs and `dim`-dimensional full-rank
/// outputs.
pub fn random_channel(symbols: usize, dim: usize, rng: &mut impl Rng) -> CqChannel {
    let outputs: Vec<DensityOperator> = (0..symbols).map(|_| random_density(dim, rng)).collect();
    let names: Vec<String> = (0..symbols).map(|i| format!("x{i}")).collect();
    CqChannel::new(names, outputs).expect("full-rank outputs give a full-support average")
}
