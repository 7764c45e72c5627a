//! Numerical toolbox for finite-blocklength analysis of classical-quantum
//! channels and binary quantum hypothesis testing.
//!
//! The crate covers the quantities that show up when the transmission rate of
//! a c-q channel approaches capacity, or the type-II exponent of a hypothesis
//! test approaches the relative entropy:
//!
//! - [`operator`]: Hermitian operator calculus (spectral decompositions,
//!   support-restricted powers/logs, tensor powers, positive-part traces).
//! - [`divergence`]: relative entropy, Petz and log-Euclidean Rényi
//!   divergences, both relative-entropy variances, hockey-stick divergence.
//! - [`channel`]: c-q channels, mutual information, capacity, dispersions,
//!   and the minimal peripheral information variance.
//! - [`exponent`]: auxiliary exponent functions with analytic `s`-derivatives,
//!   sphere-packing exponents, the random-coding upper bound, and the
//!   quadratic behaviour of the exponent near capacity.
//! - [`hypothesis`]: exact Neyman-Pearson oracles (quantum and type-class),
//!   the Nussbaum-Szkola reduction, and achievability bounds.
//! - [`ldp`]: tilted cumulants, Legendre-Fenchel transforms, and the sharp /
//!   weak converse machinery from strong large deviation theory.
//! - [`sweep`]: the moderate-deviation sweep harness and its CSV schema.
//!
//! All entropic quantities are in nats. Conversion to bits is a display
//! concern and is left to callers.
//!
//! With the default `parallel` feature, sweeps and grid scans fan out over a
//! rayon pool; disabling the feature leaves a sequential fallback with
//! identical results (reductions are order-fixed either way).

pub mod channel;
pub mod divergence;
pub mod error;
pub mod exec;
pub mod exponent;
pub mod hypothesis;
pub mod ldp;
pub mod operator;
pub mod sample;
pub mod solve;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Parallelism;
pub use operator::{DensityOperator, HermitianOperator, SpectralDecomposition};
