//! Finite-dimensional Hermitian operator calculus.
//!
//! Everything downstream (divergences, exponent functions, test oracles)
//! reduces to spectral decompositions of Hermitian matrices. Powers and
//! logarithms follow the support convention `A^p = sum_{a_i != 0} a_i^p P_i`:
//! the kernel is mapped to the zero block, so negative powers and logs are
//! well-defined on the support. Eigenvalues within a relative threshold of
//! zero count as kernel.

use nalgebra::{Complex, DMatrix};
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex<f64>>;

/// Max |A_ij - conj(A_ji)| tolerated before an input is rejected.
pub const TOL_HERM: f64 = 1e-10;
/// Absolute gap under which eigenvalues are grouped into one projector.
pub const TOL_EIG: f64 = 1e-9;
/// Relative threshold (times the largest |eigenvalue|) below which an
/// eigenvalue is treated as kernel.
pub const TOL_SUPP_REL: f64 = 1e-10;
/// Density operators may dip this far below zero before being rejected.
pub const TOL_PSD: f64 = 1e-10;
/// Allowed trace deviation for density operators.
pub const TOL_TRACE: f64 = 1e-8;
/// Default cap on the dimension of tensor powers.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Hermitian matrix, symmetrized at construction.
#[derive(Debug)]
pub struct HermitianOperator {
    entries: CMatrix,
    spectral: OnceLock<SpectralDecomposition>,
}

impl Clone for HermitianOperator {
    fn clone(&self) -> Self {
        HermitianOperator {
            entries: self.entries.clone(),
            spectral: OnceLock::new(),
        }
    }
}

impl PartialEq for HermitianOperator {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

/// Spectral decomposition with eigenvalues sorted descending.
///
/// `eigenvalues` keeps the full multiset (length = dim); `groups` collects
/// one projector per cluster of eigenvalues equal within [`TOL_EIG`], which
/// keeps projectors well-conditioned under degeneracy. `basis` holds the
/// eigenvectors as columns in the same descending order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub groups: Vec<(f64, CMatrix)>,
    pub basis: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rebuilds `sum_i a_i P_i` from the grouped projectors.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (val, proj) in &self.groups {
            acc += proj * Complex::new(*val, 0.0);
        }
        acc
    }

    /// Largest |eigenvalue|.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Kernel threshold for this spectrum.
    pub fn support_cutoff(&self) -> f64 {
        TOL_SUPP_REL * self.spectral_radius()
    }

    /// Projector onto the span of eigenvectors with eigenvalue above the
    /// support cutoff.
    pub fn support_projector(&self) -> CMatrix {
        let cutoff = self.support_cutoff();
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (val, proj) in &self.groups {
            if *val > cutoff {
                acc += proj;
            }
        }
        acc
    }

    /// Applies `f` to every eigenvalue above the support cutoff and rebuilds
    /// the operator; kernel eigenvalues map to zero.
    pub fn map_support(&self, mut f: impl FnMut(f64) -> f64) -> HermitianOperator {
        let cutoff = self.support_cutoff();
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (val, proj) in &self.groups {
            if val.abs() > cutoff {
                acc += proj * Complex::new(f(*val), 0.0);
            }
        }
        HermitianOperator::from_trusted(acc)
    }
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

impl HermitianOperator {
    /// Validates Hermiticity within [`TOL_HERM`] and stores `(A + A^dagger)/2`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidParameter(format!(
                "matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let adj = entries.adjoint();
        let dev = max_abs_entry(&(&entries - &adj));
        if dev > TOL_HERM {
            return Err(Error::NonHermitian {
                deviation: dev,
                tol: TOL_HERM,
            });
        }
        let sym = (entries + adj) * Complex::new(0.5, 0.0);
        Ok(Self::from_trusted(sym))
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        HermitianOperator {
            entries,
            spectral: OnceLock::new(),
        }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, v) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(*v, 0.0);
        }
        Self::from_trusted(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_trusted(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_trusted(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Spectral decomposition, computed once and cached.
    pub fn spectral(&self) -> &SpectralDecomposition {
        self.spectral.get_or_init(|| spectral_decompose(&self.entries))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral().eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.spectral().eigenvalues.last().unwrap()
    }

    fn require_psd(&self) -> Result<()> {
        let s = self.spectral();
        let tol = TOL_SUPP_REL * s.spectral_radius();
        let min = self.min_eigenvalue();
        if min < -tol.max(f64::MIN_POSITIVE) {
            return Err(Error::NegativeSpectrum {
                eigenvalue: min,
                tol,
            });
        }
        Ok(())
    }

    /// Support-restricted power `A^p`; requires PSD input.
    pub fn power(&self, p: f64) -> Result<HermitianOperator> {
        self.require_psd()?;
        Ok(self.spectral().map_support(|v| v.max(0.0).powf(p)))
    }

    /// Support-restricted logarithm; the kernel maps to the zero block.
    pub fn log(&self) -> Result<HermitianOperator> {
        self.require_psd()?;
        Ok(self.spectral().map_support(|v| v.max(f64::MIN_POSITIVE).ln()))
    }

    /// Matrix exponential (no support restriction: `exp(0) = 1`).
    pub fn exp(&self) -> HermitianOperator {
        let s = self.spectral();
        let d = s.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (val, proj) in &s.groups {
            acc += proj * Complex::new(val.exp(), 0.0);
        }
        HermitianOperator::from_trusted(acc)
    }

    /// Projector onto the support.
    pub fn support_projector(&self) -> Result<CMatrix> {
        self.require_psd()?;
        Ok(self.spectral().support_projector())
    }

    /// `Tr[(A)_+]`: sum of eigenvalues strictly above the grouping tolerance.
    pub fn positive_part_trace(&self) -> f64 {
        self.eigenvalues().iter().filter(|&&v| v > TOL_EIG).sum()
    }
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues descending,
/// degenerate eigenvalues grouped within [`TOL_EIG`].
pub fn spectral_decompose(m: &CMatrix) -> SpectralDecomposition {
    let d = m.nrows();
    if d == 0 {
        return SpectralDecomposition {
            eigenvalues: vec![],
            groups: vec![],
            basis: CMatrix::zeros(0, 0),
        };
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = CMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(i));
    }

    let mut groups = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (eigenvalues[end - 1] - eigenvalues[end]).abs() <= TOL_EIG {
            end += 1;
        }
        let block = basis.columns(start, end - start);
        let proj = &block * block.adjoint();
        let rep = eigenvalues[start..end].iter().sum::<f64>() / (end - start) as f64;
        groups.push((rep, proj));
        start = end;
    }

    SpectralDecomposition {
        eigenvalues,
        groups,
        basis,
    }
}

/// The relation `A << B`: every eigenvector of `A` above the support cutoff
/// lies in the range of `B`'s support projector (within 1e-8).
pub fn support_contained(a: &HermitianOperator, b: &HermitianOperator) -> Result<bool> {
    a.require_psd()?;
    let proj_b = b.support_projector()?;
    let sa = a.spectral();
    let cutoff = sa.support_cutoff();
    for (i, &val) in sa.eigenvalues.iter().enumerate() {
        if val <= cutoff {
            continue;
        }
        let v = sa.basis.column(i);
        let residual = (&v - &proj_b * v).norm();
        if residual > 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `A^{tensor n}`, rejected when `dim(A)^n` exceeds `cap`.
pub fn kron_power(a: &HermitianOperator, n: u32, cap: usize) -> Result<HermitianOperator> {
    if n == 0 {
        return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
    }
    let d = a.dim();
    let mut total = 1usize;
    for _ in 0..n {
        total = total.checked_mul(d).unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::DimensionCapExceeded { dim: total, cap });
        }
    }
    let mut acc = a.matrix().clone();
    for _ in 1..n {
        acc = acc.kronecker(a.matrix());
    }
    Ok(HermitianOperator::from_trusted(acc))
}

/// Positive semi-definite, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min = op.min_eigenvalue();
        if min < -TOL_PSD {
            return Err(Error::NegativeSpectrum {
                eigenvalue: min,
                tol: TOL_PSD,
            });
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(Error::InvalidParameter(format!(
                "density operator trace {tr} deviates from 1 by more than {TOL_TRACE:e}"
            )));
        }
        Ok(DensityOperator { op })
    }

    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(entries)?)
    }

    pub fn from_probs(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diag(diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        let w = Complex::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            m[(i, i)] = w;
        }
        DensityOperator {
            op: HermitianOperator::from_trusted(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        self.op.spectral()
    }

    /// Tensor power as a density operator.
    pub fn kron_power(&self, n: u32, cap: usize) -> Result<DensityOperator> {
        let op = kron_power(&self.op, n, cap)?;
        Ok(DensityOperator { op })
    }
}
