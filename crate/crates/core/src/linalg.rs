//! Dense complex-matrix primitives.
//!
//! Hermitian eigendecomposition is delegated to `nalgebra`; everything built
//! on top of it (spectral functions restricted to the support, support
//! projectors, trace norms) lives here so the tolerance policy sits in one
//! place.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type ComplexMatrix = DMatrix<Complex64>;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// A square matrix that is Hermitian to working precision.
///
/// Construction always symmetrizes, so `‖A − A†‖_max` is at rounding level.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Symmetrizes `m` without checking how far from Hermitian it was.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        let adj = m.adjoint();
        HermitianOperator {
            matrix: (m + adj).scale(0.5),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            matrix: ComplexMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        HermitianOperator { matrix: m }
    }

    /// Rank-one projector `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn projector_onto(v: &[Complex64]) -> Self {
        let n = v.len();
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj() / norm2;
            }
        }
        Self::from_matrix_unchecked(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianOperator {
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Self {
        HermitianOperator {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &HermitianOperator) -> Self {
        HermitianOperator {
            matrix: &self.matrix - &other.matrix,
        }
    }

    /// `Re tr(self · other)`; the trace of a product of Hermitian matrices is real.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += (self.matrix[(i, k)] * other.matrix[(k, i)]).re;
            }
        }
        acc
    }

    /// `⟨v|A|v⟩` for a column vector `v`.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, vi) in v.iter().enumerate().take(n) {
            let row: Complex64 = v.iter().enumerate().map(|(j, vj)| self.matrix[(i, j)] * vj).sum();
            acc += vi.conj() * row;
        }
        acc.re
    }

    /// `B A B†` for a (possibly rectangular) `B`.
    pub fn conjugate_by(&self, b: &ComplexMatrix) -> Self {
        Self::from_matrix_unchecked(b * &self.matrix * b.adjoint())
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        eig_hermitian(self)
    }
}

/// Spectral decomposition `A = V Λ V†` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues with magnitude at or below this are outside the support.
    pub fn support_cutoff(&self) -> f64 {
        let largest = self
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()));
        tol::SUPPORT * largest
    }

    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    /// `V diag(values) V†`.
    pub fn rebuild_with(&self, values: &[f64]) -> HermitianOperator {
        let mut scaled = self.eigenvectors.clone();
        for (j, &w) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w);
        }
        HermitianOperator::from_matrix_unchecked(scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.rebuild_with(&self.eigenvalues)
    }

    /// Applies `f` to the spectrum, see [`spectral_fn`].
    pub fn map_spectrum<F>(&self, f: F, support_only: bool) -> Result<HermitianOperator>
    where
        F: Fn(f64) -> f64,
    {
        let cutoff = self.support_cutoff();
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in &self.eigenvalues {
            if support_only && lambda.abs() <= cutoff {
                values.push(0.0);
                continue;
            }
            let y = f(lambda);
            if !y.is_finite() {
                return Err(Error::DomainError { eigenvalue: lambda });
            }
            values.push(y);
        }
        Ok(self.rebuild_with(&values))
    }
}

/// Largest entry magnitude.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Wraps `(m + m†)/2`, rejecting inputs whose asymmetry exceeds the input tolerance.
pub fn hermitize(m: &ComplexMatrix) -> Result<HermitianOperator> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asymmetry = max_abs(&(m - m.adjoint()));
    if asymmetry > tol::HERM_INPUT {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(HermitianOperator::from_matrix_unchecked(m.clone()))
}

pub fn eig_hermitian(a: &HermitianOperator) -> Result<EigenDecomposition> {
    let dim = a.dim();
    let eig = SymmetricEigen::try_new(a.matrix.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure { dim })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `V f(Λ) V†`.
///
/// With `support_only`, eigenvalues within the relative support cutoff of zero
/// map to 0 and `f` is never evaluated on them. A non-finite `f(λ)` on any
/// other eigenvalue is a [`Error::DomainError`].
pub fn spectral_fn<F>(a: &HermitianOperator, f: F, support_only: bool) -> Result<HermitianOperator>
where
    F: Fn(f64) -> f64,
{
    eig_hermitian(a)?.map_spectrum(f, support_only)
}

pub fn support_projector(a: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = eig_hermitian(a)?;
    Ok(support_projector_of(&eig))
}

pub(crate) fn support_projector_of(eig: &EigenDecomposition) -> HermitianOperator {
    let cutoff = eig.support_cutoff();
    let values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&x| if x > cutoff { 1.0 } else { 0.0 })
        .collect();
    eig.rebuild_with(&values)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().sum()
}
