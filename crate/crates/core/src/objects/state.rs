use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitize, ComplexMatrix, EigenDecomposition, HermitianOperator};
use crate::tol;

/// A density matrix: Hermitian, positive semidefinite, unit trace.
///
/// The spectral decomposition is computed once at construction and kept,
/// since nearly every entropy needs it.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: HermitianOperator,
    eig: EigenDecomposition,
}

impl DensityMatrix {
    /// Validates `op`. Eigenvalues in `[-1e-9, 0)` count as zero. A trace off
    /// by more than `1e-9` but at most `1e-6` is renormalized, clipping the
    /// spectrum; otherwise the matrix is kept unchanged.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let mut eig = op.eig()?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let trace: f64 = eig.eigenvalues.iter().map(|x| x.max(0.0)).sum();
        if (trace - 1.0).abs() > tol::TRACE_RENORMALIZE {
            return Err(Error::TraceError { trace });
        }
        if (trace - 1.0).abs() <= tol::TRACE {
            // Keep the input bits; only the cached spectrum is clipped.
            for x in eig.eigenvalues.iter_mut() {
                *x = x.max(0.0);
            }
            return Ok(DensityMatrix { op, eig });
        }
        for x in eig.eigenvalues.iter_mut() {
            *x = x.max(0.0) / trace;
        }
        let op = eig.reconstruct();
        Ok(DensityMatrix { op, eig })
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        Self::new(hermitize(m)?)
    }

    /// Normalizes an operator that is positive up to rounding, e.g. the
    /// unnormalized output `A(ρ)` of a CP map.
    pub(crate) fn from_psd_unnormalized(op: HermitianOperator) -> Result<Self> {
        let mut eig = op.eig()?;
        let cutoff = eig.support_cutoff();
        for x in eig.eigenvalues.iter_mut() {
            if *x <= cutoff {
                *x = 0.0;
            }
        }
        let trace: f64 = eig.eigenvalues.iter().sum();
        if trace <= 0.0 {
            return Err(Error::TraceError { trace });
        }
        for x in eig.eigenvalues.iter_mut() {
            *x /= trace;
        }
        let op = eig.reconstruct();
        Ok(DensityMatrix { op, eig })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let op = HermitianOperator::identity(dim).scale(1.0 / dim as f64);
        let eig = EigenDecomposition {
            eigenvalues: vec![1.0 / dim as f64; dim],
            eigenvectors: ComplexMatrix::identity(dim, dim),
        };
        DensityMatrix { op, eig }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(probs))
    }

    /// `|ψ⟩⟨ψ|`, normalizing `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || norm2 <= 0.0 || !norm2.is_finite() {
            return Err(Error::TraceError { trace: norm2 });
        }
        Self::new(HermitianOperator::projector_onto(psi))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op)
    }

    pub fn rank(&self) -> usize {
        let cutoff = self.eig.support_cutoff();
        self.eig.eigenvalues.iter().filter(|&&x| x > cutoff).count()
    }

    /// `Σ_k w_k ρ_k`; weights must be a probability vector.
    pub fn mixture(states: &[DensityMatrix], weights: &[f64]) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::WeightError {
                reason: "no states to mix".into(),
            });
        };
        if states.len() != weights.len() {
            return Err(Error::WeightError {
                reason: format!("{} states but {} weights", states.len(), weights.len()),
            });
        }
        let d = first.dim();
        let mut acc = HermitianOperator::zeros(d);
        for (s, &w) in states.iter().zip(weights) {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
            acc = acc.add(&s.op.scale(w));
        }
        Self::new(acc)
    }
}
