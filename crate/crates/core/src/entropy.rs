//! Scalar information measures, all in nats.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{trace_norm, ComplexMatrix};
use crate::objects::{ClassicalDistribution, DensityMatrix, Instrument, Measurement, Povm};
use crate::tol;

/// A divergence value: finite, or `+∞` when absolute continuity fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyValue {
    Finite(f64),
    Infinite,
}

impl EntropyValue {
    /// Rounding noise in `[-1e-9, 0)` is reported as zero.
    fn divergence(x: f64) -> Self {
        if (-tol::PSD..0.0).contains(&x) {
            EntropyValue::Finite(0.0)
        } else {
            EntropyValue::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, EntropyValue::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            EntropyValue::Finite(x) => Some(x),
            EntropyValue::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite marker; for display and comparisons only.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Multiplies a finite value; `0 · ∞` is taken as 0.
    pub fn weighted(self, w: f64) -> Self {
        match self {
            EntropyValue::Finite(x) => EntropyValue::Finite(w * x),
            EntropyValue::Infinite if w == 0.0 => EntropyValue::Finite(0.0),
            EntropyValue::Infinite => EntropyValue::Infinite,
        }
    }

    pub fn plus(self, other: EntropyValue) -> Self {
        match (self, other) {
            (EntropyValue::Finite(a), EntropyValue::Finite(b)) => EntropyValue::Finite(a + b),
            _ => EntropyValue::Infinite,
        }
    }
}

impl From<f64> for EntropyValue {
    fn from(x: f64) -> Self {
        EntropyValue::Finite(x)
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyValue::Finite(x) => write!(f, "{x}"),
            EntropyValue::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for EntropyValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EntropyValue::Finite(x) => s.serialize_f64(*x),
            EntropyValue::Infinite => s.serialize_str("+inf"),
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// `S(ρ) = −tr ρ ln ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let cutoff = rho.eigen().support_cutoff();
    -rho
        .eigenvalues()
        .iter()
        .filter(|&&x| x > cutoff)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Umegaki relative entropy `tr ρ(ln ρ − ln σ)`, infinite unless
/// `supp ρ ⊆ supp σ`.
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<EntropyValue> {
    check_dims(rho.dim(), sigma.dim())?;
    let sig = sigma.eigen();
    let cutoff = sig.support_cutoff();
    let d = rho.dim();

    let mut kernel = ComplexMatrix::zeros(d, d);
    let mut cross = 0.0;
    for (k, &mu) in sig.eigenvalues.iter().enumerate() {
        let v = sig.eigenvector(k);
        if mu > cutoff {
            cross += mu.ln() * rho.op().expectation(&v);
        } else {
            let col = sig.eigenvectors.column(k);
            kernel += col * col.adjoint();
        }
    }
    let leak = trace_norm(&(&kernel * rho.matrix() * &kernel));
    if leak > tol::SUPPORT_LEAK {
        return Ok(EntropyValue::Infinite);
    }
    Ok(EntropyValue::divergence(-von_neumann_entropy(rho) - cross))
}

/// `Σ pᵢ ln(pᵢ/qᵢ)` on raw vectors, with `0 ln(0/q) = 0` and `+∞` whenever
/// `pᵢ > 1e-12` while `qᵢ ≤ 1e-12`.
pub fn kl_divergence_slices(p: &[f64], q: &[f64]) -> Result<EntropyValue> {
    check_dims(p.len(), q.len())?;
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > tol::PROB_FLOOR && b <= tol::PROB_FLOOR {
            return Ok(EntropyValue::Infinite);
        }
        if a > 0.0 && b > 0.0 {
            acc += a * (a / b).ln();
        }
    }
    Ok(EntropyValue::divergence(acc))
}

/// Kullback–Leibler divergence; `q` is matched to `p` by outcome label.
pub fn kl_divergence(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<EntropyValue> {
    let q_aligned = q.aligned_to(p.labels())?;
    kl_divergence_slices(p.probs(), &q_aligned)
}

/// `−Σ pᵢ ln(pᵢ/Vᵢ)` from outcome probabilities and volumes.
pub fn observational_entropy_from_stats(probs: &[f64], volumes: &[f64]) -> Result<f64> {
    check_dims(probs.len(), volumes.len())?;
    let dim: f64 = volumes.iter().sum();
    let zero_volume = tol::SUPPORT * dim.max(1.0);
    let mut acc = 0.0;
    for (i, (&p, &v)) in probs.iter().zip(volumes).enumerate() {
        if p <= 0.0 {
            continue;
        }
        if v <= zero_volume {
            if p <= tol::PROB_FLOOR {
                continue;
            }
            return Err(Error::ZeroVolumeOutcome { label: i.to_string() });
        }
        acc -= p * (p / v).ln();
    }
    Ok(acc)
}

/// `S_C(ρ)` for a POVM.
pub fn observational_entropy(rho: &DensityMatrix, c: &Povm) -> Result<f64> {
    let (p, v) = c.statistics(rho)?;
    observational_entropy_from_stats(p.probs(), &v)
}

/// `S_C(ρ)` for any coarse-graining; sequences are composed first.
pub fn observational_entropy_of(rho: &DensityMatrix, c: &Measurement) -> Result<f64> {
    check_dims(c.dim(), rho.dim())?;
    observational_entropy(rho, &c.povm()?)
}

/// KL divergence between the outcome distributions an instrument induces on two states.
pub fn observed_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, c: &Instrument) -> Result<EntropyValue> {
    check_dims(rho.dim(), sigma.dim())?;
    let povm = c.povm();
    let (p, _) = povm.statistics(rho)?;
    let (q, _) = povm.statistics(sigma)?;
    kl_divergence(&p, &q)
}

/// Root fidelity `‖√ρ √σ‖₁`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let sqrt = |s: &DensityMatrix| s.eigen().map_spectrum(|x| x.max(0.0).sqrt(), true);
    let a = sqrt(rho)?;
    let b = sqrt(sigma)?;
    Ok(trace_norm(&(a.matrix() * b.matrix())))
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    Ok(0.5 * trace_norm(&(rho.matrix() - sigma.matrix())))
}
