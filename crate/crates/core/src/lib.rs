//! Observational entropy for finite-dimensional quantum systems.
//!
//! The crate computes the observational entropy `S_C(ρ) = −Σ pᵢ ln(pᵢ/Vᵢ)`
//! of a state under any coarse-graining (a POVM, an instrument, or a
//! sequence of instruments), the recovered coarse state
//! `ρ_rec = Σ (pᵢ/Vᵢ) Πᵢ` along with its Petz-map derivation, Jeffrey-rule
//! retrodiction, and verifiers that evaluate both sides of every identity and
//! inequality relating these quantities.
//!
//! All logarithms are natural; entropies are in nats.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod objects;
pub mod random;
pub mod recovery;
pub mod theorems;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, HermitianOperator};
pub use num_complex::Complex64;
pub use objects::{
    ClassicalDistribution, CoarseGrainingSequence, DensityMatrix, Instrument, KrausMap,
    OutcomeLabel, Povm, StochasticMatrix,
};
