//! Numerical tolerances shared by every module.
//!
//! All values assume double precision and dimensions up to a few dozen.

/// Largest `|m - m^dag|` entry accepted when symmetrizing an input matrix.
pub const HERM_INPUT: f64 = 1e-8;
/// Eigenvalues down to `-PSD` are accepted as zero.
pub const PSD: f64 = 1e-9;
/// Support cutoff, relative to the largest eigenvalue magnitude.
pub const SUPPORT: f64 = 1e-12;
/// Probabilities at or below this are treated as zero in `0 ln 0` terms.
pub const PROB_FLOOR: f64 = 1e-12;
/// Trace weight outside a support that still counts as "inside".
pub const SUPPORT_LEAK: f64 = 1e-9;
/// Trace weight outside `supp(E(sigma))` tolerated by the Petz map.
pub const PETZ_LEAK: f64 = 1e-8;

/// State trace must be within this of 1.
pub const TRACE: f64 = 1e-9;
/// States whose trace is off by at most this are renormalized.
pub const TRACE_RENORMALIZE: f64 = 1e-6;
/// POVM completeness, `max |sum Pi - 1|`.
pub const POVM_SUM: f64 = 1e-8;
/// Volumes must sum to the dimension within this.
pub const VOLUME_SUM: f64 = 1e-7;
/// Column sums of a stochastic matrix.
pub const STOCHASTIC_SUM: f64 = 1e-10;
/// Distribution entries down to `-DIST_NEGATIVE` are clipped to zero.
pub const DIST_NEGATIVE: f64 = 1e-12;
/// Distributions must sum to one within this.
pub const DIST_SUM: f64 = 1e-9;

/// Identity residuals in verification reports.
pub const IDENTITY: f64 = 1e-9;
/// Inequality slack in verification reports.
pub const INEQUALITY: f64 = 1e-8;
/// A gap at or below this counts as zero for equality conditions.
pub const EQUALITY: f64 = 1e-9;
/// Trace distance under which two states count as equal.
pub const STATE_EQUALITY: f64 = 1e-7;
/// Entry-wise distance under which two distributions count as equal.
pub const DIST_EQUALITY: f64 = 1e-9;
/// Commutator norm below which two POVM elements commute.
pub const COMMUTATOR: f64 = 1e-9;
/// Trace-norm distance allowed between the two routes to the recovered state.
pub const PETZ_TWO_PATH: f64 = 1e-8;
/// Column sums of a computed backward stochastic matrix.
pub const BACKWARD_SUM: f64 = 1e-10;
