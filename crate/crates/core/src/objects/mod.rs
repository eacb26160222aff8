//! States, POVMs, instruments, sequences of instruments, and the classical
//! objects (distributions, stochastic matrices) that their statistics live in.

mod classical;
mod coarse;
mod measurement;
mod state;

pub use classical::{ClassicalDistribution, OutcomeLabel, StochasticMatrix};
pub use coarse::Measurement;
pub use measurement::{
    apply_stochastic, backward_stochastic, compose_sequence, compose_sequence_with_cap, mix_povms,
    outcome_statistics, post_measurement_states, povm_of_instrument, CoarseGrainingSequence,
    Instrument, KrausMap, PostMeasurementBranch, Povm, DEFAULT_BRANCH_CAP,
};
pub(crate) use measurement::check_weights;
pub use state::DensityMatrix;
