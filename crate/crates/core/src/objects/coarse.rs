use super::measurement::{compose_sequence, CoarseGrainingSequence, Instrument, Povm};
use crate::error::Result;

/// Any coarse-graining the entropy routines accept.
///
/// A bare POVM is promoted to its Lüders instrument wherever an instrument is
/// needed.
#[derive(Debug, Clone)]
pub enum Measurement {
    Povm(Povm),
    Instrument(Instrument),
    Sequence(CoarseGrainingSequence),
}

impl Measurement {
    pub fn dim(&self) -> usize {
        match self {
            Measurement::Povm(p) => p.dim(),
            Measurement::Instrument(i) => i.dim(),
            Measurement::Sequence(s) => s.dim(),
        }
    }

    /// The POVM of the whole coarse-graining (composed, for a sequence).
    pub fn povm(&self) -> Result<Povm> {
        Ok(match self {
            Measurement::Povm(p) => p.clone(),
            Measurement::Instrument(i) => i.povm(),
            Measurement::Sequence(s) => compose_sequence(s)?.povm(),
        })
    }

    pub fn instrument(&self) -> Result<Instrument> {
        match self {
            Measurement::Povm(p) => p.luders_instrument(),
            Measurement::Instrument(i) => Ok(i.clone()),
            Measurement::Sequence(s) => compose_sequence(s),
        }
    }

    /// The measurement viewed as a sequence of instruments.
    pub fn sequence(&self) -> Result<CoarseGrainingSequence> {
        match self {
            Measurement::Sequence(s) => Ok(s.clone()),
            other => Ok(CoarseGrainingSequence::single(other.instrument()?)),
        }
    }
}

impl From<Povm> for Measurement {
    fn from(p: Povm) -> Self {
        Measurement::Povm(p)
    }
}

impl From<Instrument> for Measurement {
    fn from(i: Instrument) -> Self {
        Measurement::Instrument(i)
    }
}

impl From<CoarseGrainingSequence> for Measurement {
    fn from(s: CoarseGrainingSequence) -> Self {
        Measurement::Sequence(s)
    }
}
