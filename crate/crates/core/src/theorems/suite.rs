use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::report::{InstanceInfo, Real, VerificationReport};
use super::{
    jeffrey_agreement_report, monotone_chain_report, thm2_report, thm_concavity_report,
    thm_refinement_report, thm_sandwich_report, thm_sequential_report, ConcavityInput,
};
use crate::error::{Error, Result};
use crate::objects::{CoarseGrainingSequence, DensityMatrix, Instrument, Measurement, OutcomeLabel, Povm};
use crate::random::Sampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thm2,
    Seq,
    Sandwich,
    Refine,
    Concavity,
    Chain,
    Jeffrey,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Thm2,
        Suite::Seq,
        Suite::Sandwich,
        Suite::Refine,
        Suite::Concavity,
        Suite::Chain,
        Suite::Jeffrey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm2 => "thm2",
            Suite::Seq => "seq",
            Suite::Sandwich => "sandwich",
            Suite::Refine => "refine",
            Suite::Concavity => "concavity",
            Suite::Chain => "chain",
            Suite::Jeffrey => "jeffrey",
        }
    }

    fn stream(self, index: usize) -> u64 {
        let id = Suite::ALL.iter().position(|s| *s == self).expect("listed") as u64 + 1;
        (id << 40) | index as u64
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig {
                reason: format!("unknown suite {s:?}"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    pub seed: u64,
    pub n: usize,
    /// Inclusive dimension range.
    pub dims: (usize, usize),
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.dims;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidConfig {
                reason: format!("bad dimension range {lo}..{hi}"),
            });
        }
        Ok(())
    }
}

/// Outcome of one batch instance: a report, or the error it raised.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceResult {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InstanceResult {
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub seed: u64,
    pub instances: usize,
    pub failures: usize,
    pub errors: usize,
    pub indeterminate_checks: usize,
    pub max_residual: Real,
    pub min_slack: Real,
    /// Indices of failed or erroring instances.
    pub failing: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRun {
    pub summary: SuiteSummary,
    pub instances: Vec<InstanceResult>,
}

/// Evaluates instances `0..n` in parallel; results are ordered by index.
pub fn run_suite(suite: Suite, cfg: &BatchConfig) -> Result<SuiteRun> {
    cfg.validate()?;
    let instances: Vec<InstanceResult> = (0..cfg.n)
        .into_par_iter()
        .map(|index| match run_instance(suite, cfg.seed, index, cfg.dims) {
            Ok(report) => InstanceResult {
                index,
                report: Some(report),
                error: None,
            },
            Err(e) => InstanceResult {
                index,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut summary = SuiteSummary {
        suite,
        seed: cfg.seed,
        instances: instances.len(),
        failures: 0,
        errors: 0,
        indeterminate_checks: 0,
        max_residual: Real(0.0),
        min_slack: Real(f64::INFINITY),
        failing: Vec::new(),
    };
    for inst in &instances {
        match &inst.report {
            Some(r) => {
                summary.indeterminate_checks += r.indeterminate();
                summary.max_residual = Real(summary.max_residual.0.max(r.max_residual()));
                summary.min_slack = Real(summary.min_slack.0.min(r.min_slack()));
                if !r.passed {
                    summary.failures += 1;
                    summary.failing.push(inst.index);
                }
            }
            None => {
                summary.errors += 1;
                summary.failing.push(inst.index);
            }
        }
    }
    Ok(SuiteRun { summary, instances })
}

fn random_state(s: &mut Sampler, d: usize) -> DensityMatrix {
    let rank = s.int_in(1, d);
    s.mixed_state(d, rank)
}

/// A random POVM, Lüders-promoted where an instrument is needed.
fn random_povm(s: &mut Sampler, d: usize) -> Result<Povm> {
    if s.uniform() < 0.25 && d >= 2 {
        let k = s.int_in(2, d);
        s.projective_povm(d, k)
    } else {
        let k = s.int_in(2, 5);
        s.povm(d, k)
    }
}

fn random_instrument(s: &mut Sampler, d: usize, max_outcomes: usize) -> Result<Instrument> {
    let k = s.int_in(2, max_outcomes);
    let m = s.int_in(1, 2);
    s.instrument(d, k, m)
}

/// Builds and verifies instance `index` of a suite. Every fifth instance
/// (or so, per suite) is a constructed equality case.
pub fn run_instance(suite: Suite, seed: u64, index: usize, dims: (usize, usize)) -> Result<VerificationReport> {
    let mut s = Sampler::new(seed, suite.stream(index));
    let d = s.int_in(dims.0, dims.1);
    let (variant, mut report) = match suite {
        Suite::Thm2 => match index % 5 {
            0 => {
                let m = random_povm(&mut s, d)?;
                ("maximally_mixed", thm2_report(&DensityMatrix::maximally_mixed(d), &m.into())?)
            }
            1 => {
                let rho = random_state(&mut s, d);
                let eigenbasis = Povm::from_basis(&rho.eigen().eigenvectors)?;
                ("eigenbasis", thm2_report(&rho, &eigenbasis.into())?)
            }
            2 => {
                let rho = random_state(&mut s, d);
                let c = random_instrument(&mut s, d, 5)?;
                ("instrument", thm2_report(&rho, &Measurement::Instrument(c))?)
            }
            _ => {
                let rho = random_state(&mut s, d);
                let c = random_povm(&mut s, d)?;
                ("povm", thm2_report(&rho, &c.into())?)
            }
        },
        Suite::Seq | Suite::Sandwich => {
            let rho = random_state(&mut s, d);
            let (variant, seq, next) = if index.is_multiple_of(4) {
                let k = s.int_in(1, d);
                let proj = s.projective_povm(d, k)?.luders_instrument()?;
                ("repeated_projective", CoarseGrainingSequence::single(proj.clone()), proj)
            } else if index % 4 == 1 {
                let basis = s.projective_povm(d, d)?.luders_instrument()?;
                let next = random_instrument(&mut s, d, 4)?;
                ("complete_first", CoarseGrainingSequence::single(basis), next)
            } else {
                let first = random_instrument(&mut s, d, 4)?;
                let next = random_instrument(&mut s, d, 4)?;
                ("random", CoarseGrainingSequence::single(first), next)
            };
            let report = if suite == Suite::Seq {
                thm_sequential_report(&rho, &seq, &next)?
            } else {
                thm_sandwich_report(&rho, &seq, &next)?
            };
            (variant, report)
        }
        Suite::Refine => {
            let c = random_povm(&mut s, d)?;
            let (variant, rho) = if index.is_multiple_of(5) {
                ("maximally_mixed", DensityMatrix::maximally_mixed(d))
            } else {
                ("random", random_state(&mut s, d))
            };
            let v = if index % 7 == 3 {
                s.permutation(c.len())
            } else {
                let rows = s.int_in(1, c.len());
                s.stochastic(rows, c.len())?
            };
            (variant, thm_refinement_report(&rho, &c, &v)?)
        }
        Suite::Concavity => {
            let k = s.int_in(2, 4);
            let weights = s.weights(k);
            match index % 3 {
                0 => {
                    let states: Vec<DensityMatrix> = (0..k).map(|_| random_state(&mut s, d)).collect();
                    let c = random_povm(&mut s, d)?;
                    let input = ConcavityInput::States {
                        states: &states,
                        measurement: &c,
                    };
                    ("states", thm_concavity_report(input, &weights)?)
                }
                1 => {
                    let rho = random_state(&mut s, d);
                    let povms = (0..k).map(|_| random_povm(&mut s, d)).collect::<Result<Vec<_>>>()?;
                    let input = ConcavityInput::Povms {
                        povms: &povms,
                        state: &rho,
                    };
                    ("povms", thm_concavity_report(input, &weights)?)
                }
                _ => {
                    let rho = random_state(&mut s, d);
                    let povms = (0..k)
                        .map(|tag| {
                            let p = random_povm(&mut s, d)?;
                            disjoint_labels(&p, tag)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let input = ConcavityInput::Povms {
                        povms: &povms,
                        state: &rho,
                    };
                    ("disjoint_povms", thm_concavity_report(input, &weights)?)
                }
            }
        }
        Suite::Chain => {
            let rho = random_state(&mut s, d);
            let steps = (0..3)
                .map(|_| random_instrument(&mut s, d, 3))
                .collect::<Result<Vec<_>>>()?;
            ("length_3", monotone_chain_report(&rho, &CoarseGrainingSequence::new(steps)?)?)
        }
        Suite::Jeffrey => {
            let rho = random_state(&mut s, d);
            let k = s.int_in(2, 5);
            let c = s.commuting_povm(d, k)?;
            ("commuting", jeffrey_agreement_report(&rho, &c)?)
        }
    };
    report.instance = Some(InstanceInfo {
        suite: suite.name().to_string(),
        seed,
        index,
        dim: d,
        variant: variant.to_string(),
    });
    Ok(report)
}

/// Prefixes every outcome label with the POVM's tag, making outcome sets disjoint.
pub(crate) fn disjoint_labels(p: &Povm, tag: usize) -> Result<Povm> {
    let labels = p
        .labels()
        .iter()
        .map(|l| OutcomeLabel::single(format!("{tag}:{l}")))
        .collect();
    Povm::new(labels, p.elements().to_vec())
}
