use std::path::{Path, PathBuf};

use serde::Serialize;

use super::document::{
    as_measurement, instrument_doc, load_file, povm_doc, sequence_doc, state_doc, stochastic_doc,
    wrong_kind, Loaded, StateDoc, SCHEMA,
};
use super::{emit, Cli, CliError, RandomArgs, RandomKind, SuiteChoice, VerifyArgs};
use crate::entropy::{
    fidelity, observational_entropy_from_stats, quantum_relative_entropy, trace_distance, von_neumann_entropy,
    EntropyValue,
};
use crate::error::Error;
use crate::objects::{CoarseGrainingSequence, DensityMatrix, Instrument, Measurement, StochasticMatrix};
use crate::random::Sampler;
use crate::recovery::{recovered_state, recovered_state_from_stats};
use crate::theorems::{
    jeffrey_agreement_report, monotone_chain_report, run_instance, run_suite, thm2_report, thm_concavity_report,
    thm_refinement_report, thm_sandwich_report, thm_sequential_report, BatchConfig, ConcavityInput, Real, Suite,
    SuiteRun, VerificationReport,
};
use crate::tol;

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    match load_file(path)? {
        Loaded::State(s) => Ok(s),
        other => Err(wrong_kind(&name(path), "state", other.kind())),
    }
}

fn load_measurement(path: &Path) -> Result<Measurement, CliError> {
    as_measurement(load_file(path)?, &name(path))
}

fn check_dims(state: &DensityMatrix, m: &Measurement) -> Result<(), CliError> {
    if state.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: state.dim(),
        }
        .into());
    }
    Ok(())
}

/// Converts nats to the requested display unit.
struct Units {
    scale: f64,
    name: &'static str,
}

impl Units {
    fn of(cli: &Cli) -> Self {
        if cli.bits {
            Units {
                scale: 1.0 / std::f64::consts::LN_2,
                name: "bits",
            }
        } else {
            Units {
                scale: 1.0,
                name: "nats",
            }
        }
    }

    fn real(&self, x: f64) -> Real {
        Real(x * self.scale)
    }

    fn value(&self, x: EntropyValue) -> Real {
        Real(x.as_f64() * self.scale)
    }
}

#[derive(Serialize)]
struct OutcomeRow {
    label: String,
    p: f64,
    volume: f64,
    /// `p / V`; absent for a zero-volume outcome.
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct EntropyReport {
    schema: &'static str,
    kind: &'static str,
    units: &'static str,
    dim: usize,
    observational_entropy: Real,
    von_neumann_entropy: Real,
    gap: Real,
    outcomes: Vec<OutcomeRow>,
}

fn to_json<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("report serializes")
}

pub fn cmd_entropy(state: &Path, measurement: &Path, cli: &Cli) -> Result<(), CliError> {
    let rho = load_state(state)?;
    let m = load_measurement(measurement)?;
    check_dims(&rho, &m)?;
    let povm = m.povm()?;
    let (stats, volumes) = povm.statistics(&rho)?;
    let s_c = observational_entropy_from_stats(stats.probs(), &volumes)?;
    let s = von_neumann_entropy(&rho);
    let units = Units::of(cli);
    let zero = tol::SUPPORT * rho.dim() as f64;
    let outcomes = stats
        .labels()
        .iter()
        .zip(stats.probs())
        .zip(&volumes)
        .map(|((l, &p), &v)| OutcomeRow {
            label: l.to_string(),
            p,
            volume: v,
            ratio: (v > zero).then(|| p / v),
        })
        .collect();
    let report = EntropyReport {
        schema: SCHEMA,
        kind: "entropy_report",
        units: units.name,
        dim: rho.dim(),
        observational_entropy: units.real(s_c),
        von_neumann_entropy: units.real(s),
        gap: units.real(s_c - s),
        outcomes,
    };
    emit(&to_json(&report), cli.out.as_ref())
}

#[derive(Serialize)]
struct Normalization {
    source: &'static str,
    total: f64,
}

#[derive(Serialize)]
struct RecoveryInfo {
    units: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalization: Option<Normalization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    observational_entropy: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    von_neumann_entropy: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_entropy: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_distance: Option<f64>,
    /// The certified bound `S_C − S ≥ D(ρ‖ρ_rec)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<BoundInfo>,
}

#[derive(Serialize)]
struct BoundInfo {
    gap: Real,
    relative_entropy: Real,
    slack: Real,
    holds: bool,
}

#[derive(Serialize)]
struct RecoverOutput {
    #[serde(flatten)]
    state: StateDoc,
    recovery: RecoveryInfo,
}

pub fn cmd_recover(state: Option<&Path>, stats: Option<&Path>, measurement: &Path, cli: &Cli) -> Result<(), CliError> {
    let m = load_measurement(measurement)?;
    let povm = m.povm()?;
    let units = Units::of(cli);
    let mut info = RecoveryInfo {
        units: units.name,
        normalization: None,
        observational_entropy: None,
        von_neumann_entropy: None,
        relative_entropy: None,
        fidelity: None,
        trace_distance: None,
        bound: None,
    };
    let rec = match (state, stats) {
        (Some(path), _) => {
            let rho = load_state(path)?;
            check_dims(&rho, &m)?;
            let rec = recovered_state(&rho, &povm)?;
            let (p, v) = povm.statistics(&rho)?;
            let s_c = observational_entropy_from_stats(p.probs(), &v)?;
            let s = von_neumann_entropy(&rho);
            let d = quantum_relative_entropy(&rho, &rec)?;
            let gap = s_c - s;
            let slack = match d {
                EntropyValue::Finite(x) => gap - x,
                EntropyValue::Infinite => f64::NEG_INFINITY,
            };
            info.observational_entropy = Some(units.real(s_c));
            info.von_neumann_entropy = Some(units.real(s));
            info.relative_entropy = Some(units.value(d));
            info.fidelity = Some(fidelity(&rho, &rec)?);
            info.trace_distance = Some(trace_distance(&rho, &rec)?);
            info.bound = Some(BoundInfo {
                gap: units.real(gap),
                relative_entropy: units.value(d),
                slack: units.real(slack),
                holds: slack >= -tol::INEQUALITY,
            });
            rec
        }
        (None, Some(path)) => {
            let (dist, from_counts, total) = match load_file(path)? {
                Loaded::Distribution {
                    dist,
                    from_counts,
                    total,
                } => (dist, from_counts, total),
                other => return Err(wrong_kind(&name(path), "distribution", other.kind())),
            };
            info.normalization = Some(Normalization {
                source: if from_counts { "counts" } else { "probabilities" },
                total,
            });
            recovered_state_from_stats(&dist, &povm)?
        }
        (None, None) => return Err(CliError::Usage("recover needs --state or --stats".into())),
    };
    let out = RecoverOutput {
        state: state_doc(&rec),
        recovery: info,
    };
    emit(&to_json(&out), cli.out.as_ref())
}

#[derive(Serialize)]
struct Aggregate {
    instances: usize,
    failures: usize,
    errors: usize,
    indeterminate_checks: usize,
    max_residual: Real,
    min_slack: Real,
}

#[derive(Serialize)]
struct BatchOutput {
    schema: &'static str,
    kind: &'static str,
    seed: u64,
    n: usize,
    dims: [usize; 2],
    aggregate: Aggregate,
    suites: Vec<SuiteRun>,
}

#[derive(Serialize)]
struct SingleOutput {
    schema: &'static str,
    kind: &'static str,
    reports: Vec<VerificationReport>,
}

/// Joint vectors are kept only with `--verbose`, and then capped in length.
fn trim(r: &mut VerificationReport, verbose: bool) {
    if verbose {
        r.compact();
    } else {
        r.vectors.clear();
    }
}

fn failed_checks(r: &VerificationReport) -> String {
    r.checks
        .iter()
        .filter(|c| c.status == crate::theorems::CheckStatus::Failed)
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_verify(args: &VerifyArgs, cli: &Cli) -> Result<(), CliError> {
    if !args.state.is_empty() || !args.measurement.is_empty() {
        return verify_inputs(args, cli);
    }
    let suites: Vec<Suite> = match args.suite {
        SuiteChoice::All => Suite::ALL.to_vec(),
        SuiteChoice::One(s) => vec![s],
    };
    let cfg = BatchConfig {
        seed: cli.seed,
        n: args.n,
        dims: args.dims,
    };
    cfg.validate()?;

    if let Some(index) = args.index {
        let mut reports = Vec::new();
        for suite in suites {
            let mut r = run_instance(suite, cfg.seed, index, cfg.dims)?;
            trim(&mut r, cli.verbose);
            reports.push(r);
        }
        let failures = reports.iter().filter(|r| !r.passed).count();
        emit(
            &to_json(&SingleOutput {
                schema: SCHEMA,
                kind: "verification",
                reports,
            }),
            cli.out.as_ref(),
        )?;
        return if failures == 0 {
            Ok(())
        } else {
            Err(CliError::VerifyFailed { failures })
        };
    }

    let mut runs = Vec::with_capacity(suites.len());
    let mut agg = Aggregate {
        instances: 0,
        failures: 0,
        errors: 0,
        indeterminate_checks: 0,
        max_residual: Real(0.0),
        min_slack: Real(f64::INFINITY),
    };
    for suite in suites {
        log::info!("running {suite}: {} instances", cfg.n);
        let mut run = run_suite(suite, &cfg)?;
        let s = &run.summary;
        eprintln!(
            "{suite}: {} instances, {} failed, {} errors, max residual {:e}, min slack {:e}",
            s.instances, s.failures, s.errors, s.max_residual.0, s.min_slack.0
        );
        for inst in run.instances.iter().filter(|i| !i.passed()) {
            let why = match (&inst.report, &inst.error) {
                (Some(r), _) => failed_checks(r),
                (None, Some(e)) => e.clone(),
                (None, None) => String::new(),
            };
            eprintln!(
                "FAIL {suite} seed={} index={}: {why} (replay: obsent verify --suite {suite} --seed {} --dims {}..{} --index {})",
                cfg.seed, inst.index, cfg.seed, cfg.dims.0, cfg.dims.1, inst.index
            );
        }
        agg.instances += s.instances;
        agg.failures += s.failures;
        agg.errors += s.errors;
        agg.indeterminate_checks += s.indeterminate_checks;
        agg.max_residual = Real(agg.max_residual.0.max(s.max_residual.0));
        agg.min_slack = Real(agg.min_slack.0.min(s.min_slack.0));
        for inst in run.instances.iter_mut() {
            if let Some(r) = inst.report.as_mut() {
                trim(r, cli.verbose);
            }
        }
        runs.push(run);
    }
    let failures = agg.failures + agg.errors;
    let out = BatchOutput {
        schema: SCHEMA,
        kind: "verification",
        seed: cfg.seed,
        n: cfg.n,
        dims: [cfg.dims.0, cfg.dims.1],
        aggregate: agg,
        suites: runs,
    };
    emit(&to_json(&out), cli.out.as_ref())?;
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::VerifyFailed { failures })
    }
}

fn one<'a>(paths: &'a [PathBuf], flag: &str) -> Result<&'a Path, CliError> {
    match paths {
        [p] => Ok(p),
        _ => Err(CliError::Usage(format!("expected exactly one --{flag}"))),
    }
}

fn load_instrument(path: &Path) -> Result<Instrument, CliError> {
    match load_file(path)? {
        Loaded::Instrument(i) => Ok(i),
        Loaded::Povm(p) => Ok(p.luders_instrument()?),
        other => Err(wrong_kind(&name(path), "instrument or povm", other.kind())),
    }
}

fn verify_inputs(args: &VerifyArgs, cli: &Cli) -> Result<(), CliError> {
    let SuiteChoice::One(suite) = args.suite else {
        return Err(CliError::Usage("verifying given inputs needs a single --suite".into()));
    };
    let sequence = |m: Measurement| -> Result<CoarseGrainingSequence, CliError> { Ok(m.sequence()?) };
    let mut report = match suite {
        Suite::Thm2 => {
            let rho = load_state(one(&args.state, "state")?)?;
            let m = load_measurement(one(&args.measurement, "measurement")?)?;
            thm2_report(&rho, &m)?
        }
        Suite::Seq | Suite::Sandwich => {
            let rho = load_state(one(&args.state, "state")?)?;
            let seq = sequence(load_measurement(one(&args.measurement, "measurement")?)?)?;
            let next_path = args
                .next
                .as_deref()
                .ok_or_else(|| CliError::Usage(format!("--suite {suite} needs --next")))?;
            let next = load_instrument(next_path)?;
            if suite == Suite::Seq {
                thm_sequential_report(&rho, &seq, &next)?
            } else {
                thm_sandwich_report(&rho, &seq, &next)?
            }
        }
        Suite::Refine => {
            let rho = load_state(one(&args.state, "state")?)?;
            let povm = load_measurement(one(&args.measurement, "measurement")?)?.povm()?;
            let v_path = args
                .stochastic
                .as_deref()
                .ok_or_else(|| CliError::Usage("--suite refine needs --stochastic".into()))?;
            let v: StochasticMatrix = match load_file(v_path)? {
                Loaded::Stochastic(v) => v,
                other => return Err(wrong_kind(&name(v_path), "stochastic", other.kind())),
            };
            thm_refinement_report(&rho, &povm, &v)?
        }
        Suite::Concavity => {
            let weights = |n: usize| -> Vec<f64> {
                if args.weights.is_empty() {
                    vec![1.0 / n as f64; n]
                } else {
                    args.weights.clone()
                }
            };
            if args.state.len() > 1 {
                let states = args.state.iter().map(|p| load_state(p)).collect::<Result<Vec<_>, _>>()?;
                let povm = load_measurement(one(&args.measurement, "measurement")?)?.povm()?;
                let input = ConcavityInput::States {
                    states: &states,
                    measurement: &povm,
                };
                thm_concavity_report(input, &weights(states.len()))?
            } else {
                let rho = load_state(one(&args.state, "state")?)?;
                let povms = args
                    .measurement
                    .iter()
                    .map(|p| Ok(load_measurement(p)?.povm()?))
                    .collect::<Result<Vec<_>, CliError>>()?;
                let input = ConcavityInput::Povms {
                    povms: &povms,
                    state: &rho,
                };
                thm_concavity_report(input, &weights(povms.len()))?
            }
        }
        Suite::Chain => {
            let rho = load_state(one(&args.state, "state")?)?;
            let seq = sequence(load_measurement(one(&args.measurement, "measurement")?)?)?;
            monotone_chain_report(&rho, &seq)?
        }
        Suite::Jeffrey => {
            let rho = load_state(one(&args.state, "state")?)?;
            let povm = load_measurement(one(&args.measurement, "measurement")?)?.povm()?;
            jeffrey_agreement_report(&rho, &povm)?
        }
    };
    trim(&mut report, cli.verbose);
    let passed = report.passed;
    if !passed {
        eprintln!("FAIL {suite}: {}", failed_checks(&report));
    }
    emit(
        &to_json(&SingleOutput {
            schema: SCHEMA,
            kind: "verification",
            reports: vec![report],
        }),
        cli.out.as_ref(),
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed { failures: 1 })
    }
}

pub fn cmd_random(args: &RandomArgs, cli: &Cli) -> Result<(), CliError> {
    if args.dim == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    if args.outcomes == 0 || args.kraus == 0 || args.steps == 0 {
        return Err(CliError::Usage("--outcomes, --kraus and --steps must be at least 1".into()));
    }
    let mut s = Sampler::new(cli.seed, args.stream);
    let d = args.dim;
    let value = match args.kind {
        RandomKind::State => {
            let rho = if args.pure {
                s.pure_state(d)
            } else {
                let rank = args.rank.unwrap_or(d);
                if rank == 0 || rank > d {
                    return Err(CliError::Usage(format!("--rank must lie in 1..={d}")));
                }
                s.mixed_state(d, rank)
            };
            to_json(&state_doc(&rho))
        }
        RandomKind::Povm => {
            let povm = if args.projective {
                s.projective_povm(d, args.outcomes)?
            } else if args.commuting {
                s.commuting_povm(d, args.outcomes)?
            } else {
                s.povm(d, args.outcomes)?
            };
            to_json(&povm_doc(&povm))
        }
        RandomKind::Instrument => to_json(&instrument_doc(&s.instrument(d, args.outcomes, args.kraus)?)),
        RandomKind::Sequence => {
            let steps = (0..args.steps)
                .map(|_| s.instrument(d, args.outcomes, args.kraus))
                .collect::<Result<Vec<_>, _>>()?;
            to_json(&sequence_doc(&CoarseGrainingSequence::new(steps)?))
        }
        RandomKind::Stochastic => {
            let rows = args.rows.unwrap_or(args.outcomes);
            let cols = args.cols.unwrap_or(d);
            if rows == 0 || cols == 0 {
                return Err(CliError::Usage("--rows and --cols must be at least 1".into()));
            }
            to_json(&stochastic_doc(&s.stochastic(rows, cols)?))
        }
    };
    emit(&value, cli.out.as_ref())
}
