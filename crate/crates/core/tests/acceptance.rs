//! Acceptance battery. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::process::Command;
use std::time::{Duration, Instant};

use obsent::entropy::{observational_entropy, trace_distance, von_neumann_entropy};
use obsent::objects::{compose_sequence, povm_of_instrument};
use obsent::random::Sampler;
use obsent::recovery::{petz_recovered_state, recovered_state};
use obsent::theorems::{run_instance, run_suite, BatchConfig, Suite, VerificationReport};
use obsent::{CoarseGrainingSequence, DensityMatrix, Povm};

const SEED: u64 = 7;
const DIMS: (usize, usize) = (2, 6);

struct Outcome {
    id: usize,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

/// Tracks the worst value seen and whether any instance broke the bound.
#[derive(Default)]
struct Tally {
    worst: f64,
    violations: usize,
    counted: usize,
}

impl Tally {
    fn at_most(&mut self, x: f64, bound: f64) {
        self.counted += 1;
        if x.is_nan() || x > bound {
            self.violations += 1;
        }
        if self.counted == 1 || x > self.worst || x.is_nan() {
            self.worst = x;
        }
    }

    fn at_least(&mut self, x: f64, bound: f64) {
        self.counted += 1;
        if x.is_nan() || x < bound {
            self.violations += 1;
        }
        if self.counted == 1 || x < self.worst || x.is_nan() {
            self.worst = x;
        }
    }

    fn ok(&self) -> bool {
        self.violations == 0 && self.counted > 0
    }
}

fn q(r: &VerificationReport, name: &str) -> f64 {
    r.value(name).unwrap_or_else(|| panic!("{} lacks {name}", r.theorem))
}

fn slack(r: &VerificationReport, check: &str) -> f64 {
    let c = r.get(check).unwrap_or_else(|| panic!("{} lacks {check}", r.theorem));
    c.slack.unwrap_or(f64::NAN)
}

fn batch(suite: Suite, n: usize) -> Vec<VerificationReport> {
    let run = run_suite(suite, &BatchConfig { seed: SEED, n, dims: DIMS }).unwrap();
    run.instances
        .into_iter()
        .map(|i| {
            i.report
                .unwrap_or_else(|| panic!("{suite} instance {} errored: {:?}", i.index, i.error))
        })
        .collect()
}

fn variant(r: &VerificationReport) -> &str {
    &r.instance.as_ref().unwrap().variant
}

fn criterion_1_and_2(thm2: &[VerificationReport]) -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut identity = Tally::default();
    for r in thm2 {
        identity.at_most((q(r, "gap") - q(r, "kl_joint")).abs(), 1e-9);
    }
    let one = Outcome {
        id: 1,
        passed: identity.ok() && thm2.len() == 1000,
        detail: format!(
            "gap = KL(p1||q1) on {} instances, max |diff| {:.2e}",
            identity.counted, identity.worst
        ),
        elapsed: start.elapsed(),
    };

    let start = Instant::now();
    let mut chain = Tally::default();
    let mut fvdg = Tally::default();
    for r in thm2 {
        chain.at_least(slack(r, "gap_bounds_relative_entropy"), -1e-8);
        chain.at_least(slack(r, "relative_entropy_bounds_fidelity"), -1e-8);
        let f = q(r, "fidelity");
        let t = q(r, "trace_distance");
        fvdg.at_least(t - (1.0 - f), -1e-8);
        fvdg.at_least((1.0 - f * f).max(0.0).sqrt() - t, -1e-8);
    }
    let two = Outcome {
        id: 2,
        passed: chain.ok() && fvdg.ok(),
        detail: format!(
            "gap >= D(rho||rho_rec) >= -2 ln F min slack {:.2e}; Fuchs-van de Graaf min slack {:.2e}",
            chain.worst, fvdg.worst
        ),
        elapsed: start.elapsed(),
    };
    (one, two)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut t = Tally::default();
    for i in 0..1000u64 {
        let mut s = Sampler::new(SEED, (1 << 48) | i);
        let d = s.int_in(DIMS.0, DIMS.1);
        let rank = s.int_in(1, d);
        let k = s.int_in(1, 5);
        let kraus = s.int_in(1, 3);
        let rho = s.mixed_state(d, rank);
        let inst = s.instrument(d, k, kraus).unwrap();
        let petz = petz_recovered_state(&rho, &inst).unwrap();
        let direct = recovered_state(&rho, &inst.povm()).unwrap();
        t.at_most(2.0 * trace_distance(&petz, &direct).unwrap(), 1e-8);
    }
    Outcome {
        id: 3,
        passed: t.ok(),
        detail: format!(
            "Petz path = direct path on {} instruments, max ||diff||_1 {:.2e}",
            t.counted, t.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut mixed = Tally::default();
    let mut eigen_gap = Tally::default();
    let mut eigen_dist = Tally::default();
    for i in 0..200u64 {
        let mut s = Sampler::new(SEED, (2 << 48) | i);
        let d = s.int_in(DIMS.0, DIMS.1);
        let id = DensityMatrix::maximally_mixed(d);
        let k = s.int_in(1, 5);
        let povm = s.povm(d, k).unwrap();
        let inst = s.instrument(d, k, 2).unwrap();
        let seq = CoarseGrainingSequence::new(vec![s.instrument(d, 2, 1).unwrap(), s.instrument(d, 3, 1).unwrap()])
            .unwrap();
        let composed = povm_of_instrument(&compose_sequence(&seq).unwrap());
        for c in [&povm, &inst.povm(), &composed] {
            mixed.at_most((observational_entropy(&id, c).unwrap() - (d as f64).ln()).abs(), 1e-10);
        }

        let rho = s.mixed_state(d, d);
        let basis = Povm::from_basis(&rho.eigen().eigenvectors).unwrap();
        eigen_gap.at_most(observational_entropy(&rho, &basis).unwrap() - von_neumann_entropy(&rho), 1e-9);
        let rec = recovered_state(&rho, &basis).unwrap();
        eigen_dist.at_most(2.0 * trace_distance(&rho, &rec).unwrap(), 1e-8);
    }

    let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
    let x = obsent::theorems::thm2_report(&rho, &x_basis().into()).unwrap();
    let expected = 2f64.ln() - (-(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln()));
    let gap = q(&x, "gap");
    let d_rec = q(&x, "relative_entropy_to_recovered");
    let worked = (gap - 0.130812).abs() <= 1e-6 && (d_rec - 0.130812).abs() <= 1e-6 && (gap - expected).abs() <= 1e-12;

    Outcome {
        id: 4,
        passed: mixed.ok() && eigen_gap.ok() && eigen_dist.ok() && worked,
        detail: format!(
            "|S_C(1/d) - ln d| max {:.2e}; eigenbasis gap max {:.2e}, ||rho - rho_rec||_1 max {:.2e}; qubit gap {gap:.6} D {d_rec:.6}",
            mixed.worst, eigen_gap.worst, eigen_dist.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn x_basis() -> Povm {
    use obsent::{Complex64, ComplexMatrix};
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    );
    Povm::from_basis(&u).unwrap()
}

fn criterion_5(seq: &[VerificationReport]) -> Outcome {
    let start = Instant::now();
    let mut gap = Tally::default();
    let mut identity = Tally::default();
    let mut repeated_gap = Tally::default();
    let mut memoryless = Tally::default();
    for r in seq {
        gap.at_least(q(r, "gap"), -1e-8);
        identity.at_most((q(r, "gap") - q(r, "kl_joint")).abs(), 1e-9);
        if variant(r) == "repeated_projective" {
            repeated_gap.at_most(q(r, "gap"), 1e-9);
            memoryless.at_most(q(r, "conditional_deviation"), 1e-9);
        }
    }
    Outcome {
        id: 5,
        passed: seq.len() == 500 && gap.ok() && identity.ok() && repeated_gap.ok() && memoryless.ok(),
        detail: format!(
            "min gap {:.2e}, max |gap - KL(p2||q2)| {:.2e}; {} repeated-projective: max gap {:.2e}, max |p(i2|i1) - V(i2|i1)| {:.2e}",
            gap.worst, identity.worst, repeated_gap.counted, repeated_gap.worst, memoryless.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn criterion_6(sandwich: &[VerificationReport]) -> Outcome {
    let start = Instant::now();
    let mut bound = Tally::default();
    let mut complete = Tally::default();
    for r in sandwich {
        if r.flags.get("supports_contained") == Some(&true) {
            bound.at_least(q(r, "mean_relative_entropy") - q(r, "gap"), -1e-8);
        }
        if variant(r) == "complete_first" {
            complete.at_most(q(r, "mean_relative_entropy"), 1e-9);
        }
    }
    Outcome {
        id: 6,
        passed: bound.ok() && complete.ok(),
        detail: format!(
            "<D> >= gap on {} supported instances, min slack {:.2e}; complete first step max <D> {:.2e}",
            bound.counted, bound.worst, complete.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn criterion_7(refine: &[VerificationReport]) -> Outcome {
    let start = Instant::now();
    let mut identity = Tally::default();
    let mut joint = Tally::default();
    let mut marginal = Tally::default();
    let mut columns = Tally::default();
    for r in refine {
        let delta = q(r, "entropy_coarse") - q(r, "entropy_fine");
        identity.at_most((delta - q(r, "kl_joint")).abs(), 1e-9);
        joint.at_least(q(r, "kl_joint") - q(r, "kl_marginal"), -1e-8);
        marginal.at_least(q(r, "kl_marginal"), -1e-8);
        columns.at_most(q(r, "backward_column_error"), 1e-10);
    }
    Outcome {
        id: 7,
        passed: refine.len() == 500 && identity.ok() && joint.ok() && marginal.ok() && columns.ok(),
        detail: format!(
            "max |dS - KL(p2||q2)| {:.2e}; joint - marginal min {:.2e}; marginal min {:.2e}; backward column error max {:.2e}",
            identity.worst, joint.worst, marginal.worst, columns.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut states = Tally::default();
    let mut povms = Tally::default();
    let mut disjoint = Tally::default();
    for k in 0..500 {
        for (offset, tally) in [(0, &mut states), (1, &mut povms)] {
            let r = run_instance(Suite::Concavity, SEED, 3 * k + offset, DIMS).unwrap();
            tally.at_least(q(&r, "entropy_of_mixture") - q(&r, "mean_of_entropies"), -1e-8);
        }
        let r = run_instance(Suite::Concavity, SEED, 3 * k + 2, DIMS).unwrap();
        assert_eq!(variant(&r), "disjoint_povms");
        disjoint.at_most((q(&r, "entropy_of_mixture") - q(&r, "mean_of_entropies")).abs(), 1e-9);
    }
    Outcome {
        id: 8,
        passed: states.ok() && povms.ok() && disjoint.ok(),
        detail: format!(
            "state concavity min slack {:.2e} ({}); POVM concavity min slack {:.2e} ({}); disjoint mixing max |gap| {:.2e}",
            states.worst, states.counted, povms.worst, povms.counted, disjoint.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn criterion_9(chain: &[VerificationReport]) -> Outcome {
    let start = Instant::now();
    let mut t = Tally::default();
    for r in chain {
        let s = q(r, "von_neumann_entropy");
        let [e1, e2, e3] = [1, 2, 3].map(|n| q(r, &format!("entropy_{n}")));
        let ln_d = q(r, "log_dim");
        t.at_least(e3 - (s - 1e-8), 0.0);
        t.at_least((e2 + 1e-8) - e3, 0.0);
        t.at_least((e1 + 2e-8) - (e2 + 1e-8), 0.0);
        t.at_least((ln_d + 1e-8) - (e1 + 2e-8), 0.0);
    }
    Outcome {
        id: 9,
        passed: chain.len() == 200 && t.ok(),
        detail: format!(
            "S <= S_C3 <= S_C2 <= S_C1 <= ln d on {} sequences, min margin {:.2e}",
            chain.len(),
            t.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn criterion_10(jeffrey: &[VerificationReport]) -> Outcome {
    let start = Instant::now();
    let mut t = Tally::default();
    for r in jeffrey {
        let c = r.get("posterior_matches_recovered_diagonal").unwrap();
        t.at_most(c.residual.unwrap_or(f64::NAN), 1e-9);
    }
    Outcome {
        id: 10,
        passed: jeffrey.len() == 200 && t.ok(),
        detail: format!(
            "Jeffrey posterior = diag(rho_rec) on {} commuting POVMs, max error {:.2e}",
            t.counted, t.worst
        ),
        elapsed: start.elapsed(),
    }
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_obsent"))
        .args(args)
        .env_remove("OBSENT_SEED")
        .output()
        .expect("binary runs")
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut aggregates = Vec::new();
    let mut codes = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("verify{run}.json"));
        let o = run_cli(&[
            "verify",
            "--suite",
            "all",
            "--n",
            "200",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        codes.push(o.status.code());
        let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
        let summaries: Vec<_> = doc["suites"].as_array().unwrap().iter().map(|s| s["summary"].clone()).collect();
        aggregates.push((doc["aggregate"].clone(), summaries));
    }
    let reproducible = aggregates[0] == aggregates[1];

    let bad = dir.path().join("corrupted.json");
    std::fs::write(
        &bad,
        r#"{"schema":"obsent/1","kind":"povm","dim":2,"elements":[
            {"label":"0","matrix":[[1,0],[0,0]]},
            {"label":"1","matrix":[[0,0],[0,0.75]]}]}"#,
    )
    .unwrap();
    let state = dir.path().join("state.json");
    std::fs::write(&state, r#"{"schema":"obsent/1","kind":"state","dim":2,"matrix":[[0.5,0],[0,0.5]]}"#).unwrap();
    let o = run_cli(&[
        "entropy",
        "--state",
        state.to_str().unwrap(),
        "--measurement",
        bad.to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    let located = stderr.contains("corrupted.json: elements:");

    Outcome {
        id: 11,
        passed: codes == [Some(0), Some(0)] && reproducible && o.status.code() == Some(3) && located,
        detail: format!(
            "verify exits {:?}, aggregates identical: {reproducible}; corrupted POVM exits {:?} with diagnostic {:?}",
            codes,
            o.status.code(),
            stderr.trim()
        ),
        elapsed: start.elapsed(),
    }
}

/// Counts the batch run toward the criterion's time.
fn timed(f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    o.elapsed = start.elapsed();
    o
}

#[test]
fn acceptance_battery() {
    let battery = Instant::now();
    let mut outcomes = Vec::new();

    let t = Instant::now();
    let thm2 = batch(Suite::Thm2, 1000);
    let thm2_time = t.elapsed();
    let (mut one, mut two) = criterion_1_and_2(&thm2);
    one.elapsed += thm2_time;
    two.elapsed += thm2_time;
    if one.elapsed > Duration::from_secs(30) {
        one.passed = false;
        one.detail.push_str(" (over the 30 s budget)");
    }
    outcomes.push(one);
    outcomes.push(two);
    outcomes.push(criterion_3());
    outcomes.push(criterion_4());
    outcomes.push(timed(|| criterion_5(&batch(Suite::Seq, 500))));
    outcomes.push(timed(|| criterion_6(&batch(Suite::Sandwich, 500))));
    outcomes.push(timed(|| criterion_7(&batch(Suite::Refine, 500))));
    outcomes.push(criterion_8());
    outcomes.push(timed(|| criterion_9(&batch(Suite::Chain, 200))));
    outcomes.push(timed(|| criterion_10(&batch(Suite::Jeffrey, 200))));
    let mut eleven = criterion_11();
    let total = battery.elapsed();
    if total > Duration::from_secs(300) {
        eleven.passed = false;
        eleven.detail.push_str(" (battery over the 5 minute budget)");
    }
    outcomes.push(eleven);

    for o in &outcomes {
        println!(
            "criterion {:>2} {} [{:.1} s] {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail
        );
    }
    println!("battery finished in {:.1} s", total.as_secs_f64());
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
