use obsent::cli::document::{parse_document, povm_doc, sequence_doc, state_doc, stochastic_doc, to_value};
use obsent::entropy::{
    fidelity, kl_divergence_slices, observational_entropy, quantum_relative_entropy, trace_distance,
    von_neumann_entropy,
};
use obsent::linalg::max_abs;
use obsent::objects::{apply_stochastic, compose_sequence, mix_povms, povm_of_instrument};
use obsent::random::{random_mixed, random_povm, random_pure, Sampler, SamplerConfig};
use obsent::recovery::recovered_state;
use obsent::{CoarseGrainingSequence, ComplexMatrix, DensityMatrix, HermitianOperator, Povm};
use proptest::prelude::*;

fn sum_deviation(c: &Povm) -> f64 {
    let d = c.dim();
    let total = c
        .elements()
        .iter()
        .fold(HermitianOperator::zeros(d), |acc, e| acc.add(e));
    max_abs(&(total.matrix() - ComplexMatrix::identity(d, d)))
}

fn setup(seed: u64, stream: u64) -> (Sampler, usize) {
    let mut s = Sampler::new(seed, stream);
    let d = s.int_in(1, 5);
    (s, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_states_are_valid(seed in any::<u64>(), dim in 1usize..=6, pure in any::<bool>()) {
        let cfg = SamplerConfig::new(seed, dim);
        let rho = if pure { random_pure(&cfg) } else { random_mixed(&cfg) };
        prop_assert!((rho.op().trace() - 1.0).abs() <= 1e-10);
        prop_assert!(rho.eigenvalues().iter().all(|&x| x >= 0.0));
        let s = von_neumann_entropy(&rho);
        prop_assert!(s >= -1e-12 && s <= (dim as f64).ln() + 1e-10);
        if pure {
            prop_assert!(s <= 1e-10);
            prop_assert!((rho.purity() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), dim in 1usize..=5, k in 1usize..=4) {
        let mut cfg = SamplerConfig::new(seed, dim);
        cfg.outcome_count = k;
        let (x, y) = (random_mixed(&cfg), random_mixed(&cfg));
        prop_assert_eq!(x.matrix(), y.matrix());
        let a = random_povm(&cfg).unwrap();
        let b = random_povm(&cfg).unwrap();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            prop_assert_eq!(x.matrix(), y.matrix());
        }
    }

    #[test]
    fn sampled_measurements_are_complete(seed in any::<u64>(), stream in any::<u64>(), k in 1usize..=5, kraus in 1usize..=3) {
        let (mut s, d) = setup(seed, stream);
        prop_assert!(sum_deviation(&s.povm(d, k).unwrap()) <= 1e-10);
        prop_assert!(sum_deviation(&s.commuting_povm(d, k).unwrap()) <= 1e-10);
        prop_assert!(sum_deviation(&s.instrument(d, k, kraus).unwrap().povm()) <= 1e-10);
        if k <= d {
            prop_assert!(sum_deviation(&s.projective_povm(d, k).unwrap()) <= 1e-10);
        }
        let v = s.stochastic(k, d).unwrap();
        prop_assert!(v.column_sums().iter().all(|c| (c - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn observational_entropy_bounds(seed in any::<u64>(), stream in any::<u64>(), k in 1usize..=5) {
        let (mut s, d) = setup(seed, stream);
        let rank = s.int_in(1, d);
        let rho = s.mixed_state(d, rank);
        let c = s.povm(d, k).unwrap();
        let s_c = observational_entropy(&rho, &c).unwrap();
        let s_vn = von_neumann_entropy(&rho);
        prop_assert!(s_c >= s_vn - 1e-8);
        prop_assert!(s_c <= (d as f64).ln() + 1e-8);
    }

    #[test]
    fn recovered_state_is_closer_than_gap(seed in any::<u64>(), stream in any::<u64>(), k in 1usize..=5) {
        let (mut s, d) = setup(seed, stream);
        let rank = s.int_in(1, d);
        let rho = s.mixed_state(d, rank);
        let c = s.povm(d, k).unwrap();
        let rec = recovered_state(&rho, &c).unwrap();
        prop_assert!((rec.op().trace() - 1.0).abs() <= 1e-10);
        let gap = observational_entropy(&rho, &c).unwrap() - von_neumann_entropy(&rho);
        let dist = quantum_relative_entropy(&rho, &rec).unwrap();
        prop_assert!(dist.is_finite());
        prop_assert!(gap >= dist.as_f64() - 1e-8);
        let f = fidelity(&rho, &rec).unwrap();
        let t = trace_distance(&rho, &rec).unwrap();
        prop_assert!(1.0 - f <= t + 1e-8);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-8);
    }

    #[test]
    fn projective_recovery_is_idempotent(seed in any::<u64>(), stream in any::<u64>()) {
        let (mut s, d) = setup(seed, stream);
        let rho = s.mixed_state(d, d);
        let k = s.int_in(1, d);
        let c = s.projective_povm(d, k).unwrap();
        let once = recovered_state(&rho, &c).unwrap();
        let twice = recovered_state(&once, &c).unwrap();
        let (p1, _) = c.statistics(&rho).unwrap();
        let (p2, _) = c.statistics(&once).unwrap();
        for (a, b) in p1.probs().iter().zip(p2.probs()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        prop_assert!(trace_distance(&once, &twice).unwrap() <= 1e-9);
    }

    #[test]
    fn post_processing_never_lowers_entropy(seed in any::<u64>(), stream in any::<u64>(), k in 1usize..=5) {
        let (mut s, d) = setup(seed, stream);
        let rho = s.mixed_state(d, d);
        let c = s.povm(d, k).unwrap();
        let rows = s.int_in(1, k);
        let v = s.stochastic(rows, k).unwrap();
        let coarse = apply_stochastic(&c, &v).unwrap();
        let fine = observational_entropy(&rho, &c).unwrap();
        prop_assert!(observational_entropy(&rho, &coarse).unwrap() >= fine - 1e-8);
    }

    #[test]
    fn longer_sequences_never_raise_entropy(seed in any::<u64>(), stream in any::<u64>()) {
        let (mut s, d) = setup(seed, stream);
        let rho = s.mixed_state(d, d);
        let steps: Vec<_> = (0..3).map(|_| s.instrument(d, 2, 1).unwrap()).collect();
        let mut last = (d as f64).ln() + 1e-8;
        for n in 1..=3 {
            let seq = CoarseGrainingSequence::new(steps[..n].to_vec()).unwrap();
            let c = povm_of_instrument(&compose_sequence(&seq).unwrap());
            let e = observational_entropy(&rho, &c).unwrap();
            prop_assert!(e <= last + 1e-8);
            last = e;
        }
        prop_assert!(last >= von_neumann_entropy(&rho) - 1e-8);
    }

    #[test]
    fn entropy_is_concave_in_the_measurement(seed in any::<u64>(), stream in any::<u64>()) {
        let (mut s, d) = setup(seed, stream);
        let rho = s.mixed_state(d, d);
        let a = s.povm(d, 3).unwrap();
        let b = s.povm(d, 3).unwrap();
        let w = s.weights(2);
        let mixed = mix_povms(&[a.clone(), b.clone()], &w).unwrap();
        let lhs = w[0] * observational_entropy(&rho, &a).unwrap() + w[1] * observational_entropy(&rho, &b).unwrap();
        prop_assert!(observational_entropy(&rho, &mixed).unwrap() >= lhs - 1e-8);
    }

    #[test]
    fn kl_is_nonnegative(seed in any::<u64>(), n in 1usize..=8) {
        let mut s = Sampler::new(seed, 0);
        let p = s.weights(n);
        let q = s.weights(n);
        prop_assert!(kl_divergence_slices(&p, &q).unwrap().as_f64() >= -1e-12);
        prop_assert!(kl_divergence_slices(&p, &p).unwrap().as_f64().abs() <= 1e-12);
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), stream in any::<u64>()) {
        let (mut s, d) = setup(seed, stream);
        let values = [
            serde_json::to_value(state_doc(&s.mixed_state(d, d))).unwrap(),
            serde_json::to_value(povm_doc(&s.povm(d, 3).unwrap())).unwrap(),
            serde_json::to_value(sequence_doc(
                &CoarseGrainingSequence::new(vec![s.instrument(d, 2, 2).unwrap(), s.instrument(d, 2, 1).unwrap()]).unwrap(),
            )).unwrap(),
            serde_json::to_value(stochastic_doc(&s.stochastic(3, 2).unwrap())).unwrap(),
        ];
        for v in values {
            let text = serde_json::to_string(&v).unwrap();
            let again = to_value(&parse_document(&text, "doc.json").unwrap());
            prop_assert_eq!(&again, &v);
        }
    }
}

#[test]
fn maximally_mixed_state_hits_log_dim() {
    for d in 1..=6 {
        let rho = DensityMatrix::maximally_mixed(d);
        let mut s = Sampler::new(3, d as u64);
        let c = s.povm(d, 4).unwrap();
        assert!((observational_entropy(&rho, &c).unwrap() - (d as f64).ln()).abs() <= 1e-10);
    }
}

#[test]
fn ten_thousand_draws_pass_invariants() {
    for i in 0..10_000u64 {
        let mut s = Sampler::new(11, i);
        let d = s.int_in(1, 4);
        let k = s.int_in(1, 4);
        let rank = s.int_in(1, d);
        let rho = s.mixed_state(d, rank);
        assert!(DensityMatrix::new(rho.op().clone()).is_ok(), "draw {i}");
        let c = s.povm(d, k).unwrap();
        assert!(Povm::new(c.labels().to_vec(), c.elements().to_vec()).is_ok(), "draw {i}");
        assert!(sum_deviation(&s.instrument(d, k, 2).unwrap().povm()) <= 1e-10, "draw {i}");
        let v = s.stochastic(k, d).unwrap();
        assert!(v.column_sums().iter().all(|c| (c - 1.0).abs() <= 1e-12), "draw {i}");
    }
}
