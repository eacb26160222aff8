//! Verifiers that evaluate both sides of the identities and inequalities
//! relating observational entropy, relative entropy and recovery, and check
//! the associated equality conditions.

mod report;
mod suite;

pub use report::{Check, CheckStatus, InstanceInfo, Real, Relation, VerificationReport, MAX_VECTOR_LEN};
pub use suite::{run_instance, run_suite, BatchConfig, InstanceResult, Suite, SuiteRun, SuiteSummary};

use crate::entropy::{
    fidelity, kl_divergence_slices, observational_entropy, observational_entropy_from_stats,
    quantum_relative_entropy, trace_distance, von_neumann_entropy, EntropyValue,
};
use crate::error::{Error, Result};
use crate::objects::{
    apply_stochastic, backward_stochastic, compose_sequence, mix_povms, post_measurement_states,
    ClassicalDistribution, CoarseGrainingSequence, DensityMatrix, Instrument, Measurement, Povm,
    StochasticMatrix,
};
use crate::recovery::{
    commuting_basis, diagonal_in_basis, jeffrey_retrodict, likelihood_in_basis, petz_recovered_state,
    recovered_state,
};
use crate::tol;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn kl(p: &[f64], q: &[f64]) -> Result<EntropyValue> {
    kl_divergence_slices(p, q)
}

/// `S_C(ρ) ≥ S(ρ)`, the gap identity `S_C − S = D_KL(p₁‖q₁)`, the bound
/// `S_C − S ≥ D(ρ‖ρ_rec) ≥ −2 ln F`, the Fuchs–van de Graaf inequalities for
/// `ρ_rec`, agreement of `ρ_rec` with the Petz-map route, and the condition
/// that the gap vanishes exactly when `ρ = ρ_rec`.
///
/// `p₁` and `q₁` are indexed by `(i, j)` with `r_ij = ⟨ψ_j|Πᵢ|ψ_j⟩` over the
/// eigenvectors of `ρ`: `p₁ = λ_j r_ij`, `q₁ = (pᵢ/Vᵢ) r_ij`.
pub fn thm2_report(rho: &DensityMatrix, c: &Measurement) -> Result<VerificationReport> {
    check_dim(c.dim(), rho.dim())?;
    let povm = c.povm()?;
    let (stats, volumes) = povm.statistics(rho)?;
    let p = stats.probs();
    let s_c = observational_entropy_from_stats(p, &volumes)?;
    let s = von_neumann_entropy(rho);
    let gap = s_c - s;

    let eig = rho.eigen();
    let d = rho.dim();
    let zero_volume = tol::SUPPORT * d as f64;
    let mut p1 = Vec::with_capacity(povm.len() * d);
    let mut q1 = Vec::with_capacity(povm.len() * d);
    for (i, e) in povm.elements().iter().enumerate() {
        let ratio = if volumes[i] > zero_volume { p[i] / volumes[i] } else { 0.0 };
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let r = e.expectation(&eig.eigenvector(j)).max(0.0);
            p1.push(lambda.max(0.0) * r);
            q1.push(ratio * r);
        }
    }
    let kl1 = kl(&p1, &q1)?;

    let rec = recovered_state(rho, &povm)?;
    let d_rec = quantum_relative_entropy(rho, &rec)?;
    let f = fidelity(rho, &rec)?.min(1.0);
    let neg_log_f2 = if f > 0.0 {
        EntropyValue::Finite(-2.0 * f.ln())
    } else {
        EntropyValue::Infinite
    };
    let t = trace_distance(rho, &rec)?;
    let petz = petz_recovered_state(rho, &c.instrument()?)?;
    let two_path = 2.0 * trace_distance(&petz, &rec)?;

    let mut r = VerificationReport::new("thm2");
    r.quantity("observational_entropy", s_c);
    r.quantity("von_neumann_entropy", s);
    r.quantity("gap", gap);
    r.quantity("kl_joint", kl1);
    r.quantity("relative_entropy_to_recovered", d_rec);
    r.quantity("fidelity", f);
    r.quantity("minus_two_log_fidelity", neg_log_f2);
    r.quantity("trace_distance", t);
    r.quantity("petz_two_path_distance", two_path);
    r.vector("p_joint", p1);
    r.vector("q_joint", q1);
    r.vector("p", p.to_vec());
    r.vector("volumes", volumes);

    r.push(Check::at_least("entropy_above_von_neumann", s_c, s, tol::INEQUALITY));
    r.push(Check::identity("gap_equals_kl", gap, kl1, tol::IDENTITY));
    r.push(Check::at_least("gap_bounds_relative_entropy", gap, d_rec, tol::INEQUALITY));
    r.push(Check::at_least("relative_entropy_bounds_fidelity", d_rec, neg_log_f2, tol::INEQUALITY));
    r.push(Check::at_least("trace_distance_above_infidelity", t, 1.0 - f, tol::INEQUALITY));
    r.push(Check::at_least(
        "trace_distance_below_sine",
        (1.0 - f * f).max(0.0).sqrt(),
        t,
        tol::INEQUALITY,
    ));
    r.push(Check::identity("petz_two_path", two_path, 0.0, tol::PETZ_TWO_PATH));
    r.push(Check::iff(
        "gap_zero_iff_recovered",
        gap,
        tol::EQUALITY,
        2.0 * t,
        tol::STATE_EQUALITY,
    ));
    Ok(r)
}

/// Statistics of a sequence and its one-step extension, with the forward
/// prediction `q_{iⁿ⁺¹} = V(iₙ₊₁|iⁿ) p_{iⁿ}`.
struct Extension {
    first: Instrument,
    s_n: f64,
    s_n1: f64,
    p_n: Vec<f64>,
    p_n1: Vec<f64>,
    v_n1: Vec<f64>,
    q: Vec<f64>,
    conditional_deviation: f64,
}

fn extension(rho: &DensityMatrix, seq: &CoarseGrainingSequence, next: &Instrument) -> Result<Extension> {
    check_dim(seq.dim(), rho.dim())?;
    check_dim(seq.dim(), next.dim())?;
    let first = compose_sequence(seq)?;
    let full = compose_sequence(&seq.extended(next.clone())?)?;
    let (stats_n, v_n) = first.povm().statistics(rho)?;
    let (stats_n1, v_n1) = full.povm().statistics(rho)?;
    let p_n = stats_n.probs().to_vec();
    let p_n1 = stats_n1.probs().to_vec();
    let k = next.len();
    let zero_volume = tol::SUPPORT * rho.dim() as f64;

    let mut q = vec![0.0; p_n1.len()];
    let mut conditional_deviation = 0.0_f64;
    for (a, (&pa, &va)) in p_n.iter().zip(&v_n).enumerate() {
        if va <= zero_volume {
            if pa > tol::PROB_FLOOR {
                return Err(Error::ZeroVolumeOutcome {
                    label: first.labels()[a].to_string(),
                });
            }
            continue;
        }
        for b in 0..k {
            let idx = a * k + b;
            let v_cond = v_n1[idx] / va;
            q[idx] = v_cond * pa;
            if pa > tol::PROB_FLOOR {
                conditional_deviation = conditional_deviation.max((p_n1[idx] / pa - v_cond).abs());
            }
        }
    }
    Ok(Extension {
        s_n: observational_entropy_from_stats(&p_n, &v_n)?,
        s_n1: observational_entropy_from_stats(&p_n1, &v_n1)?,
        first,
        p_n,
        p_n1,
        v_n1,
        q,
        conditional_deviation,
    })
}

/// Adding a coarse-graining never raises observational entropy; the drop
/// equals `D_KL(p_{n+1}‖q_{n+1})` and vanishes iff the new outcome is
/// distributed as its conditional volume `V(iₙ₊₁|iⁿ)`.
///
/// The equality condition is tested in the joint form
/// `|p_{iⁿ⁺¹} − V(iₙ₊₁|iⁿ) p_{iⁿ}| ≤ 1e-9`; the conditional deviation over
/// outcomes with `p_{iⁿ} > 1e-12` is reported alongside.
pub fn thm_sequential_report(
    rho: &DensityMatrix,
    seq: &CoarseGrainingSequence,
    next: &Instrument,
) -> Result<VerificationReport> {
    let ext = extension(rho, seq, next)?;
    let gap = ext.s_n - ext.s_n1;
    let kl_n1 = kl(&ext.p_n1, &ext.q)?;
    let joint_deviation = max_abs_diff(&ext.p_n1, &ext.q);

    let mut r = VerificationReport::new("sequential");
    r.quantity("entropy_n", ext.s_n);
    r.quantity("entropy_n_plus_1", ext.s_n1);
    r.quantity("gap", gap);
    r.quantity("kl_joint", kl_n1);
    r.quantity("joint_deviation", joint_deviation);
    r.quantity("conditional_deviation", ext.conditional_deviation);
    r.vector("p_n", ext.p_n);
    r.vector("p_joint", ext.p_n1);
    r.vector("q_joint", ext.q);
    r.vector("volumes_joint", ext.v_n1);

    r.push(Check::at_least("entropy_decreases", gap, 0.0, tol::INEQUALITY));
    r.push(Check::identity("gap_equals_kl", gap, kl_n1, tol::IDENTITY));
    r.push(Check::iff(
        "gap_zero_iff_conditional_volume",
        gap,
        tol::EQUALITY,
        joint_deviation,
        tol::DIST_EQUALITY,
    ));
    Ok(r)
}

/// `⟨D(ρ_{iⁿ}‖σ_{iⁿ})⟩ ≥ S_{Cⁿ} − S_{Cⁿ⁺¹} = D_KL ≥ 0`, where `ρ_{iⁿ}` and
/// `σ_{iⁿ}` are the post-measurement states of `ρ` and `𝟙/d`.
///
/// Also reports the lower bound `S_{Cⁿ} − S(ρ) − ⟨D⟩` on the information
/// lost to the earlier measurements.
pub fn thm_sandwich_report(
    rho: &DensityMatrix,
    seq: &CoarseGrainingSequence,
    next: &Instrument,
) -> Result<VerificationReport> {
    let ext = extension(rho, seq, next)?;
    let gap = ext.s_n - ext.s_n1;
    let kl_n1 = kl(&ext.p_n1, &ext.q)?;

    let rho_branches = post_measurement_states(rho, &ext.first)?;
    let sigma_branches = post_measurement_states(&DensityMatrix::maximally_mixed(rho.dim()), &ext.first)?;
    let mut mean_d = EntropyValue::Finite(0.0);
    let mut contained = true;
    for b in &rho_branches {
        let d = match sigma_branches.iter().find(|s| s.index == b.index) {
            Some(s) => quantum_relative_entropy(&b.state, &s.state)?,
            None => EntropyValue::Infinite,
        };
        contained &= d.is_finite();
        mean_d = mean_d.plus(d.weighted(b.probability));
    }

    let mut r = VerificationReport::new("sandwich");
    r.quantity("entropy_n", ext.s_n);
    r.quantity("entropy_n_plus_1", ext.s_n1);
    r.quantity("gap", gap);
    r.quantity("kl_joint", kl_n1);
    r.quantity("mean_relative_entropy", mean_d);
    if let Some(md) = mean_d.finite() {
        r.quantity("lost_information_lower_bound", ext.s_n - von_neumann_entropy(rho) - md);
    }
    r.flag("supports_contained", contained);
    r.vector("p_joint", ext.p_n1);
    r.vector("q_joint", ext.q);

    r.push(Check::at_least("mean_relative_entropy_bounds_gap", mean_d, gap, tol::INEQUALITY));
    r.push(Check::identity("gap_equals_kl", gap, kl_n1, tol::IDENTITY));
    r.push(Check::at_least("kl_nonnegative", kl_n1, 0.0, tol::INEQUALITY));
    Ok(r)
}

/// Coarsening a POVM by a stochastic matrix `v` raises its entropy by
/// `D_KL(p₂‖q₂) ≥ D_KL(p‖q) ≥ 0`, with `p₂_ij = v_ji pᵢ`, `q₂_ij = ṽ_ij p′_j`
/// and the backward matrix `ṽ_ij = v_ji Vᵢ/V′_j`. Equality iff `p = q`.
pub fn thm_refinement_report(rho: &DensityMatrix, c: &Povm, v: &StochasticMatrix) -> Result<VerificationReport> {
    check_dim(c.dim(), rho.dim())?;
    let coarse = apply_stochastic(c, v)?;
    let back = backward_stochastic(c, v)?;
    let (stats, volumes) = c.statistics(rho)?;
    let (stats2, volumes2) = coarse.statistics(rho)?;
    let p = stats.probs();
    let p_coarse = stats2.probs();
    let s_c = observational_entropy_from_stats(p, &volumes)?;
    let s_coarse = observational_entropy_from_stats(p_coarse, &volumes2)?;
    let gap = s_coarse - s_c;

    let (n, m) = (c.len(), coarse.len());
    let mut p2 = Vec::with_capacity(n * m);
    let mut q2 = Vec::with_capacity(n * m);
    let mut q = vec![0.0; n];
    for i in 0..n {
        for (j, &pc) in p_coarse.iter().enumerate().take(m) {
            p2.push(v.get(j, i) * p[i]);
            let w = back.get(i, j) * pc;
            q2.push(w);
            q[i] += w;
        }
    }
    let kl_joint = kl(&p2, &q2)?;
    let kl_marginal = kl(p, &q)?;
    let column_error = back
        .column_sums()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    let deviation = max_abs_diff(p, &q);

    let mut r = VerificationReport::new("refinement");
    r.quantity("entropy_fine", s_c);
    r.quantity("entropy_coarse", s_coarse);
    r.quantity("gap", gap);
    r.quantity("kl_joint", kl_joint);
    r.quantity("kl_marginal", kl_marginal);
    r.quantity("backward_column_error", column_error);
    r.quantity("marginal_deviation", deviation);
    r.vector("p_joint", p2);
    r.vector("q_joint", q2);
    r.vector("p", p.to_vec());
    r.vector("q", q);

    r.push(Check::at_least("entropy_increases", gap, 0.0, tol::INEQUALITY));
    r.push(Check::identity("gap_equals_kl", gap, kl_joint, tol::IDENTITY));
    r.push(Check::at_least("joint_above_marginal", kl_joint, kl_marginal, tol::INEQUALITY));
    r.push(Check::at_least("marginal_nonnegative", kl_marginal, 0.0, tol::INEQUALITY));
    r.push(Check::identity("backward_columns_normalized", column_error, 0.0, tol::BACKWARD_SUM));
    r.push(Check::iff(
        "gap_zero_iff_retrodicted_marginal",
        gap,
        tol::EQUALITY,
        deviation,
        tol::DIST_EQUALITY,
    ));
    Ok(r)
}

/// Inputs for [`thm_concavity_report`].
#[derive(Debug, Clone, Copy)]
pub enum ConcavityInput<'a> {
    /// `Σ λ_k S_C(ρ_k) ≤ S_C(Σ λ_k ρ_k)`.
    States { states: &'a [DensityMatrix], measurement: &'a Povm },
    /// `Σ λ_k S_{C_k}(ρ) ≤ S_C(ρ)` for `C = Σ λ_k C_k` merged by outcome label.
    Povms { povms: &'a [Povm], state: &'a DensityMatrix },
}

/// Concavity of observational entropy in the state and in the POVM, with
/// the equality conditions: identical outcome distributions in state mode,
/// equal `p_{i|k}/V_{i|k} = pᵢ/Vᵢ` ratios in POVM mode.
pub fn thm_concavity_report(input: ConcavityInput<'_>, weights: &[f64]) -> Result<VerificationReport> {
    crate::objects::check_weights(
        match input {
            ConcavityInput::States { states, .. } => states.len(),
            ConcavityInput::Povms { povms, .. } => povms.len(),
        },
        weights,
    )?;
    let mut r;
    let (lhs, rhs, deviation);
    match input {
        ConcavityInput::States { states, measurement } => {
            r = VerificationReport::new("concavity_state");
            let mut sum = 0.0;
            let mut dists: Vec<Vec<f64>> = Vec::with_capacity(states.len());
            for (s, &w) in states.iter().zip(weights) {
                check_dim(measurement.dim(), s.dim())?;
                let (p, v) = measurement.statistics(s)?;
                sum += w * observational_entropy_from_stats(p.probs(), &v)?;
                dists.push(p.probs().to_vec());
            }
            let mix = DensityMatrix::mixture(states, weights)?;
            lhs = sum;
            rhs = observational_entropy(&mix, measurement)?;
            deviation = dists
                .iter()
                .flat_map(|a| dists.iter().map(move |b| max_abs_diff(a, b)))
                .fold(0.0, f64::max);
        }
        ConcavityInput::Povms { povms, state } => {
            r = VerificationReport::new("concavity_povm");
            let mix = mix_povms(povms, weights)?;
            check_dim(mix.dim(), state.dim())?;
            let (pm, vm) = mix.statistics(state)?;
            let zero = tol::SUPPORT * state.dim() as f64;
            let mut sum = 0.0;
            let mut worst = 0.0_f64;
            for (c, &w) in povms.iter().zip(weights) {
                let (p, v) = c.statistics(state)?;
                sum += w * observational_entropy_from_stats(p.probs(), &v)?;
                for (i, label) in c.labels().iter().enumerate() {
                    if v[i] <= zero {
                        continue;
                    }
                    let m = mix.label_index(label).expect("mixture carries every label");
                    let ratio = pm.probs()[m] / vm[m];
                    worst = worst.max((p.probs()[i] / v[i] - ratio).abs());
                }
            }
            lhs = sum;
            rhs = observational_entropy_from_stats(pm.probs(), &vm)?;
            deviation = worst;
        }
    }
    let gap = rhs - lhs;
    r.quantity("mean_of_entropies", lhs);
    r.quantity("entropy_of_mixture", rhs);
    r.quantity("gap", gap);
    r.quantity("condition_deviation", deviation);
    r.push(Check::at_least("concavity", rhs, lhs, tol::INEQUALITY));
    r.push(Check::iff(
        "gap_zero_iff_condition",
        gap,
        tol::EQUALITY,
        deviation,
        tol::DIST_EQUALITY,
    ));
    Ok(r)
}

/// `S(ρ) ≤ S_{Cⁿ} ≤ ⋯ ≤ S_{C¹} ≤ ln d` along every prefix of a sequence.
pub fn monotone_chain_report(rho: &DensityMatrix, seq: &CoarseGrainingSequence) -> Result<VerificationReport> {
    check_dim(seq.dim(), rho.dim())?;
    let s = von_neumann_entropy(rho);
    let ln_d = (rho.dim() as f64).ln();
    let mut entropies = Vec::with_capacity(seq.len());
    for n in 1..=seq.len() {
        let inst = compose_sequence(&seq.prefix(n)?)?;
        entropies.push(observational_entropy(rho, &inst.povm())?);
    }
    let mut r = VerificationReport::new("monotone_chain");
    r.quantity("von_neumann_entropy", s);
    r.quantity("log_dim", ln_d);
    for (n, &e) in entropies.iter().enumerate() {
        r.quantity(&format!("entropy_{}", n + 1), e);
    }
    r.push(Check::at_least("below_log_dim", ln_d, entropies[0], tol::INEQUALITY));
    for n in 1..entropies.len() {
        r.push(Check::at_least(
            &format!("step_{}_not_above_step_{}", n + 1, n),
            entropies[n - 1],
            entropies[n],
            tol::INEQUALITY,
        ));
    }
    r.push(Check::at_least(
        "above_von_neumann",
        *entropies.last().expect("sequence is non-empty"),
        s,
        tol::INEQUALITY,
    ));
    Ok(r)
}

/// For a commuting POVM, Jeffrey retrodiction from the uniform prior over
/// the common eigenbasis with evidence `pᵢ` reproduces the diagonal of
/// `ρ_rec` in that basis.
pub fn jeffrey_agreement_report(rho: &DensityMatrix, c: &Povm) -> Result<VerificationReport> {
    check_dim(c.dim(), rho.dim())?;
    let basis = commuting_basis(c)?.ok_or_else(|| Error::InvalidConfig {
        reason: "POVM elements do not commute".into(),
    })?;
    let likelihood = likelihood_in_basis(c, &basis)?;
    let (evidence, _) = c.statistics(rho)?;
    let prior = ClassicalDistribution::uniform(c.dim())?;
    let posterior = jeffrey_retrodict(&prior, &likelihood, &evidence)?;
    let diagonal = diagonal_in_basis(recovered_state(rho, c)?.op(), &basis);
    let deviation = max_abs_diff(posterior.probs(), &diagonal);

    let mut r = VerificationReport::new("jeffrey");
    r.quantity("max_deviation", deviation);
    r.vector("posterior", posterior.probs().to_vec());
    r.vector("recovered_diagonal", diagonal);
    r.push(Check::identity("posterior_matches_recovered_diagonal", deviation, 0.0, tol::DIST_EQUALITY));
    Ok(r)
}
