//! Petz transpose maps, the recovered coarse state `ρ_rec = Σ (pᵢ/Vᵢ) Πᵢ`,
//! and Jeffrey-rule retrodiction for commuting POVMs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, max_abs, support_projector_of, trace_norm, ComplexMatrix, HermitianOperator};
use crate::objects::{ClassicalDistribution, DensityMatrix, Instrument, KrausMap, Povm, StochasticMatrix};
use crate::tol;

/// Above this dimension the Petz map is applied from Kraus data instead of
/// a cached superoperator.
pub const DENSE_SUPEROPERATOR_LIMIT: usize = 16;

const COMMON_BASIS_SEED: u64 = 0x0b5e_2a7e;
const COMMON_BASIS_ATTEMPTS: u64 = 8;

/// `X ↦ √σ E†[E(σ)^{-1/2} X E(σ)^{-1/2}] √σ` for a channel `E` and reference `σ`.
#[derive(Debug, Clone)]
pub struct PetzMap {
    channel: KrausMap,
    sqrt_reference: ComplexMatrix,
    image_inv_sqrt: ComplexMatrix,
    image_support: ComplexMatrix,
    image_of_reference: HermitianOperator,
    reference: DensityMatrix,
    /// `dim_in² × dim_out²` acting on column-major vectorizations.
    superoperator: Option<ComplexMatrix>,
}

impl PetzMap {
    pub fn new(channel: KrausMap, reference: DensityMatrix) -> Result<Self> {
        if reference.dim() != channel.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: channel.dim_in(),
                found: reference.dim(),
            });
        }
        let sqrt_reference = reference
            .eigen()
            .map_spectrum(|x| x.max(0.0).sqrt(), true)?
            .into_matrix();
        let image = channel.apply(reference.op());
        let image_eig = eig_hermitian(&image)?;
        let image_inv_sqrt = image_eig.map_spectrum(|x| 1.0 / x.sqrt(), true)?.into_matrix();
        let image_support = support_projector_of(&image_eig).into_matrix();
        let mut map = PetzMap {
            channel,
            sqrt_reference,
            image_inv_sqrt,
            image_support,
            image_of_reference: image,
            reference,
            superoperator: None,
        };
        if map.channel.dim_in().max(map.channel.dim_out()) <= DENSE_SUPEROPERATOR_LIMIT {
            map.superoperator = Some(map.build_superoperator());
        }
        Ok(map)
    }

    pub fn channel(&self) -> &KrausMap {
        &self.channel
    }

    pub fn reference(&self) -> &DensityMatrix {
        &self.reference
    }

    /// `E(σ)`.
    pub fn image_of_reference(&self) -> &HermitianOperator {
        &self.image_of_reference
    }

    pub fn has_superoperator(&self) -> bool {
        self.superoperator.is_some()
    }

    fn build_superoperator(&self) -> ComplexMatrix {
        let n_out = self.channel.dim_out();
        let n_in = self.channel.dim_in();
        let mut s = ComplexMatrix::zeros(n_in * n_in, n_out * n_out);
        for b in 0..n_out {
            for a in 0..n_out {
                let mut e = ComplexMatrix::zeros(n_out, n_out);
                e[(a, b)] = Complex64::new(1.0, 0.0);
                let y = self.apply_kraus_path(&e);
                s.set_column(a + b * n_out, &DMatrix::from_column_slice(n_in * n_in, 1, y.as_slice()).column(0));
            }
        }
        s
    }

    pub(crate) fn apply_kraus_path(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let inner = &self.image_inv_sqrt * x * &self.image_inv_sqrt;
        &self.sqrt_reference * self.channel.adjoint_apply_matrix(&inner) * &self.sqrt_reference
    }

    /// Rejects inputs with trace weight above `1e-8` outside `supp E(σ)`.
    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        let n_out = self.channel.dim_out();
        if x.dim() != n_out {
            return Err(Error::DimensionMismatch {
                expected: n_out,
                found: x.dim(),
            });
        }
        let inside = &self.image_support * x.matrix() * &self.image_support;
        let weight = trace_norm(&(x.matrix() - inside));
        if weight > tol::PETZ_LEAK {
            return Err(Error::SupportLeak { weight });
        }
        let out = match &self.superoperator {
            Some(s) => {
                let n_in = self.channel.dim_in();
                let v = s * DMatrix::from_column_slice(n_out * n_out, 1, x.matrix().as_slice());
                ComplexMatrix::from_column_slice(n_in, n_in, v.as_slice())
            }
            None => self.apply_kraus_path(x.matrix()),
        };
        Ok(HermitianOperator::from_matrix_unchecked(out))
    }
}

/// `petz_apply`: the Petz map applied to an operator on the output space.
pub fn petz_apply(map: &PetzMap, x: &HermitianOperator) -> Result<HermitianOperator> {
    map.apply(x)
}

/// The measuring channel `M(X) = Σᵢ tr(Aᵢ(X)) |i⟩⟨i|`, in the Kraus form
/// `{|i⟩⟨k| K_{im}}` over branches `i`, branch Kraus operators `m` and
/// input basis vectors `k`.
pub fn measurement_channel(c: &Instrument) -> KrausMap {
    let d = c.dim();
    let n = c.len();
    let mut kraus = Vec::new();
    for (i, branch) in c.branches().iter().enumerate() {
        for k_op in branch.kraus() {
            for k in 0..d {
                let mut e = ComplexMatrix::zeros(n, d);
                e.set_row(i, &k_op.row(k));
                kraus.push(e);
            }
        }
    }
    KrausMap::from_kraus_unchecked(d, n, kraus)
}

/// `Σᵢ (pᵢ/Vᵢ) Πᵢ` from given outcome statistics, matched to the POVM by label.
pub fn recovered_state_from_stats(stats: &ClassicalDistribution, c: &Povm) -> Result<DensityMatrix> {
    let probs = stats.aligned_to(c.labels())?;
    let volumes = c.volumes();
    let zero_volume = tol::SUPPORT * c.dim() as f64;
    let mut acc = HermitianOperator::zeros(c.dim());
    for (i, ((&p, &v), e)) in probs.iter().zip(&volumes).zip(c.elements()).enumerate() {
        if p <= 0.0 {
            continue;
        }
        if v <= zero_volume {
            if p <= tol::PROB_FLOOR {
                continue;
            }
            return Err(Error::ZeroVolumeOutcome {
                label: c.labels()[i].to_string(),
            });
        }
        acc = acc.add(&e.scale(p / v));
    }
    DensityMatrix::new(acc)
}

/// `ρ_rec = Σᵢ (pᵢ/Vᵢ) Πᵢ` with `pᵢ = tr(Πᵢ ρ)`.
pub fn recovered_state(rho: &DensityMatrix, c: &Povm) -> Result<DensityMatrix> {
    let (p, _) = c.statistics(rho)?;
    recovered_state_from_stats(&p, c)
}

/// The Petz map of the measuring channel at the uniform reference, applied
/// to `M(ρ)`. Agrees with [`recovered_state`] but is computed from the
/// instrument's Kraus operators through the general Petz formula.
pub fn petz_recovered_state(rho: &DensityMatrix, c: &Instrument) -> Result<DensityMatrix> {
    if rho.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            found: rho.dim(),
        });
    }
    let channel = measurement_channel(c);
    let image = channel.apply(rho.op());
    let petz = PetzMap::new(channel, DensityMatrix::maximally_mixed(c.dim()))?;
    DensityMatrix::new(petz.apply(&image)?)
}

/// Jeffrey's rule: `r(x|t) = Σ_y r(x) s(y|x) t(y) / [s∘r](y)`.
///
/// `likelihood` has one row per observation `y` and one column per state `x`.
pub fn jeffrey_retrodict(
    prior: &ClassicalDistribution,
    likelihood: &StochasticMatrix,
    soft_evidence: &ClassicalDistribution,
) -> Result<ClassicalDistribution> {
    if likelihood.cols() != prior.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            found: likelihood.cols(),
        });
    }
    if likelihood.rows() != soft_evidence.len() {
        return Err(Error::DimensionMismatch {
            expected: soft_evidence.len(),
            found: likelihood.rows(),
        });
    }
    let r = prior.probs();
    let t = soft_evidence.probs();
    let predicted = likelihood.apply(r);
    let mut posterior = vec![0.0; r.len()];
    for (y, (&ty, &py)) in t.iter().zip(&predicted).enumerate() {
        if py <= tol::PROB_FLOOR {
            if ty > tol::PROB_FLOOR {
                return Err(Error::ModelFalsified { outcome: y });
            }
            continue;
        }
        for (x, post) in posterior.iter_mut().enumerate() {
            *post += r[x] * likelihood.get(y, x) / py * ty;
        }
    }
    ClassicalDistribution::new(prior.labels().to_vec(), posterior)
}

/// Largest commutator entry `max_{i<j} ‖[Πᵢ, Πⱼ]‖_max`.
pub fn max_commutator(c: &Povm) -> f64 {
    let e = c.elements();
    let mut worst = 0.0_f64;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let a = e[i].matrix();
            let b = e[j].matrix();
            worst = worst.max(max_abs(&(a * b - b * a)));
        }
    }
    worst
}

/// A simultaneous eigenbasis (as unitary columns) when all elements commute.
///
/// The basis diagonalizes a random real combination of the elements, drawn
/// from a fixed seed, and is re-verified against every element.
pub fn commuting_basis(c: &Povm) -> Result<Option<ComplexMatrix>> {
    if max_commutator(c) > tol::COMMUTATOR {
        return Ok(None);
    }
    let d = c.dim();
    for attempt in 0..COMMON_BASIS_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(COMMON_BASIS_SEED + attempt);
        let mut combo = HermitianOperator::zeros(d);
        for e in c.elements() {
            combo = combo.add(&e.scale(rng.random_range(0.5..1.5)));
        }
        let basis = eig_hermitian(&combo)?.eigenvectors;
        let diagonal = c.elements().iter().all(|e| {
            let mut m = basis.adjoint() * e.matrix() * &basis;
            m.fill_diagonal(Complex64::new(0.0, 0.0));
            max_abs(&m) <= 10.0 * tol::COMMUTATOR
        });
        if diagonal {
            return Ok(Some(basis));
        }
    }
    Ok(None)
}

/// `p(i|x) = ⟨x|Πᵢ|x⟩` in the given basis; rows are outcomes, columns basis vectors.
pub fn likelihood_in_basis(c: &Povm, basis: &ComplexMatrix) -> Result<StochasticMatrix> {
    let d = c.dim();
    let mut m = DMatrix::from_fn(c.len(), d, |i, x| {
        let v: Vec<Complex64> = basis.column(x).iter().copied().collect();
        c.elements()[i].expectation(&v).max(0.0)
    });
    for mut col in m.column_iter_mut() {
        let s: f64 = col.iter().sum();
        col /= s;
    }
    StochasticMatrix::new(m)
}

/// `⟨x|A|x⟩` for every column `x` of `basis`.
pub fn diagonal_in_basis(a: &HermitianOperator, basis: &ComplexMatrix) -> Vec<f64> {
    basis
        .column_iter()
        .map(|col| {
            let v: Vec<Complex64> = col.iter().copied().collect();
            a.expectation(&v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::OutcomeLabel;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x_basis() -> Povm {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Povm::from_basis(&ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]))
            .unwrap()
    }

    fn trine() -> Povm {
        let vecs = (0..3).map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            [c((th / 2.0).cos(), 0.0), c((th / 2.0).sin(), 0.0)]
        });
        Povm::from_elements(vecs.map(|v| HermitianOperator::projector_onto(&v).scale(2.0 / 3.0)).collect())
            .unwrap()
    }

    fn dist(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        trace_norm(&(a.matrix() - b.matrix()))
    }

    fn skewed() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn petz_recovers_reference_image() {
        let inst = trine().luders_instrument().unwrap();
        let sigma = skewed();
        let petz = PetzMap::new(measurement_channel(&inst), sigma.clone()).unwrap();
        let back = petz_apply(&petz, petz.image_of_reference()).unwrap();
        assert!(max_abs(&(back.matrix() - sigma.matrix())) <= 1e-8);
    }

    #[test]
    fn petz_of_z_measurement_at_uniform_reference() {
        let inst = Povm::computational_basis(2).luders_instrument().unwrap();
        let petz = PetzMap::new(measurement_channel(&inst), DensityMatrix::maximally_mixed(2)).unwrap();
        let x = HermitianOperator::from_real_diagonal(&[0.75, 0.25]);
        let out = petz_apply(&petz, &x).unwrap();
        assert!(max_abs(&(out.matrix() - x.matrix())) <= 1e-14);
    }

    #[test]
    fn petz_of_identity_channel_is_identity() {
        let petz = PetzMap::new(KrausMap::identity(3), DensityMatrix::maximally_mixed(3)).unwrap();
        let x = HermitianOperator::from_matrix_unchecked(ComplexMatrix::from_fn(3, 3, |i, j| {
            c((i + 2 * j) as f64, i as f64 - j as f64)
        }));
        let out = petz_apply(&petz, &x).unwrap();
        assert!(max_abs(&(out.matrix() - x.matrix())) <= 1e-13);
    }

    #[test]
    fn petz_rejects_support_leak() {
        // Outcome "1" never occurs on σ = |0⟩⟨0|, so E(σ) has no weight there.
        let inst = Povm::computational_basis(2).luders_instrument().unwrap();
        let petz = PetzMap::new(measurement_channel(&inst), DensityMatrix::diagonal(&[1.0, 0.0]).unwrap()).unwrap();
        let x = HermitianOperator::from_real_diagonal(&[0.5, 0.5]);
        assert!(matches!(petz_apply(&petz, &x), Err(Error::SupportLeak { .. })));
    }

    #[test]
    fn superoperator_and_kraus_paths_agree() {
        let inst = trine().luders_instrument().unwrap();
        let petz = PetzMap::new(measurement_channel(&inst), skewed()).unwrap();
        assert!(petz.has_superoperator());
        let x = HermitianOperator::from_real_diagonal(&[0.2, 0.3, 0.5]);
        let dense = petz_apply(&petz, &x).unwrap();
        let kraus = petz.apply_kraus_path(x.matrix());
        assert!(max_abs(&(dense.matrix() - kraus)) <= 1e-13);
    }

    #[test]
    fn recovered_state_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(dist(&recovered_state(&mixed, &trine()).unwrap(), &mixed) <= 1e-14);
        let rho = skewed();
        assert!(dist(&recovered_state(&rho, &Povm::computational_basis(2)).unwrap(), &rho) <= 1e-14);
        assert!(dist(&recovered_state(&rho, &x_basis()).unwrap(), &mixed) <= 1e-14);
    }

    #[test]
    fn recovered_state_from_counts() {
        let stats = ClassicalDistribution::from_counts(OutcomeLabel::indexed(2), &[500.0, 500.0]).unwrap();
        let rec = recovered_state_from_stats(&stats, &x_basis()).unwrap();
        assert!(dist(&rec, &DensityMatrix::maximally_mixed(2)) <= 1e-14);
        let wrong = ClassicalDistribution::new(
            vec![OutcomeLabel::single("a"), OutcomeLabel::single("b")],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(matches!(recovered_state_from_stats(&wrong, &x_basis()), Err(Error::LabelMismatch { .. })));
    }

    #[test]
    fn recovered_state_rejects_probability_on_empty_outcome() {
        let povm = Povm::from_elements(vec![HermitianOperator::identity(2), HermitianOperator::zeros(2)]).unwrap();
        let stats = ClassicalDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            recovered_state_from_stats(&stats, &povm),
            Err(Error::ZeroVolumeOutcome { .. })
        ));
    }

    #[test]
    fn petz_path_examples() {
        let rho = skewed();
        let trivial = Instrument::trivial(2);
        let rec = petz_recovered_state(&rho, &trivial).unwrap();
        assert!(dist(&rec, &DensityMatrix::maximally_mixed(2)) <= 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        let rec = petz_recovered_state(&mixed, &trine().luders_instrument().unwrap()).unwrap();
        assert!(dist(&rec, &mixed) <= 1e-12);
        let rho = DensityMatrix::from_matrix(&ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)],
        ))
        .unwrap();
        let a = petz_recovered_state(&rho, &trine().luders_instrument().unwrap()).unwrap();
        let b = recovered_state(&rho, &trine()).unwrap();
        assert!(dist(&a, &b) <= 1e-8);
    }

    #[test]
    fn projective_recovery_is_idempotent() {
        let rho = DensityMatrix::from_matrix(&ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)],
        ))
        .unwrap();
        let once = recovered_state(&rho, &x_basis()).unwrap();
        let twice = recovered_state(&once, &x_basis()).unwrap();
        assert!(dist(&once, &twice) <= 1e-8);
    }

    #[test]
    fn jeffrey_hard_evidence_is_bayes() {
        let prior = ClassicalDistribution::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let s = StochasticMatrix::from_rows(&[vec![0.9, 0.5, 0.1], vec![0.1, 0.5, 0.9]]).unwrap();
        let evidence = ClassicalDistribution::point_mass(2, 0).unwrap();
        let post = jeffrey_retrodict(&prior, &s, &evidence).unwrap();
        let norm = 0.2 * 0.9 + 0.3 * 0.5 + 0.5 * 0.1;
        let expected = [0.2 * 0.9 / norm, 0.3 * 0.5 / norm, 0.5 * 0.1 / norm];
        for (a, b) in post.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn jeffrey_identity_likelihood_returns_evidence() {
        let prior = ClassicalDistribution::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let evidence = ClassicalDistribution::from_probs(vec![0.6, 0.1, 0.3]).unwrap();
        let post = jeffrey_retrodict(&prior, &StochasticMatrix::identity(3), &evidence).unwrap();
        for (a, b) in post.probs().iter().zip(evidence.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn jeffrey_detects_falsified_model() {
        let prior = ClassicalDistribution::from_probs(vec![1.0, 0.0]).unwrap();
        let evidence = ClassicalDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            jeffrey_retrodict(&prior, &StochasticMatrix::identity(2), &evidence),
            Err(Error::ModelFalsified { outcome: 1 })
        ));
    }

    #[test]
    fn jeffrey_matches_recovered_state_for_diagonal_povm() {
        // Unsharp Z measurement: Π₀ = diag(0.9, 0.2), Π₁ = diag(0.1, 0.8).
        let povm = Povm::from_elements(vec![
            HermitianOperator::from_real_diagonal(&[0.9, 0.2]),
            HermitianOperator::from_real_diagonal(&[0.1, 0.8]),
        ])
        .unwrap();
        let rho = DensityMatrix::from_matrix(&ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.3, 0.0)],
        ))
        .unwrap();
        let basis = commuting_basis(&povm).unwrap().unwrap();
        let (p, _) = povm.statistics(&rho).unwrap();
        let likelihood = likelihood_in_basis(&povm, &basis).unwrap();
        let post = jeffrey_retrodict(&ClassicalDistribution::uniform(2).unwrap(), &likelihood, &p).unwrap();
        let diag = diagonal_in_basis(recovered_state(&rho, &povm).unwrap().op(), &basis);
        for (a, b) in post.probs().iter().zip(diag) {
            assert!((a - b).abs() <= 1e-12);
        }
        // Independent hand evaluation in the standard basis.
        let p0 = 0.7 * 0.9 + 0.3 * 0.2;
        let p1 = 1.0 - p0;
        let expected0 = p0 * 0.9 / 1.1 + p1 * 0.1 / 0.9;
        assert!((diagonal_in_basis(recovered_state(&rho, &povm).unwrap().op(), &ComplexMatrix::identity(2, 2))[0] - expected0).abs() < 1e-14);
    }

    #[test]
    fn commuting_basis_examples() {
        assert!(commuting_basis(&Povm::computational_basis(3)).unwrap().is_some());
        assert!(commuting_basis(&Povm::trivial(2)).unwrap().is_some());
        // Unsharp X elements mixed with Z projectors do not commute.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xp = HermitianOperator::projector_onto(&[c(s, 0.0), c(s, 0.0)]);
        let xm = HermitianOperator::projector_onto(&[c(s, 0.0), c(-s, 0.0)]);
        let unsharp_plus = HermitianOperator::identity(2).scale(0.5).add(&xp.sub(&xm).scale(0.25));
        let unsharp_minus = HermitianOperator::identity(2).scale(0.5).sub(&xp.sub(&xm).scale(0.25));
        let povm = Povm::from_elements(vec![
            unsharp_plus.scale(0.5),
            unsharp_minus.scale(0.5),
            HermitianOperator::from_real_diagonal(&[0.5, 0.0]),
            HermitianOperator::from_real_diagonal(&[0.0, 0.5]),
        ])
        .unwrap();
        assert!(max_commutator(&povm) > tol::COMMUTATOR);
        assert!(commuting_basis(&povm).unwrap().is_none());
    }
}
