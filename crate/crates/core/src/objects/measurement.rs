use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::classical::{check_unique_labels, ClassicalDistribution, OutcomeLabel, StochasticMatrix};
use super::state::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, ComplexMatrix, HermitianOperator};
use crate::tol;

/// Default limit on the number of branches of a composed sequence.
pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;

/// A finite POVM `{Πᵢ}` with outcome labels.
///
/// Zero elements are allowed; [`Povm::without_empty`] drops them.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    labels: Vec<OutcomeLabel>,
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(labels: Vec<OutcomeLabel>, elements: Vec<HermitianOperator>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::NotPovm {
                deviation: f64::INFINITY,
            });
        };
        let dim = first.dim();
        if labels.len() != elements.len() {
            return Err(Error::LabelMismatch {
                reason: format!("{} labels for {} elements", labels.len(), elements.len()),
            });
        }
        check_unique_labels(&labels)?;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &elements {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            let min = e.eig()?.eigenvalues.last().copied().unwrap_or(0.0);
            if min < -tol::PSD {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
            sum += e.matrix();
        }
        let deviation = max_abs(&(sum - ComplexMatrix::identity(dim, dim)));
        if deviation > tol::POVM_SUM {
            return Err(Error::NotPovm { deviation });
        }
        let total: f64 = elements.iter().map(HermitianOperator::trace).sum();
        if (total - dim as f64).abs() > tol::VOLUME_SUM {
            return Err(Error::NotPovm {
                deviation: (total - dim as f64).abs(),
            });
        }
        Ok(Povm {
            dim,
            labels,
            elements,
        })
    }

    /// Elements labeled `0..n`.
    pub fn from_elements(elements: Vec<HermitianOperator>) -> Result<Self> {
        Self::new(OutcomeLabel::indexed(elements.len()), elements)
    }

    pub(crate) fn from_parts_unchecked(
        dim: usize,
        labels: Vec<OutcomeLabel>,
        elements: Vec<HermitianOperator>,
    ) -> Self {
        Povm {
            dim,
            labels,
            elements,
        }
    }

    /// The single-outcome POVM `{𝟙}`.
    pub fn trivial(dim: usize) -> Self {
        Povm {
            dim,
            labels: vec![OutcomeLabel::index(0)],
            elements: vec![HermitianOperator::identity(dim)],
        }
    }

    /// Rank-one projectors onto the computational basis.
    pub fn computational_basis(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|i| {
                let mut diag = vec![0.0; dim];
                diag[i] = 1.0;
                HermitianOperator::from_real_diagonal(&diag)
            })
            .collect();
        Povm {
            dim,
            labels: OutcomeLabel::indexed(dim),
            elements,
        }
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(unitary: &ComplexMatrix) -> Result<Self> {
        let elements = unitary
            .column_iter()
            .map(|c| {
                let v: Vec<Complex64> = c.iter().copied().collect();
                HermitianOperator::projector_onto(&v)
            })
            .collect();
        Self::from_elements(elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> &[OutcomeLabel] {
        &self.labels
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    /// `Vᵢ = tr Πᵢ`.
    pub fn volumes(&self) -> Vec<f64> {
        self.elements.iter().map(HermitianOperator::trace).collect()
    }

    pub fn is_empty_element(&self, i: usize) -> bool {
        self.elements[i].trace() <= tol::SUPPORT * self.dim as f64
    }

    /// Drops zero elements, logging each one.
    pub fn without_empty(self) -> Self {
        let dim = self.dim;
        let threshold = tol::SUPPORT * dim as f64;
        let (labels, elements) = self
            .labels
            .into_iter()
            .zip(self.elements)
            .filter(|(label, e)| {
                let keep = e.trace() > threshold;
                if !keep {
                    warn!("dropping zero POVM element {label}");
                }
                keep
            })
            .unzip();
        Povm {
            dim,
            labels,
            elements,
        }
    }

    /// `pᵢ = tr(Πᵢ ρ)` clipped at zero, together with the volumes `Vᵢ`.
    pub fn statistics(&self, rho: &DensityMatrix) -> Result<(ClassicalDistribution, Vec<f64>)> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let probs = self
            .elements
            .iter()
            .map(|e| e.trace_product(rho.op()).max(0.0))
            .collect();
        Ok((
            ClassicalDistribution::new(self.labels.clone(), probs)?,
            self.volumes(),
        ))
    }

    /// The Lüders instrument `Aᵢ(ρ) = √Πᵢ ρ √Πᵢ`.
    pub fn luders_instrument(&self) -> Result<Instrument> {
        let branches = self
            .elements
            .iter()
            .map(|e| {
                let root = e.eig()?.map_spectrum(|x| x.max(0.0).sqrt(), true)?;
                Ok(KrausMap {
                    dim_in: self.dim,
                    dim_out: self.dim,
                    kraus: vec![root.into_matrix()],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument {
            dim: self.dim,
            labels: self.labels.clone(),
            branches,
        })
    }

    pub fn label_index(&self, label: &OutcomeLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A completely positive map in Kraus form, `X ↦ Σ_m K_m X K_m†`.
#[derive(Debug, Clone)]
pub struct KrausMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausMap {
    /// Checks shapes and that `Σ K†K ≼ 𝟙` (trace non-increasing).
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        for k in &kraus {
            if k.ncols() != dim_in {
                return Err(Error::DimensionMismatch {
                    expected: dim_in,
                    found: k.ncols(),
                });
            }
            if k.nrows() != dim_out {
                return Err(Error::DimensionMismatch {
                    expected: dim_out,
                    found: k.nrows(),
                });
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let map = KrausMap {
            dim_in,
            dim_out,
            kraus,
        };
        let top = map.effect().eig()?.eigenvalues.first().copied().unwrap_or(0.0);
        if top > 1.0 + tol::PSD {
            return Err(Error::NotTraceNonIncreasing { max_eigenvalue: top });
        }
        Ok(map)
    }

    pub(crate) fn from_kraus_unchecked(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Self {
        KrausMap {
            dim_in,
            dim_out,
            kraus,
        }
    }

    pub fn identity(dim: usize) -> Self {
        KrausMap {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim, dim)],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ K X K†` on an arbitrary matrix.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply(&self, x: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(self.apply_matrix(x.matrix()))
    }

    /// Trace dual `Y ↦ Σ K† Y K`.
    pub fn adjoint_apply_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }

    pub fn adjoint_apply(&self, y: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(self.adjoint_apply_matrix(y.matrix()))
    }

    /// `A†(𝟙) = Σ K†K`.
    pub fn effect(&self) -> HermitianOperator {
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * k;
        }
        HermitianOperator::from_matrix_unchecked(out)
    }

    /// `self ∘ first`, with Kraus operators `K_self · K_first`.
    pub fn after(&self, first: &KrausMap) -> Result<KrausMap> {
        if first.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                found: first.dim_out,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &first.kraus {
            for b in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(KrausMap {
            dim_in: first.dim_in,
            dim_out: self.dim_out,
            kraus,
        })
    }
}

/// A quantum instrument: labeled CP branches on a `dim`-dimensional system
/// whose sum is trace preserving.
#[derive(Debug, Clone)]
pub struct Instrument {
    dim: usize,
    labels: Vec<OutcomeLabel>,
    branches: Vec<KrausMap>,
}

impl Instrument {
    pub fn new(labels: Vec<OutcomeLabel>, branches: Vec<KrausMap>) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::NotTracePreserving {
                deviation: f64::INFINITY,
            });
        };
        if labels.len() != branches.len() {
            return Err(Error::LabelMismatch {
                reason: format!("{} labels for {} branches", labels.len(), branches.len()),
            });
        }
        check_unique_labels(&labels)?;
        let dim = first.dim_in;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for b in &branches {
            for found in [b.dim_in, b.dim_out] {
                if found != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found });
                }
            }
            sum += b.effect().matrix();
        }
        let deviation = max_abs(&(sum - ComplexMatrix::identity(dim, dim)));
        if deviation > tol::POVM_SUM {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Instrument {
            dim,
            labels,
            branches,
        })
    }

    pub fn from_branches(branches: Vec<KrausMap>) -> Result<Self> {
        Self::new(OutcomeLabel::indexed(branches.len()), branches)
    }

    /// The do-nothing single-outcome instrument.
    pub fn trivial(dim: usize) -> Self {
        Instrument {
            dim,
            labels: vec![OutcomeLabel::index(0)],
            branches: vec![KrausMap::identity(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn labels(&self) -> &[OutcomeLabel] {
        &self.labels
    }

    pub fn branches(&self) -> &[KrausMap] {
        &self.branches
    }

    /// `Πᵢ = Aᵢ†(𝟙)`.
    pub fn povm(&self) -> Povm {
        Povm::from_parts_unchecked(
            self.dim,
            self.labels.clone(),
            self.branches.iter().map(KrausMap::effect).collect(),
        )
    }

    /// `tr Aᵢ(ρ)` evaluated on the branch outputs.
    pub fn branch_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_dim(rho.dim())?;
        Ok(self
            .branches
            .iter()
            .map(|b| b.apply(rho.op()).trace().max(0.0))
            .collect())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

/// Instruments applied in series, `(C₁, …, Cₙ)`.
#[derive(Debug, Clone)]
pub struct CoarseGrainingSequence {
    steps: Vec<Instrument>,
}

impl CoarseGrainingSequence {
    pub fn new(steps: Vec<Instrument>) -> Result<Self> {
        let Some(first) = steps.first() else {
            return Err(Error::EmptySequence);
        };
        let dim = first.dim();
        if let Some(s) = steps.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        Ok(CoarseGrainingSequence { steps })
    }

    pub fn single(step: Instrument) -> Self {
        CoarseGrainingSequence { steps: vec![step] }
    }

    pub fn dim(&self) -> usize {
        self.steps[0].dim()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Instrument] {
        &self.steps
    }

    /// `(C₁, …, Cₙ, next)`.
    pub fn extended(&self, next: Instrument) -> Result<Self> {
        let mut steps = self.steps.clone();
        steps.push(next);
        Self::new(steps)
    }

    /// The first `n` steps.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        Self::new(self.steps[..n.min(self.steps.len())].to_vec())
    }

    pub fn branch_count(&self) -> usize {
        self.steps
            .iter()
            .fold(1usize, |acc, s| acc.saturating_mul(s.len()))
    }
}

/// `Πᵢ = Σ_m K_{im}† K_{im}` for every branch.
pub fn povm_of_instrument(c: &Instrument) -> Povm {
    c.povm()
}

/// Composes a sequence into one instrument with a branch per multi-index.
pub fn compose_sequence(seq: &CoarseGrainingSequence) -> Result<Instrument> {
    compose_sequence_with_cap(seq, DEFAULT_BRANCH_CAP)
}

/// Branch `(i₁, …, iₙ)` is `Aⁿ_{iₙ} ∘ ⋯ ∘ A¹_{i₁}`; branches are ordered
/// lexicographically with `i₁` most significant.
pub fn compose_sequence_with_cap(seq: &CoarseGrainingSequence, cap: usize) -> Result<Instrument> {
    let count = seq.branch_count();
    if count > cap {
        return Err(Error::BranchExplosion { count, cap });
    }
    let mut steps = seq.steps.iter();
    let first = steps.next().ok_or(Error::EmptySequence)?;
    let mut labels = first.labels.clone();
    let mut branches = first.branches.clone();
    for step in steps {
        let mut next_labels = Vec::with_capacity(labels.len() * step.len());
        let mut next_branches = Vec::with_capacity(labels.len() * step.len());
        for (label, branch) in labels.iter().zip(&branches) {
            for (l, b) in step.labels.iter().zip(&step.branches) {
                next_labels.push(label.then(l));
                next_branches.push(b.after(branch)?);
            }
        }
        labels = next_labels;
        branches = next_branches;
    }
    Ok(Instrument {
        dim: seq.dim(),
        labels,
        branches,
    })
}

/// `pᵢ = tr(Πᵢ ρ)` (clipped at zero) and `Vᵢ = tr Πᵢ`.
pub fn outcome_statistics(rho: &DensityMatrix, c: &Instrument) -> Result<(ClassicalDistribution, Vec<f64>)> {
    c.povm().statistics(rho)
}

/// One surviving branch of a measurement: `Aᵢ(ρ)/pᵢ`.
#[derive(Debug, Clone)]
pub struct PostMeasurementBranch {
    pub index: usize,
    pub label: OutcomeLabel,
    pub probability: f64,
    pub state: DensityMatrix,
}

/// Post-measurement states; branches with `pᵢ ≤ 1e-12` are omitted.
pub fn post_measurement_states(rho: &DensityMatrix, c: &Instrument) -> Result<Vec<PostMeasurementBranch>> {
    c.check_dim(rho.dim())?;
    let mut out = Vec::new();
    for (index, (label, branch)) in c.labels.iter().zip(&c.branches).enumerate() {
        let image = branch.apply(rho.op());
        let probability = image.trace();
        if probability <= tol::PROB_FLOOR {
            continue;
        }
        out.push(PostMeasurementBranch {
            index,
            label: label.clone(),
            probability,
            state: DensityMatrix::from_psd_unnormalized(image)?,
        });
    }
    Ok(out)
}

/// `Π′_j = Σᵢ v_{ji} Πᵢ`; the coarse outcomes are labeled `0..rows`.
pub fn apply_stochastic(c: &Povm, v: &StochasticMatrix) -> Result<Povm> {
    if v.cols() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            found: v.cols(),
        });
    }
    let elements = (0..v.rows())
        .map(|j| {
            let mut acc = ComplexMatrix::zeros(c.dim, c.dim);
            for (i, e) in c.elements.iter().enumerate() {
                let w = v.get(j, i);
                if w != 0.0 {
                    acc += e.matrix().map(|z| z * w);
                }
            }
            HermitianOperator::from_matrix_unchecked(acc)
        })
        .collect();
    Ok(Povm::from_parts_unchecked(c.dim, OutcomeLabel::indexed(v.rows()), elements))
}

/// `ṽ_{ij} = v_{ji} Vᵢ / V′_j`, returned as a `cols × rows` column-stochastic matrix.
pub fn backward_stochastic(c: &Povm, v: &StochasticMatrix) -> Result<StochasticMatrix> {
    if v.cols() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            found: v.cols(),
        });
    }
    let volumes = c.volumes();
    let coarse = v.apply(&volumes);
    let threshold = tol::SUPPORT * c.dim as f64;
    if let Some(j) = coarse.iter().position(|&w| w <= threshold) {
        return Err(Error::ZeroVolumeOutcome {
            label: OutcomeLabel::index(j).to_string(),
        });
    }
    let back = DMatrix::from_fn(v.cols(), v.rows(), |i, j| v.get(j, i) * volumes[i] / coarse[j]);
    Ok(StochasticMatrix::from_entries_unchecked(back))
}

/// `Πᵢ = Σ_k λ_k Π_{i|k}` over the union of outcome labels, treating a label
/// missing from a POVM as a zero element.
pub fn mix_povms(povms: &[Povm], weights: &[f64]) -> Result<Povm> {
    check_weights(povms.len(), weights)?;
    let dim = povms[0].dim;
    let mut labels: Vec<OutcomeLabel> = Vec::new();
    for p in povms {
        if p.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim,
            });
        }
        for l in &p.labels {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
    }
    let elements = labels
        .iter()
        .map(|l| {
            let mut acc = ComplexMatrix::zeros(dim, dim);
            for (p, &w) in povms.iter().zip(weights) {
                if let Some(i) = p.label_index(l) {
                    acc += p.elements[i].matrix().map(|z| z * w);
                }
            }
            HermitianOperator::from_matrix_unchecked(acc)
        })
        .collect();
    Ok(Povm::from_parts_unchecked(dim, labels, elements))
}

/// Weights must be strictly positive and sum to one.
pub(crate) fn check_weights(n: usize, weights: &[f64]) -> Result<()> {
    if n == 0 || weights.len() != n {
        return Err(Error::WeightError {
            reason: format!("{n} components but {} weights", weights.len()),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::WeightError {
            reason: "weights must be positive".into(),
        });
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol::DIST_SUM {
        return Err(Error::WeightError {
            reason: format!("weights sum to {total}"),
        });
    }
    Ok(())
}
