use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tol;

/// Outcome identifier. A plain outcome has one component; outcomes of a
/// composed sequence carry one component per step, `(i₁, …, iₙ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeLabel(Vec<String>);

impl OutcomeLabel {
    pub fn new(components: Vec<String>) -> Self {
        OutcomeLabel(components)
    }

    pub fn single(name: impl Into<String>) -> Self {
        OutcomeLabel(vec![name.into()])
    }

    pub fn index(i: usize) -> Self {
        OutcomeLabel(vec![i.to_string()])
    }

    pub fn indexed(n: usize) -> Vec<OutcomeLabel> {
        (0..n).map(OutcomeLabel::index).collect()
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    /// `(self…, next…)`, the label of `next` recorded after `self`.
    pub fn then(&self, next: &OutcomeLabel) -> OutcomeLabel {
        let mut c = self.0.clone();
        c.extend(next.0.iter().cloned());
        OutcomeLabel(c)
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "({})", self.0.join(","))
        }
    }
}

pub(crate) fn check_unique_labels(labels: &[OutcomeLabel]) -> Result<()> {
    let mut sorted: Vec<&OutcomeLabel> = labels.iter().collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::LabelMismatch {
            reason: format!("duplicate outcome label {}", w[0]),
        });
    }
    Ok(())
}

/// A probability vector indexed by outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDistribution {
    labels: Vec<OutcomeLabel>,
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    /// Entries down to `-1e-12` are clipped to zero; the sum must be 1 within `1e-9`.
    pub fn new(labels: Vec<OutcomeLabel>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::LabelMismatch {
                reason: format!("{} labels for {} probabilities", labels.len(), probs.len()),
            });
        }
        if probs.is_empty() {
            return Err(Error::InvalidDistribution {
                reason: "empty distribution".into(),
            });
        }
        check_unique_labels(&labels)?;
        let mut clipped = Vec::with_capacity(probs.len());
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution {
                    reason: format!("entry {k} is not finite"),
                });
            }
            if p < -tol::DIST_NEGATIVE {
                return Err(Error::InvalidDistribution {
                    reason: format!("entry {k} is negative ({p:e})"),
                });
            }
            clipped.push(p.max(0.0));
        }
        let total: f64 = clipped.iter().sum();
        if (total - 1.0).abs() > tol::DIST_SUM {
            return Err(Error::InvalidDistribution {
                reason: format!("entries sum to {total}"),
            });
        }
        Ok(ClassicalDistribution {
            labels,
            probs: clipped,
        })
    }

    /// Labels `0..n`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Self::new(OutcomeLabel::indexed(probs.len()), probs)
    }

    /// Normalizes non-negative counts (or weights) to a distribution.
    pub fn from_counts(labels: Vec<OutcomeLabel>, counts: &[f64]) -> Result<Self> {
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidDistribution {
                reason: "counts must be finite and non-negative".into(),
            });
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution {
                reason: "counts sum to zero".into(),
            });
        }
        Self::new(labels, counts.iter().map(|c| c / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_probs(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        let mut p = vec![0.0; n];
        if at >= n {
            return Err(Error::InvalidDistribution {
                reason: format!("point mass at {at} outside {n} outcomes"),
            });
        }
        p[at] = 1.0;
        Self::from_probs(p)
    }

    pub fn labels(&self) -> &[OutcomeLabel] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Reorders the entries to follow `labels`, which must be a permutation
    /// of this distribution's labels.
    pub fn aligned_to(&self, labels: &[OutcomeLabel]) -> Result<Vec<f64>> {
        if labels.len() != self.labels.len() {
            return Err(Error::LabelMismatch {
                reason: format!("expected {} outcomes, found {}", labels.len(), self.labels.len()),
            });
        }
        labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|m| m == l)
                    .map(|k| self.probs[k])
                    .ok_or_else(|| Error::LabelMismatch {
                        reason: format!("outcome {l} missing"),
                    })
            })
            .collect()
    }
}

/// Column-stochastic matrix `v[(j, i)] = v_{ji}`, `Σ_j v_{ji} = 1` for every column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::NotStochastic {
                reason: "empty matrix".into(),
            });
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::NotStochastic {
                reason: format!("entry {x} is negative or not finite"),
            });
        }
        for (i, col) in entries.column_iter().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > tol::STOCHASTIC_SUM {
                return Err(Error::NotStochastic {
                    reason: format!("column {i} sums to {s}"),
                });
            }
        }
        Ok(StochasticMatrix { entries })
    }

    /// Row-major `rows × cols` data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::NotStochastic {
                reason: "ragged rows".into(),
            });
        }
        Self::new(DMatrix::from_fn(r, c, |j, i| rows[j][i]))
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix {
            entries: DMatrix::identity(n, n),
        }
    }

    /// The `1 × cols` all-ones matrix merging every outcome into one.
    pub fn total_coarsening(cols: usize) -> Self {
        StochasticMatrix {
            entries: DMatrix::from_element(1, cols, 1.0),
        }
    }

    pub(crate) fn from_entries_unchecked(entries: DMatrix<f64>) -> Self {
        StochasticMatrix { entries }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.iter().sum()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// `y = v x` on a probability vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|j| (0..self.cols()).map(|i| self.entries[(j, i)] * x[i]).sum())
            .collect()
    }
}
