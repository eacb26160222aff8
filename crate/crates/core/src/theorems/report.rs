use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::entropy::EntropyValue;

/// Joint vectors longer than this are dropped by [`VerificationReport::compact`].
pub const MAX_VECTOR_LEN: usize = 100_000;

/// `f64` that serializes `±∞` as the strings `"+inf"`/`"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            x if x == f64::INFINITY => s.serialize_str("+inf"),
            x if x == f64::NEG_INFINITY => s.serialize_str("-inf"),
            x if x.is_nan() => s.serialize_none(),
            x => s.serialize_f64(x),
        }
    }
}

fn real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    Real(*x).serialize(s)
}

fn real_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    x.map(Real).serialize(s)
}

fn real_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, Real(*v))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    /// An identity with an infinite side; neither passed nor failed.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs = rhs` within `tolerance`.
    Equal,
    /// `lhs ≥ rhs − tolerance`.
    AtLeast,
    /// `lhs ≤ tolerance` exactly when `rhs ≤ condition_tolerance`.
    Iff,
}

/// One identity, inequality or equality-condition check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    #[serde(serialize_with = "real")]
    pub lhs: f64,
    #[serde(serialize_with = "real")]
    pub rhs: f64,
    /// `|lhs − rhs|` for identities.
    #[serde(serialize_with = "real_opt", skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// `lhs − rhs` for inequalities.
    #[serde(serialize_with = "real_opt", skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_is_zero: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_holds: Option<bool>,
    pub status: CheckStatus,
}

impl Check {
    fn base(name: &str, relation: Relation, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            relation,
            lhs,
            rhs,
            residual: None,
            slack: None,
            tolerance,
            condition_tolerance: None,
            gap_is_zero: None,
            condition_holds: None,
            status: CheckStatus::Failed,
        }
    }

    pub fn identity(name: &str, lhs: impl Into<EntropyValue>, rhs: impl Into<EntropyValue>, tolerance: f64) -> Self {
        let (l, r) = (lhs.into(), rhs.into());
        let mut c = Check::base(name, Relation::Equal, l.as_f64(), r.as_f64(), tolerance);
        match (l.finite(), r.finite()) {
            (Some(a), Some(b)) => {
                let residual = (a - b).abs();
                c.residual = Some(residual);
                c.status = if residual <= tolerance {
                    CheckStatus::Passed
                } else {
                    CheckStatus::Failed
                };
            }
            _ => c.status = CheckStatus::Indeterminate,
        }
        c
    }

    pub fn at_least(name: &str, lhs: impl Into<EntropyValue>, rhs: impl Into<EntropyValue>, tolerance: f64) -> Self {
        let (l, r) = (lhs.into(), rhs.into());
        let mut c = Check::base(name, Relation::AtLeast, l.as_f64(), r.as_f64(), tolerance);
        match (l.finite(), r.finite()) {
            (Some(a), Some(b)) => {
                let slack = a - b;
                c.slack = Some(slack);
                c.status = if slack >= -tolerance {
                    CheckStatus::Passed
                } else {
                    CheckStatus::Failed
                };
            }
            (None, Some(_)) => {
                c.slack = Some(f64::INFINITY);
                c.status = CheckStatus::Passed;
            }
            (Some(_), None) => {
                c.slack = Some(f64::NEG_INFINITY);
                c.status = CheckStatus::Failed;
            }
            (None, None) => c.status = CheckStatus::Indeterminate,
        }
        if c.slack.is_some_and(f64::is_nan) {
            c.status = CheckStatus::Failed;
        }
        c
    }

    /// The gap vanishes (within `gap_tol`) iff the stated condition holds,
    /// measured as a non-negative deviation within `condition_tol`.
    pub fn iff(name: &str, gap: f64, gap_tol: f64, deviation: f64, condition_tol: f64) -> Self {
        let mut c = Check::base(name, Relation::Iff, gap, deviation, gap_tol);
        let zero = gap <= gap_tol;
        let holds = deviation <= condition_tol;
        c.condition_tolerance = Some(condition_tol);
        c.gap_is_zero = Some(zero);
        c.condition_holds = Some(holds);
        c.status = if zero == holds {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        };
        c
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Passed
    }
}

/// Where a report came from, for exact replay of batch instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceInfo {
    pub suite: String,
    pub seed: u64,
    pub index: usize,
    pub dim: usize,
    pub variant: String,
}

/// Both sides of every relation a theorem asserts, with the verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub theorem: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceInfo>,
    #[serde(serialize_with = "real_map")]
    pub quantities: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality_condition_holds: Option<bool>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(theorem: &str) -> Self {
        VerificationReport {
            theorem: theorem.to_string(),
            instance: None,
            quantities: BTreeMap::new(),
            flags: BTreeMap::new(),
            vectors: BTreeMap::new(),
            checks: Vec::new(),
            equality_condition_holds: None,
            passed: true,
        }
    }

    pub fn quantity(&mut self, name: &str, value: impl Into<EntropyValue>) {
        self.quantities.insert(name.to_string(), value.into().as_f64());
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.to_string(), value);
    }

    pub fn vector(&mut self, name: &str, values: Vec<f64>) {
        self.vectors.insert(name.to_string(), values);
    }

    pub fn push(&mut self, check: Check) {
        if check.relation == Relation::Iff {
            self.equality_condition_holds = check.condition_holds;
        }
        if check.status == CheckStatus::Failed {
            self.passed = false;
        }
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.quantities.get(name).copied()
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == CheckStatus::Failed).count()
    }

    pub fn indeterminate(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Indeterminate)
            .count()
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().filter_map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn min_slack(&self) -> f64 {
        self.checks
            .iter()
            .filter_map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// Replaces joint vectors longer than [`MAX_VECTOR_LEN`] by their length.
    pub fn compact(&mut self) {
        let long: Vec<String> = self
            .vectors
            .iter()
            .filter(|(_, v)| v.len() > MAX_VECTOR_LEN)
            .map(|(k, _)| k.clone())
            .collect();
        for k in long {
            let len = self.vectors.remove(&k).map_or(0, |v| v.len());
            self.quantities.insert(format!("{k}_len"), len as f64);
        }
    }
}
