//! JSON documents for states, measurements, stochastic matrices and
//! distributions.
//!
//! Complex entries are `[re, im]` pairs (a bare number is read as real);
//! matrices are row-major nested arrays. Every emitted document carries
//! `"schema": "obsent/1"`.

use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::error::Error;
use crate::linalg::{hermitize, ComplexMatrix};
use crate::objects::{
    ClassicalDistribution, CoarseGrainingSequence, DensityMatrix, Instrument, KrausMap, Measurement,
    OutcomeLabel, Povm, StochasticMatrix,
};

pub const SCHEMA: &str = "obsent/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Complex([f64; 2]),
    Real(f64),
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Complex([re, im]) => Complex64::new(re, im),
            Entry::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub type MatrixDoc = Vec<Vec<Entry>>;

/// A label is a string, or an array of strings for a multi-step outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelDoc {
    Single(String),
    Multi(Vec<String>),
}

impl From<&OutcomeLabel> for LabelDoc {
    fn from(l: &OutcomeLabel) -> Self {
        match l.components() {
            [one] => LabelDoc::Single(one.clone()),
            many => LabelDoc::Multi(many.to_vec()),
        }
    }
}

impl From<LabelDoc> for OutcomeLabel {
    fn from(l: LabelDoc) -> Self {
        match l {
            LabelDoc::Single(s) => OutcomeLabel::single(s),
            LabelDoc::Multi(v) => OutcomeLabel::new(v),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub matrix: MatrixDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementDoc {
    pub label: LabelDoc,
    pub matrix: MatrixDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub elements: Vec<ElementDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchDoc {
    pub label: LabelDoc,
    pub kraus: Vec<MatrixDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstrumentDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub branches: Vec<BranchDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub kind: String,
    /// Each step is an instrument or a POVM document (measured with Lüders
    /// instruments).
    pub steps: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StochasticDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub kind: String,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeDoc {
    pub label: LabelDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub kind: String,
    pub outcomes: Vec<OutcomeDoc>,
}

/// A validated document.
#[derive(Debug, Clone)]
pub enum Loaded {
    State(DensityMatrix),
    Povm(Povm),
    Instrument(Instrument),
    Sequence(CoarseGrainingSequence),
    Stochastic(StochasticMatrix),
    /// `from_counts` records whether the entries were counts.
    Distribution { dist: ClassicalDistribution, from_counts: bool, total: f64 },
}

impl Loaded {
    pub fn kind(&self) -> &'static str {
        match self {
            Loaded::State(_) => "state",
            Loaded::Povm(_) => "povm",
            Loaded::Instrument(_) => "instrument",
            Loaded::Sequence(_) => "sequence",
            Loaded::Stochastic(_) => "stochastic",
            Loaded::Distribution { .. } => "distribution",
        }
    }
}

/// Errors are located by file and JSON path.
struct Ctx<'a> {
    file: &'a str,
    prefix: String,
}

impl Ctx<'_> {
    fn at(&self, path: &str) -> String {
        match (self.prefix.is_empty(), path.is_empty()) {
            (true, _) => path.to_string(),
            (false, true) => self.prefix.clone(),
            (false, false) => format!("{}.{}", self.prefix, path),
        }
    }

    fn invalid(&self, path: &str, source: Error) -> CliError {
        CliError::Invalid {
            file: self.file.to_string(),
            path: self.at(path),
            source,
        }
    }

    fn parse<T: DeserializeOwned>(&self, value: serde_json::Value) -> Result<T, CliError> {
        serde_path_to_error::deserialize(value).map_err(|e| CliError::Parse {
            file: self.file.to_string(),
            path: self.at(&e.path().to_string()),
            message: e.into_inner().to_string(),
        })
    }
}

pub fn load_file(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_document(&text, &path.display().to_string())
}

/// Parses and validates a document. `file` only labels diagnostics.
pub fn parse_document(text: &str, file: &str) -> Result<Loaded, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: serde_json::Value = serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Parse {
        file: file.to_string(),
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    let ctx = Ctx {
        file,
        prefix: String::new(),
    };
    load_value(value, &ctx)
}

fn load_value(value: serde_json::Value, ctx: &Ctx<'_>) -> Result<Loaded, CliError> {
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| CliError::Parse {
            file: ctx.file.to_string(),
            path: ctx.at("kind"),
            message: "missing string field \"kind\"".into(),
        })?
        .to_string();
    if let Some(schema) = value.get("schema") {
        if schema.as_str() != Some(SCHEMA) {
            return Err(CliError::Parse {
                file: ctx.file.to_string(),
                path: ctx.at("schema"),
                message: format!("unsupported schema {schema}, expected \"{SCHEMA}\""),
            });
        }
    }
    match kind.as_str() {
        "state" => load_state(ctx.parse(value)?, ctx).map(Loaded::State),
        "povm" => load_povm(ctx.parse(value)?, ctx).map(Loaded::Povm),
        "instrument" => load_instrument(ctx.parse(value)?, ctx).map(Loaded::Instrument),
        "sequence" => load_sequence(ctx.parse(value)?, ctx).map(Loaded::Sequence),
        "stochastic" => {
            let doc: StochasticDoc = ctx.parse(value)?;
            StochasticMatrix::from_rows(&doc.rows)
                .map(Loaded::Stochastic)
                .map_err(|e| ctx.invalid("rows", e))
        }
        "distribution" => load_distribution(ctx.parse(value)?, ctx),
        other => Err(CliError::Parse {
            file: ctx.file.to_string(),
            path: ctx.at("kind"),
            message: format!(
                "unknown kind {other:?}; expected state, povm, instrument, sequence, stochastic or distribution"
            ),
        }),
    }
}

fn square_matrix(doc: &MatrixDoc, ctx: &Ctx<'_>, path: &str) -> Result<ComplexMatrix, CliError> {
    let n = doc.len();
    for (i, row) in doc.iter().enumerate() {
        if row.len() != n {
            return Err(ctx.invalid(
                &format!("{path}[{i}]"),
                Error::NonSquare {
                    rows: n,
                    cols: row.len(),
                },
            ));
        }
    }
    if n == 0 {
        return Err(ctx.invalid(path, Error::NonSquare { rows: 0, cols: 0 }));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| doc[i][j].into()))
}

fn rect_matrix(doc: &MatrixDoc, ctx: &Ctx<'_>, path: &str) -> Result<ComplexMatrix, CliError> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    if let Some(i) = doc.iter().position(|r| r.len() != cols) {
        return Err(ctx.invalid(
            &format!("{path}[{i}]"),
            Error::DimensionMismatch {
                expected: cols,
                found: doc[i].len(),
            },
        ));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| doc[i][j].into()))
}

fn check_declared_dim(declared: Option<usize>, found: usize, ctx: &Ctx<'_>) -> Result<(), CliError> {
    match declared {
        Some(d) if d != found => Err(ctx.invalid("dim", Error::DimensionMismatch { expected: d, found })),
        _ => Ok(()),
    }
}

fn load_state(doc: StateDoc, ctx: &Ctx<'_>) -> Result<DensityMatrix, CliError> {
    let m = square_matrix(&doc.matrix, ctx, "matrix")?;
    check_declared_dim(doc.dim, m.nrows(), ctx)?;
    DensityMatrix::from_matrix(&m).map_err(|e| ctx.invalid("matrix", e))
}

fn load_povm(doc: PovmDoc, ctx: &Ctx<'_>) -> Result<Povm, CliError> {
    let mut labels = Vec::with_capacity(doc.elements.len());
    let mut elements = Vec::with_capacity(doc.elements.len());
    for (i, el) in doc.elements.into_iter().enumerate() {
        let path = format!("elements[{i}].matrix");
        let m = square_matrix(&el.matrix, ctx, &path)?;
        elements.push(hermitize(&m).map_err(|e| ctx.invalid(&path, e))?);
        labels.push(OutcomeLabel::from(el.label));
    }
    let dim = elements.first().map_or(0, |e| e.dim());
    check_declared_dim(doc.dim, dim, ctx)?;
    if let Some(i) = elements.iter().position(|e| e.dim() != dim) {
        return Err(ctx.invalid(
            &format!("elements[{i}].matrix"),
            Error::DimensionMismatch {
                expected: dim,
                found: elements[i].dim(),
            },
        ));
    }
    let povm = Povm::new(labels, elements).map_err(|e| ctx.invalid("elements", e))?;
    Ok(povm.without_empty())
}

fn load_instrument(doc: InstrumentDoc, ctx: &Ctx<'_>) -> Result<Instrument, CliError> {
    let mut labels = Vec::with_capacity(doc.branches.len());
    let mut branches = Vec::with_capacity(doc.branches.len());
    let mut dim = doc.dim;
    for (i, b) in doc.branches.into_iter().enumerate() {
        let mut kraus = Vec::with_capacity(b.kraus.len());
        for (m, k) in b.kraus.iter().enumerate() {
            let path = format!("branches[{i}].kraus[{m}]");
            let k = rect_matrix(k, ctx, &path)?;
            let d = *dim.get_or_insert(k.ncols());
            if k.nrows() != d || k.ncols() != d {
                return Err(ctx.invalid(
                    &path,
                    Error::DimensionMismatch {
                        expected: d,
                        found: if k.ncols() != d { k.ncols() } else { k.nrows() },
                    },
                ));
            }
            kraus.push(k);
        }
        let d = dim.unwrap_or(0);
        branches.push(KrausMap::new(d, d, kraus).map_err(|e| ctx.invalid(&format!("branches[{i}]"), e))?);
        labels.push(OutcomeLabel::from(b.label));
    }
    Instrument::new(labels, branches).map_err(|e| ctx.invalid("branches", e))
}

fn load_sequence(doc: SequenceDoc, ctx: &Ctx<'_>) -> Result<CoarseGrainingSequence, CliError> {
    let mut steps = Vec::with_capacity(doc.steps.len());
    for (i, step) in doc.steps.into_iter().enumerate() {
        let inner = Ctx {
            file: ctx.file,
            prefix: ctx.at(&format!("steps[{i}]")),
        };
        let inst = match load_value(step, &inner)? {
            Loaded::Instrument(x) => x,
            Loaded::Povm(p) => p.luders_instrument().map_err(|e| inner.invalid("", e))?,
            other => {
                return Err(CliError::Parse {
                    file: ctx.file.to_string(),
                    path: inner.at("kind"),
                    message: format!("a sequence step must be an instrument or povm, found {}", other.kind()),
                })
            }
        };
        steps.push(inst);
    }
    CoarseGrainingSequence::new(steps).map_err(|e| ctx.invalid("steps", e))
}

fn load_distribution(doc: DistributionDoc, ctx: &Ctx<'_>) -> Result<Loaded, CliError> {
    let counts = doc.outcomes.iter().all(|o| o.count.is_some() && o.p.is_none());
    let probs = doc.outcomes.iter().all(|o| o.p.is_some() && o.count.is_none());
    if !counts && !probs {
        return Err(ctx.invalid(
            "outcomes",
            Error::InvalidDistribution {
                reason: "every outcome needs exactly one of \"p\" or \"count\", used consistently".into(),
            },
        ));
    }
    let values: Vec<f64> = doc.outcomes.iter().map(|o| o.p.or(o.count).unwrap_or(0.0)).collect();
    let labels: Vec<OutcomeLabel> = doc.outcomes.into_iter().map(|o| o.label.into()).collect();
    let total: f64 = values.iter().sum();
    let dist = if counts {
        ClassicalDistribution::from_counts(labels, &values)
    } else {
        ClassicalDistribution::new(labels, values)
    }
    .map_err(|e| ctx.invalid("outcomes", e))?;
    Ok(Loaded::Distribution {
        dist,
        from_counts: counts,
        total,
    })
}

/// Any coarse-graining document as a [`Measurement`].
pub fn as_measurement(loaded: Loaded, file: &str) -> Result<Measurement, CliError> {
    match loaded {
        Loaded::Povm(p) => Ok(Measurement::Povm(p)),
        Loaded::Instrument(i) => Ok(Measurement::Instrument(i)),
        Loaded::Sequence(s) => Ok(Measurement::Sequence(s)),
        other => Err(wrong_kind(file, "povm, instrument or sequence", other.kind())),
    }
}

pub fn wrong_kind(file: &str, expected: &str, found: &str) -> CliError {
    CliError::Parse {
        file: file.to_string(),
        path: "kind".into(),
        message: format!("expected {expected}, found {found}"),
    }
}

fn matrix_doc(m: &ComplexMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Entry::Complex([m[(i, j)].re, m[(i, j)].im])).collect())
        .collect()
}

pub fn state_doc(rho: &DensityMatrix) -> StateDoc {
    StateDoc {
        schema: Some(SCHEMA.into()),
        kind: "state".into(),
        dim: Some(rho.dim()),
        matrix: matrix_doc(rho.matrix()),
    }
}

pub fn povm_doc(c: &Povm) -> PovmDoc {
    PovmDoc {
        schema: Some(SCHEMA.into()),
        kind: "povm".into(),
        dim: Some(c.dim()),
        elements: c
            .labels()
            .iter()
            .zip(c.elements())
            .map(|(l, e)| ElementDoc {
                label: l.into(),
                matrix: matrix_doc(e.matrix()),
            })
            .collect(),
    }
}

pub fn instrument_doc(c: &Instrument) -> InstrumentDoc {
    InstrumentDoc {
        schema: Some(SCHEMA.into()),
        kind: "instrument".into(),
        dim: Some(c.dim()),
        branches: c
            .labels()
            .iter()
            .zip(c.branches())
            .map(|(l, b)| BranchDoc {
                label: l.into(),
                kraus: b.kraus().iter().map(matrix_doc).collect(),
            })
            .collect(),
    }
}

pub fn sequence_doc(s: &CoarseGrainingSequence) -> SequenceDoc {
    SequenceDoc {
        schema: Some(SCHEMA.into()),
        kind: "sequence".into(),
        steps: s
            .steps()
            .iter()
            .map(|i| {
                let mut d = instrument_doc(i);
                d.schema = None;
                serde_json::to_value(d).expect("document serializes")
            })
            .collect(),
    }
}

pub fn stochastic_doc(v: &StochasticMatrix) -> StochasticDoc {
    StochasticDoc {
        schema: Some(SCHEMA.into()),
        kind: "stochastic".into(),
        rows: v.to_rows(),
    }
}

pub fn distribution_doc(d: &ClassicalDistribution) -> DistributionDoc {
    DistributionDoc {
        schema: Some(SCHEMA.into()),
        kind: "distribution".into(),
        outcomes: d
            .labels()
            .iter()
            .zip(d.probs())
            .map(|(l, &p)| OutcomeDoc {
                label: l.into(),
                p: Some(p),
                count: None,
            })
            .collect(),
    }
}

/// Serializes a loaded object back to its canonical document.
pub fn to_value(loaded: &Loaded) -> serde_json::Value {
    let v = match loaded {
        Loaded::State(x) => serde_json::to_value(state_doc(x)),
        Loaded::Povm(x) => serde_json::to_value(povm_doc(x)),
        Loaded::Instrument(x) => serde_json::to_value(instrument_doc(x)),
        Loaded::Sequence(x) => serde_json::to_value(sequence_doc(x)),
        Loaded::Stochastic(x) => serde_json::to_value(stochastic_doc(x)),
        Loaded::Distribution { dist, .. } => serde_json::to_value(distribution_doc(dist)),
    };
    v.expect("document serializes")
}
