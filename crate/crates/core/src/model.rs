//! JSON model files: a labelled sample space with rational weights, a
//! partition, a list of events and named subsets of `ℕ₀`.
//!
//! ```json
//! {
//!   "omega": ["1", "2", "3", "4"],
//!   "weights": ["3/8", "1/8", "1/8", "3/8"],
//!   "partition": [["1", "2"], ["3", "4"]],
//!   "events": [["2", "3"], ["3", "4"]],
//!   "sets": {"one": {"base": [1]}, "not_zero": {"base": [0], "complemented": true}},
//!   "options": {"backend": "rational", "tolerance": 1e-9, "j_max": 64}
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::condexp::CondExp;
use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::lsn::BernoulliFamily;
use crate::natset::NatSet;
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::space::{SampleSpace, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Rational,
    Float,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(Backend::Rational),
            "float" => Ok(Backend::Float),
            _ => Err(Error::Parse(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_j_max() -> usize {
    64
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            backend: Backend::Rational,
            tolerance: default_tolerance(),
            j_max: default_j_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub base: Vec<usize>,
    #[serde(default)]
    pub complemented: bool,
}

/// The document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub omega: Vec<String>,
    pub weights: Vec<String>,
    pub partition: Vec<Vec<String>>,
    pub events: Vec<Vec<String>>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetSpec>,
    #[serde(default)]
    pub options: ModelOptions,
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub family: BernoulliFamily<Rational>,
    pub sets: BTreeMap<String, NatSet>,
    pub options: ModelOptions,
}

impl Model {
    pub fn new(name: impl Into<String>, family: BernoulliFamily<Rational>) -> Self {
        Model {
            name: name.into(),
            family,
            sets: BTreeMap::new(),
            options: ModelOptions::default(),
        }
    }

    /// The document describing this model.
    pub fn to_file(&self) -> ModelFile {
        let t = self.family.sigma();
        let space = t.space();
        let labels = space.labels();
        ModelFile {
            name: Some(self.name.clone()),
            omega: labels.to_vec(),
            weights: space.masses().iter().map(Scalar::render).collect(),
            partition: (0..t.num_blocks())
                .map(|b| t.block_labels(b).into_iter().map(String::from).collect())
                .collect(),
            events: self
                .family
                .components()
                .iter()
                .map(|q| q.support().into_iter().map(|p| labels[p].clone()).collect())
                .collect(),
            sets: self
                .sets
                .iter()
                .map(|(k, a)| {
                    let spec = SetSpec {
                        base: a.base().iter().copied().collect(),
                        complemented: a.is_complemented(),
                    };
                    (k.clone(), spec)
                })
                .collect(),
            options: self.options,
        }
    }
}

fn space_field(e: &Error) -> &'static str {
    match e {
        Error::EmptySpace | Error::DuplicateLabel(_) => "omega",
        _ => "weights",
    }
}

/// Checks a parsed document and builds the model.
pub fn validate(file: &ModelFile) -> Result<Model> {
    let opts = file.options;
    if !(opts.tolerance.is_finite() && opts.tolerance >= 0.0) {
        return Err(Error::validation("options.tolerance", "must be finite and non-negative"));
    }
    if opts.j_max == 0 {
        return Err(Error::validation("options.j_max", "must be positive"));
    }
    if file.weights.len() != file.omega.len() {
        return Err(Error::validation(
            "weights",
            format!("{} weights for {} points", file.weights.len(), file.omega.len()),
        ));
    }
    let masses = file
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| parse_rational(w).map_err(|e| Error::validation(format!("weights[{i}]"), e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let tol = Tolerances {
        cmp: opts.tolerance,
        ..Tolerances::default()
    };
    let space = SampleSpace::with_tolerances(file.omega.clone(), masses, tol)
        .map_err(|e| Error::validation(space_field(&e), e.to_string()))?;
    let sigma = CondExp::from_labels(&space, &file.partition)
        .map_err(|e| Error::validation("partition", e.to_string()))?;
    let qs = file
        .events
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            LatticeElement::indicator_of_labels(&space, ev)
                .map_err(|e| Error::validation(format!("events[{i}]"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let family = BernoulliFamily::new(&sigma, qs)?;
    let sets = file
        .sets
        .iter()
        .map(|(k, s)| (k.clone(), NatSet::from_parts(s.base.iter().copied(), s.complemented)))
        .collect();
    Ok(Model {
        name: file.name.clone().unwrap_or_else(|| "model".into()),
        family,
        sets,
        options: opts,
    })
}

/// Parses and validates a JSON model document.
pub fn parse_model(text: &str) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    validate(&file)
}

/// Pretty-printed JSON for `model`; `parse_model` reads it back unchanged.
pub fn emit_model(model: &Model) -> String {
    serde_json::to_string_pretty(&model.to_file()).expect("model files always serialize")
}
