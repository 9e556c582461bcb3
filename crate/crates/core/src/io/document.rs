use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text, IoError};
use crate::explain::{ExplainConfig, Outcome};
use crate::mappings::MappingKind;
use crate::{Explanation, Impact};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingDescriptor {
    pub kind: String,
    pub fragments: usize,
    /// Absent for the filter mapping, which needs no replacement.
    pub replacement: Option<String>,
    /// Slice boundaries (time slice) or band edges (frequency kinds).
    pub edges: Vec<usize>,
    pub series_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassImpact {
    pub class: String,
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateImpact {
    pub class: String,
    pub environment: String,
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub runs: usize,
    pub budget: usize,
    pub seed: u64,
    pub model_queries: usize,
    pub exact_mode: bool,
    pub environment_classes: bool,
}

/// Persistent form of one explanation.
///
/// Floats are written in the shortest decimal form that parses back to the
/// same `f64`, so a write/read cycle is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub schema_version: String,
    pub dataset: String,
    pub specimen_index: usize,
    pub model: String,
    /// True label of the specimen, when known.
    pub target_class: Option<String>,
    pub mapping: MappingDescriptor,
    pub classes: Vec<ClassImpact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediates: Option<Vec<IntermediateImpact>>,
    pub run: RunMetadata,
}

impl ExplanationDocument {
    pub fn from_outcome(
        dataset: impl Into<String>,
        specimen_index: usize,
        model: impl Into<String>,
        target_class: Option<String>,
        cfg: &ExplainConfig,
        series_length: usize,
        outcome: &Outcome<f64>,
    ) -> Self {
        let classes = outcome
            .explanation
            .per_class()
            .iter()
            .map(|(c, v)| ClassImpact {
                class: c.clone(),
                phi: v.phi().to_vec(),
                base_value: v.base_value(),
                prediction: v.prediction(),
            })
            .collect();
        let intermediates = outcome.explanation.intermediates().map(|m| {
            m.iter()
                .map(|((c, e), v)| IntermediateImpact {
                    class: c.clone(),
                    environment: e.clone(),
                    phi: v.phi().to_vec(),
                    base_value: v.base_value(),
                    prediction: v.prediction(),
                })
                .collect()
        });
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            dataset: dataset.into(),
            specimen_index,
            model: model.into(),
            target_class,
            mapping: MappingDescriptor {
                kind: cfg.mapping.as_str().to_string(),
                fragments: outcome.info.fragments,
                replacement: cfg.mapping.uses_replacement().then(|| cfg.replacement.as_str().to_string()),
                edges: outcome.info.edges.clone(),
                series_length,
            },
            classes,
            intermediates,
            run: RunMetadata {
                runs: outcome.info.runs,
                budget: cfg.budget,
                seed: cfg.seed,
                model_queries: outcome.info.model_queries,
                exact_mode: outcome.info.exact_mode,
                environment_classes: outcome.explanation.intermediates().is_some(),
            },
        }
    }

    pub fn mapping_kind(&self) -> Result<MappingKind, IoError> {
        self.mapping.kind.parse().map_err(|_| IoError::InvalidDocument(format!("unknown mapping kind {:?}", self.mapping.kind)))
    }

    /// Rebuilds the explanation, checking every invariant on the way.
    pub fn to_explanation(&self) -> Result<Explanation, IoError> {
        let mut per_class = BTreeMap::new();
        for c in &self.classes {
            if c.phi.len() != self.mapping.fragments {
                return Err(IoError::InvalidDocument(format!(
                    "class {:?} has {} impacts for {} fragments",
                    c.class,
                    c.phi.len(),
                    self.mapping.fragments
                )));
            }
            per_class.insert(c.class.clone(), Impact::new(c.phi.clone(), c.base_value, c.prediction)?);
        }
        let intermediates = match &self.intermediates {
            Some(list) => Some(
                list.iter()
                    .map(|i| Ok(((i.class.clone(), i.environment.clone()), Impact::new(i.phi.clone(), i.base_value, i.prediction)?)))
                    .collect::<Result<BTreeMap<_, _>, IoError>>()?,
            ),
            None => None,
        };
        Ok(Explanation::new(per_class, intermediates)?)
    }

    /// The class whose impacts represent this document in comparisons: the
    /// target class when present, else the class with the highest prediction.
    pub fn primary_class(&self) -> Option<&ClassImpact> {
        if let Some(t) = &self.target_class {
            if let Some(c) = self.classes.iter().find(|c| &c.class == t) {
                return Some(c);
            }
        }
        self.classes.iter().reduce(|best, c| if c.prediction > best.prediction { c } else { best })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
        match value.get("schema_version") {
            Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
            Some(serde_json::Value::String(v)) => return Err(IoError::SchemaVersionMismatch { found: v.clone() }),
            Some(other) => return Err(IoError::SchemaVersionMismatch { found: other.to_string() }),
            None => return Err(IoError::Json("missing field `schema_version`".into())),
        }
        serde_json::from_value(value).map_err(|e| IoError::Json(e.to_string()))
    }
}

pub fn write_explanation(doc: &ExplanationDocument, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &doc.to_json())
}

pub fn read_explanation(path: impl AsRef<Path>) -> Result<ExplanationDocument, IoError> {
    ExplanationDocument::from_json(&read_text(path.as_ref())?)
}
