//! Metadata ontology: component types, their standardized metrics, and the
//! connection patterns that declare which component types may interact.
//!
//! Every component type also receives an implicit `Internal` self-pattern
//! (`T--internal-->T`) so that intra-component causality (a resource metric
//! driving an SLI of the same component) has a pattern to attach to.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ontology document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid ontology: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Service level indicator; propagates across component boundaries.
    Sli,
    /// Saturation metric; acts on SLIs from inside its own component.
    Resource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnType {
    Invoke,
    On,
    /// Implicit self-pattern; never declared in an ontology file.
    Internal,
}

impl ConnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ConnType::Invoke => "invoke",
            ConnType::On => "on",
            ConnType::Internal => "internal",
        }
    }
}

impl fmt::Display for ConnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConnType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "invoke" => Ok(ConnType::Invoke),
            "on" => Ok(ConnType::On),
            "internal" => Ok(ConnType::Internal),
            other => Err(format!("unknown connection type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricDef {
    pub name: String,
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
}

impl MetricDef {
    pub fn new(name: impl Into<String>, kind: MetricKind) -> Self {
        Self {
            name: name.into(),
            kind,
            description: String::new(),
            unit: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentType {
    pub name: String,
    pub metrics: Vec<MetricDef>,
}

/// A legal interaction template between two component types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConnectionPattern {
    #[serde(rename = "src")]
    pub src_type: String,
    #[serde(rename = "dst")]
    pub dst_type: String,
    pub conn_type: ConnType,
}

impl ConnectionPattern {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, conn_type: ConnType) -> Self {
        Self {
            src_type: src.into(),
            dst_type: dst.into(),
            conn_type,
        }
    }

    /// Canonical identifier, `src--conn_type-->dst`.
    pub fn id(&self) -> String {
        pattern_id(&self.src_type, &self.dst_type, self.conn_type)
    }

    pub fn is_internal(&self) -> bool {
        self.conn_type == ConnType::Internal
    }
}

pub fn pattern_id(src: &str, dst: &str, conn: ConnType) -> String {
    format!("{src}--{conn}-->{dst}")
}

/// On-disk document shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct OntologyDoc {
    component_types: Vec<ComponentType>,
    #[serde(default)]
    patterns: Vec<ConnectionPattern>,
}

/// A validated ontology. Construct through [`MetadataOntology::new`] or
/// [`load_ontology`]; both enforce referential closure.
#[derive(Debug, Clone)]
pub struct MetadataOntology {
    component_types: Vec<ComponentType>,
    patterns: Vec<ConnectionPattern>,
    internal: Vec<ConnectionPattern>,
    type_index: BTreeMap<String, usize>,
    pattern_index: BTreeMap<String, PatternSlot>,
}

#[derive(Debug, Clone, Copy)]
enum PatternSlot {
    Declared(usize),
    Internal(usize),
}

impl PartialEq for MetadataOntology {
    fn eq(&self, other: &Self) -> bool {
        self.component_types == other.component_types && self.patterns == other.patterns
    }
}

impl MetadataOntology {
    pub fn new(
        component_types: Vec<ComponentType>,
        patterns: Vec<ConnectionPattern>,
    ) -> Result<Self, OntologyError> {
        let invalid = |msg: String| Err(OntologyError::Invalid(msg));

        let mut type_index = BTreeMap::new();
        for (i, ct) in component_types.iter().enumerate() {
            if ct.name.trim().is_empty() {
                return invalid(format!("component type #{i} has an empty name"));
            }
            if type_index.insert(ct.name.clone(), i).is_some() {
                return invalid(format!("duplicate component type {:?}", ct.name));
            }
            if ct.metrics.is_empty() {
                return invalid(format!("component type {:?} declares no metrics", ct.name));
            }
            let mut seen = HashSet::new();
            for m in &ct.metrics {
                if m.name.trim().is_empty() {
                    return invalid(format!("component type {:?} has a metric with an empty name", ct.name));
                }
                if !seen.insert(m.name.as_str()) {
                    return invalid(format!("duplicate metric {:?} in component type {:?}", m.name, ct.name));
                }
            }
        }

        let mut pattern_index = BTreeMap::new();
        for (i, p) in patterns.iter().enumerate() {
            if p.conn_type == ConnType::Internal {
                return invalid(format!(
                    "pattern {} uses the reserved internal connection type",
                    p.id()
                ));
            }
            for endpoint in [&p.src_type, &p.dst_type] {
                if !type_index.contains_key(endpoint) {
                    return invalid(format!(
                        "pattern {} references undeclared component type {:?}",
                        p.id(),
                        endpoint
                    ));
                }
            }
            if pattern_index.insert(p.id(), PatternSlot::Declared(i)).is_some() {
                return invalid(format!("duplicate pattern {}", p.id()));
            }
        }

        let internal: Vec<ConnectionPattern> = component_types
            .iter()
            .map(|ct| ConnectionPattern::new(&ct.name, &ct.name, ConnType::Internal))
            .collect();
        for (i, p) in internal.iter().enumerate() {
            pattern_index.insert(p.id(), PatternSlot::Internal(i));
        }

        Ok(Self {
            component_types,
            patterns,
            internal,
            type_index,
            pattern_index,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, OntologyError> {
        let doc: OntologyDoc = serde_json::from_str(text)?;
        Self::new(doc.component_types, doc.patterns)
    }

    pub fn to_json(&self) -> String {
        let doc = OntologyDoc {
            component_types: self.component_types.clone(),
            patterns: self.patterns.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("ontology serializes")
    }

    pub fn component_types(&self) -> &[ComponentType] {
        &self.component_types
    }

    /// Declared patterns only; implicit internal patterns are reachable via
    /// [`Self::internal_pattern`] and [`Self::pattern_by_id`].
    pub fn patterns(&self) -> &[ConnectionPattern] {
        &self.patterns
    }

    pub fn component_type(&self, name: &str) -> Option<&ComponentType> {
        self.type_index.get(name).map(|&i| &self.component_types[i])
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.type_index.contains_key(name)
    }

    pub fn lookup_metric(&self, component_type: &str, metric_name: &str) -> Option<&MetricDef> {
        self.component_type(component_type)?
            .metrics
            .iter()
            .find(|m| m.name == metric_name)
    }

    /// Exact, direction-sensitive lookup of a pattern triple.
    pub fn match_pattern(
        &self,
        src_type: &str,
        dst_type: &str,
        conn_type: ConnType,
    ) -> Option<&ConnectionPattern> {
        if conn_type == ConnType::Internal && src_type != dst_type {
            return None;
        }
        self.pattern_by_id(&pattern_id(src_type, dst_type, conn_type))
    }

    pub fn internal_pattern(&self, component_type: &str) -> Option<&ConnectionPattern> {
        self.match_pattern(component_type, component_type, ConnType::Internal)
    }

    pub fn pattern_by_id(&self, id: &str) -> Option<&ConnectionPattern> {
        match self.pattern_index.get(id)? {
            PatternSlot::Declared(i) => Some(&self.patterns[*i]),
            PatternSlot::Internal(i) => Some(&self.internal[*i]),
        }
    }

    /// All patterns (declared first, then internal) whose endpoint types are
    /// `{a, b}` in either orientation.
    pub fn patterns_between(&self, a: &str, b: &str) -> Vec<&ConnectionPattern> {
        let mut out: Vec<&ConnectionPattern> = self
            .patterns
            .iter()
            .filter(|p| (p.src_type == a && p.dst_type == b) || (p.src_type == b && p.dst_type == a))
            .collect();
        if a == b {
            if let Some(p) = self.internal_pattern(a) {
                out.push(p);
            }
        }
        out
    }

    /// Stable content hash, used to tie MCG snapshots to the ontology they
    /// were built against.
    pub fn content_hash(&self) -> String {
        let doc = OntologyDoc {
            component_types: self.component_types.clone(),
            patterns: self.patterns.clone(),
        };
        let canonical = serde_json::to_vec(&doc).expect("ontology serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<MetadataOntology, OntologyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    MetadataOntology::from_json(&text)
}

pub fn save_ontology(ontology: &MetadataOntology, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, ontology.to_json() + "\n")
}

/// The cloud-native ontology bundled with the crate: Microservice, MySQL,
/// Redis and Host, with invoke/on patterns between them.
pub fn builtin() -> MetadataOntology {
    MetadataOntology::from_json(include_str!("../data/ontology.json"))
        .expect("bundled ontology is valid")
}
