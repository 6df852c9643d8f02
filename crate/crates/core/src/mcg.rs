//! Meta causal graph and the log-odds belief evolution model.
//!
//! Each meta-edge carries an aggregated log-odds score `L`; its causal belief
//! score is `sigmoid(L)`. Evidence adds `lambda(kind) * exp(-k * age_days)`.
//! Batch mode recomputes every score from the priors over a full evidence set;
//! streaming mode decays the current score to "now" and adds one increment.
//!
//! Only case evidence may create edges. Statistical evidence for an edge that
//! does not exist is rejected and reported.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{EvidenceKind, EvidenceRecord};
use crate::ontology::{ConnType, ConnectionPattern, MetadataOntology, MetricKind};

/// UTC epoch seconds.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error)]
pub enum McgError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid belief configuration: {0}")]
    Config(String),
    #[error("evidence for {key} at {t_now} is older than the edge's last update {last_update}; replay evidence in time order")]
    Ordering {
        key: String,
        t_now: Timestamp,
        last_update: Timestamp,
    },
    #[error("evidence #{index} is timestamped {timestamp}, after the batch reference time {t_ref}")]
    FutureEvidence {
        index: usize,
        timestamp: Timestamp,
        t_ref: Timestamp,
    },
    #[error("invalid MCG snapshot: {0}")]
    Invalid(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A `(component type, metric)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetaNode {
    #[serde(rename = "type")]
    pub component_type: String,
    pub metric: String,
}

impl MetaNode {
    pub fn new(component_type: impl Into<String>, metric: impl Into<String>) -> Self {
        Self {
            component_type: component_type.into(),
            metric: metric.into(),
        }
    }
}

impl fmt::Display for MetaNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component_type, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub cause: MetaNode,
    pub effect: MetaNode,
    pub pattern: String,
}

impl EdgeKey {
    pub fn new(cause: MetaNode, effect: MetaNode, pattern: impl Into<String>) -> Self {
        Self {
            cause,
            effect,
            pattern: pattern.into(),
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} on {}", self.cause, self.effect, self.pattern)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceCounts {
    pub case: u64,
    pub statistical: u64,
}

impl EvidenceCounts {
    fn bump(&mut self, kind: EvidenceKind) {
        match kind {
            EvidenceKind::Case => self.case += 1,
            EvidenceKind::Statistical => self.statistical += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    Bootstrap,
    CaseEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEdge {
    pub cause: MetaNode,
    pub effect: MetaNode,
    pub pattern: String,
    pub log_odds: f64,
    pub last_update: Timestamp,
    pub counts: EvidenceCounts,
    pub origin: EdgeOrigin,
}

impl MetaEdge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.cause.clone(), self.effect.clone(), self.pattern.clone())
    }

    pub fn cbs(&self) -> f64 {
        cbs(self.log_odds)
    }

    /// Log-odds as they would stand at `t` with no further evidence.
    pub fn decayed_log_odds(&self, t: Timestamp, decay_k: f64) -> f64 {
        let days = (t - self.last_update) as f64 / SECONDS_PER_DAY;
        self.log_odds * (-decay_k * days).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefConfig {
    pub lambda_fr: f64,
    pub lambda_da: f64,
    /// Decay constant per day.
    pub decay_k: f64,
    pub p0: f64,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        Self {
            lambda_fr: 0.5,
            lambda_da: 0.05,
            decay_k: 0.005,
            p0: 0.5,
        }
    }
}

impl BeliefConfig {
    pub fn validate(&self) -> Result<(), McgError> {
        let finite = [self.lambda_fr, self.lambda_da, self.decay_k, self.p0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(McgError::Config("parameters must be finite".into()));
        }
        if self.lambda_da <= 0.0 {
            return Err(McgError::Config(format!("lambda_da must be positive, got {}", self.lambda_da)));
        }
        if self.lambda_fr <= self.lambda_da {
            return Err(McgError::Config(format!(
                "lambda_fr ({}) must exceed lambda_da ({})",
                self.lambda_fr, self.lambda_da
            )));
        }
        if self.decay_k < 0.0 {
            return Err(McgError::Config(format!("decay_k must be non-negative, got {}", self.decay_k)));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(McgError::Config(format!("p0 must lie in (0, 1), got {}", self.p0)));
        }
        Ok(())
    }

    pub fn lambda(&self, kind: EvidenceKind) -> f64 {
        match kind {
            EvidenceKind::Case => self.lambda_fr,
            EvidenceKind::Statistical => self.lambda_da,
        }
    }
}

/// Causal belief score: the logistic sigmoid of a log-odds value.
pub fn cbs(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

pub fn log_odds_from_prior(p0: f64) -> Result<f64, McgError> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(McgError::Domain(format!("prior probability must lie in (0, 1), got {p0}")));
    }
    Ok((p0 / (1.0 - p0)).ln())
}

pub fn decay_factor(delta_t_days: f64, k: f64) -> Result<f64, McgError> {
    if delta_t_days.is_nan() || delta_t_days < 0.0 {
        return Err(McgError::Domain(format!("evidence age must be non-negative, got {delta_t_days}")));
    }
    if k.is_nan() || k < 0.0 {
        return Err(McgError::Domain(format!("decay constant must be non-negative, got {k}")));
    }
    Ok((-k * delta_t_days).exp())
}

/// Why an evidence record or bootstrap edge did not make it into the graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub index: usize,
    pub subject: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateReport {
    pub applied_case: usize,
    pub applied_statistical: usize,
    pub created_edges: usize,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamOutcome {
    Updated(EdgeKey),
    Created(EdgeKey),
    Rejected(String),
}

/// Edge list entry used to seed a skeleton graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapEdge {
    pub cause: MetaNode,
    pub effect: MetaNode,
    pub pattern: String,
}

#[derive(Debug, Clone, Default)]
pub struct BootstrapReport {
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaCausalGraph {
    pub ontology_hash: String,
    pub config: BeliefConfig,
    pub bootstrap_time: Timestamp,
    edges: BTreeMap<EdgeKey, MetaEdge>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    ontology_hash: String,
    config: BeliefConfig,
    bootstrap_time: Timestamp,
    edges: Vec<MetaEdge>,
}

/// Checks that a `(cause, effect)` pair may live on `pattern_id`.
pub fn validate_edge(
    ontology: &MetadataOntology,
    cause: &MetaNode,
    effect: &MetaNode,
    pattern_id: &str,
) -> Result<(), String> {
    let pattern = ontology
        .pattern_by_id(pattern_id)
        .ok_or_else(|| format!("unknown pattern {pattern_id}"))?;
    // Equal endpoints are only a loop inside one component; across a
    // connection they name two different instances.
    if cause == effect && pattern.is_internal() {
        return Err(format!("self-edge on {cause}"));
    }
    for node in [cause, effect] {
        if ontology.lookup_metric(&node.component_type, &node.metric).is_none() {
            return Err(format!("{node} is not declared in the ontology"));
        }
    }
    if !node_types_fit(pattern, cause, effect) {
        return Err(format!("{cause} -> {effect} does not fit pattern {pattern_id}"));
    }
    Ok(())
}

fn is_internal_pattern_id(id: &str) -> bool {
    id.contains(&format!("--{}-->", ConnType::Internal))
}

fn node_types_fit(pattern: &ConnectionPattern, cause: &MetaNode, effect: &MetaNode) -> bool {
    let (c, e) = (&cause.component_type, &effect.component_type);
    let (s, d) = (&pattern.src_type, &pattern.dst_type);
    if s == d {
        c == s && e == s
    } else {
        (c == s && e == d) || (c == d && e == s)
    }
}

impl MetaCausalGraph {
    pub fn empty(ontology: &MetadataOntology, config: BeliefConfig, bootstrap_time: Timestamp) -> Result<Self, McgError> {
        config.validate()?;
        Ok(Self {
            ontology_hash: ontology.content_hash(),
            config,
            bootstrap_time,
            edges: BTreeMap::new(),
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = &MetaEdge> {
        self.edges.values()
    }

    pub fn edge(&self, key: &EdgeKey) -> Option<&MetaEdge> {
        self.edges.get(key)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges_on_pattern<'a>(&'a self, pattern_id: &'a str) -> impl Iterator<Item = &'a MetaEdge> + 'a {
        self.edges.values().filter(move |e| e.pattern == pattern_id)
    }

    /// Inserts a bootstrap edge at the configured prior; used by
    /// [`bootstrap_skeleton`] and by tests that assemble graphs directly.
    pub fn insert_bootstrap_edge(&mut self, key: EdgeKey) -> Result<bool, McgError> {
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        let l0 = log_odds_from_prior(self.config.p0)?;
        self.edges.insert(
            key.clone(),
            MetaEdge {
                cause: key.cause,
                effect: key.effect,
                pattern: key.pattern,
                log_odds: l0,
                last_update: self.bootstrap_time,
                counts: EvidenceCounts::default(),
                origin: EdgeOrigin::Bootstrap,
            },
        );
        Ok(true)
    }

    /// Overrides an edge's log-odds. Intended for fixtures and what-if analysis.
    pub fn set_log_odds(&mut self, key: &EdgeKey, log_odds: f64) -> bool {
        match self.edges.get_mut(key) {
            Some(edge) if log_odds.is_finite() => {
                edge.log_odds = log_odds;
                true
            }
            _ => false,
        }
    }

    /// Picks the edge an evidence record speaks about. Returns the key and
    /// whether the edge already exists.
    fn resolve(
        &self,
        ontology: &MetadataOntology,
        record: &EvidenceRecord,
    ) -> Result<(EdgeKey, bool), String> {
        let (cause, effect) = (&record.cause, &record.effect);
        let mut kinds = Vec::with_capacity(2);
        for node in [cause, effect] {
            match ontology.lookup_metric(&node.component_type, &node.metric) {
                Some(m) => kinds.push(m.kind),
                None => return Err(format!("{node} is not declared in the ontology")),
            }
        }

        let candidates: Vec<&ConnectionPattern> = match &record.pattern {
            Some(id) => {
                let p = ontology
                    .pattern_by_id(id)
                    .ok_or_else(|| format!("unknown pattern {id}"))?;
                if !node_types_fit(p, cause, effect) {
                    return Err(format!("{cause} -> {effect} does not fit pattern {id}"));
                }
                if cause == effect && p.is_internal() {
                    return Err(format!("self-edge on {cause}"));
                }
                vec![p]
            }
            None => {
                let mut ps = ontology.patterns_between(&cause.component_type, &effect.component_type);
                // Same-type pairs involving a resource metric are intra-component first.
                if cause.component_type == effect.component_type
                    && kinds.contains(&MetricKind::Resource)
                {
                    ps.sort_by_key(|p| !p.is_internal());
                }
                if cause == effect {
                    ps.retain(|p| !p.is_internal());
                }
                ps
            }
        };
        if candidates.is_empty() {
            return Err(format!(
                "no connection pattern between {} and {}",
                cause.component_type, effect.component_type
            ));
        }

        let keys: Vec<EdgeKey> = candidates
            .iter()
            .map(|p| EdgeKey::new(cause.clone(), effect.clone(), p.id()))
            .collect();
        if let Some(k) = keys.iter().find(|k| self.edges.contains_key(*k)) {
            return Ok((k.clone(), true));
        }
        Ok((keys.into_iter().next().expect("non-empty"), false))
    }

    /// Recomputes every score from its prior over the full evidence set:
    /// `L = L0 + sum(lambda(kind_i) * exp(-k * age_i))`, ages measured to `t_ref`.
    ///
    /// Bootstrap edges start from `logit(p0)`; edges introduced by case
    /// evidence start from the neutral prior 0. Previously evidence-created
    /// edges are rebuilt only if the supplied evidence still supports them,
    /// and statistical evidence older than an edge's first case evidence is
    /// rejected, as it would be when streamed.
    pub fn batch_update(
        &self,
        ontology: &MetadataOntology,
        evidence: &[EvidenceRecord],
        t_ref: Timestamp,
    ) -> Result<(MetaCausalGraph, UpdateReport), McgError> {
        self.config.validate()?;
        if let Some((index, r)) = evidence.iter().enumerate().find(|(_, r)| r.timestamp > t_ref) {
            return Err(McgError::FutureEvidence {
                index,
                timestamp: r.timestamp,
                t_ref,
            });
        }
        let l0 = log_odds_from_prior(self.config.p0)?;
        let mut next = MetaCausalGraph {
            ontology_hash: self.ontology_hash.clone(),
            config: self.config,
            bootstrap_time: self.bootstrap_time,
            edges: BTreeMap::new(),
        };
        for (key, edge) in &self.edges {
            if edge.origin == EdgeOrigin::Bootstrap {
                let mut e = edge.clone();
                e.log_odds = l0;
                e.counts = EvidenceCounts::default();
                next.edges.insert(key.clone(), e);
            }
        }

        let mut report = UpdateReport::default();
        let mut resolved: Vec<Option<EdgeKey>> = vec![None; evidence.len()];
        // Earliest case evidence behind each evidence-created edge.
        let mut created_at: BTreeMap<EdgeKey, Timestamp> = BTreeMap::new();

        // Structure first: case evidence may introduce edges.
        for (i, r) in evidence.iter().enumerate() {
            if r.kind != EvidenceKind::Case {
                continue;
            }
            match next.resolve(ontology, r) {
                Ok((key, exists)) => {
                    if !exists {
                        next.edges.insert(
                            key.clone(),
                            MetaEdge {
                                cause: key.cause.clone(),
                                effect: key.effect.clone(),
                                pattern: key.pattern.clone(),
                                log_odds: 0.0,
                                last_update: t_ref,
                                counts: EvidenceCounts::default(),
                                origin: EdgeOrigin::CaseEvidence,
                            },
                        );
                        report.created_edges += 1;
                    }
                    if next.edges[&key].origin == EdgeOrigin::CaseEvidence {
                        let t = created_at.entry(key.clone()).or_insert(r.timestamp);
                        *t = (*t).min(r.timestamp);
                    }
                    resolved[i] = Some(key);
                }
                Err(reason) => report.rejected.push(Rejection {
                    index: i,
                    subject: r.describe(),
                    reason,
                }),
            }
        }
        for (i, r) in evidence.iter().enumerate() {
            if r.kind != EvidenceKind::Statistical {
                continue;
            }
            match next.resolve(ontology, r) {
                Ok((key, true)) if created_at.get(&key).is_some_and(|&t| r.timestamp < t) => {
                    report.rejected.push(Rejection {
                        index: i,
                        subject: r.describe(),
                        reason: format!("statistical evidence predates the case evidence that created {key}"),
                    })
                }
                Ok((key, true)) => resolved[i] = Some(key),
                Ok((key, false)) => report.rejected.push(Rejection {
                    index: i,
                    subject: r.describe(),
                    reason: format!("statistical evidence cannot create edge {key}"),
                }),
                Err(reason) => report.rejected.push(Rejection {
                    index: i,
                    subject: r.describe(),
                    reason,
                }),
            }
        }

        let k = self.config.decay_k;
        for (r, key) in evidence.iter().zip(&resolved) {
            let Some(key) = key else { continue };
            let age_days = (t_ref - r.timestamp) as f64 / SECONDS_PER_DAY;
            let delta = self.config.lambda(r.kind) * decay_factor(age_days, k)?;
            let edge = next.edges.get_mut(key).expect("resolved edge exists");
            edge.log_odds += delta;
            edge.counts.bump(r.kind);
            match r.kind {
                EvidenceKind::Case => report.applied_case += 1,
                EvidenceKind::Statistical => report.applied_statistical += 1,
            }
        }
        for edge in next.edges.values_mut() {
            edge.last_update = t_ref;
        }
        Ok((next, report))
    }

    /// One sequential update: decay the edge's current score from its last
    /// update to `t_now`, then add the evidence increment.
    pub fn streaming_update(
        &mut self,
        ontology: &MetadataOntology,
        record: &EvidenceRecord,
        t_now: Timestamp,
    ) -> Result<StreamOutcome, McgError> {
        let (key, exists) = match self.resolve(ontology, record) {
            Ok(r) => r,
            Err(reason) => return Ok(StreamOutcome::Rejected(reason)),
        };
        let lambda = self.config.lambda(record.kind);
        if exists {
            let k = self.config.decay_k;
            let edge = self.edges.get_mut(&key).expect("resolved edge exists");
            if t_now < edge.last_update {
                return Err(McgError::Ordering {
                    key: key.to_string(),
                    t_now,
                    last_update: edge.last_update,
                });
            }
            let days = (t_now - edge.last_update) as f64 / SECONDS_PER_DAY;
            edge.log_odds = edge.log_odds * decay_factor(days, k)? + lambda;
            edge.last_update = t_now;
            edge.counts.bump(record.kind);
            return Ok(StreamOutcome::Updated(key));
        }
        match record.kind {
            EvidenceKind::Statistical => Ok(StreamOutcome::Rejected(format!(
                "statistical evidence cannot create edge {key}"
            ))),
            EvidenceKind::Case => {
                let mut counts = EvidenceCounts::default();
                counts.bump(EvidenceKind::Case);
                self.edges.insert(
                    key.clone(),
                    MetaEdge {
                        cause: key.cause.clone(),
                        effect: key.effect.clone(),
                        pattern: key.pattern.clone(),
                        log_odds: lambda,
                        last_update: t_now,
                        counts,
                        origin: EdgeOrigin::CaseEvidence,
                    },
                );
                Ok(StreamOutcome::Created(key))
            }
        }
    }

    /// Every edge's log-odds decayed to `t`, keyed by edge.
    pub fn log_odds_at(&self, t: Timestamp) -> BTreeMap<EdgeKey, f64> {
        self.edges
            .iter()
            .map(|(k, e)| (k.clone(), e.decayed_log_odds(t, self.config.decay_k)))
            .collect()
    }

    /// Edges violating the structural rule: bootstrap edges absent from the
    /// skeleton, or evidence-created edges with no case evidence.
    pub fn structural_violations(&self, skeleton: &BTreeSet<EdgeKey>) -> Vec<EdgeKey> {
        self.edges
            .values()
            .filter(|e| match e.origin {
                EdgeOrigin::Bootstrap => !skeleton.contains(&e.key()),
                EdgeOrigin::CaseEvidence => e.counts.case == 0,
            })
            .map(MetaEdge::key)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let snap = Snapshot {
            ontology_hash: self.ontology_hash.clone(),
            config: self.config,
            bootstrap_time: self.bootstrap_time,
            edges: self.edges.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&snap).expect("snapshot serializes")
    }

    /// Parses and validates a snapshot. When `ontology` is given, every edge
    /// must resolve against it; a differing ontology hash only raises a
    /// warning.
    pub fn from_json(text: &str, ontology: Option<&MetadataOntology>) -> Result<LoadedMcg, McgError> {
        let snap: Snapshot = serde_json::from_str(text)?;
        snap.config.validate()?;
        let mut edges = BTreeMap::new();
        for e in snap.edges {
            if !e.log_odds.is_finite() {
                return Err(McgError::Invalid(format!("edge {} has non-finite log-odds", e.key())));
            }
            if e.cause == e.effect && is_internal_pattern_id(&e.pattern) {
                return Err(McgError::Invalid(format!("self-edge on {}", e.cause)));
            }
            if let Some(o) = ontology {
                validate_edge(o, &e.cause, &e.effect, &e.pattern)
                    .map_err(|msg| McgError::Invalid(format!("edge {}: {msg}", e.key())))?;
            }
            let key = e.key();
            if edges.insert(key.clone(), e).is_some() {
                return Err(McgError::Invalid(format!("duplicate edge {key}")));
            }
        }
        let mut warnings = Vec::new();
        let mut hash_mismatch = false;
        if let Some(o) = ontology {
            let h = o.content_hash();
            if h != snap.ontology_hash {
                hash_mismatch = true;
                warnings.push(format!(
                    "snapshot was built against ontology {} but {} was supplied",
                    snap.ontology_hash, h
                ));
            }
        }
        Ok(LoadedMcg {
            graph: MetaCausalGraph {
                ontology_hash: snap.ontology_hash,
                config: snap.config,
                bootstrap_time: snap.bootstrap_time,
                edges,
            },
            hash_mismatch,
            warnings,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadedMcg {
    pub graph: MetaCausalGraph,
    pub hash_mismatch: bool,
    pub warnings: Vec<String>,
}

pub fn save_mcg(graph: &MetaCausalGraph, path: impl AsRef<Path>) -> Result<(), McgError> {
    let path = path.as_ref();
    std::fs::write(path, graph.to_json() + "\n").map_err(|source| McgError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_mcg(path: impl AsRef<Path>, ontology: Option<&MetadataOntology>) -> Result<LoadedMcg, McgError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| McgError::Io {
        path: path.display().to_string(),
        source,
    })?;
    MetaCausalGraph::from_json(&text, ontology)
}

pub fn load_bootstrap_edges(path: impl AsRef<Path>) -> Result<Vec<BootstrapEdge>, McgError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| McgError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Builds a skeleton graph with every resolvable edge at `logit(p0)`.
pub fn bootstrap_skeleton(
    ontology: &MetadataOntology,
    edges: &[BootstrapEdge],
    config: BeliefConfig,
    at: Timestamp,
) -> Result<(MetaCausalGraph, BootstrapReport), McgError> {
    log_odds_from_prior(config.p0)?;
    let mut graph = MetaCausalGraph::empty(ontology, config, at)?;
    let mut report = BootstrapReport::default();
    if edges.is_empty() {
        report.warnings.push("bootstrap edge list is empty".into());
    }
    for (i, e) in edges.iter().enumerate() {
        let subject = format!("{} -> {} on {}", e.cause, e.effect, e.pattern);
        if let Err(reason) = validate_edge(ontology, &e.cause, &e.effect, &e.pattern) {
            report.rejected.push(Rejection { index: i, subject, reason });
            continue;
        }
        let key = EdgeKey::new(e.cause.clone(), e.effect.clone(), e.pattern.clone());
        if !graph.insert_bootstrap_edge(key)? {
            report.rejected.push(Rejection {
                index: i,
                subject,
                reason: "duplicate edge".into(),
            });
        }
    }
    Ok((graph, report))
}

/// Skeleton edge list bundled with the crate, matching [`crate::ontology::builtin`].
pub fn builtin_bootstrap_edges() -> Vec<BootstrapEdge> {
    serde_json::from_str(include_str!("../data/bootstrap_edges.json")).expect("bundled edge list parses")
}
