//! Standardized evidence units and the pipelines that produce them.
//!
//! Case evidence comes from incident-report extracts whose free-text entity
//! and metric names are mapped onto the ontology through an alias map.
//! Statistical evidence comes from causal discovery on an incident's metrics:
//! instance-level links are kept only when the topology connects the two
//! instances (or they are the same instance), then lifted to the meta level.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcg::{MetaNode, Timestamp};
use crate::ontology::MetadataOntology;
use crate::stats::{lagged_pearson, pearson_p_value};
use crate::telemetry::{IncidentDataset, NodeKey};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MIN_DISCOVERY_SAMPLES: usize = 30;

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvidenceError + '_ {
    move |source| EvidenceError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceKind {
    Case,
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub kind: EvidenceKind,
    pub cause: MetaNode,
    pub effect: MetaNode,
    pub timestamp: Timestamp,
    pub source_id: String,
    /// Connection pattern the record was aligned on, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
}

impl EvidenceRecord {
    pub fn describe(&self) -> String {
        format!("{:?} {} -> {} @{} ({})", self.kind, self.cause, self.effect, self.timestamp, self.source_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMention {
    pub entity_name: String,
    pub metric_name: String,
}

/// One cause/effect pair pulled from an incident report, still in the
/// report's own vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCaseExtract {
    pub report_id: String,
    pub raw_cause: RawMention,
    pub raw_effect: RawMention,
    pub report_time: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricAlias {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub component_type: Option<String>,
    pub metric: String,
}

/// Raw name → canonical name tables. Keys match case-insensitively after
/// trimming.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AliasMap {
    #[serde(default)]
    pub entities: BTreeMap<String, String>,
    #[serde(default)]
    pub metrics: BTreeMap<String, MetricAlias>,
}

fn norm(raw: &str) -> String {
    raw.trim().to_lowercase()
}

impl AliasMap {
    pub fn from_json(text: &str) -> Result<Self, EvidenceError> {
        let raw: AliasMap = serde_json::from_str(text)?;
        Ok(raw.normalized())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvidenceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    fn normalized(self) -> Self {
        Self {
            entities: self.entities.into_iter().map(|(k, v)| (norm(&k), v)).collect(),
            metrics: self.metrics.into_iter().map(|(k, v)| (norm(&k), v)).collect(),
        }
    }

    fn entity_type<'a>(&'a self, ontology: &MetadataOntology, raw: &'a str) -> Option<&'a str> {
        if ontology.has_type(raw) {
            return Some(raw);
        }
        self.entities.get(&norm(raw)).map(String::as_str)
    }
}

/// Bundled alias map matching [`crate::ontology::builtin`] and the simulator's
/// report vocabulary.
pub fn builtin_aliases() -> AliasMap {
    AliasMap::from_json(include_str!("../data/aliases.json")).expect("bundled alias map parses")
}

fn align_mention(m: &RawMention, ontology: &MetadataOntology, aliases: &AliasMap) -> Result<MetaNode, String> {
    let ty = aliases
        .entity_type(ontology, &m.entity_name)
        .ok_or_else(|| format!("unmapped entity {:?}", m.entity_name))?;
    if !ontology.has_type(ty) {
        return Err(format!("entity {:?} maps to unknown type {ty:?}", m.entity_name));
    }
    if ontology.lookup_metric(ty, &m.metric_name).is_some() {
        return Ok(MetaNode::new(ty, &m.metric_name));
    }
    let alias = aliases
        .metrics
        .get(&norm(&m.metric_name))
        .ok_or_else(|| format!("unmapped metric {:?}", m.metric_name))?;
    if let Some(t) = &alias.component_type {
        if t != ty {
            return Err(format!(
                "metric {:?} maps to {t}, but entity {:?} is a {ty}",
                m.metric_name, m.entity_name
            ));
        }
    }
    if ontology.lookup_metric(ty, &alias.metric).is_none() {
        return Err(format!("metric {:?} is not declared for {ty}", alias.metric));
    }
    Ok(MetaNode::new(ty, &alias.metric))
}

/// Maps a raw extract onto canonical nodes. The error names the first entity
/// or metric that could not be aligned.
pub fn align_case_extract(
    extract: &RawCaseExtract,
    ontology: &MetadataOntology,
    aliases: &AliasMap,
) -> Result<EvidenceRecord, String> {
    let cause = align_mention(&extract.raw_cause, ontology, aliases)?;
    let effect = align_mention(&extract.raw_effect, ontology, aliases)?;
    Ok(EvidenceRecord {
        kind: EvidenceKind::Case,
        cause,
        effect,
        timestamp: extract.report_time,
        source_id: extract.report_id.clone(),
        pattern: None,
    })
}

pub fn load_extracts(path: impl AsRef<Path>) -> Result<Vec<RawCaseExtract>, EvidenceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// A statistically significant instance-level link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCausalLink {
    pub cause: NodeKey,
    pub effect: NodeKey,
    pub lag: usize,
    /// Bonferroni-adjusted over the lags scanned for the pair.
    pub p_value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DiscoveryOutput {
    /// Sorted by `(cause, effect, lag)`.
    pub links: Vec<InstanceCausalLink>,
    pub notices: Vec<String>,
}

/// Pluggable causal discovery over one incident's metrics.
pub trait CausalDiscovery {
    fn discover(&self, dataset: &IncidentDataset) -> Result<DiscoveryOutput, EvidenceError>;
}

/// Pairwise lagged Pearson correlation with an analytic significance test.
#[derive(Debug, Clone, Copy)]
pub struct LaggedCorrelationDiscovery {
    pub alpha: f64,
    pub max_lag: usize,
}

impl Default for LaggedCorrelationDiscovery {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            max_lag: 5,
        }
    }
}

/// `|rho|` at each lag, the best lag (smallest on ties) and its signed rho.
struct LagProfile {
    abs: Vec<f64>,
    n: Vec<usize>,
}

impl LagProfile {
    fn compute(x: &[Option<f64>], y: &[Option<f64>], max_lag: usize) -> Self {
        let (abs, n) = (0..=max_lag)
            .map(|k| {
                let (r, n) = lagged_pearson(x, y, k);
                (r.abs(), n)
            })
            .unzip();
        Self { abs, n }
    }

    fn best(&self) -> usize {
        let mut best = 0;
        for k in 1..self.abs.len() {
            if self.abs[k] > self.abs[best] {
                best = k;
            }
        }
        best
    }

    fn best_positive(&self) -> f64 {
        self.abs.iter().skip(1).copied().fold(0.0, f64::max)
    }
}

impl CausalDiscovery for LaggedCorrelationDiscovery {
    fn discover(&self, dataset: &IncidentDataset) -> Result<DiscoveryOutput, EvidenceError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EvidenceError::Parameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let mut out = DiscoveryOutput::default();
        let grid = dataset.grid(dataset.t0, dataset.t_rca);
        let mut usable: Vec<(&NodeKey, Vec<Option<f64>>)> = Vec::new();
        for (key, s) in &dataset.series {
            let values = s.on_grid(&grid);
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            if present.len() < MIN_DISCOVERY_SAMPLES {
                out.notices.push(format!("{key}: {} samples, skipped", present.len()));
                continue;
            }
            let first = present[0];
            if present.iter().all(|v| *v == first) {
                out.notices.push(format!("{key}: constant series, skipped"));
                continue;
            }
            usable.push((key, values));
        }
        if usable.len() < 2 {
            return Err(EvidenceError::InsufficientSamples(format!(
                "need at least 2 series with {MIN_DISCOVERY_SAMPLES}+ samples, found {}",
                usable.len()
            )));
        }

        // Each pair is scanned over 2 * max_lag + 1 distinct lagged correlations;
        // Bonferroni keeps the per-pair false-link rate at alpha.
        let tests = (2 * self.max_lag + 1) as f64;
        for i in 0..usable.len() {
            for j in (i + 1)..usable.len() {
                let (ku, u) = (&usable[i].0, &usable[i].1);
                let (kv, v) = (&usable[j].0, &usable[j].1);
                let uv = LagProfile::compute(u, v, self.max_lag);
                let vu = LagProfile::compute(v, u, self.max_lag);
                for (cause, effect, fwd, back) in [(ku, kv, &uv, &vu), (kv, ku, &vu, &uv)] {
                    let lag = fwd.best();
                    let p = (pearson_p_value(fwd.abs[lag], fwd.n[lag]) * tests).min(1.0);
                    if p >= self.alpha {
                        continue;
                    }
                    // Lag-0 links are symmetric; orient them by the stronger positive-lag profile.
                    if lag == 0 && fwd.best_positive() < back.best_positive() {
                        continue;
                    }
                    out.links.push(InstanceCausalLink {
                        cause: (*cause).clone(),
                        effect: (*effect).clone(),
                        lag,
                        p_value: p,
                    });
                }
            }
        }
        out.links.sort_by(|a, b| {
            (&a.cause, &a.effect, a.lag).cmp(&(&b.cause, &b.effect, b.lag))
        });
        Ok(out)
    }
}

pub fn discover_links(dataset: &IncidentDataset, alpha: f64, max_lag: usize) -> Result<DiscoveryOutput, EvidenceError> {
    LaggedCorrelationDiscovery { alpha, max_lag }.discover(dataset)
}

#[derive(Debug, Clone, Default)]
pub struct AlignmentOutput {
    pub records: Vec<EvidenceRecord>,
    /// Links with no supporting dependency edge.
    pub dropped: usize,
    pub rejected: Vec<String>,
}

/// Keeps links consistent with the topology and lifts them to meta level.
/// At most one record is emitted per `(meta cause, meta effect, pattern)`.
pub fn align_links_to_patterns(
    links: &[InstanceCausalLink],
    dataset: &IncidentDataset,
    ontology: &MetadataOntology,
) -> AlignmentOutput {
    let types = dataset.topology.type_map();
    let mut out = AlignmentOutput::default();
    let mut seen = BTreeSet::new();
    let edges = &dataset.topology.edges;

    for link in links {
        let (cu, eu) = (&link.cause.instance, &link.effect.instance);
        let (Some(ct), Some(et)) = (types.get(cu.as_str()), types.get(eu.as_str())) else {
            let unknown = if types.contains_key(cu.as_str()) { eu } else { cu };
            out.rejected.push(format!("{} -> {}: unknown instance {unknown:?}", link.cause, link.effect));
            continue;
        };
        let pattern = if cu == eu {
            ontology.internal_pattern(ct).map(|p| p.id())
        } else {
            let mut candidates: Vec<String> = edges
                .iter()
                .filter(|e| (&e.src == cu && &e.dst == eu) || (&e.src == eu && &e.dst == cu))
                .filter_map(|e| {
                    let (s, d) = (types[e.src.as_str()], types[e.dst.as_str()]);
                    ontology.match_pattern(s, d, e.conn_type).map(|p| p.id())
                })
                .collect();
            candidates.sort();
            candidates.into_iter().next()
        };
        let Some(pattern) = pattern else {
            out.dropped += 1;
            continue;
        };
        let cause = MetaNode::new(*ct, &link.cause.metric);
        let effect = MetaNode::new(*et, &link.effect.metric);
        let missing = [&cause, &effect]
            .into_iter()
            .find(|n| ontology.lookup_metric(&n.component_type, &n.metric).is_none());
        if let Some(n) = missing {
            out.rejected.push(format!("{} -> {}: {n} is not declared in the ontology", link.cause, link.effect));
            continue;
        }
        if !seen.insert((cause.clone(), effect.clone(), pattern.clone())) {
            continue;
        }
        out.records.push(EvidenceRecord {
            kind: EvidenceKind::Statistical,
            cause,
            effect,
            timestamp: dataset.t_f,
            source_id: dataset.id.clone(),
            pattern: Some(pattern),
        });
    }
    out
}

/// Discovery followed by pattern alignment, the full statistical pipeline.
pub fn statistical_evidence(
    dataset: &IncidentDataset,
    ontology: &MetadataOntology,
    discovery: &dyn CausalDiscovery,
) -> Result<(AlignmentOutput, DiscoveryOutput), EvidenceError> {
    let found = discovery.discover(dataset)?;
    let aligned = align_links_to_patterns(&found.links, dataset, ontology);
    Ok((aligned, found))
}

/// Evidence mined from a set of past incidents and their reports.
#[derive(Debug, Clone, Default)]
pub struct CorpusEvidence {
    /// Ordered by timestamp; ties keep dataset order, then report order.
    pub records: Vec<EvidenceRecord>,
    pub rejected: Vec<String>,
    pub notices: Vec<String>,
}

/// Runs the statistical pipeline on every dataset and aligns every report.
/// Datasets that cannot be analyzed are noted and skipped.
pub fn corpus_evidence(
    datasets: &[IncidentDataset],
    extracts: &[RawCaseExtract],
    ontology: &MetadataOntology,
    aliases: &AliasMap,
    discovery: &(dyn CausalDiscovery + Sync),
) -> CorpusEvidence {
    let mined: Vec<_> = datasets
        .par_iter()
        .map(|d| (d.id.as_str(), statistical_evidence(d, ontology, discovery)))
        .collect();
    let mut out = CorpusEvidence::default();
    for (id, result) in mined {
        match result {
            Ok((aligned, _)) => {
                out.records.extend(aligned.records);
                out.rejected.extend(aligned.rejected.into_iter().map(|r| format!("{id}: {r}")));
            }
            Err(e) => out.notices.push(format!("{id}: {e}")),
        }
    }
    for x in extracts {
        match align_case_extract(x, ontology, aliases) {
            Ok(r) => out.records.push(r),
            Err(e) => out.rejected.push(format!("{}: {e}", x.report_id)),
        }
    }
    out.records.sort_by_key(|r| r.timestamp);
    out
}

pub fn parse_evidence_stream(text: &str) -> Result<Vec<EvidenceRecord>, EvidenceError> {
    read_records(BufReader::new(text.as_bytes()))
}

fn read_records(reader: impl BufRead) -> Result<Vec<EvidenceRecord>, EvidenceError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| EvidenceError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EvidenceRecord = serde_json::from_str(&line).map_err(|e| EvidenceError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_evidence_stream(path: impl AsRef<Path>) -> Result<Vec<EvidenceRecord>, EvidenceError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_records(BufReader::new(file))
}

pub fn write_evidence_stream(path: impl AsRef<Path>, records: &[EvidenceRecord]) -> Result<(), EvidenceError> {
    let path = path.as_ref();
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for r in records {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n").map_err(io_err(path))?;
    }
    file.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::builtin;
    use crate::telemetry::{Instance, MetricSeries, Topology, TopologyEdge};
    use crate::ontology::ConnType;

    fn mention(e: &str, m: &str) -> RawMention {
        RawMention {
            entity_name: e.into(),
            metric_name: m.into(),
        }
    }

    fn aliases() -> AliasMap {
        AliasMap::from_json(
            r#"{"entities":{"order-db":"MySQL","Order Service":"Microservice"},
                "metrics":{"query time":{"type":"MySQL","metric":"db_time"},
                           "response time":{"metric":"api_latency"}}}"#,
        )
        .unwrap()
    }

    #[test]
    fn aligns_report_vocabulary() {
        let x = RawCaseExtract {
            report_id: "INC-1".into(),
            raw_cause: mention("order-db", "query time"),
            raw_effect: mention("order service", "Response Time"),
            report_time: 99,
        };
        let r = align_case_extract(&x, &builtin(), &aliases()).unwrap();
        assert_eq!(r.cause, MetaNode::new("MySQL", "db_time"));
        assert_eq!(r.effect, MetaNode::new("Microservice", "api_latency"));
        assert_eq!(r.timestamp, 99);
        assert_eq!(r.kind, EvidenceKind::Case);
        assert_eq!(align_case_extract(&x, &builtin(), &aliases()).unwrap(), r);
    }

    #[test]
    fn unmapped_entity_is_named() {
        let x = RawCaseExtract {
            report_id: "INC-2".into(),
            raw_cause: mention("warp-drive", "query time"),
            raw_effect: mention("order service", "response time"),
            report_time: 0,
        };
        let err = align_case_extract(&x, &builtin(), &aliases()).unwrap_err();
        assert!(err.contains("warp-drive"), "{err}");
    }

    #[test]
    fn metric_alias_type_mismatch_rejected() {
        let x = RawCaseExtract {
            report_id: "INC-3".into(),
            raw_cause: mention("order service", "query time"),
            raw_effect: mention("order-db", "db_time"),
            report_time: 0,
        };
        assert!(align_case_extract(&x, &builtin(), &aliases()).is_err());
    }

    fn dataset(series: Vec<(&str, &str, Vec<f64>)>, edges: Vec<TopologyEdge>) -> IncidentDataset {
        let n = series[0].2.len() as i64;
        let mut instances: Vec<Instance> = Vec::new();
        let mut map = BTreeMap::new();
        for (inst, metric, v) in series {
            if !instances.iter().any(|i| i.id == inst) {
                instances.push(Instance {
                    id: inst.into(),
                    component_type: "Microservice".into(),
                });
            }
            let s = MetricSeries {
                instance: inst.into(),
                metric: metric.into(),
                timestamps: (0..n).collect(),
                values: v.into_iter().map(Some).collect(),
            };
            map.insert(s.key(), s);
        }
        IncidentDataset {
            id: "case".into(),
            topology: Topology { instances, edges },
            series: map,
            t0: 0,
            t_f: n / 2,
            t_rca: n - 1,
            ground_truth: None,
        }
    }

    #[test]
    fn constant_series_skipped_with_notice() {
        let ramp: Vec<f64> = (0..40).map(|i| ((i * 7919) % 31) as f64).collect();
        let ds = dataset(
            vec![("a", "tps", ramp.clone()), ("b", "tps", vec![1.0; 40]), ("c", "tps", ramp)],
            vec![],
        );
        let out = discover_links(&ds, 0.05, 3).unwrap();
        assert!(out.notices.iter().any(|n| n.contains("b.tps") && n.contains("constant")));
        assert!(out.links.iter().all(|l| l.cause.instance != "b" && l.effect.instance != "b"));
    }

    #[test]
    fn too_few_series_is_an_error() {
        let ds = dataset(vec![("a", "tps", (0..10).map(f64::from).collect())], vec![]);
        assert!(matches!(discover_links(&ds, 0.05, 3), Err(EvidenceError::InsufficientSamples(_))));
    }

    #[test]
    fn alignment_lifts_and_filters() {
        let v: Vec<f64> = (0..40).map(f64::from).collect();
        let ds = dataset(
            vec![("svc_a", "api_latency", v.clone()), ("svc_b", "api_latency", v.clone()), ("svc_c", "api_latency", v.clone()), ("svc_a", "cpu_utilization", v)],
            vec![TopologyEdge {
                src: "svc_a".into(),
                dst: "svc_b".into(),
                conn_type: ConnType::Invoke,
            }],
        );
        let link = |c: (&str, &str), e: (&str, &str)| InstanceCausalLink {
            cause: NodeKey::new(c.0, c.1),
            effect: NodeKey::new(e.0, e.1),
            lag: 1,
            p_value: 0.001,
        };
        let links = vec![
            link(("svc_a", "api_latency"), ("svc_b", "api_latency")),
            link(("svc_b", "api_latency"), ("svc_a", "api_latency")),
            link(("svc_a", "api_latency"), ("svc_c", "api_latency")),
            link(("svc_a", "cpu_utilization"), ("svc_a", "api_latency")),
            link(("svc_a", "api_latency"), ("ghost", "api_latency")),
        ];
        let out = align_links_to_patterns(&links, &ds, &builtin());
        assert_eq!(out.dropped, 1);
        assert_eq!(out.rejected.len(), 1);
        assert!(out.rejected[0].contains("ghost"));
        // Both orientations between a and b collapse to the same meta-edge.
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].pattern.as_deref(), Some("Microservice--invoke-->Microservice"));
        assert_eq!(out.records[1].pattern.as_deref(), Some("Microservice--internal-->Microservice"));
        assert!(out.records.iter().all(|r| r.timestamp == ds.t_f && r.kind == EvidenceKind::Statistical));
    }

    #[test]
    fn stream_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        write_evidence_stream(&path, &[]).unwrap();
        assert!(read_evidence_stream(&path).unwrap().is_empty());

        let rec = |t| EvidenceRecord {
            kind: EvidenceKind::Case,
            cause: MetaNode::new("MySQL", "db_time"),
            effect: MetaNode::new("Microservice", "api_latency"),
            timestamp: t,
            source_id: format!("r{t}"),
            pattern: None,
        };
        let recs = vec![rec(1), rec(2), rec(3)];
        write_evidence_stream(&path, &recs).unwrap();
        assert_eq!(read_evidence_stream(&path).unwrap(), recs);

        let bad = "{\"kind\":\"case\",\"cause\":{\"type\":\"MySQL\",\"metric\":\"db_time\"},\"effect\":{\"type\":\"Microservice\",\"metric\":\"api_latency\"},\"timestamp\":1,\"source_id\":\"x\"}\n{\"kind\":\"case\",\"cause\":{\"type\":\"MySQL\",\"metric\":\"db_time\"},\"effect\":{\"type\":\"Microservice\",\"metric\":\"api_latency\"},\"source_id\":\"x\"}\n";
        match parse_evidence_stream(bad) {
            Err(EvidenceError::Line { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("timestamp"));
            }
            other => panic!("expected line error, got {other:?}"),
        }
    }
}
