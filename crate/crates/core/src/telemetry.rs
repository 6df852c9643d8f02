//! Incident datasets, baseline z-scoring and fault relevance zone delimitation.
//!
//! A dataset directory holds three files:
//!
//! ```text
//! topology.json   {"instances":[{"id","type"}], "edges":[{"src","dst","conn_type"}]}
//! metrics.csv     timestamp,instance,metric,value   (long format, epoch seconds)
//! case.json       {"t0","t_F","t_rca","ground_truth":{"service","metric"}?}
//! ```
//!
//! Directories in the RCAEval layout (`data.csv` in wide format with a `time`
//! column plus `inject_time.txt`) are accepted as well.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcg::Timestamp;
use crate::ontology::{ConnType, MetadataOntology};
use crate::stats::mean_std;

pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;
pub const Z_CAP: f64 = 50.0;
pub const MIN_BASELINE_SAMPLES: usize = 5;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("missing dataset file {0}")]
    MissingFile(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {file}: {message}")]
    Parse { file: String, message: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// An `(instance, metric)` pair; the node identity at instance level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub instance: String,
    pub metric: String,
}

impl NodeKey {
    pub fn new(instance: impl Into<String>, metric: impl Into<String>) -> Self {
        Self {
            instance: instance.into(),
            metric: metric.into(),
        }
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    #[serde(rename = "type")]
    pub component_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopologyEdge {
    pub src: String,
    pub dst: String,
    pub conn_type: ConnType,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub instances: Vec<Instance>,
    #[serde(default)]
    pub edges: Vec<TopologyEdge>,
}

impl Topology {
    pub fn validate(&self, ontology: Option<&MetadataOntology>) -> Result<(), TelemetryError> {
        let mut ids = BTreeSet::new();
        for inst in &self.instances {
            if inst.id.is_empty() {
                return Err(TelemetryError::Invalid("instance with empty id".into()));
            }
            if !ids.insert(inst.id.as_str()) {
                return Err(TelemetryError::Invalid(format!("duplicate instance {:?}", inst.id)));
            }
            if let Some(o) = ontology {
                if !o.has_type(&inst.component_type) {
                    return Err(TelemetryError::Invalid(format!(
                        "instance {:?} has unknown component type {:?}",
                        inst.id, inst.component_type
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            for end in [&e.src, &e.dst] {
                if !ids.contains(end.as_str()) {
                    return Err(TelemetryError::Invalid(format!(
                        "topology edge {} -> {} references undeclared instance {:?}",
                        e.src, e.dst, end
                    )));
                }
            }
            if e.conn_type == ConnType::Internal {
                return Err(TelemetryError::Invalid(format!(
                    "topology edge {} -> {} uses the reserved internal connection type",
                    e.src, e.dst
                )));
            }
            if !seen.insert(e) {
                return Err(TelemetryError::Invalid(format!(
                    "duplicate topology edge {} -{}-> {}",
                    e.src, e.conn_type, e.dst
                )));
            }
        }
        Ok(())
    }

    pub fn instance_type(&self, id: &str) -> Option<&str> {
        self.instances
            .iter()
            .find(|i| i.id == id)
            .map(|i| i.component_type.as_str())
    }

    pub fn type_map(&self) -> HashMap<&str, &str> {
        self.instances
            .iter()
            .map(|i| (i.id.as_str(), i.component_type.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub instance: String,
    pub metric: String,
    pub timestamps: Vec<Timestamp>,
    /// `None` marks a missing sample.
    pub values: Vec<Option<f64>>,
}

impl MetricSeries {
    pub fn key(&self) -> NodeKey {
        NodeKey::new(&self.instance, &self.metric)
    }

    /// Values placed on `grid` (sorted timestamps); absent points are `None`.
    pub fn on_grid(&self, grid: &[Timestamp]) -> Vec<Option<f64>> {
        let mut out = vec![None; grid.len()];
        let mut g = 0;
        for (t, v) in self.timestamps.iter().zip(&self.values) {
            while g < grid.len() && grid[g] < *t {
                g += 1;
            }
            if g < grid.len() && grid[g] == *t {
                out[g] = *v;
            }
        }
        out
    }

    fn window(&self, from: Timestamp, to_inclusive: Timestamp) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.timestamps
            .iter()
            .zip(&self.values)
            .filter(move |(t, _)| **t >= from && **t <= to_inclusive)
            .filter_map(|(t, v)| v.map(|v| (*t, v)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub service: String,
    pub metric: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub t0: Timestamp,
    #[serde(rename = "t_F")]
    pub t_f: Timestamp,
    pub t_rca: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidentDataset {
    pub id: String,
    pub topology: Topology,
    pub series: BTreeMap<NodeKey, MetricSeries>,
    pub t0: Timestamp,
    pub t_f: Timestamp,
    pub t_rca: Timestamp,
    pub ground_truth: Option<GroundTruth>,
}

impl IncidentDataset {
    pub fn validate(&self, ontology: Option<&MetadataOntology>) -> Result<(), TelemetryError> {
        if !(self.t0 < self.t_f && self.t_f < self.t_rca) {
            return Err(TelemetryError::Invalid(format!(
                "time ordering violated: t0={} t_F={} t_rca={}",
                self.t0, self.t_f, self.t_rca
            )));
        }
        self.topology.validate(ontology)?;
        let types = self.topology.type_map();
        for (key, s) in &self.series {
            let Some(ty) = types.get(key.instance.as_str()) else {
                return Err(TelemetryError::Invalid(format!(
                    "series {key} references undeclared instance {:?}",
                    key.instance
                )));
            };
            if s.timestamps.is_empty() || s.timestamps.len() != s.values.len() {
                return Err(TelemetryError::Invalid(format!("series {key} is empty or ragged")));
            }
            if s.timestamps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(TelemetryError::Invalid(format!("series {key} timestamps not strictly increasing")));
            }
            if s.timestamps[0] < self.t0 || *s.timestamps.last().unwrap() > self.t_rca {
                return Err(TelemetryError::Invalid(format!("series {key} leaves [t0, t_rca]")));
            }
            if let Some(o) = ontology {
                if o.lookup_metric(ty, &key.metric).is_none() {
                    return Err(TelemetryError::Invalid(format!(
                        "series {key}: metric {:?} is not declared for {ty}",
                        key.metric
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn case_meta(&self) -> CaseMeta {
        CaseMeta {
            t0: self.t0,
            t_f: self.t_f,
            t_rca: self.t_rca,
            ground_truth: self.ground_truth.clone(),
        }
    }

    /// Sorted union of all series timestamps within `[from, to]`.
    pub fn grid(&self, from: Timestamp, to: Timestamp) -> Vec<Timestamp> {
        let set: BTreeSet<Timestamp> = self
            .series
            .values()
            .flat_map(|s| s.timestamps.iter().copied())
            .filter(|t| *t >= from && *t <= to)
            .collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: IncidentDataset,
    /// Rows replaced by a later row with the same (instance, metric, timestamp).
    pub duplicates_dropped: usize,
    pub out_of_window_dropped: usize,
}

fn read_file(path: &Path) -> Result<String, TelemetryError> {
    if !path.exists() {
        return Err(TelemetryError::MissingFile(path.display().to_string()));
    }
    std::fs::read_to_string(path).map_err(|source| TelemetryError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, TelemetryError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| TelemetryError::Parse {
        file: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_value(raw: &str) -> Result<Option<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("nan") || raw.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|_| format!("bad value {raw:?}"))?;
    Ok(v.is_finite().then_some(v))
}

fn parse_timestamp(raw: &str) -> Result<Timestamp, String> {
    let raw = raw.trim();
    if let Ok(t) = raw.parse::<i64>() {
        return Ok(t);
    }
    let f: f64 = raw.parse().map_err(|_| format!("bad timestamp {raw:?}"))?;
    if !f.is_finite() {
        return Err(format!("bad timestamp {raw:?}"));
    }
    Ok(f.round() as Timestamp)
}

/// Accumulates raw rows into sorted, de-duplicated series.
#[derive(Default)]
struct SeriesBuilder {
    rows: BTreeMap<NodeKey, BTreeMap<Timestamp, Option<f64>>>,
    duplicates: usize,
    out_of_window: usize,
}

impl SeriesBuilder {
    fn push(&mut self, key: NodeKey, t: Timestamp, v: Option<f64>, window: (Timestamp, Timestamp)) {
        if t < window.0 || t > window.1 {
            self.out_of_window += 1;
            return;
        }
        if self.rows.entry(key).or_default().insert(t, v).is_some() {
            self.duplicates += 1;
        }
    }

    fn finish(self) -> (BTreeMap<NodeKey, MetricSeries>, usize, usize) {
        let series = self
            .rows
            .into_iter()
            .map(|(key, points)| {
                let (timestamps, values) = points.into_iter().unzip();
                let s = MetricSeries {
                    instance: key.instance.clone(),
                    metric: key.metric.clone(),
                    timestamps,
                    values,
                };
                (key, s)
            })
            .collect();
        (series, self.duplicates, self.out_of_window)
    }
}

/// Loads and validates a dataset directory. The directory name becomes the
/// dataset id.
pub fn load_dataset(dir: impl AsRef<Path>, ontology: Option<&MetadataOntology>) -> Result<LoadedDataset, TelemetryError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(TelemetryError::MissingFile(dir.display().to_string()));
    }
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if !dir.join("case.json").exists() && dir.join("inject_time.txt").exists() {
        return load_rcaeval(dir, id, ontology);
    }

    let topology: Topology = parse_json(&dir.join("topology.json"))?;
    let meta: CaseMeta = parse_json(&dir.join("case.json"))?;
    if !(meta.t0 < meta.t_f && meta.t_f < meta.t_rca) {
        return Err(TelemetryError::Invalid(format!(
            "time ordering violated: t0={} t_F={} t_rca={}",
            meta.t0, meta.t_f, meta.t_rca
        )));
    }
    let declared: BTreeSet<&str> = topology.instances.iter().map(|i| i.id.as_str()).collect();

    let metrics_path = dir.join("metrics.csv");
    if !metrics_path.exists() {
        return Err(TelemetryError::MissingFile(metrics_path.display().to_string()));
    }
    let parse_err = |message: String| TelemetryError::Parse {
        file: metrics_path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(&metrics_path).map_err(|e| parse_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let expected = ["timestamp", "instance", "metric", "value"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
        return Err(parse_err(format!("expected header {}", expected.join(","))));
    }
    let mut builder = SeriesBuilder::default();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        let t = parse_timestamp(&row[0]).map_err(|m| parse_err(format!("line {line}: {m}")))?;
        let instance = row[1].trim();
        if !declared.contains(instance) {
            return Err(TelemetryError::Invalid(format!(
                "metrics line {line} references undeclared instance {instance:?}"
            )));
        }
        let v = parse_value(&row[3]).map_err(|m| parse_err(format!("line {line}: {m}")))?;
        builder.push(NodeKey::new(instance, row[2].trim()), t, v, (meta.t0, meta.t_rca));
    }
    let (series, duplicates_dropped, out_of_window_dropped) = builder.finish();

    let dataset = IncidentDataset {
        id,
        topology,
        series,
        t0: meta.t0,
        t_f: meta.t_f,
        t_rca: meta.t_rca,
        ground_truth: meta.ground_truth,
    };
    dataset.validate(ontology)?;
    Ok(LoadedDataset {
        dataset,
        duplicates_dropped,
        out_of_window_dropped,
    })
}

/// RCAEval layout: wide `data.csv` (`time`, then `<service>_<metric>` columns)
/// and `inject_time.txt`. Without a `topology.json`, every service becomes a
/// `Microservice` with no dependency edges.
fn load_rcaeval(dir: &Path, id: String, ontology: Option<&MetadataOntology>) -> Result<LoadedDataset, TelemetryError> {
    let inject_path = dir.join("inject_time.txt");
    let t_f = parse_timestamp(&read_file(&inject_path)?).map_err(|message| TelemetryError::Parse {
        file: inject_path.display().to_string(),
        message,
    })?;
    let data_path = dir.join("data.csv");
    if !data_path.exists() {
        return Err(TelemetryError::MissingFile(data_path.display().to_string()));
    }
    let parse_err = |message: String| TelemetryError::Parse {
        file: data_path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(&data_path).map_err(|e| parse_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let time_col = headers
        .iter()
        .position(|h| h.trim() == "time" || h.trim() == "timestamp")
        .ok_or_else(|| parse_err("no time column".into()))?;
    let columns: Vec<Option<NodeKey>> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if i == time_col {
                return None;
            }
            let h = h.trim();
            h.split_once('_').map(|(svc, metric)| NodeKey::new(svc, metric))
        })
        .collect();

    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        let t = parse_timestamp(&row[time_col]).map_err(|m| parse_err(format!("line {line}: {m}")))?;
        rows.push((line, t, row));
    }
    let t0 = rows.iter().map(|r| r.1).min().ok_or_else(|| parse_err("no data rows".into()))?;
    let t_rca = rows.iter().map(|r| r.1).max().unwrap_or(t0);

    let mut builder = SeriesBuilder::default();
    for (line, t, row) in &rows {
        for (c, key) in columns.iter().enumerate() {
            let Some(key) = key else { continue };
            let v = parse_value(&row[c]).map_err(|m| parse_err(format!("line {line}: {m}")))?;
            builder.push(key.clone(), *t, v, (t0, t_rca));
        }
    }
    let (series, duplicates_dropped, out_of_window_dropped) = builder.finish();

    let topo_path = dir.join("topology.json");
    let topology = if topo_path.exists() {
        parse_json(&topo_path)?
    } else {
        let services: BTreeSet<&str> = series.keys().map(|k| k.instance.as_str()).collect();
        Topology {
            instances: services
                .into_iter()
                .map(|s| Instance {
                    id: s.to_string(),
                    component_type: "Microservice".into(),
                })
                .collect(),
            edges: Vec::new(),
        }
    };
    let dataset = IncidentDataset {
        id,
        topology,
        series,
        t0,
        t_f,
        t_rca,
        ground_truth: None,
    };
    // Metric names in RCAEval columns are not ontology-canonical; check structure only.
    dataset.validate(None)?;
    if let Some(o) = ontology {
        dataset.topology.validate(Some(o))?;
    }
    Ok(LoadedDataset {
        dataset,
        duplicates_dropped,
        out_of_window_dropped,
    })
}

/// Writes `dataset` in the canonical directory layout.
pub fn write_dataset(dataset: &IncidentDataset, dir: impl AsRef<Path>) -> std::io::Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let topo = serde_json::to_string_pretty(&dataset.topology).expect("topology serializes");
    std::fs::write(dir.join("topology.json"), topo + "\n")?;
    let meta = serde_json::to_string_pretty(&dataset.case_meta()).expect("case serializes");
    std::fs::write(dir.join("case.json"), meta + "\n")?;

    let mut rows: Vec<(Timestamp, &NodeKey, Option<f64>)> = dataset
        .series
        .iter()
        .flat_map(|(k, s)| s.timestamps.iter().zip(&s.values).map(move |(t, v)| (*t, k, *v)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let mut out = String::with_capacity(rows.len() * 40);
    out.push_str("timestamp,instance,metric,value\n");
    for (t, k, v) in rows {
        use std::fmt::Write as _;
        match v {
            Some(v) => writeln!(out, "{t},{},{},{v}", k.instance, k.metric),
            None => writeln!(out, "{t},{},{},", k.instance, k.metric),
        }
        .expect("writing to a String");
    }
    std::fs::write(dir.join("metrics.csv"), out)
}

/// Why a series could not be z-scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unscoreable {
    pub node: NodeKey,
    pub reason: String,
}

/// Baseline `[t0, t_F)` and evaluation `[t_F, t_rca]` z-scores.
///
/// `z = (x - mean_baseline) / max(std_baseline, 1e-9 * max(|mean|, 1))`,
/// clipped to `+-50`. Missing values are skipped.
pub fn zscore_series(
    series: &MetricSeries,
    t0: Timestamp,
    t_f: Timestamp,
    t_rca: Timestamp,
) -> Result<Vec<(Timestamp, f64)>, Unscoreable> {
    let baseline: Vec<f64> = series.window(t0, t_f - 1).map(|(_, v)| v).collect();
    if baseline.len() < MIN_BASELINE_SAMPLES {
        return Err(Unscoreable {
            node: series.key(),
            reason: format!(
                "{} baseline samples, need at least {MIN_BASELINE_SAMPLES}",
                baseline.len()
            ),
        });
    }
    let (mean, std) = mean_std(&baseline).expect("non-empty baseline");
    let sigma = std.max(1e-9 * mean.abs().max(1.0));
    Ok(series
        .window(t_f, t_rca)
        .map(|(t, v)| (t, ((v - mean) / sigma).clamp(-Z_CAP, Z_CAP)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesScore {
    pub max_abs_z: f64,
    pub is_anomalous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub threshold: f64,
    pub scores: BTreeMap<NodeKey, SeriesScore>,
    pub unscoreable: Vec<Unscoreable>,
}

impl AnomalyReport {
    pub fn score(&self, node: &NodeKey) -> Option<&SeriesScore> {
        self.scores.get(node)
    }

    pub fn instance_anomalous(&self, instance: &str) -> bool {
        self.scores
            .iter()
            .any(|(k, s)| k.instance == instance && s.is_anomalous)
    }

    pub fn anomalous(&self) -> impl Iterator<Item = &NodeKey> {
        self.scores.iter().filter(|(_, s)| s.is_anomalous).map(|(k, _)| k)
    }
}

pub fn detect_anomalies(dataset: &IncidentDataset, z_threshold: f64) -> AnomalyReport {
    let mut scores = BTreeMap::new();
    let mut unscoreable = Vec::new();
    for (key, s) in &dataset.series {
        match zscore_series(s, dataset.t0, dataset.t_f, dataset.t_rca) {
            Ok(z) if z.is_empty() => unscoreable.push(Unscoreable {
                node: key.clone(),
                reason: "no samples in the evaluation window".into(),
            }),
            Ok(z) => {
                let max_abs_z = z.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
                scores.insert(
                    key.clone(),
                    SeriesScore {
                        max_abs_z,
                        is_anomalous: max_abs_z > z_threshold,
                    },
                );
            }
            Err(u) => unscoreable.push(u),
        }
    }
    AnomalyReport {
        threshold: z_threshold,
        scores,
        unscoreable,
    }
}

/// Instances with at least one anomalous metric.
pub fn compute_frz(report: &AnomalyReport) -> BTreeSet<String> {
    report.anomalous().map(|k| k.instance.clone()).collect()
}
