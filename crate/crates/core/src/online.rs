//! Online diagnosis: project the meta causal graph onto the instances of the
//! fault relevance zone, weigh every projected edge against live telemetry,
//! prune weak edges and rank candidate root causes.
//!
//! ```text
//! detect anomalies -> FRZ -> instantiate LICG -> contextual scores
//!     -> fuse (w_licg = w_mcg * s_anomaly * s_corr) -> prune (< theta_p) -> rank
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mcg::{EdgeKey, MetaCausalGraph};
use crate::ontology::MetadataOntology;
use crate::stats::{lagged_pearson, sigmoid};
use crate::telemetry::{compute_frz, detect_anomalies, AnomalyReport, IncidentDataset, NodeKey, Topology};

pub const DEFAULT_THETA_P: f64 = 0.3;
pub const DEFAULT_K_MAX: usize = 5;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_DAMPING: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Ranker {
    #[default]
    Ccb,
    PageRank,
}

impl std::str::FromStr for Ranker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ccb" => Ok(Ranker::Ccb),
            "pagerank" => Ok(Ranker::PageRank),
            other => Err(format!("unknown ranker {other:?} (expected ccb or pagerank)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseParams {
    pub z_threshold: f64,
    pub theta_p: f64,
    pub k_max: usize,
    pub ranker: Ranker,
    pub epsilon: f64,
    pub max_iters: usize,
    /// When false, contextual scores are forced to 1 so edges keep their
    /// prior weight only (ablation).
    pub fusion: bool,
}

impl Default for DiagnoseParams {
    fn default() -> Self {
        Self {
            z_threshold: crate::telemetry::DEFAULT_Z_THRESHOLD,
            theta_p: DEFAULT_THETA_P,
            k_max: DEFAULT_K_MAX,
            ranker: Ranker::Ccb,
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            fusion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LicgNode {
    pub instance: String,
    pub metric: String,
    pub max_abs_z: f64,
    /// `sigmoid(max_abs_z)`.
    pub anomaly_score: f64,
    pub has_series: bool,
}

impl LicgNode {
    pub fn key(&self) -> NodeKey {
        NodeKey::new(&self.instance, &self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LicgEdge {
    pub cause: NodeKey,
    pub effect: NodeKey,
    pub meta_edge: EdgeKey,
    pub w_mcg: f64,
    pub s_anomaly: f64,
    pub s_corr: f64,
    pub s_context: f64,
    pub w_licg: f64,
    pub best_lag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Instantiated,
    Fused,
    Pruned,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub mcg_hash: String,
    pub dataset_id: String,
    pub theta_p: f64,
    pub k_max: usize,
    pub fusion: bool,
    pub stage: Stage,
}

/// Localized instance causal graph. Nodes are sorted by key; edges by
/// `(cause, effect)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Licg {
    pub nodes: Vec<LicgNode>,
    pub edges: Vec<LicgEdge>,
    pub provenance: Provenance,
}

impl Licg {
    pub fn node_index(&self) -> HashMap<NodeKey, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.key(), i)).collect()
    }

    /// `(cause index, effect index, w_licg)` for every edge.
    fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        let idx = self.node_index();
        self.edges
            .iter()
            .map(|e| (idx[&e.cause], idx[&e.effect], e.w_licg))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("licg serializes")
    }

    /// Graphviz rendering. Instantiated graphs are labeled with the prior
    /// weight, later stages with `w_licg`. Edges below `min_weight` are
    /// omitted from the drawing only.
    pub fn to_dot(&self, min_weight: Option<f64>) -> String {
        let mut out = String::new();
        let name = match self.provenance.stage {
            Stage::Instantiated => "licg_instantiated",
            Stage::Fused => "licg_fused",
            Stage::Pruned => "licg_pruned",
        };
        writeln!(out, "digraph {name} {{").unwrap();
        writeln!(out, "  rankdir=LR;").unwrap();
        for n in &self.nodes {
            let key = n.key();
            writeln!(out, "  \"{key}\" [label=\"{key}\\n|z|={:.2}\"];", n.max_abs_z).unwrap();
        }
        for e in &self.edges {
            let w = match self.provenance.stage {
                Stage::Instantiated => e.w_mcg,
                _ => e.w_licg,
            };
            if min_weight.is_some_and(|m| w < m) {
                continue;
            }
            writeln!(out, "  \"{}\" -> \"{}\" [label=\"{w:.3}\"];", e.cause, e.effect).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

fn mcg_hash(mcg: &MetaCausalGraph) -> String {
    hex::encode(Sha256::digest(mcg.to_json().as_bytes()))
}

#[derive(Debug, Clone, Default)]
pub struct InstantiationNotes {
    pub notes: Vec<String>,
}

/// Projects meta-edges onto the FRZ.
///
/// Inter-instance edges come from topology edges whose endpoints are both in
/// the FRZ; intra-instance edges from each type's internal pattern. When a
/// pattern joins two instances of the same type the meta-edge does not say
/// which side is the cause, so both orientations are projected and left for
/// the contextual scores to separate. Duplicate projections keep the highest
/// prior.
pub fn instantiate_licg(
    mcg: &MetaCausalGraph,
    ontology: &MetadataOntology,
    topology: &Topology,
    frz: &BTreeSet<String>,
    report: &AnomalyReport,
) -> (Licg, InstantiationNotes) {
    let types = topology.type_map();
    let mut notes = InstantiationNotes::default();
    let mut projected: BTreeMap<(NodeKey, NodeKey), (f64, EdgeKey)> = BTreeMap::new();
    let mut add = |cause: NodeKey, effect: NodeKey, w: f64, key: &EdgeKey| {
        projected
            .entry((cause, effect))
            .and_modify(|cur| {
                if w > cur.0 || (w == cur.0 && *key < cur.1) {
                    *cur = (w, key.clone());
                }
            })
            .or_insert_with(|| (w, key.clone()));
    };

    for te in &topology.edges {
        if te.src == te.dst || !frz.contains(&te.src) || !frz.contains(&te.dst) {
            continue;
        }
        let (st, dt) = (types[te.src.as_str()], types[te.dst.as_str()]);
        let Some(pattern) = ontology.match_pattern(st, dt, te.conn_type) else {
            notes
                .notes
                .push(format!("no pattern for {} -{}-> {} ({st} -> {dt})", te.src, te.conn_type, te.dst));
            continue;
        };
        let pid = pattern.id();
        for me in mcg.edges_on_pattern(&pid) {
            let key = me.key();
            let w = me.cbs();
            let orientations: Vec<(&str, &str)> = if st != dt {
                if me.cause.component_type == st {
                    vec![(&te.src, &te.dst)]
                } else {
                    vec![(&te.dst, &te.src)]
                }
            } else {
                vec![(&te.src, &te.dst), (&te.dst, &te.src)]
            };
            for (ci, ei) in orientations {
                add(NodeKey::new(ci, &me.cause.metric), NodeKey::new(ei, &me.effect.metric), w, &key);
            }
        }
    }

    for inst in frz {
        let Some(ty) = types.get(inst.as_str()) else {
            notes.notes.push(format!("FRZ instance {inst} is not in the topology"));
            continue;
        };
        let has_inter = ontology.patterns().iter().any(|p| p.src_type == *ty || p.dst_type == *ty);
        let internal = ontology.internal_pattern(ty).map(|p| p.id()).unwrap_or_default();
        let mut any_internal = false;
        for me in mcg.edges_on_pattern(&internal) {
            any_internal = true;
            add(
                NodeKey::new(inst, &me.cause.metric),
                NodeKey::new(inst, &me.effect.metric),
                me.cbs(),
                &me.key(),
            );
        }
        if !has_inter && !any_internal {
            notes.notes.push(format!("FRZ instance {inst} ({ty}) has no pattern to project"));
        }
    }

    let node_keys: BTreeSet<NodeKey> = projected
        .keys()
        .flat_map(|(c, e)| [c.clone(), e.clone()])
        .collect();
    let nodes = node_keys
        .into_iter()
        .map(|k| {
            let (z, has) = match report.score(&k) {
                Some(s) => (s.max_abs_z, true),
                None => (0.0, false),
            };
            LicgNode {
                instance: k.instance,
                metric: k.metric,
                max_abs_z: z,
                anomaly_score: sigmoid(z),
                has_series: has,
            }
        })
        .collect();
    let edges = projected
        .into_iter()
        .map(|((cause, effect), (w, key))| LicgEdge {
            cause,
            effect,
            meta_edge: key,
            w_mcg: w,
            s_anomaly: 0.0,
            s_corr: 0.0,
            s_context: 0.0,
            w_licg: 0.0,
            best_lag: 0,
        })
        .collect();
    let licg = Licg {
        nodes,
        edges,
        provenance: Provenance {
            mcg_hash: mcg_hash(mcg),
            dataset_id: String::new(),
            theta_p: 0.0,
            k_max: 0,
            fusion: true,
            stage: Stage::Instantiated,
        },
    };
    (licg, notes)
}

/// `min(sigmoid(|z_u|), sigmoid(|z_v|))`.
pub fn anomaly_cooccurrence(u: &LicgNode, v: &LicgNode) -> f64 {
    sigmoid(u.max_abs_z.abs()).min(sigmoid(v.max_abs_z.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagCorrelation {
    pub s_corr: f64,
    pub best_lag: usize,
    pub notice: Option<String>,
}

/// Maximum `|rho(cause[t], effect[t + k])|` over `k = 0..=k_max`, with the
/// smallest maximizing lag. Inputs are aligned on a common grid.
pub fn lagged_correlation(cause: &[Option<f64>], effect: &[Option<f64>], k_max: usize) -> LagCorrelation {
    let aligned = cause
        .iter()
        .zip(effect)
        .filter(|(a, b)| a.is_some() && b.is_some())
        .count();
    if aligned < k_max + 5 {
        return LagCorrelation {
            s_corr: 0.0,
            best_lag: 0,
            notice: Some(format!("{aligned} aligned samples, need {}", k_max + 5)),
        };
    }
    let mut best = (0.0, 0);
    for k in 0..=k_max {
        let (r, n) = lagged_pearson(cause, effect, k);
        let r = if n < 3 { 0.0 } else { r.abs() };
        if r > best.0 {
            best = (r, k);
        }
    }
    LagCorrelation {
        s_corr: best.0,
        best_lag: best.1,
        notice: None,
    }
}

/// Fills `s_anomaly`, `s_corr`, `best_lag` and `s_context` on every edge,
/// using the evaluation window `[t_F, t_rca]`.
pub fn score_context(mut licg: Licg, dataset: &IncidentDataset, k_max: usize, fusion: bool) -> Licg {
    let grid = dataset.grid(dataset.t_f, dataset.t_rca);
    let idx = licg.node_index();
    let aligned: Vec<Option<Vec<Option<f64>>>> = licg
        .nodes
        .iter()
        .map(|n| {
            n.has_series
                .then(|| dataset.series.get(&n.key()).map(|s| s.on_grid(&grid)))
                .flatten()
        })
        .collect();
    for e in &mut licg.edges {
        let (ci, ei) = (idx[&e.cause], idx[&e.effect]);
        e.s_anomaly = anomaly_cooccurrence(&licg.nodes[ci], &licg.nodes[ei]);
        let (s_corr, lag) = match (&aligned[ci], &aligned[ei]) {
            (Some(c), Some(x)) => {
                let lc = lagged_correlation(c, x, k_max);
                (lc.s_corr, lc.best_lag)
            }
            _ => (0.0, 0),
        };
        e.s_corr = s_corr;
        e.best_lag = lag;
        e.s_context = if fusion { e.s_anomaly * e.s_corr } else { 1.0 };
    }
    licg.provenance.dataset_id = dataset.id.clone();
    licg.provenance.k_max = k_max;
    licg.provenance.fusion = fusion;
    licg
}

/// `w_licg = w_mcg * s_context`.
pub fn fuse(mut licg: Licg) -> Licg {
    for e in &mut licg.edges {
        e.w_licg = e.w_mcg * e.s_context;
    }
    licg.provenance.stage = Stage::Fused;
    licg
}

/// Drops edges with `w_licg < theta_p`; nodes are kept.
pub fn prune(mut licg: Licg, theta_p: f64) -> Licg {
    licg.edges.retain(|e| e.w_licg >= theta_p);
    licg.provenance.theta_p = theta_p;
    licg.provenance.stage = Stage::Pruned;
    licg
}

pub fn fuse_and_prune(licg: Licg, theta_p: f64) -> Licg {
    prune(fuse(licg), theta_p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub instance: String,
    pub metric: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEntry {
    pub rank: usize,
    pub service: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedCauses {
    pub entries: Vec<RankedEntry>,
    /// Each service takes the rank of its best metric.
    pub services: Vec<ServiceEntry>,
    pub converged: bool,
    pub iterations: usize,
}

impl RankedCauses {
    fn from_scores(licg: &Licg, scores: &[f64], converged: bool, iterations: usize) -> Self {
        let mut order: Vec<usize> = (0..licg.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            let (na, nb) = (&licg.nodes[a], &licg.nodes[b]);
            scores[b]
                .total_cmp(&scores[a])
                .then(nb.max_abs_z.total_cmp(&na.max_abs_z))
                .then_with(|| (&na.instance, &na.metric).cmp(&(&nb.instance, &nb.metric)))
        });
        let entries: Vec<RankedEntry> = order
            .iter()
            .enumerate()
            .map(|(i, &n)| RankedEntry {
                rank: i + 1,
                instance: licg.nodes[n].instance.clone(),
                metric: licg.nodes[n].metric.clone(),
                score: scores[n],
            })
            .collect();
        let mut seen = BTreeSet::new();
        let services = entries
            .iter()
            .filter(|e| seen.insert(e.instance.clone()))
            .enumerate()
            .map(|(i, e)| ServiceEntry {
                rank: i + 1,
                service: e.instance.clone(),
                score: e.score,
            })
            .collect();
        Self {
            entries,
            services,
            converged,
            iterations,
        }
    }

    pub fn metric_rank(&self, instance: &str, metric: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.instance == instance && e.metric == metric)
            .map(|e| e.rank)
    }

    pub fn service_rank(&self, service: &str) -> Option<usize> {
        self.services.iter().find(|s| s.service == service).map(|s| s.rank)
    }
}

/// One sweep: `next(u) = A(u) + sum over children v of score(v) * w(u -> v)`.
pub fn ccb_step(licg: &Licg, scores: &[f64]) -> Vec<f64> {
    let mut next: Vec<f64> = licg.nodes.iter().map(|n| n.anomaly_score).collect();
    for (u, v, w) in licg.weighted_edges() {
        next[u] += scores[v] * w;
    }
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcbOutcome {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates [`ccb_step`] from all-ones until the largest change drops below
/// `epsilon` or `max_iters` sweeps have run.
pub fn ccb_scores(licg: &Licg, epsilon: f64, max_iters: usize) -> CcbOutcome {
    let n = licg.nodes.len();
    let intrinsic: Vec<f64> = licg.nodes.iter().map(|n| n.anomaly_score).collect();
    let edges = licg.weighted_edges();
    let mut scores = vec![1.0; n];
    for it in 1..=max_iters {
        let mut next = intrinsic.clone();
        for &(u, v, w) in &edges {
            next[u] += scores[v] * w;
        }
        let delta = next
            .iter()
            .zip(&scores)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        scores = next;
        if delta < epsilon {
            return CcbOutcome {
                scores,
                iterations: it,
                converged: true,
            };
        }
    }
    CcbOutcome {
        scores,
        iterations: max_iters,
        converged: n == 0,
    }
}

pub fn ccb_rank(licg: &Licg, epsilon: f64, max_iters: usize) -> RankedCauses {
    let out = ccb_scores(licg, epsilon, max_iters);
    RankedCauses::from_scores(licg, &out.scores, out.converged, out.iterations)
}

/// PageRank on the edge-reversed graph, so probability mass flows from
/// effects back to their causes. Out-weights are normalized per node;
/// dangling mass and teleportation are uniform.
pub fn pagerank_rank(licg: &Licg, damping: f64) -> RankedCauses {
    const TOL: f64 = 1e-8;
    const MAX_ITERS: usize = 10_000;
    let n = licg.nodes.len();
    if n == 0 {
        return RankedCauses {
            converged: true,
            ..Default::default()
        };
    }
    // Reversed edge effect -> cause.
    let mut out_w = vec![0.0; n];
    let mut rev: Vec<(usize, usize, f64)> = Vec::new();
    for (c, e, w) in licg.weighted_edges() {
        if w > 0.0 {
            out_w[e] += w;
            rev.push((e, c, w));
        }
    }
    let uniform = 1.0 / n as f64;
    let mut r = vec![uniform; n];
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=MAX_ITERS {
        iterations = it;
        let dangling: f64 = (0..n).filter(|&i| out_w[i] == 0.0).map(|i| r[i]).sum();
        let mut next = vec![(1.0 - damping) * uniform + damping * dangling * uniform; n];
        for &(from, to, w) in &rev {
            next[to] += damping * r[from] * w / out_w[from];
        }
        let delta: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if delta < TOL {
            converged = true;
            break;
        }
    }
    RankedCauses::from_scores(licg, &r, converged, iterations)
}

#[derive(Debug, Clone)]
pub struct Diagnosis {
    pub ranked: RankedCauses,
    pub frz: BTreeSet<String>,
    pub anomalies: AnomalyReport,
    pub instantiated: Option<Licg>,
    pub fused: Option<Licg>,
    pub pruned: Option<Licg>,
    pub timing_seconds: f64,
    pub warnings: Vec<String>,
}

impl Diagnosis {
    pub fn no_incident(&self) -> bool {
        self.frz.is_empty()
    }

    pub fn output(&self, top_k: Option<usize>) -> RankedOutput {
        let k = top_k.unwrap_or(usize::MAX);
        RankedOutput {
            cases: self.ranked.entries.iter().take(k).cloned().collect(),
            service_ranking: self.ranked.services.iter().take(k).cloned().collect(),
            timing_seconds: self.timing_seconds,
            warnings: self.warnings.clone(),
        }
    }
}

/// Ranked output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOutput {
    pub cases: Vec<RankedEntry>,
    pub service_ranking: Vec<ServiceEntry>,
    pub timing_seconds: f64,
    pub warnings: Vec<String>,
}

pub const NO_INCIDENT: &str = "no incident detected";

/// The full online pipeline. Timing runs from the start of anomaly detection
/// to the ranked output.
pub fn diagnose(
    mcg: &MetaCausalGraph,
    ontology: &MetadataOntology,
    dataset: &IncidentDataset,
    params: &DiagnoseParams,
) -> Diagnosis {
    let start = Instant::now();
    let anomalies = detect_anomalies(dataset, params.z_threshold);
    let frz = compute_frz(&anomalies);
    let mut warnings: Vec<String> = anomalies
        .unscoreable
        .iter()
        .map(|u| format!("unscoreable {}: {}", u.node, u.reason))
        .collect();
    if frz.is_empty() {
        warnings.push(NO_INCIDENT.into());
        return Diagnosis {
            ranked: RankedCauses {
                converged: true,
                ..Default::default()
            },
            frz,
            anomalies,
            instantiated: None,
            fused: None,
            pruned: None,
            timing_seconds: start.elapsed().as_secs_f64(),
            warnings,
        };
    }

    let (instantiated, notes) = instantiate_licg(mcg, ontology, &dataset.topology, &frz, &anomalies);
    warnings.extend(notes.notes);
    let scored = score_context(instantiated.clone(), dataset, params.k_max, params.fusion);
    let fused = fuse(scored);
    let pruned = prune(fused.clone(), params.theta_p);
    let ranked = match params.ranker {
        Ranker::Ccb => ccb_rank(&pruned, params.epsilon, params.max_iters),
        Ranker::PageRank => pagerank_rank(&pruned, DEFAULT_DAMPING),
    };
    if !ranked.converged {
        warnings.push(format!("ranking did not converge within {} iterations", ranked.iterations));
    }
    let timing_seconds = start.elapsed().as_secs_f64();
    Diagnosis {
        ranked,
        frz,
        anomalies,
        instantiated: Some(instantiated),
        fused: Some(fused),
        pruned: Some(pruned),
        timing_seconds,
        warnings,
    }
}
