//! Synthetic incidents with known root causes.
//!
//! A case is a topology of services plus hosts, databases and caches, a
//! planted instance-level causal graph, and telemetry generated along that
//! graph. Candidate edges are every propagation rule instantiated over the
//! topology; only those reachable from the fault are planted. Each metric,
//! in units of its own innovation noise, is
//!
//! ```text
//! x_v(t) = e_v(t) + sum_u w_uv * z_u(t - lag_uv) / max(1, sum_u w_uv) + noise * n_v(t)
//! ```
//!
//! where `z_u` is the parent's series standardized by its baseline mean and
//! deviation. The divisor keeps a node reached over several call paths from
//! responding more strongly than its drivers do.
//!
//! From `t_F` the fault node gains `magnitude + jitter * f(t)`, a step with
//! white disturbance riding on it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{RawCaseExtract, RawMention};
use crate::mcg::{EdgeKey, MetaCausalGraph, MetaNode, Timestamp};
use crate::ontology::{ConnType, MetadataOntology};
use crate::stats::mean_std;
use crate::telemetry::{write_dataset, GroundTruth, IncidentDataset, Instance, MetricSeries, NodeKey, Topology, TopologyEdge};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    Config(String),
    #[error("propagation rule {rule} uses pattern {pattern}, which has no such edge in the meta causal graph")]
    MissingPattern { rule: String, pattern: String },
    #[error("planted causal graph has a cycle through {0}")]
    Cyclic(String),
    #[error("no instance carries the fault metric {0}")]
    NoTarget(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyShape {
    Chain,
    Tree,
    #[serde(alias = "RandomDAG")]
    RandomDag,
}

impl std::str::FromStr for TopologyShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "").as_str() {
            "chain" => Ok(Self::Chain),
            "tree" => Ok(Self::Tree),
            "randomdag" => Ok(Self::RandomDag),
            _ => Err(format!("unknown topology shape {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultType {
    TpsSurge,
    CpuOverload,
    DbLatency,
}

impl FaultType {
    pub const ALL: [FaultType; 3] = [FaultType::TpsSurge, FaultType::CpuOverload, FaultType::DbLatency];

    /// The `(component type, metric)` the fault is injected on.
    pub fn target(self) -> MetaNode {
        match self {
            FaultType::TpsSurge => MetaNode::new("Microservice", "tps"),
            FaultType::CpuOverload => MetaNode::new("Microservice", "cpu_utilization"),
            FaultType::DbLatency => MetaNode::new("MySQL", "db_time"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// Uniform over instances whose type carries the fault metric.
    #[default]
    Uniform,
    Instance(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    /// `None` draws the type per case among those with a valid target.
    #[serde(default)]
    pub fault_type: Option<FaultType>,
    #[serde(default)]
    pub target: TargetRule,
    pub magnitude_sigma: f64,
    /// Standard deviation of the disturbance on top of the step, in baseline
    /// standard deviations.
    pub jitter_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub edge_weight: (f64, f64),
    pub lag: (usize, usize),
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub interval_seconds: i64,
    pub n_baseline: usize,
    pub n_fault: usize,
    pub start: Timestamp,
}

/// Services per supporting component; 0 disables that component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfrastructureConfig {
    pub services_per_host: usize,
    pub services_per_mysql: usize,
    pub services_per_redis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Src,
    Dst,
}

/// A meta-edge the simulated world actually follows. `cause_at` says which
/// end of a same-type dependency hosts the cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationRule {
    pub cause: MetaNode,
    pub effect: MetaNode,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause_at: Option<Endpoint>,
}

impl PropagationRule {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.cause.clone(), self.effect.clone(), self.pattern.clone())
    }
}

/// Missing top-level fields take their defaults, so a config file may name
/// only what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub n_services: usize,
    pub topology_shape: TopologyShape,
    pub fault: FaultConfig,
    pub propagation: PropagationConfig,
    pub sampling: SamplingConfig,
    pub infrastructure: InfrastructureConfig,
    pub rules: Vec<PropagationRule>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_services: 20,
            topology_shape: TopologyShape::RandomDag,
            fault: FaultConfig {
                fault_type: None,
                target: TargetRule::Uniform,
                magnitude_sigma: 6.0,
                jitter_sigma: 3.0,
            },
            propagation: PropagationConfig {
                edge_weight: (0.6, 0.9),
                lag: (1, 3),
                noise_sigma: 0.1,
            },
            sampling: SamplingConfig {
                interval_seconds: 30,
                n_baseline: 120,
                n_fault: 60,
                start: 1_700_000_000,
            },
            infrastructure: InfrastructureConfig {
                services_per_host: 4,
                services_per_mysql: 5,
                services_per_redis: 6,
            },
            rules: default_rules(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let p = &self.propagation;
        if self.n_services == 0 {
            return bad("n_services must be at least 1".into());
        }
        let (wl, wh) = p.edge_weight;
        if !(wl > 0.0 && wl <= wh && wh <= 1.0) {
            return bad(format!("edge_weight range ({wl}, {wh}) must satisfy 0 < lo <= hi <= 1"));
        }
        let (ll, lh) = p.lag;
        if !(ll >= 1 && ll <= lh) {
            return bad(format!("lag range ({ll}, {lh}) must satisfy 1 <= lo <= hi"));
        }
        if !(p.noise_sigma >= 0.0) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !(self.fault.magnitude_sigma >= 3.0) {
            return bad(format!("magnitude_sigma must be >= 3, got {}", self.fault.magnitude_sigma));
        }
        if !(self.fault.jitter_sigma >= 0.0) {
            return bad("jitter_sigma must be >= 0".into());
        }
        let s = &self.sampling;
        if s.n_baseline < 30 {
            return bad(format!("n_baseline must be >= 30, got {}", s.n_baseline));
        }
        if s.n_fault == 0 || s.interval_seconds <= 0 {
            return bad("n_fault and interval_seconds must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Rules of the bundled world: latency and errors travel from callee to
/// caller, traffic from caller to callee, resources feed their own SLIs.
pub fn default_rules() -> Vec<PropagationRule> {
    const MS: &str = "Microservice";
    let rule = |c: (&str, &str), e: (&str, &str), pattern: &str, cause_at: Option<Endpoint>| PropagationRule {
        cause: MetaNode::new(c.0, c.1),
        effect: MetaNode::new(e.0, e.1),
        pattern: pattern.into(),
        cause_at,
    };
    let ms_int = "Microservice--internal-->Microservice";
    let ms_ms = "Microservice--invoke-->Microservice";
    vec![
        rule((MS, "tps"), (MS, "cpu_utilization"), ms_int, None),
        rule((MS, "cpu_utilization"), (MS, "api_latency"), ms_int, None),
        rule((MS, "api_latency"), (MS, "error_rate"), ms_int, None),
        rule((MS, "memory_usage"), (MS, "api_latency"), ms_int, None),
        rule((MS, "api_latency"), (MS, "api_latency"), ms_ms, Some(Endpoint::Dst)),
        rule((MS, "tps"), (MS, "tps"), ms_ms, Some(Endpoint::Src)),
        rule((MS, "error_rate"), (MS, "error_rate"), ms_ms, Some(Endpoint::Dst)),
        rule(("MySQL", "db_time"), (MS, "api_latency"), "Microservice--invoke-->MySQL", None),
        rule((MS, "tps"), ("MySQL", "active_connections"), "Microservice--invoke-->MySQL", None),
        rule(("Redis", "command_latency"), (MS, "api_latency"), "Microservice--invoke-->Redis", None),
        rule(("MySQL", "active_connections"), ("MySQL", "db_time"), "MySQL--internal-->MySQL", None),
        rule(("MySQL", "cpu_utilization"), ("MySQL", "db_time"), "MySQL--internal-->MySQL", None),
        rule(("Redis", "memory_usage"), ("Redis", "command_latency"), "Redis--internal-->Redis", None),
        rule((MS, "cpu_utilization"), ("Host", "cpu_utilization"), "Microservice--on-->Host", None),
        rule((MS, "memory_usage"), ("Host", "memory_usage"), "Microservice--on-->Host", None),
    ]
}

/// Baseline level and spread per metric name.
fn metric_profile(component_type: &str, metric: &str) -> (f64, f64) {
    match (component_type, metric) {
        ("Microservice", "api_latency") => (120.0, 8.0),
        ("Microservice", "error_rate") => (0.02, 0.002),
        ("Microservice", "tps") => (400.0, 25.0),
        ("Microservice", "cpu_utilization") => (0.45, 0.03),
        ("Microservice", "memory_usage") => (2.0e9, 4.0e7),
        ("MySQL", "db_time") => (12.0, 1.0),
        ("MySQL", "active_connections") => (60.0, 4.0),
        ("MySQL", "cpu_utilization") => (0.35, 0.03),
        ("Redis", "command_latency") => (0.8, 0.05),
        ("Redis", "memory_usage") => (1.0e9, 2.0e7),
        ("Host", "cpu_utilization") => (0.5, 0.02),
        ("Host", "memory_usage") => (8.0e9, 1.0e8),
        _ => (100.0, 10.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEdge {
    pub cause: NodeKey,
    pub effect: NodeKey,
    pub weight: f64,
    pub lag: usize,
    pub meta_edge: EdgeKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthCase {
    pub seed: u64,
    pub fault_type: FaultType,
    pub dataset: IncidentDataset,
    pub planted: Vec<PlantedEdge>,
}

fn pad(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(2)
}

fn build_topology(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Topology {
    let n = cfg.n_services;
    let w = pad(n);
    let svc = |i: usize| format!("svc-{i:0w$}");
    let mut instances: Vec<Instance> = (0..n)
        .map(|i| Instance {
            id: svc(i),
            component_type: "Microservice".into(),
        })
        .collect();
    let mut edges = Vec::new();
    let invoke = |src: String, dst: String| TopologyEdge {
        src,
        dst,
        conn_type: ConnType::Invoke,
    };

    match cfg.topology_shape {
        TopologyShape::Chain => {
            for i in 1..n {
                edges.push(invoke(svc(i - 1), svc(i)));
            }
        }
        TopologyShape::Tree => {
            for i in 1..n {
                edges.push(invoke(svc((i - 1) / 2), svc(i)));
            }
        }
        TopologyShape::RandomDag => {
            for i in 1..n {
                let first = rng.random_range(0..i);
                edges.push(invoke(svc(first), svc(i)));
                if i > 1 && rng.random_bool(0.3) {
                    let mut second = rng.random_range(0..i - 1);
                    if second >= first {
                        second += 1;
                    }
                    edges.push(invoke(svc(second), svc(i)));
                }
            }
        }
    }

    let infra = &cfg.infrastructure;
    let count = |per: usize| if per == 0 { 0 } else { n / per };
    let n_hosts = count(infra.services_per_host);
    for h in 0..n_hosts {
        instances.push(Instance {
            id: format!("host-{h}"),
            component_type: "Host".into(),
        });
    }
    if n_hosts > 0 {
        for i in 0..n {
            edges.push(TopologyEdge {
                src: svc(i),
                dst: format!("host-{}", i % n_hosts),
                conn_type: ConnType::On,
            });
        }
    }
    for (prefix, ty, k) in [
        ("mysql", "MySQL", count(infra.services_per_mysql)),
        ("redis", "Redis", count(infra.services_per_redis)),
    ] {
        for j in 0..k {
            let id = format!("{prefix}-{j}");
            instances.push(Instance {
                id: id.clone(),
                component_type: ty.into(),
            });
            let callers = if n > 1 && rng.random_bool(0.5) { 2 } else { 1 };
            let picked: BTreeSet<usize> = (0..n).collect::<Vec<_>>().choose_multiple(rng, callers).copied().collect();
            for c in picked {
                edges.push(invoke(svc(c), id.clone()));
            }
        }
    }
    Topology { instances, edges }
}

fn plant_edges(
    cfg: &SimConfig,
    topology: &Topology,
    ontology: &MetadataOntology,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PlantedEdge>, SimError> {
    let types = topology.type_map();
    let p = &cfg.propagation;
    let draw = |rng: &mut ChaCha8Rng| {
        let w = if p.edge_weight.0 == p.edge_weight.1 {
            p.edge_weight.0
        } else {
            rng.random_range(p.edge_weight.0..=p.edge_weight.1)
        };
        (w, rng.random_range(p.lag.0..=p.lag.1))
    };
    let mut planted = Vec::new();
    for rule in &cfg.rules {
        let pattern = ontology.pattern_by_id(&rule.pattern).ok_or_else(|| SimError::MissingPattern {
            rule: format!("{} -> {}", rule.cause, rule.effect),
            pattern: rule.pattern.clone(),
        })?;
        if pattern.is_internal() {
            for inst in &topology.instances {
                if inst.component_type == pattern.src_type {
                    let (weight, lag) = draw(rng);
                    planted.push(PlantedEdge {
                        cause: NodeKey::new(&inst.id, &rule.cause.metric),
                        effect: NodeKey::new(&inst.id, &rule.effect.metric),
                        weight,
                        lag,
                        meta_edge: rule.key(),
                    });
                }
            }
            continue;
        }
        for e in &topology.edges {
            let (st, dt) = (types[e.src.as_str()], types[e.dst.as_str()]);
            if e.conn_type != pattern.conn_type || st != pattern.src_type || dt != pattern.dst_type {
                continue;
            }
            let cause_is_src = if st != dt {
                rule.cause.component_type == st
            } else {
                rule.cause_at.unwrap_or(Endpoint::Src) == Endpoint::Src
            };
            let (ci, ei) = if cause_is_src { (&e.src, &e.dst) } else { (&e.dst, &e.src) };
            let (weight, lag) = draw(rng);
            planted.push(PlantedEdge {
                cause: NodeKey::new(ci, &rule.cause.metric),
                effect: NodeKey::new(ei, &rule.effect.metric),
                weight,
                lag,
                meta_edge: rule.key(),
            });
        }
    }
    Ok(planted)
}

/// Kahn's algorithm, lowest index first.
fn topo_order(n: usize, parents: &[Vec<(usize, f64, usize)>], names: &[NodeKey]) -> Result<Vec<usize>, SimError> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (v, ps) in parents.iter().enumerate() {
        for &(u, _, _) in ps {
            children[u].push(v);
            indeg[v] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&v| indeg[v] > 0).expect("some node is stuck");
        return Err(SimError::Cyclic(names[stuck].to_string()));
    }
    Ok(order)
}

/// Generates one case. The same config always yields the same case.
pub fn generate_case(cfg: &SimConfig, ontology: &MetadataOntology, mcg: &MetaCausalGraph) -> Result<GroundTruthCase, SimError> {
    cfg.validate()?;
    for rule in &cfg.rules {
        if mcg.edge(&rule.key()).is_none() {
            return Err(SimError::MissingPattern {
                rule: format!("{} -> {}", rule.cause, rule.effect),
                pattern: rule.pattern.clone(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topology = build_topology(cfg, &mut rng);
    let planted = plant_edges(cfg, &topology, ontology, &mut rng)?;

    // Nodes: every metric of every instance, in instance then ontology order.
    let mut names: Vec<NodeKey> = Vec::new();
    for inst in &topology.instances {
        let ty = ontology
            .component_type(&inst.component_type)
            .ok_or_else(|| SimError::Config(format!("type {} is not in the ontology", inst.component_type)))?;
        for m in &ty.metrics {
            names.push(NodeKey::new(&inst.id, &m.name));
        }
    }
    let index: HashMap<&NodeKey, usize> = names.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(planted.len());
    for e in &planted {
        let (Some(&u), Some(&v)) = (index.get(&e.cause), index.get(&e.effect)) else {
            return Err(SimError::Config(format!("planted edge {} -> {} names an unknown metric", e.cause, e.effect)));
        };
        edges.push((u, v));
    }
    {
        let mut parents: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); names.len()];
        for (e, &(u, v)) in planted.iter().zip(&edges) {
            parents[v].push((u, e.weight, e.lag));
        }
        topo_order(names.len(), &parents, &names)?;
    }

    // Fault choice.
    let types = topology.type_map();
    let candidates = |ft: FaultType| -> Vec<&str> {
        let t = ft.target();
        topology
            .instances
            .iter()
            .filter(|i| i.component_type == t.component_type)
            .filter(|i| match &cfg.fault.target {
                TargetRule::Uniform => true,
                TargetRule::Instance(id) => &i.id == id,
            })
            .map(|i| i.id.as_str())
            .collect()
    };
    let fault_type = match cfg.fault.fault_type {
        Some(ft) => ft,
        None => {
            let usable: Vec<FaultType> = FaultType::ALL.into_iter().filter(|ft| !candidates(*ft).is_empty()).collect();
            *usable
                .choose(&mut rng)
                .ok_or_else(|| SimError::NoTarget("any fault type".into()))?
        }
    };
    let target = fault_type.target();
    let pool = candidates(fault_type);
    let instance = pool.choose(&mut rng).ok_or_else(|| SimError::NoTarget(target.to_string()))?.to_string();
    debug_assert_eq!(types[instance.as_str()], target.component_type);
    let fault_node = index[&NodeKey::new(&instance, &target.metric)];

    // Only the part of the rule graph the fault can reach is planted.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for &(u, v) in &edges {
        children[u].push(v);
    }
    let mut reached = vec![false; names.len()];
    let mut stack = vec![fault_node];
    while let Some(u) = stack.pop() {
        if !std::mem::replace(&mut reached[u], true) {
            stack.extend(children[u].iter().copied());
        }
    }
    let (planted, edges): (Vec<PlantedEdge>, Vec<(usize, usize)>) =
        planted.into_iter().zip(edges).filter(|(_, (u, _))| reached[*u]).unzip();
    let mut parents: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); names.len()];
    for (e, &(u, v)) in planted.iter().zip(&edges) {
        parents[v].push((u, e.weight, e.lag));
    }
    let order = topo_order(names.len(), &parents, &names)?;

    // Signals.
    let s = &cfg.sampling;
    let len = s.n_baseline + s.n_fault;
    let p = &cfg.propagation;
    let mut normalized: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut latent: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for &v in &order {
        let gain = parents[v].iter().map(|&(_, w, _)| w).sum::<f64>().max(1.0);
        let mut x: Vec<f64> = (0..len)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                let n: f64 = StandardNormal.sample(&mut rng);
                let driven: f64 = parents[v]
                    .iter()
                    .map(|&(u, w, lag)| if t >= lag { w * normalized[u][t - lag] } else { 0.0 })
                    .sum();
                e + driven / gain + p.noise_sigma * n
            })
            .collect();
        if v == fault_node {
            for xt in &mut x[s.n_baseline..] {
                let f: f64 = StandardNormal.sample(&mut rng);
                *xt += cfg.fault.magnitude_sigma + cfg.fault.jitter_sigma * f;
            }
        }
        let (mu, sd) = mean_std(&x[..s.n_baseline]).expect("baseline is non-empty");
        normalized[v] = x.iter().map(|xt| (xt - mu) / sd).collect();
        latent[v] = x;
    }

    let timestamps: Vec<Timestamp> = (0..len as i64).map(|i| s.start + i * s.interval_seconds).collect();
    let mut series = BTreeMap::new();
    for (v, key) in names.iter().enumerate() {
        let ty = types[key.instance.as_str()];
        let (level, spread) = metric_profile(ty, &key.metric);
        let level = level * (1.0 + rng.random_range(-0.1..0.1));
        let values = latent[v].iter().map(|x| Some(level + spread * x)).collect();
        series.insert(
            key.clone(),
            MetricSeries {
                instance: key.instance.clone(),
                metric: key.metric.clone(),
                timestamps: timestamps.clone(),
                values,
            },
        );
    }

    let t_f = s.start + s.n_baseline as i64 * s.interval_seconds;
    let dataset = IncidentDataset {
        id: format!("sim-{}", cfg.seed),
        topology,
        series,
        t0: s.start,
        t_f,
        t_rca: t_f + (s.n_fault as i64 - 1) * s.interval_seconds,
        ground_truth: Some(GroundTruth {
            service: instance,
            metric: target.metric,
        }),
    };
    Ok(GroundTruthCase {
        seed: cfg.seed,
        fault_type,
        dataset,
        planted,
    })
}

/// Report vocabulary: the words an engineer might use for each node.
fn vocabulary(node: &MetaNode) -> (&'static [&'static str], &'static [&'static str]) {
    let entity: &[&str] = match node.component_type.as_str() {
        "Microservice" => &["service", "microservice", "app"],
        "MySQL" => &["mysql", "database", "db"],
        "Redis" => &["redis", "cache"],
        "Host" => &["host", "node", "vm"],
        _ => &[],
    };
    let metric: &[&str] = match (node.component_type.as_str(), node.metric.as_str()) {
        (_, "cpu_utilization") => &["cpu", "cpu usage", "cpu saturation"],
        (_, "memory_usage") => &["memory", "mem"],
        ("Microservice", "api_latency") => &["latency", "response time", "rt"],
        ("Microservice", "error_rate") => &["errors", "error ratio", "5xx"],
        ("Microservice", "tps") => &["traffic", "qps", "request rate"],
        ("MySQL", "db_time") => &["slow queries", "query time"],
        ("MySQL", "active_connections") => &["connections", "connection pool"],
        ("Redis", "command_latency") => &["cache latency", "command time"],
        _ => &[],
    };
    (entity, metric)
}

fn mention(node: &MetaNode, pick: u64) -> RawMention {
    let (entities, metrics) = vocabulary(node);
    let choose = |words: &[&str], fallback: &str| {
        if words.is_empty() {
            fallback.to_string()
        } else {
            words[pick as usize % words.len()].to_string()
        }
    };
    RawMention {
        entity_name: choose(entities, &node.component_type),
        metric_name: choose(metrics, &node.metric),
    }
}

/// A post-incident report naming the fault and its strongest direct effect,
/// worded with the report vocabulary. `None` when the fault node has no
/// planted child.
pub fn mock_report(case: &GroundTruthCase) -> Option<RawCaseExtract> {
    let gt = case.dataset.ground_truth.as_ref()?;
    let root = NodeKey::new(&gt.service, &gt.metric);
    let child = case
        .planted
        .iter()
        .filter(|e| e.cause == root)
        .max_by(|a, b| a.weight.total_cmp(&b.weight).then_with(|| b.effect.cmp(&a.effect)))?;
    Some(RawCaseExtract {
        report_id: format!("report-{}", case.dataset.id),
        raw_cause: mention(&child.meta_edge.cause, case.seed),
        raw_effect: mention(&child.meta_edge.effect, case.seed / 7),
        report_time: case.dataset.t_rca,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub fault_type: FaultType,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub cases: Vec<ManifestEntry>,
}

/// Per-case seeds derived from the corpus seed.
pub fn case_seeds(seed: u64, n_cases: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_cases).map(|_| rng.random()).collect()
}

/// Generates `n_cases` cases in memory. Case `i` uses the `i`-th derived
/// seed and is named `case-<i>`.
pub fn generate_cases(
    template: &SimConfig,
    n_cases: usize,
    seed: u64,
    ontology: &MetadataOntology,
    mcg: &MetaCausalGraph,
) -> Result<Vec<GroundTruthCase>, SimError> {
    let width = pad(n_cases).max(3);
    case_seeds(seed, n_cases)
        .into_par_iter()
        .enumerate()
        .map(|(i, case_seed)| {
            let cfg = SimConfig {
                seed: case_seed,
                ..template.clone()
            };
            let mut case = generate_case(&cfg, ontology, mcg)?;
            case.dataset.id = format!("case-{i:0width$}");
            Ok(case)
        })
        .collect()
}

pub fn manifest(cases: &[GroundTruthCase]) -> CorpusManifest {
    CorpusManifest {
        cases: cases
            .iter()
            .map(|c| ManifestEntry {
                id: c.dataset.id.clone(),
                seed: c.seed,
                fault_type: c.fault_type,
                ground_truth: c.dataset.ground_truth.clone().expect("simulated cases carry ground truth"),
            })
            .collect(),
    }
}

/// Writes a corpus: one dataset directory per case (plus `planted.json`),
/// `manifest.json` and `reports.json` with one mock report per case.
/// Case directories from an earlier run are replaced.
pub fn write_corpus(cases: &[GroundTruthCase], out: &Path) -> Result<CorpusManifest, SimError> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    for entry in std::fs::read_dir(out).map_err(io_err(out))? {
        let path = entry.map_err(io_err(out))?.path();
        let stale = path.is_dir()
            && path.join("case.json").is_file()
            && path.file_name().is_some_and(|n| n.to_string_lossy().starts_with("case-"));
        if stale {
            std::fs::remove_dir_all(&path).map_err(io_err(&path))?;
        }
    }
    cases.par_iter().try_for_each(|case| {
        let dir = out.join(&case.dataset.id);
        write_dataset(&case.dataset, &dir).map_err(io_err(&dir))?;
        let planted = serde_json::to_string_pretty(&case.planted).expect("planted edges serialize");
        let path = dir.join("planted.json");
        std::fs::write(&path, planted + "\n").map_err(io_err(&path))
    })?;
    let m = manifest(cases);
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n").map_err(io_err(&path))?;
    let reports: Vec<RawCaseExtract> = cases.iter().filter_map(mock_report).collect();
    let path = out.join("reports.json");
    std::fs::write(&path, serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n")
        .map_err(io_err(&path))?;
    Ok(m)
}

pub fn generate_corpus(
    template: &SimConfig,
    n_cases: usize,
    seed: u64,
    ontology: &MetadataOntology,
    mcg: &MetaCausalGraph,
    out: &Path,
) -> Result<CorpusManifest, SimError> {
    let cases = generate_cases(template, n_cases, seed, ontology, mcg)?;
    write_corpus(&cases, out)
}
