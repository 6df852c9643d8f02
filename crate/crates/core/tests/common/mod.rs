//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use metarca::evidence::{builtin_aliases, corpus_evidence, LaggedCorrelationDiscovery};
use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, BeliefConfig, EdgeKey, MetaCausalGraph, MetaNode};
use metarca::online::{Licg, LicgEdge, LicgNode, Provenance, Stage};
use metarca::ontology::{builtin, MetadataOntology};
use metarca::sim::{generate_cases, mock_report, SimConfig};
use metarca::telemetry::{IncidentDataset, NodeKey};

pub const TRAIN_SEED: u64 = 1;
pub const TEST_SEED: u64 = 2;

/// Independent logistic function.
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// LICG over nodes `(instance, anomaly_score)` on metric `m` with
/// `(cause, effect, w_licg)` edges.
pub fn licg(nodes: &[(&str, f64)], edges: &[(&str, &str, f64)]) -> Licg {
    let mut nodes: Vec<LicgNode> = nodes
        .iter()
        .map(|(n, a)| LicgNode {
            instance: n.to_string(),
            metric: "m".into(),
            max_abs_z: 0.0,
            anomaly_score: *a,
            has_series: true,
        })
        .collect();
    nodes.sort_by_key(|n| n.key());
    let mut edges: Vec<LicgEdge> = edges
        .iter()
        .map(|(c, e, w)| LicgEdge {
            cause: NodeKey::new(*c, "m"),
            effect: NodeKey::new(*e, "m"),
            meta_edge: EdgeKey::new(MetaNode::new("T", "m"), MetaNode::new("T", "m"), "T--internal-->T"),
            w_mcg: *w,
            s_anomaly: 1.0,
            s_corr: 1.0,
            s_context: 1.0,
            w_licg: *w,
            best_lag: 0,
        })
        .collect();
    edges.sort_by(|a, b| (&a.cause, &a.effect).cmp(&(&b.cause, &b.effect)));
    Licg {
        nodes,
        edges,
        provenance: Provenance {
            mcg_hash: String::new(),
            dataset_id: "test".into(),
            theta_p: 0.0,
            k_max: 5,
            fusion: true,
            stage: Stage::Fused,
        },
    }
}

pub struct World {
    pub ontology: MetadataOntology,
    pub skeleton: MetaCausalGraph,
    pub mcg: MetaCausalGraph,
    pub template: SimConfig,
}

/// Bootstrap skeleton refined by the evidence pipeline on `n_train`
/// simulated cases at the default 20-service RandomDAG setting.
pub fn trained_world(n_train: usize) -> World {
    let ontology = builtin();
    let template = SimConfig::default();
    let (skeleton, _) = bootstrap_skeleton(
        &ontology,
        &builtin_bootstrap_edges(),
        BeliefConfig::default(),
        template.sampling.start,
    )
    .expect("bundled skeleton is valid");
    let train = generate_cases(&template, n_train, TRAIN_SEED, &ontology, &skeleton).expect("training corpus");
    let datasets: Vec<IncidentDataset> = train.iter().map(|c| c.dataset.clone()).collect();
    let reports: Vec<_> = train.iter().filter_map(mock_report).collect();
    let evidence = corpus_evidence(
        &datasets,
        &reports,
        &ontology,
        &builtin_aliases(),
        &LaggedCorrelationDiscovery::default(),
    );
    let t_ref = datasets.iter().map(|d| d.t_rca).max().expect("non-empty training corpus");
    let (mcg, _) = skeleton
        .batch_update(&ontology, &evidence.records, t_ref)
        .expect("training evidence applies");
    World {
        ontology,
        skeleton,
        mcg,
        template,
    }
}

impl World {
    pub fn corpus(&self, n_services: usize, n_cases: usize, seed: u64) -> Vec<IncidentDataset> {
        let template = SimConfig {
            n_services,
            ..self.template.clone()
        };
        generate_cases(&template, n_cases, seed, &self.ontology, &self.skeleton)
            .expect("test corpus")
            .into_iter()
            .map(|c| c.dataset)
            .collect()
    }
}
