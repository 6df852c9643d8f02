//! Property tests for the invariants of each module.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use metarca::eval::{ac_at_k, CaseResult, Granularity};
use metarca::evidence::{EvidenceKind, EvidenceRecord};
use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, cbs, log_odds_from_prior, BeliefConfig, EdgeOrigin, MetaEdge, MetaNode, StreamOutcome};
use metarca::online::{ccb_scores, lagged_correlation, prune, RankedCauses, RankedEntry, ServiceEntry};
use metarca::ontology::{builtin, load_ontology, save_ontology, ComponentType, ConnType, ConnectionPattern, MetadataOntology, MetricDef, MetricKind};
use metarca::telemetry::{compute_frz, detect_anomalies, zscore_series, GroundTruth, IncidentDataset, Instance, MetricSeries, NodeKey, Topology};

use common::licg;

const TYPES: [&str; 4] = ["Alpha", "Beta", "Gamma", "Delta"];
const CONNS: [ConnType; 2] = [ConnType::Invoke, ConnType::On];

/// Types `0..n_types`, each with one or more metrics, and a subset of the
/// possible non-internal patterns.
fn ontology_strategy() -> impl Strategy<Value = MetadataOntology> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec((1usize..=4, any::<bool>()), n),
                proptest::collection::vec(any::<bool>(), n * n * 2),
            )
        })
        .prop_map(|(metrics, mask)| {
            let n = metrics.len();
            let types: Vec<ComponentType> = metrics
                .iter()
                .enumerate()
                .map(|(i, &(m, resource_first))| ComponentType {
                    name: TYPES[i].into(),
                    metrics: (0..m)
                        .map(|j| {
                            let kind = if (j == 0) == resource_first {
                                MetricKind::Resource
                            } else {
                                MetricKind::Sli
                            };
                            MetricDef::new(format!("m{j}"), kind)
                        })
                        .collect(),
                })
                .collect();
            let mut patterns = Vec::new();
            for s in 0..n {
                for d in 0..n {
                    for (c, conn) in CONNS.iter().enumerate() {
                        if mask[(s * n + d) * 2 + c] {
                            patterns.push(ConnectionPattern::new(TYPES[s], TYPES[d], *conn));
                        }
                    }
                }
            }
            MetadataOntology::new(types, patterns).expect("generated ontology is valid")
        })
}

proptest! {
    #[test]
    fn ontology_round_trips_through_a_file(o in ontology_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.json");
        save_ontology(&o, &path).unwrap();
        let back = load_ontology(&path).unwrap();
        prop_assert_eq!(&back, &o);
        prop_assert_eq!(back.content_hash(), o.content_hash());
    }

    #[test]
    fn match_pattern_finds_exactly_the_declared_triples(o in ontology_strategy(), s in 0usize..5, d in 0usize..5, c in 0usize..3) {
        for p in o.patterns() {
            prop_assert_eq!(o.match_pattern(&p.src_type, &p.dst_type, p.conn_type), Some(p));
        }
        let names = ["Alpha", "Beta", "Gamma", "Delta", "Omega"];
        let conn = [ConnType::Invoke, ConnType::On, ConnType::Internal][c];
        let (src, dst) = (names[s], names[d]);
        let declared = o.patterns().iter().any(|p| p.src_type == src && p.dst_type == dst && p.conn_type == conn)
            || (conn == ConnType::Internal && src == dst && o.has_type(src));
        let first = o.match_pattern(src, dst, conn).cloned();
        prop_assert_eq!(first.is_some(), declared);
        prop_assert_eq!(first, o.match_pattern(src, dst, conn).cloned());
    }

    #[test]
    fn logit_round_trip(p in 0.000_001f64..0.999_999) {
        prop_assert!((cbs(log_odds_from_prior(p).unwrap()) - p).abs() < 1e-12);
    }

    #[test]
    fn decay_never_flips_sign_or_grows(l in -20.0f64..20.0, days in 0.0f64..2000.0, k in 0.0f64..0.1) {
        let edge = MetaEdge {
            cause: MetaNode::new("Microservice", "tps"),
            effect: MetaNode::new("Microservice", "api_latency"),
            pattern: "Microservice--internal-->Microservice".into(),
            log_odds: l,
            last_update: 0,
            counts: Default::default(),
            origin: EdgeOrigin::Bootstrap,
        };
        let decayed = edge.decayed_log_odds((days * 86_400.0) as i64, k);
        prop_assert!(decayed.abs() <= l.abs());
        prop_assert!(decayed == 0.0 || decayed.signum() == l.signum());
    }

    #[test]
    fn evidence_never_lowers_belief_at_update_time(
        picks in proptest::collection::vec((0usize..64, any::<bool>(), 0i64..30 * 86_400), 1..40),
    ) {
        let o = builtin();
        let edges = builtin_bootstrap_edges();
        let t0 = 1_700_000_000;
        let (mut g, _) = bootstrap_skeleton(&o, &edges, BeliefConfig::default(), t0).unwrap();
        let mut t = t0;
        for (pick, case, gap) in picks {
            t += gap;
            let e = &edges[pick % edges.len()];
            let record = EvidenceRecord {
                kind: if case { EvidenceKind::Case } else { EvidenceKind::Statistical },
                cause: e.cause.clone(),
                effect: e.effect.clone(),
                timestamp: t,
                source_id: "p".into(),
                pattern: Some(e.pattern.clone()),
            };
            let before = g.log_odds_at(t);
            let outcome = g.streaming_update(&o, &record, t).unwrap();
            let StreamOutcome::Updated(key) = outcome else {
                return Err(TestCaseError::fail("skeleton edge must exist"));
            };
            let after = g.edge(&key).unwrap().log_odds;
            prop_assert!(after > before[&key]);
        }
    }

    #[test]
    fn zscores_are_shift_and_scale_invariant(
        values in proptest::collection::vec(-100.0f64..100.0, 40),
        shift in -1e4f64..1e4,
        scale in 0.01f64..100.0,
    ) {
        let mk = |vals: Vec<f64>| MetricSeries {
            instance: "a".into(),
            metric: "m".into(),
            timestamps: (0..vals.len() as i64).collect(),
            values: vals.into_iter().map(Some).collect(),
        };
        let base = zscore_series(&mk(values.clone()), 0, 30, 39).unwrap();
        let shifted = zscore_series(&mk(values.iter().map(|v| v + shift).collect()), 0, 30, 39).unwrap();
        let scaled = zscore_series(&mk(values.iter().map(|v| v * scale).collect()), 0, 30, 39).unwrap();
        let spread = values[..30].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assume!(spread > 1.0);
        for ((a, b), c) in base.iter().zip(&shifted).zip(&scaled) {
            prop_assert!((a.1 - b.1).abs() < 1e-6 * a.1.abs().max(1.0), "{} vs {}", a.1, b.1);
            prop_assert!((a.1 - c.1).abs() < 1e-9 * a.1.abs().max(1.0), "{} vs {}", a.1, c.1);
        }
    }

    #[test]
    fn thresholds_and_frz(ds in dataset_strategy(), lo in 0.5f64..6.0, gap in 0.0f64..4.0) {
        let low = detect_anomalies(&ds, lo);
        let high = detect_anomalies(&ds, lo + gap);
        let low_set: BTreeSet<_> = low.anomalous().cloned().collect();
        let high_set: BTreeSet<_> = high.anomalous().cloned().collect();
        prop_assert!(high_set.is_subset(&low_set));

        // Brute-force FRZ from an independent z computation.
        let mut frz = BTreeSet::new();
        let mut borderline = false;
        for s in ds.series.values() {
            let pairs: Vec<(i64, f64)> = s.timestamps.iter().zip(&s.values).filter_map(|(t, v)| v.map(|v| (*t, v))).collect();
            let base: Vec<f64> = pairs.iter().filter(|(t, _)| *t < ds.t_f).map(|p| p.1).collect();
            let mean = base.iter().sum::<f64>() / base.len() as f64;
            let sd = (base.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / base.len() as f64).sqrt();
            let z = pairs
                .iter()
                .filter(|(t, _)| *t >= ds.t_f && *t <= ds.t_rca)
                .map(|(_, v)| ((v - mean) / sd).abs().min(50.0))
                .fold(0.0, f64::max);
            borderline |= (z - lo).abs() < 1e-9;
            if z > lo {
                frz.insert(s.instance.clone());
            }
        }
        prop_assume!(!borderline);
        prop_assert_eq!(compute_frz(&low), frz);
    }

    #[test]
    fn pruning_is_monotone(weights in proptest::collection::vec(0.0f64..1.0, 1..30), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let n = 8;
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let nodes: Vec<(&str, f64)> = names.iter().map(|s| (s.as_str(), 0.5)).collect();
        let edges: Vec<(&str, &str, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(i, _)| i % n != (i / n) % n)
            .map(|(i, &w)| (names[i % n].as_str(), names[(i / n) % n].as_str(), w))
            .collect();
        let mut seen = BTreeSet::new();
        let edges: Vec<_> = edges.into_iter().filter(|e| seen.insert((e.0, e.1))).collect();
        let g = licg(&nodes, &edges);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let keep = |t: f64| -> BTreeSet<(NodeKey, NodeKey)> {
            prune(g.clone(), t).edges.iter().map(|e| (e.cause.clone(), e.effect.clone())).collect()
        };
        prop_assert!(keep(hi).is_subset(&keep(lo)));
        prop_assert_eq!(prune(g.clone(), hi).nodes, g.nodes);
    }

    #[test]
    fn ccb_scales_linearly_on_dags(dag in dag_strategy(), c in 0.05f64..20.0) {
        let (intrinsic, edges) = dag;
        let names: Vec<String> = (0..intrinsic.len()).map(|i| format!("n{i:02}")).collect();
        let nodes: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(intrinsic.iter().copied()).collect();
        let e: Vec<(&str, &str, f64)> = edges.iter().map(|&(u, v, w)| (names[u].as_str(), names[v].as_str(), w)).collect();
        let g = licg(&nodes, &e);
        let mut scaled = g.clone();
        for node in &mut scaled.nodes {
            node.anomaly_score *= c;
        }
        let a = ccb_scores(&g, 1e-13, 500);
        let b = ccb_scores(&scaled, 1e-13, 500);
        prop_assert!(a.converged && b.converged);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x * c - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn ccb_contracts_on_cycles_with_small_weights(
        raw in proptest::collection::vec((0usize..10, 0usize..10, 0.0f64..1.0), 1..40),
        intrinsic in proptest::collection::vec(0.5f64..1.0, 10),
    ) {
        // Row sums below 0.9 bound the spectral radius below 1.
        let mut rows = [0.0f64; 10];
        let mut seen = BTreeSet::new();
        let raw: Vec<_> = raw.into_iter().filter(|&(u, v, _)| u != v && seen.insert((u, v))).collect();
        for &(u, _, w) in &raw {
            rows[u] += w;
        }
        let names: Vec<String> = (0..10).map(|i| format!("n{i}")).collect();
        let edges: Vec<(&str, &str, f64)> = raw
            .iter()
            .map(|&(u, v, w)| (names[u].as_str(), names[v].as_str(), 0.9 * w / rows[u].max(1.0)))
            .collect();
        let nodes: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(intrinsic.iter().copied()).collect();
        let g = licg(&nodes, &edges);
        let out = ccb_scores(&g, 1e-6, 1000);
        prop_assert!(out.converged);
        let idx = g.node_index();
        for (i, name) in names.iter().enumerate() {
            let u = idx[&NodeKey::new(name, "m")];
            let rhs = intrinsic[i]
                + edges
                    .iter()
                    .filter(|e| e.0 == name)
                    .map(|e| e.2 * out.scores[idx[&NodeKey::new(e.1, "m")]])
                    .sum::<f64>();
            prop_assert!((out.scores[u] - rhs).abs() < 1e-4);
        }
    }

    #[test]
    fn shifted_copy_correlates_perfectly(values in proptest::collection::vec(-10.0f64..10.0, 30..120), lag in 0usize..=5) {
        let cause: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
        let effect: Vec<Option<f64>> = (0..values.len()).map(|t| (t >= lag).then(|| values[t - lag])).collect();
        let (mean, _) = metarca::stats::mean_std(&values).unwrap();
        prop_assume!(values.iter().any(|v| (v - mean).abs() > 1e-3));
        let lc = lagged_correlation(&cause, &effect, 5);
        prop_assert!((lc.s_corr - 1.0).abs() < 1e-9);
        prop_assert_eq!(lc.best_lag, lag);
    }

    #[test]
    fn ac_at_k_matches_a_recount(corpus in corpus_strategy()) {
        for k in 1..=8 {
            let s = ac_at_k(&corpus, k, Granularity::Service).unwrap();
            let m = ac_at_k(&corpus, k, Granularity::Metric).unwrap();
            prop_assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&m));
            prop_assert!(s >= m);
            let next = ac_at_k(&corpus, k + 1, Granularity::Metric).unwrap();
            prop_assert!(next >= m);
            let hits = corpus
                .iter()
                .filter(|r| r.ranked.entries.iter().take(k).any(|e| e.instance == r.ground_truth.service && e.metric == r.ground_truth.metric))
                .count();
            prop_assert_eq!(m, hits as f64 / corpus.len() as f64);
        }
    }
}

/// Two instances with three metrics each; one carries a step of random size
/// from `t_F`.
fn dataset_strategy() -> impl Strategy<Value = IncidentDataset> {
    (
        proptest::collection::vec(-3.0f64..3.0, 6 * 60),
        0usize..6,
        0.0f64..12.0,
    )
        .prop_map(|(noise, target, step)| {
            let mut series = BTreeMap::new();
            for j in 0..6 {
                let inst = format!("i{}", j / 3);
                let metric = format!("m{}", j % 3);
                let values = (0..60)
                    .map(|t| {
                        let bump = if j == target && t >= 40 { step } else { 0.0 };
                        Some(noise[j * 60 + t] + bump)
                    })
                    .collect();
                series.insert(
                    NodeKey::new(&inst, &metric),
                    MetricSeries {
                        instance: inst,
                        metric,
                        timestamps: (0..60).collect(),
                        values,
                    },
                );
            }
            IncidentDataset {
                id: "p".into(),
                topology: Topology {
                    instances: ["i0", "i1"]
                        .iter()
                        .map(|i| Instance {
                            id: i.to_string(),
                            component_type: "T".into(),
                        })
                        .collect(),
                    edges: Vec::new(),
                },
                series,
                t0: 0,
                t_f: 40,
                t_rca: 59,
                ground_truth: None,
            }
        })
}

/// Intrinsic scores and forward-only weighted edges.
fn dag_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<(usize, usize, f64)>)> {
    (2usize..20).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.1f64..1.0, n),
            proptest::collection::vec((0..n, 0..n, 0.05f64..1.5), 0..3 * n),
        )
            .prop_map(|(intrinsic, raw)| {
                let mut seen = BTreeSet::new();
                let edges = raw
                    .into_iter()
                    .filter(|&(u, v, _)| u < v && seen.insert((u, v)))
                    .collect();
                (intrinsic, edges)
            })
    })
}

fn corpus_strategy() -> impl Strategy<Value = Vec<CaseResult>> {
    let case = (
        proptest::collection::vec((0usize..4, 0usize..3), 0..8),
        0usize..4,
        0usize..3,
    )
        .prop_map(|(ranked, gs, gm)| {
            let mut seen = BTreeSet::new();
            let entries: Vec<RankedEntry> = ranked
                .into_iter()
                .filter(|p| seen.insert(*p))
                .enumerate()
                .map(|(i, (s, m))| RankedEntry {
                    rank: i + 1,
                    instance: format!("s{s}"),
                    metric: format!("m{m}"),
                    score: 1.0 / (i + 1) as f64,
                })
                .collect();
            let mut svc = BTreeSet::new();
            let services = entries
                .iter()
                .filter(|e| svc.insert(e.instance.clone()))
                .enumerate()
                .map(|(i, e)| ServiceEntry {
                    rank: i + 1,
                    service: e.instance.clone(),
                    score: e.score,
                })
                .collect();
            CaseResult {
                case_id: "c".into(),
                ground_truth: GroundTruth {
                    service: format!("s{gs}"),
                    metric: format!("m{gm}"),
                },
                ranked: RankedCauses {
                    entries,
                    services,
                    converged: true,
                    iterations: 1,
                },
                duration_seconds: 0.0,
                warnings: Vec::new(),
            }
        });
    proptest::collection::vec(case, 1..=20)
}
