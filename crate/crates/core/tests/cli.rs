//! End-to-end checks of the `metarca` binary: exit codes, outputs and
//! configuration precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use metarca::mcg::{builtin_bootstrap_edges, BootstrapEdge, MetaNode};
use metarca::telemetry::{write_dataset, IncidentDataset, Instance, MetricSeries, NodeKey, Topology};

fn metarca(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_metarca"));
    for (k, _) in std::env::vars() {
        if k.starts_with("METARCA_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).envs(env.iter().copied()).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// One service whose metrics repeat the same bounded wave before and after
/// `t_F`, so nothing crosses the anomaly threshold.
fn quiet_dataset(dir: &Path) {
    let t0 = 1_700_000_000;
    let n = 90;
    let timestamps: Vec<i64> = (0..n).map(|i| t0 + 30 * i as i64).collect();
    let mut series = BTreeMap::new();
    for (j, metric) in ["tps", "api_latency", "error_rate", "cpu_utilization"].iter().enumerate() {
        let key = NodeKey::new("svc-00", *metric);
        let values = (0..n).map(|i| Some(10.0 + j as f64 + ((i % 6) as f64 - 2.5))).collect();
        series.insert(
            key,
            MetricSeries {
                instance: "svc-00".into(),
                metric: metric.to_string(),
                timestamps: timestamps.clone(),
                values,
            },
        );
    }
    let ds = IncidentDataset {
        id: "quiet".into(),
        topology: Topology {
            instances: vec![Instance {
                id: "svc-00".into(),
                component_type: "Microservice".into(),
            }],
            edges: Vec::new(),
        },
        series,
        t0,
        t_f: t0 + 30 * 60,
        t_rca: t0 + 30 * (n as i64 - 1),
        ground_truth: None,
    };
    write_dataset(&ds, dir).expect("dataset written");
}

/// Skeleton graph plus a three-case corpus in `dir`.
fn skeleton_and_corpus(dir: &Path) -> (String, String) {
    let mcg = dir.join("skeleton.json");
    let corpus = dir.join("corpus");
    let o = metarca(&["mcg", "bootstrap", "--at", "1700000000", "--out", s(&mcg)], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = metarca(&["simulate", "--n", "3", "--seed", "7", "--out", s(&corpus)], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (s(&mcg).to_string(), s(&corpus).to_string())
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&metarca(&["--help"], &[])), 0);
    assert_eq!(code(&metarca(&["frobnicate"], &[])), 1);
    assert_eq!(code(&metarca(&["diagnose"], &[])), 1);
}

#[test]
fn ontology_validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = concat!(env!("CARGO_MANIFEST_DIR"), "/data/ontology.json");
    let o = metarca(&["ontology", "validate", good], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("ok:"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"component_types": [{"name": "A", "metrics": [{"name": "m", "kind": "sli"}]}], "patterns": [{"src": "A", "dst": "Nope", "conn_type": "invoke"}]}"#,
    )
    .unwrap();
    let o = metarca(&["ontology", "validate", s(&bad)], &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("Nope"), "{}", stderr(&o));

    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&metarca(&["ontology", "validate", s(&missing)], &[])), 2);
}

#[test]
fn bootstrap_keeps_valid_edges_and_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let mut edges: Vec<BootstrapEdge> = builtin_bootstrap_edges().into_iter().take(9).collect();
    edges.push(BootstrapEdge {
        cause: MetaNode::new("Microservice", "queue_depth"),
        effect: MetaNode::new("Microservice", "api_latency"),
        pattern: "Microservice--internal-->Microservice".into(),
    });
    let file = tmp.path().join("edges.json");
    std::fs::write(&file, serde_json::to_string(&edges).unwrap()).unwrap();
    let out = tmp.path().join("mcg.json");
    let o = metarca(
        &["mcg", "bootstrap", "--edges", s(&file), "--at", "1700000000", "--out", s(&out)],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("bootstrapped 9 edges, 1 rejected"), "{}", stdout(&o));
    assert!(stderr(&o).contains("queue_depth"), "{}", stderr(&o));
    let snapshot: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(snapshot["edges"].as_array().unwrap().len(), 9);
}

#[test]
fn stream_update_rejects_out_of_order_evidence() {
    let tmp = tempfile::tempdir().unwrap();
    let mcg = tmp.path().join("mcg.json");
    assert_eq!(code(&metarca(&["mcg", "bootstrap", "--at", "1700000000", "--out", s(&mcg)], &[])), 0);
    let record = |t: i64| {
        format!(
            r#"{{"kind":"case","cause":{{"type":"MySQL","metric":"db_time"}},"effect":{{"type":"Microservice","metric":"api_latency"}},"timestamp":{t},"source_id":"r"}}"#
        )
    };
    let evidence = tmp.path().join("ev.jsonl");
    std::fs::write(&evidence, format!("{}\n{}\n", record(1_700_100_000), record(1_700_050_000))).unwrap();
    let out = tmp.path().join("next.json");
    let o = metarca(
        &["mcg", "update", "--mcg", s(&mcg), "--evidence", s(&evidence), "--mode", "stream", "--out", s(&out)],
        &[],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(!out.exists());

    // The same records are fine in batch mode.
    let o = metarca(
        &["mcg", "update", "--mcg", s(&mcg), "--evidence", s(&evidence), "--out", s(&out)],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("2 case"), "{}", stdout(&o));
}

#[test]
fn diagnose_reports_no_incident() {
    let tmp = tempfile::tempdir().unwrap();
    let mcg = tmp.path().join("mcg.json");
    assert_eq!(code(&metarca(&["mcg", "bootstrap", "--at", "1700000000", "--out", s(&mcg)], &[])), 0);
    let ds = tmp.path().join("quiet");
    quiet_dataset(&ds);
    let o = metarca(&["diagnose", "--mcg", s(&mcg), "--dataset", s(&ds)], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "no incident detected");
}

#[test]
fn diagnose_without_graph_or_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("quiet");
    quiet_dataset(&ds);
    assert_eq!(code(&metarca(&["diagnose", "--dataset", s(&ds)], &[])), 1);
    let mcg = tmp.path().join("mcg.json");
    assert_eq!(code(&metarca(&["mcg", "bootstrap", "--at", "1700000000", "--out", s(&mcg)], &[])), 0);
    let missing = tmp.path().join("nowhere");
    assert_eq!(code(&metarca(&["diagnose", "--mcg", s(&mcg), "--dataset", s(&missing)], &[])), 2);
}

#[test]
fn diagnose_exports_dot_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let (mcg, corpus) = skeleton_and_corpus(tmp.path());
    let case = format!("{corpus}/case-000");
    let dots = tmp.path().join("dot");
    let out = tmp.path().join("ranking.json");
    let o = metarca(
        &["diagnose", "--mcg", &mcg, "--dataset", &case, "--top-k", "3", "--export-dot", s(&dots), "--out", s(&out)],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("rank"), "{}", stdout(&o));
    for stage in ["instantiated", "fused", "pruned"] {
        let text = std::fs::read_to_string(dots.join(format!("{stage}.dot"))).unwrap();
        assert!(text.starts_with("digraph"), "{stage}: {text}");
    }
    let ranking: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ranking["cases"].as_array().unwrap().len(), 3);
}

#[test]
fn bench_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (mcg, corpus) = skeleton_and_corpus(tmp.path());
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&metarca(&["bench", "--mcg", &mcg, "--corpus", s(&empty)], &[])), 1);
    let missing = tmp.path().join("missing");
    assert_eq!(code(&metarca(&["bench", "--mcg", &mcg, "--corpus", s(&missing)], &[])), 2);
    let o = metarca(&["bench", "--mcg", &mcg, "--corpus", &corpus, "--workers", "2"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("cases: 3"), "{}", stdout(&o));
}

#[test]
fn flags_override_env_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mcg.json");
    let bootstrap = |extra: &[&str], env: &[(&str, &str)]| {
        let mut args: Vec<&str> = extra.to_vec();
        args.extend(["mcg", "bootstrap", "--at", "1700000000", "--out", s(&out)]);
        code(&metarca(&args, env))
    };
    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{"p0": 1.5}"#).unwrap();
    let cfg = s(&config);

    assert_eq!(bootstrap(&["--config", cfg], &[]), 1);
    assert_eq!(bootstrap(&[], &[("METARCA_CONFIG", cfg)]), 1);
    assert_eq!(bootstrap(&["--config", cfg], &[("METARCA_P0", "0.4")]), 0);
    assert_eq!(bootstrap(&[], &[("METARCA_P0", "1.5")]), 1);
    assert_eq!(bootstrap(&["--p0", "0.4"], &[("METARCA_P0", "1.5")]), 0);
    assert_eq!(bootstrap(&["--config", cfg, "--p0", "0.4"], &[("METARCA_P0", "oops")]), 1);

    let snapshot: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(snapshot["config"]["p0"], 0.4);
}

#[test]
fn reruns_overwrite_outputs_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let (mcg, corpus) = skeleton_and_corpus(tmp.path());
    let read_corpus = |dir: &str| -> BTreeMap<String, Vec<u8>> {
        let mut files = BTreeMap::new();
        for case in std::fs::read_dir(dir).unwrap() {
            let case = case.unwrap().path();
            let entries: Vec<_> = if case.is_dir() {
                std::fs::read_dir(&case).unwrap().map(|e| e.unwrap().path()).collect()
            } else {
                vec![case]
            };
            for f in entries {
                files.insert(f.display().to_string(), std::fs::read(&f).unwrap());
            }
        }
        files
    };
    let first = read_corpus(&corpus);
    let o = metarca(&["simulate", "--n", "3", "--seed", "7", "--out", &corpus], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(first, read_corpus(&corpus));

    let report = tmp.path().join("report.json");
    let strip = |path: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        v["mean_rca_seconds"] = 0.into();
        v["std_rca_seconds"] = 0.into();
        for c in v["cases"].as_array_mut().unwrap() {
            c["seconds"] = 0.into();
        }
        v
    };
    let mut reports = Vec::new();
    for _ in 0..2 {
        let o = metarca(&["bench", "--mcg", &mcg, "--corpus", &corpus, "--report", s(&report)], &[]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        reports.push(strip(&report));
    }
    assert_eq!(reports[0], reports[1]);

    let evidence = tmp.path().join("ev.jsonl");
    let mut streams = Vec::new();
    for _ in 0..2 {
        let o = metarca(&["evidence", "discover", "--dataset", &format!("{corpus}/case-001"), "--out", s(&evidence)], &[]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        streams.push(std::fs::read(&evidence).unwrap());
    }
    assert_eq!(streams[0], streams[1]);
}

#[test]
fn align_case_then_update() {
    let tmp = tempfile::tempdir().unwrap();
    let (mcg, corpus) = skeleton_and_corpus(tmp.path());
    let reports = format!("{corpus}/reports.json");
    let evidence = tmp.path().join("case.jsonl");
    let o = metarca(&["evidence", "align-case", "--extracts", &reports, "--out", s(&evidence)], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("3 extracts, 3 records"), "{}", stdout(&o));
    let out = tmp.path().join("updated.json");
    let o = metarca(
        &["mcg", "update", "--mcg", &mcg, "--evidence", s(&evidence), "--mode", "stream", "--out", s(&out)],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("3 case"), "{}", stdout(&o));
}
