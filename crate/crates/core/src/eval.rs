//! Accuracy and timing over a corpus of diagnosed incidents.
//!
//! AC@k is the fraction of cases whose ground truth appears within the top
//! `k` of the ranking, measured per service and per `(service, metric)`.
//! A ground truth missing from the ranking counts as rank infinity.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcg::MetaCausalGraph;
use crate::online::{diagnose, DiagnoseParams, RankedCauses};
use crate::ontology::MetadataOntology;
use crate::stats::mean_std;
use crate::telemetry::{load_dataset, GroundTruth, IncidentDataset};

pub const REPORTED_K: [usize; 3] = [1, 3, 5];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty corpus: accuracy is undefined")]
    EmptyCorpus,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Service,
    Metric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub case_id: String,
    pub ground_truth: GroundTruth,
    pub ranked: RankedCauses,
    /// Anomaly detection through ranked output.
    pub duration_seconds: f64,
    pub warnings: Vec<String>,
}

impl CaseResult {
    pub fn rank(&self, granularity: Granularity) -> Option<usize> {
        let gt = &self.ground_truth;
        match granularity {
            Granularity::Service => self.ranked.service_rank(&gt.service),
            Granularity::Metric => self.ranked.metric_rank(&gt.service, &gt.metric),
        }
    }
}

pub fn ac_at_k(results: &[CaseResult], k: usize, granularity: Granularity) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if k == 0 {
        return Err(EvalError::Invalid("k must be at least 1".into()));
    }
    let hits = results
        .iter()
        .filter(|r| r.rank(granularity).is_some_and(|rank| rank <= k))
        .count();
    Ok(hits as f64 / results.len() as f64)
}

/// Mean and population standard deviation of per-case durations.
pub fn avg_rca_time(results: &[CaseResult]) -> Result<(f64, f64), EvalError> {
    let durations: Vec<f64> = results.iter().map(|r| r.duration_seconds).collect();
    mean_std(&durations).ok_or(EvalError::EmptyCorpus)
}

/// `mean(std)` with two decimals, e.g. `0.19(0.03)`.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2}({std:.2})")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub k: usize,
    pub service: f64,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_id: String,
    pub ground_truth: GroundTruth,
    pub service_rank: Option<usize>,
    pub metric_rank: Option<usize>,
    pub top: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n_cases: usize,
    pub accuracy: Vec<AccuracyCell>,
    pub mean_rca_seconds: f64,
    pub std_rca_seconds: f64,
    pub cases: Vec<CaseRow>,
    pub skipped: Vec<SkippedCase>,
}

/// Timing-free view of a report, for determinism checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracySummary<'a> {
    pub n_cases: usize,
    pub accuracy: &'a [AccuracyCell],
    pub ranks: Vec<(&'a str, Option<usize>, Option<usize>, Option<&'a str>)>,
    pub skipped: &'a [SkippedCase],
}

impl BenchmarkReport {
    pub fn from_results(results: &[CaseResult], skipped: Vec<SkippedCase>) -> Result<Self, EvalError> {
        let accuracy = REPORTED_K
            .iter()
            .map(|&k| {
                Ok(AccuracyCell {
                    k,
                    service: ac_at_k(results, k, Granularity::Service)?,
                    metric: ac_at_k(results, k, Granularity::Metric)?,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        let (mean, std) = avg_rca_time(results)?;
        let cases = results
            .iter()
            .map(|r| CaseRow {
                case_id: r.case_id.clone(),
                ground_truth: r.ground_truth.clone(),
                service_rank: r.rank(Granularity::Service),
                metric_rank: r.rank(Granularity::Metric),
                top: r.ranked.entries.first().map(|e| format!("{}.{}", e.instance, e.metric)),
                seconds: r.duration_seconds,
            })
            .collect();
        Ok(Self {
            n_cases: results.len(),
            accuracy,
            mean_rca_seconds: mean,
            std_rca_seconds: std,
            cases,
            skipped,
        })
    }

    pub fn ac(&self, k: usize, granularity: Granularity) -> Option<f64> {
        self.accuracy.iter().find(|c| c.k == k).map(|c| match granularity {
            Granularity::Service => c.service,
            Granularity::Metric => c.metric,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn accuracy_summary(&self) -> AccuracySummary<'_> {
        AccuracySummary {
            n_cases: self.n_cases,
            accuracy: &self.accuracy,
            ranks: self
                .cases
                .iter()
                .map(|c| (c.case_id.as_str(), c.service_rank, c.metric_rank, c.top.as_deref()))
                .collect(),
            skipped: &self.skipped,
        }
    }

    /// Canonical JSON of [`Self::accuracy_summary`].
    pub fn accuracy_json(&self) -> String {
        serde_json::to_string_pretty(&self.accuracy_summary()).expect("summary serializes")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "cases: {}  skipped: {}", self.n_cases, self.skipped.len()).unwrap();
        writeln!(out, "{:<10}{:>10}{:>10}{:>10}", "", "AC@1", "AC@3", "AC@5").unwrap();
        for (label, g) in [("service", Granularity::Service), ("metric", Granularity::Metric)] {
            let cells: Vec<String> = REPORTED_K
                .iter()
                .map(|&k| self.ac(k, g).map_or("/".into(), |v| format!("{v:.2}")))
                .collect();
            writeln!(out, "{label:<10}{:>10}{:>10}{:>10}", cells[0], cells[1], cells[2]).unwrap();
        }
        writeln!(
            out,
            "avg RCA time (s): {}",
            format_mean_std(self.mean_rca_seconds, self.std_rca_seconds)
        )
        .unwrap();
        for s in &self.skipped {
            writeln!(out, "skipped {}: {}", s.case_id, s.reason).unwrap();
        }
        out
    }
}

/// Diagnoses one dataset and scores it against its ground truth.
pub fn evaluate_case(
    mcg: &MetaCausalGraph,
    ontology: &MetadataOntology,
    dataset: &IncidentDataset,
    params: &DiagnoseParams,
) -> Result<CaseResult, String> {
    let ground_truth = dataset
        .ground_truth
        .clone()
        .ok_or_else(|| "dataset has no ground truth".to_string())?;
    let d = diagnose(mcg, ontology, dataset, params);
    Ok(CaseResult {
        case_id: dataset.id.clone(),
        ground_truth,
        duration_seconds: d.timing_seconds,
        warnings: d.warnings,
        ranked: d.ranked,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, EvalError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Invalid(format!("cannot start worker pool: {e}")))
}

/// In-memory benchmark. Results keep input order whatever the worker count.
pub fn benchmark_datasets(
    datasets: &[IncidentDataset],
    mcg: &MetaCausalGraph,
    ontology: &MetadataOntology,
    params: &DiagnoseParams,
    workers: usize,
) -> Result<(BenchmarkReport, Vec<CaseResult>), EvalError> {
    let outcomes: Vec<Result<CaseResult, String>> = pool(workers)?.install(|| {
        datasets
            .par_iter()
            .map(|d| evaluate_case(mcg, ontology, d, params))
            .collect()
    });
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for (d, outcome) in datasets.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(reason) => skipped.push(SkippedCase {
                case_id: d.id.clone(),
                reason,
            }),
        }
    }
    let report = BenchmarkReport::from_results(&results, skipped)?;
    Ok((report, results))
}

/// Case directories of a corpus, sorted by name.
pub fn case_dirs(corpus: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |source| EvalError::Io {
        path: corpus.display().to_string(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(corpus).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads every case directory under `corpus` and benchmarks them. Cases that
/// fail to load are reported as skipped and left out of the denominators.
pub fn run_benchmark(
    corpus: &Path,
    mcg: &MetaCausalGraph,
    ontology: &MetadataOntology,
    params: &DiagnoseParams,
    workers: usize,
) -> Result<BenchmarkReport, EvalError> {
    let dirs = case_dirs(corpus)?;
    if dirs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let loaded: Vec<Result<IncidentDataset, SkippedCase>> = pool(workers)?.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let case_id = dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
                match load_dataset(dir, Some(ontology)) {
                    Ok(l) if l.dataset.ground_truth.is_none() => Err(SkippedCase {
                        case_id,
                        reason: "dataset has no ground truth".into(),
                    }),
                    Ok(l) => Ok(l.dataset),
                    Err(e) => Err(SkippedCase {
                        case_id,
                        reason: e.to_string(),
                    }),
                }
            })
            .collect()
    });
    let mut datasets = Vec::new();
    let mut skipped = Vec::new();
    for l in loaded {
        match l {
            Ok(d) => datasets.push(d),
            Err(s) => skipped.push(s),
        }
    }
    let (mut report, _) = benchmark_datasets(&datasets, mcg, ontology, params, workers)?;
    skipped.append(&mut report.skipped);
    skipped.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    report.skipped = skipped;
    Ok(report)
}
