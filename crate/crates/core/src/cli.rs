//! The `metarca` command line.
//!
//! Exit codes: 0 on success (warnings go to stderr), 1 for validation,
//! domain or usage errors, 2 for I/O errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, ConfigLayer, GlobalConfig};
use crate::eval::{run_benchmark, EvalError};
use crate::evidence::{
    align_case_extract, builtin_aliases, load_extracts, read_evidence_stream, statistical_evidence,
    write_evidence_stream, AliasMap, EvidenceError, EvidenceKind, LaggedCorrelationDiscovery, DEFAULT_ALPHA,
};
use crate::mcg::{
    bootstrap_skeleton, builtin_bootstrap_edges, load_bootstrap_edges, load_mcg, save_mcg, McgError,
    MetaCausalGraph, StreamOutcome, Timestamp,
};
use crate::online::{diagnose, Ranker, NO_INCIDENT};
use crate::ontology::{builtin, load_ontology, MetadataOntology, OntologyError};
use crate::sim::{generate_corpus, SimConfig, SimError};
use crate::telemetry::{load_dataset, TelemetryError};

#[derive(Debug, Parser)]
#[command(name = "metarca", version, about = "Root cause analysis over a meta causal graph")]
pub struct Cli {
    /// JSON file with default settings; must precede the subcommand.
    #[arg(long, env = crate::config::CONFIG_ENV, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings that override the config file and `METARCA_*` variables.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Ontology file (built-in ontology when unset).
    #[arg(long, global = true, value_name = "FILE")]
    pub ontology: Option<PathBuf>,
    /// Meta causal graph snapshot.
    #[arg(long, global = true, value_name = "FILE")]
    pub mcg: Option<PathBuf>,
    /// Alias map for case alignment (built-in map when unset).
    #[arg(long, global = true, value_name = "FILE")]
    pub aliases: Option<PathBuf>,
    #[arg(long, global = true)]
    pub p0: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_fr: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_da: Option<f64>,
    /// Belief decay constant per day.
    #[arg(long, global = true)]
    pub decay_k: Option<f64>,
    #[arg(long, global = true)]
    pub z_threshold: Option<f64>,
    /// Pruning threshold on fused edge weights.
    #[arg(long, global = true)]
    pub theta_p: Option<f64>,
    /// Largest lag, in samples, for lagged correlation.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    #[arg(long, global = true, value_parser = parse_ranker)]
    pub ranker: Option<Ranker>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
}

fn parse_ranker(s: &str) -> Result<Ranker, String> {
    s.parse()
}

impl Overrides {
    pub fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            ontology: self.ontology.clone(),
            mcg: self.mcg.clone(),
            aliases: self.aliases.clone(),
            lambda_fr: self.lambda_fr,
            lambda_da: self.lambda_da,
            decay_k: self.decay_k,
            p0: self.p0,
            z_threshold: self.z_threshold,
            theta_p: self.theta_p,
            k_max: self.k_max,
            ranker: self.ranker,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ontology checks.
    #[command(subcommand)]
    Ontology(OntologyCmd),
    /// Build and update meta causal graphs.
    #[command(subcommand)]
    Mcg(McgCmd),
    /// Produce evidence streams.
    #[command(subcommand)]
    Evidence(EvidenceCmd),
    /// Rank root-cause candidates for one incident dataset.
    Diagnose {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        /// Write instantiated, fused and pruned graphs as DOT files here.
        #[arg(long, value_name = "DIR")]
        export_dot: Option<PathBuf>,
        /// Leave edges lighter than this out of the DOT drawings.
        #[arg(long, value_name = "W")]
        dot_min_weight: Option<f64>,
        /// Also write the ranking as JSON.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Diagnose every case of a corpus and report AC@k and timing.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Generate a synthetic corpus.
    Simulate {
        /// Simulator settings (defaults when unset).
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Corpus seed; the config's seed when unset.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OntologyCmd {
    Validate { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateMode {
    Batch,
    Stream,
}

#[derive(Debug, Subcommand)]
pub enum McgCmd {
    /// Build a skeleton graph with every edge at the prior.
    Bootstrap {
        /// Edge list (built-in list when unset).
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Bootstrap time, UTC epoch seconds.
        #[arg(long)]
        at: Timestamp,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fold an evidence stream into a graph.
    Update {
        #[arg(long)]
        evidence: PathBuf,
        #[arg(long, value_enum, default_value_t = UpdateMode::Batch)]
        mode: UpdateMode,
        /// Reference time for batch mode; latest evidence time when unset.
        #[arg(long)]
        at: Option<Timestamp>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvidenceCmd {
    /// Statistical evidence from one incident dataset.
    Discover {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Case evidence from extracted incident reports.
    AlignCase {
        #[arg(long)]
        extracts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

macro_rules! exit_codes {
    ($($ty:ty => $io:pat),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                let code = if matches!(e, $io) { 2 } else { 1 };
                Self { code, message: e.to_string() }
            }
        })*
    };
}

exit_codes! {
    ConfigError => ConfigError::Io { .. },
    OntologyError => OntologyError::Io { .. },
    McgError => McgError::Io { .. },
    EvidenceError => EvidenceError::Io { .. },
    TelemetryError => TelemetryError::Io { .. } | TelemetryError::MissingFile(_),
    EvalError => EvalError::Io { .. },
    SimError => SimError::Io { .. },
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn warn(message: impl std::fmt::Display) {
    eprintln!("warning: {message}");
}

const WARN_LIMIT: usize = 10;

/// Warns about the first few items and counts the rest.
fn warn_list<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) {
    let mut n = 0;
    for item in items {
        if n < WARN_LIMIT {
            warn(item);
        }
        n += 1;
    }
    if n > WARN_LIMIT {
        warn(format!("{} more not shown", n - WARN_LIMIT));
    }
}

struct Context {
    config: GlobalConfig,
}

impl Context {
    fn ontology(&self) -> Result<MetadataOntology, CliError> {
        match &self.config.paths.ontology {
            Some(p) => Ok(load_ontology(p)?),
            None => Ok(builtin()),
        }
    }

    fn mcg(&self, ontology: &MetadataOntology) -> Result<MetaCausalGraph, CliError> {
        let path = self
            .config
            .paths
            .mcg
            .as_ref()
            .ok_or_else(|| CliError::invalid("no meta causal graph given: pass --mcg or set METARCA_MCG"))?;
        let loaded = load_mcg(path, Some(ontology))?;
        loaded.warnings.iter().for_each(warn);
        Ok(loaded.graph)
    }

    fn aliases(&self) -> Result<AliasMap, CliError> {
        match &self.config.paths.aliases {
            Some(p) => Ok(AliasMap::load(p)?),
            None => Ok(builtin_aliases()),
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = GlobalConfig::resolve(cli.config.as_deref(), |k| std::env::var(k).ok(), &cli.overrides.layer())?;
    let ctx = Context { config };
    match cli.command {
        Command::Ontology(OntologyCmd::Validate { path }) => {
            let o = load_ontology(&path)?;
            println!(
                "ok: {} component types, {} connection patterns, hash {}",
                o.component_types().len(),
                o.patterns().len(),
                o.content_hash()
            );
            Ok(())
        }
        Command::Mcg(McgCmd::Bootstrap { edges, at, out }) => {
            let o = ctx.ontology()?;
            let edges = match edges {
                Some(p) => load_bootstrap_edges(p)?,
                None => builtin_bootstrap_edges(),
            };
            let (graph, report) = bootstrap_skeleton(&o, &edges, ctx.config.belief, at)?;
            report.warnings.iter().for_each(warn);
            warn_list(
                report
                    .rejected
                    .iter()
                    .map(|r| format!("rejected edge #{} {}: {}", r.index, r.subject, r.reason)),
            );
            save_mcg(&graph, &out)?;
            println!("bootstrapped {} edges, {} rejected", graph.len(), report.rejected.len());
            Ok(())
        }
        Command::Mcg(McgCmd::Update { evidence, mode, at, out }) => {
            let o = ctx.ontology()?;
            let graph = ctx.mcg(&o)?;
            let records = read_evidence_stream(&evidence)?;
            match mode {
                UpdateMode::Batch => {
                    let t_ref = at
                        .or_else(|| records.iter().map(|r| r.timestamp).max())
                        .unwrap_or(graph.bootstrap_time);
                    let (updated, report) = graph.batch_update(&o, &records, t_ref)?;
                    warn_list(
                        report
                            .rejected
                            .iter()
                            .map(|r| format!("rejected evidence line {} {}: {}", r.index + 1, r.subject, r.reason)),
                    );
                    save_mcg(&updated, &out)?;
                    println!(
                        "batch update at {t_ref}: {} case, {} statistical, {} edges created, {} rejected",
                        report.applied_case,
                        report.applied_statistical,
                        report.created_edges,
                        report.rejected.len()
                    );
                }
                UpdateMode::Stream => {
                    for (i, pair) in records.windows(2).enumerate() {
                        if pair[1].timestamp < pair[0].timestamp {
                            return Err(CliError::invalid(format!(
                                "evidence line {}: timestamp {} precedes line {} at {}; stream mode needs records in time order",
                                i + 2,
                                pair[1].timestamp,
                                i + 1,
                                pair[0].timestamp
                            )));
                        }
                    }
                    let mut graph = graph;
                    let (mut case, mut stat, mut created) = (0, 0, 0);
                    let mut rejected = Vec::new();
                    for (i, r) in records.iter().enumerate() {
                        let outcome = graph
                            .streaming_update(&o, r, r.timestamp)
                            .map_err(|e| CliError::invalid(format!("evidence line {}: {e}", i + 1)))?;
                        match outcome {
                            StreamOutcome::Rejected(reason) => {
                                rejected.push(format!("rejected evidence line {} {}: {reason}", i + 1, r.describe()));
                                continue;
                            }
                            StreamOutcome::Created(_) => created += 1,
                            StreamOutcome::Updated(_) => {}
                        }
                        match r.kind {
                            EvidenceKind::Case => case += 1,
                            EvidenceKind::Statistical => stat += 1,
                        }
                    }
                    let n_rejected = rejected.len();
                    warn_list(rejected);
                    save_mcg(&graph, &out)?;
                    println!(
                        "stream update: {case} case, {stat} statistical, {created} edges created, {n_rejected} rejected"
                    );
                }
            }
            Ok(())
        }
        Command::Evidence(EvidenceCmd::Discover { dataset, alpha, out }) => {
            let o = ctx.ontology()?;
            let loaded = load_dataset(&dataset, Some(&o))?;
            let discovery = LaggedCorrelationDiscovery {
                alpha,
                max_lag: ctx.config.online.k_max,
            };
            let (aligned, found) = statistical_evidence(&loaded.dataset, &o, &discovery)?;
            warn_list(&found.notices);
            warn_list(&aligned.rejected);
            write_evidence_stream(&out, &aligned.records)?;
            println!(
                "{} links, {} records, {} links without a dependency edge, {} rejected",
                found.links.len(),
                aligned.records.len(),
                aligned.dropped,
                aligned.rejected.len()
            );
            Ok(())
        }
        Command::Evidence(EvidenceCmd::AlignCase { extracts, out }) => {
            let o = ctx.ontology()?;
            let aliases = ctx.aliases()?;
            let extracts = load_extracts(&extracts)?;
            let mut records = Vec::new();
            let mut rejected = Vec::new();
            for (i, x) in extracts.iter().enumerate() {
                match align_case_extract(x, &o, &aliases) {
                    Ok(r) => records.push(r),
                    Err(reason) => rejected.push(format!("rejected extract #{i} ({}): {reason}", x.report_id)),
                }
            }
            write_evidence_stream(&out, &records)?;
            println!(
                "{} extracts, {} records, {} rejected",
                extracts.len(),
                records.len(),
                rejected.len()
            );
            warn_list(rejected);
            Ok(())
        }
        Command::Diagnose {
            dataset,
            top_k,
            export_dot,
            dot_min_weight,
            out,
        } => {
            let o = ctx.ontology()?;
            let mcg = ctx.mcg(&o)?;
            let loaded = load_dataset(&dataset, Some(&o))?;
            let d = diagnose(&mcg, &o, &loaded.dataset, &ctx.config.diagnose_params());
            d.warnings.iter().for_each(warn);
            let output = d.output(Some(top_k));
            if let Some(dir) = &export_dot {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
                let stages = [("instantiated", &d.instantiated), ("fused", &d.fused), ("pruned", &d.pruned)];
                for (name, g) in stages {
                    if let Some(g) = g {
                        write_text(&dir.join(format!("{name}.dot")), &g.to_dot(dot_min_weight))?;
                    }
                }
            }
            if let Some(path) = &out {
                let json = serde_json::to_string_pretty(&output).expect("ranking serializes") + "\n";
                write_text(path, &json)?;
            }
            if d.no_incident() {
                println!("{NO_INCIDENT}");
                return Ok(());
            }
            print!("{}", render_ranking(&output.cases, &output.service_ranking));
            eprintln!("diagnosis took {:.3} s", output.timing_seconds);
            Ok(())
        }
        Command::Bench {
            corpus,
            report,
            workers,
        } => {
            let o = ctx.ontology()?;
            let mcg = ctx.mcg(&o)?;
            let r = run_benchmark(&corpus, &mcg, &o, &ctx.config.diagnose_params(), workers)?;
            warn_list(r.skipped.iter().map(|s| format!("skipped {}: {}", s.case_id, s.reason)));
            if let Some(path) = &report {
                write_text(path, &(r.to_json() + "\n"))?;
            }
            print!("{}", r.render_table());
            Ok(())
        }
        Command::Simulate { config, n, out, seed } => {
            let o = ctx.ontology()?;
            let template = match config {
                Some(p) => SimConfig::load(p)?,
                None => SimConfig::default(),
            };
            let mcg = match &ctx.config.paths.mcg {
                Some(_) => ctx.mcg(&o)?,
                None => bootstrap_skeleton(&o, &builtin_bootstrap_edges(), ctx.config.belief, template.sampling.start)?.0,
            };
            let seed = seed.unwrap_or(template.seed);
            let m = generate_corpus(&template, n, seed, &o, &mcg, &out)?;
            println!("wrote {} cases to {}", m.cases.len(), out.display());
            Ok(())
        }
    }
}

fn render_ranking(cases: &[crate::online::RankedEntry], services: &[crate::online::ServiceEntry]) -> String {
    let mut s = String::new();
    writeln!(s, "rank  candidate{:<41}score", "").unwrap();
    for e in cases {
        let name = format!("{}.{}", e.instance, e.metric);
        writeln!(s, "{:<5} {:<50} {:.6}", e.rank, name, e.score).unwrap();
    }
    writeln!(s, "\nservices").unwrap();
    for e in services {
        writeln!(s, "{:<5} {:<50} {:.6}", e.rank, e.service, e.score).unwrap();
    }
    s
}
