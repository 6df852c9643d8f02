//! Trains a meta causal graph on simulated incidents, then benchmarks it on a
//! disjoint corpus with the default pipeline, without online fusion, and with
//! PageRank in place of CCB.
//!
//! ```text
//! cargo run --release --example synthetic_benchmark -- [n_services] [n_train] [n_test]
//! ```

use metarca::eval::benchmark_datasets;
use metarca::evidence::{builtin_aliases, corpus_evidence, LaggedCorrelationDiscovery};
use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, BeliefConfig};
use metarca::online::{DiagnoseParams, Ranker};
use metarca::ontology::builtin;
use metarca::sim::{generate_cases, mock_report, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let n_services = args.first().copied().unwrap_or(20);
    let n_train = args.get(1).copied().unwrap_or(20);
    let n_test = args.get(2).copied().unwrap_or(50);

    let ontology = builtin();
    let template = SimConfig {
        n_services,
        ..SimConfig::default()
    };
    let (skeleton, _) = bootstrap_skeleton(
        &ontology,
        &builtin_bootstrap_edges(),
        BeliefConfig::default(),
        template.sampling.start,
    )?;

    let train = generate_cases(&template, n_train, 1, &ontology, &skeleton)?;
    let datasets: Vec<_> = train.iter().map(|c| c.dataset.clone()).collect();
    let reports: Vec<_> = train.iter().filter_map(mock_report).collect();
    let evidence = corpus_evidence(
        &datasets,
        &reports,
        &ontology,
        &builtin_aliases(),
        &LaggedCorrelationDiscovery::default(),
    );
    let t_ref = datasets.iter().map(|d| d.t_rca).max().unwrap_or(template.sampling.start);
    let (mcg, update) = skeleton.batch_update(&ontology, &evidence.records, t_ref)?;
    println!(
        "trained on {n_train} cases: {} case and {} statistical records, {} rejected",
        update.applied_case,
        update.applied_statistical,
        update.rejected.len() + evidence.rejected.len()
    );
    for e in mcg.edges() {
        println!("  {:<70} cbs {:.3}", e.key().to_string(), e.cbs());
    }

    let test = generate_cases(&template, n_test, 2, &ontology, &skeleton)?;
    let test: Vec<_> = test.into_iter().map(|c| c.dataset).collect();
    let variants = [
        ("ccb", DiagnoseParams::default()),
        (
            "no fusion",
            DiagnoseParams {
                fusion: false,
                theta_p: 0.0,
                ..DiagnoseParams::default()
            },
        ),
        (
            "pagerank",
            DiagnoseParams {
                ranker: Ranker::PageRank,
                ..DiagnoseParams::default()
            },
        ),
    ];
    for (name, params) in variants {
        let (report, _) = benchmark_datasets(&test, &mcg, &ontology, &params, 4)?;
        println!("\n== {name} ({n_services} services, {n_test} cases)");
        print!("{}", report.render_table());
    }
    Ok(())
}
