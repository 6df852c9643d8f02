//! Turns one simulated incident into evidence: lagged-correlation discovery
//! over its telemetry, lifted to meta level along the topology, plus the case
//! record aligned from its (mock) incident report.

use metarca::evidence::{align_case_extract, builtin_aliases, statistical_evidence, LaggedCorrelationDiscovery};
use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, BeliefConfig};
use metarca::ontology::builtin;
use metarca::sim::{generate_case, mock_report, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = builtin();
    let cfg = SimConfig {
        seed: 3,
        n_services: 8,
        ..SimConfig::default()
    };
    let (mcg, _) = bootstrap_skeleton(&o, &builtin_bootstrap_edges(), BeliefConfig::default(), cfg.sampling.start)?;
    let case = generate_case(&cfg, &o, &mcg)?;
    println!("{} planted instance edges, fault {:?}", case.planted.len(), case.fault_type);

    let (aligned, found) = statistical_evidence(&case.dataset, &o, &LaggedCorrelationDiscovery::default())?;
    println!(
        "discovery: {} significant links, {} without a dependency edge, {} meta-level records",
        found.links.len(),
        aligned.dropped,
        aligned.records.len()
    );
    let planted: std::collections::BTreeSet<_> = case.planted.iter().map(|p| p.meta_edge.clone()).collect();
    let on_planted = aligned
        .records
        .iter()
        .filter(|r| {
            planted.iter().any(|k| k.cause == r.cause && k.effect == r.effect && Some(&k.pattern) == r.pattern.as_ref())
        })
        .count();
    println!("  {on_planted} of them lie on meta-edges the simulator actually used");
    for r in aligned.records.iter().take(5) {
        println!("  {}", r.describe());
    }

    let extract = mock_report(&case).expect("fault has a downstream effect");
    println!(
        "\nreport {}: \"{} {}\" caused \"{} {}\"",
        extract.report_id,
        extract.raw_cause.entity_name,
        extract.raw_cause.metric_name,
        extract.raw_effect.entity_name,
        extract.raw_effect.metric_name
    );
    match align_case_extract(&extract, &o, &builtin_aliases()) {
        Ok(r) => println!("aligned: {}", r.describe()),
        Err(reason) => println!("not aligned: {reason}"),
    }
    Ok(())
}
