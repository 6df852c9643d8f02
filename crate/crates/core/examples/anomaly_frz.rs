//! Scores every metric of a simulated incident against its pre-fault
//! baseline and lists the fault relevance zone.

use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, BeliefConfig};
use metarca::ontology::builtin;
use metarca::sim::{generate_case, SimConfig};
use metarca::telemetry::{compute_frz, detect_anomalies, DEFAULT_Z_THRESHOLD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = builtin();
    let cfg = SimConfig {
        seed: 7,
        n_services: 12,
        ..SimConfig::default()
    };
    let (mcg, _) = bootstrap_skeleton(&o, &builtin_bootstrap_edges(), BeliefConfig::default(), cfg.sampling.start)?;
    let case = generate_case(&cfg, &o, &mcg)?;
    let gt = case.dataset.ground_truth.as_ref().expect("simulated cases carry ground truth");
    println!("{:?} injected at {}.{}", case.fault_type, gt.service, gt.metric);

    let report = detect_anomalies(&case.dataset, DEFAULT_Z_THRESHOLD);
    let mut scored: Vec<_> = report.scores.iter().collect();
    scored.sort_by(|a, b| b.1.max_abs_z.total_cmp(&a.1.max_abs_z));
    println!("\nlargest |z| over the fault window:");
    for (key, s) in scored.iter().take(10) {
        println!("  {:<32} {:>6.1}{}", key.to_string(), s.max_abs_z, if s.is_anomalous { "  anomalous" } else { "" });
    }
    let n_anomalous = report.anomalous().count();
    println!("\n{n_anomalous} of {} series exceed |z| > {}", report.scores.len(), report.threshold);

    let frz = compute_frz(&report);
    let total = case.dataset.topology.instances.len();
    println!("FRZ ({} of {total} instances): {}", frz.len(), frz.iter().cloned().collect::<Vec<_>>().join(" "));
    Ok(())
}
