//! Diagnoses one simulated incident and prints each graph stage.
//!
//! ```text
//! cargo run --example diagnose_case -- [seed] [dot_dir]
//! ```

use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, BeliefConfig};
use metarca::online::{diagnose, DiagnoseParams};
use metarca::ontology::builtin;
use metarca::sim::{generate_case, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let dot_dir = args.next();

    let o = builtin();
    let cfg = SimConfig {
        seed,
        n_services: 10,
        ..SimConfig::default()
    };
    let (mcg, _) = bootstrap_skeleton(&o, &builtin_bootstrap_edges(), BeliefConfig::default(), cfg.sampling.start)?;
    let case = generate_case(&cfg, &o, &mcg)?;
    let gt = case.dataset.ground_truth.clone().expect("simulated cases carry ground truth");

    let d = diagnose(&mcg, &o, &case.dataset, &DiagnoseParams::default());
    println!("fault {:?} at {}.{}", case.fault_type, gt.service, gt.metric);
    println!("FRZ: {} instances", d.frz.len());
    for (name, g) in [("instantiated", &d.instantiated), ("fused", &d.fused), ("pruned", &d.pruned)] {
        if let Some(g) = g {
            println!("  {name:<12} {:>4} nodes {:>4} edges", g.nodes.len(), g.edges.len());
        }
    }
    if let Some(pruned) = &d.pruned {
        let mut edges: Vec<_> = pruned.edges.iter().collect();
        edges.sort_by(|a, b| b.w_licg.total_cmp(&a.w_licg));
        println!("\nstrongest surviving edges:");
        for e in edges.iter().take(8) {
            println!(
                "  {:<30} -> {:<30} w_mcg {:.2} s_anomaly {:.2} s_corr {:.2} (lag {}) w {:.3}",
                e.cause.to_string(),
                e.effect.to_string(),
                e.w_mcg,
                e.s_anomaly,
                e.s_corr,
                e.best_lag,
                e.w_licg
            );
        }
    }
    println!("\ntop candidates (converged: {}, {} iterations):", d.ranked.converged, d.ranked.iterations);
    for e in d.ranked.entries.iter().take(5) {
        println!("  {} {}.{} {:.4}", e.rank, e.instance, e.metric, e.score);
    }
    println!("ground truth ranks {:?} by metric", d.ranked.metric_rank(&gt.service, &gt.metric));

    if let Some(dir) = dot_dir {
        std::fs::create_dir_all(&dir)?;
        for (name, g) in [("instantiated", &d.instantiated), ("fused", &d.fused), ("pruned", &d.pruned)] {
            if let Some(g) = g {
                std::fs::write(format!("{dir}/{name}.dot"), g.to_dot(Some(0.1)))?;
            }
        }
        println!("DOT files written to {dir}");
    }
    Ok(())
}
