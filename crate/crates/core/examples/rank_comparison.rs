//! Ranks the same pruned graphs with CCB and with PageRank on the reversed
//! graph, showing where each places the true root cause.

use metarca::mcg::{bootstrap_skeleton, builtin_bootstrap_edges, BeliefConfig};
use metarca::online::{ccb_rank, diagnose, pagerank_rank, DiagnoseParams, DEFAULT_DAMPING};
use metarca::ontology::builtin;
use metarca::sim::{generate_cases, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = builtin();
    let template = SimConfig {
        n_services: 15,
        ..SimConfig::default()
    };
    let (mcg, _) = bootstrap_skeleton(&o, &builtin_bootstrap_edges(), BeliefConfig::default(), template.sampling.start)?;
    let cases = generate_cases(&template, 10, 5, &o, &mcg)?;
    let params = DiagnoseParams::default();

    println!("{:<10} {:<26} {:>10} {:>10}", "case", "root cause", "ccb rank", "pr rank");
    for (i, case) in cases.iter().enumerate() {
        let gt = case.dataset.ground_truth.as_ref().expect("ground truth");
        let d = diagnose(&mcg, &o, &case.dataset, &params);
        let Some(pruned) = &d.pruned else {
            println!("case-{i:03}    no incident detected");
            continue;
        };
        let ccb = ccb_rank(pruned, params.epsilon, params.max_iters);
        let pr = pagerank_rank(pruned, DEFAULT_DAMPING);
        let show = |r: Option<usize>| r.map_or("-".to_string(), |r| r.to_string());
        println!(
            "case-{i:03}   {:<26} {:>10} {:>10}",
            format!("{}.{}", gt.service, gt.metric),
            show(ccb.metric_rank(&gt.service, &gt.metric)),
            show(pr.metric_rank(&gt.service, &gt.metric))
        );
    }
    Ok(())
}
