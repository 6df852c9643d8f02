//! Follows one causal edge's belief as evidence arrives and ages.
//!
//! Case evidence moves the belief ten times as far as a statistical link, and
//! every contribution fades with a half-life of about 139 days. Replaying
//! the same records one by one gives the same log-odds as a batch recount.

use metarca::evidence::{EvidenceKind, EvidenceRecord};
use metarca::mcg::{bootstrap_skeleton, BeliefConfig, BootstrapEdge, EdgeKey, MetaNode, SECONDS_PER_DAY};
use metarca::ontology::builtin;

const DAY: i64 = SECONDS_PER_DAY as i64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = builtin();
    let cause = MetaNode::new("MySQL", "db_time");
    let effect = MetaNode::new("Microservice", "api_latency");
    let pattern = "Microservice--invoke-->MySQL";
    let t0 = 1_700_000_000;
    let edges = [BootstrapEdge {
        cause: cause.clone(),
        effect: effect.clone(),
        pattern: pattern.into(),
    }];
    let (skeleton, _) = bootstrap_skeleton(&o, &edges, BeliefConfig::default(), t0)?;
    let key = EdgeKey::new(cause.clone(), effect.clone(), pattern);

    let record = |kind, day: i64| EvidenceRecord {
        kind,
        cause: cause.clone(),
        effect: effect.clone(),
        timestamp: t0 + day * DAY,
        source_id: format!("{kind:?}-day{day}").to_lowercase(),
        pattern: Some(pattern.into()),
    };
    let records = vec![
        record(EvidenceKind::Statistical, 1),
        record(EvidenceKind::Statistical, 2),
        record(EvidenceKind::Case, 10),
        record(EvidenceKind::Statistical, 30),
        record(EvidenceKind::Case, 90),
    ];

    let mut streamed = skeleton.clone();
    println!("{:>5}  {:<12} {:>9} {:>7}", "day", "evidence", "log-odds", "CBS");
    for r in &records {
        streamed.streaming_update(&o, r, r.timestamp)?;
        let e = streamed.edge(&key).expect("edge exists");
        println!(
            "{:>5}  {:<12} {:>9.4} {:>7.4}",
            (r.timestamp - t0) / DAY,
            format!("{:?}", r.kind),
            e.log_odds,
            e.cbs()
        );
    }

    println!("\nwithout new evidence the belief drifts back toward the prior:");
    for day in [90, 180, 365, 730] {
        let t = t0 + day * DAY;
        let l = streamed.log_odds_at(t)[&key];
        let (batch, _) = skeleton.batch_update(&o, &records, t)?;
        let lb = batch.edge(&key).expect("edge exists").log_odds;
        println!("  day {day:>3}: stream {l:.6}  batch {lb:.6}  CBS {:.4}", metarca::mcg::cbs(l));
    }
    Ok(())
}
