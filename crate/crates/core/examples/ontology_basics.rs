//! Inspects the bundled ontology and shows how a broken one is reported.

use metarca::ontology::{builtin, ConnType, MetadataOntology};

fn main() {
    let o = builtin();
    println!("ontology {}", &o.content_hash()[..12]);
    for t in o.component_types() {
        let metrics: Vec<String> = t.metrics.iter().map(|m| format!("{} ({:?})", m.name, m.kind)).collect();
        println!("  {:<13} {}", t.name, metrics.join(", "));
    }
    println!("patterns:");
    for p in o.patterns() {
        println!("  {}", p.id());
    }

    // Which pattern joins a service calling a database, and which joins two services on one host?
    let invoke = o.match_pattern("Microservice", "MySQL", ConnType::Invoke);
    println!("\nMicroservice invoke MySQL -> {:?}", invoke.map(|p| p.id()));
    let sideways = o.match_pattern("Microservice", "Microservice", ConnType::On);
    println!("Microservice on Microservice -> {:?}", sideways.map(|p| p.id()));
    println!("MySQL internal pattern -> {:?}", o.internal_pattern("MySQL").map(|p| p.id()));

    let dangling = r#"{
        "component_types": [{"name": "Microservice", "metrics": [{"name": "api_latency", "kind": "sli"}]}],
        "patterns": [{"src": "Microservice", "dst": "Kafka", "conn_type": "invoke"}]
    }"#;
    match MetadataOntology::from_json(dangling) {
        Ok(_) => println!("\nunexpectedly valid"),
        Err(e) => println!("\nrejected: {e}"),
    }
}
