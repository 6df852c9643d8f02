//! Root cause analysis for microservice incidents.
//!
//! A metadata ontology names component types, their metrics and the ways
//! components connect. A meta causal graph over `(type, metric)` pairs holds
//! a belief per causal edge in log-odds form, raised by incident reports and
//! by statistical links mined from telemetry. At diagnosis time the graph is
//! projected onto the anomalous instances of one incident, reweighted by the
//! live signals, pruned and ranked.

pub mod cli;
pub mod config;
pub mod eval;
pub mod evidence;
pub mod mcg;
pub mod online;
pub mod ontology;
pub mod sim;
pub mod stats;
pub mod telemetry;
