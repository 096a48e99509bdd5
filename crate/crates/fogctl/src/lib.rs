//! HTTP surface, CLI plumbing and the benchmark harness for the fog PaaS
//! orchestrator.

pub mod bench;
pub mod client;
pub mod report;
pub mod server;
