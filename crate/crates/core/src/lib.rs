//! Core library for an IoT PaaS over hybrid cloud/fog infrastructure.
//!
//! Applications are structured component graphs (VNF forwarding graphs with
//! sequence, parallel, selection and loop sub-structures). The library models
//! the full provisioning cycle over simulated cloud/fog domains:
//!
//! - [`appgraph`] — application descriptors, graph flattening, execution-time
//!   estimation
//! - [`infra`] — infrastructure repository with publication/discovery and
//!   subscription-based change notification
//! - [`placement`] — deployment planning (greedy heuristic and an exhaustive
//!   solver)
//! - [`chaining`] — chain links between deployed component instances
//! - [`migration`] — target selection and stop/copy/restart migration
//! - [`nodesim`] — simulated domains, deterministic clock, latency model,
//!   monitoring
//! - [`orchestrator`] — deployment and migration orchestration plans as
//!   explicit state machines
//! - [`scenarios`] — ready-made application and infrastructure fixtures

pub mod appgraph;
pub mod chaining;
pub mod infra;
pub mod migration;
pub mod nodesim;
pub mod orchestrator;
pub mod placement;
pub mod scenarios;
pub mod types;

pub use types::{Millis, Tier};
