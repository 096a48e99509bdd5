//! Chain links: the materialized edges of the forwarding graph over a
//! deployment assignment.
//!
//! Chains are directed and unicast; a parallel fork simply yields several
//! outbound links from the same instance. Route latencies are cached at
//! chain time; `verify_chains` detects drift against the current
//! infrastructure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appgraph::{EdgeKind, ForwardingGraph};
use crate::infra::InfrastructureGraph;
use crate::nodesim::SimWorld;
use crate::placement::Assignment;
use crate::types::Millis;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("component {0:?} has no assigned node")]
    Unassigned(String),
    #[error("no route between {0:?} and {1:?}")]
    NoRoute(String, String),
    #[error("instance of component {0:?} is not running")]
    InstanceNotRunning(String),
    #[error("component {0:?} is not part of the chaining plan")]
    UnknownComponent(String),
}

/// One endpoint of a chain link: a component pinned to its current node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainEndpoint {
    pub component: String,
    pub node: String,
}

/// A materialized forwarding-graph edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub from: ChainEndpoint,
    pub to: ChainEndpoint,
    pub kind: EdgeKind,
    /// Infrastructure link latency at chain time; 0 when co-located.
    pub route_latency: Millis,
}

/// All chain links of one application, versioned per update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainingPlan {
    pub app: String,
    /// Components covered by the plan; kept so single-component
    /// applications (which have no links) still support rechaining.
    pub components: Vec<String>,
    pub links: Vec<ChainLink>,
    pub version: u64,
}

fn resolve_latency(
    infra: &InfrastructureGraph,
    from_node: &str,
    to_node: &str,
) -> Result<Millis, ChainError> {
    if from_node == to_node {
        return Ok(0);
    }
    infra
        .link_latency(from_node, to_node)
        .ok_or_else(|| ChainError::NoRoute(from_node.to_string(), to_node.to_string()))
}

/// Build a chaining plan from the forwarding graph and a feasible
/// assignment: exactly one link per forwarding edge, version 1.
pub fn derive_chaining_plan(
    app: &str,
    fg: &ForwardingGraph,
    assignment: &Assignment,
    infra: &InfrastructureGraph,
) -> Result<ChainingPlan, ChainError> {
    let mut links = Vec::with_capacity(fg.edges.len());
    for edge in &fg.edges {
        let from_node = assignment
            .get(&edge.from)
            .ok_or_else(|| ChainError::Unassigned(edge.from.clone()))?;
        let to_node = assignment
            .get(&edge.to)
            .ok_or_else(|| ChainError::Unassigned(edge.to.clone()))?;
        links.push(ChainLink {
            from: ChainEndpoint {
                component: edge.from.clone(),
                node: from_node.clone(),
            },
            to: ChainEndpoint {
                component: edge.to.clone(),
                node: to_node.clone(),
            },
            kind: edge.kind,
            route_latency: resolve_latency(infra, from_node, to_node)?,
        });
    }
    Ok(ChainingPlan {
        app: app.to_string(),
        components: assignment.keys().cloned().collect(),
        links,
        version: 1,
    })
}

/// Install the plan's links into the simulated nodes' forwarding tables.
/// Requires every referenced instance to be running; idempotent.
pub fn apply_chaining_plan(cp: &ChainingPlan, world: &mut SimWorld) -> Result<(), ChainError> {
    for component in &cp.components {
        if world.running_instance_of(&cp.app, component).is_none() {
            return Err(ChainError::InstanceNotRunning(component.clone()));
        }
    }
    world.replace_forwarding(&cp.app, &cp.links);
    Ok(())
}

/// Update the plan after one component moved: only links incident to the
/// migrated component change, latencies are recomputed, and the version
/// increments by one.
pub fn rechain_after_migration(
    cp: &ChainingPlan,
    component: &str,
    new_node: &str,
    infra: &InfrastructureGraph,
) -> Result<ChainingPlan, ChainError> {
    if !cp.components.iter().any(|c| c == component) {
        return Err(ChainError::UnknownComponent(component.to_string()));
    }
    let mut links = cp.links.clone();
    for link in &mut links {
        let mut touched = false;
        if link.from.component == component {
            link.from.node = new_node.to_string();
            touched = true;
        }
        if link.to.component == component {
            link.to.node = new_node.to_string();
            touched = true;
        }
        if touched {
            link.route_latency = resolve_latency(infra, &link.from.node, &link.to.node)?;
        }
    }
    Ok(ChainingPlan {
        app: cp.app.clone(),
        components: cp.components.clone(),
        links,
        version: cp.version + 1,
    })
}

/// Check a chaining plan against the forwarding graph, the current
/// assignment and the current infrastructure. Empty result means ok.
pub fn verify_chains(
    fg: &ForwardingGraph,
    assignment: &Assignment,
    cp: &ChainingPlan,
    infra: &InfrastructureGraph,
) -> Vec<String> {
    let mut violations = Vec::new();

    // Bijection between forwarding edges and links.
    let mut edge_multiset: BTreeMap<(String, String, EdgeKind), i64> = BTreeMap::new();
    for e in &fg.edges {
        *edge_multiset
            .entry((e.from.clone(), e.to.clone(), e.kind))
            .or_default() += 1;
    }
    for l in &cp.links {
        *edge_multiset
            .entry((l.from.component.clone(), l.to.component.clone(), l.kind))
            .or_default() -= 1;
    }
    for ((from, to, kind), count) in edge_multiset {
        if count > 0 {
            violations.push(format!(
                "non-bijective: edge {from}->{to} ({kind:?}) has no link"
            ));
        } else if count < 0 {
            violations.push(format!(
                "non-bijective: {} extra link(s) {from}->{to} ({kind:?})",
                -count
            ));
        }
    }

    for l in &cp.links {
        for end in [&l.from, &l.to] {
            match assignment.get(&end.component) {
                Some(node) if *node == end.node => {}
                Some(node) => violations.push(format!(
                    "endpoint mismatch: {} chained on {} but assigned to {}",
                    end.component, end.node, node
                )),
                None => violations.push(format!(
                    "endpoint mismatch: {} has no assignment",
                    end.component
                )),
            }
        }
        match resolve_latency(infra, &l.from.node, &l.to.node) {
            Ok(current) if current == l.route_latency => {}
            Ok(current) => violations.push(format!(
                "stale latency on {}->{}: cached {} current {}",
                l.from.component, l.to.component, l.route_latency, current
            )),
            Err(_) => violations.push(format!(
                "no route for link {}->{}",
                l.from.component, l.to.component
            )),
        }
    }

    violations
}
