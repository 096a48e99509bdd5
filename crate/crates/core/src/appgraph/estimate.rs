//! Execution-time estimation over a structure tree.
//!
//! The estimate is recursive over the structure: a leaf costs its workload
//! divided by the hosting node's processing rate (ceiling division, integer
//! milliseconds); sequences add child times plus the link latency crossed at
//! each boundary; parallel segments take the slowest branch including that
//! branch's fork and join hops; selections take the worst branch, or the
//! weighted mean when branch weights are declared; a loop multiplies its
//! body time plus the loopback hop by the iteration count.

use std::collections::BTreeMap;

use thiserror::Error;

use super::flatten::{boundary, Boundary, BoundaryKind};
use super::{ApplicationDescriptor, StructureNode};
use crate::infra::InfrastructureGraph;
use crate::types::Millis;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EstimateError {
    #[error("component {0:?} has no assigned node")]
    Unassigned(String),
    #[error("node {0:?} is not in the infrastructure")]
    MissingNode(String),
    #[error("no link between nodes {0:?} and {1:?}")]
    MissingLink(String, String),
    #[error("node {0:?} has a zero processing rate")]
    ZeroRate(String),
}

/// Per-component processing cost in ms.
pub type ProcessingFn<'a> = dyn Fn(&str) -> Result<Millis, EstimateError> + 'a;
/// Latency in ms for the hop between two components' hosts.
pub type LatencyFn<'a> = dyn Fn(&str, &str) -> Result<Millis, EstimateError> + 'a;

/// Core recursion shared by plan-time estimation and simulated end-to-end
/// measurement; the two differ only in where processing costs and hop
/// latencies come from.
pub fn structure_time(
    structure: &StructureNode,
    processing: &ProcessingFn<'_>,
    latency: &LatencyFn<'_>,
) -> Result<Millis, EstimateError> {
    walk(structure, None, None, processing, latency)
}

fn walk(
    node: &StructureNode,
    pred: Option<&[String]>,
    succ: Option<&[String]>,
    processing: &ProcessingFn<'_>,
    latency: &LatencyFn<'_>,
) -> Result<Millis, EstimateError> {
    match node {
        StructureNode::Leaf { component } => processing(component),
        StructureNode::Sequence { children } => {
            let bounds: Vec<Boundary> = children.iter().map(boundary).collect();
            let mut total: Millis = 0;
            for (i, child) in children.iter().enumerate() {
                let child_pred = if i == 0 {
                    pred.map(|p| p.to_vec())
                } else {
                    Some(bounds[i - 1].exits.clone())
                };
                // A parallel/selection successor absorbs the boundary hop
                // itself; hide it from the predecessor so the hop is
                // counted exactly once.
                let child_succ = if i + 1 == children.len() {
                    succ.map(|s| s.to_vec())
                } else if bounds[i + 1].entry_kind == BoundaryKind::Plain {
                    Some(bounds[i + 1].entries.clone())
                } else {
                    None
                };
                total = total.saturating_add(walk(
                    child,
                    child_pred.as_deref(),
                    child_succ.as_deref(),
                    processing,
                    latency,
                )?);
            }
            for i in 0..children.len().saturating_sub(1) {
                if bounds[i].exit_kind == BoundaryKind::Plain
                    && bounds[i + 1].entry_kind == BoundaryKind::Plain
                {
                    total = total.saturating_add(hop(
                        &bounds[i].exits,
                        &bounds[i + 1].entries,
                        latency,
                    )?);
                }
            }
            Ok(total)
        }
        StructureNode::Parallel { branches } => {
            let mut worst: Millis = 0;
            for b in branches {
                worst = worst.max(branch_time(b, pred, succ, processing, latency)?);
            }
            Ok(worst)
        }
        StructureNode::Selection {
            branches,
            branch_weights,
        } => {
            let mut times = Vec::with_capacity(branches.len());
            for b in branches {
                times.push(branch_time(b, pred, succ, processing, latency)?);
            }
            match branch_weights {
                // Worst case by default: safe for QoS reasoning when no
                // branch probabilities are known.
                None => Ok(times.into_iter().max().unwrap_or(0)),
                Some(weights) => {
                    let expected: f64 = times.iter().zip(weights).map(|(t, w)| *t as f64 * w).sum();
                    Ok(expected.round() as Millis)
                }
            }
        }
        StructureNode::Loop { body, iterations } => {
            let b = boundary(body);
            let once = walk(body, None, None, processing, latency)?;
            let back = latency(&b.last_leaf, &b.first_leaf)?;
            Ok(iterations.saturating_mul(once.saturating_add(back)))
        }
    }
}

/// Time of one parallel/selection branch including its fork hop from the
/// predecessor and join hop to the successor. Branches whose own ends are
/// parallel/selection absorb those hops one level down.
fn branch_time(
    branch: &StructureNode,
    pred: Option<&[String]>,
    succ: Option<&[String]>,
    processing: &ProcessingFn<'_>,
    latency: &LatencyFn<'_>,
) -> Result<Millis, EstimateError> {
    let b = boundary(branch);
    let mut t = walk(branch, pred, succ, processing, latency)?;
    if b.entry_kind == BoundaryKind::Plain {
        if let Some(p) = pred {
            t = t.saturating_add(hop(p, &b.entries, latency)?);
        }
    }
    if b.exit_kind == BoundaryKind::Plain {
        if let Some(s) = succ {
            t = t.saturating_add(hop(&b.exits, s, latency)?);
        }
    }
    Ok(t)
}

/// Worst hop latency across a boundary (single pair in the common case).
fn hop(from: &[String], to: &[String], latency: &LatencyFn<'_>) -> Result<Millis, EstimateError> {
    let mut worst = 0;
    for f in from {
        for t in to {
            worst = worst.max(latency(f, t)?);
        }
    }
    Ok(worst)
}

/// Estimate the execution time of `app` under a total assignment.
pub fn estimate_execution_time(
    app: &ApplicationDescriptor,
    assignment: &BTreeMap<String, String>,
    infra: &InfrastructureGraph,
) -> Result<Millis, EstimateError> {
    let processing = |component: &str| -> Result<Millis, EstimateError> {
        let node_id = assignment
            .get(component)
            .ok_or_else(|| EstimateError::Unassigned(component.to_string()))?;
        leaf_processing(app, component, node_id, infra)
    };
    let latency = |from: &str, to: &str| -> Result<Millis, EstimateError> {
        let a = assignment
            .get(from)
            .ok_or_else(|| EstimateError::Unassigned(from.to_string()))?;
        let b = assignment
            .get(to)
            .ok_or_else(|| EstimateError::Unassigned(to.to_string()))?;
        node_latency(a, b, infra)
    };
    structure_time(&app.structure, &processing, &latency)
}

/// Like [`estimate_execution_time`] but tolerant of a partial assignment:
/// unassigned leaves cost nothing and hops touching them are free. Used by
/// the greedy planner to score marginal placements.
pub fn estimate_partial_time(
    app: &ApplicationDescriptor,
    assignment: &BTreeMap<String, String>,
    infra: &InfrastructureGraph,
) -> Result<Millis, EstimateError> {
    let processing = |component: &str| -> Result<Millis, EstimateError> {
        match assignment.get(component) {
            None => Ok(0),
            Some(node_id) => leaf_processing(app, component, node_id, infra),
        }
    };
    let latency = |from: &str, to: &str| -> Result<Millis, EstimateError> {
        match (assignment.get(from), assignment.get(to)) {
            (Some(a), Some(b)) => node_latency(a, b, infra),
            _ => Ok(0),
        }
    };
    structure_time(&app.structure, &processing, &latency)
}

fn leaf_processing(
    app: &ApplicationDescriptor,
    component: &str,
    node_id: &str,
    infra: &InfrastructureGraph,
) -> Result<Millis, EstimateError> {
    let node = infra
        .node(node_id)
        .ok_or_else(|| EstimateError::MissingNode(node_id.to_string()))?;
    if node.processing_rate == 0 {
        return Err(EstimateError::ZeroRate(node_id.to_string()));
    }
    let workload = app.component(component).map(|c| c.workload).unwrap_or(0);
    Ok(workload.div_ceil(node.processing_rate))
}

fn node_latency(a: &str, b: &str, infra: &InfrastructureGraph) -> Result<Millis, EstimateError> {
    if a == b {
        return Ok(0);
    }
    if infra.node(a).is_none() {
        return Err(EstimateError::MissingNode(a.to_string()));
    }
    if infra.node(b).is_none() {
        return Err(EstimateError::MissingNode(b.to_string()));
    }
    infra
        .link_latency(a, b)
        .ok_or_else(|| EstimateError::MissingLink(a.to_string(), b.to_string()))
}
