//! Deployment planning: assign components to nodes minimizing a weighted
//! execution-time/cost objective.
//!
//! Two solvers share the objective: an exhaustive enumerator that is exact
//! on small instances (and serves as the oracle for the heuristic), and a
//! greedy heuristic that places components in flattening order, each on the
//! node with the least marginal objective increase.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appgraph::{
    estimate_execution_time, estimate_partial_time, ApplicationDescriptor, EstimateError,
};
use crate::infra::{InfrastructureGraph, NodeRecord};
use crate::types::{Millis, Resources};

/// Default cap on the number of enumerated candidates (nodes^components).
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// Component id -> node id.
pub type Assignment = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("assignment is not total; unassigned: {0:?}")]
    Partial(Vec<String>),
    #[error("no feasible assignment exists")]
    Infeasible,
    #[error("{candidates} candidates exceed the enumeration budget of {budget}")]
    BudgetExceeded { candidates: u128, budget: u64 },
    #[error("alpha must be in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// A placement instance: the application, the infrastructure to place onto,
/// and the time/cost trade-off weight.
#[derive(Debug, Clone, Copy)]
pub struct PlacementProblem<'a> {
    pub app: &'a ApplicationDescriptor,
    pub infra: &'a InfrastructureGraph,
    /// Weight of execution time in the scalar objective; `1 - alpha`
    /// weights cost.
    pub alpha: f64,
}

impl<'a> PlacementProblem<'a> {
    pub fn new(
        app: &'a ApplicationDescriptor,
        infra: &'a InfrastructureGraph,
        alpha: f64,
    ) -> Result<Self, PlacementError> {
        if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
            return Err(PlacementError::InvalidAlpha(alpha));
        }
        Ok(Self { app, infra, alpha })
    }
}

/// Objective of a total assignment. `time_ms` is `None` only when the
/// assignment requires a hop with no link and `alpha` is zero (the time
/// term then has zero weight).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub time_ms: Option<Millis>,
    pub cost: u64,
    pub scalar: f64,
}

/// A total, feasible assignment with its objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub assignment: Assignment,
    pub objective: Objective,
}

/// Feasibility verdict with the concrete violations found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Total resource cost of an assignment: component demands priced at the
/// assigned node's rates.
fn assignment_cost(
    app: &ApplicationDescriptor,
    infra: &InfrastructureGraph,
    assignment: &Assignment,
) -> Result<u64, PlacementError> {
    let mut cost: u64 = 0;
    for c in &app.components {
        let node_id = assignment
            .get(&c.id)
            .ok_or_else(|| PlacementError::Partial(vec![c.id.clone()]))?;
        let node = infra
            .node(node_id)
            .ok_or_else(|| EstimateError::MissingNode(node_id.clone()))?;
        cost = cost
            .saturating_add(c.cpu_req.saturating_mul(node.cpu_price))
            .saturating_add(c.memory_req.saturating_mul(node.memory_price))
            .saturating_add(c.disk_req.saturating_mul(node.disk_price));
    }
    Ok(cost)
}

fn scalarize(alpha: f64, time_ms: Option<Millis>, cost: u64) -> f64 {
    match time_ms {
        Some(t) => alpha * t as f64 + (1.0 - alpha) * cost as f64,
        None => (1.0 - alpha) * cost as f64,
    }
}

/// Compute the objective of a total assignment.
pub fn evaluate_plan(
    p: &PlacementProblem<'_>,
    assignment: &Assignment,
) -> Result<Objective, PlacementError> {
    let missing: Vec<String> = p
        .app
        .components
        .iter()
        .filter(|c| !assignment.contains_key(&c.id))
        .map(|c| c.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(PlacementError::Partial(missing));
    }
    let cost = assignment_cost(p.app, p.infra, assignment)?;
    let time_ms = match estimate_execution_time(p.app, assignment, p.infra) {
        Ok(t) => Some(t),
        // A missing link makes the time infinite; with alpha = 0 the time
        // term has no weight, so the plan is still valued by cost alone.
        Err(EstimateError::MissingLink(..)) if p.alpha == 0.0 => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Objective {
        time_ms,
        cost,
        scalar: scalarize(p.alpha, time_ms, cost),
    })
}

/// Capacity and tier check over a total assignment.
pub fn is_feasible(p: &PlacementProblem<'_>, assignment: &Assignment) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut used: BTreeMap<&str, Resources> = BTreeMap::new();
    for c in &p.app.components {
        let node_id = match assignment.get(&c.id) {
            Some(n) => n,
            None => {
                violations.push(format!("component {} is unassigned", c.id));
                continue;
            }
        };
        let node = match p.infra.node(node_id) {
            Some(n) => n,
            None => {
                violations.push(format!("node {node_id} is not joined"));
                continue;
            }
        };
        if !c.allowed_tiers.contains(&node.tier) {
            violations.push(format!(
                "component {} is not allowed on {} node {}",
                c.id, node.tier, node.id
            ));
        }
        let entry = used.entry(node_id.as_str()).or_default();
        *entry = entry.checked_add(c.demands());
    }
    for (node_id, use_) in used {
        // Nodes missing from the snapshot were already reported above.
        if let Some(node) = p.infra.node(node_id) {
            let cap = node.capacity();
            if use_.cpu > cap.cpu {
                violations.push(format!("{node_id} cpu {} > {}", use_.cpu, cap.cpu));
            }
            if use_.memory > cap.memory {
                violations.push(format!("{node_id} memory {} > {}", use_.memory, cap.memory));
            }
            if use_.disk > cap.disk {
                violations.push(format!("{node_id} disk {} > {}", use_.disk, cap.disk));
            }
        }
    }
    FeasibilityReport {
        ok: violations.is_empty(),
        violations,
    }
}

fn sorted_nodes(infra: &InfrastructureGraph) -> Vec<&NodeRecord> {
    let mut nodes: Vec<&NodeRecord> = infra.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    nodes
}

/// Exhaustively enumerate all assignments and return the feasible one with
/// the least scalar objective. Ties go to the lexicographically smallest
/// assignment vector (components ordered by id, candidate nodes by id).
pub fn plan_exhaustive(p: &PlacementProblem<'_>) -> Result<DeploymentPlan, PlacementError> {
    plan_exhaustive_with_budget(p, DEFAULT_ENUMERATION_BUDGET)
}

pub fn plan_exhaustive_with_budget(
    p: &PlacementProblem<'_>,
    budget: u64,
) -> Result<DeploymentPlan, PlacementError> {
    let nodes = sorted_nodes(p.infra);
    let mut comp_ids: Vec<&str> = p.app.components.iter().map(|c| c.id.as_str()).collect();
    comp_ids.sort_unstable();
    if nodes.is_empty() || comp_ids.is_empty() {
        return Err(PlacementError::Infeasible);
    }
    let candidates = (nodes.len() as u128)
        .checked_pow(comp_ids.len() as u32)
        .unwrap_or(u128::MAX);
    if candidates > budget as u128 {
        return Err(PlacementError::BudgetExceeded { candidates, budget });
    }

    let mut best: Option<DeploymentPlan> = None;
    // Odometer over node indices, most significant digit first, so
    // assignments are visited in lexicographic order.
    let mut digits = vec![0usize; comp_ids.len()];
    loop {
        let assignment: Assignment = comp_ids
            .iter()
            .zip(&digits)
            .map(|(c, d)| (c.to_string(), nodes[*d].id.clone()))
            .collect();
        if is_feasible(p, &assignment).ok {
            if let Ok(objective) = evaluate_plan(p, &assignment) {
                let better = match &best {
                    None => true,
                    Some(b) => objective.scalar < b.objective.scalar,
                };
                if better {
                    best = Some(DeploymentPlan {
                        assignment,
                        objective,
                    });
                }
            }
        }
        // Advance the odometer; done when it wraps.
        let mut i = digits.len();
        loop {
            if i == 0 {
                return best.ok_or(PlacementError::Infeasible);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < nodes.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Greedy heuristic: place components in flattening order, each on the
/// feasible node that least increases the partial objective, then polish
/// with single-move local improvement until a fixpoint. A dead end during
/// construction (no node fits a component) is reported as infeasible;
/// callers may fall back to the exhaustive solver within budget.
pub fn plan_greedy(p: &PlacementProblem<'_>) -> Result<DeploymentPlan, PlacementError> {
    let nodes = sorted_nodes(p.infra);
    if nodes.is_empty() || p.app.components.is_empty() {
        return Err(PlacementError::Infeasible);
    }
    let order: Vec<String> = p
        .app
        .structure
        .leaves()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut assignment = Assignment::new();
    let mut used: BTreeMap<String, Resources> = BTreeMap::new();

    for comp_id in &order {
        let comp = p
            .app
            .component(comp_id)
            .ok_or_else(|| PlacementError::Partial(vec![comp_id.clone()]))?;
        let mut chosen: Option<(&NodeRecord, f64)> = None;
        for node in &nodes {
            if !comp.allowed_tiers.contains(&node.tier) {
                continue;
            }
            let would_use = used
                .get(node.id.as_str())
                .copied()
                .unwrap_or_default()
                .checked_add(comp.demands());
            if !would_use.fits_within(node.capacity()) {
                continue;
            }
            let mut trial = assignment.clone();
            trial.insert(comp_id.clone(), node.id.clone());
            let time = if p.alpha > 0.0 {
                match estimate_partial_time(p.app, &trial, p.infra) {
                    Ok(t) => Some(t),
                    // Unreachable hop: infinitely bad under alpha > 0.
                    Err(EstimateError::MissingLink(..)) => continue,
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            };
            let cost = partial_cost(p.app, p.infra, &trial)?;
            let score = scalarize(p.alpha, time, cost);
            // Strict improvement keeps the first (smallest id) node on ties.
            if chosen.is_none_or(|(_, best)| score < best) {
                chosen = Some((node, score));
            }
        }
        match chosen {
            Some((node, _)) => {
                let entry = used.entry(node.id.clone()).or_default();
                *entry = entry.checked_add(comp.demands());
                assignment.insert(comp_id.clone(), node.id.clone());
            }
            None => return Err(PlacementError::Infeasible),
        }
    }

    let mut objective = evaluate_plan(p, &assignment)?;
    // Polish: move one component at a time to a strictly better node. The
    // construction phase is myopic about components it has not seen yet;
    // a bounded improvement sweep repairs most of that without giving up
    // determinism (fixed scan order, strict improvement only).
    let max_sweeps = order.len().saturating_mul(nodes.len()).max(1);
    for _ in 0..max_sweeps {
        let mut improved = false;
        for comp_id in &order {
            let comp = p.app.component(comp_id).expect("validated");
            let current_node = assignment[comp_id].clone();
            let mut best_move: Option<(String, Objective)> = None;
            for node in &nodes {
                if node.id == current_node || !comp.allowed_tiers.contains(&node.tier) {
                    continue;
                }
                let mut trial = assignment.clone();
                trial.insert(comp_id.clone(), node.id.clone());
                if !is_feasible(p, &trial).ok {
                    continue;
                }
                let trial_obj = match evaluate_plan(p, &trial) {
                    Ok(obj) => obj,
                    Err(_) => continue,
                };
                let beats_best = best_move
                    .as_ref()
                    .is_none_or(|(_, b)| trial_obj.scalar < b.scalar);
                if trial_obj.scalar < objective.scalar && beats_best {
                    best_move = Some((node.id.clone(), trial_obj));
                }
            }
            if let Some((node_id, obj)) = best_move {
                assignment.insert(comp_id.clone(), node_id);
                objective = obj;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    debug_assert!(is_feasible(p, &assignment).ok);
    Ok(DeploymentPlan {
        assignment,
        objective,
    })
}

fn partial_cost(
    app: &ApplicationDescriptor,
    infra: &InfrastructureGraph,
    assignment: &Assignment,
) -> Result<u64, PlacementError> {
    let mut cost: u64 = 0;
    for (comp_id, node_id) in assignment {
        let comp = match app.component(comp_id) {
            Some(c) => c,
            None => continue,
        };
        let node = infra
            .node(node_id)
            .ok_or_else(|| EstimateError::MissingNode(node_id.clone()))?;
        cost = cost
            .saturating_add(comp.cpu_req.saturating_mul(node.cpu_price))
            .saturating_add(comp.memory_req.saturating_mul(node.memory_price))
            .saturating_add(comp.disk_req.saturating_mul(node.disk_price));
    }
    Ok(cost)
}
