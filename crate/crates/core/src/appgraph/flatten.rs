//! Flattening of the structure tree into a forwarding graph.

use super::{ApplicationDescriptor, EdgeKind, ForwardingEdge, ForwardingGraph, StructureNode};
use crate::appgraph::ParseError;

/// What construct a segment's entry or exit boundary belongs to. Edges that
/// cross into a parallel or selection boundary carry the matching kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Plain,
    Parallel,
    Selection,
}

/// Entry/exit leaves of a structure node, plus the construct that owns each
/// boundary. `first_leaf`/`last_leaf` follow flattening order and anchor
/// loopback edges.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub entries: Vec<String>,
    pub exits: Vec<String>,
    pub entry_kind: BoundaryKind,
    pub exit_kind: BoundaryKind,
    pub first_leaf: String,
    pub last_leaf: String,
}

pub(crate) fn boundary(node: &StructureNode) -> Boundary {
    match node {
        StructureNode::Leaf { component } => Boundary {
            entries: vec![component.clone()],
            exits: vec![component.clone()],
            entry_kind: BoundaryKind::Plain,
            exit_kind: BoundaryKind::Plain,
            first_leaf: component.clone(),
            last_leaf: component.clone(),
        },
        StructureNode::Sequence { children } => {
            let first = boundary(children.first().expect("validated: non-empty sequence"));
            let last = boundary(children.last().expect("validated: non-empty sequence"));
            Boundary {
                entries: first.entries,
                exits: last.exits,
                entry_kind: first.entry_kind,
                exit_kind: last.exit_kind,
                first_leaf: first.first_leaf,
                last_leaf: last.last_leaf,
            }
        }
        StructureNode::Parallel { branches } => merged_boundary(branches, BoundaryKind::Parallel),
        StructureNode::Selection { branches, .. } => {
            merged_boundary(branches, BoundaryKind::Selection)
        }
        StructureNode::Loop { body, .. } => boundary(body),
    }
}

fn merged_boundary(branches: &[StructureNode], kind: BoundaryKind) -> Boundary {
    let parts: Vec<Boundary> = branches.iter().map(boundary).collect();
    Boundary {
        entries: parts
            .iter()
            .flat_map(|b| b.entries.iter().cloned())
            .collect(),
        exits: parts.iter().flat_map(|b| b.exits.iter().cloned()).collect(),
        entry_kind: kind,
        exit_kind: kind,
        first_leaf: parts
            .first()
            .expect("validated: non-empty branches")
            .first_leaf
            .clone(),
        last_leaf: parts
            .last()
            .expect("validated: non-empty branches")
            .last_leaf
            .clone(),
    }
}

/// Flatten a validated descriptor into its forwarding graph.
///
/// Consecutive plain leaves yield `sequence` edges; edges into a parallel's
/// branches are `fork`, out of them `join`; selection boundaries use
/// `select` on both sides; a loop adds one `loopback` edge from the body's
/// last leaf back to its first. The output is a deterministic function of
/// the structure tree.
pub fn flatten_to_vnffg(d: &ApplicationDescriptor) -> Result<ForwardingGraph, ParseError> {
    let violations = super::validate_graph(d);
    if !violations.is_empty() {
        return Err(ParseError::Graph { violations });
    }
    let mut edges = Vec::new();
    collect_edges(&d.structure, &mut edges);
    Ok(ForwardingGraph { edges })
}

fn collect_edges(node: &StructureNode, edges: &mut Vec<ForwardingEdge>) {
    match node {
        StructureNode::Leaf { .. } => {}
        StructureNode::Sequence { children } => {
            for (i, child) in children.iter().enumerate() {
                collect_edges(child, edges);
                if i + 1 < children.len() {
                    connect(&children[i], &children[i + 1], edges);
                }
            }
        }
        StructureNode::Parallel { branches } | StructureNode::Selection { branches, .. } => {
            for b in branches {
                collect_edges(b, edges);
            }
        }
        StructureNode::Loop { body, .. } => {
            collect_edges(body, edges);
            let b = boundary(body);
            edges.push(ForwardingEdge {
                from: b.last_leaf,
                to: b.first_leaf,
                kind: EdgeKind::Loopback,
            });
        }
    }
}

/// Emit the edges crossing the boundary between two consecutive children of
/// a sequence. The successor construct decides the kind first; a plain
/// successor defers to the predecessor construct.
fn connect(prev: &StructureNode, next: &StructureNode, edges: &mut Vec<ForwardingEdge>) {
    let from = boundary(prev);
    let to = boundary(next);
    let kind = match (from.exit_kind, to.entry_kind) {
        (_, BoundaryKind::Parallel) => EdgeKind::Fork,
        (_, BoundaryKind::Selection) => EdgeKind::Select,
        (BoundaryKind::Parallel, BoundaryKind::Plain) => EdgeKind::Join,
        (BoundaryKind::Selection, BoundaryKind::Plain) => EdgeKind::Select,
        (BoundaryKind::Plain, BoundaryKind::Plain) => EdgeKind::Sequence,
    };
    for f in &from.exits {
        for t in &to.entries {
            edges.push(ForwardingEdge {
                from: f.clone(),
                to: t.clone(),
                kind,
            });
        }
    }
}
