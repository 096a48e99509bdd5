//! Structured application graphs (VNF forwarding graphs).
//!
//! An application is a set of components plus a structure tree built from
//! sequence, parallel, selection and loop nodes. The structure tree flattens
//! deterministically to a forwarding graph whose edges the execution engine
//! later materializes as chain links.

mod estimate;
mod flatten;
mod parse;

pub use estimate::{estimate_execution_time, estimate_partial_time, structure_time, EstimateError};
pub use flatten::flatten_to_vnffg;
pub use parse::{parse_application_descriptor, ParseError};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::types::{Resources, Tier};

/// Tolerance for selection branch weights summing to one. Weights are the
/// only floating-point input in a descriptor.
const WEIGHT_SUM_EPSILON: f64 = 1e-9;

/// One application component (a VNF).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDescriptor {
    pub id: String,
    /// Required cpu in millicores.
    pub cpu_req: u64,
    /// Required memory in MB.
    pub memory_req: u64,
    /// Required disk in MB.
    pub disk_req: u64,
    /// Required traffic in kbps. Carried through plans; not enforced by
    /// placement.
    pub traffic_req: u64,
    /// Processing demand in abstract work units.
    pub workload: u64,
    /// Tiers this component may be hosted on.
    pub allowed_tiers: BTreeSet<Tier>,
    /// Container image size in MB, used for migration transfer estimates.
    pub image_size: u64,
}

impl ComponentDescriptor {
    pub fn demands(&self) -> Resources {
        Resources::new(self.cpu_req, self.memory_req, self.disk_req)
    }
}

/// A node of the structure tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StructureNode {
    Leaf {
        component: String,
    },
    Sequence {
        children: Vec<StructureNode>,
    },
    Parallel {
        branches: Vec<StructureNode>,
    },
    Selection {
        branches: Vec<StructureNode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branch_weights: Option<Vec<f64>>,
    },
    Loop {
        body: Box<StructureNode>,
        iterations: u64,
    },
}

impl StructureNode {
    pub fn leaf(component: impl Into<String>) -> Self {
        StructureNode::Leaf {
            component: component.into(),
        }
    }

    pub fn sequence(children: Vec<StructureNode>) -> Self {
        StructureNode::Sequence { children }
    }

    pub fn parallel(branches: Vec<StructureNode>) -> Self {
        StructureNode::Parallel { branches }
    }

    pub fn selection(branches: Vec<StructureNode>, branch_weights: Option<Vec<f64>>) -> Self {
        StructureNode::Selection {
            branches,
            branch_weights,
        }
    }

    pub fn repeat(body: StructureNode, iterations: u64) -> Self {
        StructureNode::Loop {
            body: Box::new(body),
            iterations,
        }
    }

    /// Leaf component ids in flattening order (depth-first, left to right).
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            StructureNode::Leaf { component } => out.push(component),
            StructureNode::Sequence { children } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
            StructureNode::Parallel { branches } | StructureNode::Selection { branches, .. } => {
                branches.iter().for_each(|b| b.collect_leaves(out))
            }
            StructureNode::Loop { body, .. } => body.collect_leaves(out),
        }
    }

    /// Tree depth, counting this node.
    pub fn depth(&self) -> usize {
        match self {
            StructureNode::Leaf { .. } => 1,
            StructureNode::Sequence { children } => {
                1 + children.iter().map(StructureNode::depth).max().unwrap_or(0)
            }
            StructureNode::Parallel { branches } | StructureNode::Selection { branches, .. } => {
                1 + branches.iter().map(StructureNode::depth).max().unwrap_or(0)
            }
            StructureNode::Loop { body, .. } => 1 + body.depth(),
        }
    }
}

/// A complete, possibly not yet validated, application description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationDescriptor {
    pub name: String,
    pub components: Vec<ComponentDescriptor>,
    pub structure: StructureNode,
    /// Entry point; always the first leaf in flattening order.
    pub source_component: String,
    /// Terminal components (leaves with no outgoing forward edge).
    pub sink_components: Vec<String>,
}

impl ApplicationDescriptor {
    /// Build a descriptor, deriving source and sinks from the structure.
    pub fn new(
        name: impl Into<String>,
        components: Vec<ComponentDescriptor>,
        structure: StructureNode,
    ) -> Self {
        let source = structure
            .leaves()
            .first()
            .map(|s| s.to_string())
            .unwrap_or_default();
        let sinks = derive_sinks(&structure);
        Self {
            name: name.into(),
            components,
            structure,
            source_component: source,
            sink_components: sinks,
        }
    }

    pub fn component(&self, id: &str) -> Option<&ComponentDescriptor> {
        self.components.iter().find(|c| c.id == id)
    }
}

/// Terminal leaves of a structure: the exit boundary of the root.
fn derive_sinks(structure: &StructureNode) -> Vec<String> {
    flatten::boundary(structure)
        .exits
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Edge kinds of the flattened forwarding graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Sequence,
    Fork,
    Join,
    Select,
    Loopback,
}

/// A directed edge between two components of the flattened graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ForwardingEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

/// The flattened VNF forwarding graph of an application.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ForwardingGraph {
    pub edges: Vec<ForwardingEdge>,
}

/// One failed invariant, pointing at the offending node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Path into the descriptor, e.g. `structure.children[1]`.
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Check every descriptor invariant; an empty list means the descriptor is
/// well formed. Violations are data, not errors.
pub fn validate_graph(d: &ApplicationDescriptor) -> Vec<Violation> {
    let mut out = Vec::new();

    if d.components.is_empty() {
        out.push(Violation {
            location: "components".into(),
            message: "application declares no components".into(),
        });
    }
    let mut declared: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, c) in d.components.iter().enumerate() {
        if declared.insert(c.id.as_str(), i).is_some() {
            out.push(Violation {
                location: format!("components[{i}]"),
                message: format!("duplicate component id {:?}", c.id),
            });
        }
        if c.allowed_tiers.is_empty() {
            out.push(Violation {
                location: format!("components[{i}]"),
                message: format!("component {:?} allows no tier", c.id),
            });
        }
    }

    validate_structure(&d.structure, "structure", &mut out);

    // Leaf coverage: each declared component in exactly one leaf.
    let mut seen: BTreeMap<&str, u32> = BTreeMap::new();
    for leaf in d.structure.leaves() {
        *seen.entry(leaf).or_default() += 1;
        if !declared.contains_key(leaf) {
            out.push(Violation {
                location: "structure".into(),
                message: format!("leaf references undeclared component {leaf:?}"),
            });
        }
    }
    for (id, count) in &seen {
        if *count > 1 {
            out.push(Violation {
                location: "structure".into(),
                message: format!("component {id:?} appears in {count} leaves"),
            });
        }
    }
    for id in declared.keys() {
        if !seen.contains_key(id) {
            out.push(Violation {
                location: "structure".into(),
                message: format!("component {id:?} has no leaf"),
            });
        }
    }

    let leaves = d.structure.leaves();
    match leaves.first() {
        Some(first) if *first != d.source_component => out.push(Violation {
            location: "source_component".into(),
            message: format!(
                "source must be the first leaf in flattening order ({first:?}), got {:?}",
                d.source_component
            ),
        }),
        None => {}
        _ => {}
    }
    for sink in &d.sink_components {
        if !declared.contains_key(sink.as_str()) {
            out.push(Violation {
                location: "sink_components".into(),
                message: format!("sink {sink:?} is not a declared component"),
            });
        }
    }

    out
}

fn validate_structure(node: &StructureNode, path: &str, out: &mut Vec<Violation>) {
    match node {
        StructureNode::Leaf { .. } => {}
        StructureNode::Sequence { children } => {
            if children.is_empty() {
                out.push(Violation {
                    location: path.into(),
                    message: "sequence has no children".into(),
                });
            }
            for (i, c) in children.iter().enumerate() {
                validate_structure(c, &format!("{path}.children[{i}]"), out);
            }
        }
        StructureNode::Parallel { branches } => {
            if branches.is_empty() {
                out.push(Violation {
                    location: path.into(),
                    message: "parallel has no branches".into(),
                });
            }
            for (i, b) in branches.iter().enumerate() {
                validate_structure(b, &format!("{path}.branches[{i}]"), out);
            }
        }
        StructureNode::Selection {
            branches,
            branch_weights,
        } => {
            if branches.is_empty() {
                out.push(Violation {
                    location: path.into(),
                    message: "selection has no branches".into(),
                });
            }
            if let Some(weights) = branch_weights {
                if weights.len() != branches.len() {
                    out.push(Violation {
                        location: path.into(),
                        message: format!(
                            "selection has {} branches but {} weights",
                            branches.len(),
                            weights.len()
                        ),
                    });
                }
                if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                    out.push(Violation {
                        location: path.into(),
                        message: "branch weights must be finite and non-negative".into(),
                    });
                } else {
                    let sum: f64 = weights.iter().sum();
                    if (sum - 1.0).abs() > WEIGHT_SUM_EPSILON {
                        out.push(Violation {
                            location: path.into(),
                            message: format!("branch weights sum to {sum}, expected 1"),
                        });
                    }
                }
            }
            for (i, b) in branches.iter().enumerate() {
                validate_structure(b, &format!("{path}.branches[{i}]"), out);
            }
        }
        StructureNode::Loop { body, iterations } => {
            if *iterations == 0 {
                out.push(Violation {
                    location: path.into(),
                    message: "loop iteration count must be at least 1".into(),
                });
            }
            validate_structure(body, &format!("{path}.body"), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn comp(id: &str) -> ComponentDescriptor {
        ComponentDescriptor {
            id: id.into(),
            cpu_req: 1,
            memory_req: 1,
            disk_req: 1,
            traffic_req: 1,
            workload: 1,
            allowed_tiers: [Tier::Cloud, Tier::Fog].into(),
            image_size: 1,
        }
    }

    #[test]
    fn parade_fixture_is_valid() {
        let app = scenarios::smart_parade_app();
        assert_eq!(app.components.len(), 8);
        assert_eq!(app.structure.leaves().len(), 8);
        assert!(validate_graph(&app).is_empty());
    }

    #[test]
    fn accident_fixture_is_valid() {
        let app = scenarios::smart_accident_app();
        assert_eq!(app.components.len(), 7);
        assert!(validate_graph(&app).is_empty());
    }

    #[test]
    fn unbalanced_selection_weights_are_one_violation() {
        let app = ApplicationDescriptor::new(
            "sel",
            vec![comp("a"), comp("b")],
            StructureNode::selection(
                vec![StructureNode::leaf("a"), StructureNode::leaf("b")],
                Some(vec![0.6, 0.6]),
            ),
        );
        let violations = validate_graph(&app);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("sum"));
        assert_eq!(violations[0].location, "structure");
    }

    #[test]
    fn zero_iteration_loop_is_one_violation() {
        let app = ApplicationDescriptor::new(
            "loop",
            vec![comp("a")],
            StructureNode::repeat(StructureNode::leaf("a"), 0),
        );
        let violations = validate_graph(&app);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("iteration"));
    }

    #[test]
    fn undeclared_leaf_and_missing_component_are_reported() {
        let app = ApplicationDescriptor::new(
            "bad",
            vec![comp("a"), comp("b")],
            StructureNode::sequence(vec![StructureNode::leaf("a"), StructureNode::leaf("x")]),
        );
        let violations = validate_graph(&app);
        assert!(violations
            .iter()
            .any(|v| v.message.contains("undeclared component \"x\"")));
        assert!(violations
            .iter()
            .any(|v| v.message.contains("\"b\" has no leaf")));
    }

    #[test]
    fn source_must_be_first_leaf() {
        let mut app = ApplicationDescriptor::new(
            "src",
            vec![comp("a"), comp("b")],
            StructureNode::sequence(vec![StructureNode::leaf("a"), StructureNode::leaf("b")]),
        );
        app.source_component = "b".into();
        let violations = validate_graph(&app);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].location, "source_component");
    }

    #[test]
    fn derived_sinks_are_terminal_leaves() {
        let app = ApplicationDescriptor::new(
            "sinks",
            vec![comp("a"), comp("b"), comp("c")],
            StructureNode::sequence(vec![
                StructureNode::leaf("a"),
                StructureNode::parallel(vec![StructureNode::leaf("b"), StructureNode::leaf("c")]),
            ]),
        );
        assert_eq!(app.source_component, "a");
        assert_eq!(app.sink_components, vec!["b".to_string(), "c".to_string()]);
    }
}
