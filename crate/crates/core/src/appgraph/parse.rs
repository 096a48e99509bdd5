//! Descriptor document parsing.
//!
//! The canonical encoding is JSON; YAML documents are accepted and
//! normalized. Schema version 1 is the only version.

use serde::Deserialize;
use thiserror::Error;

use super::{ApplicationDescriptor, ComponentDescriptor, StructureNode, Violation};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ParseError {
    /// The document is not well-formed JSON or YAML.
    #[error("descriptor syntax error: {0}")]
    Syntax(String),
    /// The document parses but does not match the schema (missing field,
    /// unknown tier, wrong version, ...).
    #[error("descriptor schema error: {0}")]
    Schema(String),
    /// The document matches the schema but breaks a graph invariant.
    #[error("invalid application graph: {}", format_violations(violations))]
    Graph { violations: Vec<Violation> },
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorDoc {
    version: u64,
    name: String,
    components: Vec<ComponentDescriptor>,
    structure: StructureNode,
    #[serde(default)]
    source_component: Option<String>,
    #[serde(default)]
    sink_components: Option<Vec<String>>,
}

/// Parse and validate an application descriptor document.
///
/// `source_component` and `sink_components` may be omitted; they are then
/// derived from the structure (first leaf in flattening order, terminal
/// leaves).
pub fn parse_application_descriptor(text: &str) -> Result<ApplicationDescriptor, ParseError> {
    let doc = decode(text)?;
    if doc.version != SCHEMA_VERSION {
        return Err(ParseError::Schema(format!(
            "unsupported descriptor version {}, expected {SCHEMA_VERSION}",
            doc.version
        )));
    }
    let derived = ApplicationDescriptor::new(doc.name, doc.components, doc.structure);
    let descriptor = ApplicationDescriptor {
        source_component: doc
            .source_component
            .unwrap_or(derived.source_component.clone()),
        sink_components: doc
            .sink_components
            .unwrap_or(derived.sink_components.clone()),
        ..derived
    };
    let violations = super::validate_graph(&descriptor);
    if violations.is_empty() {
        Ok(descriptor)
    } else {
        Err(ParseError::Graph { violations })
    }
}

/// JSON first; anything that is not syntactically JSON gets a YAML pass.
fn decode(text: &str) -> Result<DescriptorDoc, ParseError> {
    use serde_json::error::Category;
    match serde_json::from_str::<DescriptorDoc>(text) {
        Ok(doc) => Ok(doc),
        Err(json_err) if matches!(json_err.classify(), Category::Syntax | Category::Eof) => {
            if looks_like_json(text) {
                return Err(ParseError::Syntax(json_err.to_string()));
            }
            match serde_yaml::from_str::<DescriptorDoc>(text) {
                Ok(doc) => Ok(doc),
                Err(yaml_err) => {
                    let msg = yaml_err.to_string();
                    // serde_yaml folds schema mismatches into one error type;
                    // location-bearing messages about fields are schema errors.
                    if msg.contains("unknown")
                        || msg.contains("missing field")
                        || msg.contains("invalid")
                    {
                        Err(ParseError::Schema(msg))
                    } else {
                        Err(ParseError::Syntax(msg))
                    }
                }
            }
        }
        Err(json_err) => Err(ParseError::Schema(json_err.to_string())),
    }
}

fn looks_like_json(text: &str) -> bool {
    matches!(text.trim_start().chars().next(), Some('{') | Some('['))
}
