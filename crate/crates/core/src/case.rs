//! JSON case files and the bundled reference cases.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{validate, Scenario, Violation};

/// Names accepted by [`bundled`].
pub const BUNDLED: &[&str] = &["paper_reference", "paper_as_printed", "voltage_binding"];

const PAPER_REFERENCE: &str = include_str!("../cases/paper_reference.json");
const PAPER_AS_PRINTED: &str = include_str!("../cases/paper_as_printed.json");
const VOLTAGE_BINDING: &str = include_str!("../cases/voltage_binding.json");

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("case fails validation:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("no bundled case named {0:?}")]
    UnknownFixture(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

/// Parse and validate a case document.
pub fn parse_str(text: &str) -> Result<Scenario, CaseError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            serde_json::error::Category::Data => CaseError::Schema {
                line,
                column,
                message,
            },
            _ => CaseError::Syntax {
                line,
                column,
                message,
            },
        }
    })?;
    let violations = validate(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(CaseError::Invalid(violations))
    }
}

/// Read a case file from disk.
pub fn parse_case(path: &Path) -> Result<Scenario, CaseError> {
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_str(&text)
}

pub fn bundled(name: &str) -> Result<Scenario, CaseError> {
    let text = match name {
        "paper_reference" => PAPER_REFERENCE,
        "paper_as_printed" => PAPER_AS_PRINTED,
        "voltage_binding" => VOLTAGE_BINDING,
        other => return Err(CaseError::UnknownFixture(other.to_owned())),
    };
    parse_str(text)
}

/// A path if one exists on disk, otherwise a bundled case name.
pub fn load(spec: &str) -> Result<Scenario, CaseError> {
    let path = Path::new(spec);
    if path.exists() {
        parse_case(path)
    } else if BUNDLED.contains(&spec) {
        bundled(spec)
    } else {
        parse_case(path)
    }
}

/// Serialise a scenario to the case-file format.
pub fn emit(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(scenario).expect("scenario is always serialisable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_has_paper_participants() {
        let s = bundled("paper_reference").unwrap();
        assert_eq!(s.wholesale.len(), 6);
        assert_eq!(s.aggregators.len(), 6);
        assert_eq!(s.network.node_count(), 10);
        assert_eq!(s.network.branch_count(), 9);
        assert_eq!(s.firm_wholesale_load, 5.0);
    }

    #[test]
    fn as_printed_differs_only_in_dr3() {
        let a = bundled("paper_reference").unwrap();
        let b = bundled("paper_as_printed").unwrap();
        let dr3 = |s: &Scenario| s.wholesale.iter().find(|p| p.id == "DR3").unwrap().offers.capacity();
        assert_eq!(dr3(&a), 10.0);
        assert_eq!(dr3(&b), 20.0);
        assert_eq!(a.network, b.network);
        assert_eq!(a.aggregators, b.aggregators);
    }

    #[test]
    fn empty_document_is_a_syntax_error() {
        assert!(matches!(parse_str(""), Err(CaseError::Syntax { .. })));
    }

    #[test]
    fn malformed_json_reports_location() {
        match parse_str("{\n  \"network\": [1,\n}") {
            Err(CaseError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_a_schema_error() {
        assert!(matches!(parse_str("{\"aggregators\": []}"), Err(CaseError::Schema { .. })));
    }

    #[test]
    fn invalid_scenario_is_rejected_with_violations() {
        let mut s = bundled("paper_reference").unwrap();
        s.sweep_step = 0.0;
        match parse_str(&emit(&s)) {
            Err(CaseError::Invalid(v)) => assert_eq!(v[0].path, "sweep_step"),
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn emit_then_parse_is_identity_on_fixtures() {
        for name in BUNDLED {
            let s = bundled(name).unwrap();
            assert_eq!(parse_str(&emit(&s)).unwrap(), s, "{name}");
        }
    }

    #[test]
    fn unknown_fixture_name() {
        assert!(matches!(bundled("nope"), Err(CaseError::UnknownFixture(_))));
    }
}
