use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{Column, Dataset, Role};
use crate::error::Error;

pub(crate) const NO_SENSITIVE: &str = "no_sensitive_column";

/// Groups smaller than this trigger a warning.
pub const SMALL_GROUP_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: String,
    pub message: String,
    pub column: Option<String>,
    /// 1-based data row, when the issue is tied to a single cell.
    pub row: Option<usize>,
}

impl Issue {
    fn new(code: &str, message: String, column: Option<&str>, row: Option<usize>) -> Self {
        Self {
            code: code.to_string(),
            message,
            column: column.map(str::to_string),
            row,
        }
    }

    pub(crate) fn to_error(&self) -> Error {
        let column = self.column.clone().unwrap_or_default();
        match (self.code.as_str(), self.row) {
            ("non_binary" | "non_finite" | "missing_value", Some(row)) => Error::Value {
                column,
                row,
                message: self.message.clone(),
            },
            ("ragged_column", _) => Error::Shape(self.message.clone()),
            ("wrong_type", _) => Error::Type(self.message.clone()),
            _ => Error::Schema(self.message.clone()),
        }
    }
}

/// Outcome of [`validate_dataset`]. Errors are data, not faults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Lists every violated dataset invariant, plus warnings for groups with
/// fewer than ten rows and for sensitive columns holding a single value.
pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let errors = &mut report.errors;

    let mut seen = HashSet::new();
    for c in d.columns() {
        if c.name.is_empty() {
            errors.push(Issue::new(
                "empty_column_name",
                "column name is empty".into(),
                None,
                None,
            ));
        } else if !seen.insert(c.name.as_str()) {
            errors.push(Issue::new(
                "duplicate_column",
                format!("column `{}` appears more than once", c.name),
                Some(&c.name),
                None,
            ));
        }
    }

    let mut shapes_ok = true;
    for c in d.columns() {
        if c.values.len() != d.n_rows() {
            shapes_ok = false;
            errors.push(Issue::new(
                "ragged_column",
                format!(
                    "column `{}` has {} rows, expected {}",
                    c.name,
                    c.values.len(),
                    d.n_rows()
                ),
                Some(&c.name),
                None,
            ));
        }
    }

    for c in d.columns() {
        match (&c.values, c.role) {
            (Column::Numeric(v), Role::YTrue | Role::YPred) => {
                if let Some(i) = v.iter().position(|&x| x != 0.0 && x != 1.0) {
                    errors.push(Issue::new(
                        "non_binary",
                        format!("expected 0 or 1, found {}", v[i]),
                        Some(&c.name),
                        Some(i + 1),
                    ));
                }
            }
            (Column::Categorical(_), Role::YTrue | Role::YPred | Role::Score) => {
                errors.push(Issue::new(
                    "wrong_type",
                    format!(
                        "column `{}` with role {} must be numeric",
                        c.name,
                        c.role.as_str()
                    ),
                    Some(&c.name),
                    None,
                ));
            }
            (Column::Numeric(v), _) => {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    errors.push(Issue::new(
                        "non_finite",
                        format!("non-finite value {}", v[i]),
                        Some(&c.name),
                        Some(i + 1),
                    ));
                }
            }
            (Column::Categorical(v), _) => {
                if let Some(i) = v.iter().position(String::is_empty) {
                    errors.push(Issue::new(
                        "missing_value",
                        "missing value".into(),
                        Some(&c.name),
                        Some(i + 1),
                    ));
                }
            }
        }
    }

    let sensitive: Vec<_> = d.with_role(Role::Sensitive).collect();
    if sensitive.is_empty() {
        errors.push(Issue::new(
            NO_SENSITIVE,
            "dataset has no sensitive column".into(),
            None,
            None,
        ));
    }

    for c in &sensitive {
        let distinct: BTreeSet<String> = (0..c.values.len()).map(|i| c.values.cell(i)).collect();
        if distinct.len() == 1 {
            report.warnings.push(Issue::new(
                "single_group",
                format!("sensitive column `{}` has a single distinct value", c.name),
                Some(&c.name),
                None,
            ));
        }
    }
    if shapes_ok && !sensitive.is_empty() {
        if let Ok(groups) = d.sensitive_groups() {
            for (key, size) in groups.keys().iter().zip(groups.sizes()) {
                if size < SMALL_GROUP_ROWS {
                    report.warnings.push(Issue::new(
                        "small_group",
                        format!("group {key} has only {size} rows"),
                        None,
                        None,
                    ));
                }
            }
        }
    }
    report
}
