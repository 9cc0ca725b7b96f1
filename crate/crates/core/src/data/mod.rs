//! Tabular datasets with role-annotated columns.
//!
//! A [`Dataset`] is an immutable set of equally long columns. Each column is
//! tagged with a [`Role`] that tells the rest of the toolkit how to use it:
//! ground truth, hard predictions, scores, sensitive features or plain
//! features. Rows are split into groups by the cross product of all sensitive
//! columns, see [`Groups`].

mod csv_io;
mod synth;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_table, write_csv};
pub use synth::{generate_synthetic, SyntheticConfig};
pub use validate::{validate_dataset, Issue, ValidationReport};

/// What a column is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    YTrue,
    YPred,
    Score,
    Sensitive,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Feature => "feature",
            Role::YTrue => "y_true",
            Role::YPred => "y_pred",
            Role::Score => "score",
            Role::Sensitive => "sensitive",
        }
    }
}

pub type RoleMap = BTreeMap<String, Role>;

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[String]> {
        match self {
            Column::Numeric(_) => None,
            Column::Categorical(v) => Some(v),
        }
    }

    /// Cell rendered as text; numbers use the shortest representation that
    /// parses back to the same value.
    pub fn cell(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => format_number(v[row]),
            Column::Categorical(v) => v[row].clone(),
        }
    }
}

pub(crate) fn format_number(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedColumn {
    pub name: String,
    pub role: Role,
    pub values: Column,
}

impl NamedColumn {
    pub fn new(name: impl Into<String>, role: Role, values: Column) -> Self {
        Self {
            name: name.into(),
            role,
            values,
        }
    }
}

/// Immutable table of role-annotated columns.
///
/// [`Dataset::new`] enforces every invariant checked by
/// [`validate_dataset`] except the requirement of a sensitive column, which
/// only applies once fairness operations are requested.
/// [`Dataset::from_columns_unchecked`] skips validation so that broken
/// tables can still be inspected.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<NamedColumn>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<NamedColumn>) -> Result<Self> {
        let d = Self::from_columns_unchecked(columns);
        let report = validate_dataset(&d);
        match report
            .errors
            .iter()
            .find(|issue| issue.code != validate::NO_SENSITIVE)
        {
            Some(issue) => Err(issue.to_error()),
            None => Ok(d),
        }
    }

    pub fn from_columns_unchecked(columns: Vec<NamedColumn>) -> Self {
        let n_rows = columns.first().map_or(0, |c| c.values.len());
        Self { columns, n_rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[NamedColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&NamedColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&NamedColumn> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        self.require(name)?
            .values
            .as_numeric()
            .ok_or_else(|| Error::Type(format!("column `{name}` is not numeric")))
    }

    /// Values of a column as strings, whatever its storage type.
    pub fn labels(&self, name: &str) -> Result<Vec<String>> {
        let col = self.require(name)?;
        Ok((0..self.n_rows).map(|i| col.values.cell(i)).collect())
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &NamedColumn> {
        self.columns.iter().filter(move |c| c.role == role)
    }

    /// Groups formed by every column with role `sensitive`.
    pub fn sensitive_groups(&self) -> Result<Groups> {
        let names: Vec<String> = self
            .with_role(Role::Sensitive)
            .map(|c| c.name.clone())
            .collect();
        if names.is_empty() {
            return Err(Error::Schema("dataset has no sensitive column".into()));
        }
        self.groups_by(&names)
    }

    /// Groups formed by the named columns (cross product of their values).
    pub fn groups_by<S: AsRef<str>>(&self, names: &[S]) -> Result<Groups> {
        let cols = names
            .iter()
            .map(|n| self.labels(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[String]> = cols.iter().map(Vec::as_slice).collect();
        Groups::from_columns(
            names.iter().map(|n| n.as_ref().to_string()).collect(),
            &refs,
        )
    }

    /// Returns a copy with one column appended (or replaced when the name exists).
    pub fn with_column(&self, column: NamedColumn) -> Result<Self> {
        if column.values.len() != self.n_rows && !self.columns.is_empty() {
            return Err(Error::Shape(format!(
                "column `{}` has {} rows, dataset has {}",
                column.name,
                column.values.len(),
                self.n_rows
            )));
        }
        let mut columns = self.columns.clone();
        match columns.iter_mut().find(|c| c.name == column.name) {
            Some(slot) => *slot = column,
            None => columns.push(column),
        }
        Ok(Self::from_columns_unchecked(columns))
    }
}

/// Identity of a group: one categorical value per sensitive column.
///
/// Keys order lexicographically, part by part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupKey(pub Vec<String>);

impl GroupKey {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = S>) -> Self {
        Self(parts.into_iter().map(Into::into).collect())
    }

    pub fn single(part: impl Into<String>) -> Self {
        Self(vec![part.into()])
    }

    pub fn parts(&self) -> &[String] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(","))
    }
}

/// Assignment of rows to groups.
///
/// Distinct keys are kept in sorted order; `index_of_row[i]` points into
/// [`Groups::keys`].
#[derive(Debug, Clone, PartialEq)]
pub struct Groups {
    columns: Vec<String>,
    keys: Vec<GroupKey>,
    row_group: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Groups {
    /// Builds groups from one or more equally long label columns.
    pub fn from_columns(names: Vec<String>, columns: &[&[String]]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema(
                "at least one sensitive column is required".into(),
            ));
        }
        if names.len() != columns.len() {
            return Err(Error::Shape(
                "column names and columns differ in number".into(),
            ));
        }
        let n = columns[0].len();
        if let Some((i, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::Shape(format!(
                "sensitive column `{}` has {} rows, expected {n}",
                names[i],
                c.len()
            )));
        }
        let row_keys: Vec<GroupKey> = (0..n)
            .map(|i| GroupKey(columns.iter().map(|c| c[i].clone()).collect()))
            .collect();
        Ok(Self::from_keys(names, row_keys))
    }

    /// Single sensitive column given as plain labels.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let keys = labels
            .iter()
            .map(|l| GroupKey::single(l.as_ref()))
            .collect();
        Self::from_keys(vec!["group".to_string()], keys)
    }

    pub fn from_keys(columns: Vec<String>, row_keys: Vec<GroupKey>) -> Self {
        let mut index: BTreeMap<&GroupKey, usize> = BTreeMap::new();
        for k in &row_keys {
            index.entry(k).or_insert(0);
        }
        let keys: Vec<GroupKey> = index.keys().map(|k| (*k).clone()).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let row_group: Vec<usize> = row_keys.iter().map(|k| index[k]).collect();
        let mut members = vec![Vec::new(); keys.len()];
        for (row, &g) in row_group.iter().enumerate() {
            members[g].push(row);
        }
        Self {
            columns,
            keys,
            row_group,
            members,
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn keys(&self) -> &[GroupKey] {
        &self.keys
    }

    pub fn n_groups(&self) -> usize {
        self.keys.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_group.len()
    }

    /// Group index of every row.
    pub fn row_groups(&self) -> &[usize] {
        &self.row_group
    }

    pub fn key_of_row(&self, row: usize) -> &GroupKey {
        &self.keys[self.row_group[row]]
    }

    /// Row indices of group `g`, ascending.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn position(&self, key: &GroupKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }
}

/// Checks that every value is exactly 0 or 1.
pub(crate) fn check_binary(column: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| v != 0.0 && v != 1.0) {
        Some(i) => Err(Error::Value {
            column: column.to_string(),
            row: i + 1,
            message: format!("expected 0 or 1, found {}", values[i]),
        }),
        None => Ok(()),
    }
}
