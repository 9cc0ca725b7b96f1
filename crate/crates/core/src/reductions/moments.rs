use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{check_binary, GroupKey, Groups};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    DemographicParity,
    EqualizedOdds,
}

impl ConstraintFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintFamily::DemographicParity => "demographic_parity",
            ConstraintFamily::EqualizedOdds => "equalized_odds",
        }
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "demographic_parity" => Ok(ConstraintFamily::DemographicParity),
            "equalized_odds" => Ok(ConstraintFamily::EqualizedOdds),
            _ => Err(Error::Config(format!("unknown constraint family `{s}`"))),
        }
    }
}

/// A constraint family with its slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub family: ConstraintFamily,
    pub eps: f64,
}

impl ConstraintSpec {
    pub fn new(family: ConstraintFamily, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!(
                "eps must be finite and nonnegative, got {eps}"
            )));
        }
        Ok(Self { family, eps })
    }
}

/// One signed moment: `sign * (E[h | group, label] - E[h | label])`, where
/// `label` is `None` for demographic parity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentTerm {
    pub group: GroupKey,
    pub label: Option<u8>,
    pub sign: i8,
}

impl fmt::Display for MomentTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.sign > 0 { '+' } else { '-' };
        match self.label {
            Some(y) => write!(f, "{}:y={y}:{sign}", self.group),
            None => write!(f, "{}:{sign}", self.group),
        }
    }
}

/// Moment terms compiled against a fixed set of labels and groups.
#[derive(Debug, Clone)]
pub struct Moments {
    terms: Vec<MomentTerm>,
    /// Rows of the conditioning cell and of its base population, per term.
    cells: Vec<(Vec<usize>, usize)>,
    bases: Vec<Vec<usize>>,
    flags: Vec<String>,
    n_rows: usize,
}

impl Moments {
    /// Compiles the family's terms, group-major and `+` before `-`.
    ///
    /// For equalized odds a (group, label) cell without rows cannot be
    /// estimated; its two terms are dropped and flagged, or rejected in
    /// `strict` mode.
    pub fn compile(
        family: ConstraintFamily,
        y_true: &[f64],
        groups: &Groups,
        strict: bool,
    ) -> Result<Self> {
        if y_true.len() != groups.n_rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} sensitive rows",
                y_true.len(),
                groups.n_rows()
            )));
        }
        if groups.n_rows() == 0 {
            return Err(Error::Shape("no rows".into()));
        }
        check_binary("y_true", y_true)?;

        let labels: Vec<Option<u8>> = match family {
            ConstraintFamily::DemographicParity => vec![None],
            ConstraintFamily::EqualizedOdds => vec![Some(0), Some(1)],
        };
        let in_cell = |i: usize, label: Option<u8>| label.is_none_or(|y| y_true[i] == f64::from(y));
        let mut base_rows = Vec::new();
        for &label in &labels {
            base_rows.push(
                (0..y_true.len())
                    .filter(|&i| in_cell(i, label))
                    .collect::<Vec<_>>(),
            );
        }

        let mut out = Self {
            terms: Vec::new(),
            cells: Vec::new(),
            bases: base_rows.clone(),
            flags: Vec::new(),
            n_rows: y_true.len(),
        };
        for (g, key) in groups.keys().iter().enumerate() {
            for (b, &label) in labels.iter().enumerate() {
                let rows: Vec<usize> = groups
                    .members(g)
                    .iter()
                    .copied()
                    .filter(|&i| in_cell(i, label))
                    .collect();
                if rows.is_empty() {
                    let what = format!("{key} with y={}", label.unwrap_or(0));
                    if strict {
                        return Err(Error::Moment(format!("no rows for {what}")));
                    }
                    out.flags.push(format!("dropped_moment:{what}"));
                    continue;
                }
                for sign in [1, -1] {
                    out.terms.push(MomentTerm {
                        group: key.clone(),
                        label,
                        sign,
                    });
                    out.cells.push((rows.clone(), b));
                }
            }
        }
        Ok(out)
    }

    pub fn terms(&self) -> &[MomentTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn mean(rows: &[usize], preds: &[f64]) -> f64 {
        rows.iter().map(|&i| preds[i]).sum::<f64>() / rows.len() as f64
    }

    /// Violation of every term for the given expected predictions.
    pub fn gamma(&self, preds: &[f64]) -> Vec<f64> {
        let base_means: Vec<f64> = self.bases.iter().map(|r| Self::mean(r, preds)).collect();
        self.terms
            .iter()
            .zip(&self.cells)
            .map(|(t, (rows, b))| f64::from(t.sign) * (Self::mean(rows, preds) - base_means[*b]))
            .collect()
    }

    /// Per-row coefficient of `sum_j lambda_j * gamma_j`, which is linear in
    /// the predictions.
    pub fn signed_weights(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for ((t, (rows, b)), &l) in self.terms.iter().zip(&self.cells).zip(lambda) {
            if l == 0.0 {
                continue;
            }
            let s = l * f64::from(t.sign);
            let cell = s / rows.len() as f64;
            for &i in rows {
                out[i] += cell;
            }
            let base = s / self.bases[*b].len() as f64;
            for &i in &self.bases[*b] {
                out[i] -= base;
            }
        }
        out
    }
}

/// Moment violations of `preds` under the constraint family. Terms for empty
/// equalized-odds cells are left out.
pub fn moment_violations(
    spec: &ConstraintSpec,
    y_true: &[f64],
    preds: &[f64],
    groups: &Groups,
) -> Result<Vec<f64>> {
    if preds.len() != y_true.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            preds.len(),
            y_true.len()
        )));
    }
    Ok(Moments::compile(spec.family, y_true, groups, false)?.gamma(preds))
}
