//! Linear decorrelation of features from sensitive columns.
//!
//! The remover regresses every non-sensitive column on the centered
//! sensitive columns and subtracts the fitted part:
//!
//! ```text
//! Z' = alpha * (Z - (S - mean(S)) W) + (1 - alpha) * Z
//! ```
//!
//! `W` is the minimum-norm least-squares solution, so constant or collinear
//! sensitive encodings are fine. On the fitting data the residual block is
//! uncorrelated with every sensitive column that has nonzero variance.
//! Sensitive columns are dropped from the output.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, NamedColumn};
use crate::error::{Error, Result};

/// How one sensitive column is turned into numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveEncoding {
    pub column: String,
    /// First (sorted) level, encoded as all zeros.
    pub reference: Option<String>,
    /// One-hot levels after the reference level; `None` for numeric columns
    /// used as they are.
    pub levels: Option<Vec<String>>,
}

impl SensitiveEncoding {
    fn width(&self) -> usize {
        self.levels.as_ref().map_or(1, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRemoverModel {
    pub alpha: f64,
    pub sensitive_means: Vec<f64>,
    /// One row per encoded sensitive column, one column per passthrough column.
    pub coefficients: Vec<Vec<f64>>,
    pub sensitive_cols: Vec<String>,
    pub passthrough_cols: Vec<String>,
    pub encoding: Vec<SensitiveEncoding>,
}

/// Fits the remover on `x`. `alpha` blends between the untouched features
/// (0) and fully decorrelated ones (1).
pub fn fit_correlation_remover<S: AsRef<str>>(
    x: &Dataset,
    sensitive_cols: &[S],
    alpha: f64,
) -> Result<CorrelationRemoverModel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if sensitive_cols.is_empty() {
        return Err(Error::Config(
            "at least one sensitive column is required".into(),
        ));
    }
    if x.n_rows() < 2 {
        return Err(Error::Data("at least two rows are required".into()));
    }
    let sensitive: Vec<String> = sensitive_cols
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect();
    for s in &sensitive {
        x.require(s)?;
    }
    let passthrough: Vec<String> = x
        .column_names()
        .filter(|n| !sensitive.iter().any(|s| s == n))
        .map(str::to_string)
        .collect();

    let encoding: Vec<SensitiveEncoding> = sensitive
        .iter()
        .map(|name| {
            Ok(match &x.require(name)?.values {
                Column::Numeric(_) => SensitiveEncoding {
                    column: name.clone(),
                    reference: None,
                    levels: None,
                },
                Column::Categorical(v) => {
                    let mut distinct = v.iter().collect::<BTreeSet<_>>().into_iter().cloned();
                    SensitiveEncoding {
                        column: name.clone(),
                        reference: distinct.next(),
                        levels: Some(distinct.collect()),
                    }
                }
            })
        })
        .collect::<Result<_>>()?;

    let s = encode(x, &encoding)?;
    let z = passthrough_matrix(x, &passthrough)?;
    let n = x.n_rows() as f64;
    let means: Vec<f64> = s.column_iter().map(|c| c.sum() / n).collect();
    let centered = center(&s, &means);
    let w = min_norm_lstsq(&centered, &z)?;

    Ok(CorrelationRemoverModel {
        alpha,
        sensitive_means: means,
        coefficients: w.row_iter().map(|r| r.iter().copied().collect()).collect(),
        sensitive_cols: sensitive,
        passthrough_cols: passthrough,
        encoding,
    })
}

impl CorrelationRemoverModel {
    /// Applies the fitted transform; the output holds only the passthrough
    /// columns, in fitting order, with their original roles.
    pub fn transform(&self, x: &Dataset) -> Result<Dataset> {
        let s = encode(x, &self.encoding)?;
        let z = passthrough_matrix(x, &self.passthrough_cols)?;
        let centered = center(&s, &self.sensitive_means);
        let w = DMatrix::from_fn(s.ncols(), z.ncols(), |i, j| self.coefficients[i][j]);
        let residual = &z - centered * w;
        let blended = residual * self.alpha + &z * (1.0 - self.alpha);
        let columns = self
            .passthrough_cols
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let role = x.require(name)?.role;
                Ok(NamedColumn::new(
                    name.clone(),
                    role,
                    Column::Numeric(blended.column(j).iter().copied().collect()),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::from_columns_unchecked(columns))
    }

    /// Number of numeric columns the sensitive block expands to.
    pub fn encoded_width(&self) -> usize {
        self.encoding.iter().map(SensitiveEncoding::width).sum()
    }
}

/// Numeric encoding of the sensitive block, one-hot with first level dropped.
pub fn encode(x: &Dataset, encoding: &[SensitiveEncoding]) -> Result<DMatrix<f64>> {
    let n = x.n_rows();
    let width: usize = encoding.iter().map(SensitiveEncoding::width).sum();
    let mut out = DMatrix::zeros(n, width);
    let mut offset = 0;
    for enc in encoding {
        let col = x.require(&enc.column)?;
        match (&enc.levels, &col.values) {
            (None, Column::Numeric(v)) => {
                for (i, value) in v.iter().enumerate() {
                    out[(i, offset)] = *value;
                }
            }
            (None, Column::Categorical(_)) => {
                return Err(Error::Type(format!(
                    "sensitive column `{}` was numeric when fitted",
                    enc.column
                )))
            }
            (Some(levels), values) => {
                let labels: Vec<String> = (0..n).map(|i| values.cell(i)).collect();
                for (i, label) in labels.iter().enumerate() {
                    match levels.iter().position(|l| l == label) {
                        Some(k) => out[(i, offset + k)] = 1.0,
                        None if enc.reference.as_ref() == Some(label) => {}
                        None => {
                            return Err(Error::Schema(format!(
                                "sensitive column `{}` has unseen level `{label}`",
                                enc.column
                            )))
                        }
                    }
                }
            }
        }
        offset += enc.width();
    }
    Ok(out)
}

fn passthrough_matrix(x: &Dataset, names: &[String]) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(x.n_rows(), names.len());
    for (j, name) in names.iter().enumerate() {
        let v = x.require(name)?.values.as_numeric().ok_or_else(|| {
            Error::Type(format!(
                "column `{name}` is not numeric and is not a sensitive column"
            ))
        })?;
        if v.iter().any(|f| !f.is_finite()) {
            return Err(Error::Data(format!(
                "column `{name}` has non-finite values"
            )));
        }
        out.set_column(j, &nalgebra::DVector::from_column_slice(v));
    }
    Ok(out)
}

fn center(s: &DMatrix<f64>, means: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] - means[j])
}

/// Minimum-norm solution of `min ||b - a x||_F` through a truncated SVD.
fn min_norm_lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Ok(DMatrix::zeros(a.ncols(), b.ncols()));
    }
    // Pseudo-inverse of the triangular QR factor.
    let qr = a.clone().qr();
    let rhs = qr.q().transpose() * b;
    let svd = qr.r().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return Ok(DMatrix::zeros(a.ncols(), b.ncols()));
    }
    let cutoff = sigma_max * 1e-10;
    svd.solve(&rhs, cutoff)
        .map_err(|e| Error::Data(format!("least squares failed: {e}")))
}
