use std::io::{Read, Write};

use super::{Column, Dataset, NamedColumn, Role, RoleMap};
use crate::error::{Error, Result};

/// Reads a comma-separated table with a header row.
///
/// Columns named in `role_map` take the given role; all others are loaded as
/// features. Ground-truth, prediction and score columns must be numeric,
/// sensitive columns are always kept as strings, and feature columns are
/// numeric when every cell parses as a number. Rows are counted from 1 (the
/// first row after the header).
pub fn load_table<R: Read>(source: R, role_map: &RoleMap) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Parse {
            row: 0,
            message: "missing header row".into(),
        });
    }
    for name in role_map.keys() {
        if !header.contains(name) {
            return Err(Error::Schema(format!("missing column `{name}`")));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.to_string());
        }
    }

    let mut columns = Vec::with_capacity(header.len());
    for (name, raw) in header.into_iter().zip(cells) {
        let role = role_map.get(&name).copied().unwrap_or(Role::Feature);
        if let Some(i) = raw.iter().position(|c| c.trim().is_empty()) {
            return Err(Error::Value {
                column: name,
                row: i + 1,
                message: "missing value".into(),
            });
        }
        let values = match role {
            Role::Sensitive => Column::Categorical(raw),
            Role::Feature => match parse_all(&raw) {
                Ok(v) => Column::Numeric(v),
                Err(_) => Column::Categorical(raw),
            },
            Role::YTrue | Role::YPred | Role::Score => {
                let v = parse_all(&raw).map_err(|i| Error::Value {
                    column: name.clone(),
                    row: i + 1,
                    message: format!("`{}` is not a number", raw[i]),
                })?;
                if role != Role::Score {
                    super::check_binary(&name, &v)?;
                }
                Column::Numeric(v)
            }
        };
        columns.push(NamedColumn::new(name, role, values));
    }
    Dataset::new(columns)
}

fn parse_all(raw: &[String]) -> std::result::Result<Vec<f64>, usize> {
    raw.iter()
        .enumerate()
        .map(|(i, s)| s.trim().parse::<f64>().map_err(|_| i))
        .collect()
}

/// Writes the dataset as CSV; numbers use their shortest round-trip form.
pub fn write_csv<W: Write>(d: &Dataset, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(d.column_names()).map_err(io)?;
    for row in 0..d.n_rows() {
        writer
            .write_record(d.columns().iter().map(|c| c.values.cell(row)))
            .map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}
