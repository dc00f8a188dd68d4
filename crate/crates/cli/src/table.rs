//! Numeric CSV tables: header row, Unix newlines, integer columns written
//! plainly and real columns with 17 significant digits.

use std::io::{Read, Write};

use crate::cache::format_float;
use crate::error::{CliError, Result};

const MAX_EXACT_INTEGER: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Integer,
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>, kinds: Vec<ColumnKind>) -> Self {
        assert_eq!(headers.len(), kinds.len());
        Self {
            headers,
            kinds,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Malformed {
        what: "CSV",
        message: e.to_string(),
    }
}

pub fn write_table<W: Write>(out: W, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.headers).map_err(csv_error)?;
    for row in &table.rows {
        let cells = row.iter().zip(&table.kinds).map(|(&v, kind)| match kind {
            ColumnKind::Integer => format!("{}", v as i64),
            ColumnKind::Real => format_float(v),
        });
        w.write_record(cells).map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::Malformed {
        what: "CSV",
        message: e.to_string(),
    })?;
    Ok(())
}

/// Reads a table written by [`write_table`]. A column counts as integer
/// when none of its cells has a decimal point or exponent and every value
/// is exactly representable.
pub fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let headers: Vec<String> = r
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().any(String::is_empty) {
        return Err(CliError::Malformed {
            what: "CSV",
            message: "empty header".into(),
        });
    }
    let mut integer = vec![true; headers.len()];
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error)?;
        let mut row = Vec::with_capacity(headers.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CliError::Malformed {
                what: "CSV",
                message: format!("bad number `{cell}` in column `{}`", headers[j]),
            })?;
            if cell.contains(['.', 'e', 'E']) || v.is_nan() || v.abs() > MAX_EXACT_INTEGER {
                integer[j] = false;
            }
            row.push(v);
        }
        rows.push(row);
    }
    let kinds = integer
        .into_iter()
        .map(|i| if i { ColumnKind::Integer } else { ColumnKind::Real })
        .collect();
    Ok(Table {
        headers,
        kinds,
        rows,
    })
}
