//! Flag value syntax: field ranges `start:stop:step` and order lists
//! `2,3,N/2`.

use lmg_gmc::criticality_scan::{OrderSpec, UniformGrid};

use crate::error::{CliError, Result};

fn number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid {what} `{s}`")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("{what} must be finite, got `{s}`")));
    }
    Ok(v)
}

/// Parses `start:stop:step` into a grid with `stop` on the grid.
pub fn parse_h_range(s: &str) -> Result<UniformGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(CliError::Usage(format!(
            "field range `{s}` is not start:stop:step"
        )));
    };
    Ok(UniformGrid::new(
        number(start, "range start")?,
        number(stop, "range stop")?,
        number(step, "range step")?,
    )?)
}

pub fn parse_field(s: &str) -> Result<f64> {
    number(s, "field")
}

/// Parses a comma-separated list of orders. Repeats are dropped.
pub fn parse_orders(s: &str) -> Result<Vec<OrderSpec>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        if item.trim().is_empty() {
            continue;
        }
        let spec: OrderSpec = item
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid order `{}`", item.trim())))?;
        if !out.contains(&spec) {
            out.push(spec);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty order list".into()));
    }
    Ok(out)
}
