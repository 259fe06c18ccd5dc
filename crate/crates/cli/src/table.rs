//! CSV output: comma separated, one header row, floats in scientific
//! notation with 12 significant digits.

use std::fmt::Write as _;

use crate::config::ExperimentConfig;
use crate::runner::{Cell, RunOutput};

/// `x` with 12 significant digits and a signed two-digit exponent,
/// e.g. `1.25000000000e-03`.
pub fn sci12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Empty => String::new(),
        Cell::Int(i) => i.to_string(),
        Cell::Float(x) => sci12(*x),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => quote(s),
    }
}

/// Writes a header and rows of cells.
pub fn write_rows(header: &[String], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.iter().map(format_cell).collect::<Vec<_>>().join(","));
    }
    out
}

/// The sweep table: point index, families, every config parameter, the
/// method columns and the error message.
pub fn render(cfg: &ExperimentConfig, run: &RunOutput) -> String {
    let mut header = vec!["point".to_string(), "code.family".to_string(), "channel.family".to_string()];
    header.extend(cfg.axes.iter().map(|a| a.name.clone()));
    header.extend(run.columns.iter().map(|c| c.to_string()));
    header.push("error".into());
    let rows: Vec<Vec<Cell>> = run
        .results
        .iter()
        .map(|r| {
            let mut row = vec![
                Cell::Int(r.point.index as i64),
                Cell::Text(r.point.code_family.clone()),
                Cell::Text(r.point.channel_family.clone()),
            ];
            row.extend(cfg.axes.iter().map(|a| r.point.get(&a.name).map(Cell::from).unwrap_or(Cell::Empty)));
            row.extend(r.values.iter().cloned());
            row.push(r.error.clone().map(Cell::Text).unwrap_or(Cell::Empty));
            row
        })
        .collect();
    write_rows(&header, &rows)
}
