//! CSV trace output.

use std::io::{self, Write};

pub const HEADER: &str = "k,inner_iters,cum_oracle_calls,residual,residual_bound_theorem,dist_to_solution,wall_ns";

/// One CSV line. Absent values are written as empty fields.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub k: usize,
    pub inner_iters: u64,
    pub cum_oracle_calls: u64,
    pub residual: Option<f64>,
    pub residual_bound_theorem: Option<f64>,
    pub dist_to_solution: Option<f64>,
    pub wall_ns: Option<u64>,
}

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_csv<W: Write>(mut w: W, rows: &[CsvRow]) -> io::Result<()> {
    w.write_all(HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.k,
            r.inner_iters,
            r.cum_oracle_calls,
            opt(r.residual),
            opt(r.residual_bound_theorem),
            opt(r.dist_to_solution),
            r.wall_ns.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    w.flush()
}
