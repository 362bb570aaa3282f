//! `budget` subcommand: inner-budget tables.

use std::io::{self, Write};

use crate::outer::{budget_row, Algorithm};

/// Writes `k, N_k` rows (plus `M_k, alpha_k/alpha` for `km_mlmc`) for
/// `k = 0, …, K−1`.
pub fn write_budget_table<W: Write>(mut w: W, algorithm: Algorithm, eta_l: f64, k_max: u64) -> crate::Result<()> {
    let io_err = |e: io::Error| crate::Error::invalid("output", e.to_string());
    if algorithm == Algorithm::KmMlmc {
        writeln!(w, "k, N_k, M_k, alpha_k/alpha").map_err(io_err)?;
    } else {
        writeln!(w, "k, N_k").map_err(io_err)?;
    }
    for k in 0..k_max {
        let (n, mlmc) = budget_row(algorithm, k, eta_l)?;
        match mlmc {
            Some(b) => writeln!(w, "{k}, {n}, {}, {}", b.draws, b.alpha_ratio),
            None => writeln!(w, "{k}, {n}"),
        }
        .map_err(io_err)?;
    }
    Ok(())
}
