//! CSV emission for campaign results.

use std::io::Write;

use anyhow::Result;
use d2dsim_core::sim::{Metrics, Scheme};

pub const CSV_HEADER: &str =
    "scheme,W,xi_db,n_levels,omega_c,omega_d,omega_total,stderr_c,stderr_d,n_topologies,seed";

/// Plain-decimal formatting with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.000000".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let prec = (5 - mag).max(0) as usize;
    format!("{:.*}", prec, x)
}

pub fn csv_row(
    scheme: Scheme,
    w: u32,
    xi_db: f64,
    n_levels: u32,
    m: &Metrics,
    seed: u64,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        scheme.label(),
        w,
        sig6(xi_db),
        n_levels,
        sig6(m.omega_c),
        sig6(m.omega_d),
        sig6(m.omega_total),
        sig6(m.stderr_c),
        sig6(m.stderr_d),
        m.n_topologies,
        seed
    )
}

/// Writes header + rows to `out` (a file path) or stdout when `None`.
pub fn write_csv(out: Option<&std::path::Path>, rows: &[String]) -> Result<()> {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
