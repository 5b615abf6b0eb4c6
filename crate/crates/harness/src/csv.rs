//! Sweep results as CSV, bit-stable across re-emission.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::sweep::{replicate_seed, SweepResult};

pub const CSV_HEADER: &str = "theta,p_n,p_o,sa_delay,replicates,virality,mean_final_gc,std_final_gc";

/// Render the aggregate table: one row per grid cell, sorted by
/// `(theta, p_n)`, floats fixed at six decimals, `sa_delay` empty for
/// unsupervised sweeps.
pub fn render_csv(result: &SweepResult) -> String {
    let mut rows: Vec<_> = result.rows.iter().collect();
    rows.sort_by(|a, b| {
        a.theta
            .total_cmp(&b.theta)
            .then(a.p_n.total_cmp(&b.p_n))
    });
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let delay = row.sa_delay.map(|d| d.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{:.6}\n",
            row.theta,
            row.p_n,
            row.p_o,
            delay,
            row.replicates,
            row.virality,
            row.mean_final_gc,
            row.std_final_gc
        ));
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(result))
        .with_context(|| format!("writing sweep CSV to {}", path.display()))
}

pub fn emit_csv_to(result: &SweepResult, mut writer: impl Write) -> Result<()> {
    writer
        .write_all(render_csv(result).as_bytes())
        .context("writing sweep CSV")
}

/// Per-run debug table: every replicate's derived seed and final cascade,
/// from which the aggregate virality column can be recomputed exactly.
pub fn render_per_run_csv(result: &SweepResult) -> String {
    let mut out = String::from("theta,p_n,replicate,seed,final_gc\n");
    for row in &result.rows {
        for (rep, gc) in row.final_gcs.iter().enumerate() {
            let seed = replicate_seed(result.master_seed, row.theta_idx, row.p_n_idx, rep as u32);
            out.push_str(&format!(
                "{:.6},{:.6},{},{},{:.6}\n",
                row.theta, row.p_n, rep, seed, gc
            ));
        }
    }
    out
}

pub fn emit_per_run_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_per_run_csv(result))
        .with_context(|| format!("writing per-run CSV to {}", path.display()))
}

/// One parsed aggregate row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub theta: f64,
    pub p_n: f64,
    pub p_o: f64,
    pub sa_delay: Option<u32>,
    pub replicates: u32,
    pub virality: f64,
    pub mean_final_gc: f64,
    pub std_final_gc: f64,
}

/// Parse an aggregate CSV, reporting the offending line on malformed input.
pub fn parse_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading CSV {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => bail!(
            "{}:1: unexpected header {header:?}, want {CSV_HEADER:?}",
            path.display()
        ),
        None => bail!("{}:1: empty file", path.display()),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!(
                "{}:{lineno}: expected 8 fields, found {}",
                path.display(),
                fields.len()
            );
        }
        let num = |slot: usize, name: &str| -> Result<f64> {
            fields[slot].parse::<f64>().with_context(|| {
                format!("{}:{lineno}: bad {name} value {:?}", path.display(), fields[slot])
            })
        };
        let sa_delay = if fields[3].is_empty() {
            None
        } else {
            Some(fields[3].parse::<u32>().with_context(|| {
                format!("{}:{lineno}: bad sa_delay value {:?}", path.display(), fields[3])
            })?)
        };
        rows.push(CsvRow {
            theta: num(0, "theta")?,
            p_n: num(1, "p_n")?,
            p_o: num(2, "p_o")?,
            sa_delay,
            replicates: fields[4].parse::<u32>().with_context(|| {
                format!("{}:{lineno}: bad replicates value {:?}", path.display(), fields[4])
            })?,
            virality: num(5, "virality")?,
            mean_final_gc: num(6, "mean_final_gc")?,
            std_final_gc: num(7, "std_final_gc")?,
        });
    }
    Ok(rows)
}
