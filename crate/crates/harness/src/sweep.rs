//! Replicated sweeps over the (theta, p_n) grid.
//!
//! Every replicate's seed derives from the master seed and its
//! `(theta index, p_n index, replicate index)` coordinates, so results never
//! depend on execution order or worker count, and extending a grid never
//! perturbs existing cells.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use viralsim_core::config::SimConfig;
use viralsim_core::metrics;
use viralsim_core::seed;
use viralsim_core::superagent::{self, Checkpoint};

/// Default activation thresholds swept by the command-line tools.
pub const DEFAULT_THETAS: [f64; 3] = [0.270, 0.342, 0.414];

/// p_n from 0 to 1 in steps of 0.1.
pub fn default_p_n_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub theta_values: Vec<f64>,
    pub p_n_grid: Vec<f64>,
    pub p_o: f64,
    /// Supervisor cadence; `None` runs without a supervisor.
    pub sa_delay: Option<u32>,
    pub replicates: u32,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn baseline(theta_values: Vec<f64>, p_o: f64, replicates: u32, master_seed: u64) -> Self {
        SweepSpec {
            theta_values,
            p_n_grid: default_p_n_grid(),
            p_o,
            sa_delay: None,
            replicates,
            master_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.theta_values.is_empty() || self.p_n_grid.is_empty() {
            bail!("sweep grids must be non-empty");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        Ok(())
    }
}

/// Aggregated outcome of one grid cell, plus the per-run final cascades the
/// aggregate was computed from.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub theta: f64,
    pub p_n: f64,
    pub p_o: f64,
    pub sa_delay: Option<u32>,
    pub replicates: u32,
    pub virality: f64,
    pub mean_final_gc: f64,
    pub std_final_gc: f64,
    pub theta_idx: usize,
    pub p_n_idx: usize,
    pub final_gcs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<GridRow>,
    pub master_seed: u64,
}

impl SweepResult {
    /// Virality at one grid cell; panics if the cell is absent.
    pub fn virality_at(&self, theta: f64, p_n: f64) -> f64 {
        self.rows
            .iter()
            .find(|r| (r.theta - theta).abs() < 1e-12 && (r.p_n - p_n).abs() < 1e-12)
            .map(|r| r.virality)
            .unwrap_or_else(|| panic!("no row for theta={theta}, p_n={p_n}"))
    }

    pub fn mean_virality(&self) -> f64 {
        self.rows.iter().map(|r| r.virality).sum::<f64>() / self.rows.len() as f64
    }
}

/// The seed for replicate `rep` of grid cell `(ti, pi)`.
pub fn replicate_seed(master: u64, theta_idx: usize, p_n_idx: usize, rep: u32) -> u64 {
    seed::derive(
        master,
        &[theta_idx as u64, p_n_idx as u64, u64::from(rep)],
    )
}

fn run_sweep<F>(base: &SimConfig, spec: &SweepSpec, run: F) -> Result<SweepResult>
where
    F: Fn(&SimConfig) -> viralsim_core::Result<f64> + Sync,
{
    spec.validate()?;

    // Materialize and validate every cell configuration before any run.
    let mut cells = Vec::new();
    for (ti, &theta) in spec.theta_values.iter().enumerate() {
        for (pi, &p_n) in spec.p_n_grid.iter().enumerate() {
            let mut cfg = base.clone();
            cfg.theta = theta;
            cfg.p_n = p_n;
            cfg.p_o = spec.p_o;
            if let Some(delay) = spec.sa_delay {
                cfg.sa_delay = delay;
            }
            cfg.validate()
                .with_context(|| format!("grid cell theta={theta}, p_n={p_n}"))?;
            cells.push((ti, pi, cfg));
        }
    }

    let replicates = spec.replicates;
    let tasks: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|cell| (0..replicates).map(move |rep| (cell, rep)))
        .collect();
    let finals: Vec<f64> = tasks
        .par_iter()
        .map(|&(cell, rep)| {
            let (ti, pi, template) = &cells[cell];
            let mut cfg = template.clone();
            cfg.seed = replicate_seed(spec.master_seed, *ti, *pi, rep);
            run(&cfg).map_err(anyhow::Error::from)
        })
        .collect::<Result<Vec<f64>>>()?;

    let rows = cells
        .iter()
        .enumerate()
        .map(|(cell, (ti, pi, cfg))| {
            let slice =
                &finals[cell * replicates as usize..(cell + 1) * replicates as usize];
            let viral = slice.iter().filter(|&&gc| gc > 0.5).count();
            let mean = slice.iter().sum::<f64>() / slice.len() as f64;
            let var =
                slice.iter().map(|gc| (gc - mean).powi(2)).sum::<f64>() / slice.len() as f64;
            GridRow {
                theta: cfg.theta,
                p_n: cfg.p_n,
                p_o: cfg.p_o,
                sa_delay: spec.sa_delay,
                replicates,
                virality: viral as f64 / f64::from(replicates),
                mean_final_gc: mean,
                std_final_gc: var.sqrt(),
                theta_idx: *ti,
                p_n_idx: *pi,
                final_gcs: slice.to_vec(),
            }
        })
        .collect();
    Ok(SweepResult {
        rows,
        master_seed: spec.master_seed,
    })
}

/// Sweep without a supervisor.
pub fn run_baseline_sweep(base: &SimConfig, spec: &SweepSpec) -> Result<SweepResult> {
    if spec.sa_delay.is_some() {
        bail!("baseline sweeps take no sa-delay");
    }
    run_sweep(base, spec, |cfg| {
        metrics::run_baseline(cfg).map(|(record, _)| record.final_gc)
    })
}

/// Sweep under the frozen greedy policy of a trained checkpoint.
pub fn run_sa_sweep(
    base: &SimConfig,
    spec: &SweepSpec,
    checkpoint: &Checkpoint,
) -> Result<SweepResult> {
    if spec.sa_delay.is_none() {
        bail!("supervised sweeps need an sa-delay");
    }
    checkpoint.network.validate_shape()?;
    let net = &checkpoint.network;
    run_sweep(base, spec, move |cfg| {
        superagent::evaluate_episode(cfg, net).map(|record| record.final_gc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_base() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.total_ticks = 30;
        cfg
    }

    fn quick_spec(replicates: u32) -> SweepSpec {
        SweepSpec {
            theta_values: vec![0.27],
            p_n_grid: vec![0.0, 0.5, 1.0],
            p_o: 0.0,
            sa_delay: None,
            replicates,
            master_seed: 7,
        }
    }

    #[test]
    fn single_replicate_virality_is_an_indicator() {
        let result = run_baseline_sweep(&quick_base(), &quick_spec(1)).unwrap();
        for row in &result.rows {
            assert!(row.virality == 0.0 || row.virality == 1.0);
        }
    }

    #[test]
    fn virality_recomputes_from_stored_finals() {
        let result = run_baseline_sweep(&quick_base(), &quick_spec(20)).unwrap();
        for row in &result.rows {
            let viral = row.final_gcs.iter().filter(|&&gc| gc > 0.5).count();
            assert_eq!(row.virality, viral as f64 / row.final_gcs.len() as f64);
            assert_eq!(row.final_gcs.len(), 20);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let base = quick_base();
        let spec = quick_spec(12);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_baseline_sweep(&base, &spec).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| run_baseline_sweep(&base, &spec).unwrap());
        for (a, b) in serial.rows.iter().zip(&parallel.rows) {
            assert_eq!(a.final_gcs, b.final_gcs);
            assert_eq!(a.virality, b.virality);
        }
    }

    #[test]
    fn invalid_cells_are_rejected_before_running() {
        let mut spec = quick_spec(5);
        spec.theta_values = vec![0.27, 2.0];
        assert!(run_baseline_sweep(&quick_base(), &spec).is_err());
    }

    #[test]
    fn replicate_seeds_ignore_grid_extensions() {
        let s = replicate_seed(42, 1, 3, 7);
        assert_eq!(s, replicate_seed(42, 1, 3, 7));
        assert_ne!(s, replicate_seed(42, 1, 3, 8));
        assert_ne!(s, replicate_seed(42, 0, 3, 7));
        assert_ne!(s, replicate_seed(43, 1, 3, 7));
    }
}
