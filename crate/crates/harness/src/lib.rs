//! Experiment harness: deterministic virality sweeps over the parameter
//! grid, CSV emission and standalone SVG charts.

pub mod csv;
pub mod plot;
pub mod sweep;

pub use sweep::{run_baseline_sweep, run_sa_sweep, GridRow, SweepResult, SweepSpec};
