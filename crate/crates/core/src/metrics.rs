//! Observables of a running simulation and the cross-run virality statistic.

use crate::config::{MiaMethod, SimConfig};
use crate::error::{Error, Result};
use crate::round_half_up;
use crate::sim::Simulation;

/// The supervisor's state triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Fraction of A-active agents.
    pub gc: f64,
    /// Mean opinion metric over all agents.
    pub gom: f64,
    /// A-active share among the top-centrality nodes.
    pub mia: f64,
}

impl Observation {
    pub fn as_array(&self) -> [f64; 3] {
        [self.gc, self.gom, self.mia]
    }
}

/// Parameter tuple identifying one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigDigest {
    pub theta: f64,
    pub p_n: f64,
    pub p_o: f64,
    pub sa_delay: Option<u32>,
    pub seed: u64,
}

/// Outcome of one run: the cascade trace plus the identifying parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub final_gc: f64,
    /// One entry per tick, including the initial state.
    pub gc_trace: Vec<f64>,
    pub digest: ConfigDigest,
}

/// Fraction of A-active agents.
pub fn global_cascade(sim: &Simulation) -> f64 {
    let active = sim.agents().iter().filter(|a| a.is_a_active).count();
    active as f64 / sim.agents().len() as f64
}

/// Mean opinion metric over the whole population.
pub fn global_opinion_metric(sim: &Simulation) -> f64 {
    let total: f64 = sim.agents().iter().map(|a| a.om).sum();
    total / sim.agents().len() as f64
}

/// A-active share among the top `round(fraction x N)` nodes by the chosen
/// centrality (ties by ascending id). An empty selection yields 0.
pub fn most_influent_a(sim: &Simulation, method: MiaMethod, fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "node fraction {fraction} outside [0, 1]"
        )));
    }
    let k = round_half_up(sim.agents().len() as f64 * fraction);
    if k == 0 {
        return Ok(0.0);
    }
    let top = &sim.ranked(method.as_centrality())[..k];
    let active = top
        .iter()
        .filter(|&&i| sim.agents()[i].is_a_active)
        .count();
    Ok(active as f64 / k as f64)
}

/// The full state triple using the configured MIA centrality and node range.
pub fn observe(sim: &Simulation) -> Result<Observation> {
    Ok(Observation {
        gc: global_cascade(sim),
        gom: global_opinion_metric(sim),
        mia: most_influent_a(sim, sim.config().mia_method, sim.config().node_range)?,
    })
}

/// Fraction of runs whose final cascade strictly exceeds one half.
pub fn virality(records: &[RunRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let viral = records.iter().filter(|r| r.final_gc > 0.5).count();
    Ok(viral as f64 / records.len() as f64)
}

/// Run a simulation to completion with no supervisor, recording the cascade
/// at every tick.
pub fn run_baseline(config: &SimConfig) -> Result<(RunRecord, Simulation)> {
    let mut sim = Simulation::new(config.clone())?;
    let total = config.total_ticks;
    let mut trace = Vec::with_capacity(total as usize + 1);
    trace.push(global_cascade(&sim));
    for _ in 0..total {
        sim.tick();
        trace.push(global_cascade(&sim));
    }
    let record = RunRecord {
        final_gc: *trace.last().unwrap(),
        gc_trace: trace,
        digest: ConfigDigest {
            theta: config.theta,
            p_n: config.p_n,
            p_o: config.p_o,
            sa_delay: None,
            seed: config.seed,
        },
    };
    Ok((record, sim))
}
