//! Simulation and training parameters, loadable from a TOML file whose keys
//! use the attribute names surfaced by the model itself (`nb-nodes`,
//! `activation-threshold`, ...). Missing keys fall back to the defaults
//! below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::centrality::Centrality;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkKind {
    #[serde(rename = "erdos-renyi", alias = "erdos_renyi")]
    ErdosRenyi,
    #[serde(rename = "small-world", alias = "small_world")]
    SmallWorld,
    #[serde(rename = "preferential-attachment", alias = "preferential_attachment")]
    PreferentialAttachment,
}

/// Centrality used for the most-influential-nodes observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MiaMethod {
    #[default]
    Betweenness,
    Degree,
}

impl MiaMethod {
    pub fn as_centrality(self) -> Centrality {
        match self {
            MiaMethod::Betweenness => Centrality::Betweenness,
            MiaMethod::Degree => Centrality::Degree,
        }
    }
}

/// Full parameter record for one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "nb-nodes")]
    pub nb_nodes: u32,
    #[serde(rename = "total-ticks")]
    pub total_ticks: u32,
    pub network: NetworkKind,
    #[serde(rename = "k-value")]
    pub k_value: u32,
    pub p_o: f64,
    pub p_n: f64,
    #[serde(rename = "initial-opinion-metric-value")]
    pub initial_opinion_metric: f64,
    #[serde(rename = "opinion-metric-step")]
    pub opinion_metric_step: f64,
    #[serde(rename = "activation-threshold")]
    pub theta: f64,
    #[serde(rename = "echo-chamber-fraction")]
    pub echo_chamber_fraction: f64,
    #[serde(rename = "node-range")]
    pub node_range: f64,
    #[serde(rename = "node-range-static-b")]
    pub node_range_static_b: f64,
    #[serde(rename = "global-warning")]
    pub global_warning: bool,
    #[serde(rename = "choose-method")]
    pub choose_method: Centrality,
    #[serde(rename = "warning-impact")]
    pub warning_impact: f64,
    #[serde(rename = "sa-delay")]
    pub sa_delay: u32,
    #[serde(rename = "mia-method")]
    pub mia_method: MiaMethod,
    pub seed: u64,
    pub training: TrainParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nb_nodes: 100,
            total_ticks: 100,
            network: NetworkKind::ErdosRenyi,
            k_value: 8,
            p_o: 0.0,
            p_n: 0.5,
            initial_opinion_metric: 0.5,
            opinion_metric_step: 0.10,
            theta: 0.270,
            echo_chamber_fraction: 0.20,
            node_range: 0.10,
            node_range_static_b: 0.05,
            global_warning: true,
            choose_method: Centrality::Degree,
            warning_impact: 0.10,
            sa_delay: 5,
            mia_method: MiaMethod::Betweenness,
            seed: 42,
            training: TrainParams::default(),
        }
    }
}

/// Q-learning hyperparameters. None of these are baked in anywhere else;
/// the values used for a training run travel with its checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainParams {
    pub episodes: u32,
    pub gamma: f64,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_interval: u32,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            episodes: 500,
            gamma: 0.95,
            learning_rate: 1e-3,
            replay_capacity: 10_000,
            batch_size: 128,
            target_sync_interval: 100,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.995,
        }
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: SimConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.nb_nodes < 2 {
            return fail(format!("nb-nodes must be at least 2, got {}", self.nb_nodes));
        }
        if self.total_ticks == 0 {
            return fail("total-ticks must be positive".into());
        }
        if self.sa_delay == 0 {
            return fail("sa-delay must be positive".into());
        }
        for (name, value) in [
            ("p_o", self.p_o),
            ("p_n", self.p_n),
            ("initial-opinion-metric-value", self.initial_opinion_metric),
            ("opinion-metric-step", self.opinion_metric_step),
            ("activation-threshold", self.theta),
            ("echo-chamber-fraction", self.echo_chamber_fraction),
            ("node-range", self.node_range),
            ("node-range-static-b", self.node_range_static_b),
            ("warning-impact", self.warning_impact),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return fail(format!("{name} must lie in [0, 1], got {value}"));
            }
        }
        if self.theta - self.p_o < 0.0 {
            return fail(format!(
                "activation-threshold ({}) minus p_o ({}) must stay non-negative",
                self.theta, self.p_o
            ));
        }
        let n = self.nb_nodes as usize;
        match self.network {
            NetworkKind::ErdosRenyi => {
                if self.k_value as usize > n - 1 {
                    return fail(format!(
                        "k-value {} exceeds the {} available neighbors",
                        self.k_value,
                        n - 1
                    ));
                }
            }
            NetworkKind::SmallWorld => {
                if self.k_value % 2 != 0 {
                    return fail(format!("k-value {} must be even for small-world", self.k_value));
                }
                if self.k_value as usize >= n {
                    return fail(format!("k-value {} must be below nb-nodes {n}", self.k_value));
                }
            }
            NetworkKind::PreferentialAttachment => {
                if self.attachment_edges() >= n {
                    return fail(format!(
                        "k-value {} implies too many attachment edges for {n} nodes",
                        self.k_value
                    ));
                }
            }
        }
        Ok(())
    }

    /// Attachment count for preferential-attachment topologies; the grown
    /// network ends up with average degree close to `k-value`.
    pub fn attachment_edges(&self) -> usize {
        ((self.k_value / 2).max(1)) as usize
    }
}
