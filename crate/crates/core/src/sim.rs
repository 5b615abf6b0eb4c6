//! Simulation state and the per-tick opinion dynamics.
//!
//! A `Simulation` owns everything about one run: the network, the agent
//! population, its random stream and the parameter record. Construction
//! proceeds in four stages (topology, echo chamber, opinion seeding,
//! threshold assignment); afterwards `tick` advances the synchronous update
//! loop and the `apply_*` methods implement the supervisor interventions on
//! basic agents.
//!
//! Determinism contract: identical `(SimConfig, seed)` produces bit-identical
//! agent state at every tick. All randomness flows through the single owned
//! stream and every iteration that consumes it runs in ascending node order.

use std::cell::OnceCell;

use rand::distributions::OpenClosed01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::centrality::{self, Centrality};
use crate::config::{NetworkKind, SimConfig};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, NodeId};
use crate::round_half_up;

/// Band boundaries of the opinion metric.
pub const OPINION_B_MAX: f64 = 0.33;
pub const OPINION_A_MIN: f64 = 0.66;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Opinion {
    A,
    B,
    C,
}

impl Opinion {
    /// Band lookup for an already-validated metric.
    fn from_om(om: f64) -> Opinion {
        if om <= OPINION_B_MAX {
            Opinion::B
        } else if om < OPINION_A_MIN {
            Opinion::C
        } else {
            Opinion::A
        }
    }
}

/// Map an opinion metric to its band: B up to 0.33, A from 0.66, C between.
pub fn classify_opinion(om: f64) -> Result<Opinion> {
    if !om.is_finite() || !(0.0..=1.0).contains(&om) {
        return Err(Error::OpinionOutOfRange(om));
    }
    Ok(Opinion::from_om(om))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    TowardA,
    TowardB,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub om: f64,
    pub theta: f64,
    pub is_in_cluster: bool,
    pub is_a_active: bool,
    pub is_b_active: bool,
    pub warning: bool,
    pub reiterate_remaining: u32,
    pub is_opinion_b_static: bool,
}

impl AgentState {
    fn neutral(om: f64) -> AgentState {
        let mut agent = AgentState {
            om: 0.0,
            theta: 0.0,
            is_in_cluster: false,
            is_a_active: false,
            is_b_active: false,
            warning: false,
            reiterate_remaining: 0,
            is_opinion_b_static: false,
        };
        agent.set_om(om);
        agent
    }

    /// Clamp the metric into [0, 1] and recompute the activity flags from
    /// its band, the single place where flag/band consistency is enforced.
    pub fn set_om(&mut self, om: f64) {
        self.om = om.clamp(0.0, 1.0);
        let band = Opinion::from_om(self.om);
        self.is_a_active = band == Opinion::A;
        self.is_b_active = band == Opinion::B;
    }

    pub fn opinion(&self) -> Opinion {
        Opinion::from_om(self.om)
    }
}

#[derive(Debug, Clone, Default)]
struct RankCache {
    degree: OnceCell<RankedScores>,
    betweenness: OnceCell<RankedScores>,
    pagerank: OnceCell<RankedScores>,
}

#[derive(Debug, Clone)]
struct RankedScores {
    scores: Vec<f64>,
    ranked: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    graph: Graph,
    agents: Vec<AgentState>,
    tick: u32,
    config: SimConfig,
    rng: ChaCha8Rng,
    chamber: Vec<NodeId>,
    skipped_rewires: u32,
    // The topology is frozen after construction, so centrality ranks are
    // computed once per run.
    ranks: RankCache,
}

impl Simulation {
    /// Build a ready-to-run simulation: topology, echo chamber, seeded
    /// opinions, thresholds.
    pub fn new(config: SimConfig) -> Result<Simulation> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = config.nb_nodes as usize;
        let graph = match config.network {
            NetworkKind::ErdosRenyi => graph::gen_erdos_renyi(n, config.k_value as f64, &mut rng)?,
            NetworkKind::SmallWorld => {
                graph::gen_small_world(n, config.k_value as usize, SMALL_WORLD_REWIRE, &mut rng)?
            }
            NetworkKind::PreferentialAttachment => {
                graph::gen_preferential_attachment(n, config.attachment_edges(), &mut rng)?
            }
        };
        let mut sim = Simulation::from_parts(graph, config, rng);
        sim.build_echo_chamber()?;
        sim.seed_opinions()?;
        sim.assign_thresholds()?;
        Ok(sim)
    }

    /// Wrap an existing topology without building the chamber or seeding
    /// opinions; every agent starts neutral with the configured metric.
    pub fn from_parts(graph: Graph, config: SimConfig, rng: ChaCha8Rng) -> Simulation {
        let agents = vec![
            AgentState::neutral(config.initial_opinion_metric);
            graph.node_count()
        ];
        Simulation {
            graph,
            agents,
            tick: 0,
            config,
            rng,
            chamber: Vec::new(),
            skipped_rewires: 0,
            ranks: RankCache::default(),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Direct agent access for tests and custom setups. Callers are
    /// responsible for keeping flags consistent; prefer `AgentState::set_om`.
    pub fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn ticks_elapsed(&self) -> u32 {
        self.tick
    }

    pub fn chamber(&self) -> &[NodeId] {
        &self.chamber
    }

    pub fn skipped_rewires(&self) -> u32 {
        self.skipped_rewires
    }

    /// Edges with exactly one endpoint inside the echo chamber.
    pub fn boundary_edge_count(&self) -> usize {
        self.graph
            .edges()
            .iter()
            .filter(|&&(a, b)| self.agents[a].is_in_cluster != self.agents[b].is_in_cluster)
            .count()
    }

    /// Flag `round(N x ECF)` random nodes as the echo chamber, then sample
    /// `round(E x P_N)` edges; every sampled edge that crosses the chamber
    /// boundary is deleted and replaced by an edge from its chamber endpoint
    /// to a uniformly chosen chamber node it is not yet adjacent to. Edge
    /// count is preserved; impossible replacements are skipped and counted.
    pub fn build_echo_chamber(&mut self) -> Result<()> {
        let n = self.graph.node_count();
        let chamber_size = round_half_up(n as f64 * self.config.echo_chamber_fraction);
        let mut picks = rand::seq::index::sample(&mut self.rng, n, chamber_size).into_vec();
        picks.sort_unstable();
        for &node in &picks {
            self.agents[node].is_in_cluster = true;
        }
        self.chamber = picks;

        let edge_total = self.graph.edge_count();
        let pool_size = round_half_up(edge_total as f64 * self.config.p_n);
        let sampled = rand::seq::index::sample(&mut self.rng, edge_total, pool_size).into_vec();
        for idx in sampled {
            let (a, b) = self.graph.edges()[idx];
            let a_in = self.agents[a].is_in_cluster;
            let b_in = self.agents[b].is_in_cluster;
            if a_in == b_in {
                continue;
            }
            let anchor = if a_in { a } else { b };
            let candidates: Vec<NodeId> = self
                .chamber
                .iter()
                .copied()
                .filter(|&w| w != anchor && !self.graph.has_edge(anchor, w))
                .collect();
            if candidates.is_empty() {
                self.skipped_rewires += 1;
                log::debug!(
                    "skipping rewire of edge ({a}, {b}): chamber node {anchor} \
                     already adjacent to the whole chamber"
                );
                continue;
            }
            let target = candidates[self.rng.gen_range(0..candidates.len())];
            self.graph.replace_edge_at(idx, anchor, target);
        }
        Ok(())
    }

    /// Activate one random chamber node plus its neighborhood for the inside
    /// opinion, then mirror for the outside opinion. Overlaps keep A inside
    /// the chamber and B outside it.
    pub fn seed_opinions(&mut self) -> Result<()> {
        if self.chamber.is_empty() {
            return Err(Error::EmptyChamber);
        }
        let outside: Vec<NodeId> = (0..self.graph.node_count())
            .filter(|&i| !self.agents[i].is_in_cluster)
            .collect();
        if outside.is_empty() {
            return Err(Error::NoOutsideNodes);
        }

        let init_a = self.chamber[self.rng.gen_range(0..self.chamber.len())];
        self.activate(init_a, Direction::TowardA);
        let neighbors: Vec<NodeId> = self.graph.neighbors(init_a).to_vec();
        for nb in neighbors {
            self.activate(nb, Direction::TowardA);
        }

        let init_b = outside[self.rng.gen_range(0..outside.len())];
        self.activate(init_b, Direction::TowardB);
        let neighbors: Vec<NodeId> = self.graph.neighbors(init_b).to_vec();
        for nb in neighbors {
            if self.agents[nb].is_in_cluster && self.agents[nb].is_a_active {
                continue;
            }
            self.activate(nb, Direction::TowardB);
        }
        Ok(())
    }

    fn activate(&mut self, node: NodeId, side: Direction) {
        let om = match side {
            Direction::TowardA => self.rng.gen_range(OPINION_A_MIN..=1.0),
            Direction::TowardB => self.rng.gen_range(0.0..=OPINION_B_MAX),
        };
        self.agents[node].set_om(om);
    }

    /// Chamber nodes get the lowered threshold `theta - p_o`, everyone else
    /// keeps `theta`.
    pub fn assign_thresholds(&mut self) -> Result<()> {
        let inside = self.config.theta - self.config.p_o;
        if inside < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "chamber threshold {inside} is negative"
            )));
        }
        for agent in &mut self.agents {
            agent.theta = if agent.is_in_cluster {
                inside
            } else {
                self.config.theta
            };
        }
        Ok(())
    }

    /// One opinion nudge on `node`. Statically locked agents ignore it
    /// entirely. Every other attempt consumes one gate draw so warned and
    /// unwarned populations advance the same random stream; the draw only
    /// blocks the update when the warning flag is set and exceeds the
    /// configured impact.
    pub fn influence_attempt(&mut self, node: NodeId, direction: Direction) {
        if self.agents[node].is_opinion_b_static {
            return;
        }
        let gate: f64 = self.rng.sample(OpenClosed01);
        if self.agents[node].warning && gate > self.config.warning_impact {
            return;
        }
        let step = match direction {
            Direction::TowardA => self.config.opinion_metric_step,
            Direction::TowardB => -self.config.opinion_metric_step,
        };
        let om = self.agents[node].om + step;
        self.agents[node].set_om(om);
    }

    /// One synchronous round: every agent compares its neighbor activity
    /// fractions (taken from the pre-tick snapshot) against its threshold,
    /// then pending reiterate exposures are processed.
    pub fn tick(&mut self) {
        debug_assert!(
            self.tick < self.config.total_ticks,
            "ticking past total-ticks"
        );
        let n = self.graph.node_count();
        let a_active: Vec<bool> = self.agents.iter().map(|a| a.is_a_active).collect();
        let b_active: Vec<bool> = self.agents.iter().map(|a| a.is_b_active).collect();

        for i in 0..n {
            let deg = self.graph.degree(i);
            if deg == 0 {
                continue;
            }
            let mut a_count = 0usize;
            let mut b_count = 0usize;
            for &nb in self.graph.neighbors(i) {
                a_count += a_active[nb] as usize;
                b_count += b_active[nb] as usize;
            }
            let fa = a_count as f64 / deg as f64;
            let fb = b_count as f64 / deg as f64;
            let theta = self.agents[i].theta;
            let direction = match (fa > theta, fb > theta) {
                (true, false) => Some(Direction::TowardA),
                (false, true) => Some(Direction::TowardB),
                // Both sides above threshold: the larger fraction wins,
                // exact ties resolve toward B.
                (true, true) => Some(if fa > fb {
                    Direction::TowardA
                } else {
                    Direction::TowardB
                }),
                (false, false) => None,
            };
            if let Some(direction) = direction {
                self.influence_attempt(i, direction);
            }
        }

        for i in 0..n {
            if self.agents[i].reiterate_remaining == 0 {
                continue;
            }
            let draw: f64 = self.rng.gen();
            if draw < self.agents[i].theta {
                self.influence_attempt(i, Direction::TowardB);
            }
            self.agents[i].reiterate_remaining -= 1;
            if self.agents[i].is_b_active {
                // Conversion ends the exposure early.
                self.agents[i].reiterate_remaining = 0;
            }
        }

        self.tick += 1;
    }

    pub fn advance(&mut self, ticks: u32) {
        for _ in 0..ticks {
            self.tick();
        }
    }

    /// Persistent warning flag on every agent.
    pub fn apply_global_warning(&mut self) {
        for agent in &mut self.agents {
            agent.warning = true;
        }
    }

    /// Persistent warning flag on the given agents.
    pub fn apply_warning(&mut self, targets: &[NodeId]) {
        for &t in targets {
            self.agents[t].warning = true;
        }
    }

    /// Queue one tick of outside-opinion exposure per neighbor on each
    /// target.
    pub fn apply_reiterate(&mut self, targets: &[NodeId]) {
        for &t in targets {
            self.agents[t].reiterate_remaining = self.graph.degree(t) as u32;
        }
    }

    /// Lock the `round(fraction x N)` highest-ranked nodes under `method` to
    /// the outside opinion for the rest of the run.
    pub fn apply_forcing(&mut self, method: Centrality, fraction: f64) {
        let k = round_half_up(self.graph.node_count() as f64 * fraction);
        let picks: Vec<NodeId> = self.ranked(method)[..k].to_vec();
        for node in picks {
            self.agents[node].set_om(0.0);
            self.agents[node].is_opinion_b_static = true;
        }
    }

    /// Centrality scores for `method`, computed once per run.
    pub fn centrality_scores(&self, method: Centrality) -> &[f64] {
        &self.rank_entry(method).scores
    }

    /// All nodes ordered by descending `method` score, ties by ascending id.
    pub fn ranked(&self, method: Centrality) -> &[NodeId] {
        &self.rank_entry(method).ranked
    }

    fn rank_entry(&self, method: Centrality) -> &RankedScores {
        let cell = match method {
            Centrality::Degree => &self.ranks.degree,
            Centrality::Betweenness => &self.ranks.betweenness,
            Centrality::Pagerank => &self.ranks.pagerank,
        };
        cell.get_or_init(|| {
            let scores = match method {
                Centrality::Degree => centrality::degree(&self.graph).scores,
                Centrality::Betweenness => centrality::betweenness(&self.graph).scores,
                Centrality::Pagerank => centrality::pagerank(
                    &self.graph,
                    centrality::PAGERANK_DAMPING,
                    centrality::PAGERANK_TOL,
                    centrality::PAGERANK_MAX_ITER,
                )
                .expect("default damping is valid")
                .scores,
            };
            let ranked = centrality::ranked_nodes(&scores);
            RankedScores { scores, ranked }
        })
    }

    /// The top `round(fraction x N)` nodes under `method`.
    pub fn top_nodes(&self, method: Centrality, fraction: f64) -> Vec<NodeId> {
        let k = round_half_up(self.graph.node_count() as f64 * fraction);
        self.ranked(method)[..k].to_vec()
    }

    /// The top `round(fraction x N)` currently A-active nodes under
    /// `method`; fewer if not enough agents are A-active.
    pub fn top_a_active(&self, method: Centrality, fraction: f64) -> Vec<NodeId> {
        let k = round_half_up(self.graph.node_count() as f64 * fraction);
        self.ranked(method)
            .iter()
            .copied()
            .filter(|&i| self.agents[i].is_a_active)
            .take(k)
            .collect()
    }
}

/// Rewire probability used when the configured topology is small-world; the
/// parameter record has no attribute for it.
pub const SMALL_WORLD_REWIRE: f64 = 0.1;
