//! Acceptance suite: every release criterion as one test, each printing a
//! PASS/FAIL line with the measured numbers.
//!
//! The quantitative sweeps run at desk scale (100 agents, 100 ticks, 300
//! replicates per grid cell) off a single frozen master seed; sweeps sharing
//! that seed are replicate-paired, which tightens the comparative checks.
//! The property criteria are exact.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viralsim_core::centrality;
use viralsim_core::config::SimConfig;
use viralsim_core::dqn::QNetwork;
use viralsim_core::graph::{gen_erdos_renyi, Graph, NodeId};
use viralsim_core::metrics::{self, Observation};
use viralsim_core::sim::{classify_opinion, Opinion, Simulation};
use viralsim_core::superagent::{
    self, reward, td_gradients, td_loss, td_targets, Action, Checkpoint, EpisodeFlags,
    FixedPolicy, Transition, ALL_ACTIONS,
};
use viralsim_harness::csv::render_csv;
use viralsim_harness::sweep::{
    default_p_n_grid, run_baseline_sweep, run_sa_sweep, SweepResult, SweepSpec,
};

const REPLICATES: u32 = 300;
const MASTER_SEED: u64 = 42;

fn base_config() -> SimConfig {
    SimConfig::default()
}

fn baseline(theta: f64, p_o: f64) -> SweepResult {
    let spec = SweepSpec::baseline(vec![theta], p_o, REPLICATES, MASTER_SEED);
    run_baseline_sweep(&base_config(), &spec).expect("baseline sweep")
}

fn supervised(theta: f64, sa_delay: u32) -> SweepResult {
    let spec = SweepSpec {
        theta_values: vec![theta],
        p_n_grid: default_p_n_grid(),
        p_o: 0.0,
        sa_delay: Some(sa_delay),
        replicates: REPLICATES,
        master_seed: MASTER_SEED,
    };
    run_sa_sweep(&base_config(), &spec, &CHECKPOINT).expect("supervised sweep")
}

static CHECKPOINT: LazyLock<Checkpoint> = LazyLock::new(|| {
    // 500 training episodes on the default parameter record.
    superagent::train(&base_config(), MASTER_SEED)
        .expect("training")
        .checkpoint
});

static BASE_027_PO0: LazyLock<SweepResult> = LazyLock::new(|| baseline(0.270, 0.0));
static BASE_0342_PO0: LazyLock<SweepResult> = LazyLock::new(|| baseline(0.342, 0.0));
static BASE_0414_PO0: LazyLock<SweepResult> = LazyLock::new(|| baseline(0.414, 0.0));
static BASE_027_PO27: LazyLock<SweepResult> = LazyLock::new(|| baseline(0.270, 0.27));
static BASE_0342_PO27: LazyLock<SweepResult> = LazyLock::new(|| baseline(0.342, 0.27));
static BASE_0414_PO27: LazyLock<SweepResult> = LazyLock::new(|| baseline(0.414, 0.27));
static SA_027_D2: LazyLock<SweepResult> = LazyLock::new(|| supervised(0.270, 2));
static SA_0342_D5: LazyLock<SweepResult> = LazyLock::new(|| supervised(0.342, 5));
static SA_0342_D4: LazyLock<SweepResult> = LazyLock::new(|| supervised(0.342, 4));
static SA_0342_D2: LazyLock<SweepResult> = LazyLock::new(|| supervised(0.342, 2));
static SA_0414_D2: LazyLock<SweepResult> = LazyLock::new(|| supervised(0.414, 2));

fn report(name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

/// Standard error of a difference of two binomial proportions at T runs.
fn binomial_se_diff(p0: f64, p1: f64, t: f64) -> f64 {
    ((p0 * (1.0 - p0) + p1 * (1.0 - p1)) / t).sqrt()
}

#[test]
fn criterion_01_baseline_high_credulity_plateau() {
    // Unsupervised, theta 0.270, p_o 0: virality at least 0.8 (tolerance
    // 0.10 at 300 replicates) on every p_n in {0.2..0.8}, then strictly
    // decreasing past 0.8.
    let sweep = &*BASE_027_PO0;
    let plateau: Vec<(f64, f64)> = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
        .iter()
        .map(|&p| (p, sweep.virality_at(0.270, p)))
        .collect();
    let plateau_ok = plateau.iter().all(|&(_, v)| v >= 0.8 - 0.10);
    let v8 = sweep.virality_at(0.270, 0.8);
    let v9 = sweep.virality_at(0.270, 0.9);
    let v10 = sweep.virality_at(0.270, 1.0);
    let tail_ok = v9 < v8 && v10 < v9;
    let detail = format!(
        "plateau {:?}, tail {v8:.3} > {v9:.3} > {v10:.3}",
        plateau
            .iter()
            .map(|&(p, v)| format!("{p:.1}:{v:.2}"))
            .collect::<Vec<_>>()
    );
    assert!(report("01 baseline plateau at theta 0.270", plateau_ok && tail_ok, &detail));
}

#[test]
fn criterion_02_baseline_low_credulity_stays_flat() {
    // Unsupervised, theta 0.414, p_o 0: virality at most 0.2 (+0.05) over
    // the whole grid.
    let sweep = &*BASE_0414_PO0;
    let max = sweep
        .rows
        .iter()
        .map(|r| r.virality)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = max <= 0.2 + 0.05;
    assert!(report(
        "02 baseline stays low at theta 0.414",
        ok,
        &format!("max virality {max:.3} <= 0.25")
    ));
}

#[test]
fn criterion_03_opinion_polarization_raises_virality() {
    // p_o 0.27 vs 0: virality not lower at any grid cell, within one
    // binomial standard error. Sweeps are replicate-paired by seed.
    let pairs = [
        (0.270, &*BASE_027_PO0, &*BASE_027_PO27),
        (0.342, &*BASE_0342_PO0, &*BASE_0342_PO27),
        (0.414, &*BASE_0414_PO0, &*BASE_0414_PO27),
    ];
    let mut failures = Vec::new();
    for (theta, po0, po27) in pairs {
        for &p_n in &default_p_n_grid() {
            let v0 = po0.virality_at(theta, p_n);
            let v27 = po27.virality_at(theta, p_n);
            let se = binomial_se_diff(v0, v27, f64::from(REPLICATES));
            if v27 < v0 - se {
                failures.push(format!("theta {theta} p_n {p_n}: {v27:.3} < {v0:.3} - {se:.3}"));
            }
        }
    }
    let ok = failures.is_empty();
    assert!(report(
        "03 higher p_o never lowers virality",
        ok,
        &if ok {
            "all 33 grid cells within one standard error".to_string()
        } else {
            failures.join("; ")
        }
    ));
}

#[test]
fn criterion_04_trained_agent_contains_high_credulity_spread() {
    // Trained policy, theta 0.270, acting every 2 ticks: grid-mean virality
    // below one half.
    let mean = SA_027_D2.mean_virality();
    let ok = mean < 0.5;
    assert!(report(
        "04 supervised mean virality at theta 0.270, cadence 2",
        ok,
        &format!("mean {mean:.3} < 0.5")
    ));
}

#[test]
fn criterion_05_more_frequent_action_is_at_least_as_effective() {
    // theta 0.342: grid-mean virality non-increasing as the cadence
    // tightens, each comparison within one standard error of the means.
    let t = f64::from(REPLICATES);
    let mean_and_se = |sweep: &SweepResult| {
        let mean = sweep.mean_virality();
        let var: f64 = sweep
            .rows
            .iter()
            .map(|r| r.virality * (1.0 - r.virality) / t)
            .sum::<f64>()
            / (sweep.rows.len() as f64).powi(2);
        (mean, var)
    };
    let (m2, var2) = mean_and_se(&SA_0342_D2);
    let (m4, var4) = mean_and_se(&SA_0342_D4);
    let (m5, var5) = mean_and_se(&SA_0342_D5);
    let ok = m2 <= m4 + (var2 + var4).sqrt() && m4 <= m5 + (var4 + var5).sqrt();
    assert!(report(
        "05 cadence monotonicity at theta 0.342",
        ok,
        &format!("means: every-2 {m2:.3} <= every-4 {m4:.3} <= every-5 {m5:.3}")
    ));
}

#[test]
fn criterion_06_low_credulity_needs_no_supervision() {
    // theta 0.414: the supervised profile stays within 0.05 of the
    // unsupervised one at every grid cell (seed-paired sweeps).
    let mut worst: (f64, f64) = (0.0, 0.0);
    for &p_n in &default_p_n_grid() {
        let diff = (SA_0414_D2.virality_at(0.414, p_n) - BASE_0414_PO0.virality_at(0.414, p_n))
            .abs();
        if diff > worst.1 {
            worst = (p_n, diff);
        }
    }
    let ok = worst.1 <= 0.05;
    assert!(report(
        "06 supervision is a no-op at theta 0.414",
        ok,
        &format!("max |supervised - baseline| = {:.3} at p_n {:.1}", worst.1, worst.0)
    ));
}

#[test]
fn criterion_07_sweep_csv_is_deterministic_across_worker_counts() {
    let base = base_config();
    let spec = SweepSpec {
        theta_values: vec![0.270, 0.342],
        p_n_grid: vec![0.0, 0.3, 0.6, 1.0],
        p_o: 0.0,
        sa_delay: None,
        replicates: 25,
        master_seed: 1234,
    };
    let mut renders = Vec::new();
    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let result = pool.install(|| run_baseline_sweep(&base, &spec).unwrap());
        renders.push(render_csv(&result));
    }
    let ok = renders[0] == renders[1] && !renders[0].is_empty();
    assert!(report(
        "07 worker-count independence",
        ok,
        "serial and 4-thread sweeps rendered byte-identical CSV"
    ));
}

/// Independent decision-table reward (distinct from the shipped formula).
fn reward_oracle(ar: f64, aw: f64, action: Action, flags: &EpisodeFlags, gc: f64) -> f64 {
    let repeat = match action {
        Action::Warning => flags.warning_done,
        Action::Forcing => flags.forcing_done,
        _ => false,
    };
    if repeat {
        return if gc > 0.5 { 0.0 } else { 1.0 };
    }
    if ar <= 0.0 {
        1.0 + aw * 0.5 - ar
    } else {
        aw * 0.5 - ar
    }
}

#[test]
fn criterion_08_reward_matches_table_oracle() {
    let flag_sets = [
        (false, false),
        (true, false),
        (false, true),
        (true, true),
    ];
    let mut points = 0usize;
    let mut mismatches = 0usize;
    for i in 0..10 {
        let ar = -0.45 + 0.1 * i as f64;
        for aw in [0.5, 2.0, 4.0, 50.0, 200.0] {
            for gc in [0.0, 0.3, 0.5, 0.51, 1.0] {
                for (w, f) in flag_sets {
                    let flags = EpisodeFlags {
                        warning_done: w,
                        forcing_done: f,
                    };
                    points += 1;
                    for action in ALL_ACTIONS {
                        if reward(ar, aw, action, &flags, gc)
                            != reward_oracle(ar, aw, action, &flags, gc)
                        {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    let ok = mismatches == 0 && points == 1000;
    assert!(report(
        "08 reward oracle",
        ok,
        &format!("{points} grid points, {mismatches} mismatches")
    ));
}

#[test]
fn criterion_09_gradients_match_central_differences() {
    let mut worst: f64 = 0.0;
    for draw in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + draw);
        let net = QNetwork::random(&mut rng);
        let target_net = QNetwork::random(&mut rng);
        let batch: Vec<Transition> = (0..5)
            .map(|_| Transition {
                state: Observation {
                    gc: rng.gen(),
                    gom: rng.gen(),
                    mia: rng.gen(),
                },
                action: Action::from_index(rng.gen_range(0..4)),
                reward: rng.gen_range(-1.0..4.0),
                next_state: Observation {
                    gc: rng.gen(),
                    gom: rng.gen(),
                    mia: rng.gen(),
                },
                terminal: rng.gen_bool(0.2),
            })
            .collect();
        let targets = td_targets(&target_net, &batch, 0.95);
        let analytic = td_gradients(&net, &batch, &targets).0.flatten();

        let h = 1e-5;
        let mut numeric = Vec::with_capacity(analytic.len());
        let mut work = net.clone();
        for layer in 0..work.layers.len() {
            let w_len = work.layers[layer].weights.len();
            let b_len = work.layers[layer].biases.len();
            for p in 0..w_len + b_len {
                let get = |net: &QNetwork| {
                    let l = &net.layers[layer];
                    if p < w_len {
                        l.weights[p]
                    } else {
                        l.biases[p - w_len]
                    }
                };
                let set = |net: &mut QNetwork, value: f64| {
                    let l = &mut net.layers[layer];
                    if p < w_len {
                        l.weights[p] = value;
                    } else {
                        l.biases[p - w_len] = value;
                    }
                };
                let orig = get(&work);
                set(&mut work, orig + h);
                let plus = td_loss(&work, &batch, &targets);
                set(&mut work, orig - h);
                let minus = td_loss(&work, &batch, &targets);
                set(&mut work, orig);
                numeric.push((plus - minus) / (2.0 * h));
            }
        }
        let diff = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|b| b * b).sum::<f64>().sqrt())
            .max(1e-12);
        worst = worst.max(diff / scale);
    }
    let ok = worst < 1e-4;
    assert!(report(
        "09 gradient check",
        ok,
        &format!("worst relative error {worst:.2e} over 100 draws")
    ));
}

#[test]
fn criterion_10_observing_policy_equals_unsupervised_run() {
    let mut all_equal = true;
    for (seed, delay) in [(5u64, 5u32), (19, 2), (77, 4)] {
        let mut cfg = base_config();
        cfg.seed = seed;
        cfg.sa_delay = delay;
        let (plain, plain_sim) = metrics::run_baseline(&cfg).unwrap();
        let mut policy = FixedPolicy(Action::Observing);
        let (watched, watched_sim) = superagent::run_policy_episode(&cfg, &mut policy).unwrap();
        all_equal &= plain.gc_trace == watched.gc_trace
            && plain_sim.agents() == watched_sim.agents();
    }
    assert!(report(
        "10 observing equivalence",
        all_equal,
        "tick-for-tick trace and final agent states match on 3 seeds"
    ));
}

#[test]
fn criterion_11_construction_invariants_hold_under_randomized_steps() {
    let mut driver = ChaCha8Rng::seed_from_u64(4242);
    let mut steps = 0u32;
    let mut ok = true;
    for seed in 0..100u64 {
        let mut cfg = base_config();
        cfg.seed = seed;
        cfg.p_n = driver.gen_range(0..11) as f64 / 10.0;
        cfg.theta = [0.270, 0.342, 0.414][driver.gen_range(0..3)];
        let mut sim = Simulation::new(cfg).unwrap();
        ok &= sim.chamber().len() == 20;
        ok &= sim.graph().edge_count() == 400;
        for tick in 0..100 {
            if tick % 9 == 4 {
                match driver.gen_range(0..4) {
                    0 => sim.apply_global_warning(),
                    1 => {
                        let t = sim.top_a_active(sim.config().choose_method, 0.10);
                        sim.apply_reiterate(&t);
                    }
                    2 => sim.apply_forcing(sim.config().choose_method, 0.05),
                    _ => {}
                }
            }
            sim.tick();
            steps += 1;
            for agent in sim.agents() {
                let band = classify_opinion(agent.om).unwrap();
                ok &= agent.is_a_active == (band == Opinion::A);
                ok &= agent.is_b_active == (band == Opinion::B);
            }
            ok &= sim.graph().edge_count() == 400;
        }
    }
    let pass = ok && steps == 10_000;
    assert!(report(
        "11 construction and flag/band invariants",
        pass,
        &format!("{steps} randomized ticks checked")
    ));
}

/// Exhaustive shortest-path enumeration for tiny graphs.
fn brute_betweenness(g: &Graph) -> Vec<f64> {
    fn bfs(g: &Graph, s: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; g.node_count()];
        dist[s] = Some(0);
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in g.neighbors(v) {
                if dist[w].is_none() {
                    dist[w] = Some(dist[v].unwrap() + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
    fn dfs(
        g: &Graph,
        at: NodeId,
        t: NodeId,
        budget: usize,
        path: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        if at == t {
            if budget == 0 {
                out.push(path.clone());
            }
            return;
        }
        if budget == 0 {
            return;
        }
        for &nb in g.neighbors(at) {
            if !path.contains(&nb) {
                path.push(nb);
                dfs(g, nb, t, budget - 1, path, out);
                path.pop();
            }
        }
    }
    let n = g.node_count();
    let mut scores = vec![0.0; n];
    for s in 0..n {
        let dist = bfs(g, s);
        for t in (s + 1)..n {
            let Some(d) = dist[t] else { continue };
            let mut paths = Vec::new();
            dfs(g, s, t, d, &mut vec![s], &mut paths);
            let total = paths.len() as f64;
            for path in &paths {
                for &w in &path[1..path.len() - 1] {
                    scores[w] += 1.0 / total;
                }
            }
        }
    }
    scores
}

#[test]
fn criterion_12_centrality_oracles() {
    let mut betweenness_ok = true;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 7) as usize;
        let k = (seed % 5) as f64 * (n - 1) as f64 / 4.0;
        let g = gen_erdos_renyi(n, k, &mut rng).unwrap();
        let fast = centrality::betweenness(&g).scores;
        let brute = brute_betweenness(&g);
        betweenness_ok &= fast
            .iter()
            .zip(&brute)
            .all(|(a, b)| (a - b).abs() < 1e-9);
    }
    let mut pagerank_ok = true;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gen_erdos_renyi(50, (seed % 9) as f64, &mut rng).unwrap();
        let scores = centrality::pagerank(
            &g,
            centrality::PAGERANK_DAMPING,
            centrality::PAGERANK_TOL,
            centrality::PAGERANK_MAX_ITER,
        )
        .unwrap()
        .scores;
        let sum: f64 = scores.iter().sum();
        pagerank_ok &= (sum - 1.0).abs() <= 1e-9 && scores.iter().all(|&s| s >= 0.0);
    }
    let ok = betweenness_ok && pagerank_ok;
    assert!(report(
        "12 centrality oracles",
        ok,
        "brute-force betweenness on 200 small graphs; pagerank sums to 1 +/- 1e-9"
    ));
}
