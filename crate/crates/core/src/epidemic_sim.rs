//! Exact event-driven simulation of SIR broadcast dynamics on a fixed graph.
//!
//! An infected node broadcasts to all of its out-neighbours after an
//! `Exp(lambda)` delay and recovers after an independent `Exp(nu)` delay.
//! A broadcast reaches every out-neighbour at once, and a node that has
//! broadcast has no susceptible out-neighbours left, so only the first
//! broadcast can change the state. Each infected node therefore gets a
//! single broadcast event that races its recovery; the process is the same
//! in law as re-broadcasting at rate `lambda` until recovery.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree_model::DegreeClass;
use crate::error::{Error, Result};
use crate::graph::{degree_census, DirectedGraph};
use crate::rng::{self, derive_seed, rng_from_seed, SimRng};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Rates and initial condition of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams<T> {
    /// Broadcast rate.
    pub lambda: T,
    /// Recovery rate; zero disables recovery.
    pub nu: T,
    /// Fraction of nodes infected at time zero.
    pub init_frac: T,
    pub t_max: T,
}

impl<T: Scalar> EpidemicParams<T> {
    pub fn new(lambda: T, nu: T, init_frac: T, t_max: T) -> Result<Self> {
        let p = Self { lambda, nu, init_frac, t_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.nu >= T::zero()) || !self.nu.is_finite() {
            return bad(format!("nu must be non-negative, got {}", self.nu));
        }
        if !(self.init_frac >= T::zero() && self.init_frac <= T::one()) {
            return bad(format!("init_frac must lie in [0, 1], got {}", self.init_frac));
        }
        if !(self.t_max > T::zero()) || !self.t_max.is_finite() {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeState {
    Susceptible,
    Infected,
    Recovered,
}

impl NodeState {
    /// Applies `S -> I` or `I -> R`. Panics on any other transition.
    fn advance(&mut self, to: NodeState) {
        let ok = matches!(
            (*self, to),
            (NodeState::Susceptible, NodeState::Infected) | (NodeState::Infected, NodeState::Recovered)
        );
        assert!(ok, "forbidden state transition {self:?} -> {to:?}");
        *self = to;
    }
}

/// Infects `round(init_frac * N)` nodes chosen uniformly without replacement.
///
/// When `init_frac > 0` but the rounded count is zero a single node is
/// infected instead, with a warning.
pub fn seed_infection(g: &DirectedGraph, params: &EpidemicParams<f64>, seed: u64) -> Result<Vec<NodeState>> {
    params.validate()?;
    let n = g.node_count();
    let mut count = (params.init_frac * n as f64).round() as usize;
    if count == 0 && params.init_frac > 0.0 && n > 0 {
        log::warn!("init_frac {} rounds to zero seeds on {n} nodes; infecting one node", params.init_frac);
        count = 1;
    }
    let count = count.min(n);
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = rng_from_seed(seed);
    // partial Fisher-Yates
    for j in 0..count {
        let pick = j + rng::index(&mut rng, n - j);
        order.swap(j, pick);
    }
    let mut state = vec![NodeState::Susceptible; n];
    for &v in &order[..count] {
        state[v as usize] = NodeState::Infected;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Broadcast,
    Recover,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    node: u32,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.node.cmp(&other.node))
            .then(self.kind.cmp(&other.kind))
    }
}

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub trajectory: Trajectory<f64>,
    /// State of every node at `t_max`.
    pub final_state: Vec<NodeState>,
    /// Infection time per node (`0` for initial seeds), if infected by `t_max`.
    pub infection_time: Vec<Option<f64>>,
}

fn check_grid(grid: &[f64], t_max: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid is not strictly increasing".into()));
    }
    if !(grid[0] >= 0.0) || grid[grid.len() - 1] > t_max {
        return Err(Error::InvalidGrid(format!("grid must lie within [0, {t_max}]")));
    }
    Ok(())
}

/// Runs one realization and returns the full outcome.
pub fn simulate_detailed(
    g: &DirectedGraph,
    params: &EpidemicParams<f64>,
    init: &[NodeState],
    grid: &[f64],
    seed: u64,
) -> Result<SimulationOutcome> {
    params.validate()?;
    check_grid(grid, params.t_max)?;
    let n = g.node_count();
    if init.len() != n {
        return Err(Error::InvalidState(format!("{} initial states for {n} nodes", init.len())));
    }

    let census = degree_census(g);
    let classes: Vec<DegreeClass> = census.keys().copied().collect();
    let class_idx: BTreeMap<DegreeClass, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let node_class: Vec<usize> = g.classes().iter().map(|c| class_idx[c]).collect();
    let width = classes.len();

    let mut state = init.to_vec();
    let mut infection_time = vec![None; n];
    let mut n_inf = vec![0u64; width];
    let mut n_rec = vec![0u64; width];
    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut rng = rng_from_seed(seed);

    let schedule = |heap: &mut BinaryHeap<Reverse<Event>>, rng: &mut SimRng, node: u32, t: f64| {
        let broadcast = t + rng::exp_variate(rng, params.lambda);
        if params.nu > 0.0 {
            let recover = t + rng::exp_variate(rng, params.nu);
            if broadcast < recover {
                heap.push(Reverse(Event { time: broadcast, node, kind: EventKind::Broadcast }));
            }
            heap.push(Reverse(Event { time: recover, node, kind: EventKind::Recover }));
        } else {
            heap.push(Reverse(Event { time: broadcast, node, kind: EventKind::Broadcast }));
        }
    };

    for (v, s) in state.iter().enumerate() {
        match s {
            NodeState::Infected => {
                n_inf[node_class[v]] += 1;
                infection_time[v] = Some(0.0);
                schedule(&mut heap, &mut rng, v as u32, 0.0);
            }
            NodeState::Recovered => n_rec[node_class[v]] += 1,
            NodeState::Susceptible => {}
        }
    }

    let scale = 1.0 / n as f64;
    let mut class_i = Vec::with_capacity(grid.len() * width);
    let mut class_r = Vec::with_capacity(grid.len() * width);
    let mut record = |n_inf: &[u64], n_rec: &[u64]| {
        class_i.extend(n_inf.iter().map(|&c| c as f64 * scale));
        class_r.extend(n_rec.iter().map(|&c| c as f64 * scale));
    };
    let mut next_grid = 0;

    while let Some(Reverse(ev)) = heap.pop() {
        if ev.time > params.t_max {
            break;
        }
        while next_grid < grid.len() && grid[next_grid] < ev.time {
            record(&n_inf, &n_rec);
            next_grid += 1;
        }
        let v = ev.node as usize;
        match ev.kind {
            EventKind::Broadcast => {
                assert_eq!(state[v], NodeState::Infected, "broadcast from a non-infected node");
                for &w in g.out_neighbors(v) {
                    let w = w as usize;
                    if state[w] == NodeState::Susceptible {
                        state[w].advance(NodeState::Infected);
                        n_inf[node_class[w]] += 1;
                        infection_time[w] = Some(ev.time);
                        schedule(&mut heap, &mut rng, w as u32, ev.time);
                    }
                }
            }
            EventKind::Recover => {
                state[v].advance(NodeState::Recovered);
                n_inf[node_class[v]] -= 1;
                n_rec[node_class[v]] += 1;
            }
        }
    }
    while next_grid < grid.len() {
        record(&n_inf, &n_rec);
        next_grid += 1;
    }

    let trajectory = Trajectory::from_class_rows(classes, grid.to_vec(), class_i, class_r)?;
    Ok(SimulationOutcome { trajectory, final_state: state, infection_time })
}

/// Runs one realization and samples it on `grid` (right-continuous).
pub fn simulate(
    g: &DirectedGraph,
    params: &EpidemicParams<f64>,
    init: &[NodeState],
    grid: &[f64],
    seed: u64,
) -> Result<Trajectory<f64>> {
    simulate_detailed(g, params, init, grid, seed).map(|o| o.trajectory)
}

#[derive(Debug, Clone)]
pub struct ReplicaSet {
    pub mean: Trajectory<f64>,
    pub replicas: Vec<Trajectory<f64>>,
}

/// Seed of replica `r` under `base_seed`.
pub fn replica_seed(base_seed: u64, r: usize) -> u64 {
    derive_seed(base_seed, r as u64)
}

/// Runs one replica per entry of `seeds`. Each seed drives both the choice
/// of initial infections and the dynamics. Replicas run on the current rayon
/// pool; the mean is accumulated in replica order.
pub fn run_replicas_with_seeds(
    g: &DirectedGraph,
    params: &EpidemicParams<f64>,
    grid: &[f64],
    seeds: &[u64],
) -> Result<ReplicaSet> {
    let replicas = seeds
        .par_iter()
        .map(|&s| {
            let init = seed_infection(g, params, derive_seed(s, 0))?;
            simulate(g, params, &init, grid, derive_seed(s, 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = Trajectory::mean(&replicas)?;
    Ok(ReplicaSet { mean, replicas })
}

pub fn run_replicas(g: &DirectedGraph, params: &EpidemicParams<f64>, grid: &[f64], base_seed: u64, m: usize) -> Result<ReplicaSet> {
    if m == 0 {
        return Err(Error::InvalidParams("replica count must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..m).map(|r| replica_seed(base_seed, r)).collect();
    run_replicas_with_seeds(g, params, grid, &seeds)
}
