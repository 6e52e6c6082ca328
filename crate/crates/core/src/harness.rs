//! End-to-end experiments: degree sequence, graph, stochastic replicas,
//! mean-field integration and their comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degree_model::{
    balance_stubs, empirical_pmf, make_marginal_pmf, moments, product_joint, sample_degree_sequence, DegreeSequence,
    JointDegreePmf, MarginalSpec,
};
use crate::epidemic_sim::{run_replicas, EpidemicParams, ReplicaSet};
use crate::error::{Error, Result};
use crate::graph::{build_configuration_graph, DirectedGraph};
use crate::io::{emit_csv, emit_svg, Curve};
use crate::meanfield::{integrate, ClassState, MeanFieldForm};
use crate::rng::derive_seed;
use crate::trajectory::{uniform_grid, Trajectory};

/// How the ODE's initial condition is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeInit {
    /// Mean of the per-class seed fractions actually drawn by the replicas.
    #[default]
    Realized,
    /// `init_frac * f(k, l)`.
    Expected,
}

fn default_dt() -> f64 {
    1e-2
}

fn default_replicas() -> usize {
    10
}

fn default_grid_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub in_spec: MarginalSpec,
    pub out_spec: MarginalSpec,
    pub lambda: f64,
    pub nu: f64,
    pub init_frac: f64,
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ode_init: OdeInit,
}

impl ExperimentConfig {
    /// Parses and validates a JSON config. Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::Config(format!("field `{name}`: {e}"));
        if self.n == 0 {
            return Err(Error::Config("field `n`: node count must be at least 1".into()));
        }
        self.in_spec.validate().map_err(|e| field("in_spec", e))?;
        self.out_spec.validate().map_err(|e| field("out_spec", e))?;
        self.params().map_err(|e| field("lambda/nu/init_frac/t_max", e))?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("field `dt`: must be positive, got {}", self.dt)));
        }
        if self.replicas == 0 {
            return Err(Error::Config("field `replicas`: must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config(format!("field `grid_points`: must be at least 2, got {}", self.grid_points)));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<EpidemicParams<f64>> {
        EpidemicParams::new(self.lambda, self.nu, self.init_frac, self.t_max)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.t_max, self.grid_points)
    }

    pub fn joint_pmf(&self) -> Result<JointDegreePmf<f64>> {
        product_joint(&make_marginal_pmf(&self.in_spec)?, &make_marginal_pmf(&self.out_spec)?)
    }
}

/// Sub-seeds of the master seed, one per pipeline stage.
#[derive(Debug, Clone, Copy)]
pub struct StageSeeds {
    pub sample: u64,
    pub balance: u64,
    pub graph: u64,
    pub replicas: u64,
}

impl StageSeeds {
    pub fn new(master: u64) -> Self {
        Self {
            sample: derive_seed(master, 1),
            balance: derive_seed(master, 2),
            graph: derive_seed(master, 3),
            replicas: derive_seed(master, 4),
        }
    }
}

/// Everything derived from the degree laws before any dynamics run.
#[derive(Debug, Clone)]
pub struct Network {
    pub sequence: DegreeSequence,
    pub graph: DirectedGraph,
    /// Empirical class distribution of the built graph.
    pub pmf: JointDegreePmf<f64>,
}

/// Sample, balance, match stubs, and tabulate the empirical pmf.
pub fn build_network(cfg: &ExperimentConfig) -> Result<Network> {
    let seeds = StageSeeds::new(cfg.seed);
    let raw = sample_degree_sequence(&cfg.joint_pmf()?, cfg.n, seeds.sample)?;
    let sequence = balance_stubs(raw, seeds.balance);
    let graph = build_configuration_graph(&sequence, seeds.graph)?;
    let pmf = empirical_pmf(&sequence)?;
    Ok(Network { sequence, graph, pmf })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub self_loops: usize,
    pub multi_edges: usize,
    pub classes: usize,
    pub mean_in: f64,
    pub mean_out: f64,
    pub var_in: f64,
    pub var_out: f64,
}

impl GraphStats {
    pub fn of(net: &Network) -> Self {
        let m = moments(&net.pmf);
        Self {
            nodes: net.graph.node_count(),
            edges: net.graph.edge_count(),
            self_loops: net.graph.self_loop_count(),
            multi_edges: net.graph.multi_edge_count(),
            classes: net.pmf.len(),
            mean_in: m.mean_in,
            mean_out: m.mean_out,
            var_in: m.var_in,
            var_out: m.var_out,
        }
    }
}

/// Distances and landmarks of two aggregate infected-fraction curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max_t |i_a(t) - i_b(t)|`.
    pub sup_dist: f64,
    /// Trapezoidal approximation of `(int (i_a - i_b)^2 dt)^(1/2)`.
    pub l2_dist: f64,
    /// First time `i + r` reaches half of its own maximum, per curve.
    pub t_half: [Option<f64>; 2],
    pub peak_time: [f64; 2],
    pub peak_value: [f64; 2],
}

/// Time at which cumulative infection first reaches half its maximum,
/// linearly interpolated between grid points. `None` if nothing is ever
/// infected.
pub fn half_time(traj: &Trajectory<f64>) -> Option<f64> {
    let c = traj.ever_infected();
    let top = c.iter().copied().fold(0.0f64, f64::max);
    if !(top > 0.0) {
        return None;
    }
    let target = 0.5 * top;
    let j = c.iter().position(|&v| v >= target)?;
    let t = traj.times();
    if j == 0 {
        return Some(t[0]);
    }
    let (c0, c1) = (c[j - 1], c[j]);
    Some(t[j - 1] + (target - c0) / (c1 - c0) * (t[j] - t[j - 1]))
}

/// Time and value of the largest aggregate infected fraction (first
/// occurrence on ties).
pub fn peak(traj: &Trajectory<f64>) -> (f64, f64) {
    let mut best = (traj.times()[0], traj.i()[0]);
    for (&t, &v) in traj.times().iter().zip(traj.i()) {
        if v > best.1 {
            best = (t, v);
        }
    }
    best
}

pub fn compare_trajectories(a: &Trajectory<f64>, b: &Trajectory<f64>) -> Result<ComparisonReport> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::TrajectoryMismatch(format!("grids have {} and {} points", a.len(), b.len())));
    }
    for (&ta, &tb) in a.times().iter().zip(b.times()) {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::TrajectoryMismatch(format!("grid times {ta} and {tb} differ")));
        }
    }
    let diff: Vec<f64> = a.i().iter().zip(b.i()).map(|(x, y)| x - y).collect();
    let sup_dist = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let t = a.times();
    let l2 = diff
        .windows(2)
        .zip(t.windows(2))
        .map(|(d, tt)| 0.5 * (d[0] * d[0] + d[1] * d[1]) * (tt[1] - tt[0]))
        .sum::<f64>();
    let (pa, pb) = (peak(a), peak(b));
    Ok(ComparisonReport {
        sup_dist,
        l2_dist: l2.sqrt(),
        t_half: [half_time(a), half_time(b)],
        peak_time: [pa.0, pb.0],
        peak_value: [pa.1, pb.1],
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub stats: GraphStats,
    pub network: Network,
    pub sim: ReplicaSet,
    pub ode: Trajectory<f64>,
    /// Simulation mean as curve `a`, ODE as curve `b`.
    pub report: ComparisonReport,
}

/// Initial mean-field state for an experiment.
pub fn ode_initial_state(cfg: &ExperimentConfig, net: &Network, sim: Option<&ReplicaSet>) -> Result<ClassState<f64>> {
    match (cfg.ode_init, sim) {
        (OdeInit::Realized, Some(sim)) => {
            if sim.mean.classes() != net.pmf.classes() {
                return Err(Error::TrajectoryMismatch("simulation classes differ from the empirical pmf".into()));
            }
            let i = sim.mean.class_infected(0).to_vec();
            let r = sim.mean.class_recovered(0).to_vec();
            ClassState::new(net.pmf.clone(), i, r)
        }
        _ => ClassState::seeded_uniformly(net.pmf.clone(), cfg.init_frac),
    }
}

/// Runs the full comparison pipeline. Deterministic in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let network = build_network(cfg)?;
    let sim = run_replicas(&network.graph, &params, &grid, StageSeeds::new(cfg.seed).replicas, cfg.replicas)?;
    let init = ode_initial_state(cfg, &network, Some(&sim))?;
    let ode = integrate(&init, &params, MeanFieldForm::Absolute, &grid, cfg.dt)?;
    let report = compare_trajectories(&sim.mean, &ode)?;
    Ok(ExperimentResult { stats: GraphStats::of(&network), network, sim, ode, report })
}

/// Writes `sim.csv`, `ode.csv`, `report.json` and `figure.svg` into `dir`.
pub fn write_experiment(result: &ExperimentResult, dir: impl AsRef<Path>, per_class: bool) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    emit_csv(&result.sim.mean, dir.join("sim.csv"), per_class)?;
    emit_csv(&result.ode, dir.join("ode.csv"), per_class)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&result.report)? + "\n")?;
    let curves = [Curve::infected("simulation (mean)", &result.sim.mean), Curve::infected("mean-field ODE", &result.ode)];
    emit_svg(&curves, "Fraction of nodes infected", dir.join("figure.svg"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"n": 10, "in_spec": {"kind": "uniform", "lo": 1, "hi": 3},
                "out_spec": {"kind": "deterministic", "value": 2},
                "lambda": 1.0, "nu": 0.5, "init_frac": 0.1, "t_max": 1.0,
                "replicas": 1, "grid_points": 11}"#,
        )
        .unwrap()
    }

    #[test]
    fn config_defaults_and_rejections() {
        let cfg = smoke();
        assert_eq!(cfg.dt, 1e-2);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.ode_init, OdeInit::Realized);

        let typo = r#"{"n": 10, "in_spec": {"kind": "deterministic", "value": 2}, "out_spec": {"kind": "deterministic", "value": 2},
            "lambda": 1.0, "nu": 0.5, "init_frac": 0.1, "t_max": 1.0, "replica": 3}"#;
        let err = ExperimentConfig::from_json(typo).unwrap_err().to_string();
        assert!(err.contains("replica") && err.contains("line"), "{err}");

        let bad = r#"{"n": 10, "in_spec": {"kind": "zipf", "lo": 0, "hi": 5, "exponent": 1.0}, "out_spec": {"kind": "deterministic", "value": 2},
            "lambda": 1.0, "nu": 0.5, "init_frac": 0.1, "t_max": 1.0}"#;
        let err = ExperimentConfig::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("in_spec"), "{err}");

        let bad_spec_field = r#"{"n": 10, "in_spec": {"kind": "deterministic", "value": 2, "hi": 4}, "out_spec": {"kind": "deterministic", "value": 2},
            "lambda": 1.0, "nu": 0.5, "init_frac": 0.1, "t_max": 1.0}"#;
        assert!(ExperimentConfig::from_json(bad_spec_field).is_err());
    }

    #[test]
    fn smoke_experiment_holds_invariants() {
        let cfg = smoke();
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.stats.nodes, 10);
        let mass = res.network.pmf.probs().to_vec();
        res.sim.mean.check_invariants(Some(&mass), 1e-12).unwrap();
        res.ode.check_invariants(Some(&mass), 1e-9).unwrap();
        assert!(res.report.sup_dist >= 0.0 && res.report.l2_dist >= 0.0);
        assert_eq!(res.ode.class_infected(0), res.sim.mean.class_infected(0));
    }

    #[test]
    fn comparison_examples() {
        let a = Trajectory::from_aggregates(vec![0.0, 0.5, 1.0], vec![1.0; 3], vec![0.0; 3], vec![0.0; 3]).unwrap();
        let b = Trajectory::from_aggregates(vec![0.0, 0.5, 1.0], vec![0.0; 3], vec![1.0; 3], vec![0.0; 3]).unwrap();
        let same = compare_trajectories(&a, &a).unwrap();
        assert_eq!((same.sup_dist, same.l2_dist), (0.0, 0.0));
        assert_eq!(same.t_half, [None, None]);
        let ab = compare_trajectories(&a, &b).unwrap();
        assert_eq!(ab.sup_dist, 1.0);
        assert!((ab.l2_dist - 1.0).abs() < 1e-15);
        let ba = compare_trajectories(&b, &a).unwrap();
        assert_eq!((ab.sup_dist, ab.l2_dist), (ba.sup_dist, ba.l2_dist));

        let short = Trajectory::from_aggregates(vec![0.0, 1.0], vec![1.0; 2], vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(compare_trajectories(&a, &short).is_err());
    }

    #[test]
    fn half_time_interpolates() {
        let t = Trajectory::from_aggregates(vec![0.0, 1.0, 2.0], vec![0.9, 0.6, 0.2], vec![0.1, 0.3, 0.5], vec![0.0, 0.1, 0.3]).unwrap();
        // cumulative 0.1, 0.4, 0.8 -> target 0.4 reached exactly at t = 1
        assert_eq!(half_time(&t), Some(1.0));
        assert_eq!(peak(&t), (2.0, 0.5));
    }
}
