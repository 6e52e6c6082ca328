//! `cascade`: command-line driver for cascade-core.
//!
//! Exit status is 0 on success, 1 for invalid input (bad config, flags or
//! files) and 2 when a numerical method fails.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cascade_core::analytic::{closed_form_trajectory, solve_reference_ode};
use cascade_core::epidemic_sim::run_replicas;
use cascade_core::harness::{
    build_network, compare_trajectories, run_experiment, write_experiment, GraphStats, StageSeeds,
};
use cascade_core::io::{emit_csv, load_csv};
use cascade_core::meanfield::{integrate, ClassState};
use cascade_core::{DegreeClass, Error, ExperimentConfig, MeanFieldForm, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cascade", version, about = "Information cascades on directed configuration-model graphs")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Values that take precedence over the config file.
#[derive(Args)]
struct Overrides {
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integration step size
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Number of simulation replicas
    #[arg(long, global = true)]
    replicas: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Absolute,
    Conditioned,
}

impl From<Form> for MeanFieldForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Absolute => MeanFieldForm::Absolute,
            Form::Conditioned => MeanFieldForm::Conditioned,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the graph and print its statistics as JSON
    GenGraph {
        #[arg(long)]
        config: PathBuf,
        /// Also write the edge list ("N M" header, then one "u v" per line)
        #[arg(long)]
        dump_edges: Option<PathBuf>,
    },
    /// Average stochastic replicas on the config grid
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Include per-class columns
        #[arg(long)]
        per_class: bool,
    },
    /// Integrate the mean-field equations for the config's degree law
    Meanfield {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "absolute")]
        form: Form,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        per_class: bool,
    },
    /// No-recovery solution through a single reference class (needs nu = 0)
    Analytic {
        #[arg(long)]
        config: PathBuf,
        /// Reference class in-degree and out-degree
        #[arg(long = "ref", num_args = 2, value_names = ["K", "L"])]
        reference: Option<Vec<u32>>,
        /// Use the closed form (deterministic in-degree only)
        #[arg(long, conflicts_with = "reference")]
        closed_form: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        per_class: bool,
    },
    /// Simulation against mean-field, with CSVs, report and figure
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        per_class: bool,
    },
    /// Compare the infected curves of two trajectory CSVs
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = o.dt {
        cfg.dt = dt;
    }
    if let Some(replicas) = o.replicas {
        cfg.replicas = replicas;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let o = &cli.overrides;
    match cli.command {
        Command::GenGraph { config, dump_edges } => {
            let cfg = load_config(&config, o)?;
            let net = build_network(&cfg)?;
            if let Some(path) = dump_edges {
                net.graph.write_edge_list(BufWriter::new(File::create(path)?))?;
            }
            println!("{}", serde_json::to_string_pretty(&GraphStats::of(&net))?);
        }
        Command::Simulate { config, out, per_class } => {
            let cfg = load_config(&config, o)?;
            let net = build_network(&cfg)?;
            let sim = run_replicas(&net.graph, &cfg.params()?, &cfg.grid()?, StageSeeds::new(cfg.seed).replicas, cfg.replicas)?;
            emit_csv(&sim.mean, out, per_class)?;
        }
        Command::Meanfield { config, form, out, per_class } => {
            let cfg = load_config(&config, o)?;
            let init = ClassState::seeded_uniformly(cfg.joint_pmf()?, cfg.init_frac)?;
            let traj = integrate(&init, &cfg.params()?, form.into(), &cfg.grid()?, cfg.dt)?;
            emit_csv(&traj, out, per_class)?;
        }
        Command::Analytic { config, reference, closed_form, out, per_class } => {
            let cfg = load_config(&config, o)?;
            if cfg.nu != 0.0 {
                return Err(Error::Config(format!("field `nu`: analytic solutions need nu = 0, got {}", cfg.nu)));
            }
            let init = ClassState::seeded_uniformly(cfg.joint_pmf()?, cfg.init_frac)?;
            let grid = cfg.grid()?;
            let traj = if closed_form {
                closed_form_trajectory(&init, cfg.lambda, &grid)?
            } else {
                let reference = reference.map(|kl| DegreeClass::new(kl[0], kl[1]));
                solve_reference_ode(&init, &cfg.params()?, reference, &grid, cfg.dt)?
            };
            emit_csv(&traj, out, per_class)?;
        }
        Command::Experiment { config, out_dir, per_class } => {
            let cfg = load_config(&config, o)?;
            let result = run_experiment(&cfg)?;
            write_experiment(&result, &out_dir, per_class)?;
            println!("{}", serde_json::to_string_pretty(&result.report)?);
        }
        Command::Compare { a, b, out } => {
            let report = compare_trajectories(&load_csv(a)?, &load_csv(b)?)?;
            std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
