use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mtcsim_core::config::{load_config, RunConfig, ENV_OUT_DIR, ENV_SEED};
use mtcsim_core::io::{emit_results, emit_traces};
use mtcsim_core::scenario::generate_scenario;
use mtcsim_core::sim::{run_frames, sweep, FrameConfig, ResultRow, SliceModel, SweepAxis};
use mtcsim_core::solver::{brute_force_oracle, value_iteration, PolicySet, SolverConfig, POLICY_FORMAT_VERSION};
use mtcsim_core::{Belief, Error, Policy, PolicyKind, Result};

#[derive(Parser)]
#[command(
    name = "mtcsim",
    version,
    about = "Sensing, access and offloading simulator for machine-type devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file; absent keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config file and the environment.
    #[arg(long, env = ENV_SEED)]
    seed: Option<u64>,
    /// Output directory, overriding the config file and the environment.
    #[arg(long, env = ENV_OUT_DIR)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Cycles,
    Mtcs,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one POMDP policy per active device and write them as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate frames for each policy and write per-frame results.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy names.
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<PolicyKind>>,
        /// Use POMDP policies from a file written by `solve`.
        #[arg(long)]
        policy_file: Option<PathBuf>,
        /// Also write one trace row per frame, slot and device.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep task cycles or device count and write the result table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<PolicyKind>>,
    },
    /// Compare value iteration with exact enumeration on one RB.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        /// Grid step used for the value-iteration side.
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
    /// Configuration helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the fully resolved configuration.
    Show {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    // clap has already merged the environment into the flags
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.to_string_lossy().into_owned();
    }
    config.validate()?;
    Ok(config)
}

fn focus_slice(config: &RunConfig) -> Result<SliceModel> {
    let scenario = generate_scenario(config, config.seed)?;
    SliceModel::from_scenario(&scenario, config, config.mtc_count)
}

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    Path::new(&config.output_dir).join(name)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn solve(config: &RunConfig) -> Result<PathBuf> {
    let slice = focus_slice(config)?;
    let policies = slice.solve_policies(&config.solver())?;
    let mut metadata = BTreeMap::new();
    metadata.insert("seed".to_string(), config.seed.to_string());
    metadata.insert("network".to_string(), slice.network.id.to_string());
    let set = PolicySet {
        format_version: POLICY_FORMAT_VERSION,
        metadata,
        policies: slice.devices.iter().map(|d| d.id).zip(policies).collect(),
    };
    let path = out_path(config, "policies.json");
    write_text(&path, &set.to_json()?)?;
    Ok(path)
}

fn load_policies(path: &Path, slice: &SliceModel) -> Result<Vec<Policy>> {
    let set = PolicySet::from_json(&std::fs::read_to_string(path)?)?;
    slice
        .devices
        .iter()
        .map(|d| {
            set.policies
                .iter()
                .find(|(id, _)| *id == d.id)
                .map(|(_, p)| p.clone())
                .ok_or_else(|| Error::config("policy_file", format!("no policy for device {}", d.id)))
        })
        .collect()
}

fn run(config: &RunConfig, kinds: &[PolicyKind], policy_file: Option<&Path>, trace: bool) -> Result<Vec<PathBuf>> {
    let slice = focus_slice(config)?;
    let frames = FrameConfig::from_config(config);
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut written = Vec::new();
    for &kind in kinds {
        let policies = match (kind, policy_file) {
            (PolicyKind::Pomdp, Some(path)) => load_policies(path, &slice)?,
            _ => slice.policies(kind, &config.solver(), config.seed)?,
        };
        let out = run_frames(&slice, &policies, &frames, trace)?;
        for m in &out.frames {
            rows.push(ResultRow {
                axis: slice.mtc_count() as f64,
                policy: kind,
                frame: m.frame,
                mean_cost: m.mean_cost(),
                total_cost: m.total_cost,
                mean_time_s: m.mean_time(),
                mean_energy_j: m.mean_energy(),
            });
        }
        if trace {
            let path = out_path(config, &format!("trace_{}.csv", kind.name()));
            emit_traces(&out.traces, &path)?;
            written.push(path);
        }
    }
    let path = out_path(config, "run.csv");
    emit_results(&rows, &path)?;
    written.insert(0, path);
    Ok(written)
}

fn run_sweep(config: &RunConfig, axis: Axis, kinds: &[PolicyKind]) -> Result<PathBuf> {
    let axis = match axis {
        Axis::Cycles => SweepAxis::Cycles(config.sweep_cycles.clone()),
        Axis::Mtcs => SweepAxis::Mtcs(config.sweep_mtcs.clone()),
    };
    let rows = sweep(config, &axis, kinds)?;
    let path = out_path(config, &format!("sweep_{}.csv", axis.name()));
    emit_results(&rows, &path)?;
    Ok(path)
}

fn oracle(config: &RunConfig, horizon: usize, grid_step: f64) -> Result<()> {
    let slice = focus_slice(config)?;
    let (model, _) = slice.pomdp_model(0)?.single_rb(0);
    let solver = SolverConfig {
        horizon,
        grid_step,
        mode: config.solver_mode,
    };
    let (_, values) = value_iteration(&model, &solver)?;
    println!("belief_idle,oracle,value_iteration,abs_diff");
    for i in 0..=10 {
        let b = i as f64 / 10.0;
        let exact = brute_force_oracle(&model, horizon, &Belief(vec![b]))?.value;
        let approx = values.value(0, &[b]);
        println!("{b:.1},{exact:.12e},{approx:.12e},{:.3e}", (exact - approx).abs());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common } => {
            let path = solve(&resolve(&common)?)?;
            println!("{}", path.display());
        }
        Command::Run {
            common,
            policies,
            policy_file,
            trace,
        } => {
            let config = resolve(&common)?;
            let kinds = policies.unwrap_or_else(|| config.policies.clone());
            for path in run(&config, &kinds, policy_file.as_deref(), trace)? {
                println!("{}", path.display());
            }
        }
        Command::Sweep { common, axis, policies } => {
            let config = resolve(&common)?;
            let kinds = policies.unwrap_or_else(|| config.policies.clone());
            println!("{}", run_sweep(&config, axis, &kinds)?.display());
        }
        Command::Oracle {
            common,
            horizon,
            grid_step,
        } => oracle(&resolve(&common)?, horizon, grid_step)?,
        Command::Config {
            action: ConfigAction::Show { common },
        } => println!("{}", resolve(&common)?.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
