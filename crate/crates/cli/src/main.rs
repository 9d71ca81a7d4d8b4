//! Command-line front end for the rotatable-antenna ISAC experiments.
//!
//! Every subcommand is reproducible from `(config, seed)` alone: summary
//! lines and data files carry no timestamps, and wall time goes to stderr.
//! The `RA_ISAC_LOG` environment variable (`error|warn|info|debug`)
//! controls diagnostics verbosity.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ra_isac::harness::{
    ensure_parent_dir, run_beampattern, run_joint_monte_carlo, run_tradeoff_sweep, sidecar_path,
    write_beampattern_outputs, write_tradeoff_outputs, ExperimentConfig,
};
use ra_isac::metrics::{crb_closed, Crb, WeightPair};
use ra_isac::optimizer::{rotation_search, rotation_search_parallel, RotationSearchResult};
use ra_isac::solver::fp_bcd_solve;
use ra_isac::{draw_scenario, Error};

/// Table-style default configuration compiled into the binary; identical
/// to `configs/table1.json` in the repository.
const DEFAULT_CONFIG: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/table1.json"));

#[derive(Parser)]
#[command(
    name = "ra-isac",
    version,
    about = "Joint transmit-beamforming and array-rotation optimization for ISAC"
)]
struct Cli {
    /// JSON experiment config; the built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output path.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Override the rotation-search grid resolution.
    #[arg(long, global = true)]
    grid_points: Option<usize>,

    /// Communication weight in [0, 1]; the sensing weight is its
    /// complement. For `tradeoff` this collapses the weight grid to the
    /// single pair.
    #[arg(long, global = true)]
    omega1: Option<f64>,

    /// Worker threads for Monte Carlo realizations and parallel grid
    /// evaluation (default: logical core count).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the Monte Carlo run count.
    #[arg(long, global = true)]
    mc_runs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single inner beamforming solve at zero rotation.
    Solve,
    /// Joint solve: exhaustive rotation search wrapping the inner solver.
    RotationSearch,
    /// Weight-sweep tradeoff study over Monte Carlo realizations.
    Tradeoff,
    /// Beam-pattern study (sensing-only, communication-only, joint).
    Beampattern,
    /// Monte Carlo statistics of the joint solve at one weight pair.
    Montecarlo,
    /// Parse and validate the config, echoing the resolved parameters.
    ValidateConfig,
}

fn main() {
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter_or("RA_ISAC_LOG", "warn")
            .write_style("RA_ISAC_LOG_STYLE"),
    )
    .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::from_json_str(DEFAULT_CONFIG)?,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(grid_points) = cli.grid_points {
        config.grid_points = grid_points;
    }
    if let Some(mc_runs) = cli.mc_runs {
        config.monte_carlo_runs = mc_runs;
    }
    if let Some(output) = &cli.output {
        config.output_path = output.clone();
    }
    if let Some(omega1) = cli.omega1 {
        config.weight_grid = vec![WeightPair::from_comm(omega1)?];
    }
    config.validate()?;
    Ok(config)
}

/// Single weight pair for the one-shot subcommands: the `--omega1`
/// override if given, else an equal split.
fn solve_weights(cli: &Cli) -> Result<WeightPair, Error> {
    WeightPair::from_comm(cli.omega1.unwrap_or(0.5))
}

fn effective_workers(cli: &Cli) -> usize {
    cli.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn format_crb(crb: Crb) -> String {
    match crb {
        Crb::Finite(v) => format!("{v:.9e}"),
        Crb::Degenerate => "degenerate".to_string(),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = load_config(cli)?;
    let workers = effective_workers(cli);
    let started = Instant::now();
    match cli.command {
        Command::Solve => solve(cli, &config)?,
        Command::RotationSearch => rotation_search_cmd(cli, &config, workers)?,
        Command::Tradeoff => tradeoff(&config, workers)?,
        Command::Beampattern => beampattern(cli, &config)?,
        Command::Montecarlo => montecarlo(cli, &config, workers)?,
        Command::ValidateConfig => validate_config(&config)?,
    }
    eprintln!("elapsed {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    config: &'a ExperimentConfig,
    omega1: f64,
    rotation: f64,
    objective: f64,
    sum_rate: f64,
    sensing_objective: f64,
    crb: Option<f64>,
    converged: bool,
    iterations: usize,
    total_power: f64,
}

fn solve(cli: &Cli, config: &ExperimentConfig) -> Result<(), Error> {
    let weights = solve_weights(cli)?;
    let scenario = draw_scenario(&config.distribution, config.seed)?;
    let result = fp_bcd_solve(&scenario, 0.0, weights, &config.options)?;
    let crb = crb_closed(&result.solution, &scenario, 0.0);
    println!(
        "solve seed={} omega1={:.6} phi={:.9} objective={:.9} sum_rate={:.9} crb={} converged={}",
        config.seed,
        weights.comm(),
        0.0,
        result.objective,
        result.sum_rate,
        format_crb(crb),
        result.converged,
    );
    if let Some(path) = &cli.output {
        ensure_parent_dir(path)?;
        let doc = SolveDocument {
            config,
            omega1: weights.comm(),
            rotation: 0.0,
            objective: result.objective,
            sum_rate: result.sum_rate,
            sensing_objective: result.sensing_objective,
            crb: crb.value(),
            converged: result.converged,
            iterations: result.iterations,
            total_power: result.solution.total_power(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RotationSearchDocument<'a> {
    config: &'a ExperimentConfig,
    omega1: f64,
    best_rotation: f64,
    best_objective: f64,
    best_sum_rate: f64,
    best_sensing_objective: f64,
    crb: Option<f64>,
    profile: Vec<ProfileRow>,
}

#[derive(Serialize)]
struct ProfileRow {
    phi_rad: f64,
    objective: Option<f64>,
    converged: bool,
}

fn rotation_search_cmd(cli: &Cli, config: &ExperimentConfig, workers: usize) -> Result<(), Error> {
    let weights = solve_weights(cli)?;
    let scenario = draw_scenario(&config.distribution, config.seed)?;
    // Concurrent grid evaluation disables warm starting, so it is only
    // used when more than one worker was requested.
    let result: RotationSearchResult = if workers > 1 {
        rotation_search_parallel(&scenario, weights, &config.options, config.grid_points)?
    } else {
        rotation_search(&scenario, weights, &config.options, config.grid_points)?
    };
    let crb = crb_closed(&result.best_solution, &scenario, result.best_rotation);
    println!(
        "rotation-search seed={} omega1={:.6} phi_star={:.9} objective={:.9} sum_rate={:.9} crb={}",
        config.seed,
        weights.comm(),
        result.best_rotation,
        result.best_objective,
        result.best_sum_rate,
        format_crb(crb),
    );
    if let Some(path) = &cli.output {
        write_profile_outputs(config, weights, &result, crb, path)?;
    }
    Ok(())
}

fn write_profile_outputs(
    config: &ExperimentConfig,
    weights: WeightPair,
    result: &RotationSearchResult,
    crb: Crb,
    csv_path: &Path,
) -> Result<(), Error> {
    ensure_parent_dir(csv_path)?;
    let profile: Vec<ProfileRow> = result
        .profile
        .iter()
        .map(|p| ProfileRow {
            phi_rad: p.rotation,
            objective: p.objective,
            converged: p.converged,
        })
        .collect();
    let mut writer = csv::Writer::from_path(csv_path)?;
    for row in &profile {
        writer.serialize(row)?;
    }
    writer.flush()?;
    let doc = RotationSearchDocument {
        config,
        omega1: weights.comm(),
        best_rotation: result.best_rotation,
        best_objective: result.best_objective,
        best_sum_rate: result.best_sum_rate,
        best_sensing_objective: result.best_sensing_objective,
        crb: crb.value(),
        profile,
    };
    std::fs::write(sidecar_path(csv_path), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

fn tradeoff(config: &ExperimentConfig, workers: usize) -> Result<(), Error> {
    let document = run_tradeoff_sweep(config, workers)?;
    write_tradeoff_outputs(&document, &config.output_path)?;
    println!(
        "tradeoff seed={} schemes={} weights={} runs={} rows={} output={}",
        config.seed,
        config.schemes.len(),
        config.weight_grid.len(),
        config.monte_carlo_runs,
        document.records.len(),
        config.output_path.display(),
    );
    Ok(())
}

fn beampattern(cli: &Cli, config: &ExperimentConfig) -> Result<(), Error> {
    let weights = solve_weights(cli)?;
    let document = run_beampattern(config, weights, config.seed)?;
    let path = cli
        .output
        .clone()
        .unwrap_or_else(|| config.output_path.with_file_name("beampattern.csv"));
    write_beampattern_outputs(&document, &path)?;
    let rotations: Vec<String> = document
        .cases
        .iter()
        .map(|c| format!("phi[{}]={:.9}", c.label, c.rotation))
        .collect();
    println!(
        "beampattern seed={} omega1={:.6} grid={} {} output={}",
        config.seed,
        weights.comm(),
        document.angles.len(),
        rotations.join(" "),
        path.display(),
    );
    Ok(())
}

fn montecarlo(cli: &Cli, config: &ExperimentConfig, workers: usize) -> Result<(), Error> {
    let weights = solve_weights(cli)?;
    let document = run_joint_monte_carlo(config, weights, workers)?;
    let path = cli
        .output
        .clone()
        .unwrap_or_else(|| config.output_path.with_file_name("montecarlo.json"));
    ensure_parent_dir(&path)?;
    std::fs::write(&path, serde_json::to_string_pretty(&document)?)?;
    println!(
        "montecarlo seed={} omega1={:.6} runs={} mean_objective={:.9} mean_sum_rate={:.9} mean_crb={} output={}",
        config.seed,
        weights.comm(),
        document.runs,
        document.objective.mean,
        document.sum_rate.mean,
        document
            .crb
            .map(|s| format!("{:.9e}", s.mean))
            .unwrap_or_else(|| "degenerate".to_string()),
        path.display(),
    );
    Ok(())
}

fn validate_config(config: &ExperimentConfig) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(config)?);
    Ok(())
}
