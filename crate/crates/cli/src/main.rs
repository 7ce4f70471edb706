//! Command-line runner: plan routes, simulate single strategies, and compare
//! all four arbitration strategies on a scenario.

mod scenario;

use arbiter_core::metrics::{
    emit_chart, emit_comparison, emit_csv, summarize, DEFAULT_SPIKE_WINDOW,
};
use arbiter_core::selector::{CoefficientMode, Strategy};
use arbiter_core::sim::{run_simulation, RunConfig, RunOutcome, RunStatus};
use arbiter_core::{plan_route, Route, Track};
use clap::{Args, Parser, Subcommand};
use scenario::{parse_blend, parse_coeff, parse_strategy, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "arbiter",
    about = "Grid-track driving simulator with four behavior-arbitration strategies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the planned instruction list for a scenario.
    Plan(CommonArgs),
    /// Run one strategy; writes CSV and chart, prints the run summary.
    Simulate(SimulateArgs),
    /// Run all four strategies and print the comparison table.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (key=value format).
    #[arg(long)]
    scenario: PathBuf,
    /// Track file override; defaults to the scenario's track.
    #[arg(long)]
    track: Option<PathBuf>,
    /// Coefficient mode override: turn | distance.
    #[arg(long)]
    coeff: Option<String>,
    /// Blend mode override: speed | both.
    #[arg(long)]
    blend: Option<String>,
    /// Turn distance override, meters.
    #[arg(long)]
    turn_distance: Option<f64>,
    /// Simulation timestep override, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory; falls back to $ARBITER_OUT, then the working directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Accepted for interface compatibility; runs carry no randomness either way.
    #[arg(long, hide = true)]
    seedless: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Strategy: basic | transition | interpolation | hybrid.
    #[arg(long)]
    strategy: String,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Plan(args) => run_plan(&args),
        Command::Simulate(args) => run_simulate(&args),
        Command::Compare(args) => run_compare(&args),
    }
    .unwrap_or_else(|code| code)
}

struct Setup {
    track: Track,
    route: Route,
    config: RunConfig,
    scenario: Scenario,
    out_dir: PathBuf,
    stem: String,
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn prepare(args: &CommonArgs) -> Result<Setup, ExitCode> {
    let mut scenario = Scenario::load(&args.scenario).map_err(fail)?;
    if let Some(track) = &args.track {
        scenario.track_path = track.clone();
    }
    let track = scenario.load_track().map_err(fail)?;
    let mut config = scenario.run_config(&track).map_err(fail)?;
    if let Some(coeff) = &args.coeff {
        config.selector.coefficient_mode = parse_coeff(coeff).map_err(fail)?;
    }
    if let Some(blend) = &args.blend {
        config.selector.blend_mode = parse_blend(blend).map_err(fail)?;
    }
    if let Some(td) = args.turn_distance {
        config.selector.turn_distance = td;
    }
    if let Some(dt) = args.dt {
        config.sim.dt = dt;
    }
    config.selector.validate().map_err(fail)?;

    let route = plan_route(&track, &scenario.start, scenario.goal).map_err(fail)?;

    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| scenario.out_dir.clone())
        .or_else(|| std::env::var_os("ARBITER_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = args
        .scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());

    Ok(Setup {
        track,
        route,
        config,
        scenario,
        out_dir,
        stem,
    })
}

fn run_plan(args: &CommonArgs) -> Result<ExitCode, ExitCode> {
    let setup = prepare(args)?;
    for (index, instruction) in setup.route.instructions.iter().enumerate() {
        println!(
            "{index} {} at {:.3}m",
            instruction.kind.name(),
            instruction.anchor_arc - setup.route.start_arc
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_for(status: RunStatus) -> ExitCode {
    match status {
        RunStatus::Success => ExitCode::from(0),
        RunStatus::OffRoute => ExitCode::from(3),
        RunStatus::Timeout => ExitCode::from(4),
    }
}

fn write_artifacts(setup: &Setup, outcome: &RunOutcome) -> Result<(), ExitCode> {
    std::fs::create_dir_all(&setup.out_dir).map_err(fail)?;
    let base = setup
        .out_dir
        .join(format!("{}_{}", setup.stem, outcome.strategy.name()));
    let mut csv = std::fs::File::create(base.with_extension("csv")).map_err(fail)?;
    emit_csv(outcome, &mut csv).map_err(fail)?;
    let mut svg = std::fs::File::create(base.with_extension("svg")).map_err(fail)?;
    emit_chart(outcome, &mut svg).map_err(fail)?;
    Ok(())
}

fn run_one(setup: &Setup, strategy: Strategy, mode: Option<CoefficientMode>) -> RunOutcome {
    let mut config = setup.config;
    config.selector.strategy = strategy;
    if let Some(mode) = mode {
        config.selector.coefficient_mode = mode;
    }
    run_simulation(
        &setup.track,
        &setup.route,
        setup.scenario.start,
        setup.scenario.start_speed,
        &config,
    )
}

fn run_simulate(args: &SimulateArgs) -> Result<ExitCode, ExitCode> {
    let strategy = parse_strategy(&args.strategy).map_err(fail)?;
    let setup = prepare(&args.common)?;
    let outcome = run_one(&setup, strategy, None);
    write_artifacts(&setup, &outcome)?;
    let summary = summarize(&outcome, DEFAULT_SPIKE_WINDOW).map_err(fail)?;
    print!("{}", emit_comparison(std::slice::from_ref(&summary)));
    Ok(exit_for(outcome.status))
}

fn run_compare(args: &CommonArgs) -> Result<ExitCode, ExitCode> {
    let setup = prepare(args)?;
    // Each strategy runs in its reference configuration: the interpolation
    // selector uses the turn-distance coefficient, while the hybrid selector
    // needs the longer-reach distance coefficient for its approach blend.
    // An explicit --coeff forces one mode for all four.
    let forced = args.coeff.is_some();
    let mut summaries = Vec::new();
    for strategy in Strategy::ALL {
        let mode = match strategy {
            Strategy::Interpolation if !forced => Some(CoefficientMode::TurnDistanceBased),
            Strategy::Hybrid if !forced => Some(CoefficientMode::InterpolationDistanceBased),
            _ => None,
        };
        let outcome = run_one(&setup, strategy, mode);
        write_artifacts(&setup, &outcome)?;
        summaries.push(summarize(&outcome, DEFAULT_SPIKE_WINDOW).map_err(fail)?);
    }
    print!("{}", emit_comparison(&summaries));
    Ok(ExitCode::SUCCESS)
}
