use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tugpeace::game::RewardField;
use tugpeace::harness::check::check_result;
use tugpeace::harness::output::write_json;
use tugpeace::harness::{emit_csv, parse_config, prepare_instance, run_experiment, validate_tow, ExperimentConfig};
use tugpeace::learner::initial_assignment;
use tugpeace::oracle::{minimal_equilibrium, power_control_equilibrium_linear};
use tugpeace::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "tugpeace", version, about = "Tug-of-Peace simulations and equilibrium oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV files.
    Run(Common),
    /// Print the equilibrium report for one sampled instance.
    Oracle(Common),
    /// Run an experiment and compare it against the oracle.
    Check(Common),
    /// Sweep the Tug-of-War sign conditions at random interior points.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Base seed; realization r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(args: &Common) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(dir) = &args.out {
        config.output.dir = dir.clone();
    }
    if let Some(r) = args.realizations {
        config.run.realizations = r;
    }
    if let Some(t) = args.threads {
        config.run.threads = Some(t);
    }
    // overrides go through the same validation as the file
    Ok(parse_config(&config.to_json())?)
}

fn print(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    // ignore closed pipes
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn run(config: &ExperimentConfig) -> Result<(), Failure> {
    let result = run_experiment(config)?;
    let files = emit_csv(&config.output.dir, &result, config.output.traces)?;
    write_json(&config.output.dir.join("config.json"), config)?;
    print(&json!({
        "realizations": result.realizations.len(),
        "rejected_draws": result.rejected_draws(),
        "files": files,
    }));
    Ok(())
}

fn oracle(config: &ExperimentConfig) -> Result<(), Failure> {
    let seed = config.run.seed;
    let prepared = prepare_instance(config, seed)?;
    let scenario = &prepared.scenario;
    let n = scenario.n_players();
    let assignment = initial_assignment(config.algorithm.kind, n, scenario.n_games(), seed)?;
    let ode = minimal_equilibrium(scenario, &assignment, &prepared.targets, &config.check.ode)?;
    let linear = match scenario.as_power_control() {
        Some(p) => Some(power_control_equilibrium_linear(p, scenario.bounds(), &assignment, &prepared.targets)?),
        None => None,
    };
    let report = json!({
        "seed": seed,
        "draws": prepared.draws,
        "scenario": scenario,
        "targets": prepared.targets,
        "assignment": assignment.as_slice(),
        "ode": ode,
        "linear": linear,
    });
    fs::create_dir_all(&config.output.dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", config.output.dir.display())))?;
    write_json(&config.output.dir.join("oracle.json"), &report)?;
    print(&report);
    Ok(())
}

fn check(config: &ExperimentConfig) -> Result<(), Failure> {
    let result = run_experiment(config)?;
    emit_csv(&config.output.dir, &result, config.output.traces)?;
    let report = check_result(config, &result)?;
    write_json(&config.output.dir.join("check.json"), &report)?;
    print(&json!({
        "passed": report.passed,
        "conditions": report.conditions,
        "inconclusive_oracles": report.inconclusive_oracles,
        "boundary_pinned": report.boundary_pinned,
    }));
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check("cross-check failed".into()))
    }
}

fn validate(config: &ExperimentConfig) -> Result<(), Failure> {
    let report = validate_tow(config)?;
    fs::create_dir_all(&config.output.dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", config.output.dir.display())))?;
    write_json(&config.output.dir.join("validate.json"), &report)?;
    print(&serde_json::to_value(&report).expect("report serializes"));
    if report.clean {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} same-game and {} cross-game violations",
            report.same_game_violations, report.cross_game_violations
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => load(args).and_then(|c| run(&c)),
        Command::Oracle(args) => load(args).and_then(|c| oracle(&c)),
        Command::Check(args) => load(args).and_then(|c| check(&c)),
        Command::Validate(args) => load(args).and_then(|c| validate(&c)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
