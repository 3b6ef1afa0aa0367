use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plap_core::cli_report::{
    experiment_command, geometry_command, parse_config, seminorm_command, solve_command, unix_now,
    validate_command, write_outputs, ExperimentName, Meta, Module, Report, RunConfig, RunOptions,
};
use plap_core::Error;

/// Numerical laboratory for the parabolic p-Laplace system with
/// divergence-form forcing.
#[derive(Debug, Parser)]
#[command(name = "plap", version)]
struct Cli {
    /// Run configuration (`[grid]`, `[solver]`, `[geometry]`, `[weight]`,
    /// `[experiment]` sections). Missing keys take defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for report.json, data.csv and meta.json.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Seed override.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Ladder and scan refinement depth.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(0..=2))]
    refine: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the system and report per-step norms and energy.
    Solve,
    /// Build the cylinder family at the configured center and check its properties.
    Geometry,
    /// Evaluate an oscillation seminorm of the solution.
    Seminorm,
    /// Run an experiment: caloric_decay, comparison, main_bmo, intrinsic_bmo or hoelder_transfer.
    Experiment {
        #[arg(value_parser = parse_experiment)]
        name: ExperimentName,
    },
    /// Run the invariant suites of a module.
    Validate {
        #[arg(long, default_value = "all", value_parser = parse_module)]
        module: Module,
    },
}

fn parse_experiment(s: &str) -> Result<ExperimentName, String> {
    s.parse()
}

fn parse_module(s: &str) -> Result<Module, String> {
    s.parse()
}

const USAGE_ERROR: u8 = 2;
const COMPUTE_ERROR: u8 = 1;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidGrid(_)
        | Error::InvalidSolverConfig(_)
        | Error::InvalidArgument(_) => USAGE_ERROR,
        _ => COMPUTE_ERROR,
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, (u8, String)> {
    let Some(path) = path else {
        return parse_config("").map_err(|e| (USAGE_ERROR, e.to_string()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| (USAGE_ERROR, format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| (USAGE_ERROR, format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<Report, (u8, String)> {
    let cfg = load_config(cli.config.as_ref())?;
    let opts = RunOptions {
        seed: cli.seed,
        refine: cli.refine,
    };
    let res = match &cli.command {
        Command::Solve => solve_command(&cfg, &opts),
        Command::Geometry => geometry_command(&cfg, &opts),
        Command::Seminorm => seminorm_command(&cfg, &opts),
        Command::Experiment { name } => experiment_command(*name, &cfg, &opts),
        Command::Validate { module } => validate_command(*module, &cfg, &opts),
    };
    res.map_err(|e| (exit_code(&e), e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = unix_now();
    let report = match run(&cli) {
        Ok(r) => r,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };
    let meta = Meta::finish(&report.command, started);
    if let Err(e) = write_outputs(&cli.out, &report, &meta) {
        eprintln!("error: writing outputs to {}: {e}", cli.out.display());
        return ExitCode::from(COMPUTE_ERROR);
    }
    println!(
        "{}: {} ({} rows) -> {}",
        report.command,
        if report.ok { "ok" } else { "FAILED" },
        report.table.rows.len(),
        cli.out.display()
    );
    if let Some(checks) = report.result.get("checks").and_then(|c| c.as_array()) {
        for c in checks {
            let pass = c.get("passed").and_then(|v| v.as_bool()).unwrap_or(false);
            let name = c.get("name").and_then(|v| v.as_str()).unwrap_or("?");
            let detail = c.get("detail").and_then(|v| v.as_str()).unwrap_or("");
            println!("  {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        }
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(COMPUTE_ERROR)
    }
}
