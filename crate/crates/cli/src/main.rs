//! `slca`: generate instances, run solvers, compare traces, tabulate gain
//! curves and check penalties.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 when a solver
//! or tabulation fails numerically.

mod compare;
mod config;
mod gen;
mod solve;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slca::gain::{cached_gain_table, TabulationSpec};
use slca::penalty::default_rule_grid;
use slca::NeuronModel;

use crate::config::{apply_params, parse_param, parse_penalty};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<slca::Error> for CliError {
    fn from(e: slca::Error) -> Self {
        use slca::Error::*;
        match e {
            NonFinite(_) | Saturation { .. } | Diverged { .. } | TabulationDiverged { .. } | NoConvergence(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(name = "slca", version, about = "Sparse recovery with spiking locally competitive networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance directory.
    #[command(subcommand)]
    Gen(gen::GenCommand),
    /// Run one or more solvers on an instance.
    Solve(solve::SolveArgs),
    /// Merge trace CSVs and plot their objectives.
    Compare(compare::CompareArgs),
    /// Tabulate a neuron's gain curve.
    Gain(GainArgs),
    /// Check a penalty against the admissibility rules.
    ValidatePenalty(PenaltyArgs),
}

#[derive(Args)]
struct GainArgs {
    /// Neuron preset: pif, lif, gif, ml or wb.
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// Upper end of the current grid (model default if omitted).
    #[arg(long)]
    i_max: Option<f64>,
    #[arg(long)]
    sim_time: Option<f64>,
    #[arg(long)]
    discard_time: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Model parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PenaltyArgs {
    /// l1, elastic-net, log-barrier, exp, log or atan.
    kind: String,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn run_gain(args: GainArgs) -> CliResult<()> {
    let mut model = NeuronModel::preset(&args.model)?;
    apply_params(&mut model, &args.params)?;
    let defaults = TabulationSpec::default_for(&model);
    let i_max = args.i_max.unwrap_or(defaults.grid[defaults.grid.len() - 1]);
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let spec = TabulationSpec::uniform(
        i_max,
        args.points,
        args.sim_time.unwrap_or(defaults.sim_time),
        args.discard_time.unwrap_or(defaults.discard_time),
        args.dt.unwrap_or(defaults.dt),
    );
    let table = cached_gain_table(&model, &spec, config::cache_dir().as_deref())?;
    table.save(&args.out)?;
    println!(
        "{}: {} points, max rate {}, rheobase {}",
        model.id(),
        table.currents.len(),
        table.max_rate(),
        table.rheobase()
    );
    Ok(())
}

fn run_validate_penalty(args: PenaltyArgs) -> CliResult<()> {
    let param = args.rho.or(args.gamma).or(args.theta).or(args.eta);
    let spec = match param {
        Some(p) => format!("{}:{p}", args.kind),
        None => args.kind.clone(),
    };
    let penalty = parse_penalty(&spec, args.lambda)?;
    let report = penalty.validate_rules(args.lambda, &default_rule_grid())?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("penalty = {}", penalty.name());
        print!("{report}");
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
    let result = match cli.command {
        Command::Gen(cmd) => gen::run(cmd),
        Command::Solve(args) => solve::run(args),
        Command::Compare(args) => compare::run(args),
        Command::Gain(args) => run_gain(args),
        Command::ValidatePenalty(args) => run_validate_penalty(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Numerical(_) => 2,
            })
        }
    }
}
