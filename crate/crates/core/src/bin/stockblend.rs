use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, CommandFactory, Parser, Subcommand};

use stockblend_core::de::DeConfig;
use stockblend_core::generate::Shape;
use stockblend_core::harness::{cmd_experiment, cmd_generate, cmd_solve, ExperimentOptions, SolveMode, SolveOptions};
use stockblend_core::instance::load_solution;

#[derive(Parser)]
#[command(name = "stockblend", version, about = "Stockpile blending planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic instance.
    Generate {
        #[arg(long)]
        months: usize,
        /// Parcels per month: one shared count or one per month.
        #[arg(long, value_delimiter = ',', required = true)]
        parcels: Vec<usize>,
        /// Stockpiles accessible to each parcel: one shared size, one per
        /// parcel of a month, or one per parcel overall.
        #[arg(long, value_delimiter = ',', required = true)]
        stockpiles: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Optimise a plan for one instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "lex")]
        mode: SolveMode,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Plan injected into the initial populations.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the output path with `.report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Repeat seeded runs over a directory of instances and tabulate copper.
    Experiment {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        #[arg(long, default_value = "lex")]
        mode: SolveMode,
        #[command(flatten)]
        solver: SolverArgs,
        /// Add a random-search column with the same evaluation budget.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: PathBuf,
        /// Per-run results.
        #[arg(long)]
        runs_out: Option<PathBuf>,
        #[arg(long, env = "STOCKBLEND_JOBS")]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Population size.
    #[arg(long, default_value_t = 10)]
    np: usize,
    /// Mutation scale factor.
    #[arg(long = "f", default_value_t = 1.2)]
    scale: f64,
    /// Crossover rate.
    #[arg(long = "cr", default_value_t = 0.5)]
    crossover: f64,
    /// Fitness evaluations per month.
    #[arg(long, default_value_t = 100_000)]
    evals: usize,
}

impl SolverArgs {
    fn config(&self, mode: SolveMode, seed: u64) -> Result<SolveOptions, clap::Error> {
        let config = DeConfig {
            population: self.np,
            scale: self.scale,
            crossover: self.crossover,
            max_evaluations: self.evals,
            seed,
            ..DeConfig::default()
        };
        config
            .validate()
            .map_err(|e| Cli::command().error(clap::error::ErrorKind::ValueValidation, e.to_string()))?;
        Ok(SolveOptions {
            mode,
            config,
            warm_start: None,
        })
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate {
            months,
            parcels,
            stockpiles,
            seed,
            out,
            name,
        } => {
            let shape = Shape::new(months, &parcels, &stockpiles)
                .map_err(|e| Cli::command().error(clap::error::ErrorKind::ValueValidation, e.to_string()))?;
            let mut instance = cmd_generate(&shape, seed, &out)?;
            if let Some(name) = name {
                instance.meta.name = name;
                stockblend_core::instance::save_instance(&instance, &out)?;
            }
            println!("{} ({shape}) -> {}", instance.meta.name, out.display());
        }
        Command::Solve {
            instance,
            mode,
            solver,
            seed,
            warm_start,
            out,
            report,
        } => {
            let mut options = solver.config(mode, seed.unwrap_or(1))?;
            if let Some(path) = warm_start {
                options.warm_start = Some(load_solution(&path).context("reading the warm start")?);
            }
            let report = cmd_solve(&instance, &options, &out, report.as_deref())?;
            println!(
                "C = {} feasible = {} evaluations = {} ({:.2}s)",
                report.copper, report.feasible, report.evaluations, report.wall_time_secs
            );
        }
        Command::Experiment {
            instances,
            runs,
            mode,
            solver,
            baseline,
            out,
            runs_out,
            jobs,
        } => {
            let options = ExperimentOptions {
                runs,
                solve: solver.config(mode, 1)?,
                baseline,
                jobs: jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            };
            let experiment = cmd_experiment(&instances, &options, &out, runs_out.as_deref())?;
            println!("{} instances x {runs} runs -> {}", experiment.rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => match err.downcast_ref::<clap::Error>() {
            Some(usage) => {
                let _ = usage.print();
                ExitCode::from(2)
            }
            None => {
                eprintln!("error: {err:#}");
                ExitCode::FAILURE
            }
        },
    }
}
