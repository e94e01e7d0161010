//! Solve and experiment drivers behind the `stockblend` command line.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::random_search_baseline;
use crate::de::{solve_one_month, DeConfig};
use crate::error::{Error, Result};
use crate::fitness::{evaluate, FitnessMode, FitnessVector};
use crate::generate::{generate_instance, Shape};
use crate::instance::{load_instance, save_instance, save_json, save_solution, Instance, FILE_EXTENSION};
use crate::longterm::solve_long_term_with;
use crate::model::{ParcelOutcome, Solution};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// One-month DE with the lexicographic fitness, months solved in turn.
    Lex,
    /// As `Lex` with the bi-objective fitness.
    Bi,
    /// Month-by-month decomposition with a feasible-plan archive.
    Longterm,
}

impl FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lex" => Ok(SolveMode::Lex),
            "bi" => Ok(SolveMode::Bi),
            "longterm" => Ok(SolveMode::Longterm),
            other => Err(format!("unknown mode `{other}` (expected lex, bi or longterm)")),
        }
    }
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMode::Lex => "lex",
            SolveMode::Bi => "bi",
            SolveMode::Longterm => "longterm",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: SolveMode,
    /// `max_evaluations` is per month; `mode` is overridden by [`SolveOptions::mode`].
    pub config: DeConfig,
    pub warm_start: Option<Solution>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: SolveMode::Lex,
            config: DeConfig::default(),
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcelReport {
    pub month: usize,
    pub parcel: usize,
    pub stockpiles: Vec<usize>,
    pub fractions: Vec<f64>,
    pub duration: f64,
    pub target_concentrate: f64,
    pub outcome: ParcelOutcome,
}

/// Everything `solve` reports about its best plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub mode: SolveMode,
    pub seed: u64,
    pub copper: f64,
    pub feasible: bool,
    pub fitness: FitnessVector,
    pub parcels: Vec<ParcelReport>,
    pub cu_grade_spread: f64,
    pub cu_grade_spread_bound: f64,
    pub cu_grade_spread_ok: bool,
    pub evaluations: usize,
    /// Months in which no feasible continuation was found.
    pub flagged_months: Vec<usize>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub report: SolveReport,
}

pub fn solve(instance: &Instance, options: &SolveOptions) -> Result<SolveOutcome> {
    let started = Instant::now();
    if let Some(warm) = &options.warm_start {
        instance.check_solution_shape(warm)?;
    }
    let (solution, evaluations, flagged_months) = match options.mode {
        SolveMode::Lex | SolveMode::Bi => {
            let mode = if options.mode == SolveMode::Lex {
                FitnessMode::Lex
            } else {
                FitnessMode::bi()
            };
            let mut state = instance.initial_state();
            let mut months = Vec::with_capacity(instance.months());
            let mut evaluations = 0;
            let mut flagged = Vec::new();
            for month in 0..instance.months() {
                let config = DeConfig {
                    mode,
                    seed: crate::rng::derive_seed(options.config.seed, &[month as u64]),
                    ..options.config
                };
                let warm = options.warm_start.as_ref().map(|w| &w.months[month]);
                let run = solve_one_month(instance, month, &state, &config, warm)?;
                evaluations += run.evaluations;
                if !run.best.fitness.is_feasible() {
                    flagged.push(month);
                }
                state = crate::fitness::evaluate_month(instance, month, &state, &run.best.plan)
                    .closing()
                    .clone();
                months.push(run.best.plan);
            }
            (Solution { months }, evaluations, flagged)
        }
        SolveMode::Longterm => {
            let config = DeConfig {
                mode: FitnessMode::bi(),
                ..options.config
            };
            let run = solve_long_term_with(instance, &config, options.warm_start.as_ref())?;
            (run.best.solution(), run.evaluations, run.flagged_months())
        }
    };
    let report = build_report(instance, options, &solution, evaluations, flagged_months, started)?;
    Ok(SolveOutcome { solution, report })
}

fn build_report(
    instance: &Instance,
    options: &SolveOptions,
    solution: &Solution,
    evaluations: usize,
    flagged_months: Vec<usize>,
    started: Instant,
) -> Result<SolveReport> {
    let evaluation = evaluate(solution, instance)?;
    let mut parcels = Vec::new();
    for (m, (plan, month)) in solution.months.iter().zip(&evaluation.months).enumerate() {
        for (p, ((parcel, outcome), spec)) in plan
            .parcels
            .iter()
            .zip(&month.outcomes)
            .zip(instance.parcels_in(m))
            .enumerate()
        {
            parcels.push(ParcelReport {
                month: m,
                parcel: p,
                stockpiles: spec.stockpiles.clone(),
                fractions: parcel.fractions.clone(),
                duration: parcel.duration,
                target_concentrate: spec.target_concentrate,
                outcome: *outcome,
            });
        }
    }
    let spread = evaluation.cu_grade_spread();
    Ok(SolveReport {
        instance: instance.meta.name.clone(),
        mode: options.mode,
        seed: options.config.seed,
        copper: evaluation.fitness.copper,
        feasible: evaluation.fitness.is_feasible(),
        fitness: evaluation.fitness,
        parcels,
        cu_grade_spread: spread,
        cu_grade_spread_bound: instance.bounds.cu_grade_spread,
        cu_grade_spread_ok: spread <= instance.bounds.cu_grade_spread,
        evaluations,
        flagged_months,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Writes the solution to `out` and the report next to it
/// (`plan.json` -> `plan.report.json`) unless `report` is given.
pub fn cmd_solve(instance_path: &Path, options: &SolveOptions, out: &Path, report: Option<&Path>) -> Result<SolveReport> {
    let instance = load_instance(instance_path)?;
    let outcome = solve(&instance, options)?;
    save_solution(&outcome.solution, out)?;
    let report_path = report.map(Path::to_path_buf).unwrap_or_else(|| default_report_path(out));
    save_json(&outcome.report, report_path)?;
    Ok(outcome.report)
}

pub fn default_report_path(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.strip_suffix(".json").unwrap_or(&name);
    out.with_file_name(format!("{stem}.report.json"))
}

pub fn cmd_generate(shape: &Shape, seed: u64, out: &Path) -> Result<Instance> {
    let instance = generate_instance(shape, seed);
    save_instance(&instance, out)?;
    Ok(instance)
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub runs: usize,
    /// Seeds `1..=runs` replace `solve.config.seed`.
    pub solve: SolveOptions,
    pub baseline: bool,
    pub jobs: usize,
}

/// One solver run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub index: String,
    pub seed: u64,
    pub copper: f64,
    pub feasible: bool,
    pub evaluations: usize,
}

/// One table row: statistics over the runs on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub index: String,
    pub shape: String,
    pub baseline: Option<f64>,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub rows: Vec<RunReport>,
    pub runs: Vec<ExperimentRun>,
}

/// Runs seeds `1..=runs` on every instance. Results are ordered by
/// (instance, seed) whatever the number of jobs.
pub fn run_experiment(instances: &[(String, Instance)], options: &ExperimentOptions) -> Result<Experiment> {
    if instances.is_empty() {
        return Err(Error::Config("the experiment needs at least one instance".into()));
    }
    if options.runs == 0 {
        return Err(Error::Config("the experiment needs at least one run".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let tasks: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| (1..=options.runs as u64).map(move |seed| (i, seed)))
        .collect();

    let results: Vec<Result<ExperimentRun>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, seed)| {
                let (index, instance) = &instances[i];
                let mut solve_options = options.solve.clone();
                solve_options.config.seed = seed;
                let outcome = solve(instance, &solve_options).map_err(|e| {
                    Error::Config(format!("run on instance `{index}` with seed {seed} failed: {e}"))
                })?;
                Ok(ExperimentRun {
                    index: index.clone(),
                    seed,
                    copper: outcome.report.copper,
                    feasible: outcome.report.feasible,
                    evaluations: outcome.report.evaluations,
                })
            })
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let baselines: Vec<Option<f64>> = if options.baseline {
        pool.install(|| {
            instances
                .par_iter()
                .map(|(_, instance)| {
                    let budget = options.solve.config.max_evaluations * instance.months();
                    random_search_baseline(instance, budget, 1).map(|b| Some(b.fitness.copper))
                })
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        vec![None; instances.len()]
    };

    let rows = instances
        .iter()
        .zip(baselines)
        .map(|((index, instance), baseline)| {
            let values: Vec<f64> = runs.iter().filter(|r| &r.index == index).map(|r| r.copper).collect();
            RunReport {
                index: index.clone(),
                shape: Shape::from(instance).to_string(),
                baseline,
                summary: Summary::from_values(&values).expect("at least one run"),
            }
        })
        .collect();
    Ok(Experiment { rows, runs })
}

pub fn write_table(rows: &[RunReport], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("cannot write csv: {e}"));
    writer
        .write_record(["Index", "Shape", "Baseline", "Max", "Min", "Mean", "Std"])
        .map_err(csv_err)?;
    for row in rows {
        let s = &row.summary;
        writer
            .write_record([
                row.index.clone(),
                row.shape.clone(),
                row.baseline.map(|b| b.to_string()).unwrap_or_default(),
                s.max.to_string(),
                s.min.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::Config(format!("cannot write csv: {e}")))
}

pub fn write_runs(runs: &[ExperimentRun], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("cannot write csv: {e}"));
    writer
        .write_record(["Index", "Seed", "C", "Feasible", "Evaluations"])
        .map_err(csv_err)?;
    for run in runs {
        writer
            .write_record([
                run.index.clone(),
                run.seed.to_string(),
                run.copper.to_string(),
                run.feasible.to_string(),
                run.evaluations.to_string(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::Config(format!("cannot write csv: {e}")))
}

/// Instance files (`*.sbp.json`) in `dir`, sorted by file name and keyed by
/// their stem.
pub fn load_instance_dir(dir: &Path) -> Result<Vec<(String, Instance)>> {
    let io_err = |source| Error::Io {
        file: dir.to_path_buf(),
        source,
    };
    let suffix = format!(".{FILE_EXTENSION}");
    let mut files: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .map(|entry| entry.map(|e| e.path()).map_err(io_err))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|path| {
            let name = path.file_name()?.to_str()?.to_owned();
            name.strip_suffix(&suffix).map(|stem| (stem.to_owned(), path.clone()))
        })
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|(stem, path)| load_instance(&path).map(|i| (stem, i)))
        .collect()
}

pub fn cmd_experiment(
    dir: &Path,
    options: &ExperimentOptions,
    out: &Path,
    runs_out: Option<&Path>,
) -> Result<Experiment> {
    let instances = load_instance_dir(dir)?;
    let experiment = run_experiment(&instances, options)?;
    let create = |path: &Path| {
        std::fs::File::create(path).map_err(|source| Error::Io {
            file: path.to_path_buf(),
            source,
        })
    };
    write_table(&experiment.rows, create(out)?)?;
    if let Some(path) = runs_out {
        write_runs(&experiment.runs, create(path)?)?;
    }
    Ok(experiment)
}
