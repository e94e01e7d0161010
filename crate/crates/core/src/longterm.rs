//! Month-by-month decomposition of a multi-month plan.
//!
//! A set of feasible partial plans is carried from month to month. Each
//! entry seeds a one-month DE run from its own closing stockpiles; the
//! feasible members of every final population are pooled and subsampled
//! back to the population size.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{solve_one_month, DeConfig, Individual, MonthRun};
use crate::error::{Error, Result};
use crate::fitness::{compare_lex, evaluate_month, FitnessVector};
use crate::instance::Instance;
use crate::model::{MonthPlan, Solution, StockpileState};
use crate::rng;

/// Tag of the subsampling stream of a month (parents use their index).
const SUBSAMPLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    /// Plans for months `0..plan.len()`.
    pub plan: Vec<MonthPlan>,
    /// Closing stockpiles of the last covered month.
    pub state: StockpileState,
    pub fitness: FitnessVector,
    pub month_fitness: Vec<FitnessVector>,
}

impl ArchiveEntry {
    fn root(instance: &Instance) -> Self {
        ArchiveEntry {
            plan: Vec::new(),
            state: instance.initial_state(),
            fitness: FitnessVector::EMPTY,
            month_fitness: Vec::new(),
        }
    }

    fn extend(&self, instance: &Instance, month: usize, individual: &Individual) -> Self {
        let evaluation = evaluate_month(instance, month, &self.state, &individual.plan);
        let mut fitness = self.fitness;
        fitness.accumulate(&evaluation.fitness);
        let mut plan = self.plan.clone();
        plan.push(individual.plan.clone());
        let mut month_fitness = self.month_fitness.clone();
        month_fitness.push(evaluation.fitness);
        ArchiveEntry {
            plan,
            state: evaluation.closing().clone(),
            fitness,
            month_fitness,
        }
    }

    pub fn solution(&self) -> Solution {
        Solution {
            months: self.plan.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonthSummary {
    pub parents: usize,
    pub feasible_finishers: usize,
    pub archive_size: usize,
    pub evaluations: usize,
    /// No parent produced a feasible plan; the least-violating one was kept.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct LongTermRun {
    pub best: ArchiveEntry,
    pub archive: Vec<ArchiveEntry>,
    pub months: Vec<MonthSummary>,
    pub evaluations: usize,
}

impl LongTermRun {
    /// Months where no feasible continuation was found.
    pub fn flagged_months(&self) -> Vec<usize> {
        self.months
            .iter()
            .enumerate()
            .filter(|(_, m)| m.fallback)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Solves the plan month by month.
///
/// `config.max_evaluations` is the budget of one month, split evenly over
/// the archive entries it starts from (never below one population). The
/// configured fitness mode is used for monthly selection; callers normally
/// pass [`FitnessMode::bi`](crate::fitness::FitnessMode::bi).
pub fn solve_long_term(instance: &Instance, config: &DeConfig) -> Result<LongTermRun> {
    solve_long_term_with(instance, config, None)
}

/// [`solve_long_term`] with an optional plan whose months are injected into
/// every monthly initial population.
pub fn solve_long_term_with(
    instance: &Instance,
    config: &DeConfig,
    warm_start: Option<&Solution>,
) -> Result<LongTermRun> {
    config.validate()?;
    if let Some(warm) = warm_start {
        instance.check_solution_shape(warm)?;
    }
    let np = config.population;
    let mut archive = vec![ArchiveEntry::root(instance)];
    let mut months = Vec::with_capacity(instance.months());
    let mut evaluations = 0;

    for month in 0..instance.months() {
        let per_parent = (config.max_evaluations / archive.len()).max(np);
        let runs: Vec<(usize, MonthRun)> = archive
            .par_iter()
            .enumerate()
            .map(|(j, parent)| {
                let child = DeConfig {
                    max_evaluations: per_parent,
                    seed: rng::derive_seed(config.seed, &[month as u64, j as u64]),
                    ..*config
                };
                let warm = warm_start.map(|w| &w.months[month]);
                solve_one_month(instance, month, &parent.state, &child, warm).map(|run| (j, run))
            })
            .collect::<Result<_>>()?;
        let month_evals: usize = runs.iter().map(|(_, r)| r.evaluations).sum();
        evaluations += month_evals;

        let mut finishers: Vec<ArchiveEntry> = runs
            .iter()
            .flat_map(|(j, run)| {
                run.population
                    .iter()
                    .filter(|ind| ind.fitness.is_feasible())
                    .map(|ind| archive[*j].extend(instance, month, ind))
            })
            .collect();
        let feasible_finishers = finishers.len();

        let fallback = finishers.is_empty();
        if fallback {
            let (j, run) = runs
                .iter()
                .max_by(|(_, a), (_, b)| config.mode.compare(&a.best.fitness, &b.best.fitness))
                .ok_or_else(|| Error::contract("empty archive"))?;
            finishers.push(archive[*j].extend(instance, month, &run.best));
        } else if finishers.len() > np {
            let mut rng = rng::stream(config.seed, &[month as u64, SUBSAMPLE_STREAM]);
            let mut keep = sample(&mut rng, finishers.len(), np).into_vec();
            keep.sort_unstable();
            finishers = keep.into_iter().map(|i| finishers[i].clone()).collect();
        }

        months.push(MonthSummary {
            parents: archive.len(),
            feasible_finishers,
            archive_size: finishers.len(),
            evaluations: month_evals,
            fallback,
        });
        archive = finishers;
    }

    let best = archive
        .iter()
        .max_by(|a, b| compare_lex(&a.fitness, &b.fitness))
        .cloned()
        .ok_or_else(|| Error::contract("empty archive"))?;

    Ok(LongTermRun {
        best,
        archive,
        months,
        evaluations,
    })
}
