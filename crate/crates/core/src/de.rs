//! Differential evolution with target-to-best/1 mutation and binomial
//! crossover, and the one-month solver that couples it with both repair
//! operators.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{evaluate_month, month_opening, FitnessMode, FitnessVector};
use crate::instance::Instance;
use crate::model::{Grades, Material, MonthPlan, ParcelPlan, StockpileState};
use crate::repair::{normalize_in_place, repair_duration};
use crate::rng::{self, StreamRng};

/// Tag of the initialization streams; generations use their 1-based index.
const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    /// Mutation scale `F`.
    pub scale: f64,
    /// Crossover rate `CR`.
    pub crossover: f64,
    /// Fitness evaluation budget, initialization included.
    pub max_evaluations: usize,
    pub seed: u64,
    pub mode: FitnessMode,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: 10,
            scale: 1.2,
            crossover: 0.5,
            max_evaluations: 100_000,
            seed: 1,
            mode: FitnessMode::Lex,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(format!("population must be at least 4, got {}", self.population)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale F must be positive, got {}", self.scale)));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::Config(format!("crossover CR must lie in [0, 1], got {}", self.crossover)));
        }
        if self.max_evaluations < self.population {
            return Err(Error::Config(format!(
                "evaluation budget {} is smaller than the population {}",
                self.max_evaluations, self.population
            )));
        }
        if let FitnessMode::Bi { tolerance } = self.mode {
            if !(tolerance >= 0.0 && tolerance.is_finite()) {
                return Err(Error::Config(format!("bi-objective tolerance must be nonnegative, got {tolerance}")));
            }
        }
        Ok(())
    }
}

/// A search space DE can work on: genomes are repaired in place before
/// every evaluation.
pub trait Problem {
    type Fitness: Clone;

    fn dimension(&self) -> usize;
    fn random_genome(&self, rng: &mut StreamRng) -> Vec<f64>;
    fn repair(&self, genome: &mut [f64]);
    fn evaluate(&self, genome: &[f64]) -> Self::Fitness;
    /// `Greater` when `a` is preferred over `b`.
    fn compare(&self, a: &Self::Fitness, b: &Self::Fitness) -> Ordering;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member<F> {
    pub genome: Vec<f64>,
    pub fitness: F,
}

#[derive(Debug, Clone)]
pub struct DeRun<F> {
    pub population: Vec<Member<F>>,
    pub best: usize,
    pub evaluations: usize,
    /// Generations started, including a final partial one.
    pub generations: usize,
    /// Best fitness after initialization and after every generation.
    pub history: Vec<F>,
}

impl<F> DeRun<F> {
    pub fn best(&self) -> &Member<F> {
        &self.population[self.best]
    }
}

/// `V = x_t + F (x_best - x_t) + F (x_r1 - x_r2)`, componentwise.
pub fn mutate_target_to_best(target: &[f64], best: &[f64], r1: &[f64], r2: &[f64], scale: f64) -> Vec<f64> {
    target
        .iter()
        .zip(best)
        .zip(r1.iter().zip(r2))
        .map(|((&x, &b), (&a, &c))| x + scale * (b - x) + scale * (a - c))
        .collect()
}

/// Mutant for population member `target`; `target`, `r1` and `r2` must differ.
pub fn mutant_for(
    population: &[Vec<f64>],
    target: usize,
    best: usize,
    r1: usize,
    r2: usize,
    scale: f64,
) -> Result<Vec<f64>> {
    if target == r1 || target == r2 || r1 == r2 {
        return Err(Error::contract(format!(
            "mutation indices must be distinct: target={target}, r1={r1}, r2={r2}"
        )));
    }
    let n = population.len();
    if [target, best, r1, r2].iter().any(|&i| i >= n) {
        return Err(Error::contract(format!("mutation index out of range for population of {n}")));
    }
    Ok(mutate_target_to_best(
        &population[target],
        &population[best],
        &population[r1],
        &population[r2],
        scale,
    ))
}

/// Two distinct population indices, both different from `target`.
pub fn donor_indices(target: usize, population: usize, rng: &mut StreamRng) -> (usize, usize) {
    debug_assert!(population >= 3);
    let pick = |rng: &mut StreamRng, excluded: &[usize]| loop {
        let i = rng.random_range(0..population);
        if !excluded.contains(&i) {
            break i;
        }
    };
    let r1 = pick(rng, &[target]);
    let r2 = pick(rng, &[target, r1]);
    (r1, r2)
}

/// Takes each component from the mutant with probability `crossover`, and
/// always at one uniformly drawn index.
pub fn crossover_binomial(target: &[f64], mutant: &[f64], crossover: f64, rng: &mut StreamRng) -> Vec<f64> {
    let forced = rng.random_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(i, (&x, &v))| {
            if rng.random::<f64>() <= crossover || i == forced {
                v
            } else {
                x
            }
        })
        .collect()
}

/// Runs DE on `problem`. Genomes in `warm_start` replace the first random
/// initial members.
pub fn differential_evolution<P: Problem>(
    problem: &P,
    config: &DeConfig,
    warm_start: &[Vec<f64>],
) -> Result<DeRun<P::Fitness>> {
    config.validate()?;
    if problem.dimension() == 0 {
        return Err(Error::contract("problem has no decision variables"));
    }
    if warm_start.iter().any(|g| g.len() != problem.dimension()) {
        return Err(Error::contract("warm-start genome has the wrong dimension"));
    }
    let np = config.population;

    let mut population: Vec<Member<P::Fitness>> = (0..np)
        .map(|i| {
            let mut genome = match warm_start.get(i) {
                Some(g) => g.clone(),
                None => problem.random_genome(&mut rng::stream(config.seed, &[INIT_STREAM, i as u64])),
            };
            problem.repair(&mut genome);
            let fitness = problem.evaluate(&genome);
            Member { genome, fitness }
        })
        .collect();
    let mut evaluations = np;
    let mut best = best_index(problem, &population);
    let mut history = vec![population[best].fitness.clone()];
    let mut generations = 0;

    'search: while evaluations < config.max_evaluations {
        generations += 1;
        for target in 0..np {
            if evaluations >= config.max_evaluations {
                break 'search;
            }
            let mut rng = rng::stream(config.seed, &[generations as u64, target as u64]);
            let (r1, r2) = donor_indices(target, np, &mut rng);
            let mutant = mutate_target_to_best(
                &population[target].genome,
                &population[best].genome,
                &population[r1].genome,
                &population[r2].genome,
                config.scale,
            );
            let mut trial = crossover_binomial(&population[target].genome, &mutant, config.crossover, &mut rng);
            problem.repair(&mut trial);
            let fitness = problem.evaluate(&trial);
            evaluations += 1;
            if problem.compare(&fitness, &population[target].fitness) == Ordering::Greater {
                population[target] = Member { genome: trial, fitness };
                if problem.compare(&population[target].fitness, &population[best].fitness) == Ordering::Greater {
                    best = target;
                }
            }
        }
        history.push(population[best].fitness.clone());
    }
    if history.len() < generations + 1 {
        history.push(population[best].fitness.clone());
    }

    Ok(DeRun {
        population,
        best,
        evaluations,
        generations,
        history,
    })
}

fn best_index<P: Problem>(problem: &P, population: &[Member<P::Fitness>]) -> usize {
    (1..population.len()).fold(0, |best, i| {
        if problem.compare(&population[i].fitness, &population[best].fitness) == Ordering::Greater {
            i
        } else {
            best
        }
    })
}

/// One month of the plan as a DE search space.
///
/// Genome layout: every parcel's fraction block in parcel order, then one
/// duration per parcel. Repair normalizes each block and overwrites the
/// durations with the bisection result, both in place.
#[derive(Debug, Clone)]
pub struct MonthProblem<'a> {
    instance: &'a Instance,
    month: usize,
    start: StockpileState,
    opening: StockpileState,
    blocks: Vec<(usize, usize)>,
    fraction_len: usize,
    mode: FitnessMode,
}

impl<'a> MonthProblem<'a> {
    /// `start` is the previous month's closing state (or the initial state).
    pub fn new(instance: &'a Instance, month: usize, start: &StockpileState, mode: FitnessMode) -> Self {
        let opening = month_opening(instance, month, start);
        let mut blocks = Vec::new();
        let mut offset = 0;
        for spec in instance.parcels_in(month) {
            blocks.push((offset, offset + spec.stockpiles.len()));
            offset += spec.stockpiles.len();
        }
        MonthProblem {
            instance,
            month,
            start: start.clone(),
            opening,
            blocks,
            fraction_len: offset,
            mode,
        }
    }

    pub fn opening(&self) -> &StockpileState {
        &self.opening
    }

    pub fn decode(&self, genome: &[f64]) -> MonthPlan {
        MonthPlan {
            parcels: self
                .blocks
                .iter()
                .enumerate()
                .map(|(p, &(lo, hi))| ParcelPlan {
                    fractions: genome[lo..hi].to_vec(),
                    duration: genome[self.fraction_len + p],
                })
                .collect(),
        }
    }

    pub fn encode(&self, plan: &MonthPlan) -> Result<Vec<f64>> {
        self.instance.check_month_shape(self.month, plan)?;
        let mut genome: Vec<f64> = plan.parcels.iter().flat_map(|p| p.fractions.iter().copied()).collect();
        genome.extend(plan.parcels.iter().map(|p| p.duration));
        Ok(genome)
    }

    fn blend(&self, parcel: usize, fractions: &[f64]) -> Grades {
        let access = &self.instance.parcels_in(self.month)[parcel].stockpiles;
        let mut mixed = Grades::ZERO;
        for (&s, &x) in access.iter().zip(fractions) {
            for material in Material::ALL {
                mixed[material] += x * self.opening.grades[s][material];
            }
        }
        mixed
    }

    pub fn evaluate_plan(&self, plan: &MonthPlan) -> crate::fitness::MonthEvaluation {
        evaluate_month(self.instance, self.month, &self.start, plan)
    }
}

impl Problem for MonthProblem<'_> {
    type Fitness = FitnessVector;

    fn dimension(&self) -> usize {
        self.fraction_len + self.blocks.len()
    }

    fn random_genome(&self, rng: &mut StreamRng) -> Vec<f64> {
        let available = self.instance.available_duration(self.month);
        let mut genome: Vec<f64> = (0..self.fraction_len).map(|_| rng.random::<f64>()).collect();
        genome.extend((0..self.blocks.len()).map(|_| rng.random::<f64>() * available));
        genome
    }

    fn repair(&self, genome: &mut [f64]) {
        let available = self.instance.available_duration(self.month);
        let params = &self.instance.process;
        for (p, &(lo, hi)) in self.blocks.iter().enumerate() {
            normalize_in_place(&mut genome[lo..hi]);
            let grades = self.blend(p, &genome[lo..hi]);
            let target = self.instance.parcels_in(self.month)[p].target_concentrate;
            // Validated instances have K > 0 and D > 0, and the process floors keep k finite.
            genome[self.fraction_len + p] = repair_duration(&grades, target, available, params)
                .map(|r| r.duration)
                .unwrap_or(available);
        }
    }

    fn evaluate(&self, genome: &[f64]) -> FitnessVector {
        self.evaluate_plan(&self.decode(genome)).fitness
    }

    fn compare(&self, a: &FitnessVector, b: &FitnessVector) -> Ordering {
        self.mode.compare(a, b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Repaired genome; `plan` and `fitness` are derived from it.
    pub genome: Vec<f64>,
    pub plan: MonthPlan,
    pub fitness: FitnessVector,
}

#[derive(Debug, Clone)]
pub struct MonthRun {
    pub best: Individual,
    pub population: Vec<Individual>,
    pub evaluations: usize,
    pub generations: usize,
    pub history: Vec<FitnessVector>,
}

/// Optimizes one month starting from `start`, the previous month's closing
/// state. Always returns the best member found, feasible or not.
pub fn solve_one_month(
    instance: &Instance,
    month: usize,
    start: &StockpileState,
    config: &DeConfig,
    warm_start: Option<&MonthPlan>,
) -> Result<MonthRun> {
    if month >= instance.months() {
        return Err(Error::contract(format!(
            "month {month} out of range for a {}-month instance",
            instance.months()
        )));
    }
    let problem = MonthProblem::new(instance, month, start, config.mode);
    let warm = match warm_start {
        Some(plan) => vec![problem.encode(plan)?],
        None => Vec::new(),
    };
    let run = differential_evolution(&problem, config, &warm)?;
    let population: Vec<Individual> = run
        .population
        .into_iter()
        .map(|m| Individual {
            plan: problem.decode(&m.genome),
            genome: m.genome,
            fitness: m.fitness,
        })
        .collect();
    Ok(MonthRun {
        best: population[run.best].clone(),
        population,
        evaluations: run.evaluations,
        generations: run.generations,
        history: run.history,
    })
}
