//! Random-search baseline: independent repaired random plans, best kept.

use std::cmp::Ordering;

use crate::de::{MonthProblem, Problem};
use crate::error::{Error, Result};
use crate::fitness::{compare_lex, evaluate_month, FitnessMode, FitnessVector};
use crate::instance::Instance;
use crate::model::Solution;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub best: Solution,
    pub fitness: FitnessVector,
    pub evaluations: usize,
}

/// One random plan: uniform fractions and durations, repaired month by month
/// against the stockpiles the previous months leave behind.
pub fn random_plan(instance: &Instance, rng: &mut StreamRng) -> (Solution, FitnessVector) {
    let mut state = instance.initial_state();
    let mut fitness = FitnessVector::EMPTY;
    let mut months = Vec::with_capacity(instance.months());
    for month in 0..instance.months() {
        let problem = MonthProblem::new(instance, month, &state, FitnessMode::Lex);
        let mut genome = problem.random_genome(rng);
        problem.repair(&mut genome);
        let plan = problem.decode(&genome);
        let evaluation = evaluate_month(instance, month, &state, &plan);
        fitness.accumulate(&evaluation.fitness);
        state = evaluation.closing().clone();
        months.push(plan);
    }
    (Solution { months }, fitness)
}

/// Draws `budget` random plans (one evaluation each) and keeps the
/// lexicographic best. Sample `i` uses its own seeded stream.
pub fn random_search_baseline(instance: &Instance, budget: usize, seed: u64) -> Result<BaselineRun> {
    if budget == 0 {
        return Err(Error::Config("random search needs a budget of at least 1".into()));
    }
    let mut best: Option<(Solution, FitnessVector)> = None;
    for i in 0..budget {
        let candidate = random_plan(instance, &mut rng::stream(seed, &[i as u64]));
        let better = match &best {
            None => true,
            Some((_, incumbent)) => compare_lex(&candidate.1, incumbent) == Ordering::Greater,
        };
        if better {
            best = Some(candidate);
        }
    }
    let (best, fitness) = best.expect("budget is positive");
    Ok(BaselineRun {
        best,
        fitness,
        evaluations: budget,
    })
}
