//! Plan simulation, the lexicographic fitness vector and its comparators.
//!
//! Comparators return [`Ordering::Greater`] when the first argument is the
//! preferred candidate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{
    claim_from_stockpiles, max_cu_grade_spread, update_stockpile_month_start, Grades, Material, MonthPlan,
    ParcelOutcome, Solution, StockpileState, WEIGHT_SUM_TOLERANCE,
};
use crate::process;

/// Absolute tolerance when comparing violation terms with their floors.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
/// Default relative tolerance of the bi-objective dominance test.
pub const DEFAULT_BI_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    /// Number of parcels summed into `concentrate_band`; its floor.
    pub parcel_count: usize,
    /// `u`: sum over parcels of `max(|K - k|, 1)`.
    pub concentrate_band: f64,
    /// `v`: hours beyond the available duration, summed over months.
    pub duration_overrun: f64,
    /// `w`: sum of negative stockpile tonnages after every claim (<= 0).
    pub negative_inventory: f64,
    /// `p`: U recovery above its bound.
    pub u_recovery_excess: f64,
    /// `q`: F recovery above its bound.
    pub f_recovery_excess: f64,
    /// `g`: Cu grade below its bound.
    pub cu_grade_shortfall: f64,
    /// `C`: discounted copper tonnes.
    pub copper: f64,
    /// `C*`: fractions drawn from each month's highest-Cu-grade stockpile.
    pub high_grade_usage: f64,
}

impl FitnessVector {
    pub const EMPTY: FitnessVector = FitnessVector {
        parcel_count: 0,
        concentrate_band: 0.0,
        duration_overrun: 0.0,
        negative_inventory: 0.0,
        u_recovery_excess: 0.0,
        f_recovery_excess: 0.0,
        cu_grade_shortfall: 0.0,
        copper: 0.0,
        high_grade_usage: 0.0,
    };

    pub fn accumulate(&mut self, other: &FitnessVector) {
        self.parcel_count += other.parcel_count;
        self.concentrate_band += other.concentrate_band;
        self.duration_overrun += other.duration_overrun;
        self.negative_inventory += other.negative_inventory;
        self.u_recovery_excess += other.u_recovery_excess;
        self.f_recovery_excess += other.f_recovery_excess;
        self.cu_grade_shortfall += other.cu_grade_shortfall;
        self.copper += other.copper;
        self.high_grade_usage += other.high_grade_usage;
    }

    /// Violation terms in lexicographic order, each measured from its floor.
    /// Values within [`FEASIBILITY_TOLERANCE`] are reported as zero.
    pub fn violations(&self) -> [f64; 6] {
        let snap = |x: f64| if x <= FEASIBILITY_TOLERANCE { 0.0 } else { x };
        [
            snap(self.concentrate_band - self.parcel_count as f64),
            snap(self.duration_overrun),
            snap(-self.negative_inventory),
            snap(self.u_recovery_excess),
            snap(self.f_recovery_excess),
            snap(self.cu_grade_shortfall),
        ]
    }

    pub fn is_feasible(&self) -> bool {
        self.violations().iter().all(|&v| v == 0.0)
    }
}

/// Whether every violation term sits at its floor.
pub fn is_feasible(fitness: &FitnessVector) -> bool {
    fitness.is_feasible()
}

fn compare_violations(a: &FitnessVector, b: &FitnessVector) -> Ordering {
    let (va, vb) = (a.violations(), b.violations());
    for (x, y) in va.iter().zip(&vb) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Violations first (smaller is better), then copper (larger is better).
pub fn compare_lex(a: &FitnessVector, b: &FitnessVector) -> Ordering {
    compare_violations(a, b).then_with(|| a.copper.total_cmp(&b.copper))
}

/// Violations first; among violation-tied candidates, Pareto dominance on
/// (max copper, min high-grade usage) with tolerance `tolerance` (relative
/// for copper, absolute for usage). Non-dominated pairs fall back to copper,
/// then lower usage.
pub fn compare_bi(a: &FitnessVector, b: &FitnessVector, tolerance: f64) -> Ordering {
    match compare_violations(a, b) {
        Ordering::Equal => {}
        other => return other,
    }
    let tol_c = tolerance * a.copper.abs().max(b.copper.abs());
    let dominates = |x: &FitnessVector, y: &FitnessVector| {
        x.copper >= y.copper - tol_c
            && x.high_grade_usage <= y.high_grade_usage + tolerance
            && (x.copper > y.copper + tol_c || x.high_grade_usage < y.high_grade_usage - tolerance)
    };
    if dominates(a, b) {
        Ordering::Greater
    } else if dominates(b, a) {
        Ordering::Less
    } else {
        a.copper
            .total_cmp(&b.copper)
            .then_with(|| b.high_grade_usage.total_cmp(&a.high_grade_usage))
    }
}

/// Which comparator drives selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessMode {
    Lex,
    Bi { tolerance: f64 },
}

impl FitnessMode {
    pub fn bi() -> Self {
        FitnessMode::Bi {
            tolerance: DEFAULT_BI_TOLERANCE,
        }
    }

    pub fn compare(&self, a: &FitnessVector, b: &FitnessVector) -> Ordering {
        match *self {
            FitnessMode::Lex => compare_lex(a, b),
            FitnessMode::Bi { tolerance } => compare_bi(a, b, tolerance),
        }
    }
}

/// One simulated month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthEvaluation {
    /// Stockpiles after the month's haul, before any claim.
    pub opening: StockpileState,
    pub high_grade_stockpile: Option<usize>,
    pub outcomes: Vec<ParcelOutcome>,
    /// State after each parcel's claim; the last entry closes the month.
    pub after_parcel: Vec<StockpileState>,
    pub fitness: FitnessVector,
}

impl MonthEvaluation {
    pub fn closing(&self) -> &StockpileState {
        self.after_parcel.last().unwrap_or(&self.opening)
    }
}

/// Opening state of `month` given the previous month's closing state.
pub fn month_opening(instance: &Instance, month: usize, start: &StockpileState) -> StockpileState {
    update_stockpile_month_start(start, &instance.haul_tonnage(month), &instance.haul_grades(month))
}

/// Index of the month's highest-Cu-grade stockpile among those its parcels use.
pub fn high_grade_stockpile(instance: &Instance, month: usize, opening: &StockpileState) -> Option<usize> {
    opening.highest_cu_grade(instance.stockpiles_used_in(month))
}

fn mix(state: &StockpileState, access: &[usize], fractions: &[f64]) -> Grades {
    let mut mixed = Grades::ZERO;
    for (&s, &x) in access.iter().zip(fractions) {
        for material in Material::ALL {
            mixed[material] += x * state.grades[s][material];
        }
    }
    mixed
}

/// Simulates one month from the previous month's closing state.
///
/// `plan` must already match the month's shape with normalized fractions;
/// [`evaluate`] checks that for whole solutions.
pub fn evaluate_month(instance: &Instance, month: usize, start: &StockpileState, plan: &MonthPlan) -> MonthEvaluation {
    let opening = month_opening(instance, month, start);
    let params = &instance.process;
    let bounds = &instance.bounds;
    let specs = instance.parcels_in(month);
    let star = high_grade_stockpile(instance, month, &opening);

    let mut fitness = FitnessVector {
        parcel_count: specs.len(),
        ..FitnessVector::EMPTY
    };
    let mut outcomes = Vec::with_capacity(specs.len());
    let mut after_parcel = Vec::with_capacity(specs.len());
    let mut state = opening.clone();

    for (spec, parcel) in specs.iter().zip(&plan.parcels) {
        let grades = mix(&opening, &spec.stockpiles, &parcel.fractions);
        let outcome = process::parcel_outcome(parcel.duration, &grades, month + 1, params);
        state = claim_from_stockpiles(&state, &spec.stockpiles, &parcel.fractions, outcome.volume);

        fitness.concentrate_band += (spec.target_concentrate - outcome.concentrate).abs().max(1.0);
        fitness.negative_inventory += state.tonnage.iter().map(|&t| t.min(0.0)).sum::<f64>();
        fitness.u_recovery_excess += (outcome.u_recovery - bounds.u_recovery_max).max(0.0);
        fitness.f_recovery_excess += (outcome.f_recovery - bounds.f_recovery_max).max(0.0);
        fitness.cu_grade_shortfall += (bounds.cu_grade_min - grades[Material::Cu]).max(0.0);
        fitness.copper += outcome.copper;
        if let Some(s) = star {
            if let Some(i) = spec.stockpiles.iter().position(|&x| x == s) {
                fitness.high_grade_usage += parcel.fractions[i];
            }
        }
        outcomes.push(outcome);
        after_parcel.push(state.clone());
    }
    fitness.duration_overrun = (plan.total_duration() - instance.available_duration(month)).max(0.0);

    MonthEvaluation {
        opening,
        high_grade_stockpile: star,
        outcomes,
        after_parcel,
        fitness,
    }
}

/// A fully simulated plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: FitnessVector,
    pub months: Vec<MonthEvaluation>,
}

impl Evaluation {
    pub fn outcomes(&self) -> impl Iterator<Item = &ParcelOutcome> {
        self.months.iter().flat_map(|m| m.outcomes.iter())
    }

    pub fn cu_grade_spread(&self) -> f64 {
        max_cu_grade_spread(self.outcomes()).unwrap_or(0.0)
    }

    pub fn closing(&self) -> Option<&StockpileState> {
        self.months.last().map(MonthEvaluation::closing)
    }
}

/// Simulates a whole plan from the instance's initial stockpiles.
pub fn evaluate(solution: &Solution, instance: &Instance) -> Result<Evaluation> {
    instance.check_solution_shape(solution)?;
    for (m, plan) in solution.months.iter().enumerate() {
        for (p, parcel) in plan.parcels.iter().enumerate() {
            let sum: f64 = parcel.fractions.iter().sum();
            if parcel.fractions.iter().any(|&x| x.is_nan() || x < 0.0) || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::contract(format!(
                    "fractions of month {m} parcel {p} are not normalized (sum {sum})"
                )));
            }
        }
    }
    let mut fitness = FitnessVector::EMPTY;
    let mut months = Vec::with_capacity(solution.months.len());
    let mut state = instance.initial_state();
    for (m, plan) in solution.months.iter().enumerate() {
        let month = evaluate_month(instance, m, &state, plan);
        fitness.accumulate(&month.fitness);
        state = month.closing().clone();
        months.push(month);
    }
    Ok(Evaluation { fitness, months })
}
