//! Seeded synthetic instances.
//!
//! Stockpile and haul grades and tonnages are drawn at random; targets and
//! bounds are then calibrated on a probe plan (equal fractions over each
//! parcel's stockpiles, month duration split evenly between parcels) so the
//! probe is feasible by construction.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::evaluate;
use crate::instance::{Bounds, Instance, Lot, Meta, ParcelSpec};
use crate::model::{Grades, Material, MonthPlan, ParcelPlan, Solution};
use crate::process::ProcessParams;
use crate::rng;

pub const MONTH_HOURS: f64 = 720.0;
pub const CU_GRADE_SPREAD: f64 = 0.005;
const CU_BOUND_SHARE: f64 = 0.9;
const RECOVERY_BOUND_MARGIN: f64 = 1.2;
const MAX_CALIBRATION_ROUNDS: usize = 64;

/// Dimensions of a generated instance.
///
/// Parcel `p` of a month may draw from stockpiles `0..access[m][p]`, so a
/// month with access sizes `{6, 7}` has one parcel using six stockpiles and
/// another using those six plus a seventh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub access: Vec<Vec<usize>>,
}

impl Shape {
    /// `parcels` holds one count for every month or a single shared count.
    /// `stockpiles` holds one access size per parcel of every month, one per
    /// parcel shared by all months, or a single shared size.
    pub fn new(months: usize, parcels: &[usize], stockpiles: &[usize]) -> Result<Self> {
        if months == 0 {
            return Err(Error::Config("at least one month is required".into()));
        }
        let counts: Vec<usize> = match parcels {
            [n] => vec![*n; months],
            list if list.len() == months => list.to_vec(),
            list => {
                return Err(Error::Config(format!(
                    "expected 1 or {months} parcel counts, got {}",
                    list.len()
                )))
            }
        };
        if counts.contains(&0) {
            return Err(Error::Config("every month needs at least one parcel".into()));
        }
        if stockpiles.is_empty() || stockpiles.contains(&0) {
            return Err(Error::Config("every parcel needs at least one stockpile".into()));
        }
        let total: usize = counts.iter().sum();
        let access = match stockpiles {
            [s] => counts.iter().map(|&n| vec![*s; n]).collect(),
            list if list.len() == total => {
                let mut rest = list;
                counts
                    .iter()
                    .map(|&n| {
                        let (head, tail) = rest.split_at(n);
                        rest = tail;
                        head.to_vec()
                    })
                    .collect()
            }
            list if counts.iter().all(|&n| n == list.len()) => vec![list.to_vec(); months],
            list => {
                return Err(Error::Config(format!(
                    "expected 1, {} or {total} stockpile counts, got {}",
                    counts[0],
                    list.len()
                )))
            }
        };
        Ok(Shape { access })
    }

    pub fn months(&self) -> usize {
        self.access.len()
    }

    pub fn stockpiles(&self) -> usize {
        self.access.iter().flatten().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parcels: usize = self.access.iter().map(Vec::len).sum();
        let length: usize = self.access.iter().flatten().sum();
        write!(f, "M{} P{} L{}", self.months(), parcels, length)?;
        if self.months() == 1 {
            let sets: Vec<String> = self.access[0].iter().map(usize::to_string).collect();
            write!(f, " {{{}}}", sets.join(","))?;
        }
        Ok(())
    }
}

impl From<&Instance> for Shape {
    fn from(instance: &Instance) -> Self {
        Shape {
            access: instance
                .parcels
                .iter()
                .map(|month| month.iter().map(|p| p.stockpiles.len()).collect())
                .collect(),
        }
    }
}

fn random_grades(rng: &mut impl Rng) -> Grades {
    Grades::from_fn(|material| match material {
        Material::Cu => rng.random_range(0.01..0.04),
        Material::Fe => rng.random_range(0.05..0.3),
        _ => rng.random_range(0.0..0.01),
    })
}

fn random_lot(rng: &mut impl Rng, tonnage: std::ops::Range<f64>) -> Lot {
    Lot {
        tonnage: rng.random_range(tonnage),
        grades: random_grades(rng),
    }
}

/// Builds a deterministic instance for `shape` and `seed`.
pub fn generate_instance(shape: &Shape, seed: u64) -> Instance {
    let mut rng = rng::stream(seed, &[]);
    let stockpiles = shape.stockpiles();
    let initial = (0..stockpiles).map(|_| random_lot(&mut rng, 1e5..5e5)).collect();
    let haul = (0..shape.months())
        .map(|_| (0..stockpiles).map(|_| random_lot(&mut rng, 2e4..1e5)).collect())
        .collect();
    let parcels = shape
        .access
        .iter()
        .map(|month| {
            month
                .iter()
                .map(|&size| ParcelSpec {
                    target_concentrate: 1.0,
                    stockpiles: (0..size).collect(),
                })
                .collect()
        })
        .collect();
    let mut instance = Instance {
        meta: Meta {
            name: format!("synthetic-{seed}"),
            available_duration: vec![MONTH_HOURS; shape.months()],
        },
        process: ProcessParams::default(),
        stockpiles: initial,
        haul,
        parcels,
        bounds: Bounds {
            cu_grade_min: 0.0,
            f_recovery_max: 1.0,
            u_recovery_max: 1.0,
            cu_grade_spread: CU_GRADE_SPREAD,
        },
    };
    calibrate(&mut instance);
    instance
}

/// Equal fractions over each parcel's stockpiles; each month's hours split
/// evenly between its parcels.
pub fn probe_solution(instance: &Instance) -> Solution {
    Solution {
        months: instance
            .parcels
            .iter()
            .enumerate()
            .map(|(m, specs)| {
                let duration = instance.available_duration(m) / specs.len() as f64;
                MonthPlan {
                    parcels: specs
                        .iter()
                        .map(|spec| ParcelPlan {
                            fractions: vec![1.0 / spec.stockpiles.len() as f64; spec.stockpiles.len()],
                            duration,
                        })
                        .collect(),
                }
            })
            .collect(),
    }
}

/// Makes the probe plan feasible: tops up initial stockpiles the probe would
/// overdraw, then sets targets to the probe's concentrate and derives the
/// grade and recovery bounds from the probe outcomes.
pub fn calibrate(instance: &mut Instance) {
    let probe = probe_solution(instance);
    let mut evaluation = evaluate(&probe, instance).expect("probe matches the instance shape");
    for _ in 0..MAX_CALIBRATION_ROUNDS {
        let mut deficit = vec![0.0f64; instance.stockpile_count()];
        for state in evaluation.months.iter().flat_map(|m| m.after_parcel.iter()) {
            for (d, &t) in deficit.iter_mut().zip(&state.tonnage) {
                *d = d.max(-t);
            }
        }
        if deficit.iter().all(|&d| d == 0.0) {
            break;
        }
        for (lot, d) in instance.stockpiles.iter_mut().zip(deficit) {
            if d > 0.0 {
                lot.tonnage += 1.1 * d + 1e3;
            }
        }
        evaluation = evaluate(&probe, instance).expect("probe matches the instance shape");
    }

    for (specs, month) in instance.parcels.iter_mut().zip(&evaluation.months) {
        for (spec, outcome) in specs.iter_mut().zip(&month.outcomes) {
            spec.target_concentrate = outcome.concentrate.max(1.0);
        }
    }
    let outcomes: Vec<_> = evaluation.outcomes().collect();
    let min_cu = outcomes.iter().map(|o| o.grades[Material::Cu]).fold(f64::INFINITY, f64::min);
    let max_f = outcomes.iter().map(|o| o.f_recovery).fold(0.0, f64::max);
    let max_u = outcomes.iter().map(|o| o.u_recovery).fold(0.0, f64::max);
    instance.bounds.cu_grade_min = (CU_BOUND_SHARE * min_cu).clamp(0.0, 1.0);
    instance.bounds.f_recovery_max = (RECOVERY_BOUND_MARGIN * max_f).min(1.0);
    instance.bounds.u_recovery_max = (RECOVERY_BOUND_MARGIN * max_u).min(1.0);
}
