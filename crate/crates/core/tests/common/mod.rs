#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use stockblend_core::instance::Instance;
use stockblend_core::model::{MonthPlan, ParcelPlan, Solution};

/// A normalized random plan with durations drawn in `[0, 1.2 D / P]`, so the
/// concentrate band and the duration limit are sometimes met and sometimes not.
pub fn random_solution(instance: &Instance, rng: &mut impl Rng) -> Solution {
    Solution {
        months: instance
            .parcels
            .iter()
            .enumerate()
            .map(|(m, specs)| MonthPlan {
                parcels: specs
                    .iter()
                    .map(|spec| {
                        let raw: Vec<f64> = spec.stockpiles.iter().map(|_| rng.random::<f64>()).collect();
                        let sum: f64 = raw.iter().sum();
                        ParcelPlan {
                            fractions: raw.iter().map(|x| x / sum).collect(),
                            duration: rng.random_range(0.0..1.2) * instance.available_duration(m) / specs.len() as f64,
                        }
                    })
                    .collect(),
            })
            .collect(),
    }
}
