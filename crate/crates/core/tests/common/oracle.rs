//! A second, deliberately plain simulation of a plan, written from the model
//! equations without calling into the crate's simulation code. Tests compare
//! the crate against it.

use stockblend_core::instance::Instance;
use stockblend_core::model::{Material, Solution};

const MATERIALS: [Material; 7] = [
    Material::Cu,
    Material::Ag,
    Material::Fe,
    Material::Au,
    Material::U,
    Material::F,
    Material::S,
];
const CU: usize = 0;
const FE: usize = 2;
const AU: usize = 3;
const U: usize = 4;
const F: usize = 5;

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OracleParcel {
    pub month: usize,
    pub parcel: usize,
    pub grades: [f64; 7],
    pub volume: f64,
    pub concentrate: f64,
    pub copper: f64,
    pub cu_recovery: f64,
    pub f_recovery: f64,
    pub u_recovery: f64,
}

#[derive(Debug, Clone)]
pub struct OracleMonth {
    pub start_tonnage: Vec<f64>,
    pub opening_tonnage: Vec<f64>,
    pub opening_grades: Vec<[f64; 7]>,
    /// Tonnages after each parcel's claim.
    pub claims: Vec<Vec<f64>>,
    pub hauled: f64,
    pub claimed: f64,
    /// Undiscounted copper of the month.
    pub raw_copper: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub months: Vec<OracleMonth>,
    pub parcels: Vec<OracleParcel>,
    pub copper: f64,
}

impl Trajectory {
    pub fn final_tonnage(&self) -> &[f64] {
        let last = self.months.last().expect("at least one month");
        last.claims.last().unwrap_or(&last.opening_tonnage)
    }
}

fn grades_of(lot: &stockblend_core::instance::Lot) -> [f64; 7] {
    let mut g = [0.0; 7];
    for (i, m) in MATERIALS.iter().enumerate() {
        g[i] = lot.grades[*m];
    }
    g
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

pub fn simulate(instance: &Instance, solution: &Solution) -> Trajectory {
    let pp = &instance.process;
    let mut tonnage: Vec<f64> = instance.stockpiles.iter().map(|l| l.tonnage).collect();
    let mut grades: Vec<[f64; 7]> = instance.stockpiles.iter().map(grades_of).collect();
    let mut months = Vec::new();
    let mut parcels = Vec::new();
    let mut copper = 0.0;

    for (m, plan) in solution.months.iter().enumerate() {
        let start_tonnage = tonnage.clone();
        let mut hauled = 0.0;
        for (s, lot) in instance.haul[m].iter().enumerate() {
            let h = lot.tonnage;
            hauled += h;
            if h != 0.0 && tonnage[s] + h > 0.0 {
                let hg = grades_of(lot);
                for o in 0..7 {
                    grades[s][o] = (grades[s][o] * tonnage[s] + hg[o] * h) / (tonnage[s] + h);
                }
            }
            tonnage[s] += h;
        }
        let opening_tonnage = tonnage.clone();
        let opening_grades = grades.clone();

        let mut claims = Vec::new();
        let mut claimed = 0.0;
        let mut raw_copper = 0.0;
        let discount = pp.discount.powi(m as i32);
        for (p, (spec, parcel)) in instance.parcels[m].iter().zip(&plan.parcels).enumerate() {
            let mut g = [0.0; 7];
            for (&s, &x) in spec.stockpiles.iter().zip(&parcel.fractions) {
                for o in 0..7 {
                    g[o] += x * opening_grades[s][o];
                }
            }
            let rate = pp.base_throughput
                * (1.0
                    + pp.throughput_cu * g[CU]
                    + pp.throughput_fe * g[FE]
                    + pp.throughput_au * g[AU]
                    + pp.throughput_u * g[U]);
            let rate = rate.max(0.1 * pp.base_throughput);
            let volume = parcel.duration * rate;
            let r_cu = clamp(pp.cu_recovery_intercept + pp.cu_recovery_slope * g[CU], 0.0, 1.0);
            let r_f = clamp(pp.f_recovery_factor * g[F], 0.0, 1.0);
            let r_u = clamp(pp.u_recovery_factor * g[U], 0.0, 1.0);
            let gamma = clamp(pp.concentrate_grade_intercept + pp.concentrate_grade_slope * g[CU], 0.05, 1.0);
            let metal = volume * g[CU] * r_cu;
            for (&s, &x) in spec.stockpiles.iter().zip(&parcel.fractions) {
                tonnage[s] -= x * volume;
            }
            claims.push(tonnage.clone());
            claimed += volume;
            raw_copper += metal;
            copper += discount * metal;
            parcels.push(OracleParcel {
                month: m,
                parcel: p,
                grades: g,
                volume,
                concentrate: metal / gamma,
                copper: discount * metal,
                cu_recovery: r_cu,
                f_recovery: r_f,
                u_recovery: r_u,
            });
        }
        months.push(OracleMonth {
            start_tonnage,
            opening_tonnage,
            opening_grades,
            claims,
            hauled,
            claimed,
            raw_copper,
        });
    }
    Trajectory {
        months,
        parcels,
        copper,
    }
}

/// Every constraint of the model that `solution` breaks, checked one by one
/// on the re-simulated trajectory. Empty means feasible.
pub fn violations(instance: &Instance, solution: &Solution) -> Vec<String> {
    let traj = simulate(instance, solution);
    let b = &instance.bounds;
    let mut out = Vec::new();
    for (m, plan) in solution.months.iter().enumerate() {
        let total: f64 = plan.parcels.iter().map(|p| p.duration).sum();
        if total > instance.meta.available_duration[m] + TOLERANCE {
            out.push(format!("month {m}: {total} hours scheduled"));
        }
        for (p, parcel) in plan.parcels.iter().enumerate() {
            let sum: f64 = parcel.fractions.iter().sum();
            if (sum - 1.0).abs() > TOLERANCE || parcel.fractions.iter().any(|&x| x < 0.0) {
                out.push(format!("month {m} parcel {p}: fractions sum to {sum}"));
            }
        }
        for (p, after) in traj.months[m].claims.iter().enumerate() {
            for (s, &t) in after.iter().enumerate() {
                if t < -TOLERANCE {
                    out.push(format!("month {m} parcel {p}: stockpile {s} at {t} t"));
                }
            }
        }
    }
    for parcel in &traj.parcels {
        let (m, p) = (parcel.month, parcel.parcel);
        let target = instance.parcels[m][p].target_concentrate;
        if (parcel.concentrate - target).abs() > 1.0 + TOLERANCE {
            out.push(format!("month {m} parcel {p}: concentrate {} vs {target}", parcel.concentrate));
        }
        if parcel.grades[CU] < b.cu_grade_min - TOLERANCE {
            out.push(format!("month {m} parcel {p}: Cu grade {}", parcel.grades[CU]));
        }
        if parcel.f_recovery > b.f_recovery_max + TOLERANCE {
            out.push(format!("month {m} parcel {p}: F recovery {}", parcel.f_recovery));
        }
        if parcel.u_recovery > b.u_recovery_max + TOLERANCE {
            out.push(format!("month {m} parcel {p}: U recovery {}", parcel.u_recovery));
        }
    }
    out
}

pub fn is_feasible(instance: &Instance, solution: &Solution) -> bool {
    violations(instance, solution).is_empty()
}
