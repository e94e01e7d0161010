//! Problem instances and the `.sbp.json` file format.
//!
//! ```json
//! {
//!   "meta":       { "name": "...", "available_duration": [720.0, ...] },
//!   "process":    { "discount": 0.98, "base_throughput": 100.0, ... },
//!   "stockpiles": [ { "tonnage": 2.5e5, "grades": { "Cu": 0.02, "F": 0.001, "U": 0.0, ... } } ],
//!   "haul":       [ [ { "tonnage": 4.0e4, "grades": { ... } }, ... one per stockpile ], ... one per month ],
//!   "parcels":    [ [ { "target_concentrate": 3500.0, "stockpiles": [0, 1, 2] }, ... ], ... one per month ],
//!   "bounds":     { "cu_grade_min": 0.02, "f_recovery_max": 0.2, "u_recovery_max": 0.1, "cu_grade_spread": 0.005 }
//! }
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grades, Material, MonthPlan, Solution, StockpileState};
use crate::process::ProcessParams;

pub const FILE_EXTENSION: &str = "sbp.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    /// Available processing hours per month.
    pub available_duration: Vec<f64>,
}

/// Tonnage with its grades: an initial stockpile or one month's haul onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lot {
    pub tonnage: f64,
    pub grades: Grades,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParcelSpec {
    /// Contracted concentrate tonnes.
    pub target_concentrate: f64,
    /// Stockpiles this parcel may draw from, in fraction order.
    pub stockpiles: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub cu_grade_min: f64,
    pub f_recovery_max: f64,
    pub u_recovery_max: f64,
    /// Allowed spread of parcel Cu grades; reported, not enforced.
    pub cu_grade_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub meta: Meta,
    pub process: ProcessParams,
    pub stockpiles: Vec<Lot>,
    pub haul: Vec<Vec<Lot>>,
    pub parcels: Vec<Vec<ParcelSpec>>,
    pub bounds: Bounds,
}

impl Instance {
    pub fn months(&self) -> usize {
        self.parcels.len()
    }

    pub fn stockpile_count(&self) -> usize {
        self.stockpiles.len()
    }

    pub fn parcels_in(&self, month: usize) -> &[ParcelSpec] {
        &self.parcels[month]
    }

    pub fn total_parcels(&self) -> usize {
        self.parcels.iter().map(Vec::len).sum()
    }

    /// Number of blending fractions across the plan.
    pub fn fraction_count(&self) -> usize {
        self.parcels.iter().flatten().map(|p| p.stockpiles.len()).sum()
    }

    pub fn available_duration(&self, month: usize) -> f64 {
        self.meta.available_duration[month]
    }

    pub fn initial_state(&self) -> StockpileState {
        StockpileState {
            tonnage: self.stockpiles.iter().map(|l| l.tonnage).collect(),
            grades: self.stockpiles.iter().map(|l| l.grades).collect(),
        }
    }

    pub fn haul_tonnage(&self, month: usize) -> Vec<f64> {
        self.haul[month].iter().map(|l| l.tonnage).collect()
    }

    pub fn haul_grades(&self, month: usize) -> Vec<Grades> {
        self.haul[month].iter().map(|l| l.grades).collect()
    }

    /// Stockpiles referenced by at least one parcel of `month`, ascending.
    pub fn stockpiles_used_in(&self, month: usize) -> Vec<usize> {
        let mut used: Vec<usize> = self.parcels[month]
            .iter()
            .flat_map(|p| p.stockpiles.iter().copied())
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Checks every structural and range invariant, naming the first bad field.
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        let months = self.parcels.len();
        let stockpiles = self.stockpiles.len();
        if months == 0 {
            return Err(Error::invalid("parcels", "at least one month is required"));
        }
        if stockpiles == 0 {
            return Err(Error::invalid("stockpiles", "at least one stockpile is required"));
        }
        if self.meta.available_duration.len() != months {
            return Err(Error::invalid(
                "meta.available_duration",
                format!("expected {months} entries, found {}", self.meta.available_duration.len()),
            ));
        }
        for (m, &d) in self.meta.available_duration.iter().enumerate() {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(format!("meta.available_duration[{m}]"), "must be positive"));
            }
        }
        for (s, lot) in self.stockpiles.iter().enumerate() {
            check_lot(lot, &format!("stockpiles[{s}]"))?;
        }
        if self.haul.len() != months {
            return Err(Error::invalid(
                "haul",
                format!("expected {months} months, found {}", self.haul.len()),
            ));
        }
        for (m, month) in self.haul.iter().enumerate() {
            if month.len() != stockpiles {
                return Err(Error::invalid(
                    format!("haul[{m}]"),
                    format!("expected {stockpiles} stockpiles, found {}", month.len()),
                ));
            }
            for (s, lot) in month.iter().enumerate() {
                check_lot(lot, &format!("haul[{m}][{s}]"))?;
            }
        }
        for (m, month) in self.parcels.iter().enumerate() {
            if month.is_empty() {
                return Err(Error::invalid(format!("parcels[{m}]"), "a month needs at least one parcel"));
            }
            for (p, parcel) in month.iter().enumerate() {
                let path = format!("parcels[{m}][{p}]");
                let k = parcel.target_concentrate;
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::invalid(format!("{path}.target_concentrate"), "must be positive"));
                }
                if parcel.stockpiles.is_empty() {
                    return Err(Error::invalid(format!("{path}.stockpiles"), "must not be empty"));
                }
                for (i, &s) in parcel.stockpiles.iter().enumerate() {
                    if s >= stockpiles {
                        return Err(Error::invalid(
                            format!("{path}.stockpiles[{i}]"),
                            format!("stockpile {s} does not exist"),
                        ));
                    }
                    if parcel.stockpiles[..i].contains(&s) {
                        return Err(Error::invalid(
                            format!("{path}.stockpiles[{i}]"),
                            format!("stockpile {s} listed twice"),
                        ));
                    }
                }
            }
        }
        let b = &self.bounds;
        for (name, value) in [
            ("cu_grade_min", b.cu_grade_min),
            ("f_recovery_max", b.f_recovery_max),
            ("u_recovery_max", b.u_recovery_max),
            ("cu_grade_spread", b.cu_grade_spread),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::invalid(format!("bounds.{name}"), "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Checks that `solution` has one fraction per accessible stockpile and
    /// one duration per parcel.
    pub fn check_solution_shape(&self, solution: &Solution) -> Result<()> {
        if solution.months.len() != self.months() {
            return Err(Error::invalid(
                "months",
                format!("expected {} months, found {}", self.months(), solution.months.len()),
            ));
        }
        for (m, plan) in solution.months.iter().enumerate() {
            self.check_month_shape(m, plan)?;
        }
        Ok(())
    }

    pub fn check_month_shape(&self, month: usize, plan: &MonthPlan) -> Result<()> {
        let specs = &self.parcels[month];
        if plan.parcels.len() != specs.len() {
            return Err(Error::invalid(
                format!("months[{month}].parcels"),
                format!("expected {} parcels, found {}", specs.len(), plan.parcels.len()),
            ));
        }
        for (p, (parcel, spec)) in plan.parcels.iter().zip(specs).enumerate() {
            if parcel.fractions.len() != spec.stockpiles.len() {
                return Err(Error::invalid(
                    format!("months[{month}].parcels[{p}].fractions"),
                    format!("expected {} fractions, found {}", spec.stockpiles.len(), parcel.fractions.len()),
                ));
            }
            if !parcel.duration.is_finite() {
                return Err(Error::invalid(format!("months[{month}].parcels[{p}].duration"), "must be finite"));
            }
        }
        Ok(())
    }
}

fn check_lot(lot: &Lot, path: &str) -> Result<()> {
    if !(lot.tonnage.is_finite() && lot.tonnage >= 0.0) {
        return Err(Error::invalid(format!("{path}.tonnage"), "must be a nonnegative number"));
    }
    for material in Material::ALL {
        let g = lot.grades[material];
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::invalid(
                format!("{path}.grades.{material}"),
                format!("grade {g} outside [0, 1]"),
            ));
        }
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|source| Error::Io {
        file: path.to_path_buf(),
        source,
    })?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        path: e.path().to_string(),
        source: e.into_inner(),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        file: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n").map_err(io_err)?;
    writer.flush().map_err(io_err)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let instance: Instance = read_json(path.as_ref())?;
    instance.validate()?;
    Ok(instance)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    write_json(instance, path.as_ref())
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<Solution> {
    read_json(path.as_ref())
}

pub fn save_solution(solution: &Solution, path: impl AsRef<Path>) -> Result<()> {
    write_json(solution, path.as_ref())
}

pub(crate) fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_json(value, path.as_ref())
}
