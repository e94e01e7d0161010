//! Domain types and the published parts of the blending model: grade mixing,
//! stockpile state transitions and the decision vector.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of parcel weights accepted by [`mix_parcel_grades`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Material {
    Cu,
    Ag,
    Fe,
    Au,
    U,
    F,
    S,
}

impl Material {
    pub const ALL: [Material; 7] = [
        Material::Cu,
        Material::Ag,
        Material::Fe,
        Material::Au,
        Material::U,
        Material::F,
        Material::S,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Material::Cu => "Cu",
            Material::Ag => "Ag",
            Material::Fe => "Fe",
            Material::Au => "Au",
            Material::U => "U",
            Material::F => "F",
            Material::S => "S",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mass fractions of every material, indexed by [`Material`].
///
/// Serialized as a map keyed by material name. `Cu`, `F` and `U` are
/// mandatory because the constraints read them; the rest default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "GradeRecord", into = "GradeRecord")]
pub struct Grades([f64; 7]);

impl Grades {
    pub const ZERO: Grades = Grades([0.0; 7]);

    pub fn from_fn(mut f: impl FnMut(Material) -> f64) -> Self {
        let mut values = [0.0; 7];
        for material in Material::ALL {
            values[material.index()] = f(material);
        }
        Grades(values)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Material, f64)> + '_ {
        Material::ALL.into_iter().map(|m| (m, self[m]))
    }
}

impl Index<Material> for Grades {
    type Output = f64;

    fn index(&self, material: Material) -> &f64 {
        &self.0[material.index()]
    }
}

impl IndexMut<Material> for Grades {
    fn index_mut(&mut self, material: Material) -> &mut f64 {
        &mut self.0[material.index()]
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GradeRecord {
    #[serde(rename = "Cu")]
    cu: f64,
    #[serde(rename = "Ag", default)]
    ag: f64,
    #[serde(rename = "Fe", default)]
    fe: f64,
    #[serde(rename = "Au", default)]
    au: f64,
    #[serde(rename = "U")]
    u: f64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "S", default)]
    s: f64,
}

impl From<GradeRecord> for Grades {
    fn from(r: GradeRecord) -> Self {
        Grades([r.cu, r.ag, r.fe, r.au, r.u, r.f, r.s])
    }
}

impl From<Grades> for GradeRecord {
    fn from(g: Grades) -> Self {
        let [cu, ag, fe, au, u, f, s] = g.0;
        GradeRecord {
            cu,
            ag,
            fe,
            au,
            u,
            f,
            s,
        }
    }
}

/// Tonnage and homogeneous grades of every stockpile at one point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockpileState {
    pub tonnage: Vec<f64>,
    pub grades: Vec<Grades>,
}

impl StockpileState {
    pub fn len(&self) -> usize {
        self.tonnage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tonnage.is_empty()
    }

    pub fn total_tonnage(&self) -> f64 {
        self.tonnage.iter().sum()
    }

    /// Index of the stockpile with the highest copper grade among `candidates`.
    /// Ties go to the lowest index.
    pub fn highest_cu_grade(&self, candidates: impl IntoIterator<Item = usize>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for s in candidates {
            match best {
                Some(b) if self.grades[s][Material::Cu] > self.grades[b][Material::Cu] => {
                    best = Some(s)
                }
                Some(b) if self.grades[s][Material::Cu] == self.grades[b][Material::Cu] && s < b => {
                    best = Some(s)
                }
                None => best = Some(s),
                _ => {}
            }
        }
        best
    }
}

/// Blending fractions and processing duration for one parcel.
///
/// `fractions[i]` is the share drawn from the i-th stockpile in the parcel's
/// access list, not from stockpile `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcelPlan {
    pub fractions: Vec<f64>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MonthPlan {
    pub parcels: Vec<ParcelPlan>,
}

impl MonthPlan {
    pub fn total_duration(&self) -> f64 {
        self.parcels.iter().map(|p| p.duration).sum()
    }
}

/// A full decision vector: one [`MonthPlan`] per planning month.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub months: Vec<MonthPlan>,
}

/// Everything the process model derives for one parcel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParcelOutcome {
    pub grades: Grades,
    /// Feed tonnes processed.
    pub volume: f64,
    /// Concentrate tonnes produced.
    pub concentrate: f64,
    /// Discounted copper tonnes.
    pub copper: f64,
    pub cu_recovery: f64,
    pub f_recovery: f64,
    pub u_recovery: f64,
}

/// Parcel grades as the weighted sum of the accessible stockpiles' grades.
///
/// `access[i]` is the stockpile index carrying `weights[i]`.
pub fn mix_parcel_grades(state: &StockpileState, access: &[usize], weights: &[f64]) -> Result<Grades> {
    check_weights(state, access, weights)?;
    let mut mixed = Grades::ZERO;
    for (&s, &x) in access.iter().zip(weights) {
        for material in Material::ALL {
            mixed[material] += x * state.grades[s][material];
        }
    }
    Ok(mixed)
}

fn check_weights(state: &StockpileState, access: &[usize], weights: &[f64]) -> Result<()> {
    if access.len() != weights.len() {
        return Err(Error::contract(format!(
            "{} weights for {} accessible stockpiles",
            weights.len(),
            access.len()
        )));
    }
    if let Some(&s) = access.iter().find(|&&s| s >= state.len()) {
        return Err(Error::contract(format!("stockpile {s} does not exist")));
    }
    if weights.iter().any(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::contract("weights must be nonnegative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::contract(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Month-start update: blends each stockpile with the material hauled onto it.
///
/// A stockpile that is empty and receives nothing keeps its previous grades.
pub fn update_stockpile_month_start(
    state: &StockpileState,
    haul_tonnage: &[f64],
    haul_grades: &[Grades],
) -> StockpileState {
    let mut next = state.clone();
    for s in 0..state.len() {
        let theta = state.tonnage[s];
        let hauled = haul_tonnage[s];
        let total = theta + hauled;
        if hauled != 0.0 && total > 0.0 {
            for material in Material::ALL {
                next.grades[s][material] =
                    (state.grades[s][material] * theta + haul_grades[s][material] * hauled) / total;
            }
        }
        next.tonnage[s] = total;
    }
    next
}

/// Removes a parcel's feed from its stockpiles. Grades are untouched and
/// negative tonnage is allowed; fitness scores it.
pub fn claim_from_stockpiles(
    state: &StockpileState,
    access: &[usize],
    fractions: &[f64],
    parcel_volume: f64,
) -> StockpileState {
    let mut next = state.clone();
    for (&s, &x) in access.iter().zip(fractions) {
        next.tonnage[s] -= x * parcel_volume;
    }
    next
}

/// Largest pairwise difference between parcel copper grades.
pub fn max_cu_grade_spread<'a>(outcomes: impl IntoIterator<Item = &'a ParcelOutcome>) -> Result<f64> {
    let mut range: Option<(f64, f64)> = None;
    for outcome in outcomes {
        let g = outcome.grades[Material::Cu];
        range = Some(match range {
            None => (g, g),
            Some((lo, hi)) => (lo.min(g), hi.max(g)),
        });
    }
    range
        .map(|(lo, hi)| hi - lo)
        .ok_or_else(|| Error::contract("Cu-grade spread of an empty plan"))
}
