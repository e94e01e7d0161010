//! Surrogate processing-stage functions: throughput, parcel volume,
//! concentrate, copper and the Cu/F/U recoveries.
//!
//! The forms follow a plain mass balance (concentrate = feed x grade x
//! recovery / concentrate grade) and are linear in the processing duration,
//! so for fixed grades the concentrate produced is `rate * t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grades, Material, ParcelOutcome};

/// Lower clamp on the copper fraction of the concentrate.
pub const MIN_CONCENTRATE_GRADE: f64 = 0.05;
/// Throughput never drops below this share of the base rate.
pub const MIN_THROUGHPUT_SHARE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams {
    /// Per-month discount factor in (0, 1].
    pub discount: f64,
    /// Base throughput, tonnes per hour.
    pub base_throughput: f64,
    pub throughput_au: f64,
    pub throughput_u: f64,
    pub throughput_fe: f64,
    pub throughput_cu: f64,
    /// Copper fraction of the concentrate: `intercept + slope * g_Cu`.
    pub concentrate_grade_intercept: f64,
    pub concentrate_grade_slope: f64,
    pub f_recovery_factor: f64,
    pub u_recovery_factor: f64,
    /// Copper recovery: `intercept + slope * g_Cu`.
    pub cu_recovery_intercept: f64,
    pub cu_recovery_slope: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        ProcessParams {
            discount: 0.98,
            base_throughput: 100.0,
            throughput_au: 0.0,
            throughput_u: 0.0,
            throughput_fe: 0.5,
            throughput_cu: 5.0,
            concentrate_grade_intercept: 0.25,
            concentrate_grade_slope: 0.0,
            f_recovery_factor: 20.0,
            u_recovery_factor: 20.0,
            cu_recovery_intercept: 0.7,
            cu_recovery_slope: 5.0,
        }
    }
}

impl ProcessParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("discount", self.discount),
            ("base_throughput", self.base_throughput),
            ("throughput_au", self.throughput_au),
            ("throughput_u", self.throughput_u),
            ("throughput_fe", self.throughput_fe),
            ("throughput_cu", self.throughput_cu),
            ("concentrate_grade_intercept", self.concentrate_grade_intercept),
            ("concentrate_grade_slope", self.concentrate_grade_slope),
            ("f_recovery_factor", self.f_recovery_factor),
            ("u_recovery_factor", self.u_recovery_factor),
            ("cu_recovery_intercept", self.cu_recovery_intercept),
            ("cu_recovery_slope", self.cu_recovery_slope),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::invalid(format!("process.{name}"), "must be finite"));
            }
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::invalid("process.discount", "must lie in (0, 1]"));
        }
        if self.base_throughput <= 0.0 {
            return Err(Error::invalid("process.base_throughput", "must be positive"));
        }
        if self.concentrate_grade_intercept <= 0.0 {
            return Err(Error::invalid(
                "process.concentrate_grade_intercept",
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// Feed rate in tonnes per hour for a blend.
pub fn throughput(grades: &Grades, params: &ProcessParams) -> f64 {
    let factor = 1.0
        + params.throughput_cu * grades[Material::Cu]
        + params.throughput_fe * grades[Material::Fe]
        + params.throughput_au * grades[Material::Au]
        + params.throughput_u * grades[Material::U];
    (params.base_throughput * factor).max(MIN_THROUGHPUT_SHARE * params.base_throughput)
}

/// Feed tonnes processed in `duration` hours.
pub fn parcel_volume(duration: f64, grades: &Grades, params: &ProcessParams) -> f64 {
    duration * throughput(grades, params)
}

pub fn cu_recovery(cu_grade: f64, params: &ProcessParams) -> f64 {
    (params.cu_recovery_intercept + params.cu_recovery_slope * cu_grade).clamp(0.0, 1.0)
}

pub fn f_recovery(f_grade: f64, params: &ProcessParams) -> f64 {
    (params.f_recovery_factor * f_grade).clamp(0.0, 1.0)
}

pub fn u_recovery(u_grade: f64, params: &ProcessParams) -> f64 {
    (params.u_recovery_factor * u_grade).clamp(0.0, 1.0)
}

/// Copper fraction of the produced concentrate.
pub fn concentrate_grade(cu_grade: f64, params: &ProcessParams) -> f64 {
    (params.concentrate_grade_intercept + params.concentrate_grade_slope * cu_grade)
        .clamp(MIN_CONCENTRATE_GRADE, 1.0)
}

/// Concentrate tonnes produced in `duration` hours.
pub fn concentrate(duration: f64, grades: &Grades, params: &ProcessParams) -> f64 {
    let cu = grades[Material::Cu];
    parcel_volume(duration, grades, params) * cu * cu_recovery(cu, params)
        / concentrate_grade(cu, params)
}

/// Discounted copper tonnes; `month` is 1-based.
pub fn copper_tonnes(duration: f64, grades: &Grades, month: usize, params: &ProcessParams) -> f64 {
    let cu = grades[Material::Cu];
    discount_factor(month, params) * parcel_volume(duration, grades, params) * cu * cu_recovery(cu, params)
}

/// `discount^(month - 1)`.
pub fn discount_factor(month: usize, params: &ProcessParams) -> f64 {
    params.discount.powi(month.saturating_sub(1) as i32)
}

pub fn parcel_outcome(duration: f64, grades: &Grades, month: usize, params: &ProcessParams) -> ParcelOutcome {
    ParcelOutcome {
        grades: *grades,
        volume: parcel_volume(duration, grades, params),
        concentrate: concentrate(duration, grades, params),
        copper: copper_tonnes(duration, grades, month, params),
        cu_recovery: cu_recovery(grades[Material::Cu], params),
        f_recovery: f_recovery(grades[Material::F], params),
        u_recovery: u_recovery(grades[Material::U], params),
    }
}
