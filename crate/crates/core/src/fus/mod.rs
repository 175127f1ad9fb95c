//! Reduced-order focused-ultrasound power transfer: layered acoustic path,
//! lumped piezoelectric harvester, multi-element summation and safety gating.

mod path;
mod piezo;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::units::de;
use crate::Scalar;

pub use path::{focal_pressure, thermal_estimate, AcousticLayer, AcousticPath};
pub use piezo::{
    array_power, harvest_sweep, optimal_load, optimal_operating_point, orientation_factor, piezo_power, ArrayPower,
    HarvestSurface, OperatingPoint, PiezoElement, SIX_ELEMENT_ORIENTATIONS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusError {
    #[error("orientation {0} deg outside [0, 90]")]
    Orientation(f64),
    #[error("invalid parameter: {0}")]
    Invalid(&'static str),
    #[error("safety limits violated: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Unsafe { violations: Vec<Violation> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Pressure { p0: f64, max: f64 },
    Temperature { rise: f64, max: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Pressure { p0, max } => write!(f, "source pressure {p0} Pa exceeds {max} Pa"),
            Violation::Temperature { rise, max } => write!(f, "temperature rise {rise:.3} C exceeds {max} C"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct SafetyLimits<T> {
    #[serde(deserialize_with = "de::pressure")]
    pub p0_max: T,
    /// Allowed steady-state temperature rise, degrees C.
    #[serde(rename = "dT_max", deserialize_with = "de::dimensionless")]
    pub dt_max: T,
}

impl<T: Scalar> Default for SafetyLimits<T> {
    fn default() -> Self {
        Self { p0_max: T::lit(30e3), dt_max: T::lit(2.0) }
    }
}

impl<T: Scalar> SafetyLimits<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p0_max > T::zero() && self.dt_max > T::zero() {
            Ok(())
        } else {
            Err(ConfigError::Invalid("safety limits must be positive".into()))
        }
    }
}

/// A path that passed [`safety_gate`], with its thermal estimate.
#[derive(Clone, Debug)]
pub struct SafePath<'a, T> {
    pub path: &'a AcousticPath<T>,
    pub temperature_rise: T,
}

/// Passes iff `p0 <= p0_max` and the thermal estimate is within `dt_max`;
/// otherwise lists every violated limit.
pub fn safety_gate<'a, T: Scalar>(
    path: &'a AcousticPath<T>,
    limits: &SafetyLimits<T>,
) -> Result<SafePath<'a, T>, FusError> {
    let rise = thermal_estimate(path);
    let mut violations = Vec::new();
    if path.p0 > limits.p0_max {
        violations.push(Violation::Pressure { p0: path.p0.as_f64(), max: limits.p0_max.as_f64() });
    }
    if rise > limits.dt_max {
        violations.push(Violation::Temperature { rise: rise.as_f64(), max: limits.dt_max.as_f64() });
    }
    if violations.is_empty() {
        Ok(SafePath { path, temperature_rise: rise })
    } else {
        Err(FusError::Unsafe { violations })
    }
}
