use serde::{Deserialize, Serialize};

use crate::units::de;
use crate::Scalar;

/// One acoustic layer. Thickness in metres, attenuation in dB/(cm·MHz),
/// characteristic impedance in Rayl.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct AcousticLayer<T> {
    pub name: String,
    #[serde(deserialize_with = "de::length")]
    pub thickness: T,
    #[serde(deserialize_with = "de::dimensionless")]
    pub attenuation: T,
    #[serde(deserialize_with = "de::impedance")]
    pub impedance: T,
}

impl<T: Scalar> AcousticLayer<T> {
    pub fn new(name: &str, thickness_mm: f64, attenuation_db_cm_mhz: f64, impedance_mrayl: f64) -> Self {
        Self {
            name: name.into(),
            thickness: T::lit(thickness_mm * 1e-3),
            attenuation: T::lit(attenuation_db_cm_mhz),
            impedance: T::lit(impedance_mrayl * 1e6),
        }
    }

    /// Attenuation across the layer in dB at frequency `f` (Hz).
    fn loss_db(&self, f: T) -> T {
        self.attenuation * self.thickness * T::lit(100.0) * f / T::lit(1e6)
    }

    /// Pressure amplitude ratio across the layer's bulk.
    pub fn amplitude_factor(&self, f: T) -> T {
        T::lit(10.0).powf(-self.loss_db(f) / T::lit(20.0))
    }
}

/// Transducer-to-implant acoustic path; the first layer is the coupling medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct AcousticPath<T> {
    pub layers: Vec<AcousticLayer<T>>,
    pub focal_gain: T,
    #[serde(deserialize_with = "de::frequency")]
    pub frequency: T,
    #[serde(deserialize_with = "de::pressure")]
    pub p0: T,
    /// Steady-state rise per absorbed intensity, degrees C per (W/m²).
    pub thermal_coeff: T,
}

/// Skull-rise target for the thermal calibration at 30 kPa / 1 MHz, degrees C.
pub const THERMAL_CALIBRATION_RISE: f64 = 1.8;

impl<T: Scalar> AcousticPath<T> {
    /// Gel coupling, scalp, subcutaneous tissue, skull, dura, then blood in
    /// the superior sagittal sinus; 30 kPa at 1 MHz with a focal gain of 4.
    pub fn head_default() -> Self {
        let mut path = Self {
            layers: vec![
                AcousticLayer::new("coupling_gel", 10.0, 0.0022, 1.48),
                AcousticLayer::new("skin", 3.0, 1.2, 1.99),
                AcousticLayer::new("subcutaneous", 4.0, 0.6, 1.38),
                AcousticLayer::new("skull", 7.0, 10.0, 7.38),
                AcousticLayer::new("dura", 1.0, 1.0, 1.65),
                AcousticLayer::new("blood", 3.0, 0.15, 1.66),
            ],
            focal_gain: T::lit(4.0),
            frequency: T::lit(1e6),
            p0: T::lit(30e3),
            thermal_coeff: T::one(),
        };
        path.calibrate_thermal(T::lit(THERMAL_CALIBRATION_RISE));
        path
    }

    pub fn with_frequency(&self, f: T) -> Self {
        Self { frequency: f, ..self.clone() }
    }

    pub fn with_p0(&self, p0: T) -> Self {
        Self { p0, ..self.clone() }
    }

    /// Rescales `thermal_coeff` so the current operating point yields `rise`.
    pub fn calibrate_thermal(&mut self, rise: T) {
        self.thermal_coeff = T::one();
        let unit = thermal_estimate(self);
        self.thermal_coeff = rise / unit;
    }

    /// Product of interface pressure transmission coefficients `2 Z2 / (Z1 + Z2)`
    /// up to (not including) layer `upto`.
    fn interface_transmission(&self, upto: usize) -> T {
        self.layers[..upto.min(self.layers.len())]
            .windows(2)
            .fold(T::one(), |acc, w| {
                let (z1, z2) = (w[0].impedance, w[1].impedance);
                acc * T::lit(2.0) * z2 / (z1 + z2)
            })
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.focal_gain < T::one() {
            return Err("focal_gain must be >= 1");
        }
        if !(self.frequency > T::zero()) || self.p0 < T::zero() {
            return Err("frequency must be > 0 and p0 >= 0");
        }
        for l in &self.layers {
            if l.attenuation < T::zero() || !(l.impedance > T::zero()) || l.thickness < T::zero() {
                return Err("layer attenuation/thickness must be >= 0 and impedance > 0");
            }
        }
        Ok(())
    }
}

/// Plane-wave pressure at the focus:
/// `P0 * focal_gain * prod(interface transmission) * prod(bulk attenuation)`.
pub fn focal_pressure<T: Scalar>(path: &AcousticPath<T>) -> T {
    let bulk = path
        .layers
        .iter()
        .fold(T::one(), |acc, l| acc * l.amplitude_factor(path.frequency));
    path.p0 * path.focal_gain * path.interface_transmission(path.layers.len()) * bulk
}

/// Steady-state temperature rise at the hottest layer, degrees C.
///
/// Each layer absorbs `I * (1 - 10^(-att*d*f/10))` of the intensity
/// `I = p^2 / (2 Z)` incident on it, where `p` carries the interface
/// transmissions but not upstream bulk losses (a conservative bound that
/// keeps the estimate monotone in frequency).
pub fn thermal_estimate<T: Scalar>(path: &AcousticPath<T>) -> T {
    let f = path.frequency;
    path.layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let p = path.p0 * path.interface_transmission(i + 1);
            let intensity = p * p / (T::lit(2.0) * l.impedance);
            let absorbed = T::one() - T::lit(10.0).powf(-l.loss_db(f) / T::lit(10.0));
            path.thermal_coeff * intensity * absorbed
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lossless_matched_single_layer() {
        let path = AcousticPath::<f64> {
            layers: vec![AcousticLayer::new("water", 10.0, 0.0, 1.5)],
            focal_gain: 1.0,
            frequency: 1e6,
            p0: 30e3,
            thermal_coeff: 1.0,
        };
        assert_eq!(focal_pressure(&path), 30e3);
    }

    #[test]
    fn matched_interface_transmits_fully() {
        let path = AcousticPath::<f64> {
            layers: vec![AcousticLayer::new("a", 1.0, 0.0, 1.6), AcousticLayer::new("b", 1.0, 0.0, 1.6)],
            focal_gain: 1.0,
            frequency: 1e6,
            p0: 1.0,
            thermal_coeff: 1.0,
        };
        assert_eq!(path.interface_transmission(2), 1.0);
        assert_eq!(focal_pressure(&path), 1.0);
    }

    #[test]
    fn water_attenuation() {
        let l = AcousticLayer::<f64>::new("water", 10.0, 0.0022, 1.48);
        let got = l.amplitude_factor(1e6);
        assert!((got - 10f64.powf(-0.0022 / 20.0)).abs() < 1e-15);
        assert!((got - 0.99975).abs() < 1e-5);
    }

    #[test]
    fn thermal_laws() {
        let path = AcousticPath::<f64>::head_default();
        let rise = thermal_estimate(&path);
        assert!((rise - THERMAL_CALIBRATION_RISE).abs() < 1e-12);
        assert_eq!(thermal_estimate(&path.with_p0(0.0)), 0.0);
        let quad = thermal_estimate(&path.with_p0(60e3)) / rise;
        assert!((quad - 4.0).abs() < 1e-12);
        let mut last = 0.0;
        for f in [0.25e6, 0.5e6, 1e6, 1.5e6, 2e6, 3e6] {
            let r = thermal_estimate(&path.with_frequency(f));
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn skull_dominates_loss() {
        let path = AcousticPath::<f64>::head_default();
        let no_skull = AcousticPath {
            layers: path.layers.iter().filter(|l| l.name != "skull").cloned().collect(),
            ..path.clone()
        };
        assert!(focal_pressure(&no_skull) > 2.0 * focal_pressure(&path));
    }

    fn arb_layer() -> impl Strategy<Value = AcousticLayer<f64>> {
        (0.0f64..20.0, 0.0f64..20.0, 0.1f64..10.0).prop_map(|(d, a, z)| AcousticLayer::new("l", d, a, z))
    }

    proptest! {
        #[test]
        fn transmission_bound(layers in proptest::collection::vec(arb_layer(), 1..8), gain in 1.0f64..10.0, f in 0.1e6f64..5e6) {
            let path = AcousticPath { layers, focal_gain: gain, frequency: f, p0: 30e3, thermal_coeff: 1.0 };
            let p = focal_pressure(&path);
            let z_first = path.layers[0].impedance;
            let z_last = path.layers.last().unwrap().impedance;
            // Energy conservation bounds the pressure ratio by sqrt(Z_last / Z_first).
            let bound = path.p0 * gain * (z_last / z_first).sqrt();
            prop_assert!(p <= bound * (1.0 + 1e-12));
            if z_last <= z_first {
                prop_assert!(p <= path.p0 * gain * (1.0 + 1e-12));
            }
        }
    }
}
