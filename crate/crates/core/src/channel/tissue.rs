use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::modem::Waveform;
use crate::units::de;
use crate::Scalar;

/// One tissue layer at 810 nm. Thickness in metres, `mu_eff` in 1/m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct TissueLayer<T> {
    pub name: String,
    #[serde(deserialize_with = "de::length")]
    pub thickness: T,
    #[serde(deserialize_with = "de::inverse_length")]
    pub mu_eff: T,
    #[serde(deserialize_with = "de::dimensionless")]
    pub interface_reflectance: T,
}

// bovine-bench coefficient set, per millimetre.
const MU_SKIN_PER_MM: f64 = 0.25;
const MU_BONE_PER_MM: f64 = 0.35;
const MU_CONNECTIVE_PER_MM: f64 = 0.2;
const MU_DURA_PER_MM: f64 = 0.2;
const MU_SINUS_WALL_PER_MM: f64 = 0.1;
const INTERFACE_REFLECTANCE: f64 = 0.02;
/// Emission-angle and lens-aperture coupling of the bench holders.
const GEOMETRY_GAIN: f64 = 0.2;

impl<T: Scalar> TissueLayer<T> {
    pub fn new(name: &str, thickness_mm: f64, mu_eff_per_mm: f64, interface_reflectance: f64) -> Self {
        Self {
            name: name.to_string(),
            thickness: T::lit(thickness_mm * 1e-3),
            mu_eff: T::lit(mu_eff_per_mm * 1e3),
            interface_reflectance: T::lit(interface_reflectance),
        }
    }

    pub fn skin(thickness_mm: f64) -> Self {
        Self::new("skin", thickness_mm, MU_SKIN_PER_MM, INTERFACE_REFLECTANCE)
    }

    pub fn bone(thickness_mm: f64) -> Self {
        Self::new("bone", thickness_mm, MU_BONE_PER_MM, INTERFACE_REFLECTANCE)
    }

    pub fn connective(thickness_mm: f64) -> Self {
        Self::new("connective", thickness_mm, MU_CONNECTIVE_PER_MM, INTERFACE_REFLECTANCE)
    }

    pub fn dura(thickness_mm: f64) -> Self {
        Self::new("dura", thickness_mm, MU_DURA_PER_MM, INTERFACE_REFLECTANCE)
    }

    pub fn sinus_wall(thickness_mm: f64) -> Self {
        Self::new("sinus_wall", thickness_mm, MU_SINUS_WALL_PER_MM, INTERFACE_REFLECTANCE)
    }

    /// Power fraction surviving the interface and the layer's bulk.
    pub fn transmission(&self) -> T {
        (T::one() - self.interface_reflectance) * (-(self.mu_eff * self.thickness)).exp()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = self.thickness >= T::zero()
            && self.mu_eff >= T::zero()
            && self.interface_reflectance >= T::zero()
            && self.interface_reflectance < T::one();
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Invalid(format!("tissue layer {:?} out of range", self.name)))
        }
    }
}

/// Layers ordered implant side first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct TissueStack<T> {
    pub layers: Vec<TissueLayer<T>>,
    pub geometry_gain: T,
}

impl<T: Scalar> TissueStack<T> {
    pub const DEFAULT_PRESET: &'static str = "bone10_skin7";
    pub const PRESETS: [&'static str; 4] = ["bone5_skin7", "bone8_skin7", "bone10_skin7", "head_reference"];

    pub fn new(layers: Vec<TissueLayer<T>>, geometry_gain: T) -> Self {
        Self { layers, geometry_gain }
    }

    /// Bench stacks (`boneN_skin7`) and a reference head cross-section
    /// (sinus wall, dura, 7 mm skull, 3 mm connective tissue, 7 mm skin).
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let bench = |bone_mm: f64| Self::new(vec![TissueLayer::bone(bone_mm), TissueLayer::skin(7.0)], T::lit(GEOMETRY_GAIN));
        match name {
            "bone5_skin7" => Ok(bench(5.0)),
            "bone8_skin7" => Ok(bench(8.0)),
            "bone10_skin7" => Ok(bench(10.0)),
            "head_reference" => Ok(Self::new(
                vec![
                    TissueLayer::sinus_wall(0.5),
                    TissueLayer::dura(1.0),
                    TissueLayer::bone(7.0),
                    TissueLayer::connective(3.0),
                    TissueLayer::skin(7.0),
                ],
                T::lit(GEOMETRY_GAIN),
            )),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }

    /// Optical power ratio from LED to detector.
    pub fn transmission(&self) -> T {
        self.layers.iter().fold(self.geometry_gain, |acc, l| acc * l.transmission())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.geometry_gain > T::zero() && self.geometry_gain <= T::one()) {
            return Err(ConfigError::Invalid("geometry_gain must lie in (0, 1]".into()));
        }
        self.layers.iter().try_for_each(TissueLayer::validate)
    }
}

/// Beer-Lambert attenuation with lumped interface losses; linear and memoryless.
pub fn propagate<T: Scalar>(tx: &Waveform<T>, stack: &TissueStack<T>) -> Waveform<T> {
    let k = stack.transmission();
    tx.map(|x| x * k)
}
