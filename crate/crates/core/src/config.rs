//! Link configuration and the JSON configuration document.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{RxModel, TissueLayer, TissueStack};
use crate::fus::{AcousticLayer, AcousticPath, PiezoElement, SafetyLimits};
use crate::units::de;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid quantity: {0}")]
    Quantity(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modulation {
    Pwm,
    Pdm,
}

impl Modulation {
    /// Samples per symbol used when the configuration leaves it unset.
    ///
    /// PWM needs 16 to give the 0.25T pulse four samples. The 0.2T PDM pulse
    /// needs 20 for the same four-sample resolution.
    pub fn default_oversampling(self) -> u32 {
        match self {
            Modulation::Pwm => 16,
            Modulation::Pdm => 20,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modulation::Pwm => "PWM",
            Modulation::Pdm => "PDM",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modulation {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PWM" => Ok(Modulation::Pwm),
            "PDM" => Ok(Modulation::Pdm),
            _ => Err(ConfigError::Invalid(format!("unknown modulation {s:?}"))),
        }
    }
}

/// Receiver-side pulse detection parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderParams {
    /// Rolling threshold window, in symbols.
    pub window_symbols: u32,
    /// Absolute span below which a window is considered flat.
    pub noise_floor: f64,
    /// Span below this fraction of the capture-wide span is also flat.
    pub relative_floor: f64,
    /// PDM pulses shorter than this fraction of a symbol are discarded as glitches.
    pub min_pulse_fraction: f64,
}

impl Default for DecoderParams {
    fn default() -> Self {
        Self { window_symbols: 64, noise_floor: 0.0, relative_floor: 0.25, min_pulse_fraction: 0.05 }
    }
}

/// Transmit-side link parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinkConfig")]
pub struct LinkConfig {
    /// bit/s
    pub data_rate: f64,
    pub modulation: Modulation,
    /// Samples per symbol.
    pub oversampling: u32,
    /// Optical peak power of the LED, W.
    pub led_peak_power: f64,
    pub prefix_pattern: u8,
    /// Payload bytes per frame.
    pub payload_len: usize,
    pub seed: u64,
    pub decoder: DecoderParams,
}

pub const DEFAULT_PREFIX_PATTERN: u8 = 0xA5;
pub const DEFAULT_PAYLOAD_LEN: usize = 190;
/// Default optical peak power of the implant LED, W.
pub const DEFAULT_LED_PEAK_POWER: f64 = 1.0e-3;

impl LinkConfig {
    pub fn new(data_rate: f64, modulation: Modulation) -> Self {
        Self {
            data_rate,
            modulation,
            oversampling: modulation.default_oversampling(),
            led_peak_power: DEFAULT_LED_PEAK_POWER,
            prefix_pattern: DEFAULT_PREFIX_PATTERN,
            payload_len: DEFAULT_PAYLOAD_LEN,
            seed: 0,
            decoder: DecoderParams::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn symbol_period(&self) -> f64 {
        1.0 / self.data_rate
    }

    pub fn sample_rate(&self) -> f64 {
        self.data_rate * f64::from(self.oversampling)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.data_rate.is_finite() && self.data_rate > 0.0) {
            return Err(ConfigError::Invalid(format!("data_rate must be > 0, got {}", self.data_rate)));
        }
        if self.oversampling < 4 {
            return Err(ConfigError::Invalid(format!(
                "oversampling must be >= 4, got {}",
                self.oversampling
            )));
        }
        if self.payload_len == 0 {
            return Err(ConfigError::Invalid("payload_len must be >= 1".into()));
        }
        if !(self.led_peak_power.is_finite() && self.led_peak_power >= 0.0) {
            return Err(ConfigError::Invalid("led_peak_power must be >= 0".into()));
        }
        if self.decoder.window_symbols < 2 {
            return Err(ConfigError::Invalid("decoder.window_symbols must be >= 2".into()));
        }
        Ok(())
    }
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self::new(5e6, Modulation::Pwm)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinkConfig {
    #[serde(deserialize_with = "de::rate")]
    data_rate: f64,
    modulation: Modulation,
    #[serde(default)]
    oversampling: Option<u32>,
    #[serde(default = "default_led_power", deserialize_with = "de::power")]
    led_peak_power: f64,
    #[serde(default = "default_pattern")]
    prefix_pattern: u8,
    #[serde(default = "default_payload_len")]
    payload_len: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    decoder: DecoderParams,
}

fn default_led_power() -> f64 {
    DEFAULT_LED_PEAK_POWER
}
fn default_pattern() -> u8 {
    DEFAULT_PREFIX_PATTERN
}
fn default_payload_len() -> usize {
    DEFAULT_PAYLOAD_LEN
}

impl TryFrom<RawLinkConfig> for LinkConfig {
    type Error = ConfigError;

    fn try_from(raw: RawLinkConfig) -> Result<Self, Self::Error> {
        let cfg = LinkConfig {
            data_rate: raw.data_rate,
            modulation: raw.modulation,
            oversampling: raw.oversampling.unwrap_or(raw.modulation.default_oversampling()),
            led_peak_power: raw.led_peak_power,
            prefix_pattern: raw.prefix_pattern,
            payload_len: raw.payload_len,
            seed: raw.seed,
            decoder: raw.decoder,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `tissue` section: a named preset, optionally overridden piecewise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TissueSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<TissueLayer<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_gain: Option<f64>,
}

impl TissueSection {
    pub fn resolve(&self) -> Result<TissueStack<f64>, ConfigError> {
        let mut stack = match &self.preset {
            Some(name) => TissueStack::preset(name)?,
            None => TissueStack::preset(TissueStack::<f64>::DEFAULT_PRESET)?,
        };
        if let Some(layers) = &self.layers {
            stack.layers = layers.clone();
        }
        if let Some(g) = self.geometry_gain {
            stack.geometry_gain = g;
        }
        stack.validate()?;
        Ok(stack)
    }
}

/// `fus` section: overrides applied to the default head path and element.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusSection {
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "opt_pressure")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "de::opt_frequency")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<AcousticLayer<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<PiezoElement<f64>>,
    #[serde(default)]
    pub limits: SafetyLimits<f64>,
}

fn opt_pressure<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    de::pressure::<D, f64>(d).map(Some)
}

impl FusSection {
    /// Builds the acoustic path; the thermal coefficient keeps its default
    /// calibration unless the layers are replaced.
    pub fn path(&self) -> AcousticPath<f64> {
        let mut path = AcousticPath::head_default();
        if let Some(layers) = &self.layers {
            path.layers = layers.clone();
        }
        if let Some(g) = self.focal_gain {
            path.focal_gain = g;
        }
        if let Some(f) = self.frequency {
            path.frequency = f;
        }
        if let Some(p) = self.p0 {
            path.p0 = p;
        }
        path
    }

    pub fn element(&self) -> PiezoElement<f64> {
        self.element.clone().unwrap_or_else(PiezoElement::calibrated_default)
    }
}

/// Whole configuration document with sections `link`, `tissue`, `receiver`, `fus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub link: LinkConfig,
    #[serde(default)]
    pub tissue: TissueSection,
    #[serde(default)]
    pub receiver: RxModel<f64>,
    #[serde(default)]
    pub fus: FusSection,
}

/// Built-in defaults: 5 Mbit/s PWM through the 10 mm bone + 7 mm skin stack.
pub const EMBEDDED_DEFAULT_CONFIG: &str = r#"{
  "link": {
    "data_rate": "5 Mbit/s",
    "modulation": "PWM",
    "led_peak_power": "1 mW",
    "prefix_pattern": 165,
    "payload_len": 190,
    "seed": 1
  },
  "tissue": { "preset": "bone10_skin7" }
}"#;

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn embedded_default() -> Self {
        Self::from_json(EMBEDDED_DEFAULT_CONFIG).expect("embedded config is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.link.validate()?;
        self.tissue.resolve()?;
        self.receiver.validate(self.link.data_rate)?;
        self.fus.limits.validate()?;
        Ok(())
    }
}

/// SHA-256 over the canonical JSON encoding of any serializable value.
pub fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialize");
    hex::encode(Sha256::digest(&json))
}
