use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ChannelError, TissueStack};
use crate::config::{ConfigError, LinkConfig};
use crate::modem::Waveform;
use crate::rng::RngStream;
use crate::units::de;
use crate::Scalar;

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// APD + TIA front end and ADC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize")
)]
pub struct RxModel<T> {
    /// A/W
    #[serde(deserialize_with = "de::dimensionless")]
    pub responsivity: T,
    #[serde(deserialize_with = "de::dimensionless")]
    pub apd_gain: T,
    /// V/A
    #[serde(deserialize_with = "de::dimensionless")]
    pub tia_gain: T,
    /// Single-pole front-end bandwidth.
    #[serde(deserialize_with = "de::frequency")]
    pub bandwidth: T,
    #[serde(deserialize_with = "de::voltage")]
    pub thermal_noise_vrms: T,
    pub shot_noise: bool,
    #[serde(deserialize_with = "de::dimensionless")]
    pub ambient_lux: T,
    /// Ambient power reaching the detector per lux, W/lux.
    #[serde(deserialize_with = "de::dimensionless")]
    pub lux_to_power: T,
    /// Relative amplitude of mains flicker on the ambient level.
    #[serde(deserialize_with = "de::dimensionless")]
    pub flicker_fraction: T,
    #[serde(deserialize_with = "de::frequency")]
    pub flicker_hz: T,
    pub adc_bits: u32,
    #[serde(deserialize_with = "de::voltage")]
    pub adc_fs: T,
    /// `None` samples at the analog simulation rate.
    #[serde(skip_serializing_if = "Option::is_none", deserialize_with = "de::opt_frequency")]
    pub adc_rate: Option<f64>,
}

impl<T: Scalar> Default for RxModel<T> {
    /// Bench calibration used for every shipped preset.
    fn default() -> Self {
        Self {
            responsivity: T::lit(0.5),
            apd_gain: T::lit(50.0),
            tia_gain: T::lit(1e4),
            bandwidth: T::lit(50e6),
            thermal_noise_vrms: T::lit(5e-3),
            shot_noise: true,
            ambient_lux: T::lit(200.0),
            lux_to_power: T::lit(2e-9),
            flicker_fraction: T::lit(0.1),
            flicker_hz: T::lit(100.0),
            adc_bits: 14,
            adc_fs: T::lit(2.0),
            adc_rate: None,
        }
    }
}

impl<T: Scalar> RxModel<T> {
    /// Same gains with every noise source and the ambient light removed.
    pub fn noiseless() -> Self {
        Self { thermal_noise_vrms: T::zero(), shot_noise: false, ambient_lux: T::zero(), ..Self::default() }
    }

    /// Volts per watt of optical input.
    pub fn conversion_gain(&self) -> T {
        self.responsivity * self.apd_gain * self.tia_gain
    }

    pub fn lsb(&self) -> T {
        self.adc_fs / T::lit(2f64.powi(self.adc_bits as i32))
    }

    pub fn validate(&self, data_rate: f64) -> Result<(), ConfigError> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        let nonneg = |v: T| v >= T::zero() && v.is_finite();
        let checks = [
            (pos(self.responsivity), "responsivity must be > 0"),
            (pos(self.apd_gain), "apd_gain must be > 0"),
            (pos(self.tia_gain), "tia_gain must be > 0"),
            (pos(self.bandwidth), "bandwidth must be > 0"),
            (self.bandwidth.as_f64() > data_rate / 2.0, "bandwidth must exceed data_rate / 2"),
            (nonneg(self.thermal_noise_vrms), "thermal_noise_vrms must be >= 0"),
            (nonneg(self.ambient_lux), "ambient_lux must be >= 0"),
            (nonneg(self.lux_to_power), "lux_to_power must be >= 0"),
            (nonneg(self.flicker_fraction) && self.flicker_fraction <= T::one(), "flicker_fraction must lie in [0, 1]"),
            (nonneg(self.flicker_hz), "flicker_hz must be >= 0"),
            ((8..=24).contains(&self.adc_bits), "adc_bits must lie in 8..=24"),
            (pos(self.adc_fs), "adc_fs must be > 0"),
            (self.adc_rate.is_none_or(|r| r > 0.0 && r.is_finite()), "adc_rate must be > 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(ConfigError::Invalid(format!("receiver: {msg}"))),
            None => Ok(()),
        }
    }
}

/// The flicker phasor is recomputed exactly this often to bound drift.
const AMBIENT_RESYNC: usize = 4096;

/// Adds ambient light (DC plus mains flicker) to an optical waveform whose
/// first sample sits at absolute time `t0`.
pub fn add_ambient<T: Scalar>(samples: &mut [T], sample_rate: f64, t0: f64, rx: &RxModel<T>) {
    let dc = (rx.ambient_lux * rx.lux_to_power).as_f64();
    if dc == 0.0 {
        return;
    }
    let depth = dc * rx.flicker_fraction.as_f64();
    if depth == 0.0 {
        let dc = T::lit(dc);
        samples.iter_mut().for_each(|s| *s = *s + dc);
        return;
    }
    // Phasor rotation instead of a sin() per sample.
    let w = std::f64::consts::TAU * rx.flicker_hz.as_f64();
    let (step_s, step_c) = (w / sample_rate).sin_cos();
    let (mut s, mut c) = (w * t0).sin_cos();
    for (i, x) in samples.iter_mut().enumerate() {
        if i % AMBIENT_RESYNC == 0 {
            (s, c) = (w * (t0 + i as f64 / sample_rate)).sin_cos();
        }
        *x = *x + T::lit(dc + depth * s);
        (s, c) = (s * step_c + c * step_s, c * step_c - s * step_s);
    }
}

/// Ambient optical power alone, starting at absolute time `t0`.
pub fn ambient_at<T: Scalar>(t0: f64, duration: f64, sample_rate: f64, rx: &RxModel<T>) -> Waveform<T> {
    let n = (duration * sample_rate).round().max(0.0) as usize;
    let mut w = Waveform::zeros(sample_rate, n);
    add_ambient(w.samples_mut(), sample_rate, t0, rx);
    w
}

pub fn ambient<T: Scalar>(duration: f64, sample_rate: f64, rx: &RxModel<T>) -> Waveform<T> {
    ambient_at(0.0, duration, sample_rate, rx)
}

/// Converts optical power to TIA output voltage in place.
///
/// Photocurrent `R * M * P` gets Gaussian shot noise of variance `2 q I B`,
/// passes through a single-pole low-pass at `bandwidth`, then thermal noise
/// is added at the output. The filter starts settled on the first sample.
pub fn apd_tia_in_place<T: Scalar>(samples: &mut [T], sample_rate: f64, rx: &RxModel<T>, rng: &mut RngStream) {
    let current_gain = (rx.responsivity * rx.apd_gain).as_f64();
    let tia = rx.tia_gain.as_f64();
    let bw = rx.bandwidth.as_f64();
    let alpha = -(-std::f64::consts::TAU * bw / sample_rate).exp_m1();
    let shot_scale = if rx.shot_noise { (2.0 * ELEMENTARY_CHARGE * bw).sqrt() } else { 0.0 };
    let thermal = rx.thermal_noise_vrms.as_f64();
    let mut state = f64::NAN;
    for x in samples.iter_mut() {
        let mut current = current_gain * x.as_f64();
        if shot_scale > 0.0 && current > 0.0 {
            current += shot_scale * current.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let v = tia * current;
        if state.is_nan() {
            state = v;
        } else {
            state += alpha * (v - state);
        }
        let mut out = state;
        if thermal > 0.0 {
            out += thermal * rng.sample::<f64, _>(StandardNormal);
        }
        *x = T::lit(out);
    }
}

pub fn apd_tia<T: Scalar>(
    optical: &Waveform<T>,
    rx: &RxModel<T>,
    rng: &mut RngStream,
) -> Result<Waveform<T>, ChannelError> {
    if optical.samples().iter().any(|&p| p < T::zero()) {
        return Err(ChannelError::NegativeOptical);
    }
    let mut out = optical.clone();
    let fs = out.sample_rate();
    apd_tia_in_place(out.samples_mut(), fs, rx, rng);
    Ok(out)
}

/// Clips to `[0, adc_fs]` and quantizes onto the mid-rise lattice
/// `(k + 1/2) * LSB`, `LSB = adc_fs / 2^bits`.
pub fn quantize_in_place<T: Scalar>(samples: &mut [T], rx: &RxModel<T>) {
    let fs = rx.adc_fs.as_f64();
    let lsb = rx.lsb().as_f64();
    let top = (1u64 << rx.adc_bits) as f64 - 1.0;
    for x in samples.iter_mut() {
        let v = x.as_f64().clamp(0.0, fs);
        // v >= 0, so truncation is floor.
        let code = ((v / lsb) as u64 as f64).min(top);
        *x = T::lit((code + 0.5) * lsb);
    }
}

/// Decimates to `adc_rate` (nearest earlier sample) and quantizes.
pub fn adc_sample<T: Scalar>(analog: &Waveform<T>, rx: &RxModel<T>) -> Result<Waveform<T>, ChannelError> {
    let input_rate = analog.sample_rate();
    let adc_rate = rx.adc_rate.unwrap_or(input_rate);
    if adc_rate > input_rate * (1.0 + 1e-12) {
        return Err(ChannelError::AdcRateTooHigh { adc_rate, input_rate });
    }
    let mut samples: Vec<T> = if adc_rate == input_rate {
        analog.samples().to_vec()
    } else {
        let step = input_rate / adc_rate;
        let n = (analog.len() as f64 / step).floor() as usize;
        (0..n).map(|k| analog.samples()[((k as f64 * step) + 1e-9).floor() as usize]).collect()
    };
    quantize_in_place(&mut samples, rx);
    Ok(Waveform::from_parts(adc_rate, samples))
}

/// Runs the whole chain in place on a transmit optical waveform:
/// tissue, ambient, APD/TIA, ADC quantization. Decimation is not applied here;
/// use [`end_to_end`] when `adc_rate` differs from the simulation rate.
pub fn end_to_end_in_place<T: Scalar>(
    samples: &mut [T],
    sample_rate: f64,
    t0: f64,
    stack: &TissueStack<T>,
    rx: &RxModel<T>,
    rng: &mut RngStream,
) {
    // Same arithmetic as the staged functions, fused into one pass.
    let k = stack.transmission();
    let dc = (rx.ambient_lux * rx.lux_to_power).as_f64();
    let depth = dc * rx.flicker_fraction.as_f64();
    let w = std::f64::consts::TAU * rx.flicker_hz.as_f64();
    let (step_s, step_c) = (w / sample_rate).sin_cos();
    let (mut s, mut c) = (0.0, 1.0);
    let current_gain = (rx.responsivity * rx.apd_gain).as_f64();
    let tia = rx.tia_gain.as_f64();
    let bw = rx.bandwidth.as_f64();
    let alpha = -(-std::f64::consts::TAU * bw / sample_rate).exp_m1();
    let shot_scale = if rx.shot_noise { (2.0 * ELEMENTARY_CHARGE * bw).sqrt() } else { 0.0 };
    let thermal = rx.thermal_noise_vrms.as_f64();
    let fs = rx.adc_fs.as_f64();
    let lsb = rx.lsb().as_f64();
    let top = (1u64 << rx.adc_bits) as f64 - 1.0;
    let mut state = f64::NAN;
    for (i, x) in samples.iter_mut().enumerate() {
        let mut optical = *x * k;
        if dc != 0.0 {
            if depth == 0.0 {
                optical = optical + T::lit(dc);
            } else {
                if i % AMBIENT_RESYNC == 0 {
                    (s, c) = (w * (t0 + i as f64 / sample_rate)).sin_cos();
                }
                optical = optical + T::lit(dc + depth * s);
                (s, c) = (s * step_c + c * step_s, c * step_c - s * step_s);
            }
        }
        let mut current = current_gain * optical.as_f64();
        if shot_scale > 0.0 && current > 0.0 {
            current += shot_scale * current.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let v = tia * current;
        if state.is_nan() {
            state = v;
        } else {
            state += alpha * (v - state);
        }
        let mut out = state;
        if thermal > 0.0 {
            out += thermal * rng.sample::<f64, _>(StandardNormal);
        }
        let v = T::lit(out).as_f64().clamp(0.0, fs);
        let code = ((v / lsb) as u64 as f64).min(top);
        *x = T::lit((code + 0.5) * lsb);
    }
}

/// propagate, then ambient, then APD/TIA, then ADC.
pub fn end_to_end<T: Scalar>(
    tx: &Waveform<T>,
    stack: &TissueStack<T>,
    rx: &RxModel<T>,
    rng: &mut RngStream,
    t0: f64,
) -> Result<Waveform<T>, ChannelError> {
    let mut optical = super::propagate(tx, stack);
    if optical.samples().iter().any(|&p| p < T::zero()) {
        return Err(ChannelError::NegativeOptical);
    }
    let fs = optical.sample_rate();
    add_ambient(optical.samples_mut(), fs, t0, rx);
    let analog = apd_tia(&optical, rx, rng)?;
    adc_sample(&analog, rx)
}

/// Static link budget at the ADC input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkBudget {
    pub received_peak_w: f64,
    pub ambient_w: f64,
    /// Pulse height at the TIA output, V.
    pub signal_swing_v: f64,
    pub noise_rms_v: f64,
    pub snr_db: f64,
}

/// Pulse swing against combined thermal and peak shot noise.
pub fn link_budget<T: Scalar>(cfg: &LinkConfig, stack: &TissueStack<T>, rx: &RxModel<T>) -> LinkBudget {
    let received = cfg.led_peak_power * stack.transmission().as_f64();
    let ambient = (rx.ambient_lux * rx.lux_to_power).as_f64() * (1.0 + rx.flicker_fraction.as_f64());
    let gain = rx.conversion_gain().as_f64();
    let swing = gain * received;
    let current = (rx.responsivity * rx.apd_gain).as_f64() * (received + ambient);
    let shot_var = if rx.shot_noise {
        (rx.tia_gain.as_f64()).powi(2) * 2.0 * ELEMENTARY_CHARGE * current * rx.bandwidth.as_f64()
    } else {
        0.0
    };
    let noise = (rx.thermal_noise_vrms.as_f64().powi(2) + shot_var).sqrt();
    LinkBudget {
        received_peak_w: received,
        ambient_w: ambient,
        signal_swing_v: swing,
        noise_rms_v: noise,
        snr_db: 20.0 * (swing / noise).log10(),
    }
}
