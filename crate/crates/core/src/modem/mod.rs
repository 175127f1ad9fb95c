//! Pulse modulation (PWM and PDM) and receiver-side pulse recovery.
//!
//! PWM sends one pulse per bit, rising at the symbol start: 0.25T for a 0,
//! 0.75T for a 1. PDM sends a 0.2T pulse centred in the slot for a 1 and
//! nothing for a 0. The receiver thresholds against a rolling min/max
//! midpoint, recovers the symbol clock from rising edges, then labels duty
//! cycles (PWM) or marks pulse centres on the timeline (PDM).

mod clock;
mod decode;
mod encode;
mod threshold;

use std::io::{self, Write};

use crate::Scalar;

pub use clock::{clock_recover, ClockEstimate};
pub use decode::{decode, label_duty, pdm_decode, pdm_marks, pwm_decode, Decoder};
pub use encode::{encode, pdm_encode, pwm_encode, rasterize, rasterize_into, PDM_WIDTH, PWM_WIDTH_ONE, PWM_WIDTH_ZERO};
pub use threshold::{adaptive_threshold, rolling_thresholds};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModemError {
    #[error("no signal: {0}")]
    NoSignal(&'static str),
    #[error("undersampled: {sample_rate} Hz gives fewer than 4 samples across a {min_width} s pulse")]
    Undersampled { sample_rate: f64, min_width: f64 },
    #[error("capture too short: {symbols:.1} symbols, need at least {needed}")]
    TooShort { symbols: f64, needed: usize },
    #[error("invalid waveform: {0}")]
    InvalidWaveform(&'static str),
    #[error("invalid pulse train: {0}")]
    InvalidPulseTrain(&'static str),
}

/// One optical pulse; times in seconds, amplitude normalized to 0..1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    pub start: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Symbol-level description of a transmission.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseTrain {
    symbol_period: f64,
    n_symbols: usize,
    pulses: Vec<Pulse>,
}

impl PulseTrain {
    /// Checks that pulses are time-ordered, non-overlapping and no wider than a symbol.
    pub fn new(symbol_period: f64, n_symbols: usize, pulses: Vec<Pulse>) -> Result<Self, ModemError> {
        if !(symbol_period.is_finite() && symbol_period > 0.0) {
            return Err(ModemError::InvalidPulseTrain("symbol period must be > 0"));
        }
        let tol = symbol_period * 1e-9;
        let mut prev_end = f64::NEG_INFINITY;
        for p in &pulses {
            if !(p.width > 0.0 && p.width <= symbol_period + tol) {
                return Err(ModemError::InvalidPulseTrain("pulse width outside (0, T]"));
            }
            if !(0.0..=1.0).contains(&p.amplitude) {
                return Err(ModemError::InvalidPulseTrain("amplitude outside 0..1"));
            }
            if p.start < prev_end - tol {
                return Err(ModemError::InvalidPulseTrain("pulses overlap or are out of order"));
            }
            prev_end = p.start + p.width;
        }
        Ok(Self { symbol_period, n_symbols, pulses })
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// Covers every symbol slot, including trailing empty ones.
    pub fn duration(&self) -> f64 {
        let last = self.pulses.last().map_or(0.0, |p| p.start + p.width);
        (self.n_symbols as f64 * self.symbol_period).max(last)
    }

    pub fn min_width(&self) -> Option<f64> {
        self.pulses.iter().map(|p| p.width).reduce(f64::min)
    }

    pub fn total_on_time(&self) -> f64 {
        self.pulses.iter().map(|p| p.width).sum()
    }
}

/// Uniformly sampled signal. Sample `i` sits at `i / sample_rate` seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform<T> {
    sample_rate: f64,
    samples: Vec<T>,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(sample_rate: f64, samples: Vec<T>) -> Result<Self, ModemError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(ModemError::InvalidWaveform("sample rate must be > 0"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(ModemError::InvalidWaveform("non-finite sample"));
        }
        Ok(Self { sample_rate, samples })
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_parts(sample_rate: f64, samples: Vec<T>) -> Self {
        debug_assert!(sample_rate > 0.0);
        Self { sample_rate, samples }
    }

    pub fn zeros(sample_rate: f64, n: usize) -> Self {
        Self::from_parts(sample_rate, vec![T::zero(); n])
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts(self.sample_rate, self.samples.iter().map(|&x| f(x)).collect())
    }

    /// Rectangle-rule integral, in value·seconds.
    pub fn integral(&self) -> T {
        let sum = self.samples.iter().fold(T::zero(), |acc, &x| acc + x);
        sum * T::lit(self.dt())
    }

    pub fn energy(&self) -> T {
        let sum = self.samples.iter().fold(T::zero(), |acc, &x| acc + x * x);
        sum * T::lit(self.dt())
    }

    pub fn min_max(&self) -> Option<(T, T)> {
        let mut it = self.samples.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    /// Writes `t_s,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_s,value")?;
        let dt = self.dt();
        for (i, x) in self.samples.iter().enumerate() {
            writeln!(w, "{:e},{}", i as f64 * dt, x)?;
        }
        Ok(())
    }
}
