use super::{ModemError, Pulse, PulseTrain, Waveform};
use crate::bits::BitStream;
use crate::config::{LinkConfig, Modulation};
use crate::Scalar;

/// PWM pulse width for a 0, as a fraction of the symbol period.
pub const PWM_WIDTH_ZERO: f64 = 0.25;
/// PWM pulse width for a 1.
pub const PWM_WIDTH_ONE: f64 = 0.75;
/// PDM pulse width; the pulse is centred in its slot.
pub const PDM_WIDTH: f64 = 0.2;

pub fn pwm_encode(bits: &BitStream, cfg: &LinkConfig) -> PulseTrain {
    let t = cfg.symbol_period();
    let pulses = bits
        .iter()
        .enumerate()
        .map(|(i, b)| Pulse {
            start: i as f64 * t,
            width: if b { PWM_WIDTH_ONE } else { PWM_WIDTH_ZERO } * t,
            amplitude: 1.0,
        })
        .collect();
    PulseTrain { symbol_period: t, n_symbols: bits.len(), pulses }
}

pub fn pdm_encode(bits: &BitStream, cfg: &LinkConfig) -> PulseTrain {
    let t = cfg.symbol_period();
    let lead = 0.5 * (1.0 - PDM_WIDTH);
    let pulses = bits
        .iter()
        .enumerate()
        .filter(|&(_, b)| b)
        .map(|(i, _)| Pulse { start: (i as f64 + lead) * t, width: PDM_WIDTH * t, amplitude: 1.0 })
        .collect();
    PulseTrain { symbol_period: t, n_symbols: bits.len(), pulses }
}

/// Encodes with the scheme selected in `cfg`.
pub fn encode(bits: &BitStream, cfg: &LinkConfig) -> PulseTrain {
    match cfg.modulation {
        Modulation::Pwm => pwm_encode(bits, cfg),
        Modulation::Pdm => pdm_encode(bits, cfg),
    }
}

const EDGE_EPS: f64 = 1e-9;

fn check_sampling(train: &PulseTrain, sample_rate: f64) -> Result<(), ModemError> {
    if let Some(min_width) = train.min_width() {
        // Slack admits transmit clocks running up to 0.1% fast.
        if sample_rate * min_width < 4.0 * (1.0 - 1e-3) {
            return Err(ModemError::Undersampled { sample_rate, min_width });
        }
    }
    Ok(())
}

/// Samples a pulse train: `peak_power` inside a pulse, zero elsewhere.
pub fn rasterize<T: Scalar>(train: &PulseTrain, sample_rate: f64, peak_power: T) -> Result<Waveform<T>, ModemError> {
    let mut out = Vec::new();
    rasterize_into(train, sample_rate, peak_power, 0, 0, &mut out)?;
    Ok(Waveform::from_parts(sample_rate, out))
}

/// Rasterizes into `out` (cleared first) with `lead` idle samples before the
/// train and `tail` idle samples after it.
pub fn rasterize_into<T: Scalar>(
    train: &PulseTrain,
    sample_rate: f64,
    peak_power: T,
    lead: usize,
    tail: usize,
    out: &mut Vec<T>,
) -> Result<(), ModemError> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(ModemError::InvalidWaveform("sample rate must be > 0"));
    }
    check_sampling(train, sample_rate)?;
    let body = (train.duration() * sample_rate - EDGE_EPS).ceil().max(0.0) as usize;
    out.clear();
    out.resize(lead + body + tail, T::zero());
    let target = &mut out[lead..lead + body];
    for p in &train.pulses {
        // Sample k is inside the pulse when start <= k/fs < start + width.
        let lo = ((p.start * sample_rate) - EDGE_EPS).ceil().max(0.0) as usize;
        let hi = (((p.start + p.width) * sample_rate) - EDGE_EPS).ceil().max(0.0) as usize;
        let value = peak_power * T::lit(p.amplitude);
        for s in &mut target[lo.min(body)..hi.min(body)] {
            *s = value;
        }
    }
    Ok(())
}
