use super::clock::{ClockEstimate, Detection};
use super::{ModemError, Waveform};
use crate::bits::BitStream;
use crate::config::{LinkConfig, Modulation};
use crate::Scalar;

const EDGE_EPS: f64 = 1e-9;

/// Duty-cycle decision: at least half the samples above threshold reads as 1.
#[inline]
pub fn label_duty(above: usize, total: usize) -> bool {
    total > 0 && 2 * above >= total
}

/// Number of whole symbol windows that fit in the capture.
fn symbol_count(clock: &ClockEstimate, duration: f64) -> usize {
    let usable = duration - clock.phase;
    if usable <= 0.0 {
        0
    } else {
        (usable / clock.period + EDGE_EPS).floor() as usize
    }
}

fn pwm_bits(det: &Detection<impl Scalar>, prefix: &mut Vec<u32>, clock: &ClockEstimate, n_samples: usize) -> BitStream {
    prefix.clear();
    prefix.push(0u32);
    let mut acc = 0u32;
    for &a in &det.above {
        acc += a as u32;
        prefix.push(acc);
    }
    let inv_dt = 1.0 / det.dt;
    let index = |t: f64| ((t * inv_dt - EDGE_EPS).ceil().max(0.0) as usize).min(n_samples);
    let n_sym = symbol_count(clock, n_samples as f64 * det.dt);
    (0..n_sym)
        .map(|k| {
            let start = clock.phase + k as f64 * clock.period;
            let (lo, hi) = (index(start), index(start + clock.period));
            label_duty((prefix[hi] - prefix[lo]) as usize, hi - lo)
        })
        .collect()
}

fn marks(det: &Detection<impl Scalar>, clock: &ClockEstimate, min_width: f64) -> Vec<f64> {
    let skip = match (det.falling.first(), det.rising.first()) {
        (Some(f), Some(r)) if f < r => 1,
        _ => 0,
    };
    det.rising
        .iter()
        .zip(det.falling.iter().skip(skip))
        .filter(|(&r, &f)| f - r >= min_width * clock.period)
        .map(|(&r, &f)| 0.5 * (r + f))
        .collect()
}

fn pdm_bits(centres: &[f64], clock: &ClockEstimate, n_sym: usize) -> BitStream {
    let mut bits = BitStream::zeros(n_sym);
    for &c in centres {
        let k = ((c - clock.phase) / clock.period).floor();
        if k >= 0.0 && (k as usize) < n_sym && bits.get(k as usize) == Some(false) {
            bits.flip(k as usize);
        }
    }
    bits
}

/// Receiver state that keeps its working buffers between captures.
#[derive(Debug, Default)]
pub struct Decoder<T> {
    det: Detection<T>,
    prefix: Vec<u32>,
}

impl<T: Scalar> Decoder<T> {
    pub fn new() -> Self {
        Self { det: Detection::default(), prefix: Vec::new() }
    }

    /// Duty-cycle labeling over recovered symbol windows.
    pub fn pwm_decode(&mut self, wave: &Waveform<T>, cfg: &LinkConfig) -> Result<BitStream, ModemError> {
        self.det.detect(wave, cfg)?;
        let clock = self.det.clock(cfg, wave.len())?;
        Ok(pwm_bits(&self.det, &mut self.prefix, &clock, wave.len()))
    }

    /// Pulse centre times found by peak search, before slot quantization.
    pub fn pdm_marks(&mut self, wave: &Waveform<T>, cfg: &LinkConfig) -> Result<(Vec<f64>, ClockEstimate), ModemError> {
        self.det.detect(wave, cfg)?;
        let clock = self.det.clock(cfg, wave.len())?;
        Ok((marks(&self.det, &clock, cfg.decoder.min_pulse_fraction), clock))
    }

    /// Marks pulse centres and quantizes them to symbol slots.
    pub fn pdm_decode(&mut self, wave: &Waveform<T>, cfg: &LinkConfig) -> Result<BitStream, ModemError> {
        let (centres, clock) = self.pdm_marks(wave, cfg)?;
        if centres.is_empty() {
            return Err(ModemError::NoSignal("no pulses in capture"));
        }
        Ok(pdm_bits(&centres, &clock, symbol_count(&clock, wave.duration())))
    }

    /// Decodes with the scheme selected in `cfg`.
    pub fn decode(&mut self, wave: &Waveform<T>, cfg: &LinkConfig) -> Result<BitStream, ModemError> {
        match cfg.modulation {
            Modulation::Pwm => self.pwm_decode(wave, cfg),
            Modulation::Pdm => self.pdm_decode(wave, cfg),
        }
    }
}

pub fn pwm_decode<T: Scalar>(wave: &Waveform<T>, cfg: &LinkConfig) -> Result<BitStream, ModemError> {
    Decoder::new().pwm_decode(wave, cfg)
}

pub fn pdm_marks<T: Scalar>(wave: &Waveform<T>, cfg: &LinkConfig) -> Result<Vec<f64>, ModemError> {
    Decoder::new().pdm_marks(wave, cfg).map(|(m, _)| m)
}

pub fn pdm_decode<T: Scalar>(wave: &Waveform<T>, cfg: &LinkConfig) -> Result<BitStream, ModemError> {
    Decoder::new().pdm_decode(wave, cfg)
}

pub fn decode<T: Scalar>(wave: &Waveform<T>, cfg: &LinkConfig) -> Result<BitStream, ModemError> {
    Decoder::new().decode(wave, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::build_frame;
    use crate::modem::{encode, rasterize, rasterize_into};
    use crate::rng::make_substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn duty_rule() {
        assert!(label_duty(12, 16));
        assert!(!label_duty(4, 16));
        assert!(label_duty(8, 16));
        assert!(!label_duty(7, 16));
        assert!(!label_duty(0, 0));
    }

    fn padded(bits: &BitStream, cfg: &LinkConfig, lead: usize) -> Waveform<f64> {
        let mut out = Vec::new();
        rasterize_into(&encode(bits, cfg), cfg.sample_rate(), 1.0, lead, 3 * cfg.oversampling as usize, &mut out).unwrap();
        Waveform::new(cfg.sample_rate(), out).unwrap()
    }

    /// Short payloads are wrapped in a frame so clock recovery has enough edges.
    fn framed(payload: &[bool]) -> BitStream {
        let mut bits = build_frame(&[0u8], 0xA5).unwrap().bits().slice(0, 32);
        bits.extend(payload.iter().copied());
        bits.extend(std::iter::repeat_n(false, 8));
        bits
    }

    #[test]
    fn pdm_round_trip_101() {
        let cfg = LinkConfig::new(1e6, Modulation::Pdm);
        let bits = framed(&[true, false, true]);
        let w = padded(&bits, &cfg, 0);
        let got = pdm_decode(&w, &cfg).unwrap();
        assert_eq!(got.slice(32, 3), BitStream::from(vec![true, false, true]));
    }

    #[test]
    fn pdm_round_trip_with_noise() {
        let cfg = LinkConfig::new(1e6, Modulation::Pdm);
        let bits = framed(&[true, false, true]);
        let mut w = padded(&bits, &cfg, 0);
        let mut rng = make_substream(3, 0);
        for x in w.samples_mut() {
            *x += 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
        let got = pdm_decode(&w, &cfg).unwrap();
        assert_eq!(got.slice(32, 3), BitStream::from(vec![true, false, true]));
    }

    #[test]
    fn all_zero_capture_is_no_signal() {
        for m in [Modulation::Pwm, Modulation::Pdm] {
            let cfg = LinkConfig::new(1e6, m);
            let w = Waveform::<f64>::zeros(cfg.sample_rate(), 2000);
            assert!(matches!(decode(&w, &cfg), Err(ModemError::NoSignal(_))));
        }
    }

    #[test]
    fn pwm_round_trip_with_lead() {
        let cfg = LinkConfig::new(2e6, Modulation::Pwm);
        let bytes: Vec<u8> = (0..190u32).map(|i| (i * 97 + 13) as u8).collect();
        let frame = build_frame(&bytes, 0xA5).unwrap();
        for lead in [0, 1, 7, 16, 61, 127] {
            let w = padded(&frame.bits(), &cfg, lead);
            let got = pwm_decode(&w, &cfg).unwrap();
            let off = crate::framing::locate_prefix(&got, 0xA5).unwrap();
            assert_eq!(off, (lead as f64 / 16.0).round() as usize, "lead {lead}");
            assert_eq!(crate::framing::extract_payload(&got, off, 1520).unwrap(), *frame.payload());
        }
    }

    #[test]
    fn pdm_marks_count_popcount() {
        let cfg = LinkConfig::new(3e6, Modulation::Pdm);
        let bytes: Vec<u8> = (0..190u32).map(|i| (i * 31 + 7) as u8).collect();
        let bits = build_frame(&bytes, 0xA5).unwrap().bits();
        let w = rasterize(&encode(&bits, &cfg), cfg.sample_rate(), 1.0f64).unwrap();
        assert_eq!(pdm_marks(&w, &cfg).unwrap().len(), bits.count_ones());
    }
}
