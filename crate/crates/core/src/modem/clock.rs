use super::threshold::{rolling_thresholds_with, ExtremaScratch};
use super::{ModemError, Waveform, PDM_WIDTH};
use crate::config::{DecoderParams, LinkConfig, Modulation};
use crate::Scalar;

/// Minimum capture length for clock recovery, in nominal symbols.
pub const MIN_CAPTURE_SYMBOLS: usize = 32;

/// Recovered symbol clock: boundaries sit at `phase + k * period`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockEstimate {
    pub period: f64,
    /// Symbol boundary nearest the start of the capture, in `[-period/2, period/2]`.
    pub phase: f64,
}

/// Threshold decisions and interpolated crossing times for one capture,
/// with buffers kept across captures.
#[derive(Debug, Default)]
pub(crate) struct Detection<T> {
    pub above: Vec<bool>,
    pub rising: Vec<f64>,
    pub falling: Vec<f64>,
    pub dt: f64,
    thr: Vec<T>,
    extrema: ExtremaScratch<T>,
    fit: Vec<(f64, f64)>,
}

impl<T: Scalar> Detection<T> {
    pub fn run(wave: &Waveform<T>, cfg: &LinkConfig) -> Result<Self, ModemError> {
        let mut det = Self::default();
        det.detect(wave, cfg)?;
        Ok(det)
    }

    pub fn detect(&mut self, wave: &Waveform<T>, cfg: &LinkConfig) -> Result<(), ModemError> {
        let samples = wave.samples();
        let (lo, hi) = wave.min_max().ok_or(ModemError::NoSignal("empty capture"))?;
        let DecoderParams { window_symbols, noise_floor, relative_floor, .. } = cfg.decoder;
        let span = hi - lo;
        let abs_floor = T::lit(noise_floor);
        if span <= abs_floor {
            return Err(ModemError::NoSignal("capture is flat"));
        }
        let floor = abs_floor.max(span * T::lit(relative_floor));
        let sps = wave.sample_rate() / cfg.data_rate;
        let half = ((f64::from(window_symbols) * sps) / 2.0).round().max(1.0) as usize;
        let thr = &mut self.thr;
        rolling_thresholds_with(samples, half, floor, thr, &mut self.extrema);

        self.above.clear();
        self.above.extend(samples.iter().zip(thr.iter()).map(|(&x, &t)| x > t));
        self.dt = wave.dt();
        self.rising.clear();
        self.falling.clear();
        let above = &self.above;
        for i in 1..samples.len() {
            if above[i] == above[i - 1] {
                continue;
            }
            let (x0, x1) = (samples[i - 1], samples[i]);
            let t = if thr[i].is_finite() { thr[i] } else { thr[i - 1] };
            let frac = if x1 != x0 { ((t - x0) / (x1 - x0)).as_f64().clamp(0.0, 1.0) } else { 0.5 };
            let time = (i as f64 - 1.0 + frac) * self.dt;
            if above[i] {
                self.rising.push(time);
            } else {
                self.falling.push(time);
            }
        }
        Ok(())
    }

    /// Least-squares fit of rising-edge times against integer symbol indices.
    pub fn clock(&mut self, cfg: &LinkConfig, n_samples: usize) -> Result<ClockEstimate, ModemError> {
        let nominal = cfg.symbol_period();
        let symbols = n_samples as f64 * self.dt / nominal;
        if symbols < MIN_CAPTURE_SYMBOLS as f64 {
            return Err(ModemError::TooShort { symbols, needed: MIN_CAPTURE_SYMBOLS });
        }
        if self.rising.len() < 4 {
            return Err(ModemError::NoSignal("fewer than four rising edges"));
        }
        let mut intercept = self.rising[0];
        let mut period = nominal;
        let mut use_all = true;
        for _ in 0..3 {
            self.fit.clear();
            self.fit.extend(self.rising.iter().filter_map(|&t| {
                let n = ((t - intercept) / period).round();
                let resid = t - intercept - n * period;
                (use_all || resid.abs() < 0.2 * period).then_some((n, t))
            }));
            match fit_line(&self.fit) {
                Some((a, b)) if b > 0.5 * nominal && b < 2.0 * nominal => {
                    intercept = a;
                    period = b;
                }
                _ => return Err(ModemError::NoSignal("rising edges do not fit a symbol clock")),
            }
            use_all = false;
        }
        let edge_offset = match cfg.modulation {
            Modulation::Pwm => 0.0,
            Modulation::Pdm => 0.5 * (1.0 - PDM_WIDTH),
        };
        let boundary = intercept - edge_offset * period;
        Ok(ClockEstimate { period, phase: boundary - period * (boundary / period).round() })
    }
}

/// Returns `(intercept, slope)` of the least-squares line through `(x, y)` points.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(sxy, sxx), &(x, y)| (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx)));
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Estimates symbol period and phase from the capture's rising edges.
pub fn clock_recover<T: Scalar>(wave: &Waveform<T>, cfg: &LinkConfig) -> Result<ClockEstimate, ModemError> {
    Detection::run(wave, cfg)?.clock(cfg, wave.len())
}
