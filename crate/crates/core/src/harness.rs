//! Monte Carlo BER experiments over the full transmit/receive chain.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use std::time::Instant;

use crate::bits::BitStream;
use crate::channel::{end_to_end, end_to_end_in_place, RxModel, TissueStack};
use crate::config::{digest, ConfigError, LinkConfig, Modulation};
use crate::framing::{build_frame, extract_payload, locate_prefix};
use crate::modem::{encode, rasterize_into, Decoder, Waveform};
use crate::powerbudget::MEASURED_ROWS;
use crate::rng::{derive_seed, make_substream, mix64};
use crate::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("n_frames must be >= 1")]
    NoFrames,
    #[error("errors ({errors}) exceed bits ({bits})")]
    ErrorsExceedBits { errors: u64, bits: u64 },
    #[error("bits must be > 0")]
    NoBits,
    #[error("confidence must lie in (0, 1)")]
    Confidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub bits_compared: u64,
    pub bit_errors: u64,
    pub frames_sent: u64,
    pub sync_failures: u64,
    pub ber: f64,
    pub ber_upper_95: f64,
    pub wall_seconds: f64,
    pub config_digest: String,
}

impl BerReport {
    /// More than half the frames failed to synchronize.
    pub fn sync_dominated(&self) -> bool {
        2 * self.sync_failures > self.frames_sent
    }
}

/// Counter triple; merging is plain addition, so any reduction order agrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub bits: u64,
    pub errors: u64,
    pub sync_failures: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally { bits: self.bits + o.bits, errors: self.errors + o.errors, sync_failures: self.sync_failures + o.sync_failures }
    }
}

/// Compares one decoded capture against the payload that was sent.
pub fn score_frame(decoded: Result<&BitStream, ()>, sent: &BitStream, pattern: u8) -> Tally {
    let Ok(rx) = decoded else {
        return Tally { sync_failures: 1, ..Tally::default() };
    };
    match locate_prefix(rx, pattern).and_then(|off| extract_payload(rx, off, sent.len())) {
        Ok(payload) => Tally { bits: sent.len() as u64, errors: payload.hamming_distance(sent) as u64, sync_failures: 0 },
        Err(_) => Tally { sync_failures: 1, ..Tally::default() },
    }
}

/// Exact one-sided (Clopper-Pearson) upper confidence bound on the error
/// probability after `errors` failures in `bits` trials.
pub fn ber_upper_bound(errors: u64, bits: u64, confidence: f64) -> Result<f64, HarnessError> {
    if bits == 0 {
        return Err(HarnessError::NoBits);
    }
    if errors > bits {
        return Err(HarnessError::ErrorsExceedBits { errors, bits });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(HarnessError::Confidence);
    }
    if errors == bits {
        return Ok(1.0);
    }
    if errors == 0 {
        return Ok(-((1.0 - confidence).ln() / bits as f64).exp_m1());
    }
    // Upper bound p solves P[X <= errors | bits, p] = 1 - confidence, i.e.
    // I_p(errors + 1, bits - errors) = confidence.
    let (a, b) = ((errors + 1) as f64, (bits - errors) as f64);
    let (mut lo, mut hi) = (errors as f64 / bits as f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if statrs::function::beta::beta_reg(a, b, mid) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * 1e-14 {
            break;
        }
    }
    Ok(hi)
}

fn report(t: Tally, frames: u64, wall_seconds: f64, config_digest: String) -> BerReport {
    let ber = if t.bits > 0 { t.errors as f64 / t.bits as f64 } else { 0.0 };
    let ber_upper_95 = if t.bits > 0 { ber_upper_bound(t.errors, t.bits, 0.95).expect("valid counts") } else { 1.0 };
    BerReport {
        bits_compared: t.bits,
        bit_errors: t.errors,
        frames_sent: frames,
        sync_failures: t.sync_failures,
        ber,
        ber_upper_95,
        wall_seconds,
        config_digest,
    }
}

#[derive(Serialize)]
struct RunIdentity<'a, T> {
    link: &'a LinkConfig,
    tissue: &'a TissueStack<T>,
    receiver: &'a RxModel<T>,
    frames: u64,
}

/// Digest of everything that determines a run's counters.
pub fn run_digest<T: Scalar + Serialize>(cfg: &LinkConfig, stack: &TissueStack<T>, rx: &RxModel<T>, n_frames: u64) -> String {
    digest(&RunIdentity { link: cfg, tissue: stack, receiver: rx, frames: n_frames })
}

/// Substream ids per frame: payload/timing and channel noise.
const STREAMS_PER_FRAME: u64 = 2;
/// Idle symbols appended after each frame so the last pulse is fully captured.
const TAIL_SYMBOLS: usize = 4;
/// The capture starts up to this many symbols before the frame.
const MAX_LEAD_SYMBOLS: usize = 8;

struct Scratch<T> {
    samples: Vec<T>,
    payload: Vec<u8>,
    decoder: Decoder<T>,
}

fn run_frame<T: Scalar>(
    cfg: &LinkConfig,
    stack: &TissueStack<T>,
    rx: &RxModel<T>,
    frame: u64,
    scratch: &mut Scratch<T>,
    inject: &dyn Fn(u64, &mut BitStream),
) -> Tally {
    let mut data_rng = make_substream(cfg.seed, frame * STREAMS_PER_FRAME);
    scratch.payload.resize(cfg.payload_len, 0);
    data_rng.fill_bytes(&mut scratch.payload);
    let os = cfg.oversampling as usize;
    let lead = data_rng.random_range(0..MAX_LEAD_SYMBOLS * os);
    let frame_bits = build_frame(&scratch.payload, cfg.prefix_pattern).expect("payload_len >= 1 validated");
    let sent = BitStream::from_bytes(&scratch.payload);
    let train = encode(&frame_bits.bits(), cfg);
    let fs = cfg.sample_rate();
    let mut samples = std::mem::take(&mut scratch.samples);
    if rasterize_into(&train, fs, T::lit(cfg.led_peak_power), lead, TAIL_SYMBOLS * os, &mut samples).is_err() {
        scratch.samples = samples;
        return Tally { sync_failures: 1, ..Tally::default() };
    }
    let t0 = frame as f64 * samples.len() as f64 / fs;
    let mut noise_rng = make_substream(cfg.seed, frame * STREAMS_PER_FRAME + 1);
    let wave = match rx.adc_rate {
        Some(rate) if rate != fs => {
            let tx = Waveform::from_parts(fs, samples);
            let out = end_to_end(&tx, stack, rx, &mut noise_rng, t0);
            samples = tx.into_samples();
            match out {
                Ok(w) => w,
                Err(_) => {
                    scratch.samples = samples;
                    return Tally { sync_failures: 1, ..Tally::default() };
                }
            }
        }
        _ => {
            end_to_end_in_place(&mut samples, fs, t0, stack, rx, &mut noise_rng);
            Waveform::from_parts(fs, std::mem::take(&mut samples))
        }
    };
    let decoded = scratch.decoder.decode(&wave, cfg).map(|mut bits| {
        inject(frame, &mut bits);
        bits
    });
    let tally = score_frame(decoded.as_ref().map_err(|_| ()), &sent, cfg.prefix_pattern);
    scratch.samples = if samples.capacity() > 0 { samples } else { wave.into_samples() };
    tally
}

fn run_frames<T: Scalar + Serialize>(
    cfg: &LinkConfig,
    stack: &TissueStack<T>,
    rx: &RxModel<T>,
    n_frames: u64,
    inject: &(dyn Fn(u64, &mut BitStream) + Sync),
) -> Result<BerReport, HarnessError> {
    if n_frames == 0 {
        return Err(HarnessError::NoFrames);
    }
    cfg.validate()?;
    stack.validate()?;
    rx.validate(cfg.data_rate)?;
    let started = Instant::now();
    let tally = (0..n_frames)
        .into_par_iter()
        .map_init(
            || Scratch { samples: Vec::new(), payload: Vec::new(), decoder: Decoder::new() },
            |scratch, frame| run_frame(cfg, stack, rx, frame, scratch, inject),
        )
        .reduce(Tally::default, |a, b| a + b);
    Ok(report(tally, n_frames, started.elapsed().as_secs_f64(), run_digest(cfg, stack, rx, n_frames)))
}

/// Sends `n_frames` random frames through encoder, channel and decoder and
/// counts payload bit errors. Frames whose prefix is not found count as sync
/// failures and contribute no bits. Runs on the current rayon pool; the
/// counters do not depend on its size.
pub fn run_link<T: Scalar + Serialize>(
    cfg: &LinkConfig,
    stack: &TissueStack<T>,
    rx: &RxModel<T>,
    n_frames: u64,
) -> Result<BerReport, HarnessError> {
    run_frames(cfg, stack, rx, n_frames, &|_, _| {})
}

/// [`run_link`] with a hook that may corrupt each frame's decoded bits before
/// scoring.
pub fn run_link_with_injection<T: Scalar + Serialize>(
    cfg: &LinkConfig,
    stack: &TissueStack<T>,
    rx: &RxModel<T>,
    n_frames: u64,
    inject: &(dyn Fn(u64, &mut BitStream) + Sync),
) -> Result<BerReport, HarnessError> {
    run_frames(cfg, stack, rx, n_frames, inject)
}

/// One experiment in a sweep.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate_bps: u64,
    pub modulation: Modulation,
    pub preset: String,
}

impl SweepRow {
    /// The twelve bench measurements.
    pub fn measured() -> Vec<SweepRow> {
        MEASURED_ROWS
            .iter()
            .map(|r| SweepRow { rate_bps: r.rate_bps, modulation: r.modulation, preset: r.preset.to_string() })
            .collect()
    }

    /// Seed derived from the row's content, so duplicates replay identically.
    pub fn seed(&self, master: u64) -> u64 {
        let preset = self.preset.bytes().fold(0u64, |h, b| mix64(h ^ u64::from(b)));
        let modulation = match self.modulation {
            Modulation::Pwm => 1,
            Modulation::Pdm => 2,
        };
        derive_seed(master, &[self.rate_bps, modulation, preset])
    }

    pub fn key(&self) -> String {
        format!("{}mbps-{}", self.rate_bps as f64 / 1e6, self.modulation.as_str().to_ascii_lowercase())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub row: SweepRow,
    pub frames: u64,
    pub report: Result<BerReport, String>,
    /// Measured transmit power for this row, when it is a bench row.
    pub power_mw: Option<f64>,
    pub nj_per_bit: Option<f64>,
}

impl Serialize for SweepRecord {
    /// `report` and `error` are both present; exactly one is null.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("SweepRecord", 6)?;
        st.serialize_field("row", &self.row)?;
        st.serialize_field("frames", &self.frames)?;
        st.serialize_field("report", &self.report.as_ref().ok())?;
        st.serialize_field("error", &self.report.as_ref().err())?;
        st.serialize_field("power_mw", &self.power_mw)?;
        st.serialize_field("nj_per_bit", &self.nj_per_bit)?;
        st.end()
    }
}

/// Settings shared by every row of a sweep.
#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub frames: u64,
    pub master_seed: u64,
    pub template: LinkConfig,
    pub receiver: RxModel<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { frames: 200, master_seed: 1, template: LinkConfig::default(), receiver: RxModel::default() }
    }
}

/// Runs each row independently; a failing row records its error and the
/// sweep moves on.
pub fn sweep(rows: &[SweepRow], settings: &SweepSettings) -> Vec<SweepRecord> {
    rows.iter()
        .map(|row| {
            let mut cfg = settings.template.clone();
            cfg.data_rate = row.rate_bps as f64;
            cfg.modulation = row.modulation;
            cfg.oversampling = row.modulation.default_oversampling();
            cfg.seed = row.seed(settings.master_seed);
            let report = TissueStack::preset(&row.preset)
                .map_err(HarnessError::from)
                .and_then(|stack| run_link(&cfg, &stack, &settings.receiver, settings.frames))
                .map_err(|e| e.to_string());
            let measured = MEASURED_ROWS
                .iter()
                .find(|m| m.rate_bps == row.rate_bps && m.modulation == row.modulation && m.preset == row.preset);
            SweepRecord {
                row: row.clone(),
                frames: settings.frames,
                report,
                power_mw: measured.map(|m| m.power_uw as f64 / 1000.0),
                nj_per_bit: measured.map(|m| m.power_uw as f64 / m.rate_bps as f64 * 1000.0),
            }
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str =
    "rate_bps,modulation,preset,frames,bits,errors,sync_failures,ber,ber_upper_95,power_mw,nj_per_bit,seconds";

/// Writes sweep records; failed rows keep their identity columns and leave
/// the measurement columns empty.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in records {
        write!(w, "{},{},{},{},", r.row.rate_bps, r.row.modulation, r.row.preset, r.frames)?;
        match &r.report {
            Ok(b) => write!(
                w,
                "{},{},{},{:e},{:e},",
                b.bits_compared, b.bit_errors, b.sync_failures, b.ber, b.ber_upper_95
            )?,
            Err(_) => write!(w, ",,,,,")?,
        }
        let secs = r.report.as_ref().map(|b| format!("{:.3}", b.wall_seconds)).unwrap_or_default();
        writeln!(w, "{},{},{}", opt(r.power_mw), opt(r.nj_per_bit), secs)?;
    }
    Ok(())
}

/// Single-run report as one CSV record under [`SWEEP_CSV_HEADER`].
pub fn write_report_csv<W: Write>(cfg: &LinkConfig, preset: &str, report: &BerReport, w: W) -> io::Result<()> {
    let record = SweepRecord {
        row: SweepRow { rate_bps: cfg.data_rate.round() as u64, modulation: cfg.modulation, preset: preset.to_string() },
        frames: report.frames_sent,
        report: Ok(report.clone()),
        power_mw: None,
        nj_per_bit: None,
    };
    write_sweep_csv(std::slice::from_ref(&record), w)
}
