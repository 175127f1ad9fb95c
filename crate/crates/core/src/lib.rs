//! Simulator for a transcranial optical telemetry link (framing, PWM/PDM
//! modem, layered tissue channel, APD receiver, BER harness) and for
//! focused-ultrasound power delivery to piezoelectric harvesters.
//!
//! Signal-processing types are generic over [`Scalar`] (`f32` or `f64`);
//! the power-budget arithmetic is generic over [`num_traits::Num`] and runs
//! on exact rationals. The aliases below fix the usual `f64` instantiation.

pub mod bits;
pub mod channel;
pub mod config;
pub mod framing;
pub mod fus;
pub mod harness;
pub mod modem;
pub mod powerbudget;
pub mod rng;
mod scalar;
pub mod units;

pub use bits::BitStream;
pub use config::{Config, ConfigError, DecoderParams, LinkConfig, Modulation};
pub use framing::{build_frame, extract_payload, locate_prefix, Frame, FramingError};
pub use harness::{ber_upper_bound, run_link, sweep, BerReport, SweepRow};
pub use rng::{make_substream, RngStream};
pub use scalar::Scalar;

pub type Waveform64 = modem::Waveform<f64>;
pub type Waveform32 = modem::Waveform<f32>;
pub type TissueLayer64 = channel::TissueLayer<f64>;
pub type TissueStack64 = channel::TissueStack<f64>;
pub type RxModel64 = channel::RxModel<f64>;
pub type AcousticLayer64 = fus::AcousticLayer<f64>;
pub type AcousticPath64 = fus::AcousticPath<f64>;
pub type PiezoElement64 = fus::PiezoElement<f64>;
pub type SafetyLimits64 = fus::SafetyLimits<f64>;
/// Exact rational used for throughput and efficiency arithmetic.
pub type Rational = num_rational::Ratio<i64>;
