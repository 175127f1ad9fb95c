//! Optical signal path: LED output through layered tissue, ambient light,
//! APD + TIA conversion with noise, and ADC sampling.

mod receiver;
mod tissue;

pub use receiver::{
    adc_sample, add_ambient, ambient, ambient_at, apd_tia, apd_tia_in_place, end_to_end, end_to_end_in_place,
    link_budget, quantize_in_place, LinkBudget, RxModel, ELEMENTARY_CHARGE,
};
pub use tissue::{propagate, TissueLayer, TissueStack};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("ADC rate {adc_rate} Hz exceeds the analog sample rate {input_rate} Hz")]
    AdcRateTooHigh { adc_rate: f64, input_rate: f64 },
    #[error("optical power must be non-negative")]
    NegativeOptical,
}
