//! Telemetry power and throughput arithmetic.
//!
//! Everything here is generic over [`num_traits::Num`], so the same code
//! runs on `f64`, on integers, and on exact rationals such as
//! `num_rational::Ratio<i64>`.

use num_traits::{FromPrimitive, Num};
use serde::Serialize;

use crate::config::Modulation;
use crate::framing::{PAYLOAD_BITS, PREFIX_BITS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BudgetError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Transmit power measured at one data rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePowerPoint<T> {
    /// bit/s
    pub data_rate: T,
    /// W
    pub power: T,
    pub tissue_preset: String,
    pub modulation: Modulation,
}

/// J/bit.
pub fn energy_per_bit<T: Num + Copy + PartialOrd>(p: &RatePowerPoint<T>) -> Result<T, BudgetError> {
    if p.data_rate <= T::zero() {
        return Err(BudgetError::NonPositive("data_rate"));
    }
    Ok(p.power / p.data_rate)
}

/// Raw sample throughput `channels * fs * resolution`, no framing overhead.
pub fn required_rate<T: Num + Copy + PartialOrd>(channels: T, fs: T, resolution: T) -> Result<T, BudgetError> {
    for (v, name) in [(channels, "channels"), (fs, "sampling rate"), (resolution, "resolution")] {
        if v <= T::zero() {
            return Err(BudgetError::NonPositive(name));
        }
    }
    Ok(channels * fs * resolution)
}

/// Ratio of transmitted frame bits to payload bits, `(num, den)`.
pub const FRAMING_OVERHEAD: (u32, u32) = ((PREFIX_BITS + PAYLOAD_BITS) as u32, PAYLOAD_BITS as u32);

/// `required_rate` scaled by the prefix overhead (1552/1520).
pub fn required_rate_framed<T: Num + Copy + PartialOrd + FromPrimitive>(
    channels: T,
    fs: T,
    resolution: T,
) -> Result<T, BudgetError> {
    let raw = required_rate(channels, fs, resolution)?;
    Ok(raw * from_u32(FRAMING_OVERHEAD.0) / from_u32(FRAMING_OVERHEAD.1))
}

fn from_u32<T: FromPrimitive>(v: u32) -> T {
    T::from_u32(v).expect("small integer representable")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Feasibility<T> {
    pub required_raw: T,
    pub required_framed: T,
    pub link_rate: T,
    pub raw_ok: bool,
    pub framed_ok: bool,
    /// `link_rate - required_framed`; negative when framing does not fit.
    pub margin: T,
}

pub fn feasibility<T: Num + Copy + PartialOrd + FromPrimitive>(
    channels: T,
    fs: T,
    resolution: T,
    link_rate: T,
) -> Result<Feasibility<T>, BudgetError> {
    if link_rate <= T::zero() {
        return Err(BudgetError::NonPositive("link rate"));
    }
    let required_raw = required_rate(channels, fs, resolution)?;
    let required_framed = required_rate_framed(channels, fs, resolution)?;
    Ok(Feasibility {
        required_raw,
        required_framed,
        link_rate,
        raw_ok: required_raw <= link_rate,
        framed_ok: required_framed <= link_rate,
        margin: link_rate - required_framed,
    })
}

/// One measured row of the bench results, in integer units so that every
/// derived quantity can be evaluated exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeasuredRow {
    pub rate_bps: u64,
    pub preset: &'static str,
    pub modulation: Modulation,
    pub power_uw: u64,
    /// Efficiency as printed with the measurement, pJ/bit.
    pub printed_pj_per_bit: u64,
}

impl MeasuredRow {
    pub fn power_w(&self) -> f64 {
        self.power_uw as f64 * 1e-6
    }

    /// Row key such as `5mbps-pwm`.
    pub fn rate_key(&self) -> String {
        let mbps = self.rate_bps as f64 / 1e6;
        format!("{mbps}mbps-{}", self.modulation.as_str().to_ascii_lowercase())
    }

    pub fn point<T: Num + FromPrimitive>(&self) -> RatePowerPoint<T> {
        RatePowerPoint {
            data_rate: T::from_u64(self.rate_bps).expect("rate representable"),
            power: T::from_u64(self.power_uw).expect("power representable")
                / T::from_u64(1_000_000).expect("scale representable"),
            tissue_preset: self.preset.to_string(),
            modulation: self.modulation,
        }
    }
}

const fn row(rate_bps: u64, preset: &'static str, modulation: Modulation, power_uw: u64, pj: u64) -> MeasuredRow {
    MeasuredRow { rate_bps, preset, modulation, power_uw, printed_pj_per_bit: pj }
}

/// Measured transmit power per (rate, tissue, modulation) on the bovine bench.
pub const MEASURED_ROWS: [MeasuredRow; 12] = [
    row(500_000, "bone5_skin7", Modulation::Pwm, 1_100, 2_300),
    row(1_000_000, "bone5_skin7", Modulation::Pwm, 1_300, 1_300),
    row(2_000_000, "bone5_skin7", Modulation::Pwm, 1_800, 900),
    row(5_000_000, "bone5_skin7", Modulation::Pwm, 2_700, 540),
    row(1_000_000, "bone5_skin7", Modulation::Pdm, 1_400, 1_400),
    row(3_000_000, "bone5_skin7", Modulation::Pdm, 2_700, 900),
    row(2_000_000, "bone8_skin7", Modulation::Pwm, 2_100, 1_050),
    row(5_000_000, "bone8_skin7", Modulation::Pwm, 3_400, 680),
    row(3_000_000, "bone8_skin7", Modulation::Pdm, 2_400, 800),
    row(2_000_000, "bone10_skin7", Modulation::Pwm, 2_600, 1_300),
    row(5_000_000, "bone10_skin7", Modulation::Pwm, 3_800, 760),
    row(3_000_000, "bone10_skin7", Modulation::Pdm, 2_900, 960),
];

/// Agreement tolerance between computed and printed efficiency, nJ/bit.
pub const EFFICIENCY_TOLERANCE_NJ: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyCheck {
    pub row: MeasuredRow,
    pub computed_nj_per_bit: f64,
    pub printed_nj_per_bit: f64,
    /// Printed value disagrees with power / rate beyond the tolerance.
    pub inconsistent: bool,
}

/// Recomputes every row's nJ/bit and flags rows whose printed value disagrees.
pub fn check_efficiencies() -> Vec<EfficiencyCheck> {
    MEASURED_ROWS
        .iter()
        .map(|r| {
            let computed = energy_per_bit(&r.point::<f64>()).expect("rates are positive") * 1e9;
            let printed = r.printed_pj_per_bit as f64 / 1000.0;
            EfficiencyCheck {
                row: *r,
                computed_nj_per_bit: computed,
                printed_nj_per_bit: printed,
                inconsistent: (computed - printed).abs() > EFFICIENCY_TOLERANCE_NJ + 1e-12,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn point(rate: f64, power: f64) -> RatePowerPoint<f64> {
        RatePowerPoint { data_rate: rate, power, tissue_preset: "bone5_skin7".into(), modulation: Modulation::Pwm }
    }

    #[test]
    fn published_efficiencies() {
        assert!((energy_per_bit(&point(5e6, 2.7e-3)).unwrap() - 0.54e-9).abs() < 1e-22);
        assert!((energy_per_bit(&point(1e6, 1.3e-3)).unwrap() - 1.3e-9).abs() < 1e-22);
        assert_eq!(energy_per_bit(&point(1.0, 0.0)).unwrap(), 0.0);
        assert!(energy_per_bit(&point(0.0, 1.0)).is_err());
    }

    #[test]
    fn exact_rational_efficiency() {
        let p = MEASURED_ROWS[3].point::<Q>();
        assert_eq!(energy_per_bit(&p).unwrap(), Q::new(54, 100_000_000_000));
        // Round trip is exact over the rationals.
        for r in &MEASURED_ROWS {
            let p = r.point::<Q>();
            assert_eq!(energy_per_bit(&p).unwrap() * p.data_rate, p.power);
        }
    }

    #[test]
    fn capacity_claims() {
        assert_eq!(required_rate(41u64, 2000, 24).unwrap(), 1_968_000);
        assert_eq!(required_rate(32u64, 9700, 16).unwrap(), 4_966_400);
        assert_eq!(required_rate(1u64, 1, 1).unwrap(), 1);
        assert!(required_rate(0u64, 2000, 24).is_err());
    }

    #[test]
    fn framed_requirements_exact() {
        let framed = required_rate_framed(Q::from(41), Q::from(2000), Q::from(24)).unwrap();
        assert_eq!(framed, Q::new(1_968_000 * 1552, 1520));
        assert_eq!(framed.round().to_integer(), 2_009_432);
        let f = feasibility(Q::from(41), Q::from(2000), Q::from(24), Q::from(2_000_000)).unwrap();
        assert!(f.raw_ok && !f.framed_ok);
        assert!(f.margin < Q::from(0));
        let f = feasibility(Q::from(32), Q::from(9700), Q::from(16), Q::from(5_000_000)).unwrap();
        assert!(f.raw_ok && !f.framed_ok);
        assert_eq!(f.required_framed.round().to_integer(), 5_070_956);
        assert!(feasibility(Q::from(0), Q::from(1), Q::from(1), Q::from(1)).is_err());
        assert!(feasibility(Q::from(1), Q::from(1), Q::from(1), Q::from(0)).is_err());
    }

    #[test]
    fn efficiency_table() {
        let checks = check_efficiencies();
        assert_eq!(checks.len(), 12);
        let flagged: Vec<usize> = checks.iter().enumerate().filter(|(_, c)| c.inconsistent).map(|(i, _)| i).collect();
        assert_eq!(flagged, vec![0]);
        assert!((checks[0].computed_nj_per_bit - 2.2).abs() < 1e-12);
        for c in &checks[1..] {
            assert!((c.computed_nj_per_bit - c.printed_nj_per_bit).abs() <= 0.01);
        }
    }

    #[test]
    fn row_keys() {
        assert_eq!(MEASURED_ROWS[0].rate_key(), "0.5mbps-pwm");
        assert_eq!(MEASURED_ROWS[3].rate_key(), "5mbps-pwm");
        assert_eq!(MEASURED_ROWS[11].rate_key(), "3mbps-pdm");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_identity(rate in 1i64..10_000_000, power_uw in 0i64..100_000) {
                let p = RatePowerPoint { data_rate: Q::from(rate), power: Q::new(power_uw, 1_000_000), tissue_preset: String::new(), modulation: Modulation::Pdm };
                prop_assert_eq!(energy_per_bit(&p).unwrap() * p.data_rate, p.power);
            }

            #[test]
            fn multiplicative(c in 1u64..1000, fs in 1u64..100_000, bits in 1u64..32) {
                let base = required_rate(c, fs, bits).unwrap();
                prop_assert_eq!(required_rate(2 * c, fs, bits).unwrap(), 2 * base);
                prop_assert_eq!(required_rate(c, 2 * fs, bits).unwrap(), 2 * base);
                prop_assert_eq!(required_rate(c, fs, 2 * bits).unwrap(), 2 * base);
            }
        }
    }
}
