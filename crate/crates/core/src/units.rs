//! Unit-suffixed quantities in configuration files.
//!
//! A quantity is either a bare JSON number (already SI) or a string such as
//! `"5 Mbit/s"`, `"2.7 mW"` or `"0.25 /mm"`. Strings are converted to SI at
//! parse time; serialization always writes bare SI numbers.

use serde::de::{Deserializer, Error as DeError, Visitor};
use std::fmt;

use crate::config::ConfigError;
use crate::Scalar;

/// Physical dimension of a configuration quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Rate,
    Power,
    Length,
    InverseLength,
    Area,
    Frequency,
    Time,
    Pressure,
    Voltage,
    Capacitance,
    Resistance,
    Impedance,
    Dimensionless,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Rate => &[
                ("bit/s", 1.0),
                ("bps", 1.0),
                ("kbit/s", 1e3),
                ("kbps", 1e3),
                ("Mbit/s", 1e6),
                ("Mbps", 1e6),
                ("Gbit/s", 1e9),
            ],
            Dim::Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6), ("µW", 1e-6), ("nW", 1e-9)],
            Dim::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6)],
            Dim::InverseLength => &[
                ("/m", 1.0),
                ("m^-1", 1.0),
                ("/cm", 1e2),
                ("cm^-1", 1e2),
                ("/mm", 1e3),
                ("mm^-1", 1e3),
            ],
            Dim::Area => &[("m^2", 1.0), ("cm^2", 1e-4), ("mm^2", 1e-6)],
            Dim::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
            Dim::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9)],
            Dim::Pressure => &[("Pa", 1.0), ("kPa", 1e3), ("MPa", 1e6)],
            Dim::Voltage => &[("V", 1.0), ("mV", 1e-3), ("uV", 1e-6), ("µV", 1e-6)],
            Dim::Capacitance => &[("F", 1.0), ("uF", 1e-6), ("µF", 1e-6), ("nF", 1e-9), ("pF", 1e-12)],
            Dim::Resistance => &[("ohm", 1.0), ("Ω", 1.0), ("kohm", 1e3), ("kΩ", 1e3), ("Mohm", 1e6)],
            Dim::Impedance => &[("Rayl", 1.0), ("MRayl", 1e6)],
            Dim::Dimensionless => &[("", 1.0), ("%", 1e-2)],
        }
    }
}

/// Parses `"<number> <unit>"` (whitespace optional) into an SI value.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, ConfigError> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && text[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| ConfigError::Quantity(format!("cannot parse number in {text:?}")))?;
    let unit = unit.trim();
    let scale = dim
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| ConfigError::Quantity(format!("unknown unit {unit:?} for {dim:?} in {text:?}")))?;
    // Sub-unit prefixes divide by an exact power of ten so "800 uW" is 8e-4 to the last bit.
    let si = if scale < 1.0 { value / (1.0 / scale).round() } else { value * scale };
    if !si.is_finite() {
        return Err(ConfigError::Quantity(format!("non-finite quantity {text:?}")));
    }
    Ok(si)
}

struct QuantityVisitor(Dim);

impl<'de> Visitor<'de> for QuantityVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a number or a unit-suffixed {:?} string", self.0)
    }

    fn visit_f64<E: DeError>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: DeError>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: DeError>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: DeError>(self, v: &str) -> Result<f64, E> {
        parse_quantity(v, self.0).map_err(E::custom)
    }
}

fn quantity<'de, D: Deserializer<'de>, T: Scalar>(d: D, dim: Dim) -> Result<T, D::Error> {
    d.deserialize_any(QuantityVisitor(dim)).map(T::lit)
}

macro_rules! dim_fns {
    ($($name:ident => $dim:ident),* $(,)?) => {
        $(
            pub fn $name<'de, D: Deserializer<'de>, T: Scalar>(d: D) -> Result<T, D::Error> {
                quantity(d, Dim::$dim)
            }
        )*
    };
}

/// `deserialize_with` helpers, one per dimension.
pub mod de {
    use super::*;

    dim_fns! {
        rate => Rate,
        power => Power,
        length => Length,
        inverse_length => InverseLength,
        area => Area,
        frequency => Frequency,
        time => Time,
        pressure => Pressure,
        voltage => Voltage,
        capacitance => Capacitance,
        resistance => Resistance,
        impedance => Impedance,
        dimensionless => Dimensionless,
    }

    /// [`frequency`] for `Option` fields.
    pub fn opt_frequency<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        frequency::<D, f64>(d).map(Some)
    }
}
