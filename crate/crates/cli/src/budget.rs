use clap::Args;
use serde::Serialize;

use crate::error::CliError;
use translum::powerbudget::{feasibility, FRAMING_OVERHEAD};
use num_traits::{CheckedDiv, CheckedMul};
use translum::Rational;

#[derive(Args)]
pub struct BudgetArgs {
    /// Recording channels
    #[arg(long)]
    channels: String,
    /// Per-channel sampling rate, Hz
    #[arg(long)]
    fs: String,
    /// Bits per sample
    #[arg(long)]
    bits: String,
    /// Link data rate, bit/s
    #[arg(long, default_value = "5e6")]
    rate: String,
    #[arg(long)]
    json: bool,
}

/// Exact value of a decimal literal such as `9.7e3` or `2000`.
pub fn parse_exact(text: &str) -> Result<Rational, CliError> {
    let bad = || CliError::Usage(format!("not a decimal number: {text:?}"));
    let t = text.trim();
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let scale = exponent - frac_part.len() as i32;
    if scale.unsigned_abs() > 18 || digits.len() > 18 {
        return Err(CliError::Usage(format!("{text:?} is outside the exact range")));
    }
    let mut value = Rational::from_integer(digits.parse::<i64>().map_err(|_| bad())?);
    let pow = Rational::from_integer(10i64.pow(scale.unsigned_abs()));
    value = if scale >= 0 { value.checked_mul(&pow) } else { value.checked_div(&pow) }
        .ok_or_else(|| CliError::Usage(format!("{text:?} is outside the exact range")))?;
    Ok(if negative { -value } else { value })
}

/// Integer when exact, otherwise `num/den`.
fn exact_string(q: &Rational) -> String {
    if q.is_integer() {
        q.to_integer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Serialize)]
struct BudgetJson {
    channels: String,
    fs_hz: String,
    bits: String,
    link_rate_bps: String,
    required_rate_bps: String,
    framed_rate_bps: String,
    framed_rate_bps_rounded: i64,
    framing_overhead: String,
    raw_ok: bool,
    framed_ok: bool,
}

pub fn run(args: BudgetArgs) -> Result<(), CliError> {
    let (c, fs, bits, rate) =
        (parse_exact(&args.channels)?, parse_exact(&args.fs)?, parse_exact(&args.bits)?, parse_exact(&args.rate)?);
    let f = feasibility(c, fs, bits, rate).map_err(|e| CliError::Usage(e.to_string()))?;
    let doc = BudgetJson {
        channels: exact_string(&c),
        fs_hz: exact_string(&fs),
        bits: exact_string(&bits),
        link_rate_bps: exact_string(&f.link_rate),
        required_rate_bps: exact_string(&f.required_raw),
        framed_rate_bps: exact_string(&f.required_framed),
        framed_rate_bps_rounded: f.required_framed.round().to_integer(),
        framing_overhead: format!("{}/{}", FRAMING_OVERHEAD.0, FRAMING_OVERHEAD.1),
        raw_ok: f.raw_ok,
        framed_ok: f.framed_ok,
    };
    if args.json {
        println!("{}", serde_json::to_string(&doc).expect("budget serializes"));
    } else {
        let group = |s: &str| thousands(s);
        println!("required rate: {} bit/s", group(&doc.required_rate_bps));
        println!(
            "with framing ({}): {} bit/s (exactly {})",
            doc.framing_overhead,
            group(&doc.framed_rate_bps_rounded.to_string()),
            doc.framed_rate_bps
        );
        println!("link rate: {} bit/s", group(&doc.link_rate_bps));
        println!("raw fits: {}", doc.raw_ok);
        println!("framed fits: {}", doc.framed_ok);
    }
    Ok(())
}

/// `1968000` -> `1,968,000`; anything that is not a plain integer is returned as is.
fn thousands(s: &str) -> String {
    let (sign, digits) = s.strip_prefix('-').map_or(("", s), |d| ("-", d));
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return s.to_string();
    }
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    format!("{sign}{out}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_parsing() {
        assert_eq!(parse_exact("2e6").unwrap(), Rational::from_integer(2_000_000));
        assert_eq!(parse_exact("9.7e3").unwrap(), Rational::from_integer(9700));
        assert_eq!(parse_exact("0.25").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_exact("-3").unwrap(), Rational::from_integer(-3));
        assert_eq!(parse_exact("1E-2").unwrap(), Rational::new(1, 100));
        for bad in ["", "abc", "1e", "1.2.3", "e5", "1e99"] {
            assert!(parse_exact(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grouping() {
        assert_eq!(thousands("1968000"), "1,968,000");
        assert_eq!(thousands("999"), "999");
        assert_eq!(thousands("-1000"), "-1,000");
        assert_eq!(thousands("3/4"), "3/4");
    }
}
