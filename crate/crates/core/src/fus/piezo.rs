use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use super::path::{focal_pressure, AcousticPath};
use super::FusError;
use crate::units::de;
use crate::Scalar;

/// Lumped piezoelectric harvester: a capacitive source whose open-circuit
/// voltage follows a Lorentzian resonance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct PiezoElement<T> {
    #[serde(deserialize_with = "de::area")]
    pub area: T,
    #[serde(deserialize_with = "de::capacitance")]
    pub clamped_capacitance: T,
    pub coupling_k: T,
    #[serde(deserialize_with = "de::frequency")]
    pub resonance_f: T,
    pub quality_q: T,
    /// Degrees from the beam axis.
    pub orientation: T,
    /// Exponent `n` of the `cos^n` incidence projection.
    #[serde(default = "two")]
    pub orientation_exponent: T,
    /// Open-circuit volts per pascal per square metre per unit coupling.
    pub sensitivity: T,
}

fn two<T: Scalar>() -> T {
    T::lit(2.0)
}

/// Single-element power at the tuned operating point with P0 = 30 kPa, W.
pub const CALIBRATED_POWER: f64 = 3.0e-3;

/// Orientations (degrees) of the six-element stent preset.
pub const SIX_ELEMENT_ORIENTATIONS: [f64; 6] = [0.0, 15.0, 35.0, 50.0, 60.0, 75.0];

impl<T: Scalar> PiezoElement<T> {
    /// 1 mm² KNN element, 47 pF clamped, k = 0.4, 1 MHz resonance with Q = 8,
    /// uncalibrated (unit sensitivity).
    pub fn uncalibrated_default() -> Self {
        Self {
            area: T::lit(1e-6),
            clamped_capacitance: T::lit(47e-12),
            coupling_k: T::lit(0.4),
            resonance_f: T::lit(1e6),
            quality_q: T::lit(8.0),
            orientation: T::zero(),
            orientation_exponent: two(),
            sensitivity: T::one(),
        }
    }

    /// Default element calibrated on the default head path.
    pub fn calibrated_default() -> Self {
        let mut e = Self::uncalibrated_default();
        e.calibrate(&AcousticPath::head_default(), T::lit(CALIBRATED_POWER));
        e
    }

    pub fn with_orientation(&self, degrees: T) -> Self {
        Self { orientation: degrees, ..self.clone() }
    }

    /// Sets `sensitivity` so that the tuned operating point on `path`
    /// delivers `target` watts.
    pub fn calibrate(&mut self, path: &AcousticPath<T>, target: T) {
        self.sensitivity = T::one();
        let unit = optimal_operating_point(self, path).power;
        self.sensitivity = (target / unit).sqrt();
    }

    /// Power-shaped Lorentzian with full width `resonance_f / quality_q`.
    pub fn resonance_response(&self, f: T) -> T {
        let x = T::lit(2.0) * self.quality_q * (f - self.resonance_f) / self.resonance_f;
        T::one() / (T::one() + x * x)
    }

    /// Source reactance magnitude `1 / (2 pi f C0)`.
    pub fn reactance(&self, f: T) -> T {
        T::one() / (T::TAU() * f * self.clamped_capacitance)
    }

    pub fn validate(&self) -> Result<(), FusError> {
        orientation_factor(self.orientation, self.orientation_exponent)?;
        let ok = self.area > T::zero()
            && self.coupling_k > T::zero()
            && self.coupling_k < T::one()
            && self.quality_q > T::zero()
            && self.resonance_f > T::zero()
            && self.clamped_capacitance > T::zero();
        if ok {
            Ok(())
        } else {
            Err(FusError::Invalid("piezo element parameters out of range"))
        }
    }
}

/// `cos^exponent(theta)` projection of incident intensity; `theta` in degrees.
pub fn orientation_factor<T: Scalar>(theta: T, exponent: T) -> Result<T, FusError> {
    if !(theta >= T::zero() && theta <= T::lit(90.0)) {
        return Err(FusError::Orientation(theta.as_f64()));
    }
    // cos(90 deg) is not exactly zero in floating point.
    if theta == T::lit(90.0) {
        return Ok(T::zero());
    }
    Ok(theta.to_radians().cos().powf(exponent))
}

/// Power delivered into `r_load` by the element under pressure amplitude `p`:
/// `V^2 r / (r^2 + X^2) / 2`, with `X = 1 / (2 pi f C0)`.
pub fn piezo_power<T: Scalar>(p: T, elem: &PiezoElement<T>, f: T, r_load: T) -> T {
    let projection = orientation_factor(elem.orientation, elem.orientation_exponent).unwrap_or(T::zero());
    let v_gain = elem.sensitivity * elem.coupling_k * elem.area * (elem.resonance_response(f) * projection).sqrt();
    let v_oc = v_gain * p;
    let x = elem.reactance(f);
    v_oc * v_oc * r_load / (r_load * r_load + x * x) / T::lit(2.0)
}

/// The load that maximizes [`piezo_power`] at frequency `f`.
pub fn optimal_load<T: Scalar>(elem: &PiezoElement<T>, f: T) -> T {
    elem.reactance(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatingPoint<T> {
    pub frequency: T,
    pub load: T,
    pub focal_pressure: T,
    pub power: T,
}

fn power_at<T: Scalar>(elem: &PiezoElement<T>, path: &AcousticPath<T>, f: T) -> OperatingPoint<T> {
    let p = focal_pressure(&path.with_frequency(f));
    let r = optimal_load(elem, f);
    OperatingPoint { frequency: f, load: r, focal_pressure: p, power: piezo_power(p, elem, f, r) }
}

/// Jointly tunes FUS frequency and load for one element.
///
/// At the optimal load the power is proportional to `f * L(f) * p_focal(f)^2`;
/// a coarse scan over `resonance_f * (1 +- 3/Q)` brackets the peak and a
/// golden-section search refines it.
pub fn optimal_operating_point<T: Scalar>(elem: &PiezoElement<T>, path: &AcousticPath<T>) -> OperatingPoint<T> {
    let fr = elem.resonance_f.as_f64();
    let span = 3.0 / elem.quality_q.as_f64();
    let (lo, hi) = (fr * (1.0 - span).max(0.05), fr * (1.0 + span));
    let eval = |f: f64| power_at(elem, path, T::lit(f)).power.as_f64();
    const COARSE: usize = 400;
    let step = (hi - lo) / COARSE as f64;
    let best = (0..=COARSE)
        .map(|i| (i, eval(lo + step * i as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let (mut a, mut b) = (lo + step * best.saturating_sub(1) as f64, lo + step * (best + 1).min(COARSE) as f64);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while (b - a) > fr * 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    power_at(elem, path, T::lit(0.5 * (a + b)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArrayPower<T> {
    pub per_element: Vec<T>,
    pub operating_points: Vec<OperatingPoint<T>>,
    pub total: T,
}

/// Sums element powers. With `per_element_tuning` each element runs at its
/// own optimal frequency and load; otherwise all share the path frequency
/// and each sees its optimal load there.
pub fn array_power<T: Scalar>(
    elements: &[PiezoElement<T>],
    path: &AcousticPath<T>,
    per_element_tuning: bool,
) -> Result<ArrayPower<T>, FusError> {
    if elements.is_empty() {
        return Err(FusError::Invalid("element list is empty"));
    }
    elements.iter().try_for_each(PiezoElement::validate)?;
    let operating_points: Vec<OperatingPoint<T>> = elements
        .iter()
        .map(|e| if per_element_tuning { optimal_operating_point(e, path) } else { power_at(e, path, path.frequency) })
        .collect();
    let per_element: Vec<T> = operating_points.iter().map(|op| op.power).collect();
    let total = per_element.iter().fold(T::zero(), |acc, &p| acc + p);
    Ok(ArrayPower { per_element, operating_points, total })
}

/// Delivered power over a frequency x load grid, frequency-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarvestSurface<T> {
    pub f_grid: Vec<T>,
    pub r_grid: Vec<T>,
    pub power: Vec<T>,
}

impl<T: Scalar> HarvestSurface<T> {
    pub fn at(&self, i_f: usize, i_r: usize) -> T {
        self.power[i_f * self.r_grid.len() + i_r]
    }

    /// `(f index, r index, power)` of the largest cell; first wins on ties.
    pub fn argmax(&self) -> (usize, usize, T) {
        let (k, p) = self
            .power
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (k, &p)| if p > acc.1 { (k, p) } else { acc });
        (k / self.r_grid.len(), k % self.r_grid.len(), p)
    }

    /// Writes `f_hz,r_ohm,power_w` rows in grid order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "f_hz,r_ohm,power_w")?;
        for (i, f) in self.f_grid.iter().enumerate() {
            for (j, r) in self.r_grid.iter().enumerate() {
                writeln!(w, "{},{},{:e}", f, r, self.at(i, j).as_f64())?;
            }
        }
        Ok(())
    }
}

/// Evaluates the element on every grid cell; the path's frequency follows
/// the grid so tissue attenuation is re-evaluated per row.
pub fn harvest_sweep<T: Scalar>(
    elem: &PiezoElement<T>,
    path: &AcousticPath<T>,
    f_grid: &[T],
    r_grid: &[T],
) -> Result<HarvestSurface<T>, FusError> {
    if f_grid.is_empty() || r_grid.is_empty() {
        return Err(FusError::Invalid("sweep grids must be non-empty"));
    }
    if f_grid.iter().chain(r_grid).any(|&v| !(v > T::zero())) {
        return Err(FusError::Invalid("sweep grid values must be positive"));
    }
    elem.validate()?;
    let power: Vec<T> = f_grid
        .par_iter()
        .flat_map_iter(|&f| {
            let p = focal_pressure(&path.with_frequency(f));
            r_grid.iter().map(move |&r| piezo_power(p, elem, f, r))
        })
        .collect();
    Ok(HarvestSurface { f_grid: f_grid.to_vec(), r_grid: r_grid.to_vec(), power })
}
