use super::ModemError;
use crate::Scalar;

/// Midpoint of the window's minimum and maximum.
///
/// Fails with `NoSignal` when `max - min <= noise_floor` or the window has
/// fewer than two samples.
pub fn adaptive_threshold<T: Scalar>(window: &[T], noise_floor: T) -> Result<T, ModemError> {
    if window.len() < 2 {
        return Err(ModemError::NoSignal("window shorter than two samples"));
    }
    let (lo, hi) = window
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi - lo <= noise_floor {
        return Err(ModemError::NoSignal("flat window"));
    }
    Ok(midpoint(lo, hi))
}

#[inline]
fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    lo + (hi - lo) * T::lit(0.5)
}

#[inline]
fn fmax<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
fn fmin<T: Scalar>(a: T, b: T) -> T {
    if a < b {
        a
    } else {
        b
    }
}

/// Per-sample threshold from the centred window `[i - half, i + half]`,
/// clipped to the capture.
///
/// Flat windows (span `<= floor`) get `+inf`, so no sample there counts as
/// above threshold. Full-length windows combine a suffix scan and a prefix
/// scan over blocks of the window length; clipped windows at either end use
/// running extrema.
pub fn rolling_thresholds<T: Scalar>(samples: &[T], half: usize, floor: T, out: &mut Vec<T>) {
    rolling_thresholds_with(samples, half, floor, out, &mut ExtremaScratch::default());
}

/// Reusable block-scan buffers for [`rolling_thresholds`].
#[derive(Debug, Default)]
pub(crate) struct ExtremaScratch<T> {
    fwd: Vec<(T, T)>,
    bwd: Vec<(T, T)>,
}

pub(crate) fn rolling_thresholds_with<T: Scalar>(
    samples: &[T],
    half: usize,
    floor: T,
    out: &mut Vec<T>,
    scratch: &mut ExtremaScratch<T>,
) {
    let n = samples.len();
    out.clear();
    if n == 0 {
        return;
    }
    let w = 2 * half + 1;
    let ExtremaScratch { fwd, bwd } = scratch;
    fwd.clear();
    fwd.extend(samples.iter().map(|&x| (x, x)));
    bwd.clear();
    bwd.extend_from_slice(fwd);
    for start in (0..n).step_by(w) {
        let end = (start + w).min(n);
        for p in start + 1..end {
            let (hi, lo) = fwd[p - 1];
            fwd[p] = (fmax(fwd[p].0, hi), fmin(fwd[p].1, lo));
        }
        for p in (start..end - 1).rev() {
            let (hi, lo) = bwd[p + 1];
            bwd[p] = (fmax(bwd[p].0, hi), fmin(bwd[p].1, lo));
        }
    }
    let decide = |(hi, lo): (T, T)| if hi - lo <= floor { T::infinity() } else { midpoint(lo, hi) };
    out.resize(n, T::zero());
    // Left edge: windows [0, i + half].
    let left = half.min(n);
    let mut run = (T::neg_infinity(), T::infinity());
    for &x in &samples[..half.min(n - 1) + 1] {
        run = (fmax(run.0, x), fmin(run.1, x));
    }
    for i in 0..left {
        if i > 0 && i + half < n {
            let x = samples[i + half];
            run = (fmax(run.0, x), fmin(run.1, x));
        }
        out[i] = decide(run);
    }
    // Right edge: windows [i - half, n - 1].
    let mut run = (T::neg_infinity(), T::infinity());
    let mut next = n;
    for i in (left..n).rev() {
        if i + half < n {
            break;
        }
        let a = i.saturating_sub(half);
        while next > a {
            next -= 1;
            run = (fmax(run.0, samples[next]), fmin(run.1, samples[next]));
        }
        out[i] = decide(run);
    }
    // Interior: full windows.
    for i in left..n.saturating_sub(half) {
        let (f, b) = (fwd[i + half], bwd[i - half]);
        out[i] = decide((fmax(f.0, b.0), fmin(f.1, b.1)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alternating_window() {
        let w: Vec<f64> = (0..32).map(|i| (i % 2) as f64).collect();
        assert_eq!(adaptive_threshold(&w, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn offset_window() {
        let w: Vec<f64> = (0..32).map(|i| if i % 4 == 0 { 1.2 } else { 0.2 }).collect();
        assert!((adaptive_threshold(&w, 0.0).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn constant_window_has_no_signal() {
        let w = vec![0.3f64; 64];
        assert_eq!(adaptive_threshold(&w, 0.0), Err(ModemError::NoSignal("flat window")));
    }

    fn naive(samples: &[f64], half: usize, floor: f64) -> Vec<f64> {
        (0..samples.len())
            .map(|i| {
                let lo_i = i.saturating_sub(half);
                let hi_i = (i + half).min(samples.len() - 1);
                let w = &samples[lo_i..=hi_i];
                let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi - lo <= floor {
                    f64::INFINITY
                } else {
                    lo + (hi - lo) * 0.5
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn rolling_matches_naive(samples in proptest::collection::vec(-5.0f64..5.0, 1..300), half in 0usize..40, floor in 0.0f64..3.0) {
            let mut got = Vec::new();
            rolling_thresholds(&samples, half, floor, &mut got);
            prop_assert_eq!(got, naive(&samples, half, floor));
        }
    }
}
