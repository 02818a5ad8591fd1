use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{fft_real, TimeSeries};

/// What part of a series to measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// Frequencies in `[f_lo, f_hi]` Hz.
    Band { f_lo: f64, f_hi: f64 },
    /// Absolute times in `[t_a, t_b)` seconds.
    Window { t_a: f64, t_b: f64 },
}

/// Selected energy over total energy.
pub fn energy_fraction(ts: &TimeSeries, selector: Selector) -> Result<f64> {
    let total = ts.energy();
    if !(total > 0.0) {
        return Err(Error::Degenerate("zero-energy series has no energy fraction".into()));
    }
    let fs = ts.fs();
    match selector {
        Selector::Band { f_lo, f_hi } => {
            let nyq = fs / 2.0;
            if !(f_lo >= 0.0 && f_lo < f_hi && f_hi <= nyq * (1.0 + 1e-12)) {
                return Err(Error::Parameter(format!(
                    "band {f_lo}..{f_hi} Hz must lie within 0..{nyq} Hz"
                )));
            }
            let n = ts.len();
            let sp = fft_real(ts.samples(), n);
            let df = fs / n as f64;
            let (mut sel, mut all) = (0.0, 0.0);
            for (k, c) in sp.iter().enumerate().take(n / 2 + 1) {
                let w = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
                let e = w * c.norm_sqr();
                all += e;
                let f = k as f64 * df;
                if f >= f_lo && f <= f_hi {
                    sel += e;
                }
            }
            Ok(sel / all)
        }
        Selector::Window { t_a, t_b } => {
            let end = ts.t0() + ts.duration();
            let tol = 0.5 / fs;
            if !(t_a < t_b && t_a >= ts.t0() - tol && t_b <= end + tol) {
                return Err(Error::Range(format!(
                    "window {t_a}..{t_b} s outside series {}..{end} s",
                    ts.t0()
                )));
            }
            let sel: f64 = ts
                .samples()
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let t = ts.time_at(*i);
                    t >= t_a && t < t_b
                })
                .map(|(_, x)| x * x)
                .sum();
            Ok(sel / total)
        }
    }
}

/// `(ideal - candidate, ||ideal - candidate|| / ||ideal||)`.
pub fn template_error(ideal: &TimeSeries, candidate: &TimeSeries) -> Result<(TimeSeries, f64)> {
    if ideal.len() != candidate.len() {
        return Err(Error::Shape(format!(
            "template lengths differ: {} vs {}",
            ideal.len(),
            candidate.len()
        )));
    }
    if (ideal.fs() - candidate.fs()).abs() > 1e-9 * ideal.fs() {
        return Err(Error::Shape(format!(
            "sample rates differ: {} vs {}",
            ideal.fs(),
            candidate.fs()
        )));
    }
    let norm = ideal.energy().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("ideal template has zero energy".into()));
    }
    let err: Vec<f64> = ideal.samples().iter().zip(candidate.samples()).map(|(a, b)| a - b).collect();
    let e = err.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((ideal.with_samples(err)?, e / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tone(f: f64, fs: f64, n: usize) -> TimeSeries {
        TimeSeries::new(fs, 0.0, (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).cos()).collect())
            .unwrap()
    }

    #[test]
    fn full_band_is_one() {
        let ts = tone(17.3, 256.0, 1000);
        let f = energy_fraction(&ts, Selector::Band { f_lo: 0.0, f_hi: 128.0 }).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let w = energy_fraction(&ts, Selector::Window { t_a: 0.0, t_b: ts.duration() }).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tone_in_band() {
        let ts = tone(64.0, 4096.0, 4096);
        assert!(energy_fraction(&ts, Selector::Band { f_lo: 50.0, f_hi: 80.0 }).unwrap() >= 0.99);
    }

    #[test]
    fn zero_energy_error() {
        let ts = TimeSeries::zeros(100.0, 0.0, 10).unwrap();
        assert!(matches!(
            energy_fraction(&ts, Selector::Band { f_lo: 0.0, f_hi: 50.0 }),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn selector_bounds() {
        let ts = tone(10.0, 100.0, 100);
        assert!(energy_fraction(&ts, Selector::Band { f_lo: 0.0, f_hi: 60.0 }).is_err());
        assert!(energy_fraction(&ts, Selector::Window { t_a: 0.5, t_b: 2.0 }).is_err());
    }

    #[test]
    fn error_identities() {
        let a = tone(10.0, 100.0, 100);
        let (e, r) = template_error(&a, &a).unwrap();
        assert_eq!(r, 0.0);
        assert!(e.samples().iter().all(|&v| v == 0.0));
        let (_, r) = template_error(&a, &a.scaled(-1.0)).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let b = tone(10.0, 100.0, 99);
        assert!(matches!(template_error(&a, &b), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn band_fraction_scale_and_shift_invariant(
            f in 5.0f64..45.0, a in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
            shift in 0usize..200, lo in 0.0f64..30.0, width in 1.0f64..20.0,
        ) {
            let fs = 100.0;
            let n = 512;
            // a burst in a zero background, moved around circularly-safe
            let mut x = vec![0.0; n];
            for i in 0..100 {
                let w = (PI * i as f64 / 100.0).sin().powi(2);
                x[shift + i] = w * (2.0 * PI * f * i as f64 / fs).cos();
            }
            let mut y = vec![0.0; n];
            for i in 0..100 {
                y[i + 200] = a * x[shift + i];
            }
            let sel = Selector::Band { f_lo: lo, f_hi: lo + width };
            let fx = energy_fraction(&TimeSeries::new(fs, 0.0, x).unwrap(), sel).unwrap();
            let fy = energy_fraction(&TimeSeries::new(fs, 3.0, y).unwrap(), sel).unwrap();
            prop_assert!((fx - fy).abs() < 1e-9);
        }
    }
}
