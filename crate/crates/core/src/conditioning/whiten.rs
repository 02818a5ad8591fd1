use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lines::LineBand;
use crate::error::{Error, Result};
use crate::series::{fft_inverse, fft_real, PowerSpectrum, TimeSeries};

/// Bins below this fraction of the PSD median are raised to it.
pub const PSD_FLOOR_FRACTION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum WhitenMode {
    FullBand,
    Localized { line_bands: Vec<LineBand> },
}

/// The PSD sampled on the `n`-point DFT grid with the floor applied.
pub(crate) fn floored_psd_grid(psd: &PowerSpectrum, n: usize, fs: f64) -> Result<Vec<f64>> {
    let floor = PSD_FLOOR_FRACTION * psd.median();
    let grid: Vec<f64> = psd.on_dft_grid(n, fs).into_iter().map(|s| s.max(floor)).collect();
    if let Some(k) = grid.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Numerical(format!(
            "PSD is zero at {:.3} Hz after flooring",
            k.min(n - k) as f64 * fs / n as f64
        )));
    }
    Ok(grid)
}

fn apply_gain(ts: &TimeSeries, gain: impl Fn(usize) -> f64) -> Result<TimeSeries> {
    let n = ts.len();
    let mut spec = fft_real(ts.samples(), n);
    for (k, c) in spec.iter_mut().enumerate() {
        *c *= gain(k);
    }
    fft_inverse(&mut spec);
    let inv_n = 1.0 / n as f64;
    ts.with_samples(spec.iter().map(|c: &Complex64| c.re * inv_n).collect())
}

/// Divide the spectrum by the noise amplitude spectral density.
///
/// The output is scaled so noise drawn from `psd` comes out with unit
/// variance: each bin is divided by `sqrt(S(f) * fs / 2)`.
pub fn whiten_full(ts: &TimeSeries, psd: &PowerSpectrum) -> Result<TimeSeries> {
    let n = ts.len();
    let fs = ts.fs();
    let s = floored_psd_grid(psd, n, fs)?;
    apply_gain(ts, |k| 1.0 / (s[k] * fs / 2.0).sqrt())
}

/// Band weight: 1 inside the band, raised-cosine ramps of `half_width / 4`
/// outside each edge, 0 beyond.
fn band_weight(b: &LineBand, f: f64) -> f64 {
    let d = (f - b.f_center).abs();
    let ramp = b.half_width / 4.0;
    if d <= b.half_width {
        1.0
    } else if d < b.half_width + ramp {
        0.5 * (1.0 + (PI * (d - b.half_width) / ramp).cos())
    } else {
        0.0
    }
}

/// Suppress the given line bands down to the local noise level and leave
/// the rest of the spectrum untouched.
///
/// Inside a band the gain is `sqrt(c / S(f))` with `c = S(f_center) / peak_ratio`,
/// the running-median level the line sits on.
pub fn whiten_localized(ts: &TimeSeries, psd: &PowerSpectrum, lines: &[LineBand]) -> Result<TimeSeries> {
    let n = ts.len();
    let fs = ts.fs();
    if lines.is_empty() {
        return ts.with_samples(ts.samples().to_vec());
    }
    let s = floored_psd_grid(psd, n, fs)?;
    let df = fs / n as f64;
    let levels: Vec<f64> = lines.iter().map(|b| psd.value_at(b.f_center) / b.peak_ratio).collect();
    let gains: Vec<f64> = (0..n)
        .map(|k| {
            let kk = if k <= n / 2 { k } else { n - k };
            let f = kk as f64 * df;
            lines
                .iter()
                .zip(&levels)
                .map(|(b, &c)| {
                    let w = band_weight(b, f);
                    if w == 0.0 {
                        1.0
                    } else {
                        1.0 + w * ((c / s[k]).sqrt() - 1.0)
                    }
                })
                .product()
        })
        .collect();
    apply_gain(ts, |k| gains[k])
}

pub fn whiten(ts: &TimeSeries, psd: &PowerSpectrum, mode: &WhitenMode) -> Result<TimeSeries> {
    match mode {
        WhitenMode::FullBand => whiten_full(ts, psd),
        WhitenMode::Localized { line_bands } => whiten_localized(ts, psd, line_bands),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{welch_psd, Window};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, fs: f64, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        TimeSeries::new(fs, 0.0, xs).unwrap()
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let aa: f64 = a.iter().map(|x| x * x).sum();
        let bb: f64 = b.iter().map(|x| x * x).sum();
        ab / (aa * bb).sqrt()
    }

    #[test]
    fn flat_psd_is_a_scale() {
        let fs = 1024.0;
        let x = white(8192, fs, 1);
        let psd = PowerSpectrum::flat(2.0 / fs, fs, 0.25).unwrap();
        let y = whiten_full(&x, &psd).unwrap();
        assert!(corr(x.samples(), y.samples()) > 0.999);
        // level 2/fs is unit-variance white noise, so the gain is exactly 1
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let x = TimeSeries::zeros(256.0, 0.0, 512).unwrap();
        let psd = PowerSpectrum::flat(1.0, 256.0, 1.0).unwrap();
        assert!(whiten_full(&x, &psd).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_psd_is_numerical_error() {
        let x = TimeSeries::zeros(256.0, 0.0, 512).unwrap();
        let psd = PowerSpectrum::new(1.0, vec![0.0; 129]).unwrap();
        let e = whiten_full(&x, &psd).unwrap_err();
        assert!(e.is_numerical());
    }

    #[test]
    fn floor_rescues_isolated_zero() {
        let mut v = vec![1.0; 129];
        v[10] = 0.0;
        let psd = PowerSpectrum::new(1.0, v).unwrap();
        let x = white(256, 256.0, 4);
        assert!(whiten_full(&x, &psd).is_ok());
    }

    #[test]
    fn empty_band_list_is_identity() {
        let x = white(4096, 1024.0, 2);
        let psd = PowerSpectrum::flat(1.0, 1024.0, 0.25).unwrap();
        let y = whiten_localized(&x, &psd, &[]).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn line_energy_suppressed() {
        let fs = 1024.0;
        let n = 32 * 1024;
        let mut v = vec![1.0; 2049];
        for (k, s) in v.iter_mut().enumerate() {
            let f = k as f64 * 0.25;
            if (f - 60.0).abs() < 1.0 {
                *s = 1e4;
            }
        }
        let psd = PowerSpectrum::new(0.25, v).unwrap();
        let band = LineBand::new(60.0, 1.5, 1e4).unwrap();
        let x = TimeSeries::new(
            fs,
            0.0,
            (0..n).map(|i| (2.0 * PI * 60.0 * i as f64 / fs).cos()).collect(),
        )
        .unwrap();
        let y = whiten_localized(&x, &psd, &[band]).unwrap();
        let db = 10.0 * (x.energy() / y.energy()).log10();
        assert!(db >= 20.0, "{db} dB");
    }

    #[test]
    fn full_cover_matches_full_band() {
        let fs = 512.0;
        let x = white(2048, fs, 3);
        let v: Vec<f64> = (0..257).map(|k| 1.0 + (k as f64 / 20.0).sin().powi(2) * 5.0).collect();
        let psd = PowerSpectrum::new(1.0, v).unwrap();
        let band = LineBand::new(128.0, 200.0, 2.0).unwrap();
        let a = whiten_full(&x, &psd).unwrap();
        let b = whiten_localized(&x, &psd, &[band]).unwrap();
        assert!(corr(a.samples(), b.samples()) > 1.0 - 1e-10);
    }

    #[test]
    fn colored_noise_flattens() {
        // noise with a steep, known coloring; re-estimated PSD after whitening is flat
        let fs = 2048.0;
        let n = 256 * 2048;
        let x = white(n, fs, 9);
        let shaped = {
            let mut sp = fft_real(x.samples(), n);
            for (k, c) in sp.iter_mut().enumerate() {
                let kk = if k <= n / 2 { k } else { n - k };
                let f = (kk as f64 * fs / n as f64).max(1.0);
                *c *= 1e-21 * (100.0 / f).powf(2.0) + 1e-22;
            }
            fft_inverse(&mut sp);
            x.with_samples(sp.iter().map(|c| c.re / n as f64).collect()).unwrap()
        };
        let psd = welch_psd(&shaped, 4 * 2048, 0.5, Window::Blackman).unwrap();
        let y = whiten_full(&shaped, &psd).unwrap();
        let p = welch_psd(&y, 4 * 2048, 0.5, Window::Blackman).unwrap();
        let bands: Vec<f64> = (0..8)
            .map(|i| {
                let lo = 43.0 + i as f64 * (300.0 - 43.0) / 8.0;
                p.band_mean(lo, lo + (300.0 - 43.0) / 8.0)
            })
            .collect();
        let mx = bands.iter().cloned().fold(0.0, f64::max);
        let mn = bands.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(mx / mn <= 2.0, "{mx} / {mn}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn whitening_is_linear(seed in 0u64..10_000, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let fs = 256.0;
            let x = white(1000, fs, seed);
            let y = white(1000, fs, seed + 1);
            let v: Vec<f64> = (0..129).map(|k| 1e-3 + k as f64).collect();
            let psd = PowerSpectrum::new(1.0, v).unwrap();
            let comb = x.with_samples(x.samples().iter().zip(y.samples()).map(|(p, q)| a * p + b * q).collect()).unwrap();
            let wx = whiten_full(&x, &psd).unwrap();
            let wy = whiten_full(&y, &psd).unwrap();
            let wc = whiten_full(&comb, &psd).unwrap();
            let scale = wc.samples().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..1000 {
                let expect = a * wx.samples()[i] + b * wy.samples()[i];
                prop_assert!((wc.samples()[i] - expect).abs() < 1e-10 * scale);
            }
        }
    }
}
