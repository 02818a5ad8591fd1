use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::psd_model::PsdModel;
use super::rng::rng_from_seed;
use crate::error::{Error, Result};
use crate::series::{fft_inverse, TimeSeries};

/// Gaussian noise with one-sided PSD `model`, by shaping white draws in the
/// frequency domain.
///
/// Bin `k` gets `sqrt(N S(f_k) fs / 2) (g1 + i g2) / sqrt(2)` (DC and Nyquist
/// real), so the time-domain variance is the two-sided mean of `S fs / 2`.
pub fn colored_noise(model: &PsdModel, duration: f64, fs: f64, seed: u64) -> Result<TimeSeries> {
    if !(fs > 0.0 && duration > 0.0) {
        return Err(Error::Parameter("duration and fs must be positive".into()));
    }
    model.validate_for(fs)?;
    let n = (duration * fs).round() as usize;
    if n < 2 {
        return Err(Error::Parameter(format!("duration*fs = {n} samples; need at least 2")));
    }
    let mut rng = rng_from_seed(seed);
    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
    let df = fs / n as f64;
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    let half = n / 2;
    for k in 0..=half {
        let amp = (n as f64 * model.evaluate(k as f64 * df) * fs / 2.0).sqrt();
        let real_bin = k == 0 || (n % 2 == 0 && k == half);
        if real_bin {
            spec[k] = Complex64::new(amp * g(), 0.0);
        } else {
            let c = Complex64::new(g(), g()) * (amp / std::f64::consts::SQRT_2);
            spec[k] = c;
            spec[n - k] = c.conj();
        }
    }
    fft_inverse(&mut spec);
    let inv = 1.0 / n as f64;
    TimeSeries::new(fs, 0.0, spec.iter().map(|c| c.re * inv).collect())
}

/// Multiply the series by `factor` from each `t_from` until the next entry.
/// The optional non-stationarity hook; entries must be time-ordered.
pub fn modulate_std(ts: &TimeSeries, pieces: &[(f64, f64)]) -> Result<TimeSeries> {
    if pieces.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Parameter("modulation breakpoints must increase".into()));
    }
    if pieces.iter().any(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
        return Err(Error::Parameter("modulation factors must be finite and >= 0".into()));
    }
    let out = ts
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = ts.time_at(i);
            let f = pieces.iter().rev().find(|p| p.0 <= t).map_or(1.0, |p| p.1);
            x * f
        })
        .collect();
    ts.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::welch_psd_default;

    #[test]
    fn flat_variance() {
        let fs = 1024.0;
        let x = colored_noise(&PsdModel::flat(2.0), 256.0, fs, 1).unwrap();
        let var = x.std().powi(2);
        assert!((var / (2.0 * fs / 2.0) - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn same_seed_same_bits() {
        let m = PsdModel::ligo_like();
        assert_eq!(colored_noise(&m, 4.0, 4096.0, 3).unwrap(), colored_noise(&m, 4.0, 4096.0, 3).unwrap());
    }

    #[test]
    fn distinct_seeds_uncorrelated() {
        let m = PsdModel::flat(1.0);
        let a = colored_noise(&m, 16.0, 1024.0, 1).unwrap();
        let b = colored_noise(&m, 16.0, 1024.0, 2).unwrap();
        let ab: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum();
        let r = ab / (a.energy() * b.energy()).sqrt();
        assert!(r.abs() < 0.05);
    }

    #[test]
    fn line_shows_in_welch() {
        let fs = 1024.0;
        let mut m = PsdModel::flat(1.0);
        m.lines.push(super::super::psd_model::Line { f_hz: 60.0, ratio: 100.0, width_hz: 0.5 });
        let x = colored_noise(&m, 128.0, fs, 8).unwrap();
        let p = welch_psd_default(&x).unwrap();
        let peak = p.value_at(60.0);
        assert!(peak >= 10.0 * p.value_at(55.0) && peak >= 10.0 * p.value_at(65.0));
    }

    #[test]
    fn ligo_like_fidelity_above_20hz() {
        let fs = 4096.0;
        let m = PsdModel::ligo_like();
        let x = colored_noise(&m, 256.0, fs, 21).unwrap();
        let p = welch_psd_default(&x).unwrap();
        let mut lo = 20.0;
        while lo < 2000.0 {
            let hi = lo * 1.25;
            let est = p.band_mean(lo, hi);
            let k0 = (lo / p.df()).ceil() as usize;
            let k1 = (hi / p.df()).floor() as usize;
            let model: f64 = (k0..=k1).map(|k| m.evaluate(k as f64 * p.df())).sum::<f64>() / (k1 - k0 + 1) as f64;
            let r = est / model;
            assert!((0.5..=2.0).contains(&r), "{lo}-{hi} Hz ratio {r}");
            lo = hi;
        }
    }

    #[test]
    fn modulation_hook() {
        let x = TimeSeries::new(1.0, 0.0, vec![1.0; 10]).unwrap();
        let y = modulate_std(&x, &[(3.0, 2.0), (6.0, 0.5)]).unwrap();
        assert_eq!(y.samples(), &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 0.5, 0.5, 0.5, 0.5]);
        assert!(modulate_std(&x, &[(3.0, 2.0), (1.0, 1.0)]).is_err());
    }
}
