use std::f64::consts::E;
use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{fft_inverse, fft_real, good_size, TimeSeries};

/// `r3` below this marks a CCF as peaky.
pub const R3_THRESHOLD: f64 = 1.0 / E;

/// Normalized cross-correlation over integer-sample lags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcfResult {
    pub fs: f64,
    /// Symmetric grid `-L..=L` samples, in seconds.
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    /// Index of the largest `|CCF|`.
    pub peak_index: usize,
    /// Signed value at `peak_index`; negative means an inverted match.
    pub peak_value: f64,
    pub peak_lag: f64,
    /// Lag, from the peak, at which the sign-corrected CCF first falls below `|peak| / e`.
    pub tau0: f64,
    pub r3: f64,
    pub peaky: bool,
    /// Duration of the correlated windows.
    pub window_t: f64,
}

impl CcfResult {
    pub fn max_lag(&self) -> f64 {
        *self.lags.last().unwrap_or(&0.0)
    }

    pub fn peak_abs(&self) -> f64 {
        self.peak_value.abs()
    }

    /// Recompute `r3`/`peaky` with an externally supplied `tau0`; a lag
    /// range too short for `3 tau0` counts as not peaky.
    pub fn with_tau0(mut self, tau0: f64) -> Self {
        let (r3, peaky) = r3_unchecked(&self, tau0);
        self.tau0 = tau0;
        self.r3 = r3;
        self.peaky = peaky;
        self
    }

    /// `lag_s,ccf`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["lag_s", "ccf"])?;
        for (l, v) in self.lags.iter().zip(&self.values) {
            w.write_record([l.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn r3_unchecked(ccf: &CcfResult, tau0: f64) -> (f64, bool) {
    let cut = 3.0 * tau0;
    if cut >= ccf.max_lag() {
        return (1.0, false);
    }
    let eps = 1e-9 / ccf.fs;
    let mut global = 0.0f64;
    let mut outer = 0.0f64;
    for (l, v) in ccf.lags.iter().zip(&ccf.values) {
        global = global.max(v.abs());
        if l.abs() > cut + eps {
            outer = outer.max(v.abs());
        }
    }
    let r3 = if global > 0.0 { outer / global } else { 1.0 };
    (r3, r3 < R3_THRESHOLD)
}

/// `max |CCF|` beyond `3 tau0` over the global `max |CCF|`, and whether it is
/// below `1/e`.
pub fn peak_ratio_r3(ccf: &CcfResult, tau0: f64) -> Result<(f64, bool)> {
    if !(tau0 > 0.0) {
        return Err(Error::Parameter(format!("tau0 must be positive, got {tau0}")));
    }
    if 3.0 * tau0 >= ccf.max_lag() {
        return Err(Error::InsufficientLag { needed: 3.0 * tau0, available: ccf.max_lag() });
    }
    Ok(r3_unchecked(ccf, tau0))
}

/// `sum_n a[n + l] b[n]` for `l` in `-max..=max`, zero outside the inputs.
pub(crate) fn raw_ccf(a: &[f64], b: &[f64], max: usize) -> Vec<f64> {
    let m = good_size(a.len() + b.len());
    let fa = fft_real(a, m);
    let fb = fft_real(b, m);
    let mut buf: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    fft_inverse(&mut buf);
    let inv = 1.0 / m as f64;
    (0..=2 * max)
        .map(|i| {
            let l = i as i64 - max as i64;
            buf[l.rem_euclid(m as i64) as usize].re * inv
        })
        .collect()
}

/// Correlate `a` against `b` with both scaled to unit energy, so the zero-lag
/// self-correlation is exactly one.
pub fn normalized_ccf(a: &TimeSeries, b: &TimeSeries, max_lag: f64) -> Result<CcfResult> {
    a.check_same_rate(b)?;
    if a.len() != b.len() {
        return Err(Error::Shape(format!("windows differ in length: {} vs {}", a.len(), b.len())));
    }
    let fs = a.fs();
    let window_t = a.duration();
    if !(max_lag > 0.0) || max_lag > window_t + 0.5 / fs {
        return Err(Error::Parameter(format!("max_lag {max_lag} s outside (0, {window_t}]")));
    }
    let an = a.normalize_unit_energy()?;
    let bn = b.normalize_unit_energy()?;
    let max = ((max_lag * fs).round() as usize).min(a.len() - 1).max(1);
    let mut values = raw_ccf(an.samples(), bn.samples(), max);
    for v in &mut values {
        *v = v.clamp(-1.0, 1.0);
    }
    let lags: Vec<f64> = (0..values.len()).map(|i| (i as f64 - max as f64) / fs).collect();

    let mut peak_index = 0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > values[peak_index].abs() {
            peak_index = i;
        }
    }
    let peak_value = values[peak_index];
    let sign = if peak_value < 0.0 { -1.0 } else { 1.0 };
    let level = peak_value.abs() / E;
    let tau0 = (peak_index + 1..values.len())
        .find(|&j| sign * values[j] < level)
        .map_or(values.len() as f64 / fs, |j| (j - peak_index) as f64 / fs);

    let mut out = CcfResult {
        fs,
        peak_lag: lags[peak_index],
        lags,
        values,
        peak_index,
        peak_value,
        tau0,
        r3: 1.0,
        peaky: false,
        window_t,
    };
    let (r3, peaky) = r3_unchecked(&out, tau0);
    out.r3 = r3;
    out.peaky = peaky;
    Ok(out)
}

/// First lag at which the signed circular autocorrelation, normalized to one
/// at zero lag, falls below `1/e`. Later re-crossings are ignored.
pub fn decorrelation_time(template: &TimeSeries) -> Result<f64> {
    let x = template.samples();
    let n = x.len();
    if template.energy() == 0.0 {
        return Err(Error::Degenerate("template is all zeros".into()));
    }
    let mean = template.mean();
    let mut buf = fft_real(&x.iter().map(|v| v - mean).collect::<Vec<_>>(), n);
    for c in &mut buf {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    fft_inverse(&mut buf);
    let r0 = buf[0].re;
    let searched = n / 2;
    if r0 <= 1e-300 * n as f64 {
        return Err(Error::NoDecorrelation { searched });
    }
    (1..=searched)
        .find(|&k| buf[k].re / r0 < 1.0 / E)
        .map(|k| k as f64 / template.fs())
        .ok_or(Error::NoDecorrelation { searched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{colored_noise, PsdModel};
    use crate::templates::StockTemplate;
    use proptest::prelude::*;

    fn noise(n_sec: f64, fs: f64, seed: u64) -> TimeSeries {
        colored_noise(&PsdModel::flat(1.0), n_sec, fs, seed).unwrap()
    }

    fn brute(a: &[f64], b: &[f64], l: i64) -> f64 {
        (0..b.len() as i64)
            .filter(|&n| n + l >= 0 && ((n + l) as usize) < a.len())
            .map(|n| a[(n + l) as usize] * b[n as usize])
            .sum()
    }

    #[test]
    fn raw_ccf_matches_brute_force() {
        let a = noise(0.1, 1000.0, 1);
        let b = noise(0.1, 1000.0, 2);
        let c = raw_ccf(a.samples(), b.samples(), 99);
        for (i, v) in c.iter().enumerate() {
            let l = i as i64 - 99;
            assert!((v - brute(a.samples(), b.samples(), l)).abs() < 1e-10);
        }
    }

    #[test]
    fn self_ccf_is_unity_and_peaky() {
        let fs = 4096.0;
        for st in StockTemplate::ALL {
            let h = st.waveform(fs).unwrap();
            let c = normalized_ccf(&h, &h, h.duration()).unwrap();
            assert_eq!(c.peak_lag, 0.0);
            assert!((c.peak_value - 1.0).abs() < 1e-9);
            assert!(c.peaky, "{} r3 {}", st.name(), c.r3);
        }
    }

    #[test]
    fn inverted_match_keeps_sign() {
        let h = StockTemplate::Gw150914Like.waveform(4096.0).unwrap();
        let c = normalized_ccf(&h, &h.scaled(-3.0), 0.1).unwrap();
        assert!((c.peak_value + 1.0).abs() < 1e-9);
        assert!(c.peaky);
    }

    #[test]
    fn white_noise_tau0_one_sample() {
        let x = noise(1.0, 4096.0, 9);
        assert_eq!(decorrelation_time(&x).unwrap(), 1.0 / 4096.0);
    }

    #[test]
    fn constant_never_decorrelates() {
        let x = TimeSeries::new(100.0, 0.0, vec![2.5; 200]).unwrap();
        assert!(matches!(decorrelation_time(&x), Err(Error::NoDecorrelation { .. })));
        let z = TimeSeries::zeros(100.0, 0.0, 10).unwrap();
        assert!(matches!(decorrelation_time(&z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn chirp_tau0_brute_force() {
        let fs = 4096.0;
        let h = StockTemplate::Gw150914Like.waveform(fs).unwrap();
        let x = h.samples();
        let n = x.len();
        let m = h.mean();
        let ac = |k: usize| (0..n).map(|i| (x[(i + k) % n] - m) * (x[i] - m)).sum::<f64>();
        let r0 = ac(0);
        let k = (1..n / 2).find(|&k| ac(k) / r0 < 1.0 / E).unwrap();
        assert_eq!(decorrelation_time(&h).unwrap(), k as f64 / fs);
    }

    #[test]
    fn flat_ccf_gives_r3_one() {
        let c = CcfResult {
            fs: 10.0,
            lags: (-10..=10).map(|i| i as f64 / 10.0).collect(),
            values: vec![0.3; 21],
            peak_index: 10,
            peak_value: 0.3,
            peak_lag: 0.0,
            tau0: 0.1,
            r3: 0.0,
            peaky: true,
            window_t: 1.0,
        };
        assert_eq!(peak_ratio_r3(&c, 0.1).unwrap(), (1.0, false));
        assert!(matches!(peak_ratio_r3(&c, 0.4), Err(Error::InsufficientLag { .. })));
        let c = c.with_tau0(0.5);
        assert_eq!((c.r3, c.peaky), (1.0, false));
    }

    #[test]
    fn independent_noise_rarely_peaky() {
        let fs = 4096.0;
        let peaky = (0..100)
            .filter(|&s| {
                let a = noise(0.2, fs, 2 * s);
                let b = noise(0.2, fs, 2 * s + 1);
                normalized_ccf(&a, &b, 0.1).unwrap().peaky
            })
            .count();
        assert!(peaky <= 5, "{peaky}");
    }

    #[test]
    fn argument_errors() {
        let a = noise(0.2, 1000.0, 1);
        let b = noise(0.3, 1000.0, 2);
        assert!(matches!(normalized_ccf(&a, &b, 0.1), Err(Error::Shape(_))));
        assert!(normalized_ccf(&a, &a, 0.5).is_err());
        let z = TimeSeries::zeros(1000.0, 0.0, 200).unwrap();
        assert!(matches!(normalized_ccf(&a, &z, 0.1), Err(Error::Degenerate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn symmetry_bound_and_scale(seed in 0u64..10_000, a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
            let x = noise(0.25, 512.0, seed);
            let y = noise(0.25, 512.0, seed + 1);
            let xy = normalized_ccf(&x, &y, 0.2).unwrap();
            let yx = normalized_ccf(&y, &x, 0.2).unwrap();
            let n = xy.values.len();
            for i in 0..n {
                prop_assert!((xy.values[i] - yx.values[n - 1 - i]).abs() < 1e-12);
                prop_assert!(xy.values[i].abs() <= 1.0 + 1e-9);
            }
            let s = normalized_ccf(&x.scaled(a), &y.scaled(b), 0.2).unwrap();
            let sg = (a * b).signum();
            for i in 0..n {
                prop_assert!((s.values[i] - sg * xy.values[i]).abs() < 1e-9);
            }
            prop_assert!((s.tau0 - xy.tau0).abs() < 1e-12);
            prop_assert!((s.r3 - xy.r3).abs() < 1e-9);
            prop_assert_eq!(s.peaky, xy.peaky);
        }
    }
}
