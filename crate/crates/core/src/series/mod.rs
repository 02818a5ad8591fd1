//! Uniformly sampled series, spectra, and PSD estimation.

mod io;
mod psd;
mod spectrum;

pub use io::{load_strain, save_strain, StrainFormat};
pub use psd::{welch_psd, welch_psd_default, PowerSpectrum, Window};
pub use spectrum::{forward_spectrum, inverse_spectrum, ComplexSpectrum, Convention};

pub(crate) use spectrum::{fft_forward, fft_inverse, fft_real, good_size};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled, finite, real time series.
///
/// `fs > 0`, at least one sample, and every sample finite. Sample `i` sits at
/// `t0 + i / fs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    fs: f64,
    t0: f64,
    samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(fs: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Parameter(format!("sample rate must be positive, got {fs}")));
        }
        if !t0.is_finite() {
            return Err(Error::Parameter("start time must be finite".into()));
        }
        if samples.is_empty() {
            return Err(Error::Shape("time series needs at least one sample".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("sample {i} is not finite")));
        }
        Ok(Self { fs, t0, samples })
    }

    pub fn zeros(fs: f64, t0: f64, n: usize) -> Result<Self> {
        Self::new(fs, t0, vec![0.0; n])
    }

    /// Same sampling grid, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.fs, self.t0, samples)
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.fs
    }

    /// Nearest sample index for time `t` (may be out of bounds).
    pub fn index_of(&self, t: f64) -> i64 {
        ((t - self.t0) * self.fs).round() as i64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let m = self.mean();
        let var = self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.len() as f64;
        var.sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            fs: self.fs,
            t0: self.t0,
            samples: self.samples.iter().map(|x| a * x).collect(),
        }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// Extract `duration` seconds starting at `t_start`.
    ///
    /// The start snaps to the nearest sample and the result holds
    /// `round(duration * fs)` samples.
    pub fn slice_window(&self, t_start: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !t_start.is_finite() {
            return Err(Error::Parameter(format!(
                "window duration must be positive, got {duration}"
            )));
        }
        let start = self.index_of(t_start);
        let count = (duration * self.fs).round() as i64;
        if start < 0 || count < 1 || start + count > self.len() as i64 {
            return Err(Error::Range(format!(
                "window [{t_start}, {}] outside series [{}, {}]",
                t_start + duration,
                self.t0,
                self.t0 + self.duration()
            )));
        }
        let (s, c) = (start as usize, count as usize);
        Ok(Self {
            fs: self.fs,
            t0: self.time_at(s),
            samples: self.samples[s..s + c].to_vec(),
        })
    }

    /// Sub-series by sample indices `[start, end)`.
    pub fn slice_samples(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Range(format!(
                "sample range {start}..{end} outside 0..{}",
                self.len()
            )));
        }
        Ok(Self {
            fs: self.fs,
            t0: self.time_at(start),
            samples: self.samples[start..end].to_vec(),
        })
    }

    /// Scale to unit energy, `sum(y^2) = 1`.
    pub fn normalize_unit_energy(&self) -> Result<Self> {
        let e = self.energy();
        if !(e > 0.0) {
            return Err(Error::Degenerate("cannot normalize an all-zero series".into()));
        }
        Ok(self.scaled(1.0 / e.sqrt()))
    }

    pub(crate) fn check_same_rate(&self, other: &TimeSeries) -> Result<()> {
        if (self.fs - other.fs).abs() > 1e-9 * self.fs {
            return Err(Error::Shape(format!(
                "sample rates differ: {} vs {}",
                self.fs, other.fs
            )));
        }
        Ok(())
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize, fs: f64) -> TimeSeries {
        TimeSeries::new(fs, 0.0, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(TimeSeries::new(1.0, 0.0, vec![]).is_err());
        assert!(TimeSeries::new(1.0, 0.0, vec![f64::NAN]).is_err());
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(-4.0, 0.0, vec![1.0]).is_err());
    }

    #[test]
    fn duration_is_len_over_fs() {
        let ts = TimeSeries::zeros(4096.0, 0.0, 4096).unwrap();
        assert_eq!(ts.duration(), 1.0);
    }

    #[test]
    fn slice_event_window() {
        let ts = ramp(32 * 4096, 4096.0);
        let w = ts.slice_window(16.0, 0.2).unwrap();
        assert_eq!(w.len(), (0.2f64 * 4096.0).round() as usize);
        assert_eq!(w.t0(), 16.0);
        assert_eq!(w.samples()[0], 16.0 * 4096.0);
    }

    #[test]
    fn slice_full_is_identity() {
        let ts = ramp(1000, 100.0).with_t0(3.0);
        let w = ts.slice_window(3.0, ts.duration()).unwrap();
        assert_eq!(w, ts);
    }

    #[test]
    fn slice_beyond_end_fails() {
        let ts = ramp(1000, 100.0);
        assert!(matches!(ts.slice_window(9.5, 1.0), Err(Error::Range(_))));
        assert!(matches!(ts.slice_window(-0.5, 0.1), Err(Error::Range(_))));
    }

    #[test]
    fn normalize_three_four_five() {
        let ts = TimeSeries::new(1.0, 0.0, vec![3.0, 4.0]).unwrap();
        let y = ts.normalize_unit_energy().unwrap();
        assert!((y.samples()[0] - 0.6).abs() < 1e-15);
        assert!((y.samples()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_zero_is_error() {
        let ts = TimeSeries::zeros(1.0, 0.0, 8).unwrap();
        assert!(matches!(ts.normalize_unit_energy(), Err(Error::Degenerate(_))));
    }

    proptest! {
        #[test]
        fn normalize_unit_energy_props(
            xs in proptest::collection::vec(-1e3f64..1e3, 2..200),
            a in prop_oneof![-1e4f64..-1e-3, 1e-3f64..1e4],
        ) {
            prop_assume!(xs.iter().any(|x| x.abs() > 1e-6));
            let ts = TimeSeries::new(10.0, 0.0, xs).unwrap();
            let y = ts.normalize_unit_energy().unwrap();
            // direct summation
            let e: f64 = y.samples().iter().map(|v| v * v).sum();
            prop_assert!((e - 1.0).abs() < 1e-12);
            let yy = y.normalize_unit_energy().unwrap();
            for (p, q) in y.samples().iter().zip(yy.samples()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
            let ya = ts.scaled(a).normalize_unit_energy().unwrap();
            for (p, q) in y.samples().iter().zip(ya.samples()) {
                prop_assert!((p * a.signum() - q).abs() < 1e-12);
            }
        }

        #[test]
        fn slices_compose(
            first in 0usize..400, len1 in 100usize..500,
            second in 0usize..90, len2 in 1usize..10,
        ) {
            let fs = 64.0;
            let ts = ramp(1000, fs).with_t0(2.5);
            let a = ts.slice_window(2.5 + first as f64 / fs, len1 as f64 / fs).unwrap();
            let b = a.slice_window(a.t0() + second as f64 / fs, len2 as f64 / fs).unwrap();
            let direct = ts
                .slice_window(2.5 + (first + second) as f64 / fs, len2 as f64 / fs)
                .unwrap();
            prop_assert_eq!(b.samples(), direct.samples());
            prop_assert!((b.t0() - direct.t0()).abs() < 1e-12);
        }
    }
}
