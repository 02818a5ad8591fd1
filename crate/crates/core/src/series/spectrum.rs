use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT, no scaling.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse DFT, no `1/n` scaling.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Forward DFT of a real sequence zero-padded to `n`.
pub(crate) fn fft_real(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    fft_forward(&mut buf);
    buf
}

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// All `n` DFT bins, negative frequencies in the upper half.
    TwoSided,
    /// Bins `0..=n/2` of a real series.
    OneSided,
}

/// Continuous-FT approximation `X(f_k) = dt * sum_n x[n] e^{-2 pi i k n / N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    pub df: f64,
    pub t0: f64,
    /// Length of the originating series.
    pub n: usize,
    pub bins: Vec<Complex64>,
    pub convention: Convention,
}

impl ComplexSpectrum {
    pub fn fs(&self) -> f64 {
        self.df * self.n as f64
    }

    /// Signed frequency of bin `k` (negative for the upper half when two-sided).
    pub fn frequency(&self, k: usize) -> f64 {
        match self.convention {
            Convention::OneSided => k as f64 * self.df,
            Convention::TwoSided => {
                if k <= self.n / 2 {
                    k as f64 * self.df
                } else {
                    (k as f64 - self.n as f64) * self.df
                }
            }
        }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm()).collect()
    }

    pub fn phase(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.arg()).collect()
    }

    /// Keep the non-negative frequency half.
    pub fn one_sided(&self) -> ComplexSpectrum {
        match self.convention {
            Convention::OneSided => self.clone(),
            Convention::TwoSided => ComplexSpectrum {
                bins: self.bins[..=self.n / 2].to_vec(),
                convention: Convention::OneSided,
                ..self.clone()
            },
        }
    }

    /// Integral of |X(f)|^2 over all frequencies (two-sided energy).
    pub fn energy(&self) -> f64 {
        match self.convention {
            Convention::TwoSided => self.bins.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.df,
            Convention::OneSided => {
                let n = self.n;
                let s: f64 = self
                    .bins
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let w = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
                        w * c.norm_sqr()
                    })
                    .sum();
                s * self.df
            }
        }
    }

    fn expected_bins(&self) -> usize {
        match self.convention {
            Convention::TwoSided => self.n,
            Convention::OneSided => self.n / 2 + 1,
        }
    }
}

pub fn forward_spectrum(ts: &TimeSeries) -> Result<ComplexSpectrum> {
    if ts.len() < 2 {
        return Err(Error::Shape("forward transform needs at least 2 samples".into()));
    }
    let n = ts.len();
    let dt = ts.dt();
    let mut bins = fft_real(ts.samples(), n);
    for b in bins.iter_mut() {
        *b *= dt;
    }
    Ok(ComplexSpectrum {
        df: ts.fs() / n as f64,
        t0: ts.t0(),
        n,
        bins,
        convention: Convention::TwoSided,
    })
}

/// Inverse of [`forward_spectrum`]; the imaginary residue is discarded.
pub fn inverse_spectrum(sp: &ComplexSpectrum) -> Result<TimeSeries> {
    if sp.bins.len() != sp.expected_bins() {
        return Err(Error::Shape(format!(
            "{} bins cannot come from a length-{} series ({:?})",
            sp.bins.len(),
            sp.n,
            sp.convention
        )));
    }
    if !(sp.df > 0.0) {
        return Err(Error::Parameter("bin spacing must be positive".into()));
    }
    let n = sp.n;
    let mut buf = match sp.convention {
        Convention::TwoSided => sp.bins.clone(),
        Convention::OneSided => {
            let mut full = vec![Complex64::new(0.0, 0.0); n];
            full[..sp.bins.len()].copy_from_slice(&sp.bins);
            for k in 1..n.div_ceil(2) {
                full[n - k] = sp.bins[k].conj();
            }
            full
        }
    };
    fft_inverse(&mut buf);
    let fs = sp.fs();
    // x = (1/n) IDFT(X / dt) = df * IDFT(X)
    let samples = buf.iter().map(|c| c.re * sp.df).collect();
    TimeSeries::new(fs, sp.t0, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSeries::new(4096.0, 0.0, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn dc_energy_in_zero_bin() {
        let ts = TimeSeries::new(100.0, 0.0, vec![2.5; 64]).unwrap();
        let sp = forward_spectrum(&ts).unwrap();
        let total: f64 = sp.bins.iter().map(|c| c.norm_sqr()).sum();
        assert!((sp.bins[0].norm_sqr() - total).abs() < 1e-12 * total);
    }

    #[test]
    fn bin_aligned_tone() {
        let fs = 4096.0;
        let ts = TimeSeries::new(
            fs,
            0.0,
            (0..4096).map(|i| (2.0 * std::f64::consts::PI * 64.0 * i as f64 / fs).sin()).collect(),
        )
        .unwrap();
        let sp = forward_spectrum(&ts).unwrap().one_sided();
        let mag = sp.magnitude();
        let kmax = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
        assert_eq!(kmax, 64);
        assert_eq!(sp.frequency(kmax), 64.0);
    }

    #[test]
    fn round_trip_and_parseval() {
        for (len, seed) in [(256, 1), (1024, 2), (4096, 3), (1023, 4)] {
            let ts = noise(len, seed);
            let sp = forward_spectrum(&ts).unwrap();
            let back = inverse_spectrum(&sp).unwrap();
            let maxx = ts.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in ts.samples().iter().zip(back.samples()) {
                assert!((a - b).abs() < 1e-10 * maxx);
            }
            let time_energy = ts.energy() * ts.dt();
            assert!((sp.energy() - time_energy).abs() < 1e-10 * time_energy);
            assert!((sp.one_sided().energy() - time_energy).abs() < 1e-10 * time_energy);
            let back1 = inverse_spectrum(&sp.one_sided()).unwrap();
            for (a, b) in ts.samples().iter().zip(back1.samples()) {
                assert!((a - b).abs() < 1e-10 * maxx);
            }
        }
    }

    #[test]
    fn seeded_round_trips() {
        for seed in 0..100 {
            let ts = noise(512, 1000 + seed);
            let back = inverse_spectrum(&forward_spectrum(&ts).unwrap()).unwrap();
            let maxx = ts.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = ts
                .samples()
                .iter()
                .zip(back.samples())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10 * maxx);
        }
    }

    #[test]
    fn polar_view_consistent() {
        let sp = forward_spectrum(&noise(128, 9)).unwrap();
        for ((c, m), p) in sp.bins.iter().zip(sp.magnitude()).zip(sp.phase()) {
            let back = Complex64::from_polar(m, p);
            assert!((back - c).norm() < 1e-12 * (1.0 + c.norm()));
        }
    }

    #[test]
    fn good_sizes() {
        assert_eq!(good_size(1), 1);
        assert_eq!(good_size(7), 8);
        assert_eq!(good_size(131072 + 819), 135000);
        assert_eq!(good_size(4096), 4096);
    }

    #[test]
    fn inverse_rejects_wrong_length() {
        let mut sp = forward_spectrum(&noise(64, 5)).unwrap();
        sp.bins.pop();
        assert!(matches!(inverse_spectrum(&sp), Err(Error::Shape(_))));
    }
}
