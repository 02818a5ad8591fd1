use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Forward then backward pass; squared magnitude, zero phase.
    #[default]
    ZeroPhase,
    /// Single forward pass.
    Causal,
}

/// One second-order section, `b0 + b1 z^-1 + b2 z^-2` over `1 + a1 z^-1 + a2 z^-2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2])
            / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    fn run(&self, x: &mut [f64]) {
        // transposed direct form II
        let (mut s1, mut s2) = (0.0, 0.0);
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in x.iter_mut() {
            let xi = *v;
            let y = b0 * xi + s1;
            s1 = b1 * xi - a1 * y + s2;
            s2 = b2 * xi - a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth band-pass as a cascade of `order` biquads.
#[derive(Clone, Debug, PartialEq)]
pub struct Bandpass {
    pub fs: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub order: usize,
    pub sections: Vec<Biquad>,
}

impl Bandpass {
    /// Analog prototype -> low-pass to band-pass -> prewarped bilinear map.
    pub fn design(fs: f64, f_lo: f64, f_hi: f64, order: usize) -> Result<Self> {
        if !(fs > 0.0 && f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0) {
            return Err(Error::Parameter(format!(
                "band edges must satisfy 0 < f_lo < f_hi < fs/2, got {f_lo}..{f_hi} at fs={fs}"
            )));
        }
        if order == 0 {
            return Err(Error::Parameter("filter order must be at least 1".into()));
        }
        let k = 2.0 * fs;
        let w_lo = k * (PI * f_lo / fs).tan();
        let w_hi = k * (PI * f_hi / fs).tan();
        let w0 = (w_lo * w_hi).sqrt();
        let bw = w_hi - w_lo;

        let mut poles = Vec::with_capacity(2 * order);
        for i in 0..order {
            let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
            let disc = (p * p - w0 * w0).sqrt();
            for s in [p + disc, p - disc] {
                poles.push((k + s) / (k - s));
            }
        }

        let eps = 1e-12;
        let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > eps).collect();
        let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= eps).map(|p| p.re).collect();
        complex.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        real.sort_by(f64::total_cmp);

        let mut sections: Vec<Biquad> = complex
            .iter()
            .map(|p| Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -2.0 * p.re, p.norm_sqr()] })
            .collect();
        for pair in real.chunks(2) {
            let (r1, r2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
            sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -(r1 + r2), r1 * r2] });
        }
        if sections.len() != order {
            return Err(Error::Numerical(format!(
                "pole pairing produced {} sections for order {order}",
                sections.len()
            )));
        }

        // unit gain at the digital image of the geometric centre frequency
        let fc = fs / PI * (w0 / k).atan();
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * fc / fs);
        for s in sections.iter_mut() {
            let g = s.response(z_inv).norm();
            for b in s.b.iter_mut() {
                *b /= g;
            }
        }
        Ok(Self { fs, f_lo, f_hi, order, sections })
    }

    /// Centre frequency where the single-pass magnitude is exactly 1.
    pub fn center_frequency(&self) -> f64 {
        let k = 2.0 * self.fs;
        let w_lo = k * (PI * self.f_lo / self.fs).tan();
        let w_hi = k * (PI * self.f_hi / self.fs).tan();
        self.fs / PI * ((w_lo * w_hi).sqrt() / k).atan()
    }

    /// Single-pass complex response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.fs);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Samples for the slowest pole to decay by 1e-4.
    pub fn settling_samples(&self) -> usize {
        let r = self
            .sections
            .iter()
            .map(|s| s.a[2].abs().sqrt().max(pole_radius_real(s)))
            .fold(0.0f64, f64::max);
        if r <= 0.0 {
            return 1;
        }
        ((1e-4f64).ln() / r.ln()).ceil().max(1.0) as usize
    }

    /// Recommended number of samples to ignore at each end of a filtered series.
    pub fn discard_samples(&self) -> usize {
        2 * self.settling_samples()
    }

    pub fn apply(&self, ts: &TimeSeries, mode: FilterMode) -> Result<TimeSeries> {
        if (ts.fs() - self.fs).abs() > 1e-9 * self.fs {
            return Err(Error::Shape(format!(
                "filter designed for fs={} applied to fs={}",
                self.fs,
                ts.fs()
            )));
        }
        let x = ts.samples();
        let n = x.len();
        let out = match mode {
            FilterMode::Causal => {
                let mut y = x.to_vec();
                self.run(&mut y);
                y
            }
            FilterMode::ZeroPhase => {
                let pad = self.settling_samples().min(n.saturating_sub(1));
                let mut y = odd_extend(x, pad);
                self.run(&mut y);
                y.reverse();
                self.run(&mut y);
                y.reverse();
                y[pad..pad + n].to_vec()
            }
        };
        ts.with_samples(out)
    }

    fn run(&self, y: &mut [f64]) {
        for s in &self.sections {
            s.run(y);
        }
    }
}

fn pole_radius_real(s: &Biquad) -> f64 {
    // real-pole sections: roots of z^2 + a1 z + a2
    let disc = s.a[1] * s.a[1] - 4.0 * s.a[2];
    if disc < 0.0 {
        return 0.0;
    }
    let r = disc.sqrt();
    ((-s.a[1] + r) / 2.0).abs().max(((-s.a[1] - r) / 2.0).abs())
}

/// `2*x[0] - x[pad..1]` ++ x ++ `2*x[n-1] - x[n-2..n-1-pad]`.
fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(2.0 * x[0] - x[i]);
    }
    out.extend_from_slice(x);
    for i in 1..=pad {
        out.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    out
}

/// Zero-phase Butterworth band-pass.
pub fn butterworth_bandpass(ts: &TimeSeries, f_lo: f64, f_hi: f64, order: usize) -> Result<TimeSeries> {
    Bandpass::design(ts.fs(), f_lo, f_hi, order)?.apply(ts, FilterMode::ZeroPhase)
}
