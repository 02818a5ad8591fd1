use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fft_real, TimeSeries};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Blackman,
    Hann,
    Rect,
}

impl Window {
    /// Periodic (DFT-even) window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (0..n)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / nf;
                match self {
                    Window::Rect => 1.0,
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blackman" => Ok(Window::Blackman),
            "hann" => Ok(Window::Hann),
            "rect" => Ok(Window::Rect),
            other => Err(Error::Parameter(format!("unknown window `{other}`"))),
        }
    }
}

/// One-sided power spectral density on the grid `k * df`, `k = 0..values.len()`.
/// Units are strain^2/Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    df: f64,
    values: Vec<f64>,
}

impl PowerSpectrum {
    pub fn new(df: f64, values: Vec<f64>) -> Result<Self> {
        if !(df.is_finite() && df > 0.0) {
            return Err(Error::Parameter(format!("PSD bin spacing must be positive, got {df}")));
        }
        if values.len() < 2 {
            return Err(Error::Shape("PSD needs at least two bins".into()));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter(format!(
                "PSD bin {k} is negative or not finite ({})",
                values[k]
            )));
        }
        Ok(Self { df, values })
    }

    /// `f_hz,psd` rows starting at 0 Hz.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["f_hz", "psd"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:e}", k as f64 * self.df), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read what [`PowerSpectrum::write_csv`] wrote; rows must be evenly spaced from 0 Hz.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut f = vec![];
        let mut v = vec![];
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse { line: i + 2, msg: format!("column {j} is not a number") })
            };
            f.push(num(0)?);
            v.push(num(1)?);
        }
        if f.len() < 2 || f[0] != 0.0 {
            return Err(Error::Parse { line: 2, msg: "PSD rows must start at 0 Hz and have at least two bins".into() });
        }
        let df = f[1];
        if let Some(k) = f.iter().enumerate().position(|(k, x)| (x - k as f64 * df).abs() > 1e-6 * df.max(1.0)) {
            return Err(Error::Parse { line: k + 2, msg: "frequencies are not evenly spaced".into() });
        }
        Self::new(df, v)
    }

    /// Constant density `level` from 0 to `fs/2` at resolution `df`.
    pub fn flat(level: f64, fs: f64, df: f64) -> Result<Self> {
        let n = (fs / 2.0 / df).round() as usize + 1;
        Self::new(df, vec![level; n])
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn f_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.df
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.df).collect()
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(self.df, self.values.iter().map(|v| v * a).collect())
    }

    pub fn median(&self) -> f64 {
        median(&self.values)
    }

    /// Density at `f` (Hz), linear in log-power between grid points and
    /// clamped to the end values outside the grid. Falls back to linear
    /// interpolation when a neighbour is zero.
    pub fn value_at(&self, f: f64) -> f64 {
        let f = f.abs();
        let pos = f / self.df;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        if w == 0.0 {
            a
        } else if a > 0.0 && b > 0.0 {
            (a.ln() * (1.0 - w) + b.ln() * w).exp()
        } else {
            a * (1.0 - w) + b * w
        }
    }

    /// Density for every bin of an `n`-point DFT at rate `fs`, using `|f|`
    /// for the negative-frequency half.
    pub fn on_dft_grid(&self, n: usize, fs: f64) -> Vec<f64> {
        let df = fs / n as f64;
        (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k } else { n - k };
                self.value_at(kk as f64 * df)
            })
            .collect()
    }

    /// Mean density over `[f_lo, f_hi]` on the native grid.
    pub fn band_mean(&self, f_lo: f64, f_hi: f64) -> f64 {
        let (mut s, mut c) = (0.0, 0usize);
        for (k, v) in self.values.iter().enumerate() {
            let f = k as f64 * self.df;
            if f >= f_lo && f <= f_hi {
                s += v;
                c += 1;
            }
        }
        if c == 0 {
            self.value_at(0.5 * (f_lo + f_hi))
        } else {
            s / c as f64
        }
    }
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Welch-averaged one-sided PSD with density scaling.
///
/// Segments of `segment_len` samples advance by `round(segment_len * (1 - overlap))`;
/// each is windowed, transformed, and scaled by `2 / (fs * sum(w^2))` (DC and
/// Nyquist bins are not doubled). No detrending.
pub fn welch_psd(
    ts: &TimeSeries,
    segment_len: usize,
    overlap: f64,
    window: Window,
) -> Result<PowerSpectrum> {
    if segment_len < 2 {
        return Err(Error::Parameter("segment length must be at least 2".into()));
    }
    if segment_len > ts.len() {
        return Err(Error::Parameter(format!(
            "segment length {segment_len} exceeds series length {}",
            ts.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Parameter(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let step = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let w = window.coefficients(segment_len);
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let fs = ts.fs();
    let nbins = segment_len / 2 + 1;
    let mut acc = vec![0.0; nbins];
    let mut count = 0usize;
    let x = ts.samples();
    let mut seg = vec![0.0; segment_len];
    let mut start = 0;
    while start + segment_len <= x.len() {
        for ((s, &xi), &wi) in seg.iter_mut().zip(&x[start..start + segment_len]).zip(&w) {
            *s = xi * wi;
        }
        let spec = fft_real(&seg, segment_len);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += spec[k].norm_sqr();
        }
        count += 1;
        start += step;
    }
    let scale = 1.0 / (fs * wss * count as f64);
    let values = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let edge = k == 0 || (segment_len % 2 == 0 && k == segment_len / 2);
            a * scale * if edge { 1.0 } else { 2.0 }
        })
        .collect();
    PowerSpectrum::new(fs / segment_len as f64, values)
}

/// Welch with the toolkit defaults: `4 * fs` samples (capped at the series
/// length), 50% overlap, Blackman window.
pub fn welch_psd_default(ts: &TimeSeries) -> Result<PowerSpectrum> {
    let seg = ((4.0 * ts.fs()).round() as usize).min(ts.len());
    welch_psd(ts, seg, 0.5, Window::Blackman)
}
