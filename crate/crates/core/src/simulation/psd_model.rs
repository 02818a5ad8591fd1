use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PowerSpectrum;

/// `level * (f / f_hz)^slope` from `f_hz` up to the next segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub f_hz: f64,
    pub level: f64,
    pub slope: f64,
}

/// Multiplicative Gaussian bump `1 + (ratio - 1) exp(-((f - f_hz) / width_hz)^2 / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub f_hz: f64,
    pub ratio: f64,
    pub width_hz: f64,
}

/// Piecewise power-law broadband PSD with narrow lines. Below the first
/// segment the density stays at the first segment's level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdModel {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub lines: Vec<Line>,
}

impl PsdModel {
    pub fn flat(level: f64) -> Self {
        Self { segments: vec![Segment { f_hz: 0.0, level, slope: 0.0 }], lines: vec![] }
    }

    /// Steep seismic wall below 20 Hz, minimum between 150 and 300 Hz, rising
    /// shot-noise tail, mains harmonics at 60/120/180 Hz and a violin-mode
    /// cluster near 500 Hz. Levels are continuous across segment breaks.
    pub fn ligo_like() -> Self {
        let l10 = 1e-40;
        let l20 = l10 * 2f64.powi(-10);
        let l50 = l20 * 2.5f64.powi(-4);
        let l150 = l50 / 3.0;
        Self {
            segments: vec![
                Segment { f_hz: 10.0, level: l10, slope: -10.0 },
                Segment { f_hz: 20.0, level: l20, slope: -4.0 },
                Segment { f_hz: 50.0, level: l50, slope: -1.0 },
                Segment { f_hz: 150.0, level: l150, slope: 0.0 },
                Segment { f_hz: 300.0, level: l150, slope: 1.5 },
            ],
            lines: vec![
                Line { f_hz: 60.0, ratio: 100.0, width_hz: 0.5 },
                Line { f_hz: 120.0, ratio: 100.0, width_hz: 0.5 },
                Line { f_hz: 180.0, ratio: 100.0, width_hz: 0.5 },
                Line { f_hz: 499.5, ratio: 50.0, width_hz: 0.3 },
                Line { f_hz: 502.0, ratio: 50.0, width_hz: 0.3 },
                Line { f_hz: 504.5, ratio: 50.0, width_hz: 0.3 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Parameter("PSD model needs at least one segment".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.level > 0.0 && s.level.is_finite() && s.f_hz >= 0.0 && s.slope.is_finite()) {
                return Err(Error::Parameter(format!("segment {i} has a non-positive level or bad frequency")));
            }
            if i > 0 && s.f_hz <= self.segments[i - 1].f_hz {
                return Err(Error::Parameter("segment break frequencies must increase".into()));
            }
            if s.f_hz == 0.0 && s.slope != 0.0 {
                return Err(Error::Parameter("a segment starting at 0 Hz must be flat".into()));
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            if !(l.f_hz > 0.0 && l.ratio > 0.0 && l.width_hz > 0.0) {
                return Err(Error::Parameter(format!("line {i} needs positive f_hz, ratio, width_hz")));
            }
        }
        Ok(())
    }

    /// Lines at or above Nyquist are rejected.
    pub fn validate_for(&self, fs: f64) -> Result<()> {
        self.validate()?;
        if let Some(l) = self.lines.iter().find(|l| l.f_hz >= fs / 2.0) {
            return Err(Error::Parameter(format!("line at {} Hz is above Nyquist for fs={fs}", l.f_hz)));
        }
        Ok(())
    }

    pub fn broadband(&self, f: f64) -> f64 {
        let f = f.abs();
        let first = self.segments[0];
        if f <= first.f_hz {
            return first.level;
        }
        let s = self.segments.iter().rev().find(|s| s.f_hz <= f).unwrap_or(&first);
        s.level * (f / s.f_hz).powf(s.slope)
    }

    pub fn evaluate(&self, f: f64) -> f64 {
        let f = f.abs();
        let bumps: f64 = self
            .lines
            .iter()
            .map(|l| {
                let z = (f - l.f_hz) / l.width_hz;
                if z.abs() > 40.0 {
                    1.0
                } else {
                    1.0 + (l.ratio - 1.0) * (-0.5 * z * z).exp()
                }
            })
            .product();
        self.broadband(f) * bumps
    }

    /// Sample onto `[0, fs/2]` at spacing `df`.
    pub fn to_power_spectrum(&self, fs: f64, df: f64) -> Result<PowerSpectrum> {
        self.validate()?;
        let n = (fs / 2.0 / df).round() as usize + 1;
        PowerSpectrum::new(df, (0..n).map(|k| self.evaluate(k as f64 * df)).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

impl Default for PsdModel {
    fn default() -> Self {
        Self::ligo_like()
    }
}
