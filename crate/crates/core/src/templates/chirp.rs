use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{extract_phase_amplitude, Template};
use crate::error::{Error, Result};
use crate::series::{load_strain, save_strain, StrainFormat, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepLaw {
    /// Leading-order inspiral: `f = f_start (1 - t/t_c)^(-3/8)`.
    PowerLaw,
    Linear,
}

/// Parameters of a synthetic chirp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    /// Total length including any ringdown, seconds.
    pub duration: f64,
    pub f_start: f64,
    pub f_end: f64,
    pub law: SweepLaw,
    /// Envelope grows as `(f / f_end)^amp_exponent` during the sweep.
    pub amp_exponent: f64,
    /// Exponential ringdown at `f_end` appended inside `duration`, lasting
    /// `2.5 * tau`.
    pub ringdown_tau: Option<f64>,
    /// Carrier used when decomposing into `A cos(2 pi f0 t + m)`.
    pub carrier_f0: f64,
    /// Fraction of the length covered by the cosine taper (split over both ends).
    pub taper: f64,
}

impl ChirpSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.duration > 0.0 && self.f_start > 0.0 && self.f_end > self.f_start) {
            return Err(Error::Parameter(format!(
                "chirp needs duration > 0 and 0 < f_start < f_end, got {} s, {}..{} Hz",
                self.duration, self.f_start, self.f_end
            )));
        }
        if self.f_end >= fs / 2.0 {
            return Err(Error::Parameter(format!("f_end {} Hz is above Nyquist", self.f_end)));
        }
        if !(0.0..=1.0).contains(&self.taper) {
            return Err(Error::Parameter(format!("taper fraction must be in [0, 1], got {}", self.taper)));
        }
        if let Some(tau) = self.ringdown_tau {
            if !(tau > 0.0 && 2.5 * tau < self.duration) {
                return Err(Error::Parameter(format!("ringdown tau {tau} does not fit in the duration")));
            }
        }
        Ok(())
    }

    fn sweep_duration(&self) -> f64 {
        self.duration - self.ringdown_tau.map_or(0.0, |t| 2.5 * t)
    }
}

/// Phase (radians) and frequency at time `t` into the sweep.
fn sweep(spec: &ChirpSpec, t: f64) -> (f64, f64) {
    let (fa, fb) = (spec.f_start, spec.f_end);
    let tt = spec.sweep_duration();
    match spec.law {
        SweepLaw::Linear => {
            let k = (fb - fa) / tt;
            (2.0 * PI * (fa * t + 0.5 * k * t * t), fa + k * t)
        }
        SweepLaw::PowerLaw => {
            let tc = tt / (1.0 - (fb / fa).powf(-8.0 / 3.0));
            let u = 1.0 - t / tc;
            let phase = 2.0 * PI * fa * tc * 1.6 * (1.0 - u.powf(0.625));
            (phase, fa * u.powf(-0.375))
        }
    }
}

/// Tukey window with total tapered fraction `alpha`.
fn tukey(n: usize, alpha: f64) -> Vec<f64> {
    let edge = (alpha * n as f64 / 2.0).round() as usize;
    (0..n)
        .map(|i| {
            let j = i.min(n - 1 - i);
            if j >= edge || edge == 0 {
                1.0
            } else {
                0.5 * (1.0 - (PI * j as f64 / edge as f64).cos())
            }
        })
        .collect()
}

/// Sample a chirp at `fs`, starting at `t0 = 0`.
pub fn chirp(spec: &ChirpSpec, fs: f64) -> Result<TimeSeries> {
    spec.validate(fs)?;
    let n = (spec.duration * fs).round() as usize;
    if n < 8 {
        return Err(Error::Parameter("chirp shorter than 8 samples".into()));
    }
    let tt = spec.sweep_duration();
    let (phase_end, _) = sweep(spec, tt);
    let win = tukey(n, spec.taper);
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let (ph, a) = if t < tt {
                let (ph, f) = sweep(spec, t);
                (ph, (f / spec.f_end).powf(spec.amp_exponent))
            } else {
                let dt = t - tt;
                let tau = spec.ringdown_tau.unwrap_or(f64::INFINITY);
                (phase_end + 2.0 * PI * spec.f_end * dt, (-dt / tau).exp())
            };
            win[i] * a * ph.cos()
        })
        .collect();
    TimeSeries::new(fs, 0.0, x)
}

/// Envelope exponent of the stock chirps: the leading-order `2/3` plus the
/// upward tilt a detector-noise whitening puts on a chirp between 35 and
/// 300 Hz, so the stand-ins resemble whitened templates.
pub const STOCK_AMP_EXPONENT: f64 = 4.0 / 3.0;

/// Built-in stand-ins for the three events discussed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StockTemplate {
    /// 0.2 s, 35 -> 250 Hz.
    Gw150914Like,
    /// 1 s, about 35 -> 450 Hz, decomposed about a 56 Hz carrier (AM+FM form).
    Gw151226Like,
    /// 0.12 s, 45 -> 280 Hz.
    Gw170104Like,
}

impl StockTemplate {
    pub const ALL: [StockTemplate; 3] =
        [StockTemplate::Gw150914Like, StockTemplate::Gw151226Like, StockTemplate::Gw170104Like];

    pub fn name(self) -> &'static str {
        match self {
            StockTemplate::Gw150914Like => "gw150914-like",
            StockTemplate::Gw151226Like => "gw151226-like",
            StockTemplate::Gw170104Like => "gw170104-like",
        }
    }

    pub fn spec(self) -> ChirpSpec {
        match self {
            StockTemplate::Gw150914Like => ChirpSpec {
                duration: 0.2,
                f_start: 35.0,
                f_end: 250.0,
                law: SweepLaw::PowerLaw,
                amp_exponent: STOCK_AMP_EXPONENT,
                ringdown_tau: Some(0.005),
                carrier_f0: 0.0,
                taper: 0.05,
            },
            StockTemplate::Gw151226Like => ChirpSpec {
                duration: 1.0,
                f_start: 35.0,
                f_end: 450.0,
                law: SweepLaw::PowerLaw,
                amp_exponent: STOCK_AMP_EXPONENT,
                ringdown_tau: Some(0.0025),
                carrier_f0: 56.0,
                taper: 0.05,
            },
            StockTemplate::Gw170104Like => ChirpSpec {
                duration: 0.12,
                f_start: 45.0,
                f_end: 280.0,
                law: SweepLaw::PowerLaw,
                amp_exponent: STOCK_AMP_EXPONENT,
                ringdown_tau: Some(0.003),
                carrier_f0: 0.0,
                taper: 0.05,
            },
        }
    }

    pub fn waveform(self, fs: f64) -> Result<TimeSeries> {
        chirp(&self.spec(), fs)
    }

    pub fn template(self, fs: f64) -> Result<Template> {
        extract_phase_amplitude(&self.waveform(fs)?, self.spec().carrier_f0)
    }
}

impl std::str::FromStr for StockTemplate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        StockTemplate::ALL
            .into_iter()
            .find(|t| t.name() == key || t.name().trim_end_matches("-like") == key)
            .ok_or_else(|| Error::Parameter(format!("unknown stock template `{s}`")))
    }
}

/// Companion metadata stored next to a gwx-text template file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateMeta {
    pub f0: f64,
    pub duration: f64,
    pub sweep_law: Option<SweepLaw>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chirp: Option<ChirpSpec>,
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `ts` as gwx-text at `path` and `meta` as JSON at `path + ".json"`.
pub fn save_template(ts: &TimeSeries, meta: &TemplateMeta, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    save_strain(ts, path, StrainFormat::GwxText)?;
    std::fs::write(meta_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

/// Read a gwx-text template and its metadata file when one exists.
pub fn load_template(path: impl AsRef<Path>) -> Result<(TimeSeries, Option<TemplateMeta>)> {
    let path = path.as_ref();
    let ts = load_strain(path, StrainFormat::GwxText)?;
    let mp = meta_path(path);
    let meta = if mp.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(mp)?)?)
    } else {
        None
    };
    Ok((ts, meta))
}
