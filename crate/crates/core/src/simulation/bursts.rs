use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::rng_from_seed;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const DEFAULT_DECAY_TAU: f64 = 0.25;
pub const DEFAULT_SINE_SIGMA_RATIO: f64 = 1.0 / 100.0;
pub const DEFAULT_AWGN_SIGMA_RATIO: f64 = 1.0 / 500.0;
/// Half a bin of a 32 s analysis grid.
pub const DEFAULT_LINE_DELTA: f64 = 1.0 / 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BurstKind {
    /// `exp(-t / decay_tau) sin(2 pi f0 t)`; `decay_tau = None` never decays.
    SineDecay { f0: f64, decay_tau: Option<f64> },
    Awgn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstSpec {
    #[serde(flatten)]
    pub kind: BurstKind,
    pub duration: f64,
    /// Burst std over reference std.
    pub sigma_ratio: f64,
    pub seed: u64,
}

impl BurstSpec {
    pub fn sine(f0: f64, duration: f64, sigma_ratio: f64) -> Self {
        Self {
            kind: BurstKind::SineDecay { f0, decay_tau: Some(DEFAULT_DECAY_TAU) },
            duration,
            sigma_ratio,
            seed: 0,
        }
    }

    pub fn awgn(duration: f64, sigma_ratio: f64, seed: u64) -> Self {
        Self { kind: BurstKind::Awgn, duration, sigma_ratio, seed }
    }

    fn validate(&self, fs: f64) -> Result<usize> {
        if !(self.sigma_ratio > 0.0 && self.duration > 0.0) {
            return Err(Error::Parameter("burst needs sigma_ratio > 0 and duration > 0".into()));
        }
        if let BurstKind::SineDecay { f0, decay_tau } = self.kind {
            if !(f0 > 0.0 && f0 < fs / 2.0) {
                return Err(Error::Parameter(format!("sine frequency {f0} Hz outside (0, fs/2)")));
            }
            if let Some(tau) = decay_tau {
                if !(tau > 0.0) {
                    return Err(Error::Parameter("decay_tau must be positive".into()));
                }
            }
        }
        let n = (self.duration * fs).round() as usize;
        if n < 2 {
            return Err(Error::Parameter("burst shorter than two samples".into()));
        }
        Ok(n)
    }
}

fn scale_to(x: Vec<f64>, target_std: f64, fs: f64) -> Result<TimeSeries> {
    let ts = TimeSeries::new(fs, 0.0, x)?;
    let sd = ts.std();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("burst waveform has zero spread".into()));
    }
    Ok(ts.scaled(target_std / sd))
}

fn reference_std(reference: &TimeSeries) -> Result<f64> {
    let sd = reference.std();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("reference series has zero standard deviation".into()));
    }
    Ok(sd)
}

/// Decaying sine scaled so its std is `sigma_ratio * std(reference)`.
pub fn sine_burst(spec: &BurstSpec, reference: &TimeSeries) -> Result<TimeSeries> {
    let fs = reference.fs();
    let n = spec.validate(fs)?;
    let BurstKind::SineDecay { f0, decay_tau } = spec.kind else {
        return Err(Error::Parameter("sine_burst needs a sine_decay spec".into()));
    };
    let target = spec.sigma_ratio * reference_std(reference)?;
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let env = decay_tau.map_or(1.0, |tau| (-t / tau).exp());
            env * (2.0 * PI * f0 * t).sin()
        })
        .collect();
    scale_to(x, target, fs)
}

/// Gaussian white burst scaled so its std is `sigma_ratio * std(reference)`.
pub fn awgn_burst(spec: &BurstSpec, reference: &TimeSeries) -> Result<TimeSeries> {
    let fs = reference.fs();
    let n = spec.validate(fs)?;
    if spec.kind != BurstKind::Awgn {
        return Err(Error::Parameter("awgn_burst needs an awgn spec".into()));
    }
    let target = spec.sigma_ratio * reference_std(reference)?;
    let mut rng = rng_from_seed(spec.seed);
    let x = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    scale_to(x, target, fs)
}

pub fn burst(spec: &BurstSpec, reference: &TimeSeries) -> Result<TimeSeries> {
    match spec.kind {
        BurstKind::SineDecay { .. } => sine_burst(spec, reference),
        BurstKind::Awgn => awgn_burst(spec, reference),
    }
}

/// `amplitude cos(2 pi (f0 + delta) t)`.
pub fn line_interference(amplitude: f64, f0: f64, delta: f64, duration: f64, fs: f64) -> Result<TimeSeries> {
    let f = f0 + delta;
    if !(fs > 0.0 && f >= 0.0 && f < fs / 2.0) {
        return Err(Error::Parameter(format!("line at {f} Hz outside [0, fs/2)")));
    }
    let n = (duration * fs).round() as usize;
    if n < 1 {
        return Err(Error::Parameter("line duration shorter than one sample".into()));
    }
    TimeSeries::new(fs, 0.0, (0..n).map(|i| amplitude * (2.0 * PI * f * i as f64 / fs).cos()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::forward_spectrum;

    fn unit_ref() -> TimeSeries {
        // exactly unit population std
        TimeSeries::new(4096.0, 0.0, (0..4096).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap()
    }

    #[test]
    fn sine_std_exact() {
        let b = sine_burst(&BurstSpec::sine(64.0, 1.0, 0.01), &unit_ref()).unwrap();
        assert!((b.std() / 0.01 - 1.0).abs() < 1e-6);
        assert_eq!(b.len(), 4096);
    }

    #[test]
    fn sine_peak_at_f0() {
        let spec = BurstSpec { kind: BurstKind::SineDecay { f0: 64.0, decay_tau: None }, ..BurstSpec::sine(64.0, 1.0, 0.01) };
        let b = sine_burst(&spec, &unit_ref()).unwrap();
        // constant envelope
        let peak = b.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let late = b.samples()[3000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((late / peak - 1.0).abs() < 1e-3);
        let sp = forward_spectrum(&b).unwrap().one_sided();
        let mag = sp.magnitude();
        let k = (0..mag.len()).max_by(|&a, &c| mag[a].total_cmp(&mag[c])).unwrap();
        assert_eq!(sp.frequency(k), 64.0);
    }

    #[test]
    fn awgn_std_and_determinism() {
        let spec = BurstSpec::awgn(1.0, 0.002, 77);
        let a = awgn_burst(&spec, &unit_ref()).unwrap();
        assert!((a.std() / 0.002 - 1.0).abs() < 1e-6);
        assert_eq!(a, awgn_burst(&spec, &unit_ref()).unwrap());
    }

    #[test]
    fn awgn_moments() {
        let reference = TimeSeries::new(1e6, 0.0, (0..1_000_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
        let a = awgn_burst(&BurstSpec::awgn(1.0, 0.5, 3), &reference).unwrap();
        let m = a.mean();
        let s = a.std();
        let n = a.len() as f64;
        let skew = a.samples().iter().map(|x| ((x - m) / s).powi(3)).sum::<f64>() / n;
        let kurt = a.samples().iter().map(|x| ((x - m) / s).powi(4)).sum::<f64>() / n - 3.0;
        assert!(skew.abs() < 0.2 && kurt.abs() < 0.2, "{skew} {kurt}");
    }

    #[test]
    fn zero_reference_rejected() {
        let z = TimeSeries::zeros(4096.0, 0.0, 100).unwrap();
        assert!(matches!(sine_burst(&BurstSpec::sine(64.0, 1.0, 0.01), &z), Err(Error::Degenerate(_))));
        assert!(matches!(awgn_burst(&BurstSpec::awgn(1.0, 0.01, 0), &z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn line_on_and_off_bin() {
        let fs = 4096.0;
        let on = line_interference(1.0, 60.0, 0.0, 32.0, fs).unwrap();
        let sp = forward_spectrum(&on).unwrap().one_sided();
        let p: Vec<f64> = sp.bins.iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = p.iter().sum();
        let k = (60.0 * 32.0) as usize;
        assert!(p[k] / total > 1.0 - 1e-9);

        let off = line_interference(1.0, 60.0, DEFAULT_LINE_DELTA, 32.0, fs).unwrap();
        let sp = forward_spectrum(&off).unwrap().one_sided();
        let p: Vec<f64> = sp.bins.iter().map(|c| c.norm_sqr()).collect();
        let peak = p.iter().cloned().fold(0.0, f64::max);
        let strong = p.iter().filter(|&&v| v >= 0.05 * peak).count();
        assert!(strong >= 2);

        let z = line_interference(0.0, 60.0, 0.1, 1.0, fs).unwrap();
        assert!(z.samples().iter().all(|&v| v == 0.0));
        assert!(line_interference(1.0, 2040.0, 10.0, 1.0, fs).is_err());
    }
}
