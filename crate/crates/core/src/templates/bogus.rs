use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{synthesize_with, Template};
use crate::error::{Error, Result};
use crate::series::{fft_inverse, fft_real, TimeSeries};
use crate::simulation::rng::rng_from_seed;

/// Default low-pass applied to the phase and amplitude noise, Hz.
pub const DEFAULT_SMOOTHING_BW: f64 = 64.0;

/// How to corrupt a template: `m_b = m + w_m`, `A_b = max(A + w_a, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogusSpec {
    /// Sample std of `w_m`, radians.
    pub sigma_phase: f64,
    /// Sample std of `w_a` as a fraction of the envelope RMS.
    pub sigma_amp: f64,
    /// Brick-wall low-pass on the noise before scaling; `None` keeps it white.
    pub smoothing_bw: Option<f64>,
    pub seed: u64,
}

impl BogusSpec {
    pub fn phase_only(sigma_phase: f64, seed: u64) -> Self {
        Self { sigma_phase, sigma_amp: 0.0, smoothing_bw: Some(DEFAULT_SMOOTHING_BW), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_phase >= 0.0 && self.sigma_phase.is_finite()) {
            return Err(Error::Parameter(format!("sigma_phase must be >= 0, got {}", self.sigma_phase)));
        }
        if !(self.sigma_amp >= 0.0 && self.sigma_amp.is_finite()) {
            return Err(Error::Parameter(format!("sigma_amp must be >= 0, got {}", self.sigma_amp)));
        }
        if let Some(bw) = self.smoothing_bw {
            if !(bw > 0.0) {
                return Err(Error::Parameter(format!("smoothing bandwidth must be positive, got {bw}")));
            }
        }
        Ok(())
    }
}

fn low_pass(x: &[f64], fs: f64, bw: f64) -> Vec<f64> {
    let n = x.len();
    let mut sp = fft_real(x, n);
    let df = fs / n as f64;
    for (k, c) in sp.iter_mut().enumerate() {
        let kk = k.min(n - k);
        if kk as f64 * df > bw {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    fft_inverse(&mut sp);
    sp.iter().map(|c| c.re / n as f64).collect()
}

/// Rescale to an exact population std of `sigma` (zero stays zero).
fn set_std(mut x: Vec<f64>, sigma: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if sigma == 0.0 || sd == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return x;
    }
    let g = sigma / sd;
    x.iter_mut().for_each(|v| *v *= g);
    x
}

/// The `(w_m, w_a)` pair `make_bogus` adds, for `n` samples at `fs`.
///
/// `w_a` is returned in units of the envelope RMS (multiply by `rms(A)`).
pub fn bogus_noise(n: usize, fs: f64, spec: &BogusSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let mut wm = draw(n);
    let mut wa = draw(n);
    if let Some(bw) = spec.smoothing_bw {
        wm = low_pass(&wm, fs, bw);
        wa = low_pass(&wa, fs, bw);
    }
    Ok((set_std(wm, spec.sigma_phase), set_std(wa, spec.sigma_amp)))
}

/// `max(A + w_a, 0) * cos(2 pi f0 t + m + w_m)`.
///
/// With both sigmas zero this takes the same arithmetic path as
/// [`super::synthesize_fm`] and returns identical samples.
pub fn make_bogus(tpl: &Template, spec: &BogusSpec) -> Result<TimeSeries> {
    tpl.validate()?;
    let (wm, wa) = bogus_noise(tpl.len(), tpl.fs(), spec)?;
    let rms = (tpl.envelope.iter().map(|a| a * a).sum::<f64>() / tpl.len() as f64).sqrt();
    let env: Vec<f64> = tpl
        .envelope
        .iter()
        .zip(&wa)
        .map(|(a, w)| if spec.sigma_amp == 0.0 { *a } else { (a + w * rms).max(0.0) })
        .collect();
    if spec.sigma_phase == 0.0 {
        synthesize_with(tpl, &env, None)
    } else {
        synthesize_with(tpl, &env, Some(&wm))
    }
}
