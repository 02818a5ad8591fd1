//! Chirp templates: phase/envelope decomposition, FM synthesis, stock
//! stand-ins, and phase-noise ("bogus") variants.

mod bogus;
mod chirp;
mod metrics;

pub use bogus::{bogus_noise, make_bogus, BogusSpec, DEFAULT_SMOOTHING_BW};
pub use chirp::{chirp, load_template, save_template, ChirpSpec, StockTemplate, SweepLaw, TemplateMeta, STOCK_AMP_EXPONENT};
pub use metrics::{energy_fraction, template_error, Selector};

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{fft_inverse, fft_real, TimeSeries};

/// `base ~ envelope * cos(2 pi carrier_f0 t + phase)` with `t = i / fs`
/// measured from the first sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub base: TimeSeries,
    pub phase: Vec<f64>,
    pub envelope: Vec<f64>,
    pub carrier_f0: f64,
}

impl Template {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn fs(&self) -> f64 {
        self.base.fs()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.base.len();
        if self.phase.len() != n || self.envelope.len() != n {
            return Err(Error::Shape(format!(
                "template base has {n} samples but phase has {} and envelope {}",
                self.phase.len(),
                self.envelope.len()
            )));
        }
        if !(self.carrier_f0 >= 0.0 && self.carrier_f0.is_finite()) {
            return Err(Error::Parameter(format!("carrier must be >= 0, got {}", self.carrier_f0)));
        }
        if let Some(i) = self.envelope.iter().position(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Parameter(format!("envelope sample {i} is negative or not finite")));
        }
        if let Some(i) = self.phase.iter().position(|m| !m.is_finite()) {
            return Err(Error::Parameter(format!("phase sample {i} is not finite")));
        }
        Ok(())
    }

    /// `f0 + (dm/dt) / 2 pi` by first differences, one value per sample gap.
    pub fn instantaneous_frequency(&self) -> Vec<f64> {
        let fs = self.fs();
        self.phase
            .windows(2)
            .map(|w| self.carrier_f0 + (w[1] - w[0]) * fs / (2.0 * PI))
            .collect()
    }
}

/// Analytic signal by zeroing negative frequencies and doubling positive ones.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut sp = fft_real(x, n);
    let half = n.div_ceil(2);
    for (k, c) in sp.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            continue;
        }
        if k < half {
            *c *= 2.0;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    fft_inverse(&mut sp);
    let inv = 1.0 / n as f64;
    sp.iter().map(|c| c * inv).collect()
}

/// Unwrap so consecutive samples differ by less than pi.
pub fn unwrap_phase(p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut offset = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if i > 0 {
            let d = v - p[i - 1];
            offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
        }
        out.push(v + offset);
    }
    out
}

pub fn extract_phase_amplitude(h: &TimeSeries, carrier_f0: f64) -> Result<Template> {
    if !(carrier_f0 >= 0.0 && carrier_f0.is_finite()) {
        return Err(Error::Parameter(format!("carrier must be >= 0, got {carrier_f0}")));
    }
    if h.len() < 4 {
        return Err(Error::Shape("need at least 4 samples to extract a phase".into()));
    }
    if h.energy() == 0.0 {
        return Err(Error::ExtractionUnreliable("signal is identically zero".into()));
    }
    let z = analytic_signal(h.samples());
    let envelope: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let peak = envelope.iter().cloned().fold(0.0, f64::max);
    let weak = envelope.iter().filter(|&&a| a < 1e-3 * peak).count();
    if weak * 10 > envelope.len() {
        return Err(Error::ExtractionUnreliable(format!(
            "envelope below 1e-3 of peak on {weak} of {} samples",
            envelope.len()
        )));
    }
    let raw: Vec<f64> = z.iter().map(|c| c.arg()).collect();
    let fs = h.fs();
    let phase = unwrap_phase(&raw)
        .into_iter()
        .enumerate()
        .map(|(i, p)| p - 2.0 * PI * carrier_f0 * i as f64 / fs)
        .collect();
    Ok(Template { base: h.clone(), phase, envelope, carrier_f0 })
}

/// `A(t) cos(2 pi f0 t + m(t) + extra(t))`; shared by ideal and bogus synthesis.
pub(crate) fn synthesize_with(
    tpl: &Template,
    envelope: &[f64],
    extra_phase: Option<&[f64]>,
) -> Result<TimeSeries> {
    let fs = tpl.fs();
    let w = 2.0 * PI * tpl.carrier_f0 / fs;
    let out = (0..tpl.len())
        .map(|i| {
            let mut arg = w * i as f64 + tpl.phase[i];
            if let Some(e) = extra_phase {
                arg += e[i];
            }
            envelope[i] * arg.cos()
        })
        .collect();
    tpl.base.with_samples(out)
}

pub fn synthesize_fm(tpl: &Template) -> Result<TimeSeries> {
    tpl.validate()?;
    synthesize_with(tpl, &tpl.envelope, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, fs: f64, n: usize) -> TimeSeries {
        TimeSeries::new(fs, 0.0, (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).cos()).collect())
            .unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let r: f64 = a.iter().map(|x| x * x).sum();
        (e / r).sqrt()
    }

    #[test]
    fn tone_phase_is_linear() {
        let fs = 4096.0;
        let h = tone(64.0, fs, 4096);
        let t = extract_phase_amplitude(&h, 0.0).unwrap();
        for a in &t.envelope {
            assert!((a - 1.0).abs() < 1e-9);
        }
        let slope = (t.phase[3000] - t.phase[1000]) / 2000.0 * fs;
        assert!((slope / (2.0 * PI * 64.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn carrier_is_removed() {
        let fs = 4096.0;
        let h = tone(64.0, fs, 4096);
        let t = extract_phase_amplitude(&h, 64.0).unwrap();
        for m in &t.phase {
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_signal_is_unreliable() {
        let h = TimeSeries::zeros(4096.0, 0.0, 1024).unwrap();
        let e = extract_phase_amplitude(&h, 0.0).unwrap_err();
        assert!(matches!(e, Error::ExtractionUnreliable(_)));
    }

    #[test]
    fn mostly_silent_is_unreliable() {
        let fs = 1024.0;
        let mut x = tone(64.0, fs, 1024).into_samples();
        for v in x.iter_mut().skip(512) {
            *v = 0.0;
        }
        let h = TimeSeries::new(fs, 0.0, x).unwrap();
        assert!(matches!(extract_phase_amplitude(&h, 0.0), Err(Error::ExtractionUnreliable(_))));
    }

    #[test]
    fn linear_chirp_law_recovered() {
        let fs = 4096.0;
        let dur = 1.0;
        let (f_a, f_b) = (35.0, 250.0);
        let k = (f_b - f_a) / dur;
        let n = (dur * fs) as usize;
        let h = TimeSeries::new(
            fs,
            0.0,
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    (2.0 * PI * (f_a * t + 0.5 * k * t * t)).cos()
                })
                .collect(),
        )
        .unwrap();
        let tpl = extract_phase_amplitude(&h, 0.0).unwrap();
        let inst = tpl.instantaneous_frequency();
        for i in (n / 10..9 * n / 10).step_by(37) {
            let t = (i as f64 + 0.5) / fs;
            let expect = f_a + k * t;
            assert!((inst[i] / expect - 1.0).abs() < 0.02, "t={t}: {} vs {expect}", inst[i]);
        }
    }

    #[test]
    fn synthesize_basics() {
        let fs = 1024.0;
        let n = 1024;
        let base = TimeSeries::zeros(fs, 0.0, n).unwrap();
        let tpl = Template { base: base.clone(), phase: vec![0.0; n], envelope: vec![1.0; n], carrier_f0: 64.0 };
        let y = synthesize_fm(&tpl).unwrap();
        let expect = tone(64.0, fs, n);
        for (a, b) in y.samples().iter().zip(expect.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = synthesize_fm(&Template { envelope: vec![0.0; n], ..tpl.clone() }).unwrap();
        assert!(z.samples().iter().all(|&v| v == 0.0));
        let bad = Template { phase: vec![0.0; n - 1], ..tpl };
        assert!(matches!(synthesize_fm(&bad), Err(Error::Shape(_))));
    }

    #[test]
    fn round_trip_on_stock_chirps() {
        for stock in StockTemplate::ALL {
            let tpl = stock.template(4096.0).unwrap();
            let y = synthesize_fm(&tpl).unwrap();
            assert!(rel_l2(tpl.base.samples(), y.samples()) <= 0.05);
            for w in tpl.phase.windows(2) {
                assert!((w[1] - w[0]).abs() < PI);
            }
        }
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw: Vec<f64> = (0..100).map(|i| (0.3 * i as f64 + PI).rem_euclid(2.0 * PI) - PI).collect();
        let u = unwrap_phase(&raw);
        for w in u.windows(2) {
            assert!((w[1] - w[0] - 0.3).abs() < 1e-12);
        }
    }
}
