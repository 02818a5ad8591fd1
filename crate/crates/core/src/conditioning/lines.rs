use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PowerSpectrum;

pub const DEFAULT_LINE_THRESHOLD: f64 = 10.0;
pub const DEFAULT_MEDIAN_WINDOW_HZ: f64 = 8.0;

/// A narrow spectral feature to be whitened locally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineBand {
    pub f_center: f64,
    pub half_width: f64,
    /// PSD peak over the local running median.
    pub peak_ratio: f64,
}

impl LineBand {
    pub fn new(f_center: f64, half_width: f64, peak_ratio: f64) -> Result<Self> {
        if !(f_center > 0.0 && half_width > 0.0 && peak_ratio > 1.0) {
            return Err(Error::Parameter(format!(
                "line band needs f_center > 0, half_width > 0, peak_ratio > 1; got {f_center}, {half_width}, {peak_ratio}"
            )));
        }
        Ok(Self { f_center, half_width, peak_ratio })
    }

    pub fn lo(&self) -> f64 {
        self.f_center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.f_center + self.half_width
    }

    pub fn contains(&self, f: f64) -> bool {
        (f - self.f_center).abs() <= self.half_width
    }
}

/// Running median of `xs` over an odd window of `w` bins, truncated at the ends.
pub(crate) fn running_median(xs: &[f64], w: usize) -> Vec<f64> {
    let h = w / 2;
    let n = xs.len();
    let mut buf = Vec::with_capacity(w);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(h);
            let hi = (i + h + 1).min(n);
            buf.clear();
            buf.extend_from_slice(&xs[lo..hi]);
            let m = buf.len() / 2;
            let (_, med, _) = buf.select_nth_unstable_by(m, f64::total_cmp);
            let med = *med;
            if buf.len() % 2 == 0 {
                let lower = buf[..m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                0.5 * (lower + med)
            } else {
                med
            }
        })
        .collect()
}

/// Maximal runs where the PSD exceeds `threshold_ratio` times its running
/// median, merged when they overlap and sorted by centre frequency.
pub fn detect_lines(psd: &PowerSpectrum, threshold_ratio: f64, median_window: f64) -> Result<Vec<LineBand>> {
    if !(threshold_ratio > 1.0 && threshold_ratio.is_finite()) {
        return Err(Error::Parameter(format!("threshold ratio must exceed 1, got {threshold_ratio}")));
    }
    if !(median_window > 0.0) {
        return Err(Error::Parameter(format!("median window must be positive, got {median_window}")));
    }
    let df = psd.df();
    let v = psd.values();
    let n = v.len();
    let w = ((median_window / df).round() as usize).max(3) | 1;
    let med = running_median(v, w);

    let ratio = |k: usize| if med[k] > 0.0 { v[k] / med[k] } else if v[k] > 0.0 { f64::INFINITY } else { 0.0 };

    let mut bands: Vec<LineBand> = Vec::new();
    let mut k = 1;
    // DC and Nyquist bins cannot host a line band
    while k < n - 1 {
        if ratio(k) <= threshold_ratio {
            k += 1;
            continue;
        }
        let start = k;
        let mut peak = k;
        while k < n - 1 && ratio(k) > threshold_ratio {
            if ratio(k) > ratio(peak) {
                peak = k;
            }
            k += 1;
        }
        let end = k - 1;
        let fc = peak as f64 * df;
        let hw = ((peak - start).max(end - peak) + 1) as f64 * df;
        let pr = ratio(peak).min(1e300);
        bands.push(LineBand { f_center: fc, half_width: hw, peak_ratio: pr });
    }
    Ok(merge_bands(bands))
}

/// Union overlapping bands; the merged centre is the stronger member's.
pub fn merge_bands(mut bands: Vec<LineBand>) -> Vec<LineBand> {
    bands.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
    let mut out: Vec<LineBand> = Vec::with_capacity(bands.len());
    for b in bands {
        match out.last_mut() {
            Some(last) if b.lo() <= last.hi() => {
                let lo = last.lo().min(b.lo());
                let hi = last.hi().max(b.hi());
                let (fc, pr) = if b.peak_ratio > last.peak_ratio {
                    (b.f_center, b.peak_ratio)
                } else {
                    (last.f_center, last.peak_ratio)
                };
                *last = LineBand {
                    f_center: fc,
                    half_width: (fc - lo).max(hi - fc),
                    peak_ratio: pr,
                };
            }
            _ => out.push(b),
        }
    }
    out.sort_by(|a, b| a.f_center.total_cmp(&b.f_center));
    out
}
