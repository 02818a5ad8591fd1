use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ccf::{decorrelation_time, normalized_ccf};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningPoint {
    pub t_start: f64,
    pub peak_abs_ccf: f64,
    pub r3: f64,
    pub peaky: bool,
}

/// Slide a template-length window over `long_ts` every `hop` seconds and
/// correlate each window with `template` (max lag half the template
/// duration, `r3` against the template's own decorrelation time).
///
/// Windows touching any `(t_from, t_to)` exclusion are skipped. Windows
/// whose content is all zeros are skipped too.
pub fn running_window_ccf(
    long_ts: &TimeSeries,
    template: &TimeSeries,
    hop: f64,
    exclusions: &[(f64, f64)],
) -> Result<Vec<RunningPoint>> {
    long_ts.check_same_rate(template)?;
    if !(hop > 0.0) {
        return Err(Error::Parameter(format!("hop must be positive, got {hop}")));
    }
    let n = template.len();
    if n >= long_ts.len() {
        return Err(Error::Shape("template must be shorter than the long series".into()));
    }
    let fs = long_ts.fs();
    let tau0 = decorrelation_time(template)?;
    let max_lag = template.duration() / 2.0;
    let hop_n = ((hop * fs).round() as usize).max(1);
    let overlaps = |s: usize| {
        let (a, b) = (long_ts.time_at(s), long_ts.time_at(s + n));
        exclusions.iter().any(|&(x, y)| a < y && x < b)
    };
    let starts: Vec<usize> = (0..=long_ts.len() - n).step_by(hop_n).filter(|&s| !overlaps(s)).collect();

    let points: Vec<Option<RunningPoint>> = starts
        .par_iter()
        .map(|&s| -> Result<Option<RunningPoint>> {
            let w = long_ts.slice_samples(s, s + n)?.with_t0(template.t0());
            if w.energy() == 0.0 {
                return Ok(None);
            }
            let c = normalized_ccf(&w, template, max_lag)?.with_tau0(tau0);
            Ok(Some(RunningPoint { t_start: long_ts.time_at(s), peak_abs_ccf: c.peak_abs(), r3: c.r3, peaky: c.peaky }))
        })
        .collect::<Result<_>>()?;
    let out: Vec<RunningPoint> = points.into_iter().flatten().collect();
    if out.is_empty() {
        return Err(Error::Range("no usable window positions outside the exclusions".into()));
    }
    Ok(out)
}

/// `t_start_s,peak_abs_ccf,r3`.
pub fn write_running_csv(points: &[RunningPoint], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t_start_s", "peak_abs_ccf", "r3"])?;
    for p in points {
        w.write_record([p.t_start.to_string(), p.peak_abs_ccf.to_string(), p.r3.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{colored_noise, PsdModel};
    use crate::templates::StockTemplate;

    #[test]
    fn tiled_template_peaks_at_one() {
        let fs = 2048.0;
        let h = StockTemplate::Gw150914Like.waveform(fs).unwrap();
        let tiled: Vec<f64> = (0..10).flat_map(|_| h.samples().iter().copied()).collect();
        let long = TimeSeries::new(fs, 0.0, tiled).unwrap();
        let pts = running_window_ccf(&long, &h, h.duration(), &[]).unwrap();
        assert_eq!(pts.len(), 10);
        for (i, p) in pts.iter().enumerate() {
            assert!((p.peak_abs_ccf - 1.0).abs() < 1e-9);
            assert!((p.t_start - i as f64 * h.duration()).abs() < 1e-9);
            assert!(p.r3 < 1.0 / std::f64::consts::E);
        }
    }

    #[test]
    fn exclusions_and_order() {
        let fs = 1024.0;
        let h = StockTemplate::Gw150914Like.waveform(fs).unwrap();
        let long = colored_noise(&PsdModel::flat(1.0), 64.0, fs, 4).unwrap();
        let pts = running_window_ccf(&long, &h, 1.0, &[(0.0, 2.0), (62.0, 64.0), (30.0, 31.0)]).unwrap();
        assert!(pts.windows(2).all(|w| w[0].t_start < w[1].t_start));
        assert!(pts.iter().all(|p| p.t_start >= 2.0 && p.t_start < 62.0));
        assert!(!pts.iter().any(|p| (p.t_start - 30.0).abs() < 1e-9));
        assert_eq!(pts.len(), 59);
        assert!(pts.iter().all(|p| p.peak_abs_ccf > 0.0 && p.peak_abs_ccf < 0.6));
        assert!(matches!(running_window_ccf(&long, &h, 1.0, &[(-1.0, 65.0)]), Err(Error::Range(_))));
    }
}
