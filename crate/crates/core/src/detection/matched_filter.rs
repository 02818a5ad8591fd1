use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conditioning::floored_psd_grid;
use crate::error::{Error, Result};
use crate::series::{fft_forward, fft_inverse, fft_real, good_size, PowerSpectrum, TimeSeries};

/// Reweighted-SNR level that declares an event.
pub const SNR_THRESHOLD: f64 = 5.0;
pub const DEFAULT_CHI2_BINS: usize = 16;
pub const DEFAULT_BLOCK_LEN: f64 = 32.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MfMode {
    /// Product of block DFTs and one inverse transform; wrap-around included.
    #[default]
    Circular,
    /// Linear correlation: the PSD-weighted block is followed by a zero guard
    /// of template length before correlating, so nothing wraps.
    CyclicPrefix,
}

impl std::str::FromStr for MfMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circular" => Ok(MfMode::Circular),
            "cyclic_prefix" | "cyclic-prefix" | "linear" => Ok(MfMode::CyclicPrefix),
            other => Err(Error::Parameter(format!("unknown matched-filter mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reweight {
    Off,
    Chi2 { n_bins: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfConfig {
    /// Block length in seconds; `None` filters the whole strain as one block.
    pub block_len: Option<f64>,
    pub mode: MfMode,
    pub reweight: Reweight,
    /// Restrict the inner product to `f_lo <= |f| <= f_hi`.
    pub band: Option<(f64, f64)>,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            block_len: Some(DEFAULT_BLOCK_LEN),
            mode: MfMode::Circular,
            reweight: Reweight::Chi2 { n_bins: DEFAULT_CHI2_BINS },
            band: None,
        }
    }
}

impl MfConfig {
    pub fn whole(mode: MfMode) -> Self {
        Self { block_len: None, mode, reweight: Reweight::Off, band: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
    pub index: usize,
}

/// Matched-filter output, one value per strain sample. Index `m` is the
/// template start aligned with strain sample `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSeries {
    pub fs: f64,
    pub t0: f64,
    pub rho: Vec<f64>,
    pub rho_reweighted: Vec<f64>,
    pub chi2_r: Option<Vec<f64>>,
    /// Maximum of `rho_reweighted`.
    pub peak: Peak,
    /// `sqrt(<h|h>)` on the first block's grid.
    pub sigma: f64,
    pub config: MfConfig,
}

impl SnrSeries {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    /// Largest raw `rho`.
    pub fn raw_peak(&self) -> Peak {
        peak_of(&self.rho, self.t0, self.fs)
    }

    pub fn fired(&self) -> bool {
        self.peak.value > SNR_THRESHOLD
    }

    /// `t_s,rho,rho_reweighted`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_s", "rho", "rho_reweighted"])?;
        for i in 0..self.rho.len() {
            w.write_record([
                self.time_at(i).to_string(),
                self.rho[i].to_string(),
                self.rho_reweighted[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn peak_of(v: &[f64], t0: f64, fs: f64) -> Peak {
    let mut index = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[index] {
            index = i;
        }
    }
    Peak { time: t0 + index as f64 / fs, value: v[index], index }
}

/// `rho * ((1 + chi2_r^3) / 2)^(-1/6)` when `chi2_r > 1`, else `rho`.
pub fn reweighted_snr(rho: f64, chi2_r: f64) -> f64 {
    if chi2_r <= 1.0 {
        rho
    } else {
        rho * ((1.0 + chi2_r.powi(3)) / 2.0).powf(-1.0 / 6.0)
    }
}

fn band_weights(psd: &PowerSpectrum, n: usize, fs: f64, band: Option<(f64, f64)>) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = band {
        if !(lo >= 0.0 && lo < hi) {
            return Err(Error::Parameter(format!("band {lo}..{hi} is empty")));
        }
    }
    let s = floored_psd_grid(psd, n, fs)?;
    let df = fs / n as f64;
    Ok((0..n)
        .map(|k| {
            let f = k.min(n - k) as f64 * df;
            match band {
                Some((lo, hi)) if f < lo || f > hi => 0.0,
                _ => 1.0 / s[k],
            }
        })
        .collect())
}

/// `<h|h> = 2 dt / n sum_k |H_k|^2 / S_k` over all `n` bins of an `n`-point grid.
///
/// Equivalent to the one-sided `4 int_0^inf |h(f)|^2 / S(f) df`.
pub fn sigma_norm_on_grid(template: &TimeSeries, psd: &PowerSpectrum, n: usize) -> Result<f64> {
    if template.len() > n {
        return Err(Error::Shape(format!("template of {} samples exceeds grid {n}", template.len())));
    }
    let fs = template.fs();
    let w = band_weights(psd, n, fs, None)?;
    let fh = fft_real(template.samples(), n);
    let hh = 2.0 / (fs * n as f64) * fh.iter().zip(&w).map(|(c, w)| c.norm_sqr() * w).sum::<f64>();
    if !(hh > 0.0) {
        return Err(Error::Degenerate("template has zero weighted norm".into()));
    }
    Ok(hh)
}

/// `<h|h>` on the template's own length; scales as `a^2` under `h -> a h`.
pub fn sigma_norm(template: &TimeSeries, psd: &PowerSpectrum) -> Result<f64> {
    sigma_norm_on_grid(template, psd, template.len())
}

fn blocks(ns: usize, nh: usize, fs: f64, cfg: &MfConfig) -> Result<Vec<(usize, usize)>> {
    let l = match cfg.block_len {
        None => ns,
        Some(b) => {
            let lf = b * fs;
            if !(lf > 0.0) || (lf - lf.round()).abs() > 1e-6 {
                return Err(Error::Parameter(format!("block_len * fs = {lf} is not a whole number of samples")));
            }
            let l = lf.round() as usize;
            if l < 2 * nh {
                return Err(Error::Parameter(format!(
                    "block of {l} samples is shorter than twice the template ({nh})"
                )));
            }
            l.min(ns)
        }
    };
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    while start < ns {
        let len = l.min(ns - start);
        out.push((start, len));
        start += len;
    }
    if out.len() > 1 {
        let (s, len) = *out.last().unwrap();
        if len < 2 * nh {
            out.pop();
            out.last_mut().unwrap().1 += len;
            debug_assert_eq!(out.last().unwrap().0 + out.last().unwrap().1, s + len);
        }
    }
    Ok(out)
}

struct BlockFilter<'a> {
    h: &'a [f64],
    l: usize,
    dt: f64,
    mode: MfMode,
    fh_l: Vec<Complex64>,
    fh_m: Option<Vec<Complex64>>,
}

impl BlockFilter<'_> {
    /// Real `<s|h>(m)` for `m in 0..l` from the weighted block spectrum `w = F_s / S`.
    fn correlate(&self, w: &[Complex64]) -> Vec<f64> {
        let l = self.l;
        match self.mode {
            MfMode::Circular => {
                let mut buf: Vec<Complex64> = w.iter().zip(&self.fh_l).map(|(a, b)| a * b.conj()).collect();
                fft_inverse(&mut buf);
                let g = 2.0 * self.dt / l as f64;
                buf.iter().map(|c| c.re * g).collect()
            }
            MfMode::CyclicPrefix => {
                let fh_m = self.fh_m.as_ref().expect("linear mode needs padded template spectrum");
                let m = fh_m.len();
                let mut q = w.to_vec();
                fft_inverse(&mut q);
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                let inv_l = 1.0 / l as f64;
                for (b, c) in buf.iter_mut().zip(&q) {
                    b.re = c.re * inv_l;
                }
                fft_forward(&mut buf);
                for (b, h) in buf.iter_mut().zip(fh_m) {
                    *b *= h.conj();
                }
                fft_inverse(&mut buf);
                let g = 2.0 * self.dt / m as f64;
                buf[..l].iter().map(|c| c.re * g).collect()
            }
        }
    }
}

/// Bin index (over the two-sided grid) splitting the template power into
/// `p` bands of equal weight.
fn chi2_bins(fh: &[Complex64], wts: &[f64], p: usize) -> Result<Vec<usize>> {
    let n = fh.len();
    let half = n / 2;
    let u: Vec<f64> = (0..=half)
        .map(|k| {
            let mult = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            mult * fh[k].norm_sqr() * wts[k]
        })
        .collect();
    let total: f64 = u.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Binning("template has no weighted power".into()));
    }
    let mut bin = vec![0usize; n];
    let mut counts = vec![0usize; p];
    let mut cum = 0.0;
    for k in 0..=half {
        let j = ((p as f64 * (cum + 0.5 * u[k]) / total).floor() as usize).min(p - 1);
        cum += u[k];
        bin[k] = j;
        if k != 0 && !(n % 2 == 0 && k == half) {
            bin[n - k] = j;
        }
        if u[k] > 0.0 {
            counts[j] += 1;
        }
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Binning(format!(
            "chi-squared bin {j} of {p} holds no template power; template too narrow-band"
        )));
    }
    Ok(bin)
}

/// PSD-weighted matched filter, normalised so `rho = |<s|h>| / sqrt(<h|h>)`.
pub fn matched_filter(
    strain: &TimeSeries,
    template: &TimeSeries,
    psd: &PowerSpectrum,
    cfg: &MfConfig,
) -> Result<SnrSeries> {
    strain.check_same_rate(template)?;
    let ns = strain.len();
    let nh = template.len();
    if nh > ns {
        return Err(Error::Shape(format!("template ({nh} samples) is longer than strain ({ns})")));
    }
    let p = match cfg.reweight {
        Reweight::Off => None,
        Reweight::Chi2 { n_bins } if n_bins >= 2 => Some(n_bins),
        Reweight::Chi2 { n_bins } => {
            return Err(Error::Parameter(format!("chi-squared needs at least 2 bins, got {n_bins}")))
        }
    };
    let fs = strain.fs();
    let dt = 1.0 / fs;
    let h = template.samples();
    let s = strain.samples();

    let mut rho = Vec::with_capacity(ns);
    let mut rho_rw = Vec::with_capacity(ns);
    let mut chi2_all = p.map(|_| Vec::with_capacity(ns));
    let mut sigma0 = None;

    for (start, l) in blocks(ns, nh, fs, cfg)? {
        let wts = band_weights(psd, l, fs, cfg.band)?;
        let fh_l = fft_real(h, l);
        let hh = 2.0 * dt / l as f64 * fh_l.iter().zip(&wts).map(|(c, w)| c.norm_sqr() * w).sum::<f64>();
        if !(hh > 0.0) {
            return Err(Error::Degenerate("template has zero weighted norm in this band".into()));
        }
        let sigma = hh.sqrt();
        sigma0.get_or_insert(sigma);

        let fh_m = match cfg.mode {
            MfMode::Circular => None,
            MfMode::CyclicPrefix => Some(fft_real(h, good_size(l + nh))),
        };
        let bins = p.map(|p| chi2_bins(&fh_l, &wts, p)).transpose()?;
        let filt = BlockFilter { h, l, dt, mode: cfg.mode, fh_l, fh_m };
        debug_assert_eq!(filt.h.len(), nh);

        let fs_blk = fft_real(&s[start..start + l], l);
        let w: Vec<Complex64> = fs_blk.iter().zip(&wts).map(|(c, w)| c * *w).collect();
        let signed: Vec<f64> = filt.correlate(&w).into_iter().map(|v| v / sigma).collect();

        match (p, bins) {
            (Some(p), Some(bins)) => {
                // Discrete bins never hold exactly 1/p of the power, so each
                // band is compared with its own share f_j of <h|h>.
                let mut chi2 = vec![0.0; l];
                let pf = p as f64;
                let mut share = vec![0.0; p];
                for ((c, w), &b) in filt.fh_l.iter().zip(&wts).zip(&bins) {
                    share[b] += c.norm_sqr() * w;
                }
                let total: f64 = share.iter().sum();
                for j in 0..p {
                    let fj = share[j] / total;
                    let wj: Vec<Complex64> = w
                        .iter()
                        .zip(&bins)
                        .map(|(c, &b)| if b == j { *c } else { Complex64::new(0.0, 0.0) })
                        .collect();
                    let rj = filt.correlate(&wj);
                    for m in 0..l {
                        let d = rj[m] / sigma - fj * signed[m];
                        chi2[m] += d * d / fj;
                    }
                }
                let out = chi2_all.as_mut().unwrap();
                for m in 0..l {
                    let chi2_r = chi2[m] / (pf - 1.0);
                    let r = signed[m].abs();
                    rho.push(r);
                    rho_rw.push(reweighted_snr(r, chi2_r));
                    out.push(chi2_r);
                }
            }
            _ => {
                for v in signed {
                    rho.push(v.abs());
                    rho_rw.push(v.abs());
                }
            }
        }
    }

    let peak = peak_of(&rho_rw, strain.t0(), fs);
    Ok(SnrSeries {
        fs,
        t0: strain.t0(),
        rho,
        rho_reweighted: rho_rw,
        chi2_r: chi2_all,
        peak,
        sigma: sigma0.expect("at least one block"),
        config: *cfg,
    })
}

/// Recompute `snr` with chi-squared reweighting over `n_bins` bands.
pub fn reweight_snr(
    snr: &SnrSeries,
    strain: &TimeSeries,
    template: &TimeSeries,
    psd: &PowerSpectrum,
    n_bins: usize,
) -> Result<SnrSeries> {
    let cfg = MfConfig { reweight: Reweight::Chi2 { n_bins }, ..snr.config };
    matched_filter(strain, template, psd, &cfg)
}
