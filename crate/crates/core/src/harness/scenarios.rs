use std::path::Path;

use rayon::prelude::*;

use super::config::{PsdSource, ScenarioConfig, ScenarioName};
use super::report::{summarize, Figure, ScenarioOutcome, Summary, TrialReport};
use crate::conditioning::{
    detect_lines, DEFAULT_LINE_THRESHOLD, DEFAULT_MEDIAN_WINDOW_HZ, whiten_full, whiten_localized, Bandpass, FilterMode};
use crate::detection::{
    decorrelation_time, matched_filter, normalized_ccf, running_window_ccf, sigma_norm_on_grid, CcfResult, MfConfig,
    MfMode, Reweight, SnrSeries,
};
use crate::error::{Error, Result};
use crate::series::{load_strain, welch_psd_default, PowerSpectrum, StrainFormat, TimeSeries};
use crate::simulation::rng::{substream, trial_seed};
use crate::simulation::{
    burst, colored_noise, inject, line_interference, BurstKind, BurstSpec, PsdModel, DEFAULT_AWGN_SIGMA_RATIO,
    DEFAULT_DECAY_TAU, DEFAULT_LINE_DELTA, DEFAULT_SINE_SIGMA_RATIO,
};
use crate::templates::{
    extract_phase_amplitude, load_template, make_bogus, template_error, BogusSpec, Template, DEFAULT_SMOOTHING_BW,
};

const TAG_NOISE: u64 = 1;
const TAG_BURST: u64 = 2;
const TAG_H1: u64 = 3;
const TAG_L1: u64 = 4;
const TAG_BOGUS: u64 = 5;

/// Bogus phase-noise std used when the config leaves it unset, radians.
pub const DEFAULT_BOGUS_SIGMA_PHASE: f64 = 1.0;
/// Expected SNR of the ideal template at the injection amplitude.
pub const DEFAULT_TARGET_SNR: f64 = 20.0;

/// Shared, trial-independent inputs.
struct Context {
    template: TimeSeries,
    decomposition: Option<Template>,
    model: PsdModel,
    model_psd: PowerSpectrum,
    h1: Option<TimeSeries>,
    l1: Option<TimeSeries>,
}

fn load_any(path: &Path, fs: f64) -> Result<TimeSeries> {
    let ts = load_strain(path, StrainFormat::from_path(path))?;
    if (ts.fs() - fs).abs() > 1e-9 * fs {
        return Err(Error::Parameter(format!("{} has fs {} but the scenario uses {fs}", path.display(), ts.fs())));
    }
    Ok(ts)
}

impl Context {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let fs = cfg.fs;
        let (template, carrier) = match &cfg.inputs.template {
            Some(p) => {
                let (ts, meta) = load_template(p)?;
                if (ts.fs() - fs).abs() > 1e-9 * fs {
                    return Err(Error::Parameter(format!("template fs {} differs from scenario fs {fs}", ts.fs())));
                }
                (ts.with_t0(0.0), meta.map_or(0.0, |m| m.f0))
            }
            None => (cfg.template.waveform(fs)?, cfg.template.spec().carrier_f0),
        };
        let decomposition = match cfg.name {
            ScenarioName::MfBogus | ScenarioName::CcfBogus => Some(extract_phase_amplitude(&template, carrier)?),
            _ => None,
        };
        let model = match &cfg.inputs.psd_model {
            Some(p) => PsdModel::load(p)?,
            None => cfg.psd_model.clone(),
        };
        model.validate_for(fs)?;
        let model_psd = model.to_power_spectrum(fs, 0.25)?;
        let h1 = cfg.inputs.h1.as_deref().map(|p| load_any(p, fs)).transpose()?;
        let l1 = cfg.inputs.l1.as_deref().map(|p| load_any(p, fs)).transpose()?;
        Ok(Self { template, decomposition, model, model_psd, h1, l1 })
    }

    fn th(&self) -> f64 {
        self.template.duration()
    }
}

/// Whiten with `psd` then zero-phase band-pass.
fn condition(ts: &TimeSeries, psd: &PowerSpectrum, cfg: &ScenarioConfig) -> Result<TimeSeries> {
    let w = whiten_full(ts, psd)?;
    Bandpass::design(ts.fs(), cfg.band.0, cfg.band.1, cfg.order)?.apply(&w, FilterMode::ZeroPhase)
}

/// Condition a short template inside a zero block so the filters settle,
/// then cut it back out.
fn condition_template(h: &TimeSeries, psd: &PowerSpectrum, cfg: &ScenarioConfig) -> Result<TimeSeries> {
    let pad = (h.fs()).round() as usize;
    let mut x = vec![0.0; h.len() + 2 * pad];
    x[pad..pad + h.len()].copy_from_slice(h.samples());
    let c = condition(&TimeSeries::new(h.fs(), 0.0, x)?, psd, cfg)?;
    Ok(c.slice_samples(pad, pad + h.len())?.with_t0(0.0))
}

/// `n` samples of `ts` starting at time `t`.
fn window_at(ts: &TimeSeries, t: f64, n: usize) -> Result<TimeSeries> {
    let i = ts.index_of(t);
    if i < 0 {
        return Err(Error::Range(format!("window start {t} s before series start")));
    }
    let i = i as usize;
    Ok(ts.slice_samples(i, i + n)?.with_t0(0.0))
}

fn psd_for(cfg: &ScenarioConfig, ctx: &Context, strain: &TimeSeries) -> Result<PowerSpectrum> {
    match cfg.params.psd_source.unwrap_or_default() {
        PsdSource::Welch => welch_psd_default(strain),
        PsdSource::Model => Ok(ctx.model_psd.clone()),
    }
}

/// Short-window CCF of conditioned strain against the conditioned template,
/// `r3` against the conditioned template's own decorrelation time.
fn event_ccf(
    cfg: &ScenarioConfig,
    ctx: &Context,
    strain: &TimeSeries,
    psd: &PowerSpectrum,
    t_event: f64,
) -> Result<(CcfResult, f64)> {
    let hc = condition_template(&ctx.template, psd, cfg)?;
    let tau0 = decorrelation_time(&hc)?;
    let sc = condition(strain, psd, cfg)?;
    let w = window_at(&sc, t_event, hc.len())?;
    Ok((normalized_ccf(&w, &hc, ctx.th() / 2.0)?.with_tau0(tau0), tau0))
}

fn snr_figure(snr: &SnrSeries, around: f64) -> Figure {
    let mut f = Figure::new("snr", &["t_s", "rho", "rho_reweighted"]);
    for i in 0..snr.len() {
        let t = snr.time_at(i);
        if (t - around).abs() <= 2.0 {
            f.rows.push(vec![t, snr.rho[i], snr.rho_reweighted[i]]);
        }
    }
    f
}

fn ccf_figure(c: &CcfResult) -> Figure {
    let mut f = Figure::new("ccf", &["lag_s", "ccf"]);
    f.rows = c.lags.iter().zip(&c.values).map(|(l, v)| vec![*l, *v]).collect();
    f
}

fn fill_mf(mut r: TrialReport, snr: &SnrSeries) -> TrialReport {
    r.peak_rho = Some(snr.raw_peak().value);
    r.peak_rho_hat = Some(snr.peak.value);
    r.peak_time = Some(snr.peak.time);
    r
}

fn fill_ccf(mut r: TrialReport, c: &CcfResult) -> TrialReport {
    r.peak_abs_ccf = Some(c.peak_abs());
    r.r3 = Some(c.r3);
    r.metrics.insert("ccf_peak_lag_s".into(), c.peak_lag);
    r
}

/// Noise block plus `signal` at the injection time, analysed by both engines.
fn mf_trial(
    cfg: &ScenarioConfig,
    ctx: &Context,
    seed: u64,
    signal: impl FnOnce(&TimeSeries) -> Result<TimeSeries>,
    mut r: TrialReport,
    figs: bool,
) -> Result<(TrialReport, Vec<Figure>)> {
    let noise = colored_noise(&ctx.model, cfg.block_duration(), cfg.fs, substream(seed, TAG_NOISE))?;
    let sig = signal(&noise)?;
    let t_at = cfg.inject_at();
    let strain = inject(&noise, &sig, t_at)?;
    let psd = psd_for(cfg, ctx, &strain)?;
    let snr = matched_filter(&strain, &ctx.template, &psd, &cfg.mf)?;
    let (c, tau0) = event_ccf(cfg, ctx, &strain, &psd, t_at)?;
    r = fill_ccf(fill_mf(r, &snr), &c).metric("tau0_s", tau0);
    let figures = if figs { vec![snr_figure(&snr, t_at), ccf_figure(&c)] } else { vec![] };
    Ok((r, figures))
}

fn bogus_waveform(cfg: &ScenarioConfig, ctx: &Context, seed: u64) -> Result<(TimeSeries, f64)> {
    let p = &cfg.params;
    let spec = BogusSpec {
        sigma_phase: p.sigma_phase.unwrap_or(DEFAULT_BOGUS_SIGMA_PHASE),
        sigma_amp: p.sigma_amp.unwrap_or(0.0),
        smoothing_bw: Some(p.smoothing_bw.unwrap_or(DEFAULT_SMOOTHING_BW)),
        seed: substream(seed, TAG_BOGUS),
    };
    let tpl = ctx.decomposition.as_ref().expect("bogus scenarios decompose the template");
    let b = make_bogus(tpl, &spec)?;
    let (_, rel) = template_error(&ctx.template, &b)?;
    Ok((b, rel))
}

/// Amplitude at which the ideal template reaches `target_snr` against the
/// model PSD on the analysis block grid.
fn injection_amplitude(cfg: &ScenarioConfig, ctx: &Context) -> Result<f64> {
    let n = (cfg.block_duration() * cfg.fs).round() as usize;
    let n = match cfg.mf.block_len {
        Some(b) => n.min((b * cfg.fs).round() as usize),
        None => n,
    };
    let hh = sigma_norm_on_grid(&ctx.template, &ctx.model_psd, n)?;
    Ok(cfg.params.target_snr.unwrap_or(DEFAULT_TARGET_SNR) / hh.sqrt())
}

fn white_awgn(like: &TimeSeries, std: f64, seed: u64) -> Result<TimeSeries> {
    let fs = like.fs();
    let n = colored_noise(&PsdModel::flat(2.0 / fs), like.len() as f64 / fs, fs, seed)?;
    let n = n.slice_samples(0, like.len().min(n.len()))?;
    Ok(n.scaled(std / n.std()))
}

fn add(a: &TimeSeries, b: &TimeSeries) -> Result<TimeSeries> {
    a.with_samples(a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect())
}

fn run_trial(cfg: &ScenarioConfig, ctx: &Context, index: usize) -> Result<(TrialReport, Vec<Figure>)> {
    let seed = trial_seed(cfg.seed_base, index as u64);
    let p = &cfg.params;
    let figs = index == 0;
    let r = TrialReport::new(index, seed);
    let th = ctx.th();
    let (r, figures) = match cfg.name {
        ScenarioName::MfSineMisfire => {
            let spec = BurstSpec {
                kind: BurstKind::SineDecay {
                    f0: p.sine_f0.unwrap_or(64.0),
                    decay_tau: Some(p.decay_tau.unwrap_or(DEFAULT_DECAY_TAU)),
                },
                duration: p.burst_duration.unwrap_or(1.0),
                sigma_ratio: p.sigma_ratio.unwrap_or(DEFAULT_SINE_SIGMA_RATIO),
                seed: substream(seed, TAG_BURST),
            };
            mf_trial(cfg, ctx, seed, |noise| burst(&spec, noise), r, figs)?
        }
        ScenarioName::MfAwgnMisfire => {
            let spec = BurstSpec::awgn(
                p.burst_duration.unwrap_or(1.0),
                p.sigma_ratio.unwrap_or(DEFAULT_AWGN_SIGMA_RATIO),
                substream(seed, TAG_BURST),
            );
            mf_trial(cfg, ctx, seed, |noise| burst(&spec, noise), r, figs)?
        }
        ScenarioName::MfBogus => {
            let (b, rel) = bogus_waveform(cfg, ctx, seed)?;
            let a = injection_amplitude(cfg, ctx)?;
            let r = r.metric("bogus_rel_l2", rel);
            mf_trial(cfg, ctx, seed, |_| Ok(b.scaled(a)), r, figs)?
        }
        ScenarioName::CcfBogus => {
            let (b, rel) = bogus_waveform(cfg, ctx, seed)?;
            let a = injection_amplitude(cfg, ctx)?;
            let direct = normalized_ccf(&ctx.template, &b, th / 2.0)?;
            let noise = colored_noise(&ctx.model, cfg.block_duration(), cfg.fs, substream(seed, TAG_NOISE))?;
            let t_at = cfg.inject_at();
            let strain = inject(&noise, &b.scaled(a), t_at)?;
            let psd = psd_for(cfg, ctx, &strain)?;
            let (c, tau0) = event_ccf(cfg, ctx, &strain, &psd, t_at)?;
            let r = fill_ccf(r, &c)
                .metric("bogus_rel_l2", rel)
                .metric("tau0_s", tau0)
                .metric("template_vs_bogus_peak_abs_ccf", direct.peak_abs());
            (r, if figs { vec![ccf_figure(&c)] } else { vec![] })
        }
        ScenarioName::H1l1Ccf => h1l1_trial(cfg, ctx, seed, r, figs)?,
        ScenarioName::RefSystems => ref_systems_trial(cfg, ctx, seed, r, figs)?,
        ScenarioName::WindowCompare => window_compare_trial(cfg, ctx, seed, r, figs)?,
        ScenarioName::WhitenDistortion => whiten_distortion_trial(cfg, ctx, r, figs)?,
        ScenarioName::RunningBaseline => running_trial(cfg, ctx, seed, r, figs)?,
        ScenarioName::CircularArtifact => circular_trial(cfg, ctx, r, figs)?,
    };
    Ok((r.with_verdicts(&cfg.thresholds), figures))
}

fn h1l1_trial(
    cfg: &ScenarioConfig,
    ctx: &Context,
    seed: u64,
    r: TrialReport,
    figs: bool,
) -> Result<(TrialReport, Vec<Figure>)> {
    let (h1, l1, t_at) = match (&ctx.h1, &ctx.l1) {
        (Some(h1), Some(l1)) => {
            let t = cfg.inputs.event_time.ok_or_else(|| Error::Parameter("real strains need inputs.event_time".into()))?;
            (h1.clone(), l1.clone(), t)
        }
        _ => {
            let dur = cfg.block_duration();
            let mut h1 = colored_noise(&ctx.model, dur, cfg.fs, substream(seed, TAG_H1))?;
            let mut l1 = colored_noise(&ctx.model, dur, cfg.fs, substream(seed, TAG_L1))?;
            let t = cfg.inject_at();
            // noise only unless a coherent signal is requested
            if cfg.params.target_snr.is_some_and(|s| s > 0.0) {
                let a = injection_amplitude(cfg, ctx)?;
                h1 = inject(&h1, &ctx.template.scaled(a), t)?;
                l1 = inject(&l1, &ctx.template.scaled(a), t)?;
            }
            (h1, l1, t)
        }
    };
    let psd_h = psd_for(cfg, ctx, &h1)?;
    let psd_l = psd_for(cfg, ctx, &l1)?;
    let hc = condition_template(&ctx.template, &ctx.model_psd, cfg)?;
    let tau0 = decorrelation_time(&hc)?;
    let n = hc.len();
    let wh = window_at(&condition(&h1, &psd_h, cfg)?, t_at, n)?;
    let wl = window_at(&condition(&l1, &psd_l, cfg)?, t_at, n)?;
    let c = normalized_ccf(&wh, &wl, ctx.th() / 2.0)?.with_tau0(tau0);
    let r = fill_ccf(r, &c).metric("tau0_s", tau0);
    Ok((r, if figs { vec![ccf_figure(&c)] } else { vec![] }))
}

fn ref_systems_trial(
    cfg: &ScenarioConfig,
    ctx: &Context,
    seed: u64,
    r: TrialReport,
    figs: bool,
) -> Result<(TrialReport, Vec<Figure>)> {
    let ratio = cfg.params.noise_ratio.unwrap_or(1.0);
    let max_lag = ctx.th() / 2.0;
    let hc = condition_template(&ctx.template, &ctx.model_psd, cfg)?;
    let n = hc.len();

    // A: the conditioned template against itself
    let a = normalized_ccf(&hc, &hc, max_lag)?;
    let r3_a = a.clone().with_tau0(decorrelation_time(&hc)?).r3;
    let tau0 = decorrelation_time(&hc)?;

    // 1: template plus independent white noise on each side
    let sd = ratio * hc.std();
    let s1 = add(&hc, &white_awgn(&hc, sd, substream(seed, TAG_H1))?)?;
    let s2 = add(&hc, &white_awgn(&hc, sd, substream(seed, TAG_L1))?)?;
    let c1 = normalized_ccf(&s1, &s2, max_lag)?;
    let own_tau1 = c1.tau0;
    let c1 = c1.with_tau0(tau0);

    // 2: template plus conditioned detector-like noise on each side
    let t_at = cfg.inject_at();
    let (n1, n2) = match (&ctx.h1, &ctx.l1) {
        (Some(h1), Some(l1)) => (h1.clone(), l1.clone()),
        _ => {
            let dur = cfg.block_duration();
            (
                colored_noise(&ctx.model, dur, cfg.fs, substream(seed, TAG_NOISE))?,
                colored_noise(&ctx.model, dur, cfg.fs, substream(seed, TAG_BURST))?,
            )
        }
    };
    let p1 = psd_for(cfg, ctx, &n1)?;
    let p2 = psd_for(cfg, ctx, &n2)?;
    let w1 = window_at(&condition(&n1, &p1, cfg)?, t_at, n)?;
    let w2 = window_at(&condition(&n2, &p2, cfg)?, t_at, n)?;
    let amp = w1.std().max(w2.std()) / (ratio * hc.std());
    let c2 = normalized_ccf(&add(&w1, &hc.scaled(amp))?, &add(&w2, &hc.scaled(amp))?, max_lag)?;
    let own_tau2 = c2.tau0;
    let c2 = c2.with_tau0(tau0);

    let r = fill_ccf(r, &c1)
        .metric("tau0_ref_a_s", tau0)
        .metric("r3_ref_a", r3_a)
        .metric("tau0_sys1_s", own_tau1)
        .metric("tau0_sys2_s", own_tau2)
        .metric("r3_sys2", c2.r3)
        .metric("peaky_sys2", f64::from(u8::from(c2.r3 < cfg.thresholds.r3_threshold)));
    let figures = if figs {
        let mut f = Figure::new("ccf", &["lag_s", "ref_a", "sys1", "sys2"]);
        f.rows = (0..a.lags.len()).map(|i| vec![a.lags[i], a.values[i], c1.values[i], c2.values[i]]).collect();
        vec![f]
    } else {
        vec![]
    };
    Ok((r, figures))
}

fn window_compare_trial(
    cfg: &ScenarioConfig,
    ctx: &Context,
    seed: u64,
    r: TrialReport,
    figs: bool,
) -> Result<(TrialReport, Vec<Figure>)> {
    let fs = cfg.fs;
    let long = cfg.params.long_window.unwrap_or(20.0);
    let h = &ctx.template;
    let tau0 = decorrelation_time(h)?;
    // unit-variance white noise; optimal SNR of a*h is a*|h|
    let noise = colored_noise(&PsdModel::flat(2.0 / fs), long, fs, substream(seed, TAG_NOISE))?;
    let a = cfg.params.target_snr.unwrap_or(8.0) / h.energy().sqrt();
    let t_at = cfg.params.inject_at.unwrap_or(long / 2.0);
    let strain = inject(&noise, &h.scaled(a), t_at)?;

    let short = normalized_ccf(&window_at(&strain, t_at, h.len())?, h, ctx.th() / 2.0)?.with_tau0(tau0);
    let padded = inject(&TimeSeries::zeros(fs, 0.0, strain.len())?, h, t_at)?;
    let wide = normalized_ccf(&strain, &padded, long / 2.0)?.with_tau0(tau0);

    let r = fill_ccf(r, &short)
        .metric("r3_long", wide.r3)
        .metric("peak_abs_ccf_long", wide.peak_abs())
        .metric("short_below_long", f64::from(u8::from(short.r3 < wide.r3)));
    Ok((r, if figs { vec![ccf_figure(&short)] } else { vec![] }))
}

/// Unit-energy, sign-aligned relative L2 distance between two shapes.
fn shape_error(reference: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    let a = reference.normalize_unit_energy()?;
    let b = y.normalize_unit_energy()?;
    let dot: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum();
    let b = if dot < 0.0 { b.scaled(-1.0) } else { b };
    Ok(template_error(&a, &b)?.1)
}

fn whiten_distortion_trial(cfg: &ScenarioConfig, ctx: &Context, r: TrialReport, figs: bool) -> Result<(TrialReport, Vec<Figure>)> {
    let fs = cfg.fs;
    let dur = cfg.block_duration();
    let h = ctx.template.scaled(injection_amplitude(cfg, ctx)?);
    let peak = h.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let line = line_interference(
        cfg.params.line_amplitude.unwrap_or(1.0) * peak,
        60.0,
        cfg.params.line_delta.unwrap_or(DEFAULT_LINE_DELTA),
        dur,
        fs,
    )?;
    let t_at = cfg.inject_at();
    let s = inject(&line, &h, t_at)?;
    // the noise PSD as it would be estimated with the interference present
    let lp = welch_psd_default(&line)?;
    let psd = if lp.len() == ctx.model_psd.len() && lp.df() == ctx.model_psd.df() {
        PowerSpectrum::new(lp.df(), ctx.model_psd.values().iter().zip(lp.values()).map(|(a, b)| a + b).collect())?
    } else {
        let f = ctx.model_psd.frequencies();
        PowerSpectrum::new(ctx.model_psd.df(), f.iter().map(|&f| ctx.model_psd.value_at(f) + lp.value_at(f)).collect())?
    };
    let psd = &psd;
    let lines = detect_lines(psd, DEFAULT_LINE_THRESHOLD, DEFAULT_MEDIAN_WINDOW_HZ)?;
    let full = window_at(&whiten_full(&s, psd)?, t_at, h.len())?;
    let loc = window_at(&whiten_localized(&s, psd, &lines)?, t_at, h.len())?;
    let h = &h;
    let e_full = shape_error(h, &full)?;
    let e_loc = shape_error(h, &loc)?;
    let r = r
        .metric("l2_full", e_full)
        .metric("l2_localized", e_loc)
        .metric("ratio_full_over_localized", e_full / e_loc)
        .metric("n_line_bands", lines.len() as f64);
    let figures = if figs {
        let mut f = Figure::new("whiten", &["t_s", "template", "full_band", "localized"]);
        let (hn, fnorm, lnorm) = (h.normalize_unit_energy()?, full.normalize_unit_energy()?, loc.normalize_unit_energy()?);
        f.rows = (0..h.len())
            .map(|i| vec![t_at + i as f64 / fs, hn.samples()[i], fnorm.samples()[i], lnorm.samples()[i]])
            .collect();
        vec![f]
    } else {
        vec![]
    };
    Ok((r, figures))
}

fn running_trial(
    cfg: &ScenarioConfig,
    ctx: &Context,
    seed: u64,
    r: TrialReport,
    figs: bool,
) -> Result<(TrialReport, Vec<Figure>)> {
    let edge = cfg.params.edge.unwrap_or(2.0);
    let (long, mut excl) = match &ctx.h1 {
        Some(h1) => {
            let ex = cfg.inputs.event_time.map(|t| vec![(t, t + ctx.th())]).unwrap_or_default();
            (h1.clone(), ex)
        }
        None => (colored_noise(&ctx.model, cfg.params.block_duration.unwrap_or(64.0), cfg.fs, substream(seed, TAG_NOISE))?, vec![]),
    };
    let (t0, t1) = (long.t0(), long.t0() + long.duration());
    excl.push((t0 - 1.0, t0 + edge));
    excl.push((t1 - edge, t1 + 1.0));
    let psd = psd_for(cfg, ctx, &long)?;
    let lc = condition(&long, &psd, cfg)?;
    let hc = condition_template(&ctx.template, &psd, cfg)?;
    let pts = running_window_ccf(&lc, &hc, cfg.params.hop.unwrap_or(1.0), &excl)?;
    let n = pts.len() as f64;
    let max_peak = pts.iter().map(|p| p.peak_abs_ccf).fold(0.0, f64::max);
    let min_r3 = pts.iter().map(|p| p.r3).fold(f64::INFINITY, f64::min);
    let mut r = r
        .metric("n_windows", n)
        .metric("mean_peak_abs_ccf", pts.iter().map(|p| p.peak_abs_ccf).sum::<f64>() / n)
        .metric("peaky_window_fraction", pts.iter().filter(|p| p.peaky).count() as f64 / n);
    r.peak_abs_ccf = Some(max_peak);
    r.r3 = Some(min_r3);
    let figures = if figs {
        let mut f = Figure::new("running", &["t_start_s", "peak_abs_ccf", "r3"]);
        f.rows = pts.iter().map(|p| vec![p.t_start, p.peak_abs_ccf, p.r3]).collect();
        vec![f]
    } else {
        vec![]
    };
    Ok((r, figures))
}

fn circular_trial(cfg: &ScenarioConfig, ctx: &Context, r: TrialReport, figs: bool) -> Result<(TrialReport, Vec<Figure>)> {
    let fs = cfg.fs;
    let h = &ctx.template;
    let nh = h.len();
    let l = (cfg.params.block_duration.unwrap_or(4.0) * fs).round() as usize;
    let frac = cfg.params.straddle_fraction.unwrap_or(0.7);
    if !(frac > 0.0 && frac < 1.0) || l < 2 * nh {
        return Err(Error::Parameter("straddle_fraction must be in (0, 1) and the block at least twice the template".into()));
    }
    let k = (frac * nh as f64).round() as usize;
    let mut x = vec![0.0; l];
    x[..k].copy_from_slice(&h.samples()[nh - k..]);
    let strain = TimeSeries::new(fs, 0.0, x)?;
    let mf = |mode| MfConfig { block_len: None, mode, reweight: Reweight::Off, band: cfg.mf.band };
    let circ = matched_filter(&strain, h, &ctx.model_psd, &mf(MfMode::Circular))?;
    let lin = matched_filter(&strain, h, &ctx.model_psd, &mf(MfMode::CyclicPrefix))?;
    let (pc, pl) = (circ.raw_peak(), lin.raw_peak());
    let sep = (pc.index as f64 - pl.index as f64).abs() / fs;
    let mut r = fill_mf(r, &circ)
        .metric("wrap_index", (l - (nh - k)) as f64)
        .metric("peak_index_circular", pc.index as f64)
        .metric("peak_index_linear", pl.index as f64)
        .metric("peak_rho_linear", pl.value)
        .metric("separation_s", sep)
        .metric("artifact", f64::from(u8::from(sep > ctx.th() / 2.0)));
    r.peak_time = Some(pc.time);
    let figures = if figs {
        let mut f = Figure::new("snr", &["t_s", "rho_circular", "rho_linear"]);
        f.rows = (0..l).map(|i| vec![i as f64 / fs, circ.rho[i], lin.rho[i]]).collect();
        vec![f]
    } else {
        vec![]
    };
    Ok((r, figures))
}

/// Run every trial of `cfg` (in parallel) and aggregate.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    let results: Vec<(TrialReport, Vec<Figure>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, &ctx, i).map_err(|e| Error::Trial { index: i, source: Box::new(e) }))
        .collect::<Result<_>>()?;
    let mut figures = vec![];
    let mut trials = Vec::with_capacity(results.len());
    for (t, f) in results {
        if t.trial_index == 0 {
            figures = f;
        }
        trials.push(t);
    }
    let summary = summarize(cfg, &trials);
    Ok(ScenarioOutcome { summary, trials, figures })
}

/// Statistics of `trials` runs of a scenario with its default settings.
pub fn monte_carlo(scenario: ScenarioName, trials: usize, seed_base: u64) -> Result<Summary> {
    let cfg = ScenarioConfig { trials, seed_base, ..ScenarioConfig::new(scenario) };
    Ok(run_scenario(&cfg)?.summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const R3: f64 = crate::detection::R3_THRESHOLD;

    fn quick(name: ScenarioName, trials: usize) -> ScenarioOutcome {
        let mut cfg = ScenarioConfig::new(name);
        cfg.trials = trials;
        cfg.seed_base = 11;
        run_scenario(&cfg).unwrap()
    }

    #[test]
    fn every_scenario_runs_and_is_deterministic() {
        for name in ScenarioName::ALL {
            let a = quick(name, 2);
            let b = quick(name, 2);
            assert_eq!(a.summary, b.summary, "{name}");
            assert_eq!(a.trials.len(), 2);
            assert!(!a.figures.is_empty(), "{name}");
            for t in &a.trials {
                assert_eq!(t.fired, t.peak_rho_hat.map(|r| r > 5.0));
                assert_eq!(t.peaky, t.r3.map(|r| r < R3));
            }
        }
    }

    #[test]
    fn circular_wrap_peak() {
        let o = quick(ScenarioName::CircularArtifact, 1);
        let m = &o.trials[0].metrics;
        assert_eq!(m["artifact"], 1.0);
        // linear correlation peaks where the partial template starts, before zero
        assert!(m["peak_index_linear"] < 0.2 * 4096.0);
        assert!((m["peak_index_circular"] - m["wrap_index"]).abs() <= 1.0);
    }

    #[test]
    fn localized_beats_full_band() {
        let o = quick(ScenarioName::WhitenDistortion, 1);
        let m = &o.trials[0].metrics;
        assert!(m["l2_localized"] < m["l2_full"]);
    }

    #[test]
    fn trial_errors_carry_index() {
        let mut cfg = ScenarioConfig::new(ScenarioName::MfSineMisfire);
        cfg.trials = 1;
        cfg.params.sine_f0 = Some(5000.0);
        let e = run_scenario(&cfg).unwrap_err();
        assert!(matches!(e, Error::Trial { index: 0, .. }), "{e}");
    }

    #[test]
    fn real_strain_fs_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h1.txt");
        let ts = TimeSeries::zeros(2048.0, 0.0, 4096).unwrap();
        crate::series::save_strain(&ts, &p, StrainFormat::from_path(&p)).unwrap();
        let mut cfg = ScenarioConfig::new(ScenarioName::H1l1Ccf);
        cfg.inputs.h1 = Some(p.clone());
        cfg.inputs.l1 = Some(p);
        assert!(run_scenario(&cfg).is_err());
    }
}
