use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gwxlab_core::conditioning::{
    detect_lines, whiten_full, whiten_localized, Bandpass, FilterMode, DEFAULT_LINE_THRESHOLD, DEFAULT_MEDIAN_WINDOW_HZ,
};
use gwxlab_core::detection::{
    decorrelation_time, matched_filter, normalized_ccf, running_window_ccf, write_running_csv, MfConfig, MfMode,
    Reweight, DEFAULT_BLOCK_LEN, DEFAULT_CHI2_BINS,
};
use gwxlab_core::harness::{emit_report, false_alarm_rate, run_scenario, FalseAlarmParams, ScenarioConfig, ScenarioName};
use gwxlab_core::series::{load_strain, save_strain, welch_psd, welch_psd_default, StrainFormat, Window};
use gwxlab_core::simulation::{colored_noise, inject, PsdModel};
use gwxlab_core::templates::{
    extract_phase_amplitude, load_template, make_bogus, save_template, template_error, BogusSpec, StockTemplate,
    TemplateMeta, DEFAULT_SMOOTHING_BW,
};
use gwxlab_core::{Error, PowerSpectrum, Result, TimeSeries};

#[derive(Parser)]
#[command(name = "gwxlab", version, about = "Matched filter vs short-window CCF experiments on strain-like data")]
struct Cli {
    /// Base seed for anything random.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sampling rate, Hz.
    #[arg(long, global = true, default_value_t = 4096.0)]
    fs: f64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// JSON scenario config (used by `scenario run`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the scenario names and exit.
    #[arg(long)]
    list_scenarios: bool,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coloured Gaussian noise from a PSD model.
    Noise {
        #[arg(long, default_value_t = 32.0)]
        duration: f64,
        /// psd_model.json; the built-in LIGO-like model otherwise.
        #[arg(long)]
        psd_model: Option<PathBuf>,
    },
    /// Write a stock chirp template and its metadata.
    Template {
        #[arg(long, default_value = "gw150914-like")]
        stock: String,
    },
    /// Perturb a template's phase and amplitude.
    Bogus {
        #[arg(long)]
        template: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sigma_phase: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma_amp: f64,
        /// Low-pass bandwidth of the perturbations, Hz; 0 leaves them white.
        #[arg(long, default_value_t = DEFAULT_SMOOTHING_BW)]
        smoothing_bw: f64,
        /// Carrier for the phase decomposition; taken from the metadata when omitted.
        #[arg(long)]
        f0: Option<f64>,
    },
    /// Add a signal into a host series.
    #[command(allow_negative_numbers = true)]
    Inject {
        #[arg(long)]
        host: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        /// Injection time, seconds on the host's clock.
        #[arg(long)]
        at: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Welch PSD estimate.
    Psd {
        #[arg(long)]
        input: PathBuf,
        /// Segment length, seconds (default 4).
        #[arg(long)]
        segment: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long, default_value = "blackman")]
        window: String,
    },
    /// Whiten against a PSD file or model, full-band or around line bands only
    Whiten {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        psd: PsdArgs,
        #[arg(long, value_enum, default_value_t = WhitenKind::Full)]
        whiten: WhitenKind,
        #[arg(long, default_value_t = DEFAULT_LINE_THRESHOLD)]
        line_threshold: f64,
        #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW_HZ)]
        line_window_hz: f64,
    },
    /// Butterworth band-pass.
    Bandpass {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "43:300", value_parser = parse_pair)]
        band: (f64, f64),
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Single forward pass instead of forward-backward.
        #[arg(long)]
        causal: bool,
    },
    /// Matched-filter SNR time series.
    Mf {
        #[arg(long)]
        strain: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[command(flatten)]
        psd: PsdArgs,
        #[arg(long, default_value = "circular")]
        mode: String,
        /// Block length, seconds; 0 analyses the whole series as one block.
        #[arg(long, default_value_t = DEFAULT_BLOCK_LEN)]
        block_len: f64,
        /// Chi-squared bins; 0 turns reweighting off.
        #[arg(long, default_value_t = DEFAULT_CHI2_BINS)]
        chi2_bins: usize,
        #[arg(long, value_parser = parse_pair)]
        band: Option<(f64, f64)>,
    },
    /// Normalized CCF of two equal-length windows.
    #[command(allow_negative_numbers = true)]
    Ccf {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Maximum lag, seconds (default half the window).
        #[arg(long)]
        max_lag: Option<f64>,
        /// Decorrelation time for r3; the CCF's own otherwise.
        #[arg(long)]
        tau0: Option<f64>,
        /// Take tau0 from this template's autocorrelation.
        #[arg(long, conflicts_with = "tau0")]
        tau0_from: Option<PathBuf>,
    },
    /// Slide a template-length window along a long series.
    #[command(allow_negative_numbers = true)]
    RunningCcf {
        #[arg(long)]
        long: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        hop: f64,
        /// Excluded interval `t0:t1`, repeatable.
        #[arg(long, value_parser = parse_pair)]
        exclude: Vec<(f64, f64)>,
    },
    /// List or run the built-in Monte-Carlo scenarios
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
    /// False-alarm probability `1 - exp(-T/T_b (1 + n_b))`.
    #[command(allow_negative_numbers = true)]
    Far {
        #[arg(long)]
        n_b: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        t_b: f64,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run a scenario and write summary.json, trials.csv and figure CSVs.
    Run {
        name: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
    },
    List,
}

#[derive(Args)]
struct PsdArgs {
    /// PSD as `f_hz,psd` CSV (as written by `gwxlab psd`).
    #[arg(long, conflicts_with = "psd_model")]
    psd: Option<PathBuf>,
    /// psd_model.json evaluated on a 0.25 Hz grid.
    #[arg(long)]
    psd_model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhitenKind {
    Full,
    Localized,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((p(a)?, p(b)?))
}

fn read(path: &Path) -> Result<TimeSeries> {
    load_strain(path, StrainFormat::from_path(path))
}

fn write(ts: &TimeSeries, dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    save_strain(ts, &p, StrainFormat::GwxText)?;
    Ok(p)
}

fn resolve_psd(args: &PsdArgs, data: &TimeSeries) -> Result<PowerSpectrum> {
    match (&args.psd, &args.psd_model) {
        (Some(p), _) => PowerSpectrum::read_csv(p),
        (None, Some(m)) => PsdModel::load(m)?.to_power_spectrum(data.fs(), 0.25),
        (None, None) => welch_psd_default(data),
    }
}

/// Write to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn print(v: serde_json::Value) {
    emit(&serde_json::to_string_pretty(&v).expect("json values serialize"));
}

fn run(cli: Cli) -> Result<()> {
    if cli.list_scenarios {
        list_scenarios();
        return Ok(());
    }
    let Some(cmd) = cli.cmd else {
        return Err(Error::Parameter("no subcommand given; see --help".into()));
    };
    let out = cli.out.as_path();
    if !matches!(cmd, Cmd::Far { .. } | Cmd::Scenario { cmd: ScenarioCmd::List }) {
        std::fs::create_dir_all(out)?;
    }
    match cmd {
        Cmd::Noise { duration, psd_model } => {
            let model = match psd_model {
                Some(p) => PsdModel::load(p)?,
                None => PsdModel::ligo_like(),
            };
            let ts = colored_noise(&model, duration, cli.fs, cli.seed)?;
            let p = write(&ts, out, "noise.txt")?;
            print(json!({ "output": p, "n": ts.len(), "std": ts.std() }));
        }
        Cmd::Template { stock } => {
            let st: StockTemplate = stock.parse()?;
            let spec = st.spec();
            let ts = st.waveform(cli.fs)?;
            let meta = TemplateMeta {
                f0: spec.carrier_f0,
                duration: spec.duration,
                sweep_law: Some(spec.law),
                seed: None,
                chirp: Some(spec),
            };
            let p = out.join(format!("{}.txt", st.name()));
            save_template(&ts, &meta, &p)?;
            print(json!({ "output": p, "n": ts.len(), "tau0_s": decorrelation_time(&ts)? }));
        }
        Cmd::Bogus { template, sigma_phase, sigma_amp, smoothing_bw, f0 } => {
            let (h, meta) = load_template(&template)?;
            let f0 = f0.or(meta.map(|m| m.f0)).unwrap_or(0.0);
            let tpl = extract_phase_amplitude(&h, f0)?;
            let spec = BogusSpec {
                sigma_phase,
                sigma_amp,
                smoothing_bw: (smoothing_bw > 0.0).then_some(smoothing_bw),
                seed: cli.seed,
            };
            let b = make_bogus(&tpl, &spec)?;
            let (_, rel) = template_error(&h, &b)?;
            let meta = TemplateMeta { f0, duration: b.duration(), sweep_law: None, seed: Some(cli.seed), chirp: None };
            let p = out.join("bogus.txt");
            save_template(&b, &meta, &p)?;
            print(json!({ "output": p, "rel_l2": rel }));
        }
        Cmd::Inject { host, signal, at, scale } => {
            let s = inject(&read(&host)?, &read(&signal)?.scaled(scale), at)?;
            let p = write(&s, out, "injected.txt")?;
            print(json!({ "output": p }));
        }
        Cmd::Psd { input, segment, overlap, window } => {
            let ts = read(&input)?;
            let win: Window = window.parse()?;
            let seg = ((segment.unwrap_or(4.0) * ts.fs()).round() as usize).min(ts.len());
            let psd = welch_psd(&ts, seg, overlap, win)?;
            let p = out.join("psd.csv");
            psd.write_csv(&p)?;
            print(json!({ "output": p, "df": psd.df(), "bins": psd.len() }));
        }
        Cmd::Whiten { input, psd, whiten, line_threshold, line_window_hz } => {
            let ts = read(&input)?;
            let s = resolve_psd(&psd, &ts)?;
            let (w, bands) = match whiten {
                WhitenKind::Full => (whiten_full(&ts, &s)?, vec![]),
                WhitenKind::Localized => {
                    let lines = detect_lines(&s, line_threshold, line_window_hz)?;
                    (whiten_localized(&ts, &s, &lines)?, lines)
                }
            };
            let p = write(&w, out, "whitened.txt")?;
            print(json!({ "output": p, "line_bands": bands }));
        }
        Cmd::Bandpass { input, band, order, causal } => {
            let ts = read(&input)?;
            let bp = Bandpass::design(ts.fs(), band.0, band.1, order)?;
            let mode = if causal { FilterMode::Causal } else { FilterMode::ZeroPhase };
            let y = bp.apply(&ts, mode)?;
            let p = write(&y, out, "bandpassed.txt")?;
            print(json!({ "output": p, "discard_samples": bp.discard_samples() }));
        }
        Cmd::Mf { strain, template, psd, mode, block_len, chi2_bins, band } => {
            let s = read(&strain)?;
            let h = read(&template)?;
            let p = resolve_psd(&psd, &s)?;
            let mode: MfMode = mode.parse()?;
            let cfg = MfConfig {
                block_len: (block_len > 0.0).then_some(block_len),
                mode,
                reweight: if chi2_bins == 0 { Reweight::Off } else { Reweight::Chi2 { n_bins: chi2_bins } },
                band,
            };
            let snr = matched_filter(&s, &h, &p, &cfg)?;
            let path = out.join("snr.csv");
            snr.write_csv(&path)?;
            let raw = snr.raw_peak();
            print(json!({
                "output": path,
                "peak_time_s": snr.peak.time,
                "peak_rho_reweighted": snr.peak.value,
                "peak_rho": raw.value,
                "peak_rho_time_s": raw.time,
                "sigma": snr.sigma,
                "fired": snr.fired(),
            }));
        }
        Cmd::Ccf { a, b, max_lag, tau0, tau0_from } => {
            let a = read(&a)?;
            let b = read(&b)?;
            let mut c = normalized_ccf(&a, &b, max_lag.unwrap_or(a.duration() / 2.0))?;
            let tau0 = match (tau0, tau0_from) {
                (Some(t), _) => Some(t),
                (None, Some(p)) => Some(decorrelation_time(&read(&p)?)?),
                _ => None,
            };
            if let Some(t) = tau0 {
                if !(t > 0.0) {
                    return Err(Error::Parameter(format!("tau0 must be positive, got {t}")));
                }
                c = c.with_tau0(t);
            }
            let p = out.join("ccf.csv");
            c.write_csv(&p)?;
            print(json!({
                "output": p,
                "peak_value": c.peak_value,
                "peak_lag_s": c.peak_lag,
                "tau0_s": c.tau0,
                "r3": c.r3,
                "peaky": c.peaky,
            }));
        }
        Cmd::RunningCcf { long, template, hop, exclude } => {
            let pts = running_window_ccf(&read(&long)?, &read(&template)?, hop, &exclude)?;
            let p = out.join("running.csv");
            write_running_csv(&pts, &p)?;
            let max = pts.iter().map(|p| p.peak_abs_ccf).fold(0.0, f64::max);
            print(json!({
                "output": p,
                "windows": pts.len(),
                "max_peak_abs_ccf": max,
                "peaky_windows": pts.iter().filter(|p| p.peaky).count(),
            }));
        }
        Cmd::Scenario { cmd: ScenarioCmd::List } => list_scenarios(),
        Cmd::Scenario { cmd: ScenarioCmd::Run { name, trials } } => {
            let mut cfg = match (&cli.config, &name) {
                (Some(p), _) => ScenarioConfig::load(p)?,
                (None, Some(n)) => ScenarioConfig::new(n.parse()?),
                (None, None) => return Err(Error::Parameter("scenario run needs a name or --config".into())),
            };
            if let Some(n) = name {
                let n: ScenarioName = n.parse()?;
                if n != cfg.name {
                    return Err(Error::Parameter(format!("config is for `{}` but `{n}` was requested", cfg.name)));
                }
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if cli.config.is_none() || cli.seed != 0 {
                cfg.seed_base = cli.seed;
            }
            if cli.config.is_none() {
                cfg.fs = cli.fs;
            }
            let outcome = run_scenario(&cfg)?;
            let files = emit_report(&outcome, out)?;
            let s = &outcome.summary;
            print(json!({
                "scenario": s.scenario,
                "trials": s.trials,
                "fired_fraction": s.fired_fraction,
                "peaky_fraction": s.peaky_fraction,
                "files": files,
            }));
        }
        Cmd::Far { n_b, t, t_b } => {
            let f = false_alarm_rate(&FalseAlarmParams { n_b, t, t_b })?;
            print(json!({ "n_b": n_b, "t": t, "t_b": t_b, "false_alarm_probability": f }));
        }
    }
    Ok(())
}

fn list_scenarios() {
    let lines: Vec<String> = ScenarioName::ALL.iter().map(|n| format!("{:<18} {}", n.as_str(), n.description())).collect();
    emit(&lines.join("\n"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
