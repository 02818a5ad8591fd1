//! Python bindings. Series cross the boundary as lists of floats; structured
//! results come back as plain dicts.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use gwxlab_core::conditioning::{
    detect_lines, whiten_full, whiten_localized, Bandpass, FilterMode, DEFAULT_LINE_THRESHOLD, DEFAULT_MEDIAN_WINDOW_HZ,
};
use gwxlab_core::detection::{self, MfConfig, MfMode, Reweight};
use gwxlab_core::harness::{self, FalseAlarmParams, ScenarioConfig, ScenarioName};
use gwxlab_core::series::{load_strain, save_strain, welch_psd_default, StrainFormat};
use gwxlab_core::simulation::{self, PsdModel};
use gwxlab_core::templates::{self, BogusSpec, StockTemplate, DEFAULT_SMOOTHING_BW};
use gwxlab_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait Py<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> Py<T> for gwxlab_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn json_obj<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

/// Uniformly sampled real series.
#[pyclass(name = "TimeSeries", module = "gwxlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTimeSeries {
    inner: gwxlab_core::TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    #[new]
    #[pyo3(signature = (fs, samples, t0 = 0.0))]
    fn new(fs: f64, samples: Vec<f64>, t0: f64) -> PyResult<Self> {
        Ok(Self { inner: gwxlab_core::TimeSeries::new(fs, t0, samples).py()? })
    }

    /// Read gwx-text or CSV (by extension).
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f = StrainFormat::from_path(&path);
        Ok(Self { inner: load_strain(&path, f).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let f = StrainFormat::from_path(&path);
        save_strain(&self.inner, &path, f).py()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.fs()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    fn std(&self) -> f64 {
        self.inner.std()
    }

    fn scaled(&self, a: f64) -> Self {
        Self { inner: self.inner.scaled(a) }
    }

    fn slice(&self, t_start: f64, duration: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.slice_window(t_start, duration).py()? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("TimeSeries(fs={}, n={}, t0={})", self.inner.fs(), self.inner.len(), self.inner.t0())
    }
}

/// One-sided PSD on a uniform frequency grid from 0 Hz.
#[pyclass(name = "PowerSpectrum", module = "gwxlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPowerSpectrum {
    inner: gwxlab_core::PowerSpectrum,
}

#[pymethods]
impl PyPowerSpectrum {
    #[new]
    fn new(df: f64, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: gwxlab_core::PowerSpectrum::new(df, values).py()? })
    }

    /// Welch estimate: 4 s Blackman segments, 50% overlap.
    #[staticmethod]
    fn welch(ts: &PyTimeSeries) -> PyResult<Self> {
        Ok(Self { inner: welch_psd_default(&ts.inner).py()? })
    }

    /// Evaluate a PSD model (built-in LIGO-like when `path` is None) on a `df` grid.
    #[staticmethod]
    #[pyo3(signature = (fs, path = None, df = 0.25))]
    fn from_model(fs: f64, path: Option<PathBuf>, df: f64) -> PyResult<Self> {
        Ok(Self { inner: model(path)?.to_power_spectrum(fs, df).py()? })
    }

    #[getter]
    fn df(&self) -> f64 {
        self.inner.df()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn value_at(&self, f: f64) -> f64 {
        self.inner.value_at(f)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn model(path: Option<PathBuf>) -> PyResult<PsdModel> {
    match path {
        Some(p) => PsdModel::load(p).py(),
        None => Ok(PsdModel::ligo_like()),
    }
}

fn ts(inner: gwxlab_core::TimeSeries) -> PyTimeSeries {
    PyTimeSeries { inner }
}

#[pyfunction]
fn stock_template(name: &str, fs: f64) -> PyResult<PyTimeSeries> {
    let st: StockTemplate = name.parse().py()?;
    Ok(ts(st.waveform(fs).py()?))
}

#[pyfunction]
#[pyo3(signature = (duration, fs, seed, psd_model = None))]
fn colored_noise(duration: f64, fs: f64, seed: u64, psd_model: Option<PathBuf>) -> PyResult<PyTimeSeries> {
    Ok(ts(simulation::colored_noise(&model(psd_model)?, duration, fs, seed).py()?))
}

#[pyfunction]
fn inject(host: &PyTimeSeries, signal: &PyTimeSeries, t_at: f64) -> PyResult<PyTimeSeries> {
    Ok(ts(simulation::inject(&host.inner, &signal.inner, t_at).py()?))
}

/// Phase/amplitude-perturbed copy of `template`.
#[pyfunction]
#[pyo3(signature = (template, sigma_phase, seed, sigma_amp = 0.0, smoothing_bw = DEFAULT_SMOOTHING_BW, carrier_f0 = 0.0))]
fn make_bogus(
    template: &PyTimeSeries,
    sigma_phase: f64,
    seed: u64,
    sigma_amp: f64,
    smoothing_bw: f64,
    carrier_f0: f64,
) -> PyResult<PyTimeSeries> {
    let tpl = templates::extract_phase_amplitude(&template.inner, carrier_f0).py()?;
    let spec = BogusSpec { sigma_phase, sigma_amp, smoothing_bw: (smoothing_bw > 0.0).then_some(smoothing_bw), seed };
    Ok(ts(templates::make_bogus(&tpl, &spec).py()?))
}

/// `mode` is "full" or "localized"; localized detects line bands in `psd` first.
#[pyfunction]
#[pyo3(signature = (series, psd, mode = "full", line_threshold = DEFAULT_LINE_THRESHOLD, line_window_hz = DEFAULT_MEDIAN_WINDOW_HZ))]
fn whiten(
    series: &PyTimeSeries,
    psd: &PyPowerSpectrum,
    mode: &str,
    line_threshold: f64,
    line_window_hz: f64,
) -> PyResult<PyTimeSeries> {
    let out = match mode {
        "full" => whiten_full(&series.inner, &psd.inner),
        "localized" => detect_lines(&psd.inner, line_threshold, line_window_hz)
            .and_then(|lines| whiten_localized(&series.inner, &psd.inner, &lines)),
        other => return Err(PyValueError::new_err(format!("unknown whitening mode `{other}`"))),
    };
    Ok(ts(out.py()?))
}

#[pyfunction]
#[pyo3(signature = (series, f_lo, f_hi, order = 4, causal = false))]
fn bandpass(series: &PyTimeSeries, f_lo: f64, f_hi: f64, order: usize, causal: bool) -> PyResult<PyTimeSeries> {
    let bp = Bandpass::design(series.inner.fs(), f_lo, f_hi, order).py()?;
    let mode = if causal { FilterMode::Causal } else { FilterMode::ZeroPhase };
    Ok(ts(bp.apply(&series.inner, mode).py()?))
}

/// Returns a dict with `rho`, `rho_reweighted`, `peak` and `sigma`.
#[pyfunction]
#[pyo3(signature = (strain, template, psd, mode = "circular", block_len = Some(32.0), chi2_bins = 16))]
fn matched_filter<'py>(
    py: Python<'py>,
    strain: &PyTimeSeries,
    template: &PyTimeSeries,
    psd: &PyPowerSpectrum,
    mode: &str,
    block_len: Option<f64>,
    chi2_bins: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: MfMode = mode.parse().py()?;
    let reweight = if chi2_bins == 0 { Reweight::Off } else { Reweight::Chi2 { n_bins: chi2_bins } };
    let cfg = MfConfig { block_len, mode, reweight, band: None };
    let snr = py.detach(|| detection::matched_filter(&strain.inner, &template.inner, &psd.inner, &cfg)).py()?;
    json_obj(
        py,
        &serde_json::json!({
            "rho": snr.rho,
            "rho_reweighted": snr.rho_reweighted,
            "peak": { "time": snr.peak.time, "value": snr.peak.value, "index": snr.peak.index },
            "sigma": snr.sigma,
            "fired": snr.fired(),
        }),
    )
}

/// Returns a dict with `lags`, `values`, `peak_value`, `peak_lag`, `tau0`, `r3` and `peaky`.
#[pyfunction]
#[pyo3(signature = (a, b, max_lag, tau0 = None))]
fn normalized_ccf<'py>(
    py: Python<'py>,
    a: &PyTimeSeries,
    b: &PyTimeSeries,
    max_lag: f64,
    tau0: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut c = detection::normalized_ccf(&a.inner, &b.inner, max_lag).py()?;
    if let Some(t) = tau0 {
        if !(t > 0.0) {
            return Err(PyValueError::new_err("tau0 must be positive"));
        }
        c = c.with_tau0(t);
    }
    json_obj(
        py,
        &serde_json::json!({
            "lags": c.lags,
            "values": c.values,
            "peak_value": c.peak_value,
            "peak_lag": c.peak_lag,
            "tau0": c.tau0,
            "r3": c.r3,
            "peaky": c.peaky,
        }),
    )
}

#[pyfunction]
fn decorrelation_time(series: &PyTimeSeries) -> PyResult<f64> {
    detection::decorrelation_time(&series.inner).py()
}

#[pyfunction]
fn false_alarm_rate(n_b: f64, t: f64, t_b: f64) -> PyResult<f64> {
    harness::false_alarm_rate(&FalseAlarmParams { n_b, t, t_b }).py()
}

#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    ScenarioName::ALL.iter().map(|n| n.as_str()).collect()
}

/// Run a scenario; returns the summary dict and writes the report when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (name, trials = None, seed_base = 0, config_json = None, out_dir = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    name: &str,
    trials: Option<usize>,
    seed_base: u64,
    config_json: Option<&str>,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let n: ScenarioName = name.parse().py()?;
    let mut cfg = match config_json {
        Some(j) => ScenarioConfig::from_json(j).py()?,
        None => ScenarioConfig { seed_base, ..ScenarioConfig::new(n) },
    };
    if cfg.name != n {
        return Err(PyValueError::new_err(format!("config is for `{}`", cfg.name)));
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let outcome = py.detach(|| harness::run_scenario(&cfg)).py()?;
    if let Some(d) = out_dir {
        harness::emit_report(&outcome, d).py()?;
    }
    json_obj(py, &outcome.summary)
}

#[pymodule]
fn gwxlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PyPowerSpectrum>()?;
    m.add_function(wrap_pyfunction!(stock_template, m)?)?;
    m.add_function(wrap_pyfunction!(colored_noise, m)?)?;
    m.add_function(wrap_pyfunction!(inject, m)?)?;
    m.add_function(wrap_pyfunction!(make_bogus, m)?)?;
    m.add_function(wrap_pyfunction!(whiten, m)?)?;
    m.add_function(wrap_pyfunction!(bandpass, m)?)?;
    m.add_function(wrap_pyfunction!(matched_filter, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_ccf, m)?)?;
    m.add_function(wrap_pyfunction!(decorrelation_time, m)?)?;
    m.add_function(wrap_pyfunction!(false_alarm_rate, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("SNR_THRESHOLD", detection::SNR_THRESHOLD)?;
    m.add("R3_THRESHOLD", detection::R3_THRESHOLD)?;
    Ok(())
}
