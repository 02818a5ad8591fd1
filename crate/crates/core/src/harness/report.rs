use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, Thresholds};
use crate::error::{Error, Result};

pub const SUMMARY_SCHEMA: &str = "gwxlab-summary/1";

/// One Monte-Carlo trial. Verdicts are always derived from the stored peaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial_index: usize,
    pub seed: u64,
    pub peak_rho: Option<f64>,
    /// Peak reweighted SNR.
    pub peak_rho_hat: Option<f64>,
    pub peak_time: Option<f64>,
    pub peak_abs_ccf: Option<f64>,
    pub r3: Option<f64>,
    pub fired: Option<bool>,
    pub peaky: Option<bool>,
    /// Scenario-specific numbers.
    pub metrics: BTreeMap<String, f64>,
}

impl TrialReport {
    pub fn new(trial_index: usize, seed: u64) -> Self {
        Self {
            trial_index,
            seed,
            peak_rho: None,
            peak_rho_hat: None,
            peak_time: None,
            peak_abs_ccf: None,
            r3: None,
            fired: None,
            peaky: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.to_string(), v);
        self
    }

    /// Fill `fired` and `peaky` from the stored peaks.
    pub fn with_verdicts(mut self, t: &Thresholds) -> Self {
        self.fired = self.peak_rho_hat.map(|r| r > t.snr_threshold);
        self.peaky = self.r3.map(|r| r < t.r3_threshold);
        self
    }
}

/// A small table written as `<scenario>-<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Figure {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

/// Linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let i = h.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}

pub fn quantiles(values: &[f64]) -> Option<Quantiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quantiles { q05: quantile(&v, 0.05), q50: quantile(&v, 0.5), q95: quantile(&v, 0.95) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub scenario: String,
    pub description: String,
    pub trials: usize,
    pub seed_base: u64,
    pub thresholds: Thresholds,
    pub fired_fraction: Option<f64>,
    pub peaky_fraction: Option<f64>,
    /// Keys: `peak_rho`, `peak_rho_hat`, `peak_abs_ccf`, `r3`.
    pub quantiles: BTreeMap<String, Quantiles>,
    /// Mean of each per-trial metric.
    pub metric_means: BTreeMap<String, f64>,
    pub config: ScenarioConfig,
}

fn fraction(flags: impl Iterator<Item = Option<bool>>) -> Option<f64> {
    let v: Vec<bool> = flags.flatten().collect();
    (!v.is_empty()).then(|| v.iter().filter(|&&b| b).count() as f64 / v.len() as f64)
}

/// Aggregate trials; the result does not depend on their order.
pub fn summarize(cfg: &ScenarioConfig, trials: &[TrialReport]) -> Summary {
    let mut q = BTreeMap::new();
    let cols: [(&str, fn(&TrialReport) -> Option<f64>); 4] = [
        ("peak_rho", |t| t.peak_rho),
        ("peak_rho_hat", |t| t.peak_rho_hat),
        ("peak_abs_ccf", |t| t.peak_abs_ccf),
        ("r3", |t| t.r3),
    ];
    for (k, get) in cols {
        let v: Vec<f64> = trials.iter().filter_map(get).collect();
        if let Some(qs) = quantiles(&v) {
            q.insert(k.to_string(), qs);
        }
    }
    let keys: BTreeSet<&String> = trials.iter().flat_map(|t| t.metrics.keys()).collect();
    let metric_means = keys
        .into_iter()
        .map(|k| {
            let mut v: Vec<f64> = trials.iter().filter_map(|t| t.metrics.get(k).copied()).collect();
            v.sort_by(f64::total_cmp);
            (k.clone(), v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    Summary {
        schema: SUMMARY_SCHEMA.into(),
        scenario: cfg.name.as_str().into(),
        description: cfg.name.description().into(),
        trials: trials.len(),
        seed_base: cfg.seed_base,
        thresholds: cfg.thresholds,
        fired_fraction: fraction(trials.iter().map(|t| t.fired)),
        peaky_fraction: fraction(trials.iter().map(|t| t.peaky)),
        quantiles: q,
        metric_means,
        config: cfg.clone(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub summary: Summary,
    pub trials: Vec<TrialReport>,
    pub figures: Vec<Figure>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trials_csv(trials: &[TrialReport], path: impl AsRef<Path>) -> Result<()> {
    let keys: BTreeSet<&String> = trials.iter().flat_map(|t| t.metrics.keys()).collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> =
        ["trial_index", "seed", "peak_rho", "peak_rho_hat", "peak_time_s", "peak_abs_ccf", "r3", "fired", "peaky"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend(keys.iter().map(|k| k.to_string()));
    w.write_record(&header)?;
    for t in trials {
        let mut row = vec![
            t.trial_index.to_string(),
            t.seed.to_string(),
            opt(t.peak_rho),
            opt(t.peak_rho_hat),
            opt(t.peak_time),
            opt(t.peak_abs_ccf),
            opt(t.r3),
            opt(t.fired),
            opt(t.peaky),
        ];
        row.extend(keys.iter().map(|k| opt(t.metrics.get(*k))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `summary.json`, `trials.csv` and `<scenario>-<figure>.csv` into `out_dir`.
pub fn emit_report(outcome: &ScenarioOutcome, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if outcome.trials.is_empty() {
        return Err(Error::Parameter("no trial results to report".into()));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = vec![];

    let p = dir.join("summary.json");
    std::fs::write(&p, serde_json::to_string_pretty(&outcome.summary)? + "\n")?;
    written.push(p);

    let p = dir.join("trials.csv");
    write_trials_csv(&outcome.trials, &p)?;
    written.push(p);

    for fig in &outcome.figures {
        let p = dir.join(format!("{}-{}.csv", outcome.summary.scenario, fig.name));
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(&fig.header)?;
        for r in &fig.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        written.push(p);
    }
    Ok(written)
}
