use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::{MfConfig, R3_THRESHOLD, SNR_THRESHOLD};
use crate::error::{Error, Result};
use crate::simulation::PsdModel;
use crate::templates::StockTemplate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    MfSineMisfire,
    MfAwgnMisfire,
    MfBogus,
    CcfBogus,
    H1l1Ccf,
    RefSystems,
    WindowCompare,
    WhitenDistortion,
    RunningBaseline,
    CircularArtifact,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::MfSineMisfire,
        ScenarioName::MfAwgnMisfire,
        ScenarioName::MfBogus,
        ScenarioName::CcfBogus,
        ScenarioName::H1l1Ccf,
        ScenarioName::RefSystems,
        ScenarioName::WindowCompare,
        ScenarioName::WhitenDistortion,
        ScenarioName::RunningBaseline,
        ScenarioName::CircularArtifact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::MfSineMisfire => "mf-sine-misfire",
            ScenarioName::MfAwgnMisfire => "mf-awgn-misfire",
            ScenarioName::MfBogus => "mf-bogus",
            ScenarioName::CcfBogus => "ccf-bogus",
            ScenarioName::H1l1Ccf => "h1l1-ccf",
            ScenarioName::RefSystems => "ref-systems",
            ScenarioName::WindowCompare => "window-compare",
            ScenarioName::WhitenDistortion => "whiten-distortion",
            ScenarioName::RunningBaseline => "running-baseline",
            ScenarioName::CircularArtifact => "circular-artifact",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioName::MfSineMisfire => "decaying 64 Hz sine burst in coloured noise vs the matched filter",
            ScenarioName::MfAwgnMisfire => "white noise burst in coloured noise vs the matched filter",
            ScenarioName::MfBogus => "phase-noise bogus template injected into noise vs the matched filter",
            ScenarioName::CcfBogus => "bogus template in noise vs the short-window normalized CCF",
            ScenarioName::H1l1Ccf => "short-window CCF between two detector streams",
            ScenarioName::RefSystems => "reference systems A, 1 and 2: self and noisy-pair CCFs",
            ScenarioName::WindowCompare => "r3 over the event window vs a 20 s window",
            ScenarioName::WhitenDistortion => "template plus 60 Hz line: full-band vs localized whitening",
            ScenarioName::RunningBaseline => "running-window CCF noise baseline",
            ScenarioName::CircularArtifact => "template straddling a block edge: circular vs linear matched filter",
        }
    }

    /// Trial count used when the config does not give one.
    pub fn default_trials(self) -> usize {
        match self {
            ScenarioName::WhitenDistortion | ScenarioName::CircularArtifact => 1,
            ScenarioName::RunningBaseline => 10,
            _ => 100,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub snr_threshold: f64,
    pub r3_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { snr_threshold: SNR_THRESHOLD, r3_threshold: R3_THRESHOLD }
    }
}

/// Where the PSD used by the matched filter comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdSource {
    /// Welch estimate from the analysed block itself.
    #[default]
    Welch,
    /// The noise model the data was drawn from.
    Model,
}

/// Optional real-data inputs (gwx-text). When present they replace the
/// synthetic stand-ins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Inputs {
    pub template: Option<PathBuf>,
    pub h1: Option<PathBuf>,
    pub l1: Option<PathBuf>,
    /// Start of the event window in the supplied strains, seconds.
    pub event_time: Option<f64>,
    pub psd_model: Option<PathBuf>,
}

/// Scenario knobs. Unset fields take the scenario's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Noise block length, seconds.
    pub block_duration: Option<f64>,
    /// Where signals are injected, seconds into the block.
    pub inject_at: Option<f64>,
    pub sigma_ratio: Option<f64>,
    pub burst_duration: Option<f64>,
    pub sine_f0: Option<f64>,
    /// `null` in JSON keeps the default; a very large value approximates no decay.
    pub decay_tau: Option<f64>,
    pub sigma_phase: Option<f64>,
    pub sigma_amp: Option<f64>,
    pub smoothing_bw: Option<f64>,
    /// Expected matched-filter SNR of the ideal template at the injection amplitude.
    pub target_snr: Option<f64>,
    /// Noise std over template std for the reference systems.
    pub noise_ratio: Option<f64>,
    pub long_window: Option<f64>,
    pub line_amplitude: Option<f64>,
    pub line_delta: Option<f64>,
    pub hop: Option<f64>,
    pub edge: Option<f64>,
    /// Fraction of the template that falls inside the block for circular-artifact.
    pub straddle_fraction: Option<f64>,
    pub psd_source: Option<PsdSource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    #[serde(default = "default_trials_placeholder")]
    pub trials: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_fs")]
    pub fs: f64,
    #[serde(default = "default_template")]
    pub template: StockTemplate,
    #[serde(default)]
    pub psd_model: PsdModel,
    #[serde(default)]
    pub mf: MfConfig,
    /// Conditioning band for the CCF path.
    #[serde(default = "default_band")]
    pub band: (f64, f64),
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub params: Params,
}

fn default_trials_placeholder() -> usize {
    0
}
fn default_fs() -> f64 {
    4096.0
}
fn default_template() -> StockTemplate {
    StockTemplate::Gw150914Like
}
fn default_band() -> (f64, f64) {
    (43.0, 300.0)
}
fn default_order() -> usize {
    4
}

impl ScenarioConfig {
    pub fn new(name: ScenarioName) -> Self {
        let template = match name {
            ScenarioName::WindowCompare => StockTemplate::Gw170104Like,
            _ => StockTemplate::Gw150914Like,
        };
        Self {
            name,
            trials: name.default_trials(),
            seed_base: 0,
            fs: default_fs(),
            template,
            psd_model: PsdModel::ligo_like(),
            mf: MfConfig::default(),
            band: default_band(),
            order: default_order(),
            thresholds: Thresholds::default(),
            inputs: Inputs::default(),
            params: Params::default(),
        }
    }

    /// Parse a JSON config; a missing or zero `trials` takes the scenario default.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        if cfg.trials == 0 {
            cfg.trials = cfg.name.default_trials();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if !(self.fs > 0.0) {
            return Err(Error::Parameter("fs must be positive".into()));
        }
        let t = self.thresholds;
        if !(t.snr_threshold > 0.0 && t.r3_threshold > 0.0) {
            return Err(Error::Parameter("thresholds must be positive".into()));
        }
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi < self.fs / 2.0) {
            return Err(Error::Parameter(format!("band {lo}..{hi} Hz invalid for fs {}", self.fs)));
        }
        self.psd_model.validate_for(self.fs)?;
        for p in [&self.inputs.template, &self.inputs.h1, &self.inputs.l1, &self.inputs.psd_model].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Parameter(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub(crate) fn block_duration(&self) -> f64 {
        self.params.block_duration.unwrap_or(32.0)
    }

    pub(crate) fn inject_at(&self) -> f64 {
        self.params.inject_at.unwrap_or(self.block_duration() / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in ScenarioName::ALL {
            assert_eq!(n.as_str().parse::<ScenarioName>().unwrap(), n);
            let j = serde_json::to_string(&n).unwrap();
            assert_eq!(j, format!("\"{}\"", n.as_str()));
        }
        assert!(matches!("nope".parse::<ScenarioName>(), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn minimal_json() {
        let c = ScenarioConfig::from_json(r#"{"name":"mf-bogus","seed_base":7}"#).unwrap();
        assert_eq!(c.trials, 100);
        assert_eq!(c.seed_base, 7);
        assert_eq!(c.thresholds.snr_threshold, 5.0);
        let c = ScenarioConfig::from_json(r#"{"name":"mf-bogus","params":{"sigma_phase":0.5}}"#).unwrap();
        assert_eq!(c.params.sigma_phase, Some(0.5));
        assert!(ScenarioConfig::from_json(r#"{"name":"mf-bogus","thresholds":{"snr_threshold":-1,"r3_threshold":0.3}}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"name":"nope"}"#).is_err());
    }
}
