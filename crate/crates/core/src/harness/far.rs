use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Background statistics for the false-alarm probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalseAlarmParams {
    /// Background events louder than the candidate.
    pub n_b: f64,
    /// Observation time.
    pub t: f64,
    /// Background time, same units as `t`.
    pub t_b: f64,
}

impl FalseAlarmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_b >= 0.0 && self.n_b.is_finite()) {
            return Err(Error::Parameter(format!("n_b must be >= 0, got {}", self.n_b)));
        }
        if !(self.t > 0.0 && self.t_b > 0.0 && self.t.is_finite() && self.t_b.is_finite()) {
            return Err(Error::Parameter("T and T_b must be positive".into()));
        }
        Ok(())
    }
}

/// `F = 1 - exp(-T / T_b (1 + n_b))`.
pub fn false_alarm_rate(p: &FalseAlarmParams) -> Result<f64> {
    p.validate()?;
    Ok(-(-p.t / p.t_b * (1.0 + p.n_b)).exp_m1())
}
