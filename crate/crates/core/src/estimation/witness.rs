use serde::{Deserialize, Serialize};

use super::confidence::{confidence_f_gt_half, ConfidenceEstimate, ConfidenceOptions};
use crate::error::{Error, Result};
use crate::event_sim::{CountTable, SettingCounts};
use crate::quantum::MeasurementSetting;

/// Correlation estimate and its binomial standard error for one setting.
pub fn correlation_from_counts(counts: &SettingCounts) -> Result<(f64, f64)> {
    let total = counts.coincidences();
    if total == 0 {
        return Err(Error::InvalidParameter { name: "counts", reason: "no coincidences".into() });
    }
    let (same, diff) = counts.same_and_different();
    let e = (same as f64 - diff as f64) / total as f64;
    Ok((e, ((1.0 - e * e).max(0.0) / total as f64).sqrt()))
}

/// F̂ = (1 − Ê_XX − Ê_YY − Ê_ZZ)/4 and its propagated standard error.
pub fn witness_estimate(counts: &CountTable) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut var = 0.0;
    for setting in MeasurementSetting::witness() {
        let (e, err) = correlation_from_counts(counts.require(setting)?)?;
        sum += e;
        var += err * err;
    }
    Ok(((1.0 - sum) / 4.0, var.sqrt() / 4.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub f_hat: f64,
    pub std_err: f64,
    pub confidence_gt_half: f64,
    pub confidence: ConfidenceEstimate,
}

pub fn witness_fidelity(counts: &CountTable, options: &ConfidenceOptions) -> Result<WitnessResult> {
    let (f_hat, std_err) = witness_estimate(counts)?;
    let confidence = confidence_f_gt_half(counts, options.resamples, options.seed)?;
    Ok(WitnessResult { f_hat, std_err, confidence_gt_half: confidence.level, confidence })
}
