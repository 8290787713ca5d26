//! Posterior probability that the singlet fidelity exceeds 1/2.
//!
//! Each witness setting yields `same` correlated and `diff` anticorrelated
//! coincidences. With a uniform prior on its correlation E ∈ [−1, 1], the
//! probability (1 + E)/2 has a Beta(same + 1, diff + 1) posterior. The three
//! correlations are drawn independently and kept only if they lie in the
//! physical tetrahedron (all four Bell-state weights non-negative). The
//! returned level is the Monte Carlo mass of F = (1 − ΣE)/4 > 1/2.

use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::event_sim::CountTable;
use crate::quantum::MeasurementSetting;
use crate::rng::StreamSeed;

pub const DEFAULT_CONFIDENCE_RESAMPLES: u64 = 1_000_000;
pub const MIN_CONFIDENCE_RESAMPLES: u64 = 10_000;

/// Rejection attempts per accepted posterior sample.
const MAX_TRIES: u32 = 100_000;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceOptions {
    pub resamples: u64,
    pub seed: u64,
}

impl Default for ConfidenceOptions {
    fn default() -> Self {
        Self { resamples: DEFAULT_CONFIDENCE_RESAMPLES, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceEstimate {
    /// Posterior mass of F > 1/2. When no sample has F ≤ 1/2 this is the
    /// rule-of-three lower bound 1 − 3/resamples.
    pub level: f64,
    /// Samples with F ≤ 1/2.
    pub tail_samples: u64,
    pub resamples: u64,
    pub rule_of_three: bool,
}

impl ConfidenceEstimate {
    /// 1 − level, computed without cancellation.
    pub fn tail(&self) -> f64 {
        if self.rule_of_three {
            3.0 / self.resamples as f64
        } else {
            self.tail_samples as f64 / self.resamples as f64
        }
    }
}

/// Upper tail P(F ≤ 1/2) under a Gaussian likelihood N(f_hat, std_err²).
pub fn gaussian_confidence_tail(f_hat: f64, std_err: f64) -> f64 {
    if std_err <= 0.0 {
        return if f_hat > 0.5 { 0.0 } else { 1.0 };
    }
    0.5 * erfc((f_hat - 0.5) / (std_err * std::f64::consts::SQRT_2))
}

fn physical(e: [f64; 3]) -> bool {
    let [x, y, z] = e;
    1.0 - x - y - z >= 0.0 && 1.0 + x + y - z >= 0.0 && 1.0 + x - y + z >= 0.0 && 1.0 - x + y + z >= 0.0
}

pub fn confidence_f_gt_half(counts: &CountTable, resamples: u64, seed: u64) -> Result<ConfidenceEstimate> {
    if resamples < MIN_CONFIDENCE_RESAMPLES {
        return Err(Error::InvalidParameter {
            name: "resamples",
            reason: format!("{resamples} is below the minimum {MIN_CONFIDENCE_RESAMPLES}"),
        });
    }
    let mut posteriors = Vec::with_capacity(3);
    for setting in MeasurementSetting::witness() {
        let (same, diff) = counts.require(setting)?.same_and_different();
        posteriors.push(Beta::new(same as f64 + 1.0, diff as f64 + 1.0).map_err(|e| Error::InvalidParameter {
            name: "counts",
            reason: e.to_string(),
        })?);
    }
    let seed = StreamSeed::new(seed);

    let draw = |i: u64| -> Result<bool> {
        let mut rng = seed.stream(i);
        for _ in 0..MAX_TRIES {
            let e: [f64; 3] = std::array::from_fn(|k| 2.0 * posteriors[k].sample(&mut rng) - 1.0);
            if physical(e) {
                return Ok((1.0 - e[0] - e[1] - e[2]) / 4.0 <= 0.5);
            }
        }
        Err(Error::InvalidParameter {
            name: "counts",
            reason: "posterior has negligible mass on physical states".into(),
        })
    };

    let tail_samples = (0..resamples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut n = 0u64;
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(resamples) {
                n += draw(i)? as u64;
            }
            Ok::<u64, Error>(n)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let rule_of_three = tail_samples == 0;
    let level = if rule_of_three {
        1.0 - 3.0 / resamples as f64
    } else {
        1.0 - tail_samples as f64 / resamples as f64
    };
    Ok(ConfidenceEstimate { level, tail_samples, resamples, rule_of_three })
}
