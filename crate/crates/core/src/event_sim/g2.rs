//! Hanbury Brown–Twiss estimate of g²(0) for the cavity source.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LinkConfig;
use crate::error::{check_probability, Error, Result};
use crate::rng::StreamSeed;

const CHUNK: u64 = 1 << 15;

/// Photon-number distribution per trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhotonStatistics {
    /// P(1) = `p1`, P(2) = `p2`, otherwise vacuum.
    Admixture { p1: f64, p2: f64 },
    /// Coherent light.
    Poissonian { mean: f64 },
}

impl PhotonStatistics {
    pub fn from_config(config: &LinkConfig) -> Self {
        PhotonStatistics::Admixture { p1: config.epsilon, p2: config.p2_admixture }
    }

    /// ⟨n(n−1)⟩/⟨n⟩².
    pub fn analytic_g2(&self) -> f64 {
        match *self {
            PhotonStatistics::Admixture { p1, p2 } => 2.0 * p2 / (p1 + 2.0 * p2).powi(2),
            PhotonStatistics::Poissonian { .. } => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PhotonStatistics::Admixture { p1, p2 } => {
                check_probability("p1", p1)?;
                check_probability("p2_admixture", p2)?;
                if p1 + p2 > 1.0 {
                    return Err(Error::InvalidParameter { name: "p2_admixture", reason: "p1 + p2 exceeds 1".into() });
                }
                Ok(())
            }
            PhotonStatistics::Poissonian { mean } => crate::error::check_positive("mean", mean),
        }
    }
}

/// Two-photon probability giving `g2` on top of single-photon probability `p1`.
///
/// Smaller root of 2·p2 = g2·(p1 + 2·p2)².
pub fn admixture_for_g2(p1: f64, g2: f64) -> Result<f64> {
    check_probability("p1", p1)?;
    crate::error::check_non_negative("g2", g2)?;
    let b = 2.0 - 4.0 * g2 * p1;
    let disc = b * b - 16.0 * g2 * g2 * p1 * p1;
    if b <= 0.0 || disc < 0.0 {
        return Err(Error::InvalidParameter {
            name: "g2",
            reason: format!("g2 = {g2} is unreachable with p1 = {p1}"),
        });
    }
    Ok(2.0 * g2 * p1 * p1 / (b + disc.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub g2: f64,
    pub std_err: f64,
    pub triggers: u64,
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
}

/// g²(0) from `shots` triggers of the configured source.
pub fn simulate_g2(config: &LinkConfig, shots: u64, seed: u64) -> Result<G2Estimate> {
    config.validate()?;
    simulate_g2_with(&PhotonStatistics::from_config(config), config.det_eff, shots, seed)
}

/// Each photon takes either beam-splitter port with probability 1/2 and is
/// seen by a non-number-resolving detector of efficiency `det_eff`.
pub fn simulate_g2_with(stats: &PhotonStatistics, det_eff: f64, shots: u64, seed: u64) -> Result<G2Estimate> {
    stats.validate()?;
    check_probability("det_eff", det_eff)?;
    let seed = StreamSeed::new(seed);
    let poisson = match *stats {
        PhotonStatistics::Poissonian { mean } => Some(Poisson::new(mean).map_err(|e| Error::InvalidParameter {
            name: "mean",
            reason: e.to_string(),
        })?),
        PhotonStatistics::Admixture { .. } => None,
    };

    let trigger = |i: u64| -> (bool, bool) {
        let mut rng = seed.stream(i);
        let n = match (*stats, &poisson) {
            (PhotonStatistics::Admixture { p1, p2 }, _) => {
                let u: f64 = rng.random();
                if u < p2 {
                    2
                } else if u < p2 + p1 {
                    1
                } else {
                    0
                }
            }
            (_, Some(dist)) => dist.sample(&mut rng) as u64,
            _ => unreachable!(),
        };
        let (mut a, mut b) = (false, false);
        for _ in 0..n {
            let to_a = rng.random_bool(0.5);
            if rng.random_bool(det_eff) {
                if to_a {
                    a = true;
                } else {
                    b = true;
                }
            }
        }
        (a, b)
    };

    let [na, nb, nc] = (0..shots.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut t = [0u64; 3];
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(shots) {
                let (a, b) = trigger(i);
                t[0] += a as u64;
                t[1] += b as u64;
                t[2] += (a && b) as u64;
            }
            t
        })
        .reduce(|| [0; 3], |x, y| [x[0] + y[0], x[1] + y[1], x[2] + y[2]]);

    if na == 0 || nb == 0 {
        return Err(Error::InvalidParameter {
            name: "shots",
            reason: format!("no singles on one detector after {shots} triggers"),
        });
    }
    let g2 = nc as f64 * shots as f64 / (na as f64 * nb as f64);
    let rel_var = if nc > 0 { 1.0 / nc as f64 } else { 0.0 } + 1.0 / na as f64 + 1.0 / nb as f64;
    Ok(G2Estimate {
        g2,
        std_err: g2 * rel_var.sqrt(),
        triggers: shots,
        singles_a: na,
        singles_b: nb,
        coincidences: nc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admixture_root() {
        let p2 = admixture_for_g2(0.14, 0.01).unwrap();
        let g2 = PhotonStatistics::Admixture { p1: 0.14, p2 }.analytic_g2();
        assert!((g2 - 0.01).abs() < 1e-15);
        assert_eq!(admixture_for_g2(0.14, 0.0).unwrap(), 0.0);
        assert!(admixture_for_g2(0.9, 10.0).is_err());
    }

    #[test]
    fn ideal_single_photons_never_coincide() {
        let stats = PhotonStatistics::Admixture { p1: 0.5, p2: 0.0 };
        let est = simulate_g2_with(&stats, 0.5, 200_000, 1).unwrap();
        assert_eq!(est.coincidences, 0);
        assert_eq!(est.g2, 0.0);
    }

    #[test]
    fn coherent_light_is_poissonian() {
        let est = simulate_g2_with(&PhotonStatistics::Poissonian { mean: 0.2 }, 0.5, 2_000_000, 2).unwrap();
        assert!((est.g2 - 1.0).abs() < 3.0 * est.std_err, "{est:?}");
    }

    #[test]
    fn deterministic() {
        let cfg = LinkConfig { p2_admixture: 0.01, ..LinkConfig::default() };
        assert_eq!(simulate_g2(&cfg, 100_000, 4).unwrap(), simulate_g2(&cfg, 100_000, 4).unwrap());
    }
}
