//! Seeded Monte Carlo generation of detection events.
//!
//! Each shot walks the efficiency chain as independent Bernoulli trials and,
//! on a coincidence, draws a Born-rule outcome for the shot's setting.
//! Settings are assigned round-robin by shot index. Every shot owns a
//! counter-based random stream, and counts are reduced as integers, so
//! results are bit-identical for any thread count.

mod atoms;
mod counts;
mod g2;

pub use atoms::{calibrate_pa_rate, mean_atom_fraction, photoassociation_decay};
pub use counts::{CountTable, SettingCounts};
pub use g2::{admixture_for_g2, simulate_g2, simulate_g2_with, G2Estimate, PhotonStatistics};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::protocol::{run_pipeline, DephasingParams, LinkTimings, DEFAULT_TAU};
use crate::quantum::{outcome_probabilities, MeasurementSetting, TwoQubitState};
use crate::rng::StreamSeed;

/// Shots per parallel work item. Fixed so the work split never depends on
/// the thread pool.
const CHUNK: u64 = 1 << 15;

/// Physical parameters of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Single-photon production efficiency of the cavity.
    pub epsilon: f64,
    /// Entangled pair production per trigger.
    pub pair_prob: f64,
    /// Memory write-read efficiency.
    pub eta: f64,
    /// Routing through the 50:50 beam splitter.
    pub bs_factor: f64,
    /// All other beam transport, including stray-light filtering.
    pub transport: f64,
    /// Detection efficiency of each detector.
    pub det_eff: f64,
    pub atom_present: f64,
    pub atom_survival_factor: f64,
    /// Probability of a two-photon emission per trigger.
    pub p2_admixture: f64,
    pub shots_per_bec: f64,
    /// Seconds per BEC cycle.
    pub bec_cycle_time: f64,
    pub n0_atoms: f64,
    pub n_final_atoms: f64,
    /// Photoassociation speed-up at 780 nm relative to 795 nm.
    pub pa_rate_multiplier_780: f64,
    /// Extra multiplicative loss for matching observed rates. 1 = none.
    pub unexplained_loss: f64,
    /// Dark-count probability per detector per shot.
    pub dark_count_prob: f64,
    /// Scale eta with the instantaneous BEC atom number (cycle average kept).
    pub eta_tracks_atom_number: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let epsilon = 0.14;
        Self {
            epsilon,
            pair_prob: 0.010,
            eta: 0.16,
            bs_factor: 0.25,
            transport: 0.21,
            det_eff: 0.50,
            atom_present: 0.72,
            atom_survival_factor: 0.81,
            p2_admixture: admixture_for_g2(epsilon, 0.01).expect("valid defaults"),
            shots_per_bec: 2e4,
            bec_cycle_time: 20.0,
            n0_atoms: 1.2e6,
            n_final_atoms: 0.2e6,
            pa_rate_multiplier_780: 50.0,
            unexplained_loss: 1.0,
            dark_count_prob: 0.0,
            eta_tracks_atom_number: false,
        }
    }
}

impl LinkConfig {
    /// Lossless link: every shot yields a coincidence.
    pub fn ideal() -> Self {
        Self {
            pair_prob: 1.0,
            eta: 1.0,
            bs_factor: 1.0,
            transport: 1.0,
            det_eff: 1.0,
            atom_present: 1.0,
            atom_survival_factor: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("epsilon", self.epsilon),
            ("pair_prob", self.pair_prob),
            ("eta", self.eta),
            ("bs_factor", self.bs_factor),
            ("transport", self.transport),
            ("det_eff", self.det_eff),
            ("atom_present", self.atom_present),
            ("atom_survival_factor", self.atom_survival_factor),
            ("p2_admixture", self.p2_admixture),
            ("unexplained_loss", self.unexplained_loss),
            ("dark_count_prob", self.dark_count_prob),
        ] {
            check_probability(name, p)?;
        }
        if self.epsilon + self.p2_admixture > 1.0 {
            return Err(Error::InvalidParameter {
                name: "p2_admixture",
                reason: "epsilon + p2_admixture exceeds 1".into(),
            });
        }
        check_positive("shots_per_bec", self.shots_per_bec)?;
        check_positive("bec_cycle_time", self.bec_cycle_time)?;
        check_positive("n0_atoms", self.n0_atoms)?;
        check_positive("n_final_atoms", self.n_final_atoms)?;
        check_positive("pa_rate_multiplier_780", self.pa_rate_multiplier_780)?;
        if self.n_final_atoms > self.n0_atoms {
            return Err(Error::InvalidParameter {
                name: "n_final_atoms",
                reason: "must not exceed n0_atoms".into(),
            });
        }
        Ok(())
    }

    /// eta for the shot at position `shot_in_bec` within its BEC cycle.
    fn eta_at(&self, shot_in_bec: f64, pa_rate: f64, mean_fraction: f64) -> f64 {
        if !self.eta_tracks_atom_number || pa_rate == 0.0 {
            return self.eta;
        }
        let fraction = (-pa_rate * shot_in_bec).exp();
        (self.eta * fraction / mean_fraction).min(1.0)
    }
}

/// Cumulative outcome distribution for one setting.
struct BornTable {
    joint: [f64; 4],
    marginal_a: f64,
    marginal_b: f64,
}

impl BornTable {
    fn new(rho: &TwoQubitState, setting: MeasurementSetting) -> Self {
        let p = outcome_probabilities(rho, setting);
        let total: f64 = p.iter().sum();
        let mut joint = [0.0; 4];
        let mut acc = 0.0;
        for k in 0..4 {
            acc += p[k] / total;
            joint[k] = acc;
        }
        joint[3] = 1.0;
        Self { joint, marginal_a: (p[0] + p[1]) / total, marginal_b: (p[0] + p[2]) / total }
    }

    fn sample_joint<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.joint.iter().position(|&c| u < c).unwrap_or(3)
    }
}

/// What a station registered in one shot.
#[derive(Clone, Copy, PartialEq)]
enum Click {
    None,
    Photon,
    Dark,
}

struct ShotModel<'a> {
    config: &'a LinkConfig,
    born: Vec<BornTable>,
    pa_rate: f64,
    mean_fraction: f64,
}

impl ShotModel<'_> {
    /// Runs one shot; returns `(setting index, outcome index)` on a coincidence.
    fn shot(&self, index: u64, seed: &StreamSeed) -> Option<(usize, usize)> {
        let cfg = self.config;
        let mut rng = seed.stream(index);
        let setting = (index % self.born.len() as u64) as usize;

        let common = rng.random_bool(cfg.atom_present)
            && rng.random_bool(cfg.atom_survival_factor)
            && rng.random_bool(cfg.pair_prob)
            && rng.random_bool(cfg.bs_factor)
            && rng.random_bool(cfg.transport)
            && rng.random_bool(cfg.unexplained_loss);
        let (a, b) = if common {
            let shot_in_bec = (index as f64) % cfg.shots_per_bec;
            let eta = cfg.eta_at(shot_in_bec.floor(), self.pa_rate, self.mean_fraction);
            let stored = rng.random_bool(eta);
            let a = rng.random_bool(cfg.det_eff);
            let b = stored && rng.random_bool(cfg.det_eff);
            (a, b)
        } else {
            (false, false)
        };

        let mut click_a = if a { Click::Photon } else { Click::None };
        let mut click_b = if b { Click::Photon } else { Click::None };
        if cfg.dark_count_prob > 0.0 {
            if click_a == Click::None && rng.random_bool(cfg.dark_count_prob) {
                click_a = Click::Dark;
            }
            if click_b == Click::None && rng.random_bool(cfg.dark_count_prob) {
                click_b = Click::Dark;
            }
        }

        let table = &self.born[setting];
        let outcome = match (click_a, click_b) {
            (Click::None, _) | (_, Click::None) => return None,
            (Click::Photon, Click::Photon) => table.sample_joint(&mut rng),
            (ca, cb) => {
                let minus_a = match ca {
                    Click::Photon => !rng.random_bool(table.marginal_a),
                    _ => rng.random_bool(0.5),
                };
                let minus_b = match cb {
                    Click::Photon => !rng.random_bool(table.marginal_b),
                    _ => rng.random_bool(0.5),
                };
                2 * minus_a as usize + minus_b as usize
            }
        };
        Some((setting, outcome))
    }
}

/// Simulates `shots` heralding attempts on `state`.
pub fn simulate_run(
    state: &TwoQubitState,
    config: &LinkConfig,
    settings: &[MeasurementSetting],
    shots: u64,
    seed: u64,
) -> Result<CountTable> {
    run_with_seed(state, config, settings, shots, &StreamSeed::new(seed))
}

fn run_with_seed(
    state: &TwoQubitState,
    config: &LinkConfig,
    settings: &[MeasurementSetting],
    shots: u64,
    seed: &StreamSeed,
) -> Result<CountTable> {
    if settings.is_empty() {
        return Err(Error::InvalidParameter { name: "settings", reason: "empty settings list".into() });
    }
    let mut distinct = settings.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != settings.len() {
        return Err(Error::InvalidParameter { name: "settings", reason: "duplicate setting".into() });
    }
    if shots == 0 {
        return Err(Error::InvalidParameter { name: "shots", reason: "must be positive".into() });
    }
    config.validate()?;

    let pa_rate = calibrate_pa_rate(config.n0_atoms, config.n_final_atoms, config.shots_per_bec).unwrap_or(0.0);
    let model = ShotModel {
        config,
        born: settings.iter().map(|s| BornTable::new(state, *s)).collect(),
        pa_rate,
        mean_fraction: mean_atom_fraction(pa_rate, config.shots_per_bec),
    };
    let n = settings.len();

    let chunks = shots.div_ceil(CHUNK);
    let tallies = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut tally = vec![[0u64; 4]; n];
            let end = ((chunk + 1) * CHUNK).min(shots);
            for i in chunk * CHUNK..end {
                if let Some((s, k)) = model.shot(i, seed) {
                    tally[s][k] += 1;
                }
            }
            tally
        })
        .reduce(
            || vec![[0u64; 4]; n],
            |mut acc, t| {
                for (a, b) in acc.iter_mut().zip(t) {
                    for k in 0..4 {
                        a[k] += b[k];
                    }
                }
                acc
            },
        );

    let mut table = CountTable::new();
    for (idx, (setting, outcomes)) in settings.iter().zip(tallies).enumerate() {
        // round-robin share of shots for this setting
        let assigned = shots / n as u64 + u64::from((idx as u64) < shots % n as u64);
        table.insert(*setting, SettingCounts { outcomes, shots: assigned });
    }
    Ok(table)
}

/// One point of a simulated decay curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayPoint {
    pub t_at: f64,
    pub t_bec: f64,
    pub counts: CountTable,
}

/// Runs the witness settings at each `(t_at, t_bec)` point.
pub fn simulate_decay_curve(
    f0: f64,
    params: &DephasingParams,
    config: &LinkConfig,
    time_points: &[(f64, f64)],
    shots_per_point: u64,
    seed: u64,
) -> Result<Vec<DecayPoint>> {
    let root = StreamSeed::new(seed);
    let settings = MeasurementSetting::witness();
    time_points
        .iter()
        .enumerate()
        .map(|(i, &(t_at, t_bec))| {
            let timings = LinkTimings::new(t_at, t_bec, DEFAULT_TAU)?;
            let state = run_pipeline(f0, params, &timings)?.into_state();
            let counts = run_with_seed(&state, config, &settings, shots_per_point, &root.derive(i as u64))?;
            Ok(DecayPoint { t_at, t_bec, counts })
        })
        .collect()
}
