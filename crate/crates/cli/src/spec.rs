//! Experiment specification: TOML parsing, defaults, validation and the
//! canonical hash written into every output file.

use std::fmt;
use std::path::PathBuf;

use qlink::event_sim::LinkConfig;
use qlink::protocol::{DephasingParams, LinkTimings, DEFAULT_TAU};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUTPUT_DIR_ENV: &str = "QLINK_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "qlink-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Witness,
    Tomography,
    DecayCurve,
    Budget,
    G2,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Witness => "witness",
            Mode::Tomography => "tomography",
            Mode::DecayCurve => "decay_curve",
            Mode::Budget => "budget",
            Mode::G2 => "g2",
        }
    }

    fn default_shots(self) -> u64 {
        match self {
            Mode::Witness | Mode::DecayCurve => 10_000_000,
            Mode::Tomography => 30_000_000,
            Mode::G2 => 50_000_000,
            Mode::Budget => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// t_at = t_bec = t.
    Both,
    /// t_at = t, t_bec fixed.
    Atom,
    /// t_bec = t, t_at fixed.
    Memory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurveSpec {
    pub sweep: Sweep,
    /// Seconds.
    pub times: Vec<f64>,
    /// Seconds.
    pub fixed_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub mode: Mode,
    pub f0: f64,
    pub shots: u64,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub config: LinkConfig,
    pub timings: Option<LinkTimings>,
    pub dephasing: Option<DephasingParams>,
    pub decay_curve: DecayCurveSpec,
    pub bootstrap_resamples: usize,
    pub max_iterations: usize,
    pub confidence_resamples: u64,
    pub observed_rate: Option<f64>,
    pub target_coincidences: f64,
}

impl ExperimentSpec {
    /// SHA-256 over the resolved spec, excluding seed and output location.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("spec serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("seed");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// Command-line values; each one that is set wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecErrors(pub Vec<String>);

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecErrors {}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    link: RawLink,
    timings: Option<RawTimings>,
    dephasing: Option<RawDephasing>,
    #[serde(default)]
    decay_curve: RawDecay,
    #[serde(default)]
    tomography: RawTomography,
    #[serde(default)]
    witness: RawWitness,
    #[serde(default)]
    budget: RawBudget,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: Option<String>,
    mode: Option<Mode>,
    f0: Option<f64>,
    shots: Option<u64>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    epsilon: Option<f64>,
    pair_prob: Option<f64>,
    eta: Option<f64>,
    bs_factor: Option<f64>,
    transport: Option<f64>,
    det_eff: Option<f64>,
    atom_present: Option<f64>,
    atom_survival_factor: Option<f64>,
    p2_admixture: Option<f64>,
    shots_per_bec: Option<f64>,
    bec_cycle_time: Option<f64>,
    n0_atoms: Option<f64>,
    n_final_atoms: Option<f64>,
    pa_rate_multiplier_780: Option<f64>,
    unexplained_loss: Option<f64>,
    dark_count_prob: Option<f64>,
    eta_tracks_atom_number: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimings {
    t_at_us: Option<f64>,
    t_bec_us: Option<f64>,
    tau_us: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDephasing {
    sigma_b_at_mg: Option<f64>,
    sigma_b_bec_mg: Option<f64>,
    hold_b_at_mg: Option<f64>,
    hold_b_bec_mg: Option<f64>,
    zeeman_coeff: Option<f64>,
    mean_field_phase_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecay {
    sweep: Option<Sweep>,
    times_us: Option<Vec<f64>>,
    fixed_time_us: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTomography {
    bootstrap_resamples: Option<usize>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWitness {
    confidence_resamples: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    observed_rate: Option<f64>,
    target_coincidences: Option<f64>,
}

const DEFAULT_TIMES_US: [f64; 7] = [1.0, 50.0, 100.0, 150.0, 200.0, 300.0, 500.0];

struct Checker(Vec<String>);

impl Checker {
    fn probability(&mut self, field: &str, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.0.push(format!("{field} = {v} is outside the legal range [0, 1]"));
        }
    }

    fn unit_interval_open_low(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.0.push(format!("{field} = {v} is outside the legal range (0, 1]"));
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.0.push(format!("{field} = {v} must be positive and finite"));
        }
    }

    fn non_negative(&mut self, field: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.0.push(format!("{field} = {v} must be non-negative and finite"));
        }
    }

    fn finite(&mut self, field: &str, v: f64) {
        if !v.is_finite() {
            self.0.push(format!("{field} = {v} must be finite"));
        }
    }
}

/// Parses and validates a config file. An empty file is the default
/// budget experiment.
pub fn validate_spec(text: &str, overrides: &Overrides) -> Result<ExperimentSpec, SpecErrors> {
    let raw: RawFile = toml::from_str(text).map_err(|e| SpecErrors(vec![e.message().to_string()]))?;
    let mut ck = Checker(Vec::new());

    let mode = overrides.mode.or(raw.experiment.mode).unwrap_or(Mode::Budget);

    let d = LinkConfig::default();
    let l = &raw.link;
    let config = LinkConfig {
        epsilon: l.epsilon.unwrap_or(d.epsilon),
        pair_prob: l.pair_prob.unwrap_or(d.pair_prob),
        eta: l.eta.unwrap_or(d.eta),
        bs_factor: l.bs_factor.unwrap_or(d.bs_factor),
        transport: l.transport.unwrap_or(d.transport),
        det_eff: l.det_eff.unwrap_or(d.det_eff),
        atom_present: l.atom_present.unwrap_or(d.atom_present),
        atom_survival_factor: l.atom_survival_factor.unwrap_or(d.atom_survival_factor),
        p2_admixture: l.p2_admixture.unwrap_or(d.p2_admixture),
        shots_per_bec: l.shots_per_bec.unwrap_or(d.shots_per_bec),
        bec_cycle_time: l.bec_cycle_time.unwrap_or(d.bec_cycle_time),
        n0_atoms: l.n0_atoms.unwrap_or(d.n0_atoms),
        n_final_atoms: l.n_final_atoms.unwrap_or(d.n_final_atoms),
        pa_rate_multiplier_780: l.pa_rate_multiplier_780.unwrap_or(d.pa_rate_multiplier_780),
        unexplained_loss: l.unexplained_loss.unwrap_or(d.unexplained_loss),
        dark_count_prob: l.dark_count_prob.unwrap_or(d.dark_count_prob),
        eta_tracks_atom_number: l.eta_tracks_atom_number.unwrap_or(d.eta_tracks_atom_number),
    };
    for (field, v) in [
        ("link.epsilon", config.epsilon),
        ("link.p2_admixture", config.p2_admixture),
        ("link.dark_count_prob", config.dark_count_prob),
    ] {
        ck.probability(field, v);
    }
    if config.epsilon + config.p2_admixture > 1.0 {
        ck.0.push(format!(
            "link.epsilon + link.p2_admixture = {} exceeds 1",
            config.epsilon + config.p2_admixture
        ));
    }
    for (field, v) in [
        ("link.pair_prob", config.pair_prob),
        ("link.eta", config.eta),
        ("link.bs_factor", config.bs_factor),
        ("link.transport", config.transport),
        ("link.det_eff", config.det_eff),
        ("link.atom_present", config.atom_present),
        ("link.atom_survival_factor", config.atom_survival_factor),
        ("link.unexplained_loss", config.unexplained_loss),
    ] {
        ck.unit_interval_open_low(field, v);
    }
    for (field, v) in [
        ("link.shots_per_bec", config.shots_per_bec),
        ("link.bec_cycle_time", config.bec_cycle_time),
        ("link.n0_atoms", config.n0_atoms),
        ("link.n_final_atoms", config.n_final_atoms),
        ("link.pa_rate_multiplier_780", config.pa_rate_multiplier_780),
    ] {
        ck.positive(field, v);
    }
    if config.n_final_atoms > config.n0_atoms {
        ck.0.push("link.n_final_atoms must not exceed link.n0_atoms".into());
    }

    let timings = raw.timings.as_ref().map(|t| {
        let lt = LinkTimings {
            t_at: t.t_at_us.unwrap_or(1.0) / 1e6,
            t_bec: t.t_bec_us.unwrap_or(1.0) / 1e6,
            tau: t.tau_us.map_or(DEFAULT_TAU, |v| v / 1e6),
        };
        ck.non_negative("timings.t_at_us", lt.t_at * 1e6);
        ck.non_negative("timings.t_bec_us", lt.t_bec * 1e6);
        ck.non_negative("timings.tau_us", lt.tau * 1e6);
        lt
    });

    let dephasing = raw.dephasing.as_ref().map(|p| {
        let dd = DephasingParams::default();
        let dp = DephasingParams {
            sigma_b_at: p.sigma_b_at_mg.map_or(dd.sigma_b_at, |v| v / 1e3),
            sigma_b_bec: p.sigma_b_bec_mg.map_or(dd.sigma_b_bec, |v| v / 1e3),
            hold_b_at: p.hold_b_at_mg.map_or(dd.hold_b_at, |v| v / 1e3),
            hold_b_bec: p.hold_b_bec_mg.map_or(dd.hold_b_bec, |v| v / 1e3),
            zeeman_coeff: p.zeeman_coeff.unwrap_or(dd.zeeman_coeff),
            mean_field_phase_rate: p.mean_field_phase_rate.unwrap_or(dd.mean_field_phase_rate),
        };
        ck.non_negative("dephasing.sigma_b_at_mg", dp.sigma_b_at * 1e3);
        ck.non_negative("dephasing.sigma_b_bec_mg", dp.sigma_b_bec * 1e3);
        ck.finite("dephasing.hold_b_at_mg", dp.hold_b_at);
        ck.finite("dephasing.hold_b_bec_mg", dp.hold_b_bec);
        ck.positive("dephasing.zeeman_coeff", dp.zeeman_coeff);
        ck.finite("dephasing.mean_field_phase_rate", dp.mean_field_phase_rate);
        dp
    });

    let f0 = raw.experiment.f0.unwrap_or(0.95);
    if !(f0 > 0.5 && f0 <= 1.0) {
        ck.0.push(format!("experiment.f0 = {f0} is outside the legal range (0.5, 1]"));
    }

    let shots = overrides.shots.or(raw.experiment.shots).unwrap_or(mode.default_shots());
    if mode != Mode::Budget && shots == 0 {
        ck.0.push("experiment.shots must be positive".into());
    }

    let decay_curve = DecayCurveSpec {
        sweep: raw.decay_curve.sweep.unwrap_or(Sweep::Both),
        times: raw.decay_curve.times_us.clone().unwrap_or(DEFAULT_TIMES_US.to_vec()).iter().map(|t| t / 1e6).collect(),
        fixed_time: raw.decay_curve.fixed_time_us.unwrap_or(1.0) / 1e6,
    };
    if mode == Mode::DecayCurve {
        if decay_curve.times.len() < 3 {
            ck.0.push(format!("decay_curve.times_us needs at least 3 points, got {}", decay_curve.times.len()));
        }
        for t in &decay_curve.times {
            ck.non_negative("decay_curve.times_us", t * 1e6);
        }
        ck.non_negative("decay_curve.fixed_time_us", decay_curve.fixed_time * 1e6);
    }

    let bootstrap_resamples = raw.tomography.bootstrap_resamples.unwrap_or(1000);
    let max_iterations = raw.tomography.max_iterations.unwrap_or(20_000);
    if max_iterations == 0 {
        ck.0.push("tomography.max_iterations must be positive".into());
    }
    let confidence_resamples = raw.witness.confidence_resamples.unwrap_or(qlink::estimation::DEFAULT_CONFIDENCE_RESAMPLES);
    if confidence_resamples < qlink::estimation::MIN_CONFIDENCE_RESAMPLES {
        ck.0.push(format!(
            "witness.confidence_resamples = {confidence_resamples} is below the minimum {}",
            qlink::estimation::MIN_CONFIDENCE_RESAMPLES
        ));
    }
    if let Some(r) = raw.budget.observed_rate {
        ck.unit_interval_open_low("budget.observed_rate", r);
    }
    let target_coincidences = raw.budget.target_coincidences.unwrap_or(60.0);
    ck.positive("budget.target_coincidences", target_coincidences);

    match mode {
        Mode::DecayCurve if dephasing.is_none() => {
            ck.0.push("mode decay_curve requires a [dephasing] section".into());
        }
        Mode::Witness | Mode::Tomography => {
            if timings.is_none() {
                ck.0.push(format!("mode {} requires a [timings] section", mode.as_str()));
            }
            if dephasing.is_none() {
                ck.0.push(format!("mode {} requires a [dephasing] section", mode.as_str()));
            }
        }
        _ => {}
    }

    let name = raw.experiment.name.clone().unwrap_or_else(|| mode.as_str().to_string());
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        ck.0.push(format!("experiment.name = {name:?} must be a plain file-name stem"));
    }

    let output_dir = overrides
        .output_dir
        .clone()
        .or(raw.experiment.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    if !ck.0.is_empty() {
        return Err(SpecErrors(ck.0));
    }
    Ok(ExperimentSpec {
        name,
        mode,
        f0,
        shots,
        seed: overrides.seed.or(raw.experiment.seed).unwrap_or(0),
        output_dir,
        config,
        timings,
        dephasing,
        decay_curve,
        bootstrap_resamples,
        max_iterations,
        confidence_resamples,
        observed_rate: raw.budget.observed_rate,
        target_coincidences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec, SpecErrors> {
        validate_spec(text, &Overrides { output_dir: Some("out".into()), ..Overrides::default() })
    }

    #[test]
    fn empty_file_is_default_budget() {
        let spec = parse("").unwrap();
        assert_eq!(spec.mode, Mode::Budget);
        assert_eq!(spec.config, LinkConfig::default());
        assert_eq!(spec.name, "budget");
        assert_eq!(spec.seed, 0);
        assert!(spec.timings.is_none());
    }

    #[test]
    fn probability_out_of_range_names_field_and_range() {
        let err = parse("[link]\neta = 1.3\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].contains("link.eta"), "{err}");
        assert!(err.0[0].contains("(0, 1]"), "{err}");
    }

    #[test]
    fn decay_curve_requires_dephasing() {
        let err = parse("[experiment]\nmode = \"decay_curve\"\n").unwrap_err();
        assert!(err.to_string().contains("[dephasing]"), "{err}");
        assert!(parse("[experiment]\nmode = \"decay_curve\"\n[dephasing]\n").is_ok());
    }

    #[test]
    fn witness_requires_timings_and_dephasing() {
        let err = parse("[experiment]\nmode = \"witness\"\n").unwrap_err();
        assert_eq!(err.0.len(), 2, "{err}");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse("[link]\netta = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("etta"), "{err}");
        assert!(parse("[linkk]\n").is_err());
    }

    #[test]
    fn errors_are_collected() {
        let err = parse("[experiment]\nf0 = 0.3\n[link]\ndet_eff = 0\ntransport = 2\n").unwrap_err();
        assert_eq!(err.0.len(), 3, "{err}");
    }

    #[test]
    fn units_are_converted() {
        let spec = parse(
            "[experiment]\nmode = \"witness\"\n[timings]\nt_at_us = 100\nt_bec_us = 5\n[dephasing]\nsigma_b_at_mg = 2.0\n",
        )
        .unwrap();
        let t = spec.timings.unwrap();
        assert!((t.t_at - 100e-6).abs() < 1e-18 && (t.t_bec - 5e-6).abs() < 1e-18);
        assert!((spec.dephasing.unwrap().sigma_b_at - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn overrides_win() {
        let text = "[experiment]\nseed = 4\nshots = 10\nmode = \"g2\"\n";
        let o = Overrides { mode: Some(Mode::Budget), seed: Some(9), shots: Some(77), output_dir: Some("x".into()) };
        let spec = validate_spec(text, &o).unwrap();
        assert_eq!((spec.mode, spec.seed, spec.shots), (Mode::Budget, 9, 77));
        assert_eq!(spec.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn hash_ignores_seed_and_location() {
        let a = parse("[experiment]\nseed = 1\n").unwrap();
        let b = validate_spec("[experiment]\nseed = 2\noutput_dir = \"elsewhere\"\n", &Overrides::default()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse("[link]\neta = 0.2\n").unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
