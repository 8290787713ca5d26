//! Runs a validated spec and writes its output files.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use qlink::budget::{acquisition_time, expected_coincidence_rate, BudgetChain, BudgetReport};
use qlink::estimation::{
    fit_gaussian_decay, mle_tomography, witness_estimate, witness_fidelity, ConfidenceOptions, DecayDatum,
    TomographyOptions, TomographyReport, WitnessResult,
};
use qlink::event_sim::{simulate_decay_curve, simulate_g2, simulate_run, CountTable, G2Estimate, PhotonStatistics};
use qlink::protocol::{run_pipeline, DephasingParams, LinkTimings};
use qlink::quantum::MeasurementSetting;
use serde::Serialize;

use crate::spec::{ExperimentSpec, Mode, Sweep};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] qlink::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

type Result<T> = std::result::Result<T, RunError>;

/// Provenance stamped on every output file.
#[derive(Debug, Clone, Serialize)]
struct Stamp {
    spec_hash: String,
    seed: u64,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    spec_hash: &'a str,
    seed: u64,
    mode: &'static str,
    name: &'a str,
    #[serde(flatten)]
    body: T,
}

struct Writer<'a> {
    spec: &'a ExperimentSpec,
    stamp: Stamp,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self> {
        fs::create_dir_all(&spec.output_dir).map_err(|source| RunError::Io { path: spec.output_dir.clone(), source })?;
        Ok(Self { spec, stamp: Stamp { spec_hash: spec.hash(), seed: spec.seed }, written: Vec::new() })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.spec.output_dir.join(format!("{}_{suffix}", self.spec.name))
    }

    fn header(&self) -> String {
        format!("# spec_hash={} seed={}\n", self.stamp.spec_hash, self.stamp.seed)
    }

    fn write(&mut self, suffix: &str, contents: &str) -> Result<()> {
        let path = self.path(suffix);
        fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, suffix: &str, body: &str) -> Result<()> {
        let contents = format!("{}{body}", self.header());
        self.write(suffix, &contents)
    }

    fn json<T: Serialize>(&mut self, suffix: &str, body: T) -> Result<()> {
        let doc = Stamped {
            spec_hash: &self.stamp.spec_hash,
            seed: self.stamp.seed,
            mode: self.spec.mode.as_str(),
            name: &self.spec.name,
            body,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("results serialize");
        s.push('\n');
        self.write(suffix, &s)
    }

    fn counts(&mut self, counts: &CountTable) -> Result<()> {
        self.text("counts.csv", &counts.to_csv_string())
    }
}

/// Executes the spec; returns the files written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let mut w = Writer::new(spec)?;
    match spec.mode {
        Mode::Witness => witness(spec, &mut w)?,
        Mode::Tomography => tomography(spec, &mut w)?,
        Mode::DecayCurve => decay_curve(spec, &mut w)?,
        Mode::Budget => budget(spec, &mut w)?,
        Mode::G2 => g2(spec, &mut w)?,
    }
    Ok(w.written)
}

fn required(spec: &ExperimentSpec) -> (LinkTimings, DephasingParams) {
    (
        spec.timings.expect("validated: timings present"),
        spec.dephasing.expect("validated: dephasing present"),
    )
}

fn witness(spec: &ExperimentSpec, w: &mut Writer) -> Result<()> {
    let (timings, dephasing) = required(spec);
    let state = run_pipeline(spec.f0, &dephasing, &timings)?.into_state();
    let counts = simulate_run(&state, &spec.config, &MeasurementSetting::witness(), spec.shots, spec.seed)?;
    w.counts(&counts)?;
    let options = ConfidenceOptions { resamples: spec.confidence_resamples, seed: spec.seed };
    let result: WitnessResult = witness_fidelity(&counts, &options)?;
    #[derive(Serialize)]
    struct Body {
        #[serde(flatten)]
        result: WitnessResult,
        coincidences: u64,
        shots: u64,
    }
    w.json("witness.json", Body { result, coincidences: counts.total_coincidences(), shots: spec.shots })
}

fn render_matrix(title: &str, m: &[[f64; 4]; 4], err: &[[f64; 4]; 4]) -> String {
    let mut s = format!("{title}\n");
    for (row, erow) in m.iter().zip(err) {
        let cells: Vec<String> = row.iter().zip(erow).map(|(v, e)| format!("{v:+.4}±{e:.4}")).collect();
        let _ = writeln!(s, "  {}", cells.join("  "));
    }
    s
}

fn tomography(spec: &ExperimentSpec, w: &mut Writer) -> Result<()> {
    let (timings, dephasing) = required(spec);
    let state = run_pipeline(spec.f0, &dephasing, &timings)?.into_state();
    let counts = simulate_run(&state, &spec.config, &MeasurementSetting::all(), spec.shots, spec.seed)?;
    w.counts(&counts)?;
    let options = TomographyOptions {
        max_iterations: spec.max_iterations,
        bootstrap_resamples: spec.bootstrap_resamples,
        seed: spec.seed,
        ..TomographyOptions::default()
    };
    let report: TomographyReport = mle_tomography(&counts, &options)?.report();
    let mut text = String::from("basis order: RR, RL, LR, LL\n\n");
    text += &render_matrix("Re(rho)", &report.real, &report.std_err_real);
    text.push('\n');
    text += &render_matrix("Im(rho)", &report.imag, &report.std_err_imag);
    let _ = writeln!(text, "\nfidelity with singlet: {:.4}", report.fidelity);
    w.text("rho.txt", &text)?;
    w.json("tomography.json", report)
}

fn decay_curve(spec: &ExperimentSpec, w: &mut Writer) -> Result<()> {
    let dephasing = spec.dephasing.expect("validated: dephasing present");
    let dc = &spec.decay_curve;
    let points: Vec<(f64, f64)> = dc
        .times
        .iter()
        .map(|&t| match dc.sweep {
            Sweep::Both => (t, t),
            Sweep::Atom => (t, dc.fixed_time),
            Sweep::Memory => (dc.fixed_time, t),
        })
        .collect();
    let curve = simulate_decay_curve(spec.f0, &dephasing, &spec.config, &points, spec.shots, spec.seed)?;
    let mut data = Vec::with_capacity(curve.len());
    let mut csv = String::from("t,f_hat,f_err\n");
    for (p, &t) in curve.iter().zip(&dc.times) {
        let (f, f_err) = witness_estimate(&p.counts)?;
        let _ = writeln!(csv, "{t:e},{f},{f_err}");
        data.push(DecayDatum { t, f, f_err });
    }
    w.text("points.csv", &csv)?;
    let fit = fit_gaussian_decay(&data)?;
    // Half-time the dephasing parameters predict for this sweep, for
    // comparison with the fitted one.
    let model_half_time = match dc.sweep {
        Sweep::Both => dephasing.combined_half_time(),
        Sweep::Atom => dephasing.atom_half_time(),
        Sweep::Memory => dephasing.bec_half_time(),
    };
    #[derive(Serialize)]
    struct Body {
        sweep: Sweep,
        model_half_time: f64,
        #[serde(flatten)]
        fit: qlink::estimation::DecayFit,
    }
    w.json("decay_fit.json", Body { sweep: dc.sweep, model_half_time, fit })
}

fn budget(spec: &ExperimentSpec, w: &mut Writer) -> Result<()> {
    let chain = BudgetChain::from_link_config(&spec.config)?;
    let report = BudgetReport::new(&chain, spec.observed_rate)?;
    let rate = spec.observed_rate.unwrap_or(expected_coincidence_rate(&chain)?);
    let time = acquisition_time(spec.target_coincidences, rate, spec.config.shots_per_bec, spec.config.bec_cycle_time)?;
    let mut text = report.to_text();
    let _ = writeln!(
        text,
        "\n{} coincidences at {rate:.3e}/shot: {time:.0} s ({:.2} h)",
        spec.target_coincidences,
        time / 3600.0
    );
    w.text("budget.txt", &text)?;
    #[derive(Serialize)]
    struct Body {
        #[serde(flatten)]
        report: BudgetReport,
        target_coincidences: f64,
        acquisition_rate: f64,
        acquisition_time_s: f64,
    }
    w.json(
        "budget.json",
        Body { report, target_coincidences: spec.target_coincidences, acquisition_rate: rate, acquisition_time_s: time },
    )
}

fn g2(spec: &ExperimentSpec, w: &mut Writer) -> Result<()> {
    let est: G2Estimate = simulate_g2(&spec.config, spec.shots, spec.seed)?;
    #[derive(Serialize)]
    struct Body {
        #[serde(flatten)]
        estimate: G2Estimate,
        analytic_g2: f64,
    }
    let analytic_g2 = PhotonStatistics::from_config(&spec.config).analytic_g2();
    w.json("g2.json", Body { estimate: est, analytic_g2 })
}

pub fn describe(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\n")
}
