//! Maximum-likelihood two-qubit state tomography from nine Pauli settings.
//!
//! The state is parametrized as ρ = T†T / tr(T†T) with T lower triangular
//! and real on the diagonal (16 real parameters), so every iterate is a
//! valid density matrix. The multinomial log-likelihood
//! Σ n_k ln tr(ρ Π_k) over the 36 outcome projectors is maximized by BFGS
//! with a backtracking line search that only accepts improving steps.
//! Element-wise errors come from a parametric bootstrap: counts are
//! resampled from the fitted state with the observed per-setting totals and
//! refitted.

use nalgebra::{Complex, SMatrix, SVector, Vector4};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_sim::{CountTable, SettingCounts};
use crate::quantum::{
    fidelity, kron, outcome_probabilities, singlet, Matrix2c, Matrix4c, MeasurementSetting, Pauli, Qubit,
    TwoQubitKet, TwoQubitState, C64,
};
use crate::rng::StreamSeed;

const NPARAM: usize = 16;
type Params = SVector<f64, NPARAM>;
type Hessian = SMatrix<f64, NPARAM, NPARAM>;

/// Weight of I/4 mixed into the starting point so every outcome with
/// counts starts at non-zero probability.
const START_MIXING: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyOptions {
    pub max_iterations: usize,
    /// Stop once an iteration improves the mean log-likelihood per
    /// coincidence by less than this.
    pub tolerance: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        Self { max_iterations: 20_000, tolerance: 1e-10, bootstrap_resamples: 1000, seed: 0 }
    }
}

/// Output of a single likelihood maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub rho: TwoQubitState,
    /// Σ n_k ln p_k, without the multinomial coefficients.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood of every accepted iterate, starting point first.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub rho: TwoQubitState,
    /// Bootstrap standard deviation of Re ρ_ij.
    pub std_err_re: [[f64; 4]; 4],
    /// Bootstrap standard deviation of Im ρ_ij.
    pub std_err_im: [[f64; 4]; 4],
    pub log_likelihood: f64,
    pub iterations: usize,
    pub bootstrap_resamples: usize,
}

impl TomographyResult {
    pub fn report(&self) -> TomographyReport {
        let m = self.rho.matrix();
        TomographyReport {
            real: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)].re)),
            imag: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)].im)),
            std_err_real: self.std_err_re,
            std_err_imag: self.std_err_im,
            log_likelihood: self.log_likelihood,
            iterations: self.iterations,
            bootstrap_resamples: self.bootstrap_resamples,
            fidelity: fidelity_from_rho(self),
        }
    }
}

/// Serializable view: row-major real and imaginary parts and their errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
    pub std_err_real: [[f64; 4]; 4],
    pub std_err_imag: [[f64; 4]; 4],
    pub log_likelihood: f64,
    pub iterations: usize,
    pub bootstrap_resamples: usize,
    pub fidelity: f64,
}

/// ⟨ψ⁻|ρ|ψ⁻⟩ of the reconstruction.
pub fn fidelity_from_rho(result: &TomographyResult) -> f64 {
    fidelity(&result.rho, &TwoQubitKet::singlet()).expect("singlet is normalized")
}

/// The 36 outcome projectors with their counts.
struct Data {
    vectors: Vec<Vector4<C64>>,
    counts: Vec<f64>,
    total: f64,
}

impl Data {
    fn new(counts: &CountTable) -> Result<Self> {
        let mut vectors = Vec::with_capacity(36);
        let mut n = Vec::with_capacity(36);
        for setting in MeasurementSetting::all() {
            let c = counts.require(setting)?;
            for k in 0..4 {
                vectors.push(setting.outcome_vector(k));
                n.push(c.outcomes[k] as f64);
            }
        }
        let total = n.iter().sum();
        Ok(Self { vectors, counts: n, total })
    }
}

fn params_to_t(x: &Params) -> Matrix4c {
    let mut t = Matrix4c::zeros();
    for i in 0..4 {
        t[(i, i)] = Complex::new(x[i], 0.0);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            t[(i, j)] = Complex::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

fn t_to_params(t: &Matrix4c) -> Params {
    let mut x = Params::zeros();
    for i in 0..4 {
        x[i] = t[(i, i)].re;
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            x[k] = t[(i, j)].re;
            x[k + 1] = t[(i, j)].im;
            k += 2;
        }
    }
    x
}

/// Lower-triangular T with T†T = ρ for a positive-definite ρ.
fn t_from_state(rho: &Matrix4c) -> Option<Matrix4c> {
    // Reversal J: Cholesky of JρJ = LL† gives T = J L† J.
    let rev = Matrix4c::from_fn(|r, c| m_reverse(rho, r, c));
    let chol = rev.cholesky()?;
    let l = chol.l();
    let lt = l.adjoint();
    Some(Matrix4c::from_fn(|r, c| lt[(3 - r, 3 - c)]))
}

fn m_reverse(m: &Matrix4c, r: usize, c: usize) -> C64 {
    m[(3 - r, 3 - c)]
}

fn rho_from_params(x: &Params) -> Matrix4c {
    let t = params_to_t(x);
    let a = t.adjoint() * t;
    let s = a.trace().re;
    a / Complex::new(s, 0.0)
}

/// Negative mean log-likelihood and its gradient.
fn objective(data: &Data, x: &Params) -> (f64, Params) {
    let t = params_to_t(x);
    let a = t.adjoint() * t;
    let s = a.trace().re;
    let mut f = 0.0;
    let mut g = Matrix4c::zeros();
    for (v, &n) in data.vectors.iter().zip(&data.counts) {
        if n == 0.0 {
            continue;
        }
        let q = (v.adjoint() * a * v)[(0, 0)].re;
        if q <= 0.0 {
            return (f64::INFINITY, Params::zeros());
        }
        f += n * (q / s).ln();
        g += v * v.adjoint() * Complex::new(n / q, 0.0);
    }
    for i in 0..4 {
        g[(i, i)] -= Complex::new(data.total / s, 0.0);
    }
    // dL/dRe T_ij = 2 Re (T G)_ij, dL/dIm T_ij = 2 Im (T G)_ij
    let tg = t * g;
    let mut grad = t_to_params(&tg) * 2.0;
    for i in 0..4 {
        grad[i] = 2.0 * tg[(i, i)].re;
    }
    (-f / data.total, -grad / data.total)
}

/// Linear-inversion estimate Σ S_μν σ_μ⊗σ_ν / 4 (may be unphysical).
pub fn linear_inversion(counts: &CountTable) -> Result<Matrix4c> {
    let paulis = |p: Option<Pauli>| p.map_or_else(Matrix2c::identity, Pauli::matrix);
    let mut single = [[0.0f64; 3]; 2];
    let mut single_n = [[0usize; 3]; 2];
    let mut rho = kron(&Matrix2c::identity(), &Matrix2c::identity());
    for setting in MeasurementSetting::all() {
        let c = counts.require(setting)?;
        let n = c.coincidences() as f64;
        let [pp, pm, mp, mm] = c.outcomes.map(|x| x as f64);
        let corr = (pp + mm - pm - mp) / n;
        rho += kron(&setting.basis_a.matrix(), &setting.basis_b.matrix()) * Complex::new(corr, 0.0);
        let ia = setting.basis_a as usize;
        let ib = setting.basis_b as usize;
        single[0][ia] += (pp + pm - mp - mm) / n;
        single_n[0][ia] += 1;
        single[1][ib] += (pp + mp - pm - mm) / n;
        single_n[1][ib] += 1;
    }
    for (q, qubit) in [Qubit::A, Qubit::B].into_iter().enumerate() {
        for p in Pauli::ALL {
            let mean = single[q][p as usize] / single_n[q][p as usize] as f64;
            let op = match qubit {
                Qubit::A => kron(&paulis(Some(p)), &paulis(None)),
                Qubit::B => kron(&paulis(None), &paulis(Some(p))),
            };
            rho += op * Complex::new(mean, 0.0);
        }
    }
    Ok(rho / Complex::new(4.0, 0.0))
}

/// Linear inversion with negative eigenvalues clipped, mixed slightly with
/// I/4; I/4 itself when nothing physical survives.
fn starting_state(counts: &CountTable) -> Result<Matrix4c> {
    let mixed = Matrix4c::identity() / Complex::new(4.0, 0.0);
    let lin = linear_inversion(counts)?;
    let herm = (lin + lin.adjoint()) / Complex::new(2.0, 0.0);
    let eig = herm.symmetric_eigen();
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let trace: f64 = clipped.iter().sum();
    if !(trace.is_finite() && trace > 1e-12) {
        return Ok(mixed);
    }
    let mut proj = Matrix4c::zeros();
    for (k, &l) in clipped.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        proj += v * v.adjoint() * Complex::new(l / trace, 0.0);
    }
    Ok(proj * Complex::new(1.0 - START_MIXING, 0.0) + mixed * Complex::new(START_MIXING, 0.0))
}

/// Maximizes the likelihood without error analysis.
pub fn mle_fit(counts: &CountTable, options: &TomographyOptions) -> Result<MleFit> {
    let data = Data::new(counts)?;
    if data.total == 0.0 {
        return Err(Error::InvalidParameter { name: "counts", reason: "no coincidences".into() });
    }
    let start = starting_state(counts)?;
    let t0 = t_from_state(&start).or_else(|| t_from_state(&(Matrix4c::identity() / Complex::new(4.0, 0.0))));
    let mut x = t_to_params(&t0.expect("I/4 is positive definite"));

    let (mut f, mut g) = objective(&data, &x);
    let mut h = Hessian::identity();
    let mut history = vec![-f * data.total];
    let mut last_improvement = f64::INFINITY;

    for iter in 1..=options.max_iterations {
        let mut dir = -(h * g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            h = Hessian::identity();
            dir = -g;
            slope = g.dot(&dir);
        }
        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..60 {
            let trial = x + dir * step;
            let (ft, gt) = objective(&data, &trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope && ft <= f {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if h != Hessian::identity() {
                h = Hessian::identity();
                continue;
            }
            // No ascent direction is left at working precision.
            return Ok(finish(&data, &x, f, iter, history));
        };

        let s = x_new - x;
        let y = g_new - g;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = h * y;
            h += (s * s.transpose()) * (rho * rho * y.dot(&hy) + rho) - (hy * s.transpose() + s * hy.transpose()) * rho;
        }
        last_improvement = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(-f * data.total);

        // Keep tr(T†T) near 1; the likelihood does not depend on it.
        let scale = x.norm_squared();
        if !(0.25..=4.0).contains(&scale) {
            x /= scale.sqrt();
            let (f2, g2) = objective(&data, &x);
            f = f2;
            g = g2;
            h = Hessian::identity();
        }

        if last_improvement < options.tolerance {
            return Ok(finish(&data, &x, f, iter, history));
        }
    }
    Err(Error::NonConvergence {
        iterations: options.max_iterations,
        best_log_likelihood: -f * data.total,
        last_improvement,
        best_rho: Box::new(TwoQubitState::from_matrix_unchecked(rho_from_params(&x))),
    })
}

fn finish(data: &Data, x: &Params, f: f64, iterations: usize, history: Vec<f64>) -> MleFit {
    MleFit {
        rho: TwoQubitState::from_matrix_unchecked(rho_from_params(x)),
        log_likelihood: -f * data.total,
        iterations,
        history,
    }
}

/// Resamples counts from `rho` keeping each setting's coincidence total.
fn resample_counts(rho: &TwoQubitState, template: &CountTable, rng: &mut impl rand::Rng) -> CountTable {
    template
        .iter()
        .map(|(setting, c)| {
            let p = outcome_probabilities(rho, *setting);
            let mut left = c.coincidences();
            let mut mass = 1.0;
            let mut outcomes = [0u64; 4];
            for k in 0..3 {
                let q = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
                let draw = Binomial::new(left, q).expect("valid binomial").sample(rng);
                outcomes[k] = draw;
                left -= draw;
                mass -= p[k];
            }
            outcomes[3] = left;
            (*setting, SettingCounts { outcomes, shots: c.shots })
        })
        .collect()
}

/// Full reconstruction with bootstrap error bars.
pub fn mle_tomography(counts: &CountTable, options: &TomographyOptions) -> Result<TomographyResult> {
    let fit = mle_fit(counts, options)?;
    let seed = StreamSeed::new(options.seed);

    let replicas: Vec<Matrix4c> = (0..options.bootstrap_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i);
            let resampled = resample_counts(&fit.rho, counts, &mut rng);
            match mle_fit(&resampled, options) {
                Ok(f) => f.rho.into_matrix(),
                Err(Error::NonConvergence { best_rho, .. }) => best_rho.into_matrix(),
                Err(e) => panic!("bootstrap refit failed on resampled counts: {e}"),
            }
        })
        .collect();

    let mut std_err_re = [[0.0; 4]; 4];
    let mut std_err_im = [[0.0; 4]; 4];
    if replicas.len() > 1 {
        let n = replicas.len() as f64;
        let mean = replicas.iter().fold(Matrix4c::zeros(), |acc, m| acc + m) / Complex::new(n, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                let (mut vr, mut vi) = (0.0, 0.0);
                for m in &replicas {
                    let d = m[(r, c)] - mean[(r, c)];
                    vr += d.re * d.re;
                    vi += d.im * d.im;
                }
                std_err_re[r][c] = (vr / (n - 1.0)).sqrt();
                std_err_im[r][c] = (vi / (n - 1.0)).sqrt();
            }
        }
    }

    Ok(TomographyResult {
        rho: fit.rho,
        std_err_re,
        std_err_im,
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
        bootstrap_resamples: options.bootstrap_resamples,
    })
}

/// Counts proportional to the exact outcome probabilities of `rho`.
pub(crate) fn expected_counts(rho: &TwoQubitState, per_setting: f64) -> CountTable {
    MeasurementSetting::all()
        .into_iter()
        .map(|s| {
            let p = outcome_probabilities(rho, s);
            let outcomes = p.map(|x| (x * per_setting).round() as u64);
            (s, SettingCounts::from_outcomes(outcomes))
        })
        .collect()
}

#[allow(dead_code)]
pub(crate) fn singlet_counts(per_setting: f64) -> CountTable {
    expected_counts(&singlet(), per_setting)
}
