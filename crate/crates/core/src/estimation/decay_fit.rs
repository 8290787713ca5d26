//! Weighted least-squares fit of F(t) = 1/2 + (F0 − 1/2)·exp(−ln2·t²/t½²).

use std::f64::consts::LN_2;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayDatum {
    /// Storage time, seconds.
    pub t: f64,
    pub f: f64,
    pub f_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub f0: f64,
    pub f0_err: f64,
    /// Time at which F − 1/2 has halved, seconds.
    pub half_time: f64,
    pub half_time_err: f64,
    /// √(χ²/dof).
    pub residual_norm: f64,
    pub points: Vec<DecayDatum>,
}

pub fn gaussian_decay_model(t: f64, f0: f64, half_time: f64) -> f64 {
    0.5 + (f0 - 0.5) * (-LN_2 * t * t / (half_time * half_time)).exp()
}

const GRID: usize = 400;
const MAX_LM_ITERATIONS: usize = 200;

struct Problem<'a> {
    points: &'a [DecayDatum],
}

impl Problem<'_> {
    fn chi2(&self, amp: f64, half_time: f64) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let r = (p.f - gaussian_decay_model(p.t, 0.5 + amp, half_time)) / p.f_err;
                r * r
            })
            .sum()
    }

    /// Best amplitude at fixed half-time (the model is linear in it).
    fn profile_amplitude(&self, half_time: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for p in self.points {
            let w = 1.0 / (p.f_err * p.f_err);
            let e = (-LN_2 * p.t * p.t / (half_time * half_time)).exp();
            num += w * e * (p.f - 0.5);
            den += w * e * e;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// JᵀWJ and JᵀW r in (amplitude, half-time).
    fn normal_equations(&self, amp: f64, half_time: f64) -> (Matrix2<f64>, Vector2<f64>) {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for p in self.points {
            let w = 1.0 / (p.f_err * p.f_err);
            let e = (-LN_2 * p.t * p.t / (half_time * half_time)).exp();
            let j = Vector2::new(e, amp * e * 2.0 * LN_2 * p.t * p.t / half_time.powi(3));
            let r = p.f - (0.5 + amp * e);
            jtj += j * j.transpose() * w;
            jtr += j * (w * r);
        }
        (jtj, jtr)
    }
}

/// Fits the Gaussian decay with inverse-variance weights.
///
/// Starts from a profile-likelihood grid over t½ and refines with
/// Levenberg–Marquardt. Errors are the square roots of the diagonal of
/// (JᵀWJ)⁻¹ at the optimum.
pub fn fit_gaussian_decay(points: &[DecayDatum]) -> Result<DecayFit> {
    if points.len() < 3 {
        return Err(Error::FitRejected(format!("need at least 3 points, got {}", points.len())));
    }
    for p in points {
        if !p.f_err.is_finite() || p.f_err <= 0.0 {
            return Err(Error::FitRejected(format!("point at t = {} has f_err = {}", p.t, p.f_err)));
        }
        if !p.t.is_finite() || !p.f.is_finite() || p.t < 0.0 {
            return Err(Error::FitRejected(format!("point at t = {} is not a finite, non-negative time", p.t)));
        }
    }
    if points.iter().all(|p| p.f < 0.5) {
        return Err(Error::FitRejected("all points are below 1/2; there is no excess fidelity to fit".into()));
    }
    let t_min = points.iter().map(|p| p.t).filter(|&t| t > 0.0).fold(f64::INFINITY, f64::min);
    let t_max = points.iter().map(|p| p.t).fold(0.0, f64::max);
    if !t_min.is_finite() {
        return Err(Error::FitRejected("all points are at t = 0; the half-time is not identifiable".into()));
    }

    let problem = Problem { points };
    let (lo, hi) = ((t_min / 10.0).ln(), (t_max * 10.0).ln());
    let (mut amp, mut half_time, mut chi2) = (0.0, t_max, f64::INFINITY);
    for i in 0..GRID {
        let h = (lo + (hi - lo) * i as f64 / (GRID - 1) as f64).exp();
        let a = problem.profile_amplitude(h);
        let c = problem.chi2(a, h);
        if c < chi2 {
            (amp, half_time, chi2) = (a, h, c);
        }
    }

    let mut lambda = 1e-3;
    for _ in 0..MAX_LM_ITERATIONS {
        let (jtj, jtr) = problem.normal_equations(amp, half_time);
        let mut improved = false;
        while lambda < 1e12 {
            let damped = jtj + Matrix2::from_diagonal(&jtj.diagonal()) * lambda;
            let Some(step) = damped.try_inverse().map(|m| m * jtr) else {
                lambda *= 10.0;
                continue;
            };
            let (a, h) = (amp + step[0], half_time + step[1]);
            let c = if h > 0.0 { problem.chi2(a, h) } else { f64::INFINITY };
            if c <= chi2 {
                let done = chi2 - c <= 1e-12 * chi2.max(1e-300) && step[1].abs() <= 1e-12 * half_time;
                (amp, half_time, chi2) = (a, h, c);
                lambda = (lambda / 10.0).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let (jtj, _) = problem.normal_equations(amp, half_time);
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::FitRejected("singular curvature matrix; the parameters are degenerate".into()))?;
    let dof = (points.len() - 2) as f64;
    Ok(DecayFit {
        f0: 0.5 + amp,
        f0_err: cov[(0, 0)].max(0.0).sqrt(),
        half_time,
        half_time_err: cov[(1, 1)].max(0.0).sqrt(),
        residual_norm: (chi2 / dof).sqrt(),
        points: points.to_vec(),
    })
}
