#![allow(dead_code)]

use nalgebra::Complex;
use proptest::prelude::*;
use qlink::quantum::{Matrix2c, Matrix4c, TwoQubitKet, TwoQubitState, C64};

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// ρ = AA†/tr(AA†) from 32 raw reals.
pub fn state_from_raw(raw: &[f64]) -> TwoQubitState {
    let a = Matrix4c::from_fn(|r, col| c(raw[2 * (4 * r + col)], raw[2 * (4 * r + col) + 1]));
    let m = a * a.adjoint();
    let tr = m.trace().re;
    TwoQubitState::new(m / c(tr, 0.0)).expect("AA† is a state")
}

pub fn arb_state() -> impl Strategy<Value = TwoQubitState> {
    proptest::collection::vec(-1.0f64..1.0, 32)
        .prop_filter("non-degenerate", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| state_from_raw(&v))
}

/// e^{iα} Rz(β) Ry(γ) Rz(δ).
pub fn unitary(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Matrix2c {
    let rz = |t: f64| Matrix2c::new(Complex::from_polar(1.0, -t / 2.0), c(0.0, 0.0), c(0.0, 0.0), Complex::from_polar(1.0, t / 2.0));
    let ry = Matrix2c::new(
        c((gamma / 2.0).cos(), 0.0),
        c(-(gamma / 2.0).sin(), 0.0),
        c((gamma / 2.0).sin(), 0.0),
        c((gamma / 2.0).cos(), 0.0),
    );
    rz(beta) * ry * rz(delta) * Complex::from_polar(1.0, alpha)
}

pub fn arb_unitary() -> impl Strategy<Value = Matrix2c> {
    let a = -std::f64::consts::PI..std::f64::consts::PI;
    (a.clone(), a.clone(), a.clone(), a).prop_map(|(w, x, y, z)| unitary(w, x, y, z))
}

pub fn bell_states() -> [TwoQubitKet; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    [
        TwoQubitKet::from_amplitudes([z, c(h, 0.0), c(-h, 0.0), z]),
        TwoQubitKet::from_amplitudes([z, c(h, 0.0), c(h, 0.0), z]),
        TwoQubitKet::from_amplitudes([c(h, 0.0), z, z, c(-h, 0.0)]),
        TwoQubitKet::from_amplitudes([c(h, 0.0), z, z, c(h, 0.0)]),
    ]
}

pub fn bell_diagonal(weights: [f64; 4]) -> TwoQubitState {
    let total: f64 = weights.iter().sum();
    let m = bell_states()
        .iter()
        .zip(weights)
        .fold(Matrix4c::zeros(), |acc, (k, w)| acc + k.projector() * c(w / total, 0.0));
    TwoQubitState::new(m).unwrap()
}
