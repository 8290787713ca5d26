//! The link's state machine and its phase/dephasing channels.
//!
//! A heralded run passes through three stages:
//!
//! 1. the cavity atom emits a photon entangled with its spin,
//! 2. the photon is written into the BEC as a magnon,
//! 3. both matter qubits are read out as photons.
//!
//! Under the logical encoding documented in [`crate::quantum`] every stage
//! holds the same logical singlet, so the stage transitions only relabel the
//! carriers. Losses are not modeled here; these are post-selected states.

use std::f64::consts::{LN_2, PI};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, Error, Result};
use crate::quantum::{
    apply_local_unitary, phase_gate, singlet, Matrix2c, Qubit, TwoQubitKet, TwoQubitState,
};

/// μ_B/h in Hz per gauss.
pub const BOHR_MAGNETON_HZ_PER_GAUSS: f64 = 1.3996e6;

/// Differential Zeeman rate between the two logical levels, rad/(s·G).
///
/// Both |1,±1⟩ (g_F = −1/2) and |2,±1⟩ (g_F = +1/2) are split by μ_B·B.
pub const ZEEMAN_COEFF: f64 = 2.0 * PI * BOHR_MAGNETON_HZ_PER_GAUSS;

/// Default photon duration plus transport time, seconds.
pub const DEFAULT_TAU: f64 = 0.6e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTimings {
    /// Delay between the two cavity photons, seconds.
    pub t_at: f64,
    /// Storage time in the BEC, seconds.
    pub t_bec: f64,
    /// Photon duration plus transport time, seconds.
    pub tau: f64,
}

impl Default for LinkTimings {
    fn default() -> Self {
        Self { t_at: 1e-6, t_bec: 1e-6, tau: DEFAULT_TAU }
    }
}

impl LinkTimings {
    pub fn new(t_at: f64, t_bec: f64, tau: f64) -> Result<Self> {
        let t = Self { t_at, t_bec, tau };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("t_at", self.t_at)?;
        check_non_negative("t_bec", self.t_bec)?;
        check_non_negative("tau", self.tau)
    }

    /// t_bec / tau.
    pub fn storage_ratio(&self) -> f64 {
        self.t_bec / self.tau
    }
}

/// Magnetic environment of both nodes. Fields are in gauss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    /// RMS field noise at the cavity atom.
    pub sigma_b_at: f64,
    /// RMS field noise at the BEC.
    pub sigma_b_bec: f64,
    pub hold_b_at: f64,
    pub hold_b_bec: f64,
    /// rad/(s·G)
    pub zeeman_coeff: f64,
    /// Collisional phase rate of the magnon, rad/s. Zero: the two magnon
    /// levels have equal scattering lengths near B = 0.
    pub mean_field_phase_rate: f64,
}

impl Default for DephasingParams {
    fn default() -> Self {
        Self {
            sigma_b_at: 1.0e-3,
            sigma_b_bec: 0.3e-3,
            hold_b_at: 40e-3,
            hold_b_bec: 100e-3,
            zeeman_coeff: ZEEMAN_COEFF,
            mean_field_phase_rate: 0.0,
        }
    }
}

impl DephasingParams {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("sigma_b_at", self.sigma_b_at)?;
        check_non_negative("sigma_b_bec", self.sigma_b_bec)?;
        check_non_negative("zeeman_coeff", self.zeeman_coeff)?;
        if !self.hold_b_at.is_finite() || !self.hold_b_bec.is_finite() {
            return Err(Error::InvalidParameter {
                name: "hold_b",
                reason: "hold fields must be finite".into(),
            });
        }
        Ok(())
    }

    /// RMS phase-noise rate at the atom, rad/s.
    pub fn omega_at(&self) -> f64 {
        self.zeeman_coeff * self.sigma_b_at
    }

    pub fn omega_bec(&self) -> f64 {
        self.zeeman_coeff * self.sigma_b_bec
    }

    /// Half-time of the excess fidelity when only the atom dephases.
    pub fn atom_half_time(&self) -> f64 {
        excess_half_time(self.omega_at())
    }

    pub fn bec_half_time(&self) -> f64 {
        excess_half_time(self.omega_bec())
    }

    /// Half-time when t_at = t_bec = t.
    pub fn combined_half_time(&self) -> f64 {
        excess_half_time(self.omega_at().hypot(self.omega_bec()))
    }
}

/// Time at which exp(−(ωt)²/2) = 1/2.
pub fn excess_half_time(omega: f64) -> f64 {
    (2.0 * LN_2).sqrt() / omega
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Carrier {
    Photon,
    CavityAtom,
    Magnon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    R,
    L,
}

/// Cavity-atom Zeeman level |1, m_f⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomLevel {
    Plus1,
    Minus1,
}

/// Magnon level |2, m_f⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagnonLevel {
    Plus1,
    Minus1,
}

impl Polarization {
    pub fn logical(self) -> usize {
        match self {
            Polarization::R => 0,
            Polarization::L => 1,
        }
    }

    /// Magnon level a photon of this polarization is written into.
    pub fn stored_as(self) -> MagnonLevel {
        match self {
            Polarization::L => MagnonLevel::Minus1,
            Polarization::R => MagnonLevel::Plus1,
        }
    }
}

impl AtomLevel {
    pub fn logical(self) -> usize {
        match self {
            AtomLevel::Plus1 => 0,
            AtomLevel::Minus1 => 1,
        }
    }
}

impl MagnonLevel {
    pub fn logical(self) -> usize {
        match self {
            MagnonLevel::Plus1 => 0,
            MagnonLevel::Minus1 => 1,
        }
    }
}

fn basis_ket(a: usize, b: usize) -> TwoQubitKet {
    let mut amps = [Complex::new(0.0, 0.0); 4];
    amps[2 * a + b] = Complex::new(1.0, 0.0);
    TwoQubitKet::from_amplitudes(amps)
}

/// (|x⟩|y⟩ − |x'⟩|y'⟩)/√2 from logical indices.
fn antisymmetric_pair(first: (usize, usize), second: (usize, usize)) -> TwoQubitKet {
    let s = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    basis_ket(first.0, first.1)
        .scale(s)
        .add(&basis_ket(second.0, second.1).scale(-s))
}

/// Atom–photon state (|1,1⟩|L⟩ − |1,−1⟩|R⟩)/√2.
pub fn atom_photon_ket() -> TwoQubitKet {
    antisymmetric_pair(
        (AtomLevel::Plus1.logical(), Polarization::L.logical()),
        (AtomLevel::Minus1.logical(), Polarization::R.logical()),
    )
}

/// Atom–BEC state (|1,1⟩|2,−1⟩ − |1,−1⟩|2,1⟩)/√2.
pub fn atom_magnon_ket() -> TwoQubitKet {
    antisymmetric_pair(
        (AtomLevel::Plus1.logical(), Polarization::L.stored_as().logical()),
        (AtomLevel::Minus1.logical(), Polarization::R.stored_as().logical()),
    )
}

/// Photon–photon state (|R⟩|L⟩ − |L⟩|R⟩)/√2.
pub fn photon_photon_ket() -> TwoQubitKet {
    antisymmetric_pair(
        (Polarization::R.logical(), Polarization::L.logical()),
        (Polarization::L.logical(), Polarization::R.logical()),
    )
}

/// A two-qubit state together with the physical carrier of each qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    rho: TwoQubitState,
    carriers: [Carrier; 2],
}

impl LinkState {
    pub fn state(&self) -> &TwoQubitState {
        &self.rho
    }

    pub fn into_state(self) -> TwoQubitState {
        self.rho
    }

    pub fn carrier(&self, qubit: Qubit) -> Carrier {
        match qubit {
            Qubit::A => self.carriers[0],
            Qubit::B => self.carriers[1],
        }
    }

    /// Applies a channel to the logical state, keeping the carriers.
    pub fn map_state<F>(self, f: F) -> Result<Self>
    where
        F: FnOnce(&TwoQubitState) -> Result<TwoQubitState>,
    {
        Ok(Self { rho: f(&self.rho)?, carriers: self.carriers })
    }
}

/// Emission from the cavity: atom ⊗ photon.
pub fn source_emit() -> LinkState {
    let rho = TwoQubitState::from_ket(&atom_photon_ket()).expect("normalized by construction");
    LinkState { rho, carriers: [Carrier::CavityAtom, Carrier::Photon] }
}

/// Emission with an imperfect source of singlet fidelity `f0`.
///
/// The imperfection is modeled as Z-basis dephasing of the singlet
/// (coherence 2·f0 − 1), so that further dephasing drives F towards 1/2.
pub fn source_emit_with_fidelity(f0: f64) -> Result<LinkState> {
    if !(0.5..=1.0).contains(&f0) {
        return Err(Error::InvalidParameter {
            name: "f0",
            reason: format!("{f0} is outside [0.5, 1]"),
        });
    }
    let mut m = *singlet().matrix();
    let coherence = Complex::new(2.0 * f0 - 1.0, 0.0);
    m[(1, 2)] *= coherence;
    m[(2, 1)] *= coherence;
    Ok(LinkState {
        rho: TwoQubitState::from_matrix_unchecked(m),
        carriers: [Carrier::CavityAtom, Carrier::Photon],
    })
}

/// Writes the photon (qubit B) into the BEC. The logical state is unchanged.
pub fn store_in_memory(state: LinkState) -> Result<LinkState> {
    match state.carriers[1] {
        Carrier::Photon => Ok(LinkState { carriers: [state.carriers[0], Carrier::Magnon], ..state }),
        other => Err(Error::Protocol(format!(
            "cannot store qubit B: it is carried by {other:?}, not a photon"
        ))),
    }
}

/// Maps both matter qubits back onto photons.
pub fn readout(state: LinkState) -> Result<LinkState> {
    match state.carriers {
        [Carrier::CavityAtom, Carrier::Magnon] => {
            Ok(LinkState { carriers: [Carrier::Photon, Carrier::Photon], ..state })
        }
        other => Err(Error::Protocol(format!(
            "readout needs (CavityAtom, Magnon), found {other:?}"
        ))),
    }
}

/// Relative phase accumulated between the logical levels, radians.
pub fn larmor_phase(b_field: f64, duration: f64, coeff: f64) -> Result<f64> {
    check_non_negative("duration", duration)?;
    Ok(coeff * b_field * duration)
}

fn on_qubit(rho: &TwoQubitState, qubit: Qubit, u: &Matrix2c) -> TwoQubitState {
    let id = Matrix2c::identity();
    let res = match qubit {
        Qubit::A => apply_local_unitary(rho, u, &id),
        Qubit::B => apply_local_unitary(rho, &id, u),
    };
    res.expect("phase gates are unitary")
}

/// diag(1, e^{iφ}) on one qubit.
pub fn apply_larmor(rho: &TwoQubitState, qubit: Qubit, phase: f64) -> TwoQubitState {
    on_qubit(rho, qubit, &phase_gate(phase))
}

/// Undoes [`apply_larmor`] (the wave-plate setting).
pub fn compensate_larmor(rho: &TwoQubitState, qubit: Qubit, phase: f64) -> TwoQubitState {
    apply_larmor(rho, qubit, -phase)
}

/// Averages [`apply_larmor`] over a zero-mean Gaussian phase of RMS
/// `sigma_phi`: the coherences of `qubit` shrink by exp(−σ²/2).
pub fn apply_dephasing(rho: &TwoQubitState, qubit: Qubit, sigma_phi: f64) -> Result<TwoQubitState> {
    check_non_negative("sigma_phi", sigma_phi)?;
    let damping = (-0.5 * sigma_phi * sigma_phi).exp();
    let bit = |k: usize| match qubit {
        Qubit::A => k / 2,
        Qubit::B => k % 2,
    };
    let mut m = *rho.matrix();
    for r in 0..4 {
        for col in 0..4 {
            if bit(r) != bit(col) {
                m[(r, col)] *= damping;
            }
        }
    }
    Ok(TwoQubitState::from_matrix_unchecked(m))
}

/// Closed-form singlet fidelity after Gaussian dephasing of both nodes.
pub fn fidelity_vs_time(f0: f64, params: &DephasingParams, timings: &LinkTimings) -> Result<f64> {
    if !(f0 > 0.5 && f0 <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "f0",
            reason: format!("{f0} is outside (0.5, 1]"),
        });
    }
    params.validate()?;
    timings.validate()?;
    let a = params.omega_at() * timings.t_at;
    let b = params.omega_bec() * timings.t_bec;
    Ok(0.5 + (f0 - 0.5) * (-0.5 * a * a - 0.5 * b * b).exp())
}

/// Whether the photon is stored before the second cavity photon is made.
pub fn matter_matter_interval_exists(timings: &LinkTimings) -> bool {
    timings.t_at > timings.tau && timings.t_bec > timings.tau
}

/// Full heralded pipeline: emission, storage, hold-field precession and
/// its compensation, field-noise dephasing, readout.
pub fn run_pipeline(f0: f64, params: &DephasingParams, timings: &LinkTimings) -> Result<LinkState> {
    params.validate()?;
    timings.validate()?;
    let phase_at = larmor_phase(params.hold_b_at, timings.t_at, params.zeeman_coeff)?;
    let phase_bec = larmor_phase(params.hold_b_bec, timings.t_bec, params.zeeman_coeff)?
        + params.mean_field_phase_rate * timings.t_bec;
    let sigma_at = params.omega_at() * timings.t_at;
    let sigma_bec = params.omega_bec() * timings.t_bec;

    let state = source_emit_with_fidelity(f0)?;
    let state = state.map_state(|r| Ok(apply_larmor(r, Qubit::A, phase_at)))?;
    let state = store_in_memory(state)?;
    let state = state
        .map_state(|r| Ok(apply_larmor(r, Qubit::B, phase_bec)))?
        .map_state(|r| apply_dephasing(r, Qubit::A, sigma_at))?
        .map_state(|r| apply_dephasing(r, Qubit::B, sigma_bec))?
        .map_state(|r| Ok(compensate_larmor(r, Qubit::A, phase_at)))?
        .map_state(|r| Ok(compensate_larmor(r, Qubit::B, phase_bec)))?;
    readout(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{fidelity, pauli_correlation, MeasurementSetting, Pauli};

    fn psi() -> TwoQubitKet {
        TwoQubitKet::singlet()
    }

    #[test]
    fn all_stages_are_the_logical_singlet() {
        for ket in [atom_photon_ket(), atom_magnon_ket(), photon_photon_ket()] {
            assert!((ket.amplitudes() - psi().amplitudes()).norm() < 1e-15);
        }
    }

    #[test]
    fn ideal_pipeline() {
        let s = source_emit();
        assert_eq!(s.carrier(Qubit::A), Carrier::CavityAtom);
        assert!((fidelity(s.state(), &psi()).unwrap() - 1.0).abs() < 1e-12);
        let zz = MeasurementSetting::new(Pauli::Z, Pauli::Z);
        assert!((pauli_correlation(s.state(), zz) + 1.0).abs() < 1e-12);

        let stored = store_in_memory(s.clone()).unwrap();
        assert_eq!(stored.carrier(Qubit::B), Carrier::Magnon);
        assert_eq!(stored.state(), s.state());

        let out = readout(stored).unwrap();
        assert_eq!(out.carrier(Qubit::A), Carrier::Photon);
        assert_eq!(out.carrier(Qubit::B), Carrier::Photon);
        assert!((fidelity(out.state(), &psi()).unwrap() - 1.0).abs() < 1e-12);
        for setting in MeasurementSetting::witness() {
            assert!((pauli_correlation(out.state(), setting) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stage_discipline() {
        let stored = store_in_memory(source_emit()).unwrap();
        assert!(matches!(store_in_memory(stored.clone()), Err(Error::Protocol(_))));
        assert!(matches!(readout(source_emit()), Err(Error::Protocol(_))));
        let out = readout(stored).unwrap();
        assert!(readout(out).is_err());
    }

    #[test]
    fn larmor_phase_examples() {
        assert_eq!(larmor_phase(0.1, 0.0, ZEEMAN_COEFF).unwrap(), 0.0);
        let phi = larmor_phase(0.1, 1e-6, ZEEMAN_COEFF).unwrap();
        // 2π · 1.3996e6 · 0.1 · 1e-6
        assert!((phi - 0.879_394_6).abs() < 1e-6, "{phi}");
        let one = larmor_phase(0.04, 3e-6, ZEEMAN_COEFF).unwrap();
        let two = larmor_phase(0.04, 6e-6, ZEEMAN_COEFF).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
        assert!(larmor_phase(0.1, -1.0, ZEEMAN_COEFF).is_err());
    }

    #[test]
    fn larmor_rotation_and_compensation() {
        let rho = singlet();
        assert_eq!(apply_larmor(&rho, Qubit::A, 0.0), rho);
        let full = apply_larmor(&rho, Qubit::B, 2.0 * PI);
        assert!((full.matrix() - rho.matrix()).norm() < 1e-12);

        let phi = 1.1;
        let rotated = apply_larmor(&rho, Qubit::A, phi);
        let f = fidelity(&rotated, &psi()).unwrap();
        assert!((f - (1.0 + phi.cos()) / 2.0).abs() < 1e-12);

        let back = compensate_larmor(&rotated, Qubit::A, phi);
        assert!((back.matrix() - rho.matrix()).norm() < 1e-12);

        let wrong = apply_larmor(&rotated, Qubit::A, phi);
        let f = fidelity(&wrong, &psi()).unwrap();
        assert!((f - (1.0 + (2.0 * phi).cos()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dephasing_examples() {
        let rho = singlet();
        assert_eq!(apply_dephasing(&rho, Qubit::A, 0.0).unwrap(), rho);
        let sigma = (2.0 * LN_2).sqrt();
        let f = fidelity(&apply_dephasing(&rho, Qubit::A, sigma).unwrap(), &psi()).unwrap();
        assert!((f - 0.75).abs() < 1e-12);
        let f = fidelity(&apply_dephasing(&rho, Qubit::B, 50.0).unwrap(), &psi()).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
        assert!(apply_dephasing(&rho, Qubit::A, -0.1).is_err());

        let sigma = 0.8;
        let out = readout(
            store_in_memory(source_emit())
                .unwrap()
                .map_state(|r| apply_dephasing(r, Qubit::B, sigma))
                .unwrap(),
        )
        .unwrap();
        let expected = 0.5 + 0.5 * (-sigma * sigma / 2.0).exp();
        assert!((fidelity(out.state(), &psi()).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn dephasing_composes_in_quadrature() {
        let rho = source_emit_with_fidelity(0.9).unwrap().into_state();
        let (s1, s2) = (0.4, 1.3);
        let twice = apply_dephasing(&apply_dephasing(&rho, Qubit::A, s1).unwrap(), Qubit::A, s2).unwrap();
        let once = apply_dephasing(&rho, Qubit::A, s1.hypot(s2)).unwrap();
        assert!((twice.matrix() - once.matrix()).norm() < 1e-12);
    }

    #[test]
    fn half_times_from_field_noise() {
        let p = DephasingParams::default();
        assert!((p.atom_half_time() * 1e6 - 133.9).abs() < 0.05, "{}", p.atom_half_time());
        assert!((p.bec_half_time() * 1e6 - 446.3).abs() < 0.05, "{}", p.bec_half_time());
        let t = LinkTimings { t_at: p.atom_half_time(), t_bec: 0.0, tau: DEFAULT_TAU };
        let f = fidelity_vs_time(0.9, &p, &t).unwrap();
        assert!((f - 0.7).abs() < 1e-12);
    }

    #[test]
    fn fidelity_vs_time_limits() {
        let p = DephasingParams::default();
        let zero = LinkTimings { t_at: 0.0, t_bec: 0.0, tau: DEFAULT_TAU };
        assert_eq!(fidelity_vs_time(0.95, &p, &zero).unwrap(), 0.95);
        let late = LinkTimings { t_at: 0.1, t_bec: 0.1, tau: DEFAULT_TAU };
        assert!((fidelity_vs_time(0.95, &p, &late).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity_vs_time(0.5, &p, &zero).is_err());
        assert!(fidelity_vs_time(1.01, &p, &zero).is_err());
    }

    #[test]
    fn pipeline_matches_closed_form() {
        let p = DephasingParams::default();
        for (t_at, t_bec) in [(1e-6, 1e-6), (100e-6, 100e-6), (150e-6, 1e-6), (1e-6, 400e-6)] {
            let t = LinkTimings { t_at, t_bec, tau: DEFAULT_TAU };
            let out = run_pipeline(0.95, &p, &t).unwrap();
            let f = fidelity(out.state(), &psi()).unwrap();
            assert!((f - fidelity_vs_time(0.95, &p, &t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn matter_matter_interval() {
        assert!(matter_matter_interval_exists(&LinkTimings::new(1e-6, 1e-6, 0.6e-6).unwrap()));
        assert!(!matter_matter_interval_exists(&LinkTimings::new(0.5e-6, 1e-6, 0.6e-6).unwrap()));
        let long = LinkTimings::new(100e-6, 100e-6, 0.6e-6).unwrap();
        assert!(matter_matter_interval_exists(&long));
        assert!((long.storage_ratio() - 166.67).abs() < 0.01);
        assert!(LinkTimings::new(-1.0, 0.0, 0.0).is_err());
    }
}
