//! Dense linear algebra for one- and two-qubit polarization/spin states.
//!
//! Two-qubit operators are 4×4 complex matrices in the basis
//! |00⟩, |01⟩, |10⟩, |11⟩ with qubit A as the most significant index.
//!
//! Physical labels are carried by logical qubits:
//!
//! | carrier          | logical 0   | logical 1   |
//! |------------------|-------------|-------------|
//! | photon           | R           | L           |
//! | cavity atom      | \|1,+1⟩     | \|1,−1⟩     |
//! | BEC magnon       | \|2,+1⟩     | \|2,−1⟩     |
//!
//! Measurement bases are labelled by Pauli operators: circular R/L ↔ Z,
//! linear H/V ↔ X, diagonal D/A ↔ Y.

use std::fmt;

use nalgebra::{Complex, Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix2c = Matrix2<C64>;
pub type Matrix4c = Matrix4<C64>;

/// Tolerance used for Hermiticity, trace and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-10;
/// Tolerance on the norm of kets.
pub const KET_TOLERANCE: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Matrix2c {
        let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        match self {
            Pauli::X => Matrix2::new(z, o, o, z),
            Pauli::Y => Matrix2::new(z, -i, i, z),
            Pauli::Z => Matrix2::new(o, z, z, -o),
        }
    }

    /// Eigenvector for outcome `+1` (`positive = true`) or `−1`.
    pub fn eigenvector(self, positive: bool) -> Vector2<C64> {
        let s = if positive { 1.0 } else { -1.0 };
        match self {
            Pauli::Z if positive => Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
            Pauli::Z => Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
            Pauli::X => Vector2::new(c(FRAC_1_SQRT_2, 0.0), c(s * FRAC_1_SQRT_2, 0.0)),
            Pauli::Y => Vector2::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, s * FRAC_1_SQRT_2)),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_label(label: &str) -> Option<Pauli> {
        match label.trim() {
            "X" | "x" => Some(Pauli::X),
            "Y" | "y" => Some(Pauli::Y),
            "Z" | "z" => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A pair of local polarization bases, one per station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub basis_a: Pauli,
    pub basis_b: Pauli,
}

impl MeasurementSetting {
    pub const fn new(basis_a: Pauli, basis_b: Pauli) -> Self {
        Self { basis_a, basis_b }
    }

    /// All nine tomographic settings, A-major.
    pub fn all() -> [MeasurementSetting; 9] {
        let mut out = [MeasurementSetting::new(Pauli::X, Pauli::X); 9];
        for (i, a) in Pauli::ALL.iter().enumerate() {
            for (j, b) in Pauli::ALL.iter().enumerate() {
                out[3 * i + j] = MeasurementSetting::new(*a, *b);
            }
        }
        out
    }

    /// The diagonal settings XX, YY, ZZ used by the fidelity witness.
    pub fn witness() -> [MeasurementSetting; 3] {
        Pauli::ALL.map(|p| MeasurementSetting::new(p, p))
    }

    pub fn is_diagonal(&self) -> bool {
        self.basis_a == self.basis_b
    }

    /// Product eigenvector for outcome index `k` in `pp, pm, mp, mm` order.
    pub fn outcome_vector(&self, k: usize) -> Vector4<C64> {
        let va = self.basis_a.eigenvector(k < 2);
        let vb = self.basis_b.eigenvector(k.is_multiple_of(2));
        Vector4::new(va[0] * vb[0], va[0] * vb[1], va[1] * vb[0], va[1] * vb[1])
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.basis_a.label(), self.basis_b.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    A,
    B,
}

/// Normalized single-qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitKet(Vector2<C64>);

impl QubitKet {
    pub fn new(amp0: C64, amp1: C64) -> Result<Self> {
        let norm_sqr = amp0.norm_sqr() + amp1.norm_sqr();
        if (norm_sqr - 1.0).abs() > KET_TOLERANCE {
            return Err(Error::UnnormalizedKet(norm_sqr));
        }
        Ok(Self(Vector2::new(amp0, amp1)))
    }

    pub fn zero() -> Self {
        Self(Vector2::new(c(1.0, 0.0), c(0.0, 0.0)))
    }

    pub fn one() -> Self {
        Self(Vector2::new(c(0.0, 0.0), c(1.0, 0.0)))
    }

    pub fn amplitudes(&self) -> &Vector2<C64> {
        &self.0
    }

    pub fn tensor(&self, other: &QubitKet) -> TwoQubitKet {
        let (a, b) = (&self.0, &other.0);
        TwoQubitKet(Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]))
    }
}

/// Two-qubit pure state. Normalization is checked where it matters
/// (see [`fidelity`]), so superpositions can be assembled term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitKet(Vector4<C64>);

impl TwoQubitKet {
    pub fn from_amplitudes(amplitudes: [C64; 4]) -> Self {
        Self(Vector4::from(amplitudes))
    }

    /// (|01⟩ − |10⟩)/√2
    pub fn singlet() -> Self {
        let s = FRAC_1_SQRT_2;
        Self::from_amplitudes([c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)])
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(self.0 * factor)
    }

    pub fn add(&self, other: &TwoQubitKet) -> Self {
        Self(self.0 + other.0)
    }

    pub fn projector(&self) -> Matrix4c {
        self.0 * self.0.adjoint()
    }
}

/// Density matrix of the two logical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    matrix: Matrix4c,
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: Matrix4c) -> Result<Self> {
        let herm_dev = (matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_dev > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm_dev:.3e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > STATE_TOLERANCE || trace.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min_eig = min_eigenvalue(&matrix);
        if min_eig < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { matrix })
    }

    /// Skips validation. Callers guarantee the invariants by construction.
    pub(crate) fn from_matrix_unchecked(matrix: Matrix4c) -> Self {
        Self { matrix }
    }

    pub fn from_ket(ket: &TwoQubitKet) -> Result<Self> {
        let n = ket.norm_sqr();
        if (n - 1.0).abs() > KET_TOLERANCE {
            return Err(Error::UnnormalizedKet(n));
        }
        Ok(Self { matrix: ket.projector() })
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: Matrix4c::identity() * c(0.25, 0.0) }
    }

    /// Computational basis product state |ab⟩⟨ab|.
    pub fn basis(a: u8, b: u8) -> Self {
        let mut matrix = Matrix4c::zeros();
        let k = 2 * (a as usize & 1) + (b as usize & 1);
        matrix[(k, k)] = c(1.0, 0.0);
        Self { matrix }
    }

    /// Convex combination `weight·self + (1 − weight)·other`.
    pub fn mix(&self, other: &TwoQubitState, weight: f64) -> Result<Self> {
        crate::error::check_probability("weight", weight)?;
        Ok(Self {
            matrix: self.matrix * c(weight, 0.0) + other.matrix * c(1.0 - weight, 0.0),
        })
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix4c {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// |ψ⁻⟩⟨ψ⁻| with |ψ⁻⟩ = (|01⟩ − |10⟩)/√2.
pub fn singlet() -> TwoQubitState {
    TwoQubitState::from_matrix_unchecked(TwoQubitKet::singlet().projector())
}

/// ⟨target|ρ|target⟩.
pub fn fidelity(rho: &TwoQubitState, target: &TwoQubitKet) -> Result<f64> {
    let n = target.norm_sqr();
    if (n - 1.0).abs() > KET_TOLERANCE {
        return Err(Error::UnnormalizedKet(n));
    }
    let v = target.amplitudes();
    Ok((v.adjoint() * rho.matrix() * v)[(0, 0)].re)
}

/// Born-rule probabilities of the four outcomes of `setting`, in
/// `pp, pm, mp, mm` order. Tiny negative round-off is clamped to zero.
pub fn outcome_probabilities(rho: &TwoQubitState, setting: MeasurementSetting) -> [f64; 4] {
    std::array::from_fn(|k| {
        let v = setting.outcome_vector(k);
        (v.adjoint() * rho.matrix() * v)[(0, 0)].re.max(0.0)
    })
}

/// tr(ρ · σ_a ⊗ σ_b).
pub fn pauli_correlation(rho: &TwoQubitState, setting: MeasurementSetting) -> f64 {
    let op = kron(&setting.basis_a.matrix(), &setting.basis_b.matrix());
    (rho.matrix() * op).trace().re
}

/// Single-station expectation tr(ρ · σ ⊗ I) or tr(ρ · I ⊗ σ).
pub fn local_expectation(rho: &TwoQubitState, qubit: Qubit, basis: Pauli) -> f64 {
    let id = Matrix2c::identity();
    let op = match qubit {
        Qubit::A => kron(&basis.matrix(), &id),
        Qubit::B => kron(&id, &basis.matrix()),
    };
    (rho.matrix() * op).trace().re
}

pub fn kron(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    Matrix4c::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Partial transpose on qubit B.
pub fn partial_transpose(rho: &TwoQubitState) -> Matrix4c {
    partial_transpose_matrix(rho.matrix())
}

pub fn partial_transpose_matrix(m: &Matrix4c) -> Matrix4c {
    // (a b | a' b') -> (a b' | a' b)
    Matrix4c::from_fn(|r, col| {
        let (a, b) = (r / 2, r % 2);
        let (ap, bp) = (col / 2, col % 2);
        m[(2 * a + bp, 2 * ap + b)]
    })
}

/// Eigenvalues of a Hermitian 4×4 matrix, ascending.
pub fn hermitian_eigenvalues(m: &Matrix4c) -> [f64; 4] {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let ev = herm.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(f64::total_cmp);
    out
}

pub fn min_eigenvalue(m: &Matrix4c) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Sum of the magnitudes of the negative eigenvalues of ρ^{T_B}.
pub fn negativity(rho: &TwoQubitState) -> f64 {
    hermitian_eigenvalues(&partial_transpose(rho))
        .iter()
        .filter(|&&x| x < 0.0)
        .map(|x| -x)
        .sum()
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &TwoQubitState, sigma: &TwoQubitState) -> f64 {
    0.5 * hermitian_eigenvalues(&(rho.matrix() - sigma.matrix()))
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

fn unitarity_deviation(u: &Matrix2c) -> f64 {
    (u.adjoint() * u - Matrix2c::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// (u_a ⊗ u_b) ρ (u_a ⊗ u_b)†.
pub fn apply_local_unitary(
    rho: &TwoQubitState,
    u_a: &Matrix2c,
    u_b: &Matrix2c,
) -> Result<TwoQubitState> {
    for u in [u_a, u_b] {
        let dev = unitarity_deviation(u);
        if dev > STATE_TOLERANCE {
            return Err(Error::NotUnitary(dev));
        }
    }
    let u = kron(u_a, u_b);
    Ok(TwoQubitState::from_matrix_unchecked(u * rho.matrix() * u.adjoint()))
}

/// diag(1, e^{iφ}).
pub fn phase_gate(phase: f64) -> Matrix2c {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex::from_polar(1.0, phase))
}
