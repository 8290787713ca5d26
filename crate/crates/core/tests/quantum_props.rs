mod common;

use common::*;
use proptest::prelude::*;
use qlink::quantum::{
    apply_local_unitary, fidelity, hermitian_eigenvalues, partial_transpose_matrix, pauli_correlation, Matrix4c,
    MeasurementSetting, TwoQubitKet,
};

/// Cyclic Jacobi on the real 8×8 embedding [[Re, −Im], [Im, Re]] of a
/// Hermitian 4×4 matrix. Every eigenvalue appears twice.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigenvalues(m: &Matrix4c) -> [f64; 4] {
    let mut a = [[0.0f64; 8]; 8];
    for r in 0..4 {
        for col in 0..4 {
            let z = m[(r, col)];
            a[r][col] = z.re;
            a[r + 4][col + 4] = z.re;
            a[r][col + 4] = -z.im;
            a[r + 4][col] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..8 {
            for q in (p + 1)..8 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..8 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..8 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..8).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    [d[0], d[2], d[4], d[6]]
}

fn witness_formula(rho: &qlink::quantum::TwoQubitState) -> f64 {
    let e: f64 = MeasurementSetting::witness().iter().map(|s| pauli_correlation(rho, *s)).sum();
    (1.0 - e) / 4.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fidelity_is_linear(r1 in arb_state(), r2 in arb_state(), a in 0.0f64..=1.0) {
        let psi = TwoQubitKet::singlet();
        let mixed = r1.mix(&r2, a).unwrap();
        let lhs = fidelity(&mixed, &psi).unwrap();
        let rhs = a * fidelity(&r1, &psi).unwrap() + (1.0 - a) * fidelity(&r2, &psi).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution(rho in arb_state()) {
        let m = *rho.matrix();
        prop_assert_eq!(partial_transpose_matrix(&partial_transpose_matrix(&m)), m);
    }

    #[test]
    fn local_unitaries_preserve_spectrum(rho in arb_state(), ua in arb_unitary(), ub in arb_unitary()) {
        let out = apply_local_unitary(&rho, &ua, &ub).unwrap();
        let before = rho.eigenvalues();
        let after = out.eigenvalues();
        for k in 0..4 {
            prop_assert!((before[k] - after[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_match_jacobi_oracle(rho in arb_state()) {
        let ours = hermitian_eigenvalues(rho.matrix());
        let oracle = jacobi_eigenvalues(rho.matrix());
        for k in 0..4 {
            prop_assert!((ours[k] - oracle[k]).abs() < 1e-10, "{:?} vs {:?}", ours, oracle);
        }
    }

    #[test]
    fn partial_transpose_spectrum_matches_oracle(rho in arb_state()) {
        let pt = partial_transpose_matrix(rho.matrix());
        let ours = hermitian_eigenvalues(&pt);
        let oracle = jacobi_eigenvalues(&pt);
        for k in 0..4 {
            prop_assert!((ours[k] - oracle[k]).abs() < 1e-10);
        }
    }

    // The singlet projector is (I − XX − YY − ZZ)/4, so the three-setting
    // formula is exact for every state, not only Bell-diagonal ones.
    #[test]
    fn witness_formula_equals_fidelity_for_any_state(rho in arb_state()) {
        let f = fidelity(&rho, &TwoQubitKet::singlet()).unwrap();
        prop_assert!((f - witness_formula(&rho)).abs() < 1e-10);
    }
}

#[test]
fn witness_formula_on_random_bell_diagonal_states() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        let rho = bell_diagonal(w);
        let f = fidelity(&rho, &TwoQubitKet::singlet()).unwrap();
        assert!((f - witness_formula(&rho)).abs() < 1e-10);
        assert!((f - w[0] / w.iter().sum::<f64>()).abs() < 1e-10);
    }
}

#[test]
fn witness_formula_does_not_certify_other_targets() {
    // For a target other than the singlet the three correlations are not
    // enough: |Φ⁺⟩ has fidelity 1 with itself but witness value 0.
    let phi_plus = bell_states()[3];
    let rho = qlink::quantum::TwoQubitState::from_ket(&phi_plus).unwrap();
    assert!((fidelity(&rho, &phi_plus).unwrap() - 1.0).abs() < 1e-12);
    assert!(witness_formula(&rho).abs() < 1e-12);
}
