use proptest::prelude::*;
use qlink::estimation::{mle_fit, witness_estimate, TomographyOptions};
use qlink::event_sim::{simulate_run, CountTable, LinkConfig, SettingCounts};
use qlink::protocol::source_emit_with_fidelity;
use qlink::quantum::{min_eigenvalue, MeasurementSetting, TwoQubitState};

#[test]
fn witness_is_unbiased_and_calibrated() {
    let rho = source_emit_with_fidelity(0.9).unwrap().into_state();
    let reps = 10_000u64;
    let (mut sum, mut sum_sq, mut se_sq) = (0.0, 0.0, 0.0);
    for r in 0..reps {
        let counts = simulate_run(&rho, &LinkConfig::ideal(), &MeasurementSetting::witness(), 300, 1000 + r).unwrap();
        let (f, se) = witness_estimate(&counts).unwrap();
        sum += f;
        sum_sq += f * f;
        se_sq += se * se;
    }
    let n = reps as f64;
    let mean = sum / n;
    let sd = ((sum_sq - n * mean * mean) / (n - 1.0)).sqrt();
    assert!((mean - 0.9).abs() < 3.0 * sd / n.sqrt(), "mean {mean}, sd {sd}");
    let reported = (se_sq / n).sqrt();
    assert!((reported / sd - 1.0).abs() < 0.2, "reported {reported} vs empirical {sd}");
}

fn arb_counts() -> impl Strategy<Value = CountTable> {
    proptest::collection::vec(proptest::array::uniform4(0u64..40), 9)
        .prop_filter("every setting has counts", |v| v.iter().all(|o| o.iter().sum::<u64>() > 0))
        .prop_map(|v| {
            MeasurementSetting::all().into_iter().zip(v).map(|(s, o)| (s, SettingCounts::from_outcomes(o))).collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mle_output_is_always_a_state(counts in arb_counts()) {
        let fit = mle_fit(&counts, &TomographyOptions::default()).unwrap();
        let m = *fit.rho.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(min_eigenvalue(&m) > -1e-10);
        prop_assert!(TwoQubitState::new(m).is_ok());
        prop_assert!(fit.history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(*fit.history.last().unwrap(), fit.log_likelihood);
    }
}
