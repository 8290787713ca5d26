mod common;

use common::*;
use proptest::prelude::*;
use qlink::budget::{expected_coincidence_rate, BudgetChain};
use qlink::event_sim::{
    calibrate_pa_rate, photoassociation_decay, simulate_decay_curve, simulate_g2, simulate_run, LinkConfig,
};
use qlink::protocol::DephasingParams;
use qlink::quantum::{outcome_probabilities, singlet, MeasurementSetting};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn born_rule_chi_square_per_setting() {
    // 99% point of χ² with 3 degrees of freedom.
    const CRITICAL: f64 = 11.345;
    let raw: Vec<f64> = (0..32).map(|i| ((i * 13 % 11) as f64 - 5.0) / 5.0).collect();
    let rho = state_from_raw(&raw);
    let settings = MeasurementSetting::all();
    let counts = simulate_run(&rho, &LinkConfig::ideal(), &settings, 9_000_000, 77).unwrap();
    for s in settings {
        let c = counts.get(s).unwrap();
        assert_eq!(c.coincidences(), 1_000_000);
        let n = c.coincidences() as f64;
        let p = outcome_probabilities(&rho, s);
        let chi2: f64 = (0..4)
            .filter(|&k| p[k] > 0.0)
            .map(|k| {
                let e = n * p[k];
                (c.outcomes[k] as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < CRITICAL, "{s}: χ² = {chi2}");
    }
}

#[test]
fn identical_across_thread_counts() {
    let cfg = LinkConfig { dark_count_prob: 1e-4, ..LinkConfig::default() };
    let settings = MeasurementSetting::all();
    let run = || simulate_run(&singlet(), &cfg, &settings, 2_000_000, 9).unwrap();
    let one = in_pool(1, run);
    let many = in_pool(8, run);
    assert_eq!(one, many);
    let curve = |threads| {
        in_pool(threads, || {
            simulate_decay_curve(0.95, &DephasingParams::default(), &LinkConfig::ideal(), &[(1e-6, 1e-6), (1e-4, 1e-4)], 999, 4)
                .unwrap()
        })
    };
    assert_eq!(curve(1), curve(6));
    let g2 = |threads| in_pool(threads, || simulate_g2(&LinkConfig::default(), 1_000_000, 3).unwrap());
    assert_eq!(g2(1), g2(5));
}

#[test]
fn rate_converges_to_budget() {
    let cfg = LinkConfig::default();
    let shots = 20_000_000u64;
    let counts = simulate_run(&singlet(), &cfg, &MeasurementSetting::witness(), shots, 12).unwrap();
    let expected = expected_coincidence_rate(&BudgetChain::from_link_config(&cfg).unwrap()).unwrap();
    let observed = counts.total_coincidences() as f64 / shots as f64;
    let se = (expected * (1.0 - expected) / shots as f64).sqrt();
    assert!((observed - expected).abs() < 3.0 * se, "{observed} vs {expected} ± {se}");
}

proptest! {
    #[test]
    fn photoassociation_round_trip(n0 in 1.0f64..1e8, frac in 1e-4f64..0.9999, cycles in 1.0f64..1e6) {
        let n_final = n0 * frac;
        let rate = calibrate_pa_rate(n0, n_final, cycles).unwrap();
        let back = photoassociation_decay(n0, cycles, rate).unwrap();
        prop_assert!(((back - n_final) / n_final).abs() < 1e-12);
    }
}
