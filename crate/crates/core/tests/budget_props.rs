use proptest::prelude::*;
use qlink::budget::{acquisition_time, eit_window, expected_coincidence_rate, BudgetChain, EitParams};

fn chain(factors: &[f64]) -> BudgetChain {
    let mut c = BudgetChain::new();
    for (i, f) in factors.iter().enumerate() {
        c.push(&format!("f{i}"), *f, "").unwrap();
    }
    c
}

proptest! {
    #[test]
    fn product_ignores_order(mut v in proptest::collection::vec(0.01f64..=1.0, 1..10), seed in any::<u64>()) {
        let a = expected_coincidence_rate(&chain(&v)).unwrap();
        let n = v.len();
        v.rotate_left((seed as usize) % n);
        v.reverse();
        let b = expected_coincidence_rate(&chain(&v)).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn product_decreases_with_any_factor(v in proptest::collection::vec(0.01f64..=1.0, 1..10), idx in any::<usize>(), shrink in 0.01f64..0.99) {
        let a = expected_coincidence_rate(&chain(&v)).unwrap();
        let mut w = v.clone();
        let i = idx % w.len();
        w[i] *= shrink;
        prop_assert!(expected_coincidence_rate(&chain(&w)).unwrap() < a);
    }

    #[test]
    fn eit_window_scales_with_frequency(k in 0.01f64..100.0) {
        let p = EitParams::default();
        let scaled = EitParams { omega_c: p.omega_c * k, gamma: p.gamma * k, ..p };
        let ratio = eit_window(&scaled).unwrap() / eit_window(&p).unwrap();
        prop_assert!((ratio / k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn acquisition_never_undershoots(target in 1.0f64..1e4, rate in 1e-8f64..1e-2, shots in 1.0f64..1e6, cycle in 0.1f64..100.0) {
        let t = acquisition_time(target, rate, shots, cycle).unwrap();
        let becs = t / cycle;
        prop_assert!(becs * shots * rate >= target * (1.0 - 1e-9));
        prop_assert!((becs - 1.0) * shots * rate < target);
    }
}
