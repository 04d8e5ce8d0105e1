use burgers_harness::fit::{fit_power_law, two_point_exponent};
use proptest::prelude::*;

proptest! {
    #[test]
    fn recovers_exact_power_laws(p in -2.0f64..2.0, c in 0.01f64..100.0, lo in -2.0f64..4.0, n in 4usize..20) {
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = 10f64.powf(lo + 0.25 * i as f64);
                (t, c * t.powf(-p))
            })
            .collect();
        let fit = fit_power_law(&samples).unwrap();
        prop_assert!((fit.exponent - p).abs() <= 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() <= 1e-8 * (1.0 + lo.abs() * p.abs()));
        prop_assert!(fit.residuals.iter().all(|r| r.abs() <= 1e-9));
        let (a, b) = (samples[0], samples[n - 1]);
        prop_assert!((two_point_exponent(a, b) - p).abs() <= 1e-9);
    }

    #[test]
    fn rejects_non_positive_values(n in 4usize..10, bad in 0usize..10) {
        let bad = bad % n;
        let samples: Vec<(f64, f64)> = (0..n).map(|i| (1.0 + i as f64, if i == bad { 0.0 } else { 1.0 })).collect();
        prop_assert!(fit_power_law(&samples).is_err());
    }
}
