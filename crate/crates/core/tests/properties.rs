use burgers_core::heat::heat_eval;
use burgers_core::hopf_cole::{eval, eval_derivatives_exact};
use burgers_core::initial_data::{make_family, negate_reflect, FamilySpec, InitialData};
use burgers_core::numeric::gk21;
use burgers_core::profiles::{cusp, mu_scale, Branch, Case, ProfileCase};
use burgers_core::rescaled::concentration_ratio;
use proptest::prelude::*;

fn data() -> impl Strategy<Value = InitialData> {
    (0usize..4, 0.3f64..3.0, 0.2f64..0.8).prop_map(|(which, kappa, alpha)| {
        let spec = match which {
            0 => FamilySpec::power_c0(kappa, alpha),
            1 => FamilySpec::power_c1(kappa, alpha),
            2 => FamilySpec::sign_flipped(kappa, alpha),
            _ => FamilySpec::asymmetric(kappa, alpha, (alpha + 0.15).min(0.95)),
        };
        make_family(spec).unwrap()
    })
}

fn log_time() -> impl Strategy<Value = f64> {
    (-1.0f64..4.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflection_is_odd_symmetry(id in data(), x in -60.0f64..60.0, t in log_time()) {
        let r = negate_reflect(&id);
        let a = eval(&r, x, t).unwrap();
        let b = -eval(&id, -x, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn maximum_principle(id in data(), x in -200.0f64..200.0, t in log_time()) {
        let bound = id.sup_abs();
        prop_assert!(eval(&id, x, t).unwrap().abs() <= bound * (1.0 + 1e-12));
        prop_assert!(heat_eval(&id, x, t).unwrap().abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn first_derivative_matches_differences(id in data(), x in -20.0f64..20.0, t in 0.5f64..50.0) {
        let h = 1e-4 * (1.0 + t.sqrt());
        let d = eval_derivatives_exact(&id, x, t, &[(0, 1)]).unwrap()[0];
        let fd = (eval(&id, x + h, t).unwrap() - eval(&id, x - h, t).unwrap()) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-6, "{d} vs {fd}");
    }

    #[test]
    fn cusp_is_critical_and_homogeneous(kappa in 0.1f64..5.0, alpha in 0.05f64..0.95, lambda in 0.2f64..5.0) {
        let (y0, g0) = cusp(kappa, alpha);
        let pc = ProfileCase::new(Case::SymmetricPositive, kappa, alpha, None).unwrap();
        prop_assert!((pc.g_limit(y0).unwrap() - g0).abs() <= 1e-12 * g0);
        prop_assert!(pc.g_limit_derivative(y0).unwrap().abs() <= 1e-12);
        let (y1, g1) = cusp(lambda.powf(1.0 + alpha) * kappa, alpha);
        prop_assert!((y1 - lambda * y0).abs() <= 1e-12 * y1);
        prop_assert!((g1 - lambda * g0).abs() <= 1e-12 * g1);
    }

    #[test]
    fn branches_solve_and_are_ordered(kappa in 0.2f64..3.0, alpha in 0.1f64..0.9, dz in 1e-3f64..20.0) {
        let pc = ProfileCase::new(Case::SymmetricPositive, kappa, alpha, None).unwrap();
        let z = pc.g_y0 + dz;
        let m = pc.invert_branch(Branch::Minus, z).unwrap();
        let mid = pc.invert_branch(Branch::Middle, z).unwrap();
        let p = pc.invert_branch(Branch::Plus, z).unwrap();
        for s in [m, mid, p] {
            prop_assert!(s.residual <= 1e-9 * (1.0 + z.abs()), "{s:?}");
        }
        prop_assert!(m.y < 0.0 && 0.0 < mid.y && mid.y <= pc.y0 && pc.y0 <= p.y);
        // Along each branch y moves with z the way g′ says it should.
        let p2 = pc.invert_branch(Branch::Plus, z + 0.1).unwrap();
        let mid2 = pc.invert_branch(Branch::Middle, z + 0.1).unwrap();
        prop_assert!(p2.y > p.y && mid2.y < mid.y);
    }

    #[test]
    fn mu_scale_solves_its_equation(alpha in 0.05f64..0.95, beta in 0.0f64..3.0, e in 2.0f64..12.0) {
        let t = 10f64.powf(e);
        let mu = mu_scale(alpha, beta, t).unwrap();
        let lhs = (1.0 + alpha) * mu.ln() + beta * mu.ln().ln();
        prop_assert!(mu >= std::f64::consts::E);
        prop_assert!((lhs - t.ln()).abs() <= 1e-9 * t.ln());
    }

    #[test]
    fn concentration_ratio_is_a_share(id in data(), x in -5.0f64..5.0, e in 1.0f64..4.0, mu1 in -1.0f64..0.5, w in 0.01f64..1.0) {
        let c = concentration_ratio(&id, x, 10f64.powf(e), mu1, mu1 + w).unwrap();
        prop_assert!((0.0..=1.0).contains(&c.ratio), "{c:?}");
    }

    #[test]
    fn gauss_kronrod_integrates_polynomials(coef in proptest::collection::vec(-1.0f64..1.0, 1..30), a in -3.0f64..0.0, b in 0.1f64..3.0) {
        let p = |x: f64| coef.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let prim = |x: f64| coef.iter().enumerate().map(|(k, c)| c * x.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>();
        let (v, _) = gk21(p, a, b);
        let exact = prim(b) - prim(a);
        let scale: f64 = coef.iter().map(|c| c.abs()).sum::<f64>() * 3f64.powi(coef.len() as i32) * (b - a);
        prop_assert!((v - exact).abs() <= 1e-13 * scale, "{v} vs {exact}");
    }
}
