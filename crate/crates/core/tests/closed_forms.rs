//! Quadrature evaluators against closed-form solutions computed without the
//! quadrature engine.

use std::sync::Arc;

use burgers_core::heat::heat_eval;
use burgers_core::hopf_cole::{eval, eval_derivatives_exact};
use burgers_core::initial_data::{make_family, CustomProfile, FamilySpec, InitialData};
use statrs::function::erf::erfc;

/// f₀ = u_left for y < 0, u_right for y > 0.
struct Step {
    left: f64,
    right: f64,
}

impl CustomProfile for Step {
    fn jet(&self, y: f64) -> [f64; 3] {
        [if y < 0.0 { self.left } else { self.right }, 0.0, 0.0]
    }

    fn primitive(&self, y: f64) -> f64 {
        y * if y < 0.0 { self.left } else { self.right }
    }

    fn sup_abs(&self) -> f64 {
        self.left.abs().max(self.right.abs())
    }
}

/// Riemann problem for viscous Burgers: f = (u_L·L + u_R·R)/(L + R) with
/// L = e^{u_L²t/4 − u_L x/2} erfc((x − u_L t)/(2√t)) and
/// R = e^{u_R²t/4 − u_R x/2} erfc(−(x − u_R t)/(2√t)).
fn riemann(left: f64, right: f64, x: f64, t: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    let ln_l = left * left * t / 4.0 - left * x / 2.0 + erfc((x - left * t) / s).ln();
    let ln_r = right * right * t / 4.0 - right * x / 2.0 + erfc(-(x - right * t) / s).ln();
    let m = ln_l.max(ln_r);
    let (wl, wr) = ((ln_l - m).exp(), (ln_r - m).exp());
    (left * wl + right * wr) / (wl + wr)
}

fn step(left: f64, right: f64) -> InitialData {
    InitialData::custom(FamilySpec::power_c0(1.0, 0.5), Arc::new(Step { left, right })).unwrap()
}

#[test]
fn viscous_shock_and_rarefaction() {
    for (left, right) in [(1.0, -0.5), (-0.3, 0.8), (0.6, 0.2)] {
        let id = step(left, right);
        for &t in &[0.5, 2.0, 10.0] {
            for i in 0..=16 {
                let x = -8.0 + i as f64;
                let exact = riemann(left, right, x, t);
                let v = eval(&id, x, t).unwrap();
                assert!(
                    (v - exact).abs() < 1e-9,
                    "u=({left},{right}) x={x} t={t}: {v} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn shock_derivative_by_difference() {
    let id = step(1.0, -0.5);
    let (x, t, h) = (0.7, 3.0, 1e-4);
    let d = eval_derivatives_exact(&id, x, t, &[(0, 1)]).unwrap()[0];
    let fd = (riemann(1.0, -0.5, x + h, t) - riemann(1.0, -0.5, x - h, t)) / (2.0 * h);
    assert!((d - fd).abs() < 1e-7, "{d} vs {fd}");
}

#[test]
fn constant_data_is_steady() {
    let c = make_family(FamilySpec::constant(-0.35)).unwrap();
    for &(x, t) in &[(0.0, 1.0), (50.0, 1e3), (-3.0, 1e6)] {
        assert!((eval(&c, x, t).unwrap() + 0.35).abs() < 1e-12);
        assert!((heat_eval(&c, x, t).unwrap() + 0.35).abs() < 1e-12);
    }
}

#[test]
fn gaussian_heat_solution() {
    // A·e^{−y²/(4σ)} evolves to A·√(σ/(σ+t))·e^{−x²/(4(σ+t))}.
    let (a, sigma) = (2.0, 0.5);
    let g = make_family(FamilySpec::gaussian(a, sigma)).unwrap();
    for &(x, t) in &[(0.0, 0.1), (1.0, 1.0), (-6.0, 30.0)] {
        let s = sigma + t;
        let exact = a * (sigma / s).sqrt() * (-x * x / (4.0 * s)).exp();
        let v = heat_eval(&g, x, t).unwrap();
        assert!((v - exact).abs() <= 1e-10 * exact, "x={x} t={t}: {v} vs {exact}");
    }
}

#[test]
fn kink_second_order_matches_differences() {
    // f₀′ jumps at the origin, so f_xx and f_t must carry the jump term.
    let id = make_family(FamilySpec::power_c0(1.0, 0.5)).unwrap();
    let (x, t, h) = (0.4, 2.0, 1e-3);
    let v = eval_derivatives_exact(&id, x, t, &[(0, 2), (1, 0)]).unwrap();
    let fxx = (eval(&id, x + h, t).unwrap() - 2.0 * eval(&id, x, t).unwrap() + eval(&id, x - h, t).unwrap()) / (h * h);
    let ft = (eval(&id, x, t + h).unwrap() - eval(&id, x, t - h).unwrap()) / (2.0 * h);
    assert!((v[0] - fxx).abs() < 1e-5, "{} vs {fxx}", v[0]);
    assert!((v[1] - ft).abs() < 1e-5, "{} vs {ft}", v[1]);
}
