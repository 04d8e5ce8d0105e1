//! Linear heat equation with the same initial data: Gaussian convolution,
//! kernel derivatives, sup norm and the continuous large-time profile.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hopf_cole::SupNormResult;
use crate::initial_data::{make_family, FamilySpec, InitialData};
use crate::numeric::{adaptive_gk21, golden_max, lin_space};
use crate::par::{self, Execution};
use crate::quad_engine::{FnWeights, PhaseAnalysis, PhaseSpec};

/// Probabilists' Hermite polynomial Heₘ(u).
pub fn hermite_he(m: usize, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    if m == 0 {
        return prev;
    }
    for n in 1..m {
        let next = u * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// ∫ f₀(y) ∂ₓᵐG(x − y, t) dy with the Gaussian phase −(x−y)²/(4t).
fn convolve(id: &InitialData, x: f64, t: f64, m: usize) -> Result<f64> {
    let zero = make_family(FamilySpec::zero())?;
    let an = PhaseAnalysis::new(PhaseSpec::physical(&zero, x, t))?;
    let s = (2.0 * t).sqrt();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let factor = sign * s.powi(-(m as i32));
    let w = FnWeights {
        n: 2,
        f: |y: f64, out: &mut [f64]| {
            out[0] = 1.0;
            out[1] = id.value(y) * factor * hermite_he(m, (x - y) / s);
        },
    };
    let ints = an.integrate(&w, &id.breakpoints());
    let (den, num) = (ints[0], ints[1]);
    if !den.converged || !num.converged {
        return Err(Error::NotConverged {
            what: "heat convolution".into(),
            abs_error: num.abs_error.max(den.abs_error),
            magnitude: num.mantissa,
        });
    }
    Ok(num.mantissa / den.mantissa)
}

/// Solution of uₜ = uₓₓ with u(·, 0) = f₀.
pub fn heat_eval(id: &InitialData, x: f64, t: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(id.value(x));
    }
    convolve(id, x, t, 0)
}

/// ∂ₜⁿ∂ₓᵏ of the heat solution, using ∂ₜ = ∂ₓ² on the kernel.
pub fn heat_derivative(id: &InitialData, x: f64, t: f64, n: usize, k: usize) -> Result<f64> {
    if n + k > 3 {
        return Err(Error::UnsupportedOrder {
            requested: n + k,
            max: 3,
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("derivatives need t > 0, got {t}")));
    }
    convolve(id, x, t, 2 * n + k)
}

/// κ/√(4π) ∫ |y|^{-α} e^{-(z−y)²/4} dy.
pub fn heat_profile(z: f64, kappa: f64, alpha: f64) -> f64 {
    // y ≥ 0 contributes I(z), y ≤ 0 contributes I(−z).
    kappa * (half_line(z, alpha) + half_line(-z, alpha)) / (4.0 * PI).sqrt()
}

/// ∫₀^∞ y^{-α} e^{-(z−y)²/4} dy. On [0, 1] the substitution u = y^{1−α}
/// removes the singularity: y^{-α}dy = du/(1−α).
fn half_line(z: f64, alpha: f64) -> f64 {
    const REL: f64 = 1e-12;
    let p = 1.0 / (1.0 - alpha);
    let gauss = |y: f64| (-(z - y) * (z - y) / 4.0).exp();
    let (near, _) = adaptive_gk21(|u: f64| p * gauss(u.powf(p)), 0.0, 1.0, REL, 0.0);
    // Beyond |y − z| = 16 the Gaussian is below e^{-64}.
    let hi = z.max(1.0) + 16.0;
    let lo_far = 1.0f64.max(z - 16.0);
    let far_integrand = |y: f64| y.powf(-alpha) * gauss(y);
    let mut far = 0.0;
    if lo_far > 1.0 {
        // Left of the peak window the integrand is tiny but kept for completeness.
        far += adaptive_gk21(far_integrand, 1.0, lo_far, REL, 0.0).0;
    }
    let mut cuts = vec![lo_far, hi];
    if z > lo_far && z < hi {
        cuts.insert(1, z);
    }
    for c in cuts.windows(2) {
        far += adaptive_gk21(far_integrand, c[0], c[1], REL, 0.0).0;
    }
    near + far
}

/// sup |u(·, t)| over |x| ≤ 10√t.
pub fn heat_sup_norm(id: &InitialData, t: f64) -> Result<SupNormResult> {
    heat_sup_norm_with(id, t, 10.0, 256, Execution::default())
}

/// Coarse scan in z = x/√t on [−Z, Z], golden refinement of the best three brackets.
pub fn heat_sup_norm_with(
    id: &InitialData,
    t: f64,
    z_window: f64,
    n_coarse: usize,
    exec: Execution,
) -> Result<SupNormResult> {
    heat_sup_of(id, t, z_window, n_coarse, exec, 0, 0)
}

/// sup |∂ₜⁿ∂ₓᵏ u(·, t)| over |x| ≤ Z√t.
pub fn heat_sup_abs_derivative(
    id: &InitialData,
    t: f64,
    n: usize,
    k: usize,
    z_window: f64,
    n_coarse: usize,
) -> Result<SupNormResult> {
    heat_sup_of(id, t, z_window, n_coarse, Execution::default(), n, k)
}

fn heat_sup_of(
    id: &InitialData,
    t: f64,
    z_window: f64,
    n_coarse: usize,
    exec: Execution,
    n: usize,
    k: usize,
) -> Result<SupNormResult> {
    if !(t > 0.0) || !(z_window > 0.0) || n_coarse < 64 {
        return Err(Error::InvalidParameter(format!(
            "heat sup norm needs t > 0, Z > 0, n_coarse ≥ 64; got t={t}, Z={z_window}, n={n_coarse}"
        )));
    }
    let f = |x: f64| -> Result<f64> {
        Ok(if n == 0 && k == 0 {
            heat_eval(id, x, t)?
        } else {
            heat_derivative(id, x, t, n, k)?
        }
        .abs())
    };
    let s = t.sqrt();
    let xs: Vec<f64> = lin_space(-z_window, z_window, n_coarse)
        .into_iter()
        .map(|z| z * s)
        .collect();
    let vals = par::try_map(exec, &xs, |&x| f(x))?;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let brackets: Vec<(f64, f64)> = order
        .iter()
        .take(3)
        .map(|&i| (xs[i.saturating_sub(1)], xs[(i + 1).min(xs.len() - 1)]))
        .collect();
    let refined = par::try_map(exec, &brackets, |&(a, b)| golden_max(f, a, b, 1e-12, 80))?;
    let mut best = (xs[order[0]], vals[order[0]]);
    for (x, v) in refined {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(SupNormResult {
        value: best.1,
        argmax_x: best.0,
        t,
        window: z_window,
        n_coarse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn hermite_recurrence() {
        assert_eq!(hermite_he(0, 3.0), 1.0);
        assert_eq!(hermite_he(2, 3.0), 8.0);
        assert_eq!(hermite_he(3, 2.0), 2.0);
        assert_eq!(hermite_he(4, 1.0), 1.0 - 6.0 + 3.0);
    }

    #[test]
    fn constant_and_gaussian() {
        let c = make_family(FamilySpec::constant(0.3)).unwrap();
        assert!((heat_eval(&c, 4.0, 9.0).unwrap() - 0.3).abs() < 1e-13);
        assert!(heat_derivative(&c, 4.0, 9.0, 0, 1).unwrap().abs() < 1e-13);
        let g = make_family(FamilySpec::gaussian(1.0, 1.0)).unwrap();
        for &(x, t) in &[(0.0f64, 1.0f64), (3.0, 2.5), (-40.0, 400.0)] {
            let exact = (1.0 / (1.0 + t)).sqrt() * (-x * x / (4.0 * (1.0 + t))).exp();
            let v = heat_eval(&g, x, t).unwrap();
            assert!((v - exact).abs() <= 1e-10 * exact, "{v} {exact}");
        }
        assert!(heat_derivative(&g, 0.0, 3.0, 0, 1).unwrap().abs() < 1e-14);
    }

    #[test]
    fn time_derivative_is_second_space_derivative() {
        let d = make_family(FamilySpec::power_c1(1.0, 0.5)).unwrap();
        let a = heat_derivative(&d, 1.5, 20.0, 1, 0).unwrap();
        let b = heat_derivative(&d, 1.5, 20.0, 0, 2).unwrap();
        assert_eq!(a, b);
        let h = 1e-3;
        let fd = (heat_eval(&d, 1.5, 20.0 + h).unwrap() - heat_eval(&d, 1.5, 20.0 - h).unwrap()) / (2.0 * h);
        assert!((fd - a).abs() < 1e-8);
        assert!(heat_derivative(&d, 0.0, 1.0, 2, 2).is_err());
    }

    #[test]
    fn profile_at_origin_matches_gamma() {
        for &alpha in &[0.2, 0.5, 0.8] {
            let exact = 2f64.powf(1.0 - alpha) * gamma((1.0 - alpha) / 2.0) / (4.0 * PI).sqrt();
            let v = heat_profile(0.0, 1.0, alpha);
            assert!((v - exact).abs() <= 1e-9 * exact, "α={alpha}: {v} vs {exact}");
        }
    }

    #[test]
    fn profile_far_field() {
        let z: f64 = 1e3;
        let v = heat_profile(z, 1.0, 1.0 / 3.0) * z.powf(1.0 / 3.0);
        assert!((v - 1.0).abs() < 1e-3, "{v}");
        assert_eq!(heat_profile(2.5, 1.0, 0.4), heat_profile(-2.5, 1.0, 0.4));
    }

    #[test]
    fn sup_norm_gaussian() {
        let g = make_family(FamilySpec::gaussian(1.0, 1.0)).unwrap();
        let s = heat_sup_norm(&g, 8.0).unwrap();
        assert!((s.value - 1.0 / 3.0).abs() < 1e-10, "{s:?}");
        let c = make_family(FamilySpec::constant(-2.0)).unwrap();
        assert!((heat_sup_norm(&c, 8.0).unwrap().value - 2.0).abs() < 1e-12);
    }
}
