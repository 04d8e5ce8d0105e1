//! Finite-time analysis in self-similar variables: the rescaled phase
//! H̃ₜ(y, z), the map gₜ, its monotone branches, the finite-time tie point,
//! a checker for the structural properties of the critical set, and the
//! concentration of the Hopf-Cole weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{negate_reflect, Family, InitialData};
use crate::numeric::{brent_root, lin_space};
use crate::par::{self, Execution};
use crate::profiles::{Branch, BranchSolution, Case, ProfileCase};
use crate::quad_engine::{CriticalPoint, FnWeights, PhaseAnalysis, PhaseSpec};

/// Space scale S(t) and the derived factors: x = zS, the profile is read off
/// from (t/S)·f, and the phase is (S²/t)·H̃ₜ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub space: f64,
}

impl Frame {
    pub fn new(id: &InitialData, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("rescaling needs t > 0, got {t}")));
        }
        let space = if id.family() == Family::PowerLog {
            crate::profiles::mu_scale(id.alpha(), id.beta().unwrap_or(0.0), t)?
        } else {
            t.powf(1.0 / (1.0 + id.alpha()))
        };
        Ok(Frame { t, space })
    }

    /// t/S, the factor multiplying f.
    pub fn value_scale(&self) -> f64 {
        self.t / self.space
    }

    /// S²/t, the large parameter in front of H̃ₜ.
    pub fn weight(&self) -> f64 {
        self.space * self.space / self.t
    }

    /// Half-width t^ε/S of the strip around y = 0 where gₜ has not converged.
    pub fn strip(&self, eps: f64) -> f64 {
        self.t.powf(eps) / self.space
    }
}

/// H̃ₜ(y, z) and its first two y-derivatives.
pub fn h_tilde(id: &InitialData, y: f64, z: f64, t: f64, dy_order: usize) -> Result<f64> {
    let fr = Frame::new(id, t)?;
    h_tilde_in(id, &fr, y, z, dy_order)
}

pub fn h_tilde_in(id: &InitialData, fr: &Frame, y: f64, z: f64, dy_order: usize) -> Result<f64> {
    let u = y * fr.space;
    match dy_order {
        0 => Ok(-(z - y) * (z - y) / 4.0 - 0.5 * id.primitive(u) / fr.weight()),
        1 => Ok(0.5 * (z - y - fr.value_scale() * id.value(u))),
        2 => Ok(0.5 * (-1.0 - fr.t * id.derivative(u, 1)?)),
        _ => Err(Error::UnsupportedOrder {
            requested: dy_order,
            max: 2,
        }),
    }
}

/// gₜ(y) = y + (t/S)·f₀(yS).
pub fn g_t(id: &InitialData, y: f64, t: f64) -> Result<f64> {
    let fr = Frame::new(id, t)?;
    Ok(g_t_in(id, &fr, y))
}

pub fn g_t_in(id: &InitialData, fr: &Frame, y: f64) -> f64 {
    y + fr.value_scale() * id.value(y * fr.space)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    pub minus: Option<BranchSolution>,
    pub plus: Option<BranchSolution>,
    pub middle: Option<BranchSolution>,
    /// Roots of gₜ = z outside the three windows, in rescaled coordinates,
    /// with `phase_value` = H̃ₜ and `residual` = |gₜ(y) − z|.
    pub extras: Vec<CriticalPoint>,
}

/// Margins defining the branch windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    /// Distance kept from the cusp y₀ (and from 0 on the minus side).
    pub nu: f64,
    /// Inner end of the minus and middle windows (distance from y = 0).
    pub inner: f64,
}

impl Windows {
    /// ν = 0.05·y₀ on both sides of the cusp and away from the origin.
    pub fn standard(pc: &ProfileCase) -> Self {
        let nu = 0.05 * pc.y0;
        Windows { nu, inner: nu }
    }

    /// Minus and middle windows extended down to the near-origin strip.
    pub fn to_strip(pc: &ProfileCase, fr: &Frame) -> Self {
        Windows {
            nu: 0.05 * pc.y0,
            inner: fr.strip(0.1),
        }
    }
}

/// Root of gₜ(y) = z in (a, b) with gₜ monotone there (`increasing` tells
/// which way); None when z is outside gₜ((a, b)). Infinite ends are pushed
/// out geometrically until the bracket closes.
fn solve_window(id: &InitialData, fr: &Frame, z: f64, a: f64, b: f64, increasing: bool) -> Result<Option<f64>> {
    let sign = if increasing { 1.0 } else { -1.0 };
    let r = |y: f64| sign * (g_t_in(id, fr, y) - z);
    let step = z.abs() + 1.0;
    let mut a = a;
    if a == f64::NEG_INFINITY {
        let base = b.min(0.0);
        a = (0..80)
            .map(|k| base - step * 2f64.powi(k))
            .find(|&y| r(y) < 0.0)
            .unwrap_or(f64::NAN);
    }
    let mut b = b;
    if b == f64::INFINITY {
        let base = a.max(0.0);
        b = (0..80)
            .map(|k| base + step * 2f64.powi(k))
            .find(|&y| r(y) > 0.0)
            .unwrap_or(f64::NAN);
    }
    if a.is_nan() || b.is_nan() {
        return Ok(None);
    }
    let (fa, fb) = (r(a), r(b));
    if !(fa <= 0.0 && fb >= 0.0) {
        return Ok(None);
    }
    Ok(Some(brent_root(r, a, b, fa, fb, 0.0)?))
}

fn branch_solution(id: &InitialData, fr: &Frame, branch: Branch, z: f64, y: f64) -> BranchSolution {
    BranchSolution {
        y,
        branch,
        residual: (g_t_in(id, fr, y) - z).abs(),
    }
}

/// Finite-time branch roots in explicit windows, without the full scan.
pub fn branch_roots(id: &InitialData, pc: &ProfileCase, fr: &Frame, z: f64, w: &Windows) -> Result<BranchSet> {
    let mut out = BranchSet {
        minus: None,
        plus: None,
        middle: None,
        extras: Vec::new(),
    };
    let minus_end = -w.inner;
    if let Some(y) = solve_window(id, fr, z, f64::NEG_INFINITY, minus_end, true)? {
        out.minus = Some(branch_solution(id, fr, Branch::Minus, z, y));
    }
    match pc.case {
        Case::SignFlipped => {
            if let Some(y) = solve_window(id, fr, z, w.inner, f64::INFINITY, true)? {
                out.plus = Some(branch_solution(id, fr, Branch::Plus, z, y));
            }
        }
        _ => {
            if let Some(y) = solve_window(id, fr, z, pc.y0 + w.nu, f64::INFINITY, true)? {
                out.plus = Some(branch_solution(id, fr, Branch::Plus, z, y));
            }
            if w.inner < pc.y0 - w.nu {
                if let Some(y) = solve_window(id, fr, z, w.inner, pc.y0 - w.nu, false)? {
                    out.middle = Some(branch_solution(id, fr, Branch::Middle, z, y));
                }
            }
        }
    }
    Ok(out)
}

/// All critical points of H̃ₜ(·, z) in rescaled coordinates, from the full scan.
pub fn all_critical_points(id: &InitialData, fr: &Frame, z: f64) -> Result<Vec<CriticalPoint>> {
    let an = PhaseAnalysis::new(PhaseSpec::physical(id, z * fr.space, fr.t))?;
    let s = fr.space;
    Ok(an
        .critical_points()
        .into_iter()
        .map(|c| {
            let y = c.y / s;
            CriticalPoint {
                y,
                phase_value: h_tilde_in(id, fr, y, z, 0).unwrap_or(f64::NAN),
                residual: (g_t_in(id, fr, y) - z).abs(),
                ..c
            }
        })
        .collect())
}

/// Branch roots in the standard windows plus every other critical point.
pub fn finite_branches(id: &InitialData, z: f64, t: f64) -> Result<BranchSet> {
    let fr = Frame::new(id, t)?;
    let all = all_critical_points(id, &fr, z)?;
    let Ok(pc) = ProfileCase::from_family(id.spec()) else {
        return Ok(BranchSet {
            minus: None,
            plus: None,
            middle: None,
            extras: all,
        });
    };
    let mut set = branch_roots(id, &pc, &fr, z, &Windows::standard(&pc))?;
    let found: Vec<f64> = [set.minus, set.plus, set.middle]
        .iter()
        .flatten()
        .map(|b| b.y)
        .collect();
    set.extras = all
        .into_iter()
        .filter(|c| !found.iter().any(|&y| (y - c.y).abs() <= 1e-6 * (1.0 + y.abs())))
        .collect();
    Ok(set)
}

/// (𝔥₊, 𝔥₋, y₊, y₋): phase values at the plus and minus finite-time branches.
pub fn branch_phase_values(
    id: &InitialData,
    pc: &ProfileCase,
    fr: &Frame,
    z: f64,
) -> Result<Option<(f64, f64, f64, f64)>> {
    let b = branch_roots(id, pc, fr, z, &Windows::to_strip(pc, fr))?;
    match (b.plus, b.minus) {
        (Some(p), Some(m)) => Ok(Some((
            h_tilde_in(id, fr, p.y, z, 0)?,
            h_tilde_in(id, fr, m.y, z, 0)?,
            p.y,
            m.y,
        ))),
        _ => Ok(None),
    }
}

/// The z where the plus and minus branch maxima of H̃ₜ tie.
pub fn z_c_finite(id: &InitialData, t: f64) -> Result<f64> {
    let pc = ProfileCase::from_family(id.spec())?;
    let fr = Frame::new(id, t)?;
    let gap =
        |z: f64| -> Result<Option<f64>> { Ok(branch_phase_values(id, &pc, &fr, z)?.map(|(hp, hm, _, _)| hp - hm)) };
    let windows: [(f64, f64); 2] = match pc.case {
        Case::SignFlipped => [(-10.0, 10.0), (-100.0, 100.0)],
        _ => [(pc.g_y0 + 0.1, 10.0), (pc.g_y0 + 0.01, 100.0)],
    };
    for (lo, mut hi) in windows {
        // At moderate t the minus root leaves the window for large z; pull
        // the upper end in until both branches exist.
        let mut b = gap(hi)?;
        for _ in 0..40 {
            if b.is_some() {
                break;
            }
            hi = lo + 0.5 * (hi - lo);
            b = gap(hi)?;
        }
        let (Some(a), Some(b)) = (gap(lo)?, b) else { continue };
        if a.signum() == b.signum() {
            continue;
        }
        let mut err = None;
        let z = brent_root(
            |z| match gap(z) {
                Ok(Some(v)) => v,
                Ok(None) => {
                    err = Some(Error::Inconsistency(format!("a branch vanished at z = {z}, t = {t}")));
                    f64::NAN
                }
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            a,
            b,
            1e-13,
        );
        if let Some(e) = err {
            return Err(e);
        }
        return z;
    }
    Err(Error::NoSignChange {
        what: format!("plus/minus phase tie at t = {t}"),
        lo: windows[1].0,
        hi: windows[1].1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub pass: bool,
    /// Slack of the check (positive when passing); None when not applicable.
    pub margin: Option<f64>,
    pub details: String,
}

impl PropertyCheck {
    fn from_margin(margin: f64, details: String) -> Self {
        PropertyCheck {
            pass: margin >= 0.0,
            margin: Some(margin),
            details,
        }
    }

    fn vacuous(details: &str) -> Self {
        PropertyCheck {
            pass: true,
            margin: None,
            details: details.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub t: f64,
    pub degenerate_data: bool,
    pub property_1: PropertyCheck,
    pub property_2: PropertyCheck,
    pub property_3: PropertyCheck,
    pub property_4: PropertyCheck,
    pub property_5: PropertyCheck,
    pub property_6: PropertyCheck,
    pub property_7: PropertyCheck,
    pub property_8: PropertyCheck,
    pub property_9: PropertyCheck,
}

impl PropertyReport {
    pub fn all(&self) -> [&PropertyCheck; 9] {
        [
            &self.property_1,
            &self.property_2,
            &self.property_3,
            &self.property_4,
            &self.property_5,
            &self.property_6,
            &self.property_7,
            &self.property_8,
            &self.property_9,
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.all().iter().all(|p| p.pass)
    }
}

/// Tolerances and probe regions of the property checker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyTolerances {
    /// Distance from y = 0 beyond which critical points must track g.
    pub eps: f64,
    /// Exponent of the near-origin strip |y| ≤ t^{-1/(1+α)+strip_exponent}.
    pub strip_exponent: f64,
    /// Width of the z-regimes: z ≤ g(y₀)+μ, z ≥ 1/μ.
    pub mu: f64,
    /// Box for the concavity bounds.
    pub delta: f64,
    /// Radius of the ball around the cusp allowed to hold spurious points.
    pub cusp_radius: f64,
    /// Allowed sup error for the convergence statements.
    pub convergence: f64,
    /// Number of z probes per regime.
    pub z_samples: usize,
}

impl Default for PropertyTolerances {
    fn default() -> Self {
        PropertyTolerances {
            eps: 0.1,
            strip_exponent: 0.1,
            mu: 0.2,
            delta: 0.2,
            cusp_radius: 0.1,
            convergence: 0.05,
            z_samples: 64,
        }
    }
}

/// Probe the nine structural properties of the finite-time critical set.
pub fn check_properties(id: &InitialData, t: f64, tol: &PropertyTolerances) -> Result<PropertyReport> {
    check_properties_with(id, t, tol, Execution::default())
}

pub fn check_properties_with(
    id: &InitialData,
    t: f64,
    tol: &PropertyTolerances,
    exec: Execution,
) -> Result<PropertyReport> {
    let pc = match ProfileCase::from_family(id.spec()) {
        Ok(pc) => pc,
        Err(_) => {
            let v = || PropertyCheck::vacuous("degenerate data");
            return Ok(PropertyReport {
                t,
                degenerate_data: true,
                property_1: v(),
                property_2: v(),
                property_3: v(),
                property_4: v(),
                property_5: v(),
                property_6: v(),
                property_7: v(),
                property_8: v(),
                property_9: v(),
            });
        }
    };
    let fr = Frame::new(id, t)?;
    let strip = fr.strip(tol.strip_exponent);
    let two_sided_cusp = matches!(pc.case, Case::SymmetricPositive | Case::LogCorrected);
    let n = tol.z_samples.max(8);
    let g = |y: f64| pc.g_limit(y);

    // Critical points over the whole probed z range, computed once.
    let z_lo = -5.0;
    let z_hi = 4.0 / tol.mu;
    let zs = lin_space(z_lo, z_hi, 3 * n);
    let crit = par::try_map(exec, &zs, |&z| all_critical_points(id, &fr, z))?;

    // 1. Critical points with |y| ≥ ε lie near the limit set.
    let mut worst = 0.0f64;
    for (z, cs) in zs.iter().zip(&crit) {
        for c in cs.iter().filter(|c| c.y.abs() >= tol.eps) {
            let d = (z - g(c.y)?).abs() / (1.0 + pc.g_limit_derivative(c.y)?.abs());
            worst = worst.max(d);
        }
    }
    let property_1 = PropertyCheck::from_margin(
        tol.convergence - worst,
        format!("max distance to the limit set for |y| ≥ {}: w = {worst:.3e}", tol.eps),
    );

    // 2. Finite-time branches against the limit branches.
    let windows = Windows::to_strip(&pc, &fr);
    let z_minus_hi = if pc.case == Case::Asymmetric {
        -0.05
    } else {
        2.0 / tol.mu
    };
    let z_minus = lin_space(-10.0, z_minus_hi, n);
    let z_plus_lo = if pc.case == Case::SignFlipped {
        -10.0
    } else {
        pc.g_y0 + 0.5 * tol.mu
    };
    let z_plus = lin_space(z_plus_lo, 50.0, n);
    let z_mid = lin_space(pc.g_y0 + 0.5 * tol.mu, 2.0 / tol.mu, n);
    let err_for = |zs: &[f64], branch: Branch| -> Result<(f64, usize)> {
        let r = par::try_map(exec, zs, |&z| -> Result<Option<f64>> {
            let b = branch_roots(id, &pc, &fr, z, &windows)?;
            let found = match branch {
                Branch::Minus => b.minus,
                Branch::Plus => b.plus,
                Branch::Middle => b.middle,
            };
            let lim = pc.invert_branch(branch, z)?.y;
            Ok(found.map(|f| (f.y - lim).abs()))
        })?;
        let missing = r.iter().filter(|e| e.is_none()).count();
        Ok((r.into_iter().flatten().fold(0.0, f64::max), missing))
    };
    let (e_minus, m_minus) = err_for(&z_minus, Branch::Minus)?;
    let (e_plus, m_plus) = err_for(&z_plus, Branch::Plus)?;
    let (e_mid, m_mid) = if two_sided_cusp {
        err_for(&z_mid, Branch::Middle)?
    } else {
        (0.0, 0)
    };
    let e2 = e_minus + e_plus + e_mid;
    let missing = m_minus + m_plus + m_mid;
    let property_2 = PropertyCheck {
        pass: e2 <= tol.convergence && missing == 0,
        margin: Some(tol.convergence - e2),
        details: format!(
            "sup errors minus {e_minus:.3e}, plus {e_plus:.3e}, middle {e_mid:.3e}; {missing} probes without a branch root"
        ),
    };

    // 3. Derivative bound in the near-origin strip.
    let sup_f0 = id.sup_abs();
    let mut slack3 = f64::INFINITY;
    for &z in &lin_space(-5.0, 5.0, n) {
        for &y in &lin_space(-strip, strip, 41) {
            let bound = 1.0 + z.abs() + sup_f0 * fr.value_scale();
            let v = h_tilde_in(id, &fr, y, z, 1)?.abs();
            slack3 = slack3.min(bound - v);
        }
    }
    let property_3 =
        PropertyCheck::from_margin(slack3, format!("strip half-width {strip:.3e}; min slack of the bound"));

    // 4. ∂yH̃ₜ → ½(z − g(y)) on a compact set away from the origin.
    let ys4: Vec<f64> = lin_space(-5.0, -0.05, 2 * n)
        .into_iter()
        .chain(lin_space(0.05, 5.0, 2 * n))
        .collect();
    let mut e4 = 0.0f64;
    for &y in &ys4 {
        // The difference does not depend on z.
        let d = h_tilde_in(id, &fr, y, 0.0, 1)? - 0.5 * (0.0 - g(y)?);
        e4 = e4.max(d.abs());
    }
    let property_4 = PropertyCheck::from_margin(
        tol.convergence - e4,
        format!("sup |∂yH̃ − (z − g)/2| on 0.05 ≤ |y| ≤ 5: {e4:.3e}"),
    );

    // 5. Sign of ∂yH̃ₜ on each side of the critical set.
    let mut slack5 = -h_tilde_in(id, &fr, 1.0, 0.0, 1)?;
    for &y in ys4.iter().chain(lin_space(-strip, strip, 21).iter()) {
        let gt = g_t_in(id, &fr, y);
        for d in [0.1, 1.0] {
            slack5 = slack5.min(-h_tilde_in(id, &fr, y, gt - d, 1)?);
            slack5 = slack5.min(h_tilde_in(id, &fr, y, gt + d, 1)?);
        }
    }
    let property_5 = PropertyCheck::from_margin(
        slack5,
        "min |∂yH̃| with the expected sign at offsets 0.1, 1 from the critical set".into(),
    );

    // 6–8. Membership of critical points per z-regime.
    let a_point = (pc.g_y0, pc.y0);
    let in_strip = |y: f64| y.abs() <= strip;
    let near_cusp = |z: f64, y: f64| ((z - a_point.0).powi(2) + (y - a_point.1).powi(2)).sqrt() <= tol.cusp_radius;
    let regime =
        |lo: f64, hi: f64, need: &[Branch], allowed: &dyn Fn(f64, f64) -> bool| -> Result<(usize, usize, usize)> {
            let mut probes = 0;
            let mut missing = 0;
            let mut strays = 0;
            for (z, cs) in zs.iter().zip(&crit) {
                if *z < lo || *z > hi {
                    continue;
                }
                probes += 1;
                let b = branch_roots(id, &pc, &fr, *z, &Windows::standard(&pc))?;
                for br in need {
                    let present = match br {
                        Branch::Minus => b.minus.is_some(),
                        Branch::Plus => b.plus.is_some(),
                        Branch::Middle => b.middle.is_some(),
                    };
                    if !present {
                        missing += 1;
                    }
                }
                let found: Vec<f64> = [b.minus, b.plus, b.middle].iter().flatten().map(|s| s.y).collect();
                for c in cs {
                    let on_branch = found.iter().any(|&y| (y - c.y).abs() <= 1e-6 * (1.0 + y.abs()));
                    if !on_branch && !allowed(*z, c.y) {
                        strays += 1;
                    }
                }
            }
            Ok((probes, missing, strays))
        };
    let regime_check = |(probes, missing, strays): (usize, usize, usize), what: &str| PropertyCheck {
        pass: missing == 0 && strays == 0,
        margin: Some(-((missing + strays) as f64)),
        details: format!("{what}: {probes} z-probes, {missing} missing branch roots, {strays} stray critical points"),
    };
    let (property_6, property_7, property_8) = if two_sided_cusp {
        let p6 = regime(z_lo, pc.g_y0 + tol.mu, &[Branch::Minus], &|z, y| {
            in_strip(y) || near_cusp(z, y)
        })?;
        let p7 = regime(1.0 / tol.mu, z_hi, &[Branch::Plus], &|_, y| y.abs() <= 1.0)?;
        let p8 = regime(
            pc.g_y0 + tol.mu,
            1.0 / tol.mu,
            &[Branch::Minus, Branch::Plus, Branch::Middle],
            &|_, y| in_strip(y),
        )?;
        (
            regime_check(p6, "z ≤ g(y₀)+μ"),
            regime_check(p7, "z ≥ 1/μ"),
            regime_check(p8, "g(y₀)+μ ≤ z ≤ 1/μ"),
        )
    } else {
        let na = || PropertyCheck::vacuous("not applicable: the limit map has no cusp on both sides");
        (na(), na(), na())
    };

    // 9. Concavity on the boxes around the outer branches.
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    let right_lo = if pc.case == Case::SignFlipped {
        tol.delta
    } else {
        pc.y0 + tol.delta
    };
    let mut ys9 = lin_space(-1.0 / tol.delta, -tol.delta, 4 * n);
    ys9.extend(lin_space(right_lo, 1.0 / tol.delta, 4 * n));
    for &y in &ys9 {
        let c = -h_tilde_in(id, &fr, y, 0.0, 2)?;
        c1 = c1.min(c);
        c2 = c2.max(c);
    }
    let property_9 = if pc.case == Case::Asymmetric {
        PropertyCheck {
            pass: c1 > 0.0,
            margin: Some(c1),
            details: format!(
                "C₁ = {c1:.4e}, C₂ = {c2:.4e} (the y < 0 side is only concave in the limit at rate t^(α−β)/(1+α))"
            ),
        }
    } else {
        PropertyCheck::from_margin(c1, format!("C₁ = {c1:.4e}, C₂ = {c2:.4e}"))
    };

    Ok(PropertyReport {
        t,
        degenerate_data: false,
        property_1,
        property_2,
        property_3,
        property_4,
        property_5,
        property_6,
        property_7,
        property_8,
        property_9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub x: f64,
    pub t: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Weight of e^H inside (μ₁S, μ₂S) relative to the total.
    pub ratio: f64,
    pub ln_ratio: f64,
    /// max H divided by S²/t.
    pub c0: f64,
    /// Whether the data was reflected to negative orientation.
    pub reflected: bool,
}

/// Share of the Hopf-Cole weight e^H carried by (μ₁S, μ₂S).
pub fn concentration_ratio(id: &InitialData, x: f64, t: f64, mu1: f64, mu2: f64) -> Result<ConcentrationResult> {
    if !(mu1 < mu2) {
        return Err(Error::InvalidParameter(format!("need mu1 < mu2, got {mu1}, {mu2}")));
    }
    // Positively oriented data is reflected so the weight escapes to y > 0.
    let positive = id.value(0.0) > 0.0 || id.value(1e3) > 0.0;
    let owned;
    let data = if positive && matches!(id.family(), Family::PowerC0 | Family::PowerC1 | Family::PowerLog) {
        owned = negate_reflect(id);
        &owned
    } else {
        id
    };
    let reflected = !std::ptr::eq(data, id);
    let fr = Frame::new(data, t)?;
    let (lo, hi) = (mu1 * fr.space, mu2 * fr.space);
    let one = FnWeights {
        n: 1,
        f: |_y: f64, out: &mut [f64]| out[0] = 1.0,
    };
    let full_an = PhaseAnalysis::new(PhaseSpec::physical(data, x, t))?;
    let full = full_an.integrate(&one, &[lo, hi])[0];
    let inner_an = PhaseAnalysis::restricted(PhaseSpec::physical(data, x, t), lo, hi)?;
    let inner = inner_an.integrate(&one, &[])[0];
    if !full.converged || !inner.converged || !(full.mantissa > 0.0) {
        return Err(Error::NotConverged {
            what: "concentration integrals".into(),
            abs_error: full.abs_error.max(inner.abs_error),
            magnitude: full.mantissa,
        });
    }
    let ln_ratio = inner.log_scale - full.log_scale + (inner.mantissa / full.mantissa).ln();
    Ok(ConcentrationResult {
        x,
        t,
        mu1,
        mu2,
        ratio: ln_ratio.exp().min(1.0),
        ln_ratio: ln_ratio.min(0.0),
        c0: full_an.log_scale() / fr.weight(),
        reflected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{make_family, FamilySpec};
    use statrs::function::erf::erf;

    #[test]
    fn zero_data_phase() {
        let z = make_family(FamilySpec::zero()).unwrap();
        assert_eq!(h_tilde(&z, 1.0, 3.0, 10.0, 0).unwrap(), -1.0);
        assert_eq!(h_tilde(&z, 1.0, 3.0, 10.0, 1).unwrap(), 1.0);
        assert_eq!(h_tilde(&z, 1.0, 3.0, 10.0, 2).unwrap(), -0.5);
        assert_eq!(h_tilde(&z, 2.0, 2.0, 10.0, 0).unwrap(), 0.0);
        assert_eq!(g_t(&z, 0.7, 5.0).unwrap(), 0.7);
        let b = finite_branches(&z, 1.5, 100.0).unwrap();
        assert!(b.minus.is_none() && b.plus.is_none() && b.middle.is_none());
        assert_eq!(b.extras.len(), 1);
        assert!((b.extras[0].y - 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_shift() {
        let c = make_family(FamilySpec::constant(0.3)).unwrap();
        let t: f64 = 1e4;
        let expect = 0.7 + 0.3 * t.powf(0.5 / 1.5);
        assert!((g_t(&c, 0.7, t).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn convergence_to_limit_map() {
        let d = make_family(FamilySpec::power_c1(1.0, 1.0 / 3.0)).unwrap();
        assert!((g_t(&d, 1.0, 1e8).unwrap() - 2.0).abs() < 1e-2);
        assert!(h_tilde(&d, -1.0, 0.0, 1e8, 1).unwrap().abs() < 1e-2);
    }

    #[test]
    fn branches_at_large_time() {
        let d = make_family(FamilySpec::power_c1(1.0, 1.0 / 3.0)).unwrap();
        let pc = ProfileCase::new(Case::SymmetricPositive, 1.0, 1.0 / 3.0, None).unwrap();
        let z = pc.g_y0 + 1.0;
        let b = finite_branches(&d, z, 1e8).unwrap();
        for (s, br) in [
            (b.minus, Branch::Minus),
            (b.plus, Branch::Plus),
            (b.middle, Branch::Middle),
        ] {
            let s = s.expect("branch present");
            assert!(s.residual <= 1e-10);
            assert!((s.y - pc.invert_branch(br, z).unwrap().y).abs() < 1e-2);
        }
        let b = finite_branches(&d, pc.g_y0 - 0.5, 1e8).unwrap();
        assert!(b.minus.is_some() && b.plus.is_none() && b.middle.is_none());
    }

    #[test]
    fn tie_point_window() {
        let d = make_family(FamilySpec::power_c1(1.0, 1.0 / 3.0)).unwrap();
        let pc = ProfileCase::new(Case::SymmetricPositive, 1.0, 1.0 / 3.0, None).unwrap();
        let z = z_c_finite(&d, 1e6).unwrap();
        assert!(z > pc.g_y0 && z < 10.0, "{z}");
        assert!((z - pc.critical_point).abs() < 0.05, "{z} vs {}", pc.critical_point);
    }

    #[test]
    fn concentration_zero_data() {
        let z = make_family(FamilySpec::zero()).unwrap();
        let r = concentration_ratio(&z, 0.0, 1.0, -1.0, 1.0).unwrap();
        assert!((r.ratio - erf(0.5)).abs() < 1e-8, "{}", r.ratio);
        assert!(!r.reflected);
    }

    #[test]
    fn properties_degenerate_and_power() {
        let z = make_family(FamilySpec::zero()).unwrap();
        let r = check_properties(&z, 1e6, &PropertyTolerances::default()).unwrap();
        assert!(r.degenerate_data && r.all_pass());
        let d = make_family(FamilySpec::power_c1(1.0, 1.0 / 3.0)).unwrap();
        let tol = PropertyTolerances {
            z_samples: 16,
            delta: 0.2,
            ..Default::default()
        };
        let r = check_properties(&d, 1e6, &tol).unwrap();
        assert!(r.property_3.margin.unwrap() >= 0.0);
        assert!(r.property_9.margin.unwrap() > 0.0, "{:?}", r.property_9);
        let json = serde_json::to_value(&r).unwrap();
        for k in 1..=9 {
            assert!(json.get(format!("property_{k}")).is_some());
        }
    }
}
