//! Finite-difference integrator for ∂ₜf = ∂ₓ²f − ∂ₓ(f²/2) on [−L, L] with
//! the boundary values pinned to f₀(±L). Used as an independent check of the
//! Hopf-Cole evaluator at moderate times.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf_cole;
use crate::initial_data::InitialData;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Forward Euler for both terms.
    ExplicitUpwind,
    /// Crank-Nicolson diffusion, forward Euler upwind advection.
    CrankNicolsonAdvectionExplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub scheme: Scheme,
    /// When false the advection term is dropped (pure heat equation).
    pub advection: bool,
    /// Fixed step; must respect the stability limit.
    pub dt: Option<f64>,
}

impl FdOptions {
    pub fn new(scheme: Scheme) -> Self {
        FdOptions {
            scheme,
            advection: true,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationLog {
    /// Σ f dx over interior nodes at the start and end.
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Net mass that entered through the two boundary faces.
    pub boundary_flux: f64,
    /// |final − initial − boundary_flux|.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub l: f64,
    pub n: usize,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub values: Vec<f64>,
    /// max |f| at t = 0.
    pub initial_sup: f64,
    pub conservation: ConservationLog,
}

impl GridField {
    pub fn dx(&self) -> f64 {
        2.0 * self.l / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.dx()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// RFC-4180 CSV with header `x,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.x(i), v)?;
        }
        Ok(())
    }
}

/// Engquist-Osher flux for f²/2.
fn eo_flux(a: f64, b: f64) -> f64 {
    let ap = a.max(0.0);
    let bm = b.min(0.0);
    0.5 * (ap * ap + bm * bm)
}

/// Stable step for the scheme on spacing dx with amplitude bound `amp`.
pub fn stable_dt(scheme: Scheme, advection: bool, dx: f64, amp: f64) -> f64 {
    let adv = if advection && amp > 0.0 {
        0.5 * dx / amp
    } else {
        f64::INFINITY
    };
    match scheme {
        Scheme::ExplicitUpwind => adv.min(0.4 * dx * dx),
        // Without advection the step only controls the O(dt²) time error.
        Scheme::CrankNicolsonAdvectionExplicit => adv.min(0.5 * dx),
    }
}

/// Integrate to `t_end` with the automatic step of the scheme.
pub fn integrate(id: &InitialData, l: f64, n: usize, t_end: f64, scheme: Scheme) -> Result<GridField> {
    integrate_with(id, l, n, t_end, &FdOptions::new(scheme))
}

pub fn integrate_with(id: &InitialData, l: f64, n: usize, t_end: f64, opts: &FdOptions) -> Result<GridField> {
    if n < 3 || !(l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid needs n ≥ 3 and L > 0, got n={n}, L={l}"
        )));
    }
    if !(t_end >= 0.0) || t_end > 0.01 * l * l {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must lie in [0, 0.01 L²] = [0, {}]",
            0.01 * l * l
        )));
    }
    let dx = 2.0 * l / (n - 1) as f64;
    let mut u: Vec<f64> = (0..n).map(|i| id.value(-l + i as f64 * dx)).collect();
    let amp = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = stable_dt(opts.scheme, opts.advection, dx, amp);
    let dt_max = match opts.dt {
        Some(dt) if !(dt > 0.0) || dt > limit => return Err(Error::Cfl { dt, limit }),
        Some(dt) => dt,
        None => limit,
    };
    let steps = if t_end == 0.0 {
        0
    } else {
        (t_end / dt_max).ceil() as usize
    };
    let dt = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let r = dt / (dx * dx);

    let mass = |u: &[f64]| u[1..n - 1].iter().sum::<f64>() * dx;
    let initial_mass = mass(&u);
    let mut inflow = 0.0;

    // Constant tridiagonal system (1 + r) u_i − r/2 (u_{i−1} + u_{i+1}) on the
    // interior, factored once.
    let m = n - 2;
    let (mut cp, mut denom) = (vec![0.0; m], vec![0.0; m]);
    if opts.scheme == Scheme::CrankNicolsonAdvectionExplicit {
        let (a, b) = (-0.5 * r, 1.0 + r);
        for i in 0..m {
            let prev = if i == 0 { 0.0 } else { cp[i - 1] };
            denom[i] = b - a * prev;
            cp[i] = a / denom[i];
        }
    }

    let mut adv = vec![0.0; n - 1];
    let mut rhs = vec![0.0; m];
    let mut next = u.clone();
    for _ in 0..steps {
        if opts.advection {
            for i in 0..n - 1 {
                adv[i] = eo_flux(u[i], u[i + 1]);
            }
        }
        let face_adv = |i: usize| if opts.advection { adv[i] } else { 0.0 };
        match opts.scheme {
            Scheme::ExplicitUpwind => {
                for i in 1..n - 1 {
                    next[i] = u[i] + r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) - dt / dx * (face_adv(i) - face_adv(i - 1));
                }
                let left = face_adv(0) - (u[1] - u[0]) / dx;
                let right = face_adv(n - 2) - (u[n - 1] - u[n - 2]) / dx;
                inflow += dt * (left - right);
            }
            Scheme::CrankNicolsonAdvectionExplicit => {
                for i in 1..n - 1 {
                    rhs[i - 1] =
                        u[i] + 0.5 * r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) - dt / dx * (face_adv(i) - face_adv(i - 1));
                }
                // Pinned boundary values enter the first and last rows.
                rhs[0] += 0.5 * r * u[0];
                rhs[m - 1] += 0.5 * r * u[n - 1];
                let a = -0.5 * r;
                for i in 0..m {
                    let prev = if i == 0 { 0.0 } else { rhs[i - 1] };
                    rhs[i] = (rhs[i] - a * prev) / denom[i];
                }
                for i in (0..m.saturating_sub(1)).rev() {
                    rhs[i] -= cp[i] * rhs[i + 1];
                }
                next[1..n - 1].copy_from_slice(&rhs);
                let diff_left = 0.5 * ((u[1] - u[0]) + (next[1] - next[0])) / dx;
                let diff_right = 0.5 * ((u[n - 1] - u[n - 2]) + (next[n - 1] - next[n - 2])) / dx;
                inflow += dt * ((face_adv(0) - diff_left) - (face_adv(n - 2) - diff_right));
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    let final_mass = mass(&u);
    Ok(GridField {
        l,
        n,
        t: t_end,
        dt,
        steps,
        scheme: opts.scheme,
        initial_sup: amp,
        conservation: ConservationLog {
            initial_mass,
            final_mass,
            boundary_flux: inflow,
            drift: (final_mass - initial_mass - inflow).abs(),
        },
        values: u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub max_abs: f64,
    pub argmax_x: f64,
    pub field: GridField,
}

/// max over nodes with |x| ≤ L/2 of |grid − Hopf-Cole|, Crank-Nicolson scheme.
pub fn compare_to_hopf_cole(id: &InitialData, t: f64, l: f64, n: usize) -> Result<f64> {
    Ok(compare_to_hopf_cole_with(
        id,
        t,
        l,
        n,
        &FdOptions::new(Scheme::CrankNicolsonAdvectionExplicit),
        Execution::default(),
    )?
    .max_abs)
}

pub fn compare_to_hopf_cole_with(
    id: &InitialData,
    t: f64,
    l: f64,
    n: usize,
    opts: &FdOptions,
    exec: Execution,
) -> Result<Comparison> {
    let field = integrate_with(id, l, n, t, opts)?;
    let idx: Vec<usize> = (0..n).filter(|&i| field.x(i).abs() <= 0.5 * l).collect();
    let diffs = par::try_map(exec, &idx, |&i| {
        let exact = if opts.advection {
            hopf_cole::eval(id, field.x(i), t)?
        } else {
            crate::heat::heat_eval(id, field.x(i), t)?
        };
        Ok((field.values[i] - exact).abs())
    })?;
    let (mut max_abs, mut argmax_x) = (0.0, 0.0);
    for (k, d) in diffs.iter().enumerate() {
        if *d > max_abs {
            max_abs = *d;
            argmax_x = field.x(idx[k]);
        }
    }
    Ok(Comparison {
        max_abs,
        argmax_x,
        field,
    })
}
