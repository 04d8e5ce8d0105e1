//! Experiment drivers. Each returns a report holding the CSV rows and the
//! fitted quantities; nothing is written to disk here.

use std::path::{Path, PathBuf};

use burgers_core::fd_oracle::{self, FdOptions};
use burgers_core::heat;
use burgers_core::hopf_cole;
use burgers_core::initial_data::{make_family, InitialData};
use burgers_core::par;
use burgers_core::profiles::{Case, ProfileCase, ScriptHVariant};
use burgers_core::quad_engine::CriticalKind;
use burgers_core::rescaled::{self, ConcentrationResult, Frame, PropertyReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Equation, Experiment, ExperimentConfig, Grid};
use crate::error::{HarnessError, Result};
use crate::fit::{fit_power_law, pearson, two_point_exponent, DecayFitResult};

/// A named pass/fail verdict used by `--check`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

pub trait Report {
    /// Write every CSV table into `dir`, returning the paths.
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>>;
    /// Fitted quantities and verdict inputs, without the raw rows.
    fn summary(&self) -> Value;
    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check>;
}

fn write_table<R: Serialize>(path: PathBuf, rows: &[R], header: &[&str]) -> Result<PathBuf> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

fn data(cfg: &ExperimentConfig) -> Result<InitialData> {
    cfg.validate()?;
    Ok(make_family(cfg.family.clone())?)
}

fn grid_or(g: Option<Grid>, default: Grid) -> Vec<f64> {
    g.unwrap_or(default).points()
}

/// Predicted sup-norm decay exponent of ∂ₜⁿ∂ₓᵏ for power-like data.
pub fn predicted_exponent(equation: Equation, alpha: f64, n: usize, k: usize) -> f64 {
    match equation {
        Equation::Burgers => alpha / (1.0 + alpha) * (1 + 2 * n + k) as f64,
        Equation::Heat => alpha / 2.0 + n as f64 + k as f64 / 2.0,
    }
}

fn sup_at(
    id: &InitialData,
    cfg: &ExperimentConfig,
    t: f64,
    n: usize,
    k: usize,
) -> burgers_core::Result<hopf_cole::SupNormResult> {
    let tol = &cfg.tolerances;
    let exec = cfg.execution();
    Ok(match (cfg.equation, n, k) {
        (Equation::Burgers, 0, 0) => hopf_cole::sup_norm_with(id, t, tol.z_window, tol.n_coarse, exec)?,
        (Equation::Burgers, _, _) => hopf_cole::sup_abs_derivative(id, t, n, k, tol.z_window, tol.n_coarse)?,
        (Equation::Heat, 0, 0) => heat::heat_sup_norm_with(id, t, tol.z_window, tol.n_coarse.max(256), exec)?,
        (Equation::Heat, _, _) => heat::heat_sup_abs_derivative(id, t, n, k, tol.z_window, tol.n_coarse.max(256))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub sup_norm: f64,
    pub argmax_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub equation: Equation,
    pub predicted_exponent: f64,
    pub fit: DecayFitResult,
    pub rows: Vec<DecayRow>,
    /// ‖f₀‖∞.
    pub sup_initial: f64,
    /// max over the sweep of sup|f| / ‖f₀‖∞.
    pub max_principle_ratio: f64,
}

/// Sup norm over the t-grid and its power-law fit.
pub fn run_decay(cfg: &ExperimentConfig) -> Result<DecayReport> {
    let id = data(cfg)?;
    let ts = cfg.t_grid.points();
    let sups = par::try_map(cfg.execution(), &ts, |&t| sup_at(&id, cfg, t, 0, 0))?;
    let rows: Vec<DecayRow> = sups
        .iter()
        .map(|s| DecayRow {
            t: s.t,
            sup_norm: s.value,
            argmax_x: s.argmax_x,
        })
        .collect();
    let fit = fit_power_law(&rows.iter().map(|r| (r.t, r.sup_norm)).collect::<Vec<_>>())?;
    let sup_initial = id.sup_abs();
    let max_principle_ratio = rows.iter().map(|r| r.sup_norm / sup_initial).fold(0.0, f64::max);
    Ok(DecayReport {
        equation: cfg.equation,
        predicted_exponent: predicted_exponent(cfg.equation, id.alpha(), 0, 0),
        fit,
        rows,
        sup_initial,
        max_principle_ratio,
    })
}

impl Report for DecayReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["t", "sup_norm", "argmax_x"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "equation": self.equation,
            "predicted_exponent": self.predicted_exponent,
            "fit": self.fit,
            "sup_initial": self.sup_initial,
            "max_principle_ratio": self.max_principle_ratio,
        })
    }

    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check> {
        let d = (self.fit.exponent - self.predicted_exponent).abs();
        vec![
            Check::new(
                "decay exponent",
                d <= cfg.tolerances.decay_exponent,
                format!(
                    "fitted {:.5}, predicted {:.5}",
                    self.fit.exponent, self.predicted_exponent
                ),
            ),
            Check::new(
                "max principle",
                self.max_principle_ratio <= 1.0 + 1e-6,
                format!("max sup/‖f₀‖ = {:.9}", self.max_principle_ratio),
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeDecayRow {
    pub t: f64,
    pub sup_abs: f64,
    pub argmax_x: f64,
    /// sup_abs · t^{predicted exponent}.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeDecayReport {
    pub equation: Equation,
    pub n: usize,
    pub k: usize,
    pub predicted_exponent: f64,
    pub fit: DecayFitResult,
    pub rows: Vec<DerivativeDecayRow>,
    pub median_scaled: f64,
    pub final_scaled: f64,
    /// Final scaled value at most twice the median.
    pub bounded: bool,
}

/// Sup of |∂ₜⁿ∂ₓᵏ f| over the t-grid, with (n, k) from the config.
pub fn run_derivative_decay(cfg: &ExperimentConfig) -> Result<DerivativeDecayReport> {
    let id = data(cfg)?;
    let (n, k) = cfg.derivative_order;
    let p = predicted_exponent(cfg.equation, id.alpha(), n, k);
    let ts = cfg.t_grid.points();
    let sups = par::try_map(cfg.execution(), &ts, |&t| sup_at(&id, cfg, t, n, k))?;
    let rows: Vec<DerivativeDecayRow> = sups
        .iter()
        .map(|s| DerivativeDecayRow {
            t: s.t,
            sup_abs: s.value,
            argmax_x: s.argmax_x,
            scaled: s.value * s.t.powf(p),
        })
        .collect();
    let fit = fit_power_law(&rows.iter().map(|r| (r.t, r.sup_abs)).collect::<Vec<_>>())?;
    let mut scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    let final_scaled = *scaled.last().unwrap();
    scaled.sort_by(f64::total_cmp);
    let m = scaled.len();
    let median_scaled = if m % 2 == 1 {
        scaled[m / 2]
    } else {
        0.5 * (scaled[m / 2 - 1] + scaled[m / 2])
    };
    Ok(DerivativeDecayReport {
        equation: cfg.equation,
        n,
        k,
        predicted_exponent: p,
        fit,
        rows,
        median_scaled,
        final_scaled,
        bounded: final_scaled <= 2.0 * median_scaled,
    })
}

impl Report for DerivativeDecayReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["t", "sup_abs", "argmax_x", "scaled"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "equation": self.equation,
            "n": self.n,
            "k": self.k,
            "predicted_exponent": self.predicted_exponent,
            "fit": self.fit,
            "median_scaled": self.median_scaled,
            "final_scaled": self.final_scaled,
            "bounded": self.bounded,
        })
    }

    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check> {
        match self.equation {
            // The Burgers derivative rate is an upper bound, so only boundedness is checked.
            Equation::Burgers => vec![Check::new(
                "scaled derivative bounded",
                self.bounded,
                format!("final {:.5e}, median {:.5e}", self.final_scaled, self.median_scaled),
            )],
            Equation::Heat => vec![Check::new(
                "derivative exponent",
                (self.fit.exponent - self.predicted_exponent).abs() <= cfg.tolerances.derivative_exponent,
                format!(
                    "fitted {:.5}, predicted {:.5}",
                    self.fit.exponent, self.predicted_exponent
                ),
            )],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub z: f64,
    pub rescaled_f: f64,
    pub p_of_z: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTableRow {
    pub z: f64,
    pub p_of_z: f64,
    pub branch_label: &'static str,
    pub case: Case,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileError {
    pub t: f64,
    pub sup_err: f64,
    pub argmax_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub case: ProfileCase,
    /// z-interval left out around the jump.
    pub excluded: (f64, f64),
    pub rows: Vec<ProfileRow>,
    pub table: Vec<ProfileTableRow>,
    pub errors: Vec<ProfileError>,
    /// Error decay exponent between the first and last time.
    pub two_time_exponent: Option<f64>,
    /// Power-law fit of the error when at least four times are given.
    pub fit: Option<DecayFitResult>,
}

/// Rescaled solution against the limit profile over the z-grid, per time.
pub fn run_profile(cfg: &ExperimentConfig) -> Result<ProfileReport> {
    let id = data(cfg)?;
    let pc = ProfileCase::from_family(&cfg.family)?;
    let eps = cfg.exclusion_half_width;
    let excluded = (pc.critical_point - eps, pc.critical_point + eps);
    let zs: Vec<f64> = grid_or(cfg.z_grid, Grid::new(-5.0, 5.0, 201))
        .into_iter()
        .filter(|&z| z < excluded.0 || z > excluded.1)
        .collect();
    if zs.is_empty() {
        return Err(HarnessError::Config("z-grid is empty after the exclusion zone".into()));
    }
    let table: Vec<ProfileTableRow> = zs
        .iter()
        .filter_map(|&z| {
            pc.profile_labeled(z).ok().map(|(p, label)| ProfileTableRow {
                z,
                p_of_z: p,
                branch_label: label,
                case: pc.case,
                kappa: pc.kappa,
                alpha: pc.alpha,
                beta: pc.beta,
            })
        })
        .collect();
    let ts = cfg.t_grid.points();
    let pairs: Vec<(f64, &ProfileTableRow)> = ts.iter().flat_map(|&t| table.iter().map(move |r| (t, r))).collect();
    let rows = par::try_map(cfg.execution(), &pairs, |&(t, r)| {
        let (value_scale, space_scale) = pc.scales(t)?;
        let f = value_scale * hopf_cole::eval(&id, r.z * space_scale, t)?;
        Ok(ProfileRow {
            t,
            z: r.z,
            rescaled_f: f,
            p_of_z: r.p_of_z,
            abs_err: (f - r.p_of_z).abs(),
        })
    })?;
    let errors: Vec<ProfileError> = ts
        .iter()
        .map(|&t| {
            rows.iter().filter(|r| r.t == t).fold(
                ProfileError {
                    t,
                    sup_err: 0.0,
                    argmax_z: f64::NAN,
                },
                |acc, r| {
                    if r.abs_err > acc.sup_err {
                        ProfileError {
                            t,
                            sup_err: r.abs_err,
                            argmax_z: r.z,
                        }
                    } else {
                        acc
                    }
                },
            )
        })
        .collect();
    let two_time_exponent = match (errors.first(), errors.last()) {
        (Some(a), Some(b)) if errors.len() >= 2 => Some(two_point_exponent((a.t, a.sup_err), (b.t, b.sup_err))),
        _ => None,
    };
    let fit = if errors.len() >= 4 {
        fit_power_law(&errors.iter().map(|e| (e.t, e.sup_err)).collect::<Vec<_>>()).ok()
    } else {
        None
    };
    Ok(ProfileReport {
        case: pc,
        excluded,
        rows,
        table,
        errors,
        two_time_exponent,
        fit,
    })
}

impl Report for ProfileReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![
            write_table(
                dir.join(format!("{stem}.csv")),
                &self.rows,
                &["t", "z", "rescaled_f", "p_of_z", "abs_err"],
            )?,
            write_table(
                dir.join(format!("{stem}_table.csv")),
                &self.table,
                &["z", "p_of_z", "branch_label", "case", "kappa", "alpha", "beta"],
            )?,
        ])
    }

    fn summary(&self) -> Value {
        json!({
            "case": self.case,
            "excluded": self.excluded,
            "errors": self.errors,
            "two_time_exponent": self.two_time_exponent,
            "fit": self.fit,
        })
    }

    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check> {
        let last = self.errors.last().map(|e| e.sup_err).unwrap_or(f64::NAN);
        let mut out = vec![Check::new(
            "profile sup error",
            last <= cfg.tolerances.profile_sup,
            format!("sup error {last:.5} at the final time"),
        )];
        if self.errors.len() >= 2 {
            let improving = self.errors.windows(2).all(|w| w[1].sup_err < w[0].sup_err);
            out.push(Check::new(
                "profile error decreasing",
                improving,
                format!("errors {:?}", self.errors.iter().map(|e| e.sup_err).collect::<Vec<_>>()),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalZRow {
    pub route: &'static str,
    pub t: Option<f64>,
    pub z_c: Option<f64>,
    pub delta_vs_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalZReport {
    pub case: Case,
    pub limit_derived: f64,
    pub printed: Option<f64>,
    /// Why the printed route gave no value, if it did not.
    pub printed_error: Option<String>,
    pub finite: Vec<(f64, f64)>,
    /// |z_c(tᵢ₊₁) − z_c(tᵢ)| along the grid.
    pub successive_differences: Vec<f64>,
    pub rows: Vec<CriticalZRow>,
}

/// The jump location by the printed and limit-derived formulas and by the
/// finite-time tie at each grid time.
pub fn run_critical_z(cfg: &ExperimentConfig) -> Result<CriticalZReport> {
    let id = data(cfg)?;
    let pc = ProfileCase::from_family(&cfg.family)?;
    let limit = pc.critical_z(ScriptHVariant::LimitDerived)?;
    let (printed, printed_error) = match pc.critical_z(ScriptHVariant::Printed) {
        Ok(z) => (Some(z), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ts = cfg.t_grid.points();
    let zs = par::try_map(cfg.execution(), &ts, |&t| Ok(rescaled::z_c_finite(&id, t)?))?;
    let finite: Vec<(f64, f64)> = ts.iter().copied().zip(zs).collect();
    let successive_differences = finite.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let mut rows = vec![
        CriticalZRow {
            route: "limit_derived",
            t: None,
            z_c: Some(limit),
            delta_vs_limit: Some(0.0),
        },
        CriticalZRow {
            route: "printed",
            t: None,
            z_c: printed,
            delta_vs_limit: printed.map(|z| z - limit),
        },
    ];
    rows.extend(finite.iter().map(|&(t, z)| CriticalZRow {
        route: "finite_time_tie",
        t: Some(t),
        z_c: Some(z),
        delta_vs_limit: Some(z - limit),
    }));
    Ok(CriticalZReport {
        case: pc.case,
        limit_derived: limit,
        printed,
        printed_error,
        finite,
        successive_differences,
        rows,
    })
}

impl Report for CriticalZReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["route", "t", "z_c", "delta_vs_limit"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "case": self.case,
            "limit_derived": self.limit_derived,
            "printed": self.printed,
            "printed_error": self.printed_error,
            "finite": self.finite,
            "successive_differences": self.successive_differences,
        })
    }

    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check> {
        let Some(&(t, z)) = self.finite.last() else {
            return Vec::new();
        };
        let d = (z - self.limit_derived).abs();
        vec![Check::new(
            "finite-time tie vs limit",
            d <= cfg.tolerances.zc_agreement,
            format!("|z_c({t:e}) − z_c(∞)| = {d:.5}"),
        )]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub rows: Vec<ConcentrationResult>,
    pub strictly_decreasing: bool,
    /// corr(ln ratio, t^{(1−α)/(1+α)}).
    pub correlation: f64,
    /// ν in ln ratio ≈ a − ν t^{(1−α)/(1+α)}.
    pub nu: f64,
    pub c0_range: (f64, f64),
}

/// Weight share of (μ₁S, μ₂S) over the t-grid at fixed x.
pub fn run_concentration(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    let id = data(cfg)?;
    let p = cfg.concentration;
    let ts = cfg.t_grid.points();
    let rows = par::try_map(cfg.execution(), &ts, |&t| {
        Ok(rescaled::concentration_ratio(&id, p.x, t, p.mu1, p.mu2)?)
    })?;
    let q = (1.0 - id.alpha()) / (1.0 + id.alpha());
    let xs: Vec<f64> = rows.iter().map(|r| r.t.powf(q)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ln_ratio).collect();
    let correlation = if rows.len() >= 2 { pearson(&xs, &ys) } else { f64::NAN };
    let nu = if rows.len() >= 2 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        -sxy / sxx
    } else {
        f64::NAN
    };
    let c0_range = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.c0), hi.max(r.c0))
    });
    Ok(ConcentrationReport {
        strictly_decreasing: rows.windows(2).all(|w| w[1].ln_ratio < w[0].ln_ratio),
        rows,
        correlation,
        nu,
        c0_range,
    })
}

impl Report for ConcentrationReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["x", "t", "mu1", "mu2", "ratio", "ln_ratio", "c0", "reflected"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "strictly_decreasing": self.strictly_decreasing,
            "correlation": self.correlation,
            "nu": self.nu,
            "c0_range": self.c0_range,
        })
    }

    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check> {
        vec![
            Check::new("ratio strictly decreasing", self.strictly_decreasing, String::new()),
            Check::new(
                "exponential law correlation",
                self.correlation <= cfg.tolerances.concentration_correlation,
                format!("corr = {:.5}", self.correlation),
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyRow {
    pub t: f64,
    pub property: usize,
    pub pass: bool,
    pub margin: Option<f64>,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertiesReport {
    pub reports: Vec<PropertyReport>,
    /// Most local maxima of H̃ₜ seen at any probed z, per time.
    pub max_local_maxima: Vec<(f64, usize)>,
    /// Times where more than three local maxima appeared.
    pub flagged: Vec<f64>,
}

/// Nine-property report at each grid time.
pub fn run_properties(cfg: &ExperimentConfig) -> Result<PropertiesReport> {
    let id = data(cfg)?;
    let ts = cfg.t_grid.points();
    let exec = cfg.execution();
    let reports = ts
        .iter()
        .map(|&t| {
            Ok(rescaled::check_properties_with(
                &id,
                t,
                &cfg.tolerances.properties,
                exec,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let zs = grid_or(cfg.z_grid, Grid::new(-5.0, 5.0, 41));
    let mut max_local_maxima = Vec::new();
    for &t in &ts {
        let fr = Frame::new(&id, t)?;
        let counts = par::try_map(exec, &zs, |&z| {
            Ok(rescaled::all_critical_points(&id, &fr, z)?
                .iter()
                .filter(|c| c.kind == CriticalKind::LocalMax)
                .count())
        })?;
        max_local_maxima.push((t, counts.into_iter().max().unwrap_or(0)));
    }
    let flagged = max_local_maxima.iter().filter(|m| m.1 > 3).map(|m| m.0).collect();
    Ok(PropertiesReport {
        reports,
        max_local_maxima,
        flagged,
    })
}

impl Report for PropertiesReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let rows: Vec<PropertyRow> = self
            .reports
            .iter()
            .flat_map(|r| {
                r.all().into_iter().enumerate().map(move |(i, p)| PropertyRow {
                    t: r.t,
                    property: i + 1,
                    pass: p.pass,
                    margin: p.margin,
                    details: p.details.clone(),
                })
            })
            .collect();
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &rows,
            &["t", "property", "pass", "margin", "details"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "reports": self.reports,
            "max_local_maxima": self.max_local_maxima,
            "flagged": self.flagged,
        })
    }

    fn checks(&self, _cfg: &ExperimentConfig) -> Vec<Check> {
        self.reports
            .iter()
            .map(|r| {
                let failed: Vec<usize> = r
                    .all()
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.pass)
                    .map(|(i, _)| i + 1)
                    .collect();
                Check::new(
                    &format!("properties at t={:e}", r.t),
                    failed.is_empty(),
                    format!("failed {failed:?}"),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatProfileRow {
    pub t: f64,
    pub z: f64,
    pub scaled_u: f64,
    pub profile: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatProfileReport {
    pub kappa: f64,
    pub alpha: f64,
    /// Limit profile at z = 0.
    pub origin_value: f64,
    pub rows: Vec<HeatProfileRow>,
    /// (t, sup error) per time.
    pub errors: Vec<(f64, f64)>,
    pub decreasing: bool,
}

/// t^{α/2}u(z√t, t) against the heat limit profile.
pub fn run_heat_profile(cfg: &ExperimentConfig) -> Result<HeatProfileReport> {
    let id = data(cfg)?;
    let (kappa, alpha) = (id.kappa(), id.alpha());
    let zs = grid_or(cfg.z_grid, Grid::new(-4.0, 4.0, 161));
    let profile: Vec<f64> = zs.iter().map(|&z| heat::heat_profile(z, kappa, alpha)).collect();
    let ts = cfg.t_grid.points();
    let pairs: Vec<(f64, usize)> = ts.iter().flat_map(|&t| (0..zs.len()).map(move |i| (t, i))).collect();
    let rows = par::try_map(cfg.execution(), &pairs, |&(t, i)| {
        let u = t.powf(alpha / 2.0) * heat::heat_eval(&id, zs[i] * t.sqrt(), t)?;
        Ok(HeatProfileRow {
            t,
            z: zs[i],
            scaled_u: u,
            profile: profile[i],
            abs_err: (u - profile[i]).abs(),
        })
    })?;
    let errors: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            (
                t,
                rows.iter().filter(|r| r.t == t).map(|r| r.abs_err).fold(0.0, f64::max),
            )
        })
        .collect();
    Ok(HeatProfileReport {
        kappa,
        alpha,
        origin_value: heat::heat_profile(0.0, kappa, alpha),
        decreasing: errors.windows(2).all(|w| w[1].1 < w[0].1),
        rows,
        errors,
    })
}

impl Report for HeatProfileReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["t", "z", "scaled_u", "profile", "abs_err"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "kappa": self.kappa,
            "alpha": self.alpha,
            "origin_value": self.origin_value,
            "errors": self.errors,
            "decreasing": self.decreasing,
        })
    }

    fn checks(&self, _cfg: &ExperimentConfig) -> Vec<Check> {
        vec![Check::new(
            "heat profile error decreasing",
            self.decreasing,
            format!("{:?}", self.errors),
        )]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdRow {
    pub n: usize,
    pub dx: f64,
    pub max_abs: f64,
    pub argmax_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdCompareReport {
    pub t: f64,
    pub l: f64,
    pub advection: bool,
    pub rows: Vec<FdRow>,
    /// Coarse error over refined error.
    pub refinement_ratio: Option<f64>,
}

/// Finite-difference field against the quadrature solution, optionally on
/// two grids with the spacing halved.
pub fn run_fd_compare(cfg: &ExperimentConfig) -> Result<FdCompareReport> {
    let id = data(cfg)?;
    let p = cfg.fd;
    let mut opts = FdOptions::new(p.scheme);
    opts.advection = cfg.equation == Equation::Burgers;
    let mut ns = vec![p.n];
    if p.refine {
        ns.push(2 * p.n - 1);
    }
    let mut rows = Vec::new();
    for n in ns {
        let c = fd_oracle::compare_to_hopf_cole_with(&id, p.t, p.l, n, &opts, cfg.execution())?;
        rows.push(FdRow {
            n,
            dx: c.field.dx(),
            max_abs: c.max_abs,
            argmax_x: c.argmax_x,
        });
    }
    let refinement_ratio = (rows.len() == 2).then(|| rows[0].max_abs / rows[1].max_abs);
    Ok(FdCompareReport {
        t: p.t,
        l: p.l,
        advection: opts.advection,
        rows,
        refinement_ratio,
    })
}

impl Report for FdCompareReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["n", "dx", "max_abs", "argmax_x"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({
            "t": self.t,
            "l": self.l,
            "advection": self.advection,
            "rows": self.rows,
            "refinement_ratio": self.refinement_ratio,
        })
    }

    fn checks(&self, cfg: &ExperimentConfig) -> Vec<Check> {
        let tol = &cfg.tolerances;
        let mut out = vec![Check::new(
            "fd discrepancy",
            self.rows[0].max_abs <= tol.fd_max,
            format!("{:.4e}", self.rows[0].max_abs),
        )];
        if let Some(r) = self.refinement_ratio {
            out.push(Check::new(
                "fd discrepancy halves",
                (r / 2.0 - 1.0).abs() <= tol.fd_halving,
                format!("ratio {r:.4}"),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub t: f64,
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldReport {
    pub equation: Equation,
    pub rows: Vec<FieldRow>,
}

/// Solution values on the x-grid at every grid time.
pub fn run_field(cfg: &ExperimentConfig) -> Result<FieldReport> {
    let id = data(cfg)?;
    let xs = grid_or(cfg.x_grid, Grid::new(-10.0, 10.0, 201));
    let ts = cfg.t_grid.points();
    let pairs: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (t, x))).collect();
    let rows = par::try_map(cfg.execution(), &pairs, |&(t, x)| {
        let value = match cfg.equation {
            Equation::Burgers => hopf_cole::eval(&id, x, t)?,
            Equation::Heat => heat::heat_eval(&id, x, t)?,
        };
        Ok(FieldRow { t, x, value })
    })?;
    Ok(FieldReport {
        equation: cfg.equation,
        rows,
    })
}

impl Report for FieldReport {
    fn write_csv(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        Ok(vec![write_table(
            dir.join(format!("{stem}.csv")),
            &self.rows,
            &["t", "x", "value"],
        )?])
    }

    fn summary(&self) -> Value {
        json!({ "equation": self.equation, "points": self.rows.len() })
    }

    fn checks(&self, _cfg: &ExperimentConfig) -> Vec<Check> {
        Vec::new()
    }
}

/// Dispatch on the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Box<dyn Report>> {
    Ok(match cfg.experiment {
        Experiment::Decay => Box::new(run_decay(cfg)?),
        Experiment::DerivativeDecay => Box::new(run_derivative_decay(cfg)?),
        Experiment::Profile => Box::new(run_profile(cfg)?),
        Experiment::CriticalZ => Box::new(run_critical_z(cfg)?),
        Experiment::Concentration => Box::new(run_concentration(cfg)?),
        Experiment::Properties => Box::new(run_properties(cfg)?),
        Experiment::HeatProfile => Box::new(run_heat_profile(cfg)?),
        Experiment::FdCompare => Box::new(run_fd_compare(cfg)?),
        Experiment::Field => Box::new(run_field(cfg)?),
    })
}
