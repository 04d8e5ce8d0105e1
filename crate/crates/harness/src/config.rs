//! Experiment configuration, loadable from JSON and overridable from the CLI.

use std::path::{Path, PathBuf};

use burgers_core::fd_oracle::Scheme;
use burgers_core::initial_data::FamilySpec;
use burgers_core::numeric::lin_space;
use burgers_core::par::Execution;
use burgers_core::rescaled::PropertyTolerances;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    Decay,
    DerivativeDecay,
    Profile,
    CriticalZ,
    Concentration,
    Properties,
    HeatProfile,
    FdCompare,
    Field,
}

impl Experiment {
    /// File stem used for the CSV and JSON outputs.
    pub fn stem(self) -> &'static str {
        match self {
            Experiment::Decay => "decay",
            Experiment::DerivativeDecay => "ddecay",
            Experiment::Profile => "profile",
            Experiment::CriticalZ => "zc",
            Experiment::Concentration => "concentration",
            Experiment::Properties => "properties",
            Experiment::HeatProfile => "heat_profile",
            Experiment::FdCompare => "fd_compare",
            Experiment::Field => "field",
        }
    }

    /// Time grid used when none is configured.
    pub fn default_t_grid(self) -> TGrid {
        match self {
            Experiment::Decay | Experiment::DerivativeDecay => TGrid::new(1e3, 1e7, 13),
            Experiment::Profile => TGrid::new(1e6, 1e8, 2),
            Experiment::CriticalZ => TGrid::new(1e4, 1e6, 5),
            Experiment::Concentration => TGrid::new(1e2, 1e5, 7),
            Experiment::Properties => TGrid::new(1e6, 1e6, 1),
            Experiment::HeatProfile => TGrid::new(1e4, 1e6, 2),
            Experiment::FdCompare | Experiment::Field => TGrid::new(1.0, 100.0, 3),
        }
    }

    fn fits_power_law(self) -> bool {
        matches!(self, Experiment::Decay | Experiment::DerivativeDecay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Equation {
    #[default]
    Burgers,
    Heat,
}

/// Log-spaced times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl TGrid {
    pub fn new(t_min: f64, t_max: f64, count: usize) -> Self {
        TGrid { t_min, t_max, count }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.t_min];
        }
        // Interpolating decimal exponents keeps whole decades exact.
        let (a, b) = (self.t_min.log10(), self.t_max.log10());
        let last = self.count - 1;
        (0..self.count)
            .map(|i| match i {
                0 => self.t_min,
                i if i == last => self.t_max,
                i => 10f64.powf(a + (b - a) * i as f64 / last as f64),
            })
            .collect()
    }
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid::new(1e3, 1e7, 13)
    }
}

/// Evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Grid { min, max, count }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            vec![self.min]
        } else {
            lin_space(self.min, self.max, self.count)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Half-width of the scaled sup-norm window.
    pub z_window: f64,
    /// Coarse scan size for sup norms.
    pub n_coarse: usize,
    pub properties: PropertyTolerances,
    /// Allowed distance of a fitted decay exponent from its prediction.
    pub decay_exponent: f64,
    pub derivative_exponent: f64,
    /// Largest sup error against the limit profile at the final time.
    pub profile_sup: f64,
    pub zc_agreement: f64,
    /// Upper bound on corr(ln ratio, t^{(1−α)/(1+α)}).
    pub concentration_correlation: f64,
    pub fd_max: f64,
    /// Relative slack on the factor-two error drop under grid refinement.
    pub fd_halving: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            z_window: 10.0,
            n_coarse: 128,
            properties: PropertyTolerances::default(),
            decay_exponent: 0.02,
            derivative_exponent: 0.05,
            profile_sup: 0.05,
            zc_agreement: 0.05,
            concentration_correlation: -0.99,
            fd_max: 5e-4,
            fd_halving: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcentrationParams {
    pub x: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl Default for ConcentrationParams {
    fn default() -> Self {
        ConcentrationParams {
            x: 0.0,
            mu1: -0.1,
            mu2: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdParams {
    pub t: f64,
    pub l: f64,
    pub n: usize,
    pub scheme: Scheme,
    /// Also run with the grid spacing halved.
    pub refine: bool,
}

impl Default for FdParams {
    fn default() -> Self {
        FdParams {
            t: 2.0,
            l: 200.0,
            n: 16001,
            scheme: Scheme::CrankNicolsonAdvectionExplicit,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub family: FamilySpec,
    #[serde(default)]
    pub equation: Equation,
    #[serde(default)]
    pub t_grid: TGrid,
    #[serde(default)]
    pub z_grid: Option<Grid>,
    #[serde(default)]
    pub x_grid: Option<Grid>,
    #[serde(default = "default_exclusion")]
    pub exclusion_half_width: f64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// (n, k) for derivative sweeps.
    #[serde(default = "default_order")]
    pub derivative_order: (usize, usize),
    #[serde(default)]
    pub concentration: ConcentrationParams,
    #[serde(default)]
    pub fd: FdParams,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_exclusion() -> f64 {
    0.25
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_order() -> (usize, usize) {
    (0, 1)
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, family: FamilySpec) -> Self {
        ExperimentConfig {
            experiment,
            family,
            equation: Equation::default(),
            t_grid: experiment.default_t_grid(),
            z_grid: None,
            x_grid: None,
            exclusion_half_width: default_exclusion(),
            out_dir: default_out(),
            tolerances: Tolerances::default(),
            derivative_order: default_order(),
            concentration: ConcentrationParams::default(),
            fd: FdParams::default(),
            threads: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn with_t_grid(mut self, t_min: f64, t_max: f64, count: usize) -> Self {
        self.t_grid = TGrid::new(t_min, t_max, count);
        self
    }

    pub fn with_equation(mut self, equation: Equation) -> Self {
        self.equation = equation;
        self
    }

    pub fn with_z_grid(mut self, min: f64, max: f64, count: usize) -> Self {
        self.z_grid = Some(Grid::new(min, max, count));
        self
    }

    pub fn with_x_grid(mut self, min: f64, max: f64, count: usize) -> Self {
        self.x_grid = Some(Grid::new(min, max, count));
        self
    }

    pub fn execution(&self) -> Execution {
        if self.threads == Some(1) || !cfg!(feature = "parallel") {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.family
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let g = &self.t_grid;
        if !(g.t_min > 0.0) || !g.t_min.is_finite() {
            return bad(format!("t_min must be positive, got {}", g.t_min));
        }
        if !(g.t_max >= g.t_min) || !g.t_max.is_finite() {
            return bad(format!("t_max must be finite and ≥ t_min, got {}", g.t_max));
        }
        if g.count == 0 {
            return bad("t_grid.count must be positive".into());
        }
        if self.experiment.fits_power_law() && g.count < 4 {
            return bad(format!(
                "{:?} fits a power law and needs count ≥ 4, got {}",
                self.experiment, g.count
            ));
        }
        let decades = (g.t_max / g.t_min).log10();
        let cap = (9.0 * decades).ceil() as usize + 1;
        if g.count > cap.max(1) && g.count > 1 {
            return bad(format!(
                "t_grid has {} points over {decades:.2} decades, cap is {cap}",
                g.count
            ));
        }
        for grid in [&self.z_grid, &self.x_grid].into_iter().flatten() {
            if grid.count == 0 || !(grid.max >= grid.min) {
                return bad(format!("bad grid {grid:?}"));
            }
        }
        if !(self.exclusion_half_width >= 0.0) {
            return bad(format!(
                "exclusion half-width must be ≥ 0, got {}",
                self.exclusion_half_width
            ));
        }
        let (n, k) = self.derivative_order;
        if self.experiment == Experiment::DerivativeDecay {
            let ok = match self.equation {
                Equation::Burgers => 2 * n + k <= 2,
                Equation::Heat => n + k <= 3,
            };
            if !ok {
                return bad(format!(
                    "derivative order (n,k)=({n},{k}) is not supported for {:?}",
                    self.equation
                ));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r#"{"experiment":"Decay","family":{"family":"PowerC0","kappa":1.0,"alpha":0.5}}"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.t_grid, TGrid::default());
        assert_eq!(c.exclusion_half_width, 0.25);
        c.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation() {
        let base = ExperimentConfig::new(Experiment::Decay, FamilySpec::power_c0(1.0, 0.5));
        assert!(base.clone().with_t_grid(0.0, 10.0, 5).validate().is_err());
        assert!(base.clone().with_t_grid(1.0, 10.0, 3).validate().is_err());
        assert!(base.clone().with_t_grid(1.0, 10.0, 11).validate().is_err());
        assert!(base.clone().with_t_grid(1.0, 10.0, 10).validate().is_ok());
        let mut c = ExperimentConfig::new(Experiment::Profile, FamilySpec::power_c1(1.0, 1.0 / 3.0));
        c.t_grid = TGrid::new(1e6, 1e8, 2);
        assert!(c.validate().is_ok());
        let mut d = ExperimentConfig::new(Experiment::DerivativeDecay, FamilySpec::power_c0(1.0, 0.5));
        d.derivative_order = (1, 1);
        assert!(d.validate().is_err());
    }

    #[test]
    fn grid_end_points() {
        let p = TGrid::new(1e3, 1e7, 13).points();
        assert_eq!(p[0], 1e3);
        assert_eq!(p[12], 1e7);
        assert!((p[3] - 1e4).abs() < 1e-8);
    }
}
