//! Large-time limit objects: the map g and its inverse branches, the cusp,
//! the limiting phase value at a critical point, the discontinuity point
//! of each profile, the logarithmic scale μ(t), and the profiles themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{Family, FamilySpec};
use crate::numeric::brent_root;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// f₀ ~ κ|y|^{-α} at both ends.
    SymmetricPositive,
    /// f₀ ~ ∓κ|y|^{-α} at ±∞.
    SignFlipped,
    /// f₀ ~ κ|y|^{-α} ln^{-β}|y|.
    LogCorrected,
    /// f₀ ~ κ|y|^{-α} at +∞, κ|y|^{-β} at −∞ with β > α.
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Minus,
    Plus,
    Middle,
}

/// Which closed form is used for the limiting phase value at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptHVariant {
    /// −κ²/(4|y|^{2α}) − κ(1−α)/2·|y|^{1−α}, depending on |y| only.
    Printed,
    /// −κ²/(4|y|^{2α}) − ½P(y) with P the limit primitive; for the
    /// symmetric case −κ²/(4|y|^{2α}) − sign(y)κ|y|^{1−α}/(2(1−α)).
    LimitDerived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CriticalPointSource {
    ScriptHPrinted,
    ScriptHLimitDerived,
    FiniteTimeTie(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSolution {
    pub y: f64,
    pub branch: Branch,
    /// |g(y) − z|.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileCase {
    pub case: Case,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub y0: f64,
    pub g_y0: f64,
    /// Location of the jump of the profile.
    pub critical_point: f64,
    pub critical_point_source: CriticalPointSource,
}

/// (y₀, g(y₀)) for g(y) = y + κ|y|^{-α} on y > 0.
pub fn cusp(kappa: f64, alpha: f64) -> (f64, f64) {
    let p = 1.0 / (1.0 + alpha);
    let y0 = (kappa * alpha).powf(p);
    let g = kappa.powf(p) * (alpha.powf(p) + alpha.powf(-alpha * p));
    (y0, g)
}

/// −κ²/(4|y|^{2α}) − κ(1−α)/2·|y|^{1−α}.
pub fn script_h_printed(kappa: f64, alpha: f64, y: f64) -> f64 {
    let a = y.abs();
    -kappa * kappa / (4.0 * a.powf(2.0 * alpha)) - 0.5 * kappa * (1.0 - alpha) * a.powf(1.0 - alpha)
}

/// −κ²/(4|y|^{2α}) − sign(y)κ|y|^{1−α}/(2(1−α)).
pub fn script_h_limit(kappa: f64, alpha: f64, y: f64) -> f64 {
    let a = y.abs();
    -kappa * kappa / (4.0 * a.powf(2.0 * alpha)) - y.signum() * kappa * a.powf(1.0 - alpha) / (2.0 * (1.0 - alpha))
}

pub fn script_h(kappa: f64, alpha: f64, y: f64, variant: ScriptHVariant) -> f64 {
    match variant {
        ScriptHVariant::Printed => script_h_printed(kappa, alpha, y),
        ScriptHVariant::LimitDerived => script_h_limit(kappa, alpha, y),
    }
}

/// Solves μ^{1+α} ln^β μ = t for μ ≥ e by Newton's method on ln μ.
pub fn mu_scale(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mu_scale needs α ∈ (0,1), β ≥ 0; got {alpha}, {beta}"
        )));
    }
    let ln_t = t.ln();
    if !(ln_t >= 1.0 + alpha) {
        return Err(Error::Domain(format!(
            "mu_scale needs t ≥ e^(1+α) = {}, got {t}",
            (1.0 + alpha).exp()
        )));
    }
    if beta == 0.0 {
        return Ok(t.powf(1.0 / (1.0 + alpha)));
    }
    let f = |l: f64| (1.0 + alpha) * l + beta * l.ln() - ln_t;
    let mut l = (ln_t / (1.0 + alpha)).max(1.0);
    for _ in 0..100 {
        let step = f(l) / ((1.0 + alpha) + beta / l);
        l = (l - step).max(1.0);
        if step.abs() <= 1e-15 * l {
            break;
        }
    }
    if f(l).abs() > 1e-10 {
        return Err(Error::NotConverged {
            what: "mu_scale Newton iteration".into(),
            abs_error: f(l).abs(),
            magnitude: ln_t,
        });
    }
    Ok(l.exp())
}

impl ProfileCase {
    /// Builds the case and locates its jump from the limit-derived phase values.
    pub fn new(case: Case, kappa: f64, alpha: f64, beta: Option<f64>) -> Result<Self> {
        Self::with_variant(case, kappa, alpha, beta, ScriptHVariant::LimitDerived)
    }

    pub fn with_variant(
        case: Case,
        kappa: f64,
        alpha: f64,
        beta: Option<f64>,
        variant: ScriptHVariant,
    ) -> Result<Self> {
        if !(kappa > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need κ > 0 and α ∈ (0,1); got κ={kappa}, α={alpha}"
            )));
        }
        match (case, beta) {
            (Case::LogCorrected, Some(b)) if b > 0.0 => {}
            (Case::LogCorrected, _) => return Err(Error::InvalidParameter("LogCorrected needs β > 0".into())),
            (Case::Asymmetric, Some(b)) if b > alpha && b < 1.0 => {}
            (Case::Asymmetric, _) => return Err(Error::InvalidParameter("Asymmetric needs α < β < 1".into())),
            _ => {}
        }
        let (y0, g_y0) = cusp(kappa, alpha);
        let mut pc = ProfileCase {
            case,
            kappa,
            alpha,
            beta,
            y0,
            g_y0,
            critical_point: f64::NAN,
            critical_point_source: match variant {
                ScriptHVariant::Printed => CriticalPointSource::ScriptHPrinted,
                ScriptHVariant::LimitDerived => CriticalPointSource::ScriptHLimitDerived,
            },
        };
        pc.critical_point = pc.critical_z(variant)?;
        Ok(pc)
    }

    /// The case matching a family of initial data, when one exists.
    pub fn from_family(spec: &FamilySpec) -> Result<Self> {
        let case = match spec.family {
            Family::PowerC0 | Family::PowerC1 => Case::SymmetricPositive,
            Family::PowerLog => Case::LogCorrected,
            Family::SignFlipped => Case::SignFlipped,
            Family::Asymmetric => Case::Asymmetric,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "no limit profile for family {}",
                    other.name()
                )))
            }
        };
        if spec.is_reflected() {
            return Err(Error::InvalidParameter("no limit profile for reflected data".into()));
        }
        Self::new(case, spec.kappa, spec.alpha, spec.beta)
    }

    /// Replace the jump location, e.g. by a finite-time tie point.
    pub fn with_critical_point(mut self, z: f64, source: CriticalPointSource) -> Self {
        self.critical_point = z;
        self.critical_point_source = source;
        self
    }

    pub fn g_limit(&self, y: f64) -> Result<f64> {
        if y == 0.0 || !y.is_finite() {
            return Err(Error::Domain(format!("g is undefined at y = {y}")));
        }
        let tail = self.kappa * y.abs().powf(-self.alpha);
        Ok(match self.case {
            Case::SymmetricPositive | Case::LogCorrected => y + tail,
            Case::SignFlipped => {
                if y > 0.0 {
                    y - tail
                } else {
                    y + tail
                }
            }
            Case::Asymmetric => {
                if y > 0.0 {
                    y + tail
                } else {
                    y
                }
            }
        })
    }

    /// dg/dy.
    pub fn g_limit_derivative(&self, y: f64) -> Result<f64> {
        if y == 0.0 || !y.is_finite() {
            return Err(Error::Domain(format!("g is undefined at y = {y}")));
        }
        // d/dy |y|^{-α} = −α sign(y)|y|^{-α-1}
        let d_tail = -self.alpha * y.signum() * self.kappa * y.abs().powf(-self.alpha - 1.0);
        Ok(match self.case {
            Case::SymmetricPositive | Case::LogCorrected => 1.0 + d_tail,
            Case::SignFlipped => {
                if y > 0.0 {
                    1.0 - d_tail
                } else {
                    1.0 + d_tail
                }
            }
            Case::Asymmetric => {
                if y > 0.0 {
                    1.0 + d_tail
                } else {
                    1.0
                }
            }
        })
    }

    /// Whether `branch` exists for this case, and its range of z.
    pub fn branch_range(&self, branch: Branch) -> Option<(f64, f64)> {
        use Branch::*;
        match (self.case, branch) {
            (Case::SymmetricPositive | Case::LogCorrected, Minus) => Some((f64::NEG_INFINITY, f64::INFINITY)),
            (Case::SymmetricPositive | Case::LogCorrected | Case::Asymmetric, Plus | Middle) => {
                Some((self.g_y0, f64::INFINITY))
            }
            (Case::SignFlipped, Minus | Plus) => Some((f64::NEG_INFINITY, f64::INFINITY)),
            (Case::SignFlipped, Middle) => None,
            (Case::Asymmetric, Minus) => Some((f64::NEG_INFINITY, 0.0)),
        }
    }

    /// Solve g(y) = z on the monotone piece of g named by `branch`.
    pub fn invert_branch(&self, branch: Branch, z: f64) -> Result<BranchSolution> {
        let Some((lo, hi)) = self.branch_range(branch) else {
            return Err(Error::Domain(format!(
                "{:?} branch does not exist for {:?}",
                branch, self.case
            )));
        };
        if !(z > lo || (z == lo && branch == Branch::Plus)) || !(z < hi) || !z.is_finite() {
            return Err(Error::Domain(format!(
                "z = {z} outside the range of the {branch:?} branch (boundary {})",
                if z <= lo { lo } else { hi }
            )));
        }
        if self.case == Case::Asymmetric && branch == Branch::Minus {
            return Ok(BranchSolution {
                y: z,
                branch,
                residual: 0.0,
            });
        }
        if branch == Branch::Plus && z == self.g_y0 && self.case != Case::SignFlipped {
            return Ok(BranchSolution {
                y: self.y0,
                branch,
                residual: 0.0,
            });
        }
        let r = |y: f64| self.g_limit(y).map_or(f64::NAN, |g| g - z);
        let k = self.kappa.powf(1.0 / (1.0 + self.alpha));
        // (a, b) with r(a) < 0 < r(b) for increasing pieces, reversed for Middle.
        let (a, b) = match (self.case, branch) {
            (_, Branch::Minus) => {
                let a = -(z.abs() + k + 1.0);
                let mut d = 1.0f64.min(0.5 * a.abs());
                while r(-d) <= 0.0 {
                    d *= 0.5;
                    if d < 1e-300 {
                        return Err(Error::Inconsistency(format!(
                            "minus branch bracket collapsed at z = {z}"
                        )));
                    }
                }
                (a, -d)
            }
            (Case::SignFlipped, Branch::Plus) => {
                let b = z.abs() + k + 1.0;
                let mut d = 1.0f64.min(0.5 * b);
                while r(d) >= 0.0 {
                    d *= 0.5;
                    if d < 1e-300 {
                        return Err(Error::Inconsistency(format!(
                            "plus branch bracket collapsed at z = {z}"
                        )));
                    }
                }
                (d, b)
            }
            (_, Branch::Plus) => {
                let mut d = self.y0;
                while r(self.y0 + d) >= 0.0 {
                    d *= 0.5;
                    if d < 1e-17 * self.y0 {
                        return Ok(BranchSolution {
                            y: self.y0,
                            branch,
                            residual: (self.g_y0 - z).abs(),
                        });
                    }
                }
                (self.y0 + d, z + 1.0)
            }
            (_, Branch::Middle) => {
                let mut lo_d = 0.5 * self.y0;
                while r(lo_d) <= 0.0 {
                    lo_d *= 0.5;
                    if lo_d < 1e-300 {
                        return Err(Error::Inconsistency(format!(
                            "middle branch bracket collapsed at z = {z}"
                        )));
                    }
                }
                let mut d = 0.5 * self.y0;
                while r(self.y0 - d) >= 0.0 {
                    d *= 0.5;
                    if d < 1e-17 * self.y0 {
                        return Ok(BranchSolution {
                            y: self.y0,
                            branch,
                            residual: (self.g_y0 - z).abs(),
                        });
                    }
                }
                (self.y0 - d, lo_d)
            }
        };
        let y = brent_root(r, a, b, r(a), r(b), 0.0)?;
        Ok(BranchSolution {
            y,
            branch,
            residual: r(y).abs(),
        })
    }

    /// Limiting phase value at a critical point y of g on the given side.
    pub fn h_limit(&self, y: f64, variant: ScriptHVariant) -> f64 {
        match (variant, self.case) {
            (ScriptHVariant::Printed, _) => script_h_printed(self.kappa, self.alpha, y),
            (ScriptHVariant::LimitDerived, Case::SignFlipped) => {
                // The limit primitive is −κ|y|^{1−α}/(1−α) on both sides.
                let a = y.abs();
                -self.kappa * self.kappa / (4.0 * a.powf(2.0 * self.alpha))
                    + self.kappa * a.powf(1.0 - self.alpha) / (2.0 * (1.0 - self.alpha))
            }
            (ScriptHVariant::LimitDerived, _) => script_h_limit(self.kappa, self.alpha, y),
        }
    }

    /// Limiting value of the competing maximum on the left at z: the minus
    /// branch for the two-sided cases, and −max(z,0)²/4 for Asymmetric.
    fn left_value(&self, z: f64, variant: ScriptHVariant) -> Result<f64> {
        if self.case == Case::Asymmetric {
            return Ok(-0.25 * z.max(0.0).powi(2));
        }
        let y = self.invert_branch(Branch::Minus, z)?.y;
        Ok(self.h_limit(y, variant))
    }

    /// Plus-branch value minus left value at z.
    pub fn tie_gap(&self, z: f64, variant: ScriptHVariant) -> Result<f64> {
        let yp = self.invert_branch(Branch::Plus, z)?.y;
        Ok(self.h_limit(yp, variant) - self.left_value(z, variant)?)
    }

    /// The jump location from equality of the competing limit values.
    pub fn critical_z(&self, variant: ScriptHVariant) -> Result<f64> {
        let gap = |z: f64| self.tie_gap(z, variant);
        let (lo, mut hi) = match self.case {
            Case::SignFlipped => (-1.0, 1.0),
            _ => (self.g_y0, 2.0 * (self.g_y0 + 1.0)),
        };
        let mut lo = lo;
        let mut g_lo = gap(lo)?;
        let mut g_hi = gap(hi)?;
        let mut grow = 0;
        while g_lo.signum() == g_hi.signum() && g_lo != 0.0 {
            if grow == 60 {
                return Err(Error::Inconsistency(format!(
                    "no sign change of the tie gap for {:?} with {variant:?} values on [{lo}, {hi}]",
                    self.case
                )));
            }
            hi *= 2.0;
            g_hi = gap(hi)?;
            if self.case == Case::SignFlipped {
                lo *= 2.0;
                g_lo = gap(lo)?;
            }
            grow += 1;
        }
        let mut err = None;
        let z = brent_root(
            |z| match gap(z) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            g_lo,
            g_hi,
            0.0,
        );
        if let Some(e) = err {
            return Err(e);
        }
        z
    }

    /// Profile value and a label for the piece it came from.
    pub fn profile_labeled(&self, z: f64) -> Result<(f64, &'static str)> {
        let zc = self.critical_point;
        let k = self.kappa;
        let a = self.alpha;
        let left = |z: f64| -> Result<(f64, &'static str)> {
            Ok(match self.case {
                Case::Asymmetric => {
                    if z <= 0.0 {
                        (0.0, "zero")
                    } else {
                        (z, "identity")
                    }
                }
                _ => (k * self.invert_branch(Branch::Minus, z)?.y.abs().powf(-a), "minus"),
            })
        };
        let right = |z: f64| -> Result<(f64, &'static str)> {
            let y = self.invert_branch(Branch::Plus, z)?.y;
            let v = k * y.abs().powf(-a);
            Ok(if self.case == Case::SignFlipped {
                (-v, "plus")
            } else {
                (v, "plus")
            })
        };
        if z == zc {
            return Err(Error::Discontinuity {
                z,
                left: left(z)?.0,
                right: right(z)?.0,
            });
        }
        if z < zc {
            left(z)
        } else {
            right(z)
        }
    }

    pub fn profile_value(&self, z: f64) -> Result<f64> {
        Ok(self.profile_labeled(z)?.0)
    }

    /// (value scale, space scale) used to rescale f(x, t) for this case.
    pub fn scales(&self, t: f64) -> Result<(f64, f64)> {
        match self.case {
            Case::LogCorrected => {
                let mu = mu_scale(self.alpha, self.beta.unwrap_or(0.0), t)?;
                Ok((t / mu, mu))
            }
            _ => {
                let p = 1.0 / (1.0 + self.alpha);
                Ok((t.powf(self.alpha * p), t.powf(p)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(alpha: f64) -> ProfileCase {
        ProfileCase::new(Case::SymmetricPositive, 1.0, alpha, None).unwrap()
    }

    #[test]
    fn g_examples() {
        let p = sym(0.5);
        assert_eq!(p.g_limit(1.0).unwrap(), 2.0);
        let p2 = ProfileCase::new(Case::SymmetricPositive, 2.0, 0.5, None).unwrap();
        assert_eq!(p2.g_limit(4.0).unwrap(), 5.0);
        let s = ProfileCase::new(Case::SignFlipped, 1.0, 0.5, None).unwrap();
        assert_eq!(s.g_limit(1.0).unwrap(), 0.0);
        assert!(p.g_limit(0.0).is_err());
    }

    #[test]
    fn cusp_values() {
        let (y0, g) = cusp(1.0, 1.0 / 3.0);
        assert!((y0 - 3f64.powf(-0.75)).abs() < 1e-15);
        assert!((y0 - 0.438691).abs() < 1e-6);
        assert!((g - 1.754765).abs() < 1e-6, "{g}");
        let p = sym(1.0 / 3.0);
        assert!((p.g_limit(y0).unwrap() - g).abs() < 1e-14);
        assert!(p.g_limit_derivative(y0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn branch_examples() {
        let p = sym(1.0 / 3.0);
        let m = p.invert_branch(Branch::Minus, 0.0).unwrap();
        assert!((m.y + 1.0).abs() < 1e-14);
        let e = p.invert_branch(Branch::Plus, p.g_y0 + 1e-9).unwrap();
        assert!((e.y - p.y0).abs() < 1e-3);
        let a = p.invert_branch(Branch::Plus, 1e6).unwrap();
        let b = p.invert_branch(Branch::Plus, 2e6).unwrap();
        assert!((a.y - 1e6).abs() <= 0.1);
        assert!((b.y - 2e6).abs() < (a.y - 1e6).abs());
        let mid = p.invert_branch(Branch::Middle, 3.0).unwrap();
        assert!(mid.y > 0.0 && mid.y < p.y0 && mid.residual < 1e-12 * 4.0);
        assert!(p.invert_branch(Branch::Plus, 1.0).is_err());
    }

    #[test]
    fn script_h_printed_example() {
        assert!((script_h_printed(1.0, 1.0 / 3.0, -1.0) + 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(script_h_printed(1.0, 0.4, 2.3), script_h_printed(1.0, 0.4, -2.3));
    }

    #[test]
    fn symmetric_critical_point() {
        let p = sym(1.0 / 3.0);
        assert!(p.critical_point > p.g_y0);
        assert!(p.tie_gap(p.critical_point, ScriptHVariant::LimitDerived).unwrap().abs() <= 1e-10);
        // The printed values never tie for this case.
        assert!(matches!(
            p.critical_z(ScriptHVariant::Printed),
            Err(Error::Inconsistency(_))
        ));
    }

    #[test]
    fn variant_critical_points() {
        let a = ProfileCase::new(Case::Asymmetric, 1.0, 1.0 / 3.0, Some(2.0 / 3.0)).unwrap();
        assert!(a.critical_point > 0.0);
        assert_eq!(a.profile_value(-3.0).unwrap(), 0.0);
        let h = 0.5 * a.critical_point;
        assert_eq!(a.profile_value(h).unwrap(), h);
        let s = ProfileCase::new(Case::SignFlipped, 1.0, 1.0 / 3.0, None).unwrap();
        assert!(s.critical_point.abs() < 1e-12, "{}", s.critical_point);
        assert!(s.profile_value(-1.0).unwrap() > 0.0);
        assert!(s.profile_value(1.0).unwrap() < 0.0);
        assert!((s.profile_value(-1.0).unwrap() + s.profile_value(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn profile_at_origin_and_jump() {
        let p = sym(1.0 / 3.0);
        assert!((p.profile_value(0.0).unwrap() - 1.0).abs() < 1e-14);
        match p.profile_value(p.critical_point) {
            Err(Error::Discontinuity { left, right, .. }) => assert!((left - right).abs() > 1e-3),
            other => panic!("expected a discontinuity, got {other:?}"),
        }
    }

    #[test]
    fn mu_examples() {
        let a: f64 = 1.0 / 3.0;
        let e = (1.0 + a).exp();
        assert!((mu_scale(a, 2.0, e).unwrap() - std::f64::consts::E).abs() < 1e-12);
        assert_eq!(mu_scale(a, 0.0, 1e8).unwrap(), 1e8f64.powf(0.75));
        let t: f64 = 1e12;
        let mu = mu_scale(a, 1.0, t).unwrap();
        assert!((mu.powf(1.0 + a) * mu.ln() - t).abs() <= 1e-10 * t);
        // The leading-order asymptotic carries a ln ln t relative correction:
        // the ratio is about 1.087 at t = 1e12 and creeps toward 1.
        let ratio = |t: f64| mu_scale(a, 1.0, t).unwrap() / (t.powf(0.75) * ((1.0 + a) / t.ln()).powf(0.75));
        let r: Vec<f64> = [1e12, 1e40, 1e100, 1e300].iter().map(|&t| ratio(t)).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0] && w[1] > 1.0), "{r:?}");
        assert!(r[3] - 1.0 < 0.02, "{r:?}");
        assert!(mu_scale(a, 1.0, 2.0).is_err());
    }
}
