//! Initial data families: closed-form values and derivatives up to order
//! two, and the primitive `P(y) = ∫₀^y f₀`, tabulated when no closed form
//! is available.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::numeric::{gk21, hermite5, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    PowerC0,
    PowerC1,
    PowerLog,
    SignFlipped,
    Asymmetric,
    Constant,
    Gaussian,
    Zero,
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PowerC0 => "PowerC0",
            Family::PowerC1 => "PowerC1",
            Family::PowerLog => "PowerLog",
            Family::SignFlipped => "SignFlipped",
            Family::Asymmetric => "Asymmetric",
            Family::Constant => "Constant",
            Family::Gaussian => "Gaussian",
            Family::Zero => "Zero",
            Family::Custom => "Custom",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Family::PowerC0,
            Family::PowerC1,
            Family::PowerLog,
            Family::SignFlipped,
            Family::Asymmetric,
            Family::Constant,
            Family::Gaussian,
            Family::Zero,
            Family::Custom,
        ];
        all.into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family '{s}'")))
    }
}

/// Parameters of an initial-data family. Serializes to
/// `{"family", "kappa", "alpha", "beta", "extra"}`.
///
/// Recognised `extra` keys: `level` (Constant), `amplitude` and `sigma`
/// (Gaussian), `reflected` (non-zero for the data `-f₀(-y)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub kappa: f64,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl FamilySpec {
    fn new(family: Family, kappa: f64, alpha: f64, beta: Option<f64>) -> Self {
        FamilySpec {
            family,
            kappa,
            alpha,
            beta,
            extra: BTreeMap::new(),
        }
    }

    pub fn power_c0(kappa: f64, alpha: f64) -> Self {
        Self::new(Family::PowerC0, kappa, alpha, None)
    }

    pub fn power_c1(kappa: f64, alpha: f64) -> Self {
        Self::new(Family::PowerC1, kappa, alpha, None)
    }

    pub fn power_log(kappa: f64, alpha: f64, beta: f64) -> Self {
        Self::new(Family::PowerLog, kappa, alpha, Some(beta))
    }

    pub fn sign_flipped(kappa: f64, alpha: f64) -> Self {
        Self::new(Family::SignFlipped, kappa, alpha, None)
    }

    pub fn asymmetric(kappa: f64, alpha: f64, beta: f64) -> Self {
        Self::new(Family::Asymmetric, kappa, alpha, Some(beta))
    }

    /// Constant level `c`. `alpha` only sets the scaling used by rescaled
    /// diagnostics and defaults to 1/2.
    pub fn constant(level: f64) -> Self {
        Self::new(Family::Constant, 1.0, 0.5, None).with_extra("level", level)
    }

    /// A·e^{−y²/(4σ)}: the heat kernel profile at time σ.
    pub fn gaussian(amplitude: f64, sigma: f64) -> Self {
        Self::new(Family::Gaussian, 1.0, 0.5, None)
            .with_extra("amplitude", amplitude)
            .with_extra("sigma", sigma)
    }

    pub fn zero() -> Self {
        Self::new(Family::Zero, 1.0, 0.5, None)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn extra_or(&self, key: &str, default: f64) -> f64 {
        self.extra.get(key).copied().unwrap_or(default)
    }

    pub fn is_reflected(&self) -> bool {
        self.extra_or("reflected", 0.0) != 0.0
    }

    /// Sign of f₀ at +∞ (0 when f₀ decays faster than any power).
    pub fn sign_at_plus(&self) -> f64 {
        let (minus, plus) = self.raw_tail_signs();
        if self.is_reflected() {
            -minus
        } else {
            plus
        }
    }

    /// Sign of f₀ at −∞ (0 when f₀ decays faster than any power).
    pub fn sign_at_minus(&self) -> f64 {
        let (minus, plus) = self.raw_tail_signs();
        if self.is_reflected() {
            -plus
        } else {
            minus
        }
    }

    fn raw_tail_signs(&self) -> (f64, f64) {
        match self.family {
            Family::PowerC0 | Family::PowerC1 | Family::PowerLog | Family::Asymmetric => (1.0, 1.0),
            Family::SignFlipped => (1.0, -1.0),
            Family::Constant => {
                let c = sign_or_zero(self.extra_or("level", self.kappa));
                (c, c)
            }
            Family::Gaussian | Family::Zero | Family::Custom => (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        match self.family {
            Family::PowerLog => {
                let b = self.beta.unwrap_or(f64::NAN);
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!("PowerLog needs beta > 0, got {b}")));
                }
            }
            Family::Asymmetric => {
                let b = self.beta.unwrap_or(f64::NAN);
                if !(b > self.alpha && b < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Asymmetric needs alpha < beta < 1, got alpha={} beta={b}",
                        self.alpha
                    )));
                }
            }
            Family::Gaussian => {
                let s = self.extra_or("sigma", 1.0);
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter(format!("Gaussian needs sigma > 0, got {s}")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Programmatically supplied data for the `Custom` family.
pub trait CustomProfile: Send + Sync {
    /// f₀, f₀′, f₀″ at y.
    fn jet(&self, y: f64) -> [f64; 3];
    fn primitive(&self, y: f64) -> f64;
    fn sup_abs(&self) -> f64;
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    PowerC0 { k: f64, a: f64 },
    PowerC1 { k: f64, a: f64 },
    PowerLog { k: f64, a: f64, b: f64 },
    SignFlipped { k: f64, a: f64 },
    Asymmetric { k: f64, a: f64, b: f64 },
    Constant { c: f64 },
    Gaussian { amp: f64, sigma: f64 },
    Zero,
    Custom,
}

/// Concrete initial condition f₀. Cheap to clone; the primitive table is
/// shared between clones and reflections.
#[derive(Clone)]
pub struct InitialData {
    spec: FamilySpec,
    shape: Shape,
    reflected: bool,
    table: Option<Arc<PrimitiveTable>>,
    custom: Option<Arc<dyn CustomProfile>>,
    growth_constant: f64,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData")
            .field("spec", &self.spec)
            .field("tabulated", &self.table.is_some())
            .finish()
    }
}

/// Build the data described by `spec`. `Custom` must go through
/// [`InitialData::custom`].
pub fn make_family(spec: FamilySpec) -> Result<InitialData> {
    spec.validate()?;
    let (k, a) = (spec.kappa, spec.alpha);
    let shape = match spec.family {
        Family::PowerC0 => Shape::PowerC0 { k, a },
        Family::PowerC1 => Shape::PowerC1 { k, a },
        Family::PowerLog => Shape::PowerLog {
            k,
            a,
            b: spec.beta.unwrap_or(1.0),
        },
        Family::SignFlipped => Shape::SignFlipped { k, a },
        Family::Asymmetric => Shape::Asymmetric {
            k,
            a,
            b: spec.beta.unwrap_or(1.0),
        },
        Family::Constant => Shape::Constant {
            c: spec.extra_or("level", k),
        },
        Family::Gaussian => Shape::Gaussian {
            amp: spec.extra_or("amplitude", k),
            sigma: spec.extra_or("sigma", 1.0),
        },
        Family::Zero => Shape::Zero,
        Family::Custom => {
            return Err(Error::InvalidParameter(
                "Custom data must be supplied through InitialData::custom".into(),
            ))
        }
    };
    let table = match shape {
        Shape::PowerC1 { .. } | Shape::PowerLog { .. } | Shape::Asymmetric { .. } => {
            Some(Arc::new(PrimitiveTable::build(move |y| raw_jet(shape, y), a)))
        }
        _ => None,
    };
    let growth_constant = match (&table, shape) {
        (Some(t), _) => t.growth_constant,
        (None, Shape::PowerC0 { k, a }) | (None, Shape::SignFlipped { k, a }) => k / (1.0 - a),
        (None, Shape::Gaussian { amp, sigma }) => amp.abs() * (PI * sigma).sqrt(),
        (None, Shape::Zero) => 0.0,
        (None, _) => f64::INFINITY,
    };
    let reflected = spec.is_reflected();
    Ok(InitialData {
        spec,
        shape,
        reflected,
        table,
        custom: None,
        growth_constant,
    })
}

impl InitialData {
    /// Wrap user-supplied callbacks. `spec.family` is forced to `Custom`;
    /// kappa and alpha are still validated since rescaled diagnostics use them.
    pub fn custom(mut spec: FamilySpec, profile: Arc<dyn CustomProfile>) -> Result<Self> {
        spec.family = Family::Custom;
        spec.validate()?;
        let a = spec.alpha;
        let mut k_growth: f64 = 0.0;
        for i in 0..=400 {
            let u = 10f64.powf(-3.0 + 9.0 * i as f64 / 400.0);
            for y in [u, -u] {
                k_growth = k_growth.max(profile.primitive(y).abs() / (1.0 + u).powf(1.0 - a));
            }
        }
        Ok(InitialData {
            reflected: spec.is_reflected(),
            spec,
            shape: Shape::Custom,
            table: None,
            custom: Some(profile),
            growth_constant: k_growth * 1.01,
        })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn kappa(&self) -> f64 {
        self.spec.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn beta(&self) -> Option<f64> {
        self.spec.beta
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// Families whose tails are power laws (the long-time analysis applies).
    pub fn is_power_like(&self) -> bool {
        matches!(
            self.spec.family,
            Family::PowerC0 | Family::PowerC1 | Family::PowerLog | Family::SignFlipped | Family::Asymmetric
        )
    }

    fn raw(&self, y: f64) -> [f64; 3] {
        match (self.shape, &self.custom) {
            (Shape::Custom, Some(c)) => c.jet(y),
            (shape, _) => raw_jet(shape, y),
        }
    }

    /// f₀, f₀′, f₀″ at y.
    #[inline]
    pub fn jet(&self, y: f64) -> [f64; 3] {
        if self.reflected {
            let [v, d1, d2] = self.raw(-y);
            [-v, d1, -d2]
        } else {
            self.raw(y)
        }
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        if let (false, Shape::PowerC1 { k, a }) = (self.reflected, self.shape) {
            return k * inv_one_plus_sq(y).powf(0.5 * a);
        }
        self.jet(y)[0]
    }

    /// Derivative of order 0, 1 or 2. At a kink (PowerC0 at 0) the
    /// right-hand limit is returned; see [`InitialData::is_smooth_at`].
    pub fn derivative(&self, y: f64, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder {
                requested: order,
                max: 2,
            });
        }
        Ok(self.jet(y)[order])
    }

    /// False where the derivative of the given order is only one-sided.
    pub fn is_smooth_at(&self, y: f64, order: usize) -> bool {
        if y != 0.0 {
            return true;
        }
        match self.shape {
            Shape::PowerC0 { .. } => order == 0,
            Shape::Asymmetric { .. } => order < 2,
            // Nothing is known about a user profile at its breakpoint.
            Shape::Custom => false,
            _ => true,
        }
    }

    /// ∫₀^y f₀.
    pub fn primitive(&self, y: f64) -> f64 {
        if self.reflected {
            self.raw_primitive(-y)
        } else {
            self.raw_primitive(y)
        }
    }

    fn raw_primitive(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        if let Some(t) = &self.table {
            return t.eval(y);
        }
        match self.shape {
            Shape::PowerC0 { k, a } => k * y.signum() * ((1.0 - a) * y.abs().ln_1p()).exp_m1() / (1.0 - a),
            Shape::SignFlipped { k, a } => -k * (0.5 * (1.0 - a) * ln_1p_sq(y)).exp_m1() / (1.0 - a),
            Shape::Constant { c } => c * y,
            Shape::Gaussian { amp, sigma } => amp * (PI * sigma).sqrt() * erf(y / (2.0 * sigma.sqrt())),
            Shape::Zero => 0.0,
            Shape::Custom => self.custom.as_ref().map_or(0.0, |c| c.primitive(y)),
            _ => unreachable!("tabulated shapes handled above"),
        }
    }

    /// ‖f₀‖∞.
    pub fn sup_abs(&self) -> f64 {
        match self.shape {
            Shape::PowerC0 { k, .. } | Shape::PowerC1 { k, .. } | Shape::Asymmetric { k, .. } => k,
            Shape::PowerLog { k, a, .. } => k * (-a).exp(),
            Shape::SignFlipped { k, a } => k * a.powf(-0.5) * (1.0 + 1.0 / a).powf(-0.5 * (a + 1.0)),
            Shape::Constant { c } => c.abs(),
            Shape::Gaussian { amp, .. } => amp.abs(),
            Shape::Zero => 0.0,
            Shape::Custom => self.custom.as_ref().map_or(0.0, |c| c.sup_abs()),
        }
    }

    /// Constant K with |P(y)| ≤ K (1+|y|)^{1-α} (infinite for Constant data).
    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    /// Relative error bound of the tabulated primitive (0 for closed forms).
    pub fn primitive_error_bound(&self) -> f64 {
        self.table.as_ref().map_or(0.0, |t| t.error_bound)
    }

    /// Length scale of the data's structure near the origin.
    pub fn feature_scale(&self) -> f64 {
        match self.shape {
            Shape::Gaussian { sigma, .. } => 2.0 * sigma.sqrt(),
            _ => 1.0,
        }
    }

    /// Points where f₀ is less smooth than elsewhere; used as quadrature breakpoints.
    pub fn breakpoints(&self) -> &'static [f64] {
        match self.shape {
            Shape::PowerC0 { .. } | Shape::Asymmetric { .. } | Shape::Custom => &[0.0],
            _ => &[],
        }
    }
}

/// The data g₀(y) = −f₀(−y).
pub fn negate_reflect(id: &InitialData) -> InitialData {
    let mut out = id.clone();
    match id.shape {
        Shape::Constant { c } => {
            out.shape = Shape::Constant { c: -c };
            out.spec.extra.insert("level".into(), -c);
        }
        Shape::Zero => {}
        _ => {
            out.reflected = !id.reflected;
            if out.reflected {
                out.spec.extra.insert("reflected".into(), 1.0);
            } else {
                out.spec.extra.remove("reflected");
            }
        }
    }
    out
}

/// 1/(1+y²) without overflow for large |y|.
#[inline]
fn inv_one_plus_sq(y: f64) -> f64 {
    let r = y.abs();
    if r > 1.0 {
        let q = 1.0 / r;
        q * q / (1.0 + q * q)
    } else {
        1.0 / (1.0 + r * r)
    }
}

/// ln(1+y²) without overflow for large |y|.
#[inline]
fn ln_1p_sq(y: f64) -> f64 {
    let r = y.abs();
    if r > 1e8 {
        2.0 * r.ln() + (1.0 / (r * r)).ln_1p()
    } else {
        (r * r).ln_1p()
    }
}

#[inline]
fn power_c1_jet(k: f64, a: f64, y: f64) -> [f64; 3] {
    let w = inv_one_plus_sq(y);
    let base = k * w.powf(0.5 * a);
    let v = base;
    let d1 = -a * y * base * w;
    let d2 = -a * base * w * (w - (a + 1.0) * (1.0 - w));
    [v, d1, d2]
}

fn raw_jet(shape: Shape, y: f64) -> [f64; 3] {
    match shape {
        Shape::PowerC0 { k, a } => {
            let b = 1.0 + y.abs();
            let v = k * b.powf(-a);
            let sgn = if y < 0.0 { -1.0 } else { 1.0 };
            [v, -a * sgn * v / b, a * (a + 1.0) * v / (b * b)]
        }
        Shape::PowerC1 { k, a } => power_c1_jet(k, a, y),
        Shape::Asymmetric { k, a, b } => power_c1_jet(k, if y >= 0.0 { a } else { b }, y),
        Shape::SignFlipped { k, a } => {
            let w = inv_one_plus_sq(y);
            let base = k * w.powf(0.5 * (a + 1.0));
            let v = -y * base;
            let d1 = -base * (w - a * (1.0 - w));
            let d2 = -(a + 1.0) * y * base * w * (a * (1.0 - w) - 3.0 * w);
            [v, d1, d2]
        }
        Shape::PowerLog { k, a, b } => {
            let r = 1f64.hypot(y);
            let s = E - 1.0 + r;
            let l = s.ln();
            let f = k * s.powf(-a) * l.powf(-b);
            let c = a + b / l;
            let fs = -f * c / s;
            let fss = f / (s * s) * (c * (c + 1.0) + b / (l * l));
            let ds = y / r;
            [f, fs * ds, fss * ds * ds + fs / (r * r * r)]
        }
        Shape::Constant { c } => [c, 0.0, 0.0],
        Shape::Gaussian { amp, sigma } => {
            let v = amp * (-y * y / (4.0 * sigma)).exp();
            [
                v,
                -y / (2.0 * sigma) * v,
                (y * y / (4.0 * sigma * sigma) - 0.5 / sigma) * v,
            ]
        }
        Shape::Zero | Shape::Custom => [0.0, 0.0, 0.0],
    }
}

// Table layout per side: 128 uniform panels on [0, 2], then 64 geometric
// panels per octave. The core covers 40 octaves; further nodes are appended
// lazily in blocks.
const UNIFORM_PANELS: usize = 128;
const UNIFORM_END: f64 = 2.0;
const PER_OCTAVE: usize = 64;
const CORE_OCTAVES: usize = 40;
const CORE_NODES: usize = UNIFORM_PANELS + PER_OCTAVE * CORE_OCTAVES + 1;
const BLOCK_NODES: usize = 8 * PER_OCTAVE;

#[inline]
fn node_position(k: usize) -> f64 {
    if k <= UNIFORM_PANELS {
        UNIFORM_END * k as f64 / UNIFORM_PANELS as f64
    } else {
        UNIFORM_END * ((k - UNIFORM_PANELS) as f64 / PER_OCTAVE as f64).exp2()
    }
}

#[inline]
fn locate_panel(u: f64) -> usize {
    let mut k = if u < UNIFORM_END {
        (u * (UNIFORM_PANELS as f64 / UNIFORM_END)) as usize
    } else {
        UNIFORM_PANELS + ((u / UNIFORM_END).log2() * PER_OCTAVE as f64) as usize
    };
    while k > 0 && node_position(k) > u {
        k -= 1;
    }
    while node_position(k + 1) <= u {
        k += 1;
    }
    k
}

/// Node data: primitive value and the first two derivatives of the
/// primitive (f₀ and f₀′ in the side's orientation).
type Node = [f64; 3];

struct Side {
    core: Vec<Node>,
    /// Nodes from index `CORE_NODES - 1` onwards.
    ext: RwLock<Vec<Node>>,
    jet: Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
}

impl Side {
    fn build(jet: Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>) -> (Self, f64) {
        let mut core = Vec::with_capacity(CORE_NODES);
        let j0 = jet(0.0);
        core.push([0.0, j0[0], j0[1]]);
        let mut acc = CompensatedSum::default();
        let mut worst = 0.0f64;
        for k in 0..CORE_NODES - 1 {
            let (a, b) = (node_position(k), node_position(k + 1));
            let (v, e) = gk21(|u| jet(u)[0], a, b);
            acc.add(v);
            let p = acc.value();
            worst = worst.max(e / p.abs().max(f64::MIN_POSITIVE));
            let jb = jet(b);
            core.push([p, jb[0], jb[1]]);
        }
        // Sample the interpolation error at panel midpoints.
        for k in (0..CORE_NODES - 1).step_by(7) {
            let (a, b) = (node_position(k), node_position(k + 1));
            let m = 0.5 * (a + b);
            let (half, _) = gk21(|u| jet(u)[0], a, m);
            let exact = core[k][0] + half;
            let interp = hermite5(0.5, b - a, core[k], core[k + 1]);
            worst = worst.max((interp - exact).abs() / exact.abs().max(f64::MIN_POSITIVE));
        }
        let first_ext = vec![core[CORE_NODES - 1]];
        (
            Side {
                core,
                ext: RwLock::new(first_ext),
                jet,
            },
            worst,
        )
    }

    fn eval(&self, u: f64) -> f64 {
        let k = locate_panel(u);
        let (a, b) = (node_position(k), node_position(k + 1));
        let s = (u - a) / (b - a);
        if k + 1 < CORE_NODES {
            return hermite5(s, b - a, self.core[k], self.core[k + 1]);
        }
        let off = k - (CORE_NODES - 1);
        {
            let ext = self.ext.read().unwrap_or_else(|e| e.into_inner());
            if off + 1 < ext.len() {
                return hermite5(s, b - a, ext[off], ext[off + 1]);
            }
        }
        let mut ext = self.ext.write().unwrap_or_else(|e| e.into_inner());
        while off + 1 >= ext.len() {
            let start = CORE_NODES - 1 + ext.len() - 1;
            let mut acc = CompensatedSum::default();
            acc.add(ext[ext.len() - 1][0]);
            for kk in start..start + BLOCK_NODES {
                let (pa, pb) = (node_position(kk), node_position(kk + 1));
                let (v, _) = gk21(|x| (self.jet)(x)[0], pa, pb);
                acc.add(v);
                let jb = (self.jet)(pb);
                ext.push([acc.value(), jb[0], jb[1]]);
            }
        }
        hermite5(s, b - a, ext[off], ext[off + 1])
    }
}

struct PrimitiveTable {
    pos: Side,
    neg: Side,
    error_bound: f64,
    growth_constant: f64,
}

impl PrimitiveTable {
    fn build<F>(jet: F, alpha: f64) -> Self
    where
        F: Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    {
        let jet = Arc::new(jet);
        let jp = Arc::clone(&jet);
        let (pos, e1) = Side::build(Arc::new(move |u| jp(u)));
        // Negative side in the variable u = −y: Q(u) = ∫₀^u f₀(−v) dv = −P(−u).
        let jn = Arc::clone(&jet);
        let (neg, e2) = Side::build(Arc::new(move |u| {
            let [v, d1, d2] = jn(-u);
            [v, -d1, d2]
        }));
        let mut growth: f64 = 0.0;
        for side in [&pos, &neg] {
            for (k, node) in side.core.iter().enumerate() {
                let u = node_position(k);
                growth = growth.max(node[0].abs() / (1.0 + u).powf(1.0 - alpha));
            }
        }
        PrimitiveTable {
            pos,
            neg,
            error_bound: e1.max(e2).max(f64::EPSILON),
            growth_constant: growth * 1.01,
        }
    }

    fn eval(&self, y: f64) -> f64 {
        if y >= 0.0 {
            self.pos.eval(y)
        } else {
            -self.neg.eval(-y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_specs() -> Vec<FamilySpec> {
        vec![
            FamilySpec::power_c0(1.0, 0.5),
            FamilySpec::power_c1(2.0, 1.0 / 3.0),
            FamilySpec::power_log(1.0, 1.0 / 3.0, 1.0),
            FamilySpec::sign_flipped(1.0, 0.5),
            FamilySpec::asymmetric(1.0, 1.0 / 3.0, 2.0 / 3.0),
            FamilySpec::constant(0.7),
            FamilySpec::gaussian(1.3, 0.8),
            FamilySpec::zero(),
        ]
    }

    #[test]
    fn closed_form_examples() {
        let d = make_family(FamilySpec::power_c0(1.0, 0.5)).unwrap();
        assert_eq!(d.value(3.0), 0.5);
        assert!((d.primitive(8.0) - 4.0).abs() < 1e-14);
        let c = make_family(FamilySpec::constant(2.0)).unwrap();
        assert_eq!(c.value(-17.0), 2.0);
        assert_eq!(c.primitive(3.0), 6.0);
        let p = make_family(FamilySpec::power_c1(2.0, 1.0 / 3.0)).unwrap();
        let y = 1e6;
        assert!((p.value(y) * y.powf(1.0 / 3.0) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn primitive_vanishes_at_origin() {
        for s in all_specs() {
            let d = make_family(s).unwrap();
            assert_eq!(d.primitive(0.0), 0.0);
            assert_eq!(negate_reflect(&d).primitive(0.0), 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_family(FamilySpec::power_c0(1.0, 1.0)).is_err());
        assert!(make_family(FamilySpec::power_c0(1.0, 0.0)).is_err());
        assert!(make_family(FamilySpec::power_c0(-1.0, 0.5)).is_err());
        assert!(make_family(FamilySpec::asymmetric(1.0, 0.5, 0.4)).is_err());
        assert!(make_family(FamilySpec::asymmetric(1.0, 0.5, 1.0)).is_err());
        let mut custom = FamilySpec::zero();
        custom.family = Family::Custom;
        assert!(make_family(custom).is_err());
    }

    #[test]
    fn derivative_order_limit() {
        let d = make_family(FamilySpec::power_c1(1.0, 1.0 / 3.0)).unwrap();
        assert_eq!(d.derivative(0.0, 1).unwrap(), 0.0);
        assert!(matches!(
            d.derivative(0.0, 3),
            Err(Error::UnsupportedOrder { requested: 3, .. })
        ));
        let z = make_family(FamilySpec::zero()).unwrap();
        for o in 0..3 {
            assert_eq!(z.derivative(1.7, o).unwrap(), 0.0);
        }
    }

    #[test]
    fn power_c0_kink_is_flagged() {
        let d = make_family(FamilySpec::power_c0(1.0, 0.5)).unwrap();
        assert!(!d.is_smooth_at(0.0, 1));
        assert_eq!(d.derivative(0.0, 1).unwrap(), -0.5);
        assert!(d.is_smooth_at(0.3, 1));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for s in all_specs() {
            let d = make_family(s.clone()).unwrap();
            for &y in &[-7.3f64, -1.1, -0.2, 0.37, 1.9, 12.0, 400.0] {
                let h = 1e-5 * (1.0 + y.abs());
                let fd1 = (d.value(y + h) - d.value(y - h)) / (2.0 * h);
                let fd2 = (d.derivative(y + h, 1).unwrap() - d.derivative(y - h, 1).unwrap()) / (2.0 * h);
                let [_, d1, d2] = d.jet(y);
                assert!(
                    (fd1 - d1).abs() < 1e-7 * (1.0 + d1.abs()),
                    "{:?} y={y}: {fd1} vs {d1}",
                    s.family
                );
                assert!(
                    (fd2 - d2).abs() < 1e-6 * (1.0 + d2.abs()),
                    "{:?} y={y}: {fd2} vs {d2}",
                    s.family
                );
            }
        }
    }

    #[test]
    fn sup_abs_matches_sampling() {
        for s in all_specs() {
            let d = make_family(s.clone()).unwrap();
            let mut m: f64 = 0.0;
            for i in -20000..=20000 {
                m = m.max(d.value(i as f64 * 1e-3).abs());
            }
            assert!(m <= d.sup_abs() * (1.0 + 1e-12), "{:?}", s.family);
            assert!(m >= d.sup_abs() * (1.0 - 1e-6), "{:?}", s.family);
        }
    }

    #[test]
    fn json_field_names_are_fixed() {
        let s = FamilySpec::power_log(1.0, 0.25, 2.0);
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["alpha", "beta", "extra", "family", "kappa"]);
        assert_eq!(obj["family"], "PowerLog");
        let back: FamilySpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        let null_beta: FamilySpec =
            serde_json::from_str(r#"{"family":"PowerC0","kappa":1,"alpha":0.5,"beta":null,"extra":{}}"#).unwrap();
        assert_eq!(null_beta.beta, None);
    }

    #[test]
    fn tail_signs() {
        assert_eq!(FamilySpec::sign_flipped(1.0, 0.5).sign_at_plus(), -1.0);
        assert_eq!(FamilySpec::sign_flipped(1.0, 0.5).sign_at_minus(), 1.0);
        let r = negate_reflect(&make_family(FamilySpec::power_c0(1.0, 0.5)).unwrap());
        assert_eq!(r.spec().sign_at_plus(), -1.0);
        assert_eq!(r.spec().sign_at_minus(), -1.0);
    }

    #[test]
    fn reflection_round_trips_through_spec() {
        let d = make_family(FamilySpec::asymmetric(1.0, 0.3, 0.6)).unwrap();
        let r = negate_reflect(&d);
        let again = make_family(r.spec().clone()).unwrap();
        for &y in &[-3.0, -0.5, 0.25, 8.0] {
            assert_eq!(again.value(y), r.value(y));
            assert_eq!(again.primitive(y), r.primitive(y));
        }
    }

    #[test]
    fn lazy_extension_beyond_core_range() {
        let d = make_family(FamilySpec::power_c1(1.0, 0.5)).unwrap();
        let y = 1e15;
        let p = d.primitive(y);
        // P(y) ≈ 2 y^{1/2} + C for large y, C = ∫₀^∞ ((1+u²)^{-1/4} − u^{-1/2}) du + ...
        let h = 1e10;
        let slope = (d.primitive(y + h) - d.primitive(y - h)) / (2.0 * h);
        assert!((slope / d.value(y) - 1.0).abs() < 1e-6);
        assert!((p / (2.0 * y.sqrt()) - 1.0).abs() < 1e-6);
        assert_eq!(d.primitive(-y), -p);
    }
}
