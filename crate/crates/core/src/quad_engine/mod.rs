//! Exponential integrals `A_g = ∫ g(y) e^{H(y)} dy` with
//! `H(y) = −(x−y)²/(4t) − ½∫₀^y f₀`.
//!
//! The phase is analysed once per (x, t): all stationary points are located
//! by a sign scan of H′ on a composite grid and polished with Brent's
//! method. Integration runs on the monotone stretches between stationary
//! points, starting at each stretch's high end and stopping 40 e-folds below
//! the global maximum, with the maximum subtracted so that only the mantissa
//! is ever formed.

mod gexpr;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

pub use gexpr::{GExpression, Monomial};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::numeric::{brent_root, log_space, quadpack_error, CompensatedSum, WG, WGK, XGK};

/// Integration stops where the phase is this far below its maximum.
pub const TRUNCATION_EFOLDS: f64 = 40.0;
/// Exponent of the near-origin window |y| ≤ t^{-1/(1+α)+ε} in rescaled units.
pub const NEAR_ORIGIN_EPS: f64 = 0.1;

const REL_TOL: f64 = 1e-11;
const ROUNDOFF_TOL: f64 = 1e-13;
const MAX_PIECES: usize = 6000;

/// Spatial scale t^{1/(1+α)} of the rescaled variables.
pub fn space_scale(alpha: f64, t: f64) -> f64 {
    t.powf(1.0 / (1.0 + alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseMode {
    /// H(y) at physical (x, t).
    Physical { x: f64, t: f64 },
    /// t^{(1−α)/(1+α)} H̃ₜ(y, z), i.e. H at x = zT in the variable y/T.
    Rescaled { z: f64, t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseSpec<'a> {
    pub data: &'a InitialData,
    pub mode: PhaseMode,
}

impl<'a> PhaseSpec<'a> {
    pub fn physical(data: &'a InitialData, x: f64, t: f64) -> Self {
        PhaseSpec {
            data,
            mode: PhaseMode::Physical { x, t },
        }
    }

    pub fn rescaled(data: &'a InitialData, z: f64, t: f64) -> Self {
        PhaseSpec {
            data,
            mode: PhaseMode::Rescaled { z, t },
        }
    }

    pub fn t(&self) -> f64 {
        match self.mode {
            PhaseMode::Physical { t, .. } | PhaseMode::Rescaled { t, .. } => t,
        }
    }

    /// Length of one unit of the mode's y-variable in physical units.
    pub fn scale(&self) -> f64 {
        match self.mode {
            PhaseMode::Physical { .. } => 1.0,
            PhaseMode::Rescaled { t, .. } => space_scale(self.data.alpha(), t),
        }
    }

    pub fn physical_x(&self) -> f64 {
        match self.mode {
            PhaseMode::Physical { x, .. } => x,
            PhaseMode::Rescaled { z, .. } => z * self.scale(),
        }
    }

    /// Phase value at y (mode coordinates).
    pub fn value(&self, y: f64) -> f64 {
        let (x, t, s) = (self.physical_x(), self.t(), self.scale());
        let u = y * s;
        -(x - u) * (x - u) / (4.0 * t) - 0.5 * self.data.primitive(u)
    }

    fn validate(&self) -> Result<()> {
        let t = self.t();
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("phase needs t > 0, got {t}")));
        }
        if !self.physical_x().is_finite() {
            return Err(Error::InvalidParameter("phase needs a finite x".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    LocalMax,
    LocalMin,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Location in the mode's coordinate.
    pub y: f64,
    /// Phase minus its global maximum (≤ 0).
    pub phase_value: f64,
    pub kind: CriticalKind,
    /// |d(phase)/dy| at y; for rescaled phases this is |∂_y H̃ₜ|.
    pub residual: f64,
    pub global_max: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizedIntegral {
    /// The subtracted maximum of the phase.
    pub log_scale: f64,
    /// ∫ g e^{phase − log_scale} dy in the mode's coordinate.
    pub mantissa: f64,
    pub abs_error: f64,
    /// Interval actually integrated (mode coordinates).
    pub truncation: (f64, f64),
    pub converged: bool,
}

impl StabilizedIntegral {
    /// mantissa · e^{log_scale}; overflows to ±∞ when the scale is too large.
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

/// Weights evaluated at physical points y.
pub trait WeightSet: Sync {
    fn len(&self) -> usize;
    fn eval(&self, y: f64, out: &mut [f64]);
}

/// GExpressions evaluated against the phase's data and time.
pub struct ExprWeights<'a> {
    pub data: &'a InitialData,
    pub t: f64,
    pub exprs: &'a [GExpression],
}

impl WeightSet for ExprWeights<'_> {
    fn len(&self) -> usize {
        self.exprs.len()
    }

    fn eval(&self, y: f64, out: &mut [f64]) {
        let jet = self.data.jet(y);
        for (o, e) in out.iter_mut().zip(self.exprs) {
            *o = e.eval_jet(jet, self.t);
        }
    }
}

/// Weights from a closure filling `n` values.
pub struct FnWeights<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(f64, &mut [f64]) + Sync> WeightSet for FnWeights<F> {
    fn len(&self) -> usize {
        self.n
    }

    fn eval(&self, y: f64, out: &mut [f64]) {
        (self.f)(y, out)
    }
}

#[derive(Debug, Clone, Copy)]
struct Stationary {
    y: f64,
    h: f64,
    is_max: bool,
    degenerate: bool,
    /// |H′(y)| in physical units.
    residual: f64,
    d2: f64,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    start: f64,
    end: f64,
    width: f64,
    /// True when `end` is a truncation point rather than a natural end.
    cut: bool,
}

/// Stationary-point analysis of one phase, reused by every moment
/// integrated against it.
#[derive(Debug, Clone)]
pub struct PhaseAnalysis<'a> {
    phase: PhaseSpec<'a>,
    x: f64,
    t: f64,
    scale: f64,
    points: Vec<Stationary>,
    y_ref: f64,
    p_ref: f64,
    h_max: f64,
    noise: f64,
    domain: (f64, f64),
    ranges: Vec<Range>,
    /// Stretches skipped entirely, as (start, start phase − max, width).
    skipped: Vec<(f64, f64, f64)>,
}

impl<'a> PhaseAnalysis<'a> {
    pub fn new(phase: PhaseSpec<'a>) -> Result<Self> {
        Self::build(phase, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Analysis on the domain [lo, hi] (mode coordinates, may be infinite).
    pub fn restricted(phase: PhaseSpec<'a>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty domain [{lo}, {hi}]")));
        }
        let s = phase.scale();
        Self::build(phase, lo * s, hi * s)
    }

    fn build(phase: PhaseSpec<'a>, lo: f64, hi: f64) -> Result<Self> {
        phase.validate()?;
        let data = phase.data;
        let (x, t, scale) = (phase.physical_x(), phase.t(), phase.scale());
        let dh = |y: f64| (x - y) / t - data.value(y);

        // Every zero of H′ lies in [x − tM, x + tM].
        let m = data.sup_abs();
        let span = t * m;
        let pad = if m > 0.0 { 1e-9 * (1.0 + x.abs() + span) } else { 1.0 };
        let scan_lo = (x - span - pad).max(lo);
        let scan_hi = (x + span + pad).min(hi);

        let mut points = Vec::new();
        if scan_lo < scan_hi {
            let grid = scan_grid(data, x, t, scan_lo, scan_hi);
            let vals: Vec<f64> = grid.iter().map(|&y| dh(y)).collect();
            for i in 0..grid.len() - 1 {
                let (a, b, fa, fb) = (grid[i], grid[i + 1], vals[i], vals[i + 1]);
                let falling = fa >= 0.0 && fb < 0.0;
                let rising = fa < 0.0 && fb >= 0.0;
                if !(falling || rising) {
                    continue;
                }
                let y = brent_root(dh, a, b, fa, fb, 0.0)?;
                let jet = data.jet(y);
                let d2 = 0.5 * (-1.0 / t - jet[1]);
                points.push(Stationary {
                    y,
                    h: 0.0,
                    is_max: falling,
                    degenerate: (1.0 + t * jet[1]).abs() < 1e-6,
                    residual: 0.5 * dh(y).abs(),
                    d2,
                });
            }
        }
        // A tangential zero shows up as a max/min pair at the same point.
        points.dedup_by(|b, a| {
            if (a.y - b.y).abs() <= 4.0 * f64::EPSILON * (1.0 + a.y.abs()) && a.is_max != b.is_max {
                a.degenerate = true;
                true
            } else {
                false
            }
        });

        let unrestricted = lo == f64::NEG_INFINITY && hi == f64::INFINITY;
        if unrestricted && !points.iter().any(|p| p.is_max) {
            return Err(Error::Inconsistency(format!(
                "no maximum of the phase found at x={x}, t={t}"
            )));
        }

        // Reference point: highest maximum, or the best finite endpoint.
        let raw_h = |y: f64| -(x - y) * (x - y) / (4.0 * t) - 0.5 * data.primitive(y);
        let mut y_ref = f64::NAN;
        let mut best = f64::NEG_INFINITY;
        for p in points.iter().filter(|p| p.is_max) {
            let h = raw_h(p.y);
            if h > best {
                best = h;
                y_ref = p.y;
            }
        }
        for e in [lo, hi] {
            if e.is_finite() {
                let h = raw_h(e);
                if h > best {
                    best = h;
                    y_ref = e;
                }
            }
        }
        if y_ref.is_nan() {
            return Err(Error::Inconsistency("phase has no finite maximum on the domain".into()));
        }
        let p_ref = data.primitive(y_ref);
        let noise = 16.0 * f64::EPSILON * (1.0 + p_ref.abs() + (x - y_ref) * (x - y_ref) / (4.0 * t));

        let mut an = PhaseAnalysis {
            phase,
            x,
            t,
            scale,
            points,
            y_ref,
            p_ref,
            h_max: best,
            noise,
            domain: (lo, hi),
            ranges: Vec::new(),
            skipped: Vec::new(),
        };
        for i in 0..an.points.len() {
            an.points[i].h = an.rel_h(an.points[i].y);
        }
        an.plan_ranges();
        Ok(an)
    }

    /// H(y) − H_max computed around the reference maximum.
    #[inline]
    fn rel_h(&self, y: f64) -> f64 {
        let quad = (self.y_ref - y) * (2.0 * self.x - y - self.y_ref) / (4.0 * self.t);
        -quad - 0.5 * (self.phase.data.primitive(y) - self.p_ref)
    }

    fn width_at(&self, y: f64) -> f64 {
        let d2 = 0.5 * (1.0 / self.t + self.phase.data.jet(y)[1]).abs();
        let cap = 100.0 * (2.0 * self.t).sqrt() + 1.0;
        let w = if d2 > 0.0 { d2.powf(-0.5) } else { cap };
        w.clamp(1e-12 * (1.0 + y.abs()), cap)
    }

    fn plan_ranges(&mut self) {
        let level = -TRUNCATION_EFOLDS;
        let (lo, hi) = self.domain;
        let mut nodes: Vec<f64> = Vec::with_capacity(self.points.len() + 2);
        nodes.push(lo);
        nodes.extend(self.points.iter().map(|p| p.y));
        nodes.push(hi);
        let h_of = |an: &Self, y: f64| if y.is_finite() { an.rel_h(y) } else { f64::NEG_INFINITY };
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(a < b) {
                continue;
            }
            let (ha, hb) = (h_of(self, a), h_of(self, b));
            let (start, other, h_start, h_other) = if ha >= hb { (a, b, ha, hb) } else { (b, a, hb, ha) };
            let width = self.width_at(start);
            if h_start < level {
                self.skipped.push((start, h_start, width.min((b - a).abs())));
                continue;
            }
            if other.is_finite() && h_other >= level {
                self.ranges.push(Range {
                    start,
                    end: other,
                    width,
                    cut: false,
                });
                continue;
            }
            let end = self.find_cut(start, other, width, level);
            self.ranges.push(Range {
                start,
                end,
                width,
                cut: true,
            });
        }
    }

    /// First point from `start` towards `other` where the phase drops below
    /// `level` (the phase is monotone on the stretch).
    fn find_cut(&self, start: f64, other: f64, width: f64, level: f64) -> f64 {
        let dir = if other > start { 1.0 } else { -1.0 };
        let mut inside = start;
        let mut outside = other;
        let mut step = width;
        for _ in 0..2100 {
            let cand = start + dir * step;
            if (dir > 0.0 && cand >= other) || (dir < 0.0 && cand <= other) {
                break;
            }
            if self.rel_h(cand) < level {
                outside = cand;
                break;
            }
            inside = cand;
            step *= 2.0;
        }
        for _ in 0..200 {
            if (outside - inside).abs() <= 1e-6 * width {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if self.rel_h(mid) < level {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        outside
    }

    pub fn phase(&self) -> &PhaseSpec<'a> {
        &self.phase
    }

    /// Global maximum of the phase (physical H, identical in both modes).
    pub fn log_scale(&self) -> f64 {
        self.h_max
    }

    /// Located stationary points in mode coordinates, sorted by y.
    pub fn critical_points(&self) -> Vec<CriticalPoint> {
        let s = self.scale;
        let resid_factor = if s == 1.0 { 1.0 } else { self.t / s };
        let global = self
            .points
            .iter()
            .filter(|p| p.is_max)
            .max_by(|a, b| a.h.total_cmp(&b.h))
            .map(|p| p.y);
        self.points
            .iter()
            .map(|p| CriticalPoint {
                y: p.y / s,
                phase_value: p.h.min(0.0),
                kind: if p.degenerate {
                    CriticalKind::Degenerate
                } else if p.is_max {
                    CriticalKind::LocalMax
                } else {
                    CriticalKind::LocalMin
                },
                residual: p.residual * resid_factor,
                global_max: Some(p.y) == global,
            })
            .collect()
    }

    /// Local maxima as (physical y, phase − max), sorted by y.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter(|p| p.is_max).map(|p| (p.y, p.h)).collect()
    }

    /// Phase second derivative H″ at each stationary point (physical units).
    pub fn curvatures(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.d2).collect()
    }

    /// Integrate every weight of `w` against e^{phase − max}. `breaks` are
    /// extra physical breakpoints.
    pub fn integrate(&self, w: &dyn WeightSet, breaks: &[f64]) -> Vec<StabilizedIntegral> {
        let n = w.len();
        let mut initial: Vec<(f64, f64)> = Vec::new();
        for r in &self.ranges {
            let (a, b) = if r.start < r.end {
                (r.start, r.end)
            } else {
                (r.end, r.start)
            };
            let dir = if r.end > r.start { 1.0 } else { -1.0 };
            let mut cuts = vec![a, b];
            let mut step = r.width;
            while step < (b - a) {
                cuts.push(r.start + dir * step);
                step *= 2.0;
            }
            for &p in self.phase.data.breakpoints().iter().chain(breaks) {
                if p > a && p < b {
                    cuts.push(p);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for c in cuts.windows(2) {
                if c[1] > c[0] {
                    initial.push((c[0], c[1]));
                }
            }
        }

        let mut pieces: Vec<Piece> = initial.iter().map(|&(a, b)| self.gk_piece(w, a, b)).collect();
        let mut total_val = vec![0.0; n];
        let mut total_abs = vec![0.0; n];
        for p in &pieces {
            for j in 0..n {
                total_val[j] += p.val[j];
                total_abs[j] += p.abs[j];
            }
        }
        let tol_scale: Vec<f64> = (0..n)
            .map(|j| {
                (REL_TOL * total_val[j].abs())
                    .max(ROUNDOFF_TOL.max(self.noise) * total_abs[j])
                    .max(f64::MIN_POSITIVE)
            })
            .collect();

        let key = |p: &Piece| (0..n).map(|j| p.err[j] / tol_scale[j]).fold(0.0f64, f64::max);
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
        let mut total_err = vec![0.0; n];
        for (i, p) in pieces.iter().enumerate() {
            for j in 0..n {
                total_err[j] += p.err[j];
            }
            heap.push(HeapEntry { key: key(p), index: i });
        }
        let mut converged = false;
        while pieces.len() < MAX_PIECES {
            let tol: Vec<f64> = (0..n)
                .map(|j| (REL_TOL * total_val[j].abs()).max(ROUNDOFF_TOL.max(self.noise) * total_abs[j]))
                .collect();
            if (0..n).all(|j| total_err[j] <= tol[j]) {
                converged = true;
                break;
            }
            let Some(top) = heap.pop() else { break };
            if top.key == 0.0 {
                break;
            }
            let p = pieces[top.index].clone();
            let mid = 0.5 * (p.a + p.b);
            if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 1e-13 * (p.a.abs() + p.b.abs()) {
                // Cannot split further; keep its error and move on.
                pieces[top.index].stuck = true;
                continue;
            }
            let left = self.gk_piece(w, p.a, mid);
            let right = self.gk_piece(w, mid, p.b);
            for j in 0..n {
                total_val[j] += left.val[j] + right.val[j] - p.val[j];
                total_abs[j] += left.abs[j] + right.abs[j] - p.abs[j];
                total_err[j] += left.err[j] + right.err[j] - p.err[j];
            }
            heap.push(HeapEntry {
                key: key(&left),
                index: top.index,
            });
            pieces[top.index] = left;
            heap.push(HeapEntry {
                key: key(&right),
                index: pieces.len(),
            });
            pieces.push(right);
        }
        if !converged {
            let tol: Vec<f64> = (0..n)
                .map(|j| (REL_TOL * total_val[j].abs()).max(ROUNDOFF_TOL.max(self.noise) * total_abs[j]))
                .collect();
            converged = (0..n).all(|j| total_err[j] <= tol[j]);
        }

        // Final sums, compensated and in a fixed order.
        pieces.sort_by(|a, b| a.a.total_cmp(&b.a));
        let mut tail = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for r in self.ranges.iter().filter(|r| r.cut) {
            let e = self.rel_h(r.end).exp();
            let slope = 0.5 * ((self.x - r.end) / self.t - self.phase.data.value(r.end)).abs();
            let len = if slope > 0.0 { 1.0 / slope } else { r.width };
            w.eval(r.end, &mut buf);
            for j in 0..n {
                tail[j] += e * buf[j].abs() * len.min(1e3 * r.width);
            }
        }
        for &(y, h, width) in &self.skipped {
            w.eval(y, &mut buf);
            for j in 0..n {
                tail[j] += h.exp() * buf[j].abs() * width;
            }
        }
        let lo = pieces.first().map_or(self.y_ref, |p| p.a);
        let hi = pieces.last().map_or(self.y_ref, |p| p.b);
        (0..n)
            .map(|j| {
                let mut v = CompensatedSum::default();
                let mut e = 0.0;
                for p in &pieces {
                    v.add(p.val[j]);
                    e += p.err[j];
                }
                StabilizedIntegral {
                    log_scale: self.h_max,
                    mantissa: v.value() / self.scale,
                    abs_error: (e + tail[j]) / self.scale,
                    truncation: (lo / self.scale, hi / self.scale),
                    converged,
                }
            })
            .collect()
    }

    fn gk_piece(&self, w: &dyn WeightSet, a: f64, b: f64) -> Piece {
        let n = w.len();
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut vals = vec![0.0; 21 * n];
        let mut tmp = vec![0.0; n];
        let mut eval_at = |slot: usize, y: f64, vals: &mut Vec<f64>| {
            let e = self.rel_h(y).exp();
            w.eval(y, &mut tmp);
            for j in 0..n {
                vals[slot * n + j] = tmp[j] * e;
            }
        };
        eval_at(10, c, &mut vals);
        for k in 0..10 {
            let dx = h * XGK[k];
            eval_at(k, c - dx, &mut vals);
            eval_at(20 - k, c + dx, &mut vals);
        }
        let mut piece = Piece {
            a,
            b,
            val: vec![0.0; n],
            err: vec![0.0; n],
            abs: vec![0.0; n],
            stuck: false,
        };
        for j in 0..n {
            let f = |slot: usize| vals[slot * n + j];
            let mut kron = WGK[10] * f(10);
            let mut gauss = 0.0;
            let mut abs = WGK[10] * f(10).abs();
            for k in 0..10 {
                let (f1, f2) = (f(k), f(20 - k));
                kron += WGK[k] * (f1 + f2);
                abs += WGK[k] * (f1.abs() + f2.abs());
                if k % 2 == 1 {
                    gauss += WG[k / 2] * (f1 + f2);
                }
            }
            let mean = 0.5 * kron;
            let mut asc = WGK[10] * (f(10) - mean).abs();
            for k in 0..10 {
                asc += WGK[k] * ((f(k) - mean).abs() + (f(20 - k) - mean).abs());
            }
            piece.val[j] = kron * h;
            piece.abs[j] = abs * h.abs();
            piece.err[j] = quadpack_error((kron - gauss) * h, asc * h.abs(), abs * h.abs());
        }
        piece
    }
}

#[derive(Debug, Clone)]
struct Piece {
    a: f64,
    b: f64,
    val: Vec<f64>,
    err: Vec<f64>,
    abs: Vec<f64>,
    stuck: bool,
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    key: f64,
    index: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Composite scan grid on [lo, hi]: uniform, dense near the origin, and
/// log-spaced in |y| on both sides.
fn scan_grid(data: &InitialData, x: f64, t: f64, lo: f64, hi: f64) -> Vec<f64> {
    let fs = data.feature_scale();
    let mut g = Vec::with_capacity(8192);
    let n_uniform = 400;
    for i in 0..=n_uniform {
        g.push(lo + (hi - lo) * i as f64 / n_uniform as f64);
    }
    let window = fs * 4.0f64.max(t.powf(NEAR_ORIGIN_EPS));
    let (wl, wh) = (lo.max(-window), hi.min(window));
    if wl < wh {
        let n_origin = 2000;
        for i in 0..=n_origin {
            g.push(wl + (wh - wl) * i as f64 / n_origin as f64);
        }
    }
    let r_max = lo.abs().max(hi.abs());
    let r_min = 1e-3 * fs;
    if r_max > r_min {
        let decades = (r_max / r_min).log10();
        let count = (200.0 * decades).ceil() as usize + 1;
        for r in log_space(r_min, r_max, count) {
            for y in [r, -r] {
                if y > lo && y < hi {
                    g.push(y);
                }
            }
        }
    }
    for y in [0.0, x] {
        if y > lo && y < hi {
            g.push(y);
        }
    }
    g.push(lo);
    g.push(hi);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Stationary points of the phase, sorted, with the global maximum flagged.
pub fn locate_critical_points(phase: PhaseSpec<'_>) -> Result<Vec<CriticalPoint>> {
    Ok(PhaseAnalysis::new(phase)?.critical_points())
}

/// ∫ g e^{phase} in stabilized form.
pub fn integrate_moment(g: &GExpression, phase: PhaseSpec<'_>) -> Result<StabilizedIntegral> {
    let an = PhaseAnalysis::new(phase)?;
    let exprs = std::slice::from_ref(g);
    let w = ExprWeights {
        data: phase.data,
        t: phase.t(),
        exprs,
    };
    Ok(an.integrate(&w, &[])[0])
}

/// A_g / A_1 for each g, sharing one phase analysis.
pub fn ratio_moments(gs: &[GExpression], phase: PhaseSpec<'_>) -> Result<Vec<f64>> {
    let an = PhaseAnalysis::new(phase)?;
    ratio_moments_with(&an, gs)
}

/// As [`ratio_moments`] on an existing analysis.
pub fn ratio_moments_with(an: &PhaseAnalysis<'_>, gs: &[GExpression]) -> Result<Vec<f64>> {
    let mut exprs = Vec::with_capacity(gs.len() + 1);
    exprs.push(GExpression::one());
    exprs.extend_from_slice(gs);
    let w = ExprWeights {
        data: an.phase().data,
        t: an.phase().t(),
        exprs: &exprs,
    };
    let ints = an.integrate(&w, &[]);
    let den = ints[0];
    if !den.converged || !(den.mantissa > 0.0) {
        return Err(Error::NotConverged {
            what: "normalising integral".into(),
            abs_error: den.abs_error,
            magnitude: den.mantissa,
        });
    }
    Ok(ints[1..].iter().map(|i| i.mantissa / den.mantissa).collect())
}

/// A_g / A_1.
pub fn ratio_moment(g: &GExpression, phase: PhaseSpec<'_>) -> Result<f64> {
    Ok(ratio_moments(std::slice::from_ref(g), phase)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{make_family, FamilySpec};
    use std::f64::consts::PI;

    #[test]
    fn pure_gaussian_integral() {
        let d = make_family(FamilySpec::zero()).unwrap();
        let i = integrate_moment(&GExpression::one(), PhaseSpec::physical(&d, 0.0, 1.0)).unwrap();
        assert!(i.converged);
        assert_eq!(i.log_scale, 0.0);
        assert!((i.mantissa - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(i.abs_error <= 1e-8 * i.mantissa);
    }

    #[test]
    fn constant_data_completes_the_square() {
        let c = 0.8;
        let d = make_family(FamilySpec::constant(c)).unwrap();
        for &(x, t) in &[(0.0, 1.0), (3.0, 2.5), (-40.0, 30.0)] {
            let i = integrate_moment(&GExpression::one(), PhaseSpec::physical(&d, x, t)).unwrap();
            let log_exact = 0.5 * (4.0 * PI * t).ln() + c * c * t / 4.0 - c * x / 2.0;
            let log_num = i.mantissa.ln() + i.log_scale;
            assert!((log_num - log_exact).abs() < 1e-9, "x={x} t={t}");
        }
    }

    #[test]
    fn zero_data_rescaled_single_max() {
        let d = make_family(FamilySpec::zero()).unwrap();
        let cps = locate_critical_points(PhaseSpec::rescaled(&d, 2.0, 10.0)).unwrap();
        assert_eq!(cps.len(), 1);
        assert!((cps[0].y - 2.0).abs() < 1e-12);
        assert_eq!(cps[0].kind, CriticalKind::LocalMax);
        assert!(cps[0].global_max);
    }

    #[test]
    fn constant_data_max_location() {
        let c = 0.6;
        let d = make_family(FamilySpec::constant(c)).unwrap();
        let cps = locate_critical_points(PhaseSpec::physical(&d, 0.0, 1.0)).unwrap();
        assert_eq!(cps.len(), 1);
        assert!((cps[0].y + c).abs() < 1e-12);
    }

    #[test]
    fn ratio_of_trivial_weights() {
        let d = make_family(FamilySpec::power_c1(1.0, 0.5)).unwrap();
        let ph = PhaseSpec::physical(&d, 1.5, 20.0);
        assert!((ratio_moment(&GExpression::one(), ph).unwrap() - 1.0).abs() < 1e-15);
        let c = make_family(FamilySpec::constant(-0.3)).unwrap();
        let r = ratio_moment(&GExpression::f0(), PhaseSpec::physical(&c, 2.0, 7.0)).unwrap();
        assert!((r + 0.3).abs() < 1e-14);
        let z = make_family(FamilySpec::zero()).unwrap();
        let i = integrate_moment(&GExpression::f0(), PhaseSpec::physical(&z, 1.0, 1.0)).unwrap();
        assert_eq!(i.mantissa, 0.0);
    }

    #[test]
    fn rescaled_critical_points_follow_limit_branches() {
        // Roots of z = g(y) for g(y) = y + |y|^{-1/3} at z = 3, by bisection.
        let g = |y: f64| y + y.abs().powf(-1.0 / 3.0);
        let bisect = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (g(a) - 3.0) * (g(m) - 3.0) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        };
        let y0 = 3f64.powf(-0.75);
        let expected = [bisect(-10.0, -1e-9), bisect(1e-9, y0), bisect(y0, 10.0)];
        let d = make_family(FamilySpec::power_c1(1.0, 1.0 / 3.0)).unwrap();
        let cps = locate_critical_points(PhaseSpec::rescaled(&d, 3.0, 1e6)).unwrap();
        for e in expected {
            assert!(
                cps.iter().any(|c| (c.y - e).abs() < 1e-2),
                "missing root near {e}: {cps:?}"
            );
        }
        for c in &cps {
            assert!(c.residual <= 1e-10, "{c:?}");
        }
    }
}
