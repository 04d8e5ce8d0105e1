//! Small numerical kernels shared by the modules: bracketed root polish,
//! golden-section search, the 21-point Gauss-Kronrod rule and quintic
//! Hermite interpolation.

use crate::error::{Error, Result};

/// Brent's bracketed root finder. `fa` and `fb` must have opposite signs
/// (or one of them be zero). Stops when the bracket is below
/// `xtol + 4 eps |x|` or the function vanishes.
pub fn brent_root<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange {
            what: "bracketed function".into(),
            lo: a.min(b),
            hi: a.max(b),
        });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Inconsistency(format!(
                "non-finite function value at {b} during root polish"
            )));
        }
    }
    Ok(b)
}

/// Golden-section search for a maximum of `f` on `[a, b]`. Returns
/// `(x, f(x))` for the best point evaluated.
pub fn golden_max<F>(mut f: F, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    for _ in 0..max_iter {
        if hi - lo <= rel_tol * scale {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Abscissae of the 21-point Kronrod rule on [-1, 1] (non-negative half).
pub const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

pub const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_626_368,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

/// 10-point Gauss weights paired with `XGK[1], XGK[3], ..., XGK[9]`.
pub const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One application of the 21-point rule to a scalar function.
/// Returns `(integral, error estimate)` using the QUADPACK error heuristic.
pub fn gk21<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs = (WGK[10] * fc).abs();
    let mut vals = [0.0f64; 21];
    vals[10] = fc;
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        vals[j] = f1;
        vals[20 - j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((vals[j] - mean).abs() + (vals[20 - j] - mean).abs());
    }
    let err = quadpack_error((kron - gauss) * h, asc * h.abs(), abs * h.abs());
    (kron * h, err)
}

/// QUADPACK's scaled error estimate from the raw Kronrod-Gauss difference.
pub fn quadpack_error(diff: f64, resasc: f64, resabs: f64) -> f64 {
    let mut err = diff.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

/// Globally adaptive GK21 on [a, b]: bisects the piece with the largest
/// error estimate until the total error is below `rel_tol`·|I| (or
/// `abs_tol`). Returns (integral, error estimate).
pub fn adaptive_gk21<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk21(&mut f, a, b);
    pieces.push((a, b, v, e));
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= (rel_tol * total.abs()).max(abs_tol) {
            break;
        }
        let (i, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, _, _) = pieces[i];
        let m = 0.5 * (pa + pb);
        if !(m > pa && m < pb) {
            break;
        }
        let (v1, e1) = gk21(&mut f, pa, m);
        let (v2, e2) = gk21(&mut f, m, pb);
        pieces[i] = (pa, m, v1, e1);
        pieces.push((m, pb, v2, e2));
    }
    let mut sum = CompensatedSum::default();
    for p in &pieces {
        sum.add(p.2);
    }
    (sum.value(), pieces.iter().map(|p| p.3).sum())
}

/// Quintic Hermite interpolation on one panel of width `h` from values,
/// first and second derivatives at both ends; `s` in [0, 1].
#[inline]
pub fn hermite5(s: f64, h: f64, p0: [f64; 3], p1: [f64; 3]) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    p0[0] * h0 + h * p0[1] * h1 + h * h * p0[2] * h2 + h * h * p1[2] * h3 + h * p1[1] * h4 + p1[0] * h5
}

/// `count` points log-spaced between `lo` and `hi` inclusive (both positive).
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// `count` points evenly spaced between `lo` and `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let (v, e) = adaptive_gk21(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 0.0);
        assert!((v - 2.0).abs() < 1e-8, "{v} {e}");
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = brent_root(|x| x * x * x - 2.0, 0.0, 2.0, -2.0, 6.0, 0.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn brent_rejects_same_sign() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 2.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, _) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3)), -1.0, 2.0, 1e-12, 200).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn gk21_integrates_smooth_functions() {
        let (v, e) = gk21(|x| x.exp(), 0.0, 1.0);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!(e < 1e-13);
        let (v, _) = gk21(|x| x.powi(20), -1.0, 1.0);
        assert!((v - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn hermite5_reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.25 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x - 1.25 * x.powi(4);
        let ddp = |x: f64| 3.0 * x - 5.0 * x.powi(3);
        let (a, b) = (0.4, 1.1);
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            let x = a + s * (b - a);
            let v = hermite5(s, b - a, [p(a), dp(a), ddp(a)], [p(b), dp(b), ddp(b)]);
            assert!((v - p(x)).abs() < 1e-14, "s={s}");
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-30);
    }
}
