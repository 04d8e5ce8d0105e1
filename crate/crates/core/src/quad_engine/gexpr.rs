//! Weights built from f₀, f₀′, f₀″ and powers of 1/t, closed under the two
//! derivations that move x- and t-derivatives inside the Hopf-Cole moments:
//! `∂ₓA_g = A_{Dₓg}` and `∂ₜA_g = A_{Dₜg}`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;

/// Exponents of f₀, f₀′, f₀″ and 1/t in one term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub f0: u8,
    pub f1: u8,
    pub f2: u8,
    pub inv_t: u8,
}

/// Polynomial in (f₀, f₀′, f₀″) with coefficients polynomial in 1/t,
/// kept in canonical form (no zero coefficients).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GExpression {
    terms: BTreeMap<Monomial, f64>,
}

impl GExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(Monomial::default(), c)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// f₀ (`order` = 0), f₀′ (1) or f₀″ (2).
    pub fn f0_derivative(order: usize) -> Result<Self> {
        let m = match order {
            0 => Monomial {
                f0: 1,
                ..Default::default()
            },
            1 => Monomial {
                f1: 1,
                ..Default::default()
            },
            2 => Monomial {
                f2: 1,
                ..Default::default()
            },
            _ => {
                return Err(Error::UnsupportedOrder {
                    requested: order,
                    max: 2,
                })
            }
        };
        Ok(Self::monomial(m, 1.0))
    }

    pub fn f0() -> Self {
        Self::monomial(
            Monomial {
                f0: 1,
                ..Default::default()
            },
            1.0,
        )
    }

    /// (1/t)^k.
    pub fn inv_t(k: u8) -> Self {
        Self::monomial(
            Monomial {
                inv_t: k,
                ..Default::default()
            },
            1.0,
        )
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(m, c);
        e
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, v * c);
        }
        out
    }

    /// Highest derivative of f₀ appearing (0 for constants).
    pub fn max_order(&self) -> usize {
        self.terms
            .keys()
            .map(|m| {
                if m.f2 > 0 {
                    2
                } else if m.f1 > 0 {
                    1
                } else {
                    0
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// Evaluate from the jet [f₀, f₀′, f₀″] at a point and the time t.
    pub fn eval_jet(&self, jet: [f64; 3], t: f64) -> f64 {
        let inv_t = 1.0 / t;
        self.terms
            .iter()
            .map(|(m, c)| {
                c * jet[0].powi(m.f0 as i32)
                    * jet[1].powi(m.f1 as i32)
                    * jet[2].powi(m.f2 as i32)
                    * inv_t.powi(m.inv_t as i32)
            })
            .sum()
    }

    pub fn eval(&self, data: &InitialData, y: f64, t: f64) -> f64 {
        self.eval_jet(data.jet(y), t)
    }

    /// d/dy treating f₀ as a function of y and t as a constant.
    pub fn derive_y(&self) -> Result<Self> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.f2 > 0 {
                return Err(Error::UnsupportedOrder { requested: 3, max: 2 });
            }
            if m.f0 > 0 {
                out.add_term(
                    Monomial {
                        f0: m.f0 - 1,
                        f1: m.f1 + 1,
                        ..*m
                    },
                    c * m.f0 as f64,
                );
            }
            if m.f1 > 0 {
                out.add_term(
                    Monomial {
                        f1: m.f1 - 1,
                        f2: m.f2 + 1,
                        ..*m
                    },
                    c * m.f1 as f64,
                );
            }
        }
        Ok(out)
    }

    /// Explicit ∂/∂t acting on the powers of 1/t.
    pub fn derive_t_explicit(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.inv_t > 0 {
                out.add_term(
                    Monomial {
                        inv_t: m.inv_t + 1,
                        ..*m
                    },
                    -c * m.inv_t as f64,
                );
            }
        }
        out
    }

    /// `g′ − ½ g f₀`, so that ∂ₓA_g = A_{derive_x(g)}.
    pub fn derive_x(&self) -> Result<Self> {
        Ok(self.derive_y()? - &(self * &Self::f0()).scale(0.5))
    }

    /// `g/(2t) + g″ − g′f₀ − ½gf₀′ + ¼gf₀² + ∂g/∂t`, so that ∂ₜA_g = A_{derive_t(g)}.
    /// The last term vanishes for weights without explicit 1/t factors.
    pub fn derive_t(&self) -> Result<Self> {
        let d1 = self.derive_y()?;
        let d2 = d1.derive_y()?;
        let f0 = Self::f0();
        let f1 = Self::f0_derivative(1)?;
        Ok(
            (self * &Self::inv_t(1)).scale(0.5) + &d2 - &(&d1 * &f0) - &(self * &f1).scale(0.5)
                + &(self * &(&f0 * &f0)).scale(0.25)
                + &self.derive_t_explicit(),
        )
    }
}

impl Add<&GExpression> for GExpression {
    type Output = GExpression;
    fn add(mut self, rhs: &GExpression) -> GExpression {
        for (m, c) in &rhs.terms {
            self.add_term(*m, *c);
        }
        self
    }
}

impl Add for GExpression {
    type Output = GExpression;
    fn add(self, rhs: GExpression) -> GExpression {
        self + &rhs
    }
}

impl Sub<&GExpression> for GExpression {
    type Output = GExpression;
    fn sub(self, rhs: &GExpression) -> GExpression {
        self + &rhs.scale(-1.0)
    }
}

impl Sub for GExpression {
    type Output = GExpression;
    fn sub(self, rhs: GExpression) -> GExpression {
        self - &rhs
    }
}

impl Neg for GExpression {
    type Output = GExpression;
    fn neg(self) -> GExpression {
        self.scale(-1.0)
    }
}

impl Mul<&GExpression> for &GExpression {
    type Output = GExpression;
    fn mul(self, rhs: &GExpression) -> GExpression {
        let mut out = GExpression::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let m = Monomial {
                    f0: a.f0 + b.f0,
                    f1: a.f1 + b.f1,
                    f2: a.f2 + b.f2,
                    inv_t: a.inv_t + b.inv_t,
                };
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl Mul for GExpression {
    type Output = GExpression;
    fn mul(self, rhs: GExpression) -> GExpression {
        &self * &rhs
    }
}

impl fmt::Display for GExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (name, p) in [("f0", m.f0), ("f0'", m.f1), ("f0''", m.f2), ("(1/t)", m.inv_t)] {
                match p {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{p}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(order: usize) -> GExpression {
        GExpression::f0_derivative(order).unwrap()
    }

    #[test]
    fn x_derivation_of_one_and_f0() {
        assert_eq!(GExpression::one().derive_x().unwrap(), f(0).scale(-0.5));
        let expected = f(1) - (&f(0) * &f(0)).scale(0.5);
        assert_eq!(f(0).derive_x().unwrap(), expected);
    }

    #[test]
    fn t_derivation_of_one() {
        let expected = GExpression::inv_t(1).scale(0.5) - f(1).scale(0.5) + (&f(0) * &f(0)).scale(0.25);
        assert_eq!(GExpression::one().derive_t().unwrap(), expected);
    }

    #[test]
    fn order_overflow_is_reported() {
        assert!(f(2).derive_y().is_err());
        assert!(f(1).derive_t().is_err());
        assert!(f(0).derive_x().unwrap().derive_t().is_err());
        assert!(f(0).derive_x().unwrap().derive_x().is_ok());
    }

    #[test]
    fn time_derivation_matches_heat_structure() {
        // ∂ₜA_g = ∂ₓ²A_g + A_g/(2t) for weights without explicit t.
        let g = f(0);
        let lhs = g.derive_t().unwrap();
        let rhs = g.derive_x().unwrap().derive_x().unwrap() + &(&g * &GExpression::inv_t(1)).scale(0.5);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn explicit_time_term() {
        let g = GExpression::inv_t(2).scale(3.0);
        assert_eq!(g.derive_t_explicit(), GExpression::inv_t(3).scale(-6.0));
    }

    #[test]
    fn evaluation_is_termwise() {
        let g = f(0) * f(1) + GExpression::inv_t(1).scale(2.0) - f(2);
        let v = g.eval_jet([2.0, 3.0, 5.0], 4.0);
        assert!((v - (6.0 + 0.5 - 5.0)).abs() < 1e-15);
        assert_eq!(g.max_order(), 2);
    }
}
