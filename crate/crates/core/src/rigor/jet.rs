//! Second-order forward differentiation over intervals.

use super::expr::{pow_interval, Expr, Rational};
use super::interval::Interval;
use crate::error::{Error, Result};

/// Enclosures of `f`, `f'`, `f''` over an input interval, plus an
/// enclosure of the distortion ratio `f'' / f'^2`.
///
/// The distortion is propagated structurally (through constant scalings,
/// powers and compositions) because the naive quotient `d2 / d1^2` loses
/// all precision next to singular points of `f'`. Where no structural rule
/// applies it is the naive quotient, or the whole line when `d1` may vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub val: Interval,
    pub d1: Interval,
    pub d2: Interval,
    pub dist: Interval,
}

/// How `abs` is differentiated on intervals that straddle its kink.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Smoothness {
    /// Return the hull of both one-sided jets.
    #[default]
    Hull,
    /// Fail with [`Error::NonSmooth`].
    Strict,
}

fn naive_dist(d1: Interval, d2: Interval) -> Interval {
    if d1.contains_zero() {
        Interval::ENTIRE
    } else {
        d2.div(d1.sqr()).unwrap_or(Interval::ENTIRE)
    }
}

fn refine(structural: Option<Interval>, d1: Interval, d2: Interval) -> Interval {
    let naive = naive_dist(d1, d2);
    match structural {
        Some(s) => s.intersect(&naive).unwrap_or(s),
        None => naive,
    }
}

#[allow(clippy::should_implement_trait)]
impl Jet2 {
    pub fn variable(x: Interval) -> Jet2 {
        Jet2 {
            val: x,
            d1: Interval::ONE,
            d2: Interval::ZERO,
            dist: Interval::ZERO,
        }
    }

    pub fn constant(c: Interval) -> Jet2 {
        Jet2 {
            val: c,
            d1: Interval::ZERO,
            d2: Interval::ZERO,
            dist: Interval::ENTIRE,
        }
    }

    fn is_const(&self) -> bool {
        self.d1 == Interval::ZERO && self.d2 == Interval::ZERO
    }

    pub fn neg(self) -> Jet2 {
        Jet2 {
            val: -self.val,
            d1: -self.d1,
            d2: -self.d2,
            dist: -self.dist,
        }
    }

    pub fn add(self, o: Jet2) -> Jet2 {
        let (d1, d2) = (self.d1 + o.d1, self.d2 + o.d2);
        let structural = if o.is_const() {
            Some(self.dist)
        } else if self.is_const() {
            Some(o.dist)
        } else {
            None
        };
        Jet2 {
            val: self.val + o.val,
            d1,
            d2,
            dist: refine(structural, d1, d2),
        }
    }

    pub fn sub(self, o: Jet2) -> Jet2 {
        self.add(o.neg())
    }

    pub fn mul(self, o: Jet2) -> Jet2 {
        let d1 = self.d1 * o.val + self.val * o.d1;
        let d2 = self.d2 * o.val + Interval::point(2.0) * self.d1 * o.d1 + self.val * o.d2;
        // (c f)'' / (c f')^2 = f''/f'^2 / c
        let structural = if o.is_const() && !o.val.contains_zero() {
            self.dist.div(o.val).ok()
        } else if self.is_const() && !self.val.contains_zero() {
            o.dist.div(self.val).ok()
        } else {
            None
        };
        Jet2 {
            val: self.val * o.val,
            d1,
            d2,
            dist: refine(structural, d1, d2),
        }
    }

    pub fn recip(self) -> Result<Jet2> {
        let r = self.val.recip()?;
        let r2 = r.sqr();
        let d1 = -(self.d1 * r2);
        // (1/g)'' = (2 g'^2 - g g'') / g^3
        let d2 = (Interval::point(2.0) * self.d1.sqr() - self.val * self.d2) * r2 * r;
        Ok(Jet2 {
            val: r,
            d1,
            d2,
            dist: naive_dist(d1, d2),
        })
    }

    pub fn div(self, o: Jet2) -> Result<Jet2> {
        if o.is_const() {
            let inv = o.val.recip()?;
            return Ok(self.mul(Jet2::constant(inv)));
        }
        Ok(self.mul(o.recip()?))
    }

    pub fn abs(self, mode: Smoothness) -> Result<Jet2> {
        if self.val.lo() >= 0.0 {
            Ok(self)
        } else if self.val.hi() <= 0.0 {
            Ok(self.neg())
        } else if mode == Smoothness::Strict {
            Err(Error::NonSmooth(format!(
                "abs of {} changes sign inside the evaluation interval",
                self.val
            )))
        } else {
            let sym = |i: Interval| i.hull(&-i);
            Ok(Jet2 {
                val: self.val.abs(),
                d1: sym(self.d1),
                d2: sym(self.d2),
                dist: sym(self.dist),
            })
        }
    }

    pub fn pow(self, r: &Rational) -> Result<Jet2> {
        let (p, q) = r
            .small_parts()
            .ok_or_else(|| Error::Domain(format!("exponent {r:?} is too large")))?;
        if p == 0 {
            return Ok(Jet2::constant(Interval::ONE));
        }
        if p == q {
            return Ok(self);
        }
        let alpha = r.enclosure();
        let val = pow_interval(self.val, r)?;
        let g1 = alpha * self.val.pow_rational(p - q, q)?;
        let g2 = alpha
            * Rational::from_i64(p - q, q).enclosure()
            * self.val.pow_rational(p - 2 * q, q)?;
        let d1 = g1 * self.d1;
        let d2 = g2 * self.d1.sqr() + g1 * self.d2;
        // (g^a)''/((g^a)')^2 = ((a-1)/a) g^-a + (g''/g'^2) / (a g^(a-1))
        let structural = (|| -> Result<Interval> {
            let first = Rational::from_i64(p - q, p).enclosure() * self.val.pow_rational(-p, q)?;
            let second = if self.dist == Interval::ZERO {
                Interval::ZERO
            } else {
                self.dist.div(g1)?
            };
            Ok(first + second)
        })()
        .ok();
        Ok(Jet2 {
            val,
            d1,
            d2,
            dist: refine(structural, d1, d2),
        })
    }

    /// Jet of `outer(inner(x))` given the jet of `outer` evaluated at
    /// `inner.val` and the jet of `inner`.
    pub fn chain(outer: Jet2, inner: Jet2) -> Jet2 {
        let d1 = outer.d1 * inner.d1;
        let d2 = outer.d2 * inner.d1.sqr() + outer.d1 * inner.d2;
        // dist(T o G) = dist_T(G) + dist_G / T'(G)
        let structural = (|| {
            if outer.d1.contains_zero() {
                return None;
            }
            let second = if inner.dist == Interval::ZERO {
                Interval::ZERO
            } else {
                inner.dist.div(outer.d1).ok()?
            };
            Some(outer.dist + second)
        })();
        Jet2 {
            val: outer.val,
            d1,
            d2,
            dist: refine(structural, d1, d2),
        }
    }
}

/// Evaluates the jet of `e` over `x`.
pub fn eval_jet(e: &Expr, x: Interval) -> Result<Jet2> {
    eval_jet_with(e, x, Smoothness::Hull)
}

pub fn eval_jet_with(e: &Expr, x: Interval, mode: Smoothness) -> Result<Jet2> {
    let go = |a: &Expr| eval_jet_with(a, x, mode);
    Ok(match e {
        Expr::X => Jet2::variable(x),
        Expr::Const(c) => Jet2::constant(c.enclosure()),
        Expr::Neg(a) => go(a)?.neg(),
        Expr::Add(a, b) => go(a)?.add(go(b)?),
        Expr::Sub(a, b) => go(a)?.sub(go(b)?),
        Expr::Mul(a, b) => go(a)?.mul(go(b)?),
        Expr::Div(a, b) => go(a)?.div(go(b)?)?,
        Expr::Abs(a) => go(a)?.abs(mode)?,
        Expr::Pow(a, r) => go(a)?.pow(r)?,
    })
}
