use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use super::round::*;
use crate::error::{Error, Result};

/// Closed interval of extended reals `[lo, hi]` with outward-rounded
/// arithmetic. An infinite endpoint means "unbounded in that direction";
/// it is never attained.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[allow(clippy::should_implement_trait)]
impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// Builds `[lo, hi]`. Panics on NaN or reversed bounds.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(
            !lo.is_nan() && !hi.is_nan() && lo <= hi,
            "invalid interval [{lo}, {hi}]"
        );
        Self::normalized(lo, hi)
    }

    pub fn try_new(lo: f64, hi: f64) -> Option<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            None
        } else {
            Some(Self::normalized(lo, hi))
        }
    }

    // Infinite endpoints are never attained, so `[inf, inf]` is kept as
    // `[MAX, inf]`; this keeps every sign-case table free of inf/inf.
    #[inline]
    fn normalized(lo: f64, hi: f64) -> Self {
        let lo = if lo == f64::INFINITY { f64::MAX } else { lo };
        let hi = if hi == f64::NEG_INFINITY {
            f64::MIN
        } else {
            hi
        };
        // -0.0 endpoints are canonicalised so equality is structural.
        Interval {
            lo: lo + 0.0,
            hi: hi + 0.0,
        }
    }

    #[inline]
    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// A finite point inside the interval (rounded midpoint when bounded).
    pub fn mid(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let m = 0.5 * self.lo + 0.5 * self.hi;
                m.clamp(self.lo, self.hi)
            }
            (true, false) => if self.lo >= 0.0 {
                self.lo * 2.0 + 1.0
            } else {
                0.0
            }
            .min(f64::MAX),
            (false, true) => if self.hi <= 0.0 {
                self.hi * 2.0 - 1.0
            } else {
                0.0
            }
            .max(f64::MIN),
            (false, false) => 0.0,
        }
    }

    /// Upper bound of the width.
    pub fn width(&self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    /// Upper bound of the radius about [`Interval::mid`].
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        sub_up(self.hi, m).max(sub_up(m, self.lo))
    }

    /// Largest absolute value.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `self` lies in the interior of `other`.
    pub fn is_interior_of(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        Interval::try_new(lo, hi)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.intersect(other).is_some()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Certainly strictly less than `other` everywhere.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0.0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0.0
    }

    /// Exact endpoint arithmetic helpers used by the operator impls.
    pub fn add(self, rhs: Interval) -> Interval {
        Interval::new(add_down(self.lo, rhs.lo), add_up(self.hi, rhs.hi))
    }

    pub fn sub(self, rhs: Interval) -> Interval {
        Interval::new(sub_down(self.lo, rhs.hi), sub_up(self.hi, rhs.lo))
    }

    pub fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval::new(lo, hi)
    }

    /// Division; fails when the divisor contains zero.
    pub fn div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!(
                "division of {self} by {rhs}, which contains zero"
            )));
        }
        if rhs.lo > 0.0 {
            Ok(self.div_positive(rhs))
        } else {
            Ok(-(self.div_positive(-rhs)))
        }
    }

    fn div_positive(self, y: Interval) -> Interval {
        let (c, d) = (y.lo, y.hi);
        if self.lo >= 0.0 {
            Interval::new(div_down(self.lo, d), div_up(self.hi, c))
        } else if self.hi <= 0.0 {
            Interval::new(div_down(self.lo, c), div_up(self.hi, d))
        } else {
            Interval::new(div_down(self.lo, c), div_up(self.hi, c))
        }
    }

    pub fn recip(self) -> Result<Interval> {
        Interval::ONE.div(self)
    }

    /// Multiplication by an exact scalar.
    pub fn scale(self, s: f64) -> Interval {
        self.mul(Interval::point(s))
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    pub fn sqr(self) -> Interval {
        let a = self.abs();
        Interval::new(mul_down(a.lo, a.lo), mul_up(a.hi, a.hi))
    }

    pub fn sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!("sqrt of {self}")));
        }
        Ok(Interval::new(sqrt_down(self.lo), sqrt_up(self.hi)))
    }

    /// Integer power by repeated squaring with directed endpoint rounding.
    pub fn powi(self, n: i64) -> Result<Interval> {
        if n == 0 {
            return Ok(Interval::ONE);
        }
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let n = n as u64;
        let pow_mag = |x: f64, up: bool| -> f64 {
            // x >= 0
            let mut base = x;
            let mut e = n;
            let mut acc = 1.0;
            while e > 0 {
                if e & 1 == 1 {
                    acc = if up {
                        mul_up(acc, base)
                    } else {
                        mul_down(acc, base)
                    };
                }
                e >>= 1;
                if e > 0 {
                    base = if up {
                        mul_up(base, base)
                    } else {
                        mul_down(base, base)
                    };
                }
            }
            acc
        };
        let odd = n % 2 == 1;
        if self.lo >= 0.0 {
            Ok(Interval::new(
                pow_mag(self.lo, false),
                pow_mag(self.hi, true),
            ))
        } else if self.hi <= 0.0 {
            let (l, h) = (pow_mag(-self.hi, false), pow_mag(-self.lo, true));
            if odd {
                Ok(Interval::new(-h, -l))
            } else {
                Ok(Interval::new(l, h))
            }
        } else if odd {
            Ok(Interval::new(
                -pow_mag(-self.lo, true),
                pow_mag(self.hi, true),
            ))
        } else {
            let m = (-self.lo).max(self.hi);
            Ok(Interval::new(0.0, pow_mag(m, true)))
        }
    }

    /// `self^(p/q)` for a rational exponent in lowest terms with `q > 0`.
    ///
    /// Integer exponents use [`Interval::powi`]; fractional exponents need
    /// a nonnegative base and are evaluated with libm `powf` at the
    /// endpoints (monotone), widened outward. When `p/q` is not a double the
    /// two neighbouring doubles are both evaluated.
    pub fn pow_rational(self, p: i64, q: i64) -> Result<Interval> {
        assert!(q > 0);
        if q == 1 {
            return self.powi(p);
        }
        if self.lo < 0.0 {
            return Err(Error::Domain(format!(
                "fractional power {p}/{q} of {self}, which has negative values"
            )));
        }
        let (r_lo, r_hi) = (div_down(p as f64, q as f64), div_up(p as f64, q as f64));
        let pw = |x: f64, up: bool| -> f64 {
            if x == 0.0 {
                return if p > 0 {
                    0.0
                } else if up {
                    f64::INFINITY
                } else {
                    f64::MAX
                };
            }
            if x == 1.0 {
                return 1.0;
            }
            if x == f64::INFINITY {
                return if p > 0 { f64::INFINITY } else { 0.0 };
            }
            let a = x.powf(r_lo);
            let b = x.powf(r_hi);
            if up {
                widen_up(a.max(b), LIBM_ULPS)
            } else {
                widen_down(a.min(b), LIBM_ULPS).max(0.0)
            }
        };
        if p > 0 {
            Ok(Interval::new(pw(self.lo, false), pw(self.hi, true)))
        } else {
            Ok(Interval::new(pw(self.hi, false), pw(self.lo, true)))
        }
    }

    /// Exact enclosure of an integer.
    pub fn from_bigint(n: &BigInt) -> Interval {
        match n.to_f64() {
            Some(f) if f.is_finite() => {
                if BigInt::from_f64(f).as_ref() == Some(n) {
                    Interval::point(f)
                } else {
                    Interval::new(f.next_down(), f.next_up())
                }
            }
            _ => {
                if n.is_negative() {
                    Interval::new(f64::NEG_INFINITY, f64::MIN)
                } else {
                    Interval::new(f64::MAX, f64::INFINITY)
                }
            }
        }
    }

    /// Tight enclosure of an exact rational.
    pub fn from_ratio(r: &BigRational) -> Interval {
        let n = Interval::from_bigint(r.numer());
        if r.denom().is_one() {
            return n;
        }
        let d = Interval::from_bigint(r.denom());
        n.div(d).expect("rational denominators are positive")
    }

    pub fn from_i64_ratio(p: i64, q: i64) -> Interval {
        Interval::from_ratio(&BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// Parses a decimal literal (`-1.25`, `3e-4`) or a rational `p/q`
    /// into an enclosure of the exact value it denotes.
    pub fn parse(text: &str) -> Result<Interval> {
        let r = parse_rational(text).ok_or_else(|| Error::Parse {
            position: 1,
            message: format!("not a number: {text:?}"),
        })?;
        Ok(Interval::from_ratio(&r))
    }
}

/// Parses `[-]digits[.digits][e[+-]digits]` or `[-]int/int` to an exact
/// rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|c| c.is_ascii_digit())
        || !frac_part.bytes().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    if neg {
        n = -n;
    }
    let scale = exp - frac_part.len() as i64;
    if scale.unsigned_abs() > 4000 {
        return None;
    }
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::add(self, rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::sub(self, rhs)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        Interval::mul(self, rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(x: f64) -> BigRational {
        BigRational::from_float(x).unwrap()
    }

    #[test]
    fn endpoint_examples() {
        let a = Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0);
        assert_eq!(a, Interval::new(4.0, 6.0));
        let m = Interval::new(-1.0, 2.0) * Interval::new(3.0, 4.0);
        assert_eq!(m, Interval::new(-4.0, 8.0));
    }

    #[test]
    fn decimal_sum_contains_three_tenths() {
        let s = Interval::parse("0.1").unwrap() + Interval::parse("0.2").unwrap();
        let three_tenths = BigRational::new(3.into(), 10.into());
        assert!(exact(s.lo()) <= three_tenths && three_tenths <= exact(s.hi()));
        let ulp = 0.3f64.next_up() - 0.3;
        assert!(s.hi() - s.lo() <= 2.0 * ulp);
    }

    #[test]
    fn parse_is_tight() {
        let t = Interval::parse("0.1").unwrap();
        assert_eq!(t.hi(), t.lo().next_up());
        assert_eq!(Interval::parse("0.5").unwrap(), Interval::point(0.5));
        assert_eq!(Interval::parse("7/16").unwrap(), Interval::point(0.4375));
        assert!(Interval::parse("1.2.3").is_err());
        assert!(Interval::parse("").is_err());
    }

    #[test]
    fn division_by_zero_interval_fails() {
        assert!(matches!(
            Interval::ONE.div(Interval::new(-1.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn elementary_examples() {
        assert_eq!(Interval::new(-3.0, 2.0).abs(), Interval::new(0.0, 3.0));
        let r = Interval::new(4.0, 9.0).pow_rational(1, 2).unwrap();
        assert!(r.contains(2.0) && r.contains(3.0));
        assert!(r.width() < 1e-14 + 1.0);
        let u = Interval::new(0.0, 1.0).pow_rational(57, 64).unwrap();
        assert_eq!(u, Interval::new(0.0, 1.0));
        assert!(matches!(
            Interval::new(-1.0, 1.0).pow_rational(1, 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn negative_fractional_power_at_zero_is_unbounded() {
        let r = Interval::new(0.0, 0.25).pow_rational(-1, 2).unwrap();
        assert_eq!(r.hi(), f64::INFINITY);
        assert!(r.lo() <= 2.0 && r.lo() > 1.99);
    }

    #[test]
    fn integer_powers() {
        assert_eq!(
            Interval::new(-2.0, 3.0).powi(2).unwrap(),
            Interval::new(0.0, 9.0)
        );
        assert_eq!(
            Interval::new(-2.0, 3.0).powi(3).unwrap(),
            Interval::new(-8.0, 27.0)
        );
        assert_eq!(
            Interval::new(-3.0, -2.0).powi(2).unwrap(),
            Interval::new(4.0, 9.0)
        );
        let p = Interval::point(0.32).powi(18).unwrap();
        assert!(p.lo() > 1.23e-9 && p.hi() < 1.24e-9);
    }

    #[test]
    fn extended_division_by_unbounded() {
        let q = Interval::new(f64::NEG_INFINITY, -2.0)
            .div(Interval::new(4.0, f64::INFINITY))
            .unwrap();
        assert_eq!(q.lo(), f64::NEG_INFINITY);
        assert_eq!(q.hi(), 0.0);
        let r = Interval::new(1.0, f64::INFINITY).recip().unwrap();
        assert_eq!(r, Interval::new(0.0, 1.0));
    }
}
