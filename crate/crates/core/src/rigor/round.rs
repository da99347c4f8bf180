//! Directed rounding emulated on top of round-to-nearest.
//!
//! Every primitive computes the round-to-nearest result and recovers the
//! exact rounding error with an error-free transformation (TwoSum for
//! addition, FMA residuals for multiplication, division and square root).
//! The sign of that error decides whether the result is stepped one ulp
//! outward, so the returned value equals what the hardware would produce
//! under the corresponding directed rounding mode. Results too close to the
//! underflow range for the residual to be exact are stepped unconditionally.
//!
//! Elementary functions (`powf`, `ln`, `exp`) come from the platform libm,
//! whose error is below one ulp; they are widened by [`LIBM_ULPS`] ulps.

/// Below this magnitude the FMA residual may be inexact.
const TINY: f64 = 1.0e-270;

/// Outward widening applied to libm results.
pub const LIBM_ULPS: u32 = 2;

/// Machine epsilon of round-to-nearest (unit roundoff).
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    if !a.is_finite() || !b.is_finite() {
        let s = a + b;
        return if s.is_nan() { f64::NEG_INFINITY } else { s };
    }
    let (s, e) = two_sum(a, b);
    if s == f64::INFINITY {
        return f64::MAX;
    }
    if s == f64::NEG_INFINITY {
        return s;
    }
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    if !a.is_finite() || !b.is_finite() {
        let s = a + b;
        return if s.is_nan() { f64::INFINITY } else { s };
    }
    let (s, e) = two_sum(a, b);
    if s == f64::NEG_INFINITY {
        return f64::MIN;
    }
    if s == f64::INFINITY {
        return s;
    }
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

/// Product with the convention `0 * inf = 0` (endpoints at infinity are
/// never attained, so a zero factor annihilates them).
#[inline]
fn mul_dir(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !a.is_finite() || !b.is_finite() {
        return p;
    }
    if p.is_infinite() {
        return match (p > 0.0, up) {
            (true, true) => f64::INFINITY,
            (true, false) => f64::MAX,
            (false, true) => f64::MIN,
            (false, false) => f64::NEG_INFINITY,
        };
    }
    if p.abs() < TINY {
        return if up { p.next_up() } else { p.next_down() };
    }
    let e = a.mul_add(b, -p);
    if up && e > 0.0 {
        p.next_up()
    } else if !up && e < 0.0 {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    mul_dir(a, b, false)
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    mul_dir(a, b, true)
}

/// Quotient; the divisor must be nonzero. `x / inf = 0`.
#[inline]
fn div_dir(a: f64, b: f64, up: bool) -> f64 {
    debug_assert!(b != 0.0);
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !a.is_finite() || !b.is_finite() {
        return q;
    }
    if q.is_infinite() {
        return match (q > 0.0, up) {
            (true, true) => f64::INFINITY,
            (true, false) => f64::MAX,
            (false, true) => f64::MIN,
            (false, false) => f64::NEG_INFINITY,
        };
    }
    if q.abs() < TINY || a.abs() < TINY {
        return if up { q.next_up() } else { q.next_down() };
    }
    // r = a - q*b exactly; the exact quotient is q + r/b.
    let r = (-q).mul_add(b, a);
    let above = (r > 0.0) == (b > 0.0) && r != 0.0;
    let below = r != 0.0 && !above;
    if up && above {
        q.next_up()
    } else if !up && below {
        q.next_down()
    } else {
        q
    }
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    div_dir(a, b, false)
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    div_dir(a, b, true)
}

#[inline]
fn sqrt_dir(a: f64, up: bool) -> f64 {
    debug_assert!(a >= 0.0);
    let s = a.sqrt();
    if a == 0.0 || !a.is_finite() {
        return s;
    }
    if a < TINY {
        return if up {
            s.next_up()
        } else {
            s.next_down().max(0.0)
        };
    }
    let r = (-s).mul_add(s, a);
    if up && r > 0.0 {
        s.next_up()
    } else if !up && r < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn sqrt_down(a: f64) -> f64 {
    sqrt_dir(a, false)
}

#[inline]
pub fn sqrt_up(a: f64) -> f64 {
    sqrt_dir(a, true)
}

/// Steps `x` down by `n` ulps (infinities are left alone).
#[inline]
pub fn widen_down(mut x: f64, n: u32) -> f64 {
    if x.is_infinite() {
        return x;
    }
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

#[inline]
pub fn widen_up(mut x: f64, n: u32) -> f64 {
    if x.is_infinite() {
        return x;
    }
    for _ in 0..n {
        x = x.next_up();
    }
    x
}

/// Lower bound of `ln(x)` for `x > 0`.
pub fn ln_down(x: f64) -> f64 {
    if x == 1.0 {
        return 0.0;
    }
    widen_down(x.ln(), LIBM_ULPS)
}

/// Upper bound of `ln(x)` for `x > 0`.
pub fn ln_up(x: f64) -> f64 {
    if x == 1.0 {
        return 0.0;
    }
    widen_up(x.ln(), LIBM_ULPS)
}

/// Bounds on the relative error of a recursively summed dot product of
/// `n` terms: `gamma_n = n u / (1 - n u)`, rounded up.
pub fn gamma(n: usize) -> f64 {
    let nu = mul_up(n as f64, UNIT_ROUNDOFF);
    div_up(nu, sub_down(1.0, nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_operations_are_not_widened() {
        assert_eq!(add_down(1.0, 3.0), 4.0);
        assert_eq!(add_up(2.0, 4.0), 6.0);
        assert_eq!(mul_down(-1.0, 4.0), -4.0);
        assert_eq!(div_up(1.0, 4.0), 0.25);
        assert_eq!(sqrt_down(9.0), 3.0);
    }

    #[test]
    fn inexact_operations_bracket() {
        let lo = div_down(1.0, 3.0);
        let hi = div_up(1.0, 3.0);
        assert_eq!(hi, lo.next_up());
        assert!(3.0 * lo <= 1.0);
        let lo = add_down(0.1, 0.2);
        let hi = add_up(0.1, 0.2);
        assert!(lo < hi);
        let s_lo = sqrt_down(2.0);
        let s_hi = sqrt_up(2.0);
        assert_eq!(s_hi, s_lo.next_up());
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(mul_down(0.0, f64::INFINITY), 0.0);
        assert_eq!(mul_up(f64::NEG_INFINITY, 0.0), 0.0);
    }

    #[test]
    fn overflow_is_directed() {
        assert_eq!(mul_down(f64::MAX, 2.0), f64::MAX);
        assert_eq!(mul_up(f64::MAX, 2.0), f64::INFINITY);
        assert_eq!(add_down(f64::MAX, f64::MAX), f64::MAX);
    }
}
