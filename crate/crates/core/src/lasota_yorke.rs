//! Lasota–Yorke coefficients `(A, λ₁, B)` for the inequality
//! `‖Lⁿf‖_BV ≤ A λ₁ⁿ ‖f‖_BV + B ‖f‖₁`.

use serde::Serialize;

use crate::dynamics::{distortion_excess_integral, PiecewiseMap};
use crate::error::{Error, Result};
use crate::rigor::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    UserSupplied,
}

/// One-step inequality `‖Lg‖ ≤ contraction ‖g‖ + affine_term |g|_w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneStepLY {
    pub contraction: Interval,
    pub affine_term: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LYCertificate {
    pub a: Interval,
    pub lambda1: Interval,
    pub b: Interval,
    pub provenance: Provenance,
}

impl LYCertificate {
    /// Coefficients taken on trust from the user.
    pub fn user_supplied(a: Interval, lambda1: Interval, b: Interval) -> Result<Self> {
        if a.lo() < 1.0 {
            return Err(Error::Config(format!("A = {a} must be at least 1")));
        }
        if lambda1.lo() < 0.0 || b.lo() < 0.0 {
            return Err(Error::Config("lambda1 and B must be nonnegative".into()));
        }
        Ok(LYCertificate {
            a,
            lambda1,
            b,
            provenance: Provenance::UserSupplied,
        })
    }

    /// Fails unless `λ₁ < 1` holds for the whole enclosure.
    pub fn require_contracting(&self) -> Result<()> {
        if self.lambda1.hi() < 1.0 {
            Ok(())
        } else {
            Err(Error::ExpansionTooWeak(format!(
                "lambda1 enclosure {} is not below 1",
                self.lambda1
            )))
        }
    }
}

/// One-step inequality for a map with bounded derivative:
/// contraction `2/inf|T'|`, affine term `2/min gap + 2 sup|T''/T'^2|`.
pub fn ly_one_step(m: &PiecewiseMap) -> Result<OneStepLY> {
    if m.unbounded_derivative() {
        return Err(Error::Config(
            "the map has unbounded derivative; use the threshold form".into(),
        ));
    }
    let two = Interval::point(2.0);
    let inf = Interval::point(m.inf_abs_deriv().lo());
    let contraction = two
        .div(inf)
        .map_err(|_| Error::ExpansionTooWeak("inf |T'| is not bounded away from 0".into()))?;
    if contraction.hi() >= 1.0 {
        return Err(Error::ExpansionTooWeak(format!(
            "2/inf|T'| = {contraction} is not below 1; iterate the map first"
        )));
    }
    let gap = Interval::point(m.min_gap().lo());
    let sup = Interval::new(0.0, m.sup_distortion()?);
    let affine_term = two.div(gap)? + two * sup;
    Ok(OneStepLY {
        contraction,
        affine_term: Interval::new(affine_term.lo().max(0.0), affine_term.hi()),
    })
}

/// Uniform-in-`n` form: `A = 1`, `λ₁ = contraction`,
/// `B = affine_term / (1 - contraction)`.
pub fn ly_iterate(one: &OneStepLY) -> Result<LYCertificate> {
    if one.contraction.hi() >= 1.0 {
        return Err(Error::ExpansionTooWeak(format!(
            "contraction {} is not below 1",
            one.contraction
        )));
    }
    let b = one.affine_term.div(Interval::ONE - one.contraction)?;
    Ok(LYCertificate {
        a: Interval::ONE,
        lambda1: one.contraction,
        b,
        provenance: Provenance::Computed,
    })
}

/// Threshold form for maps whose derivative may be unbounded:
/// `λ₁ = ½∫_{I_l}|T''/T'^2| + 2/inf|T'|`,
/// `B = (2/min gap + l)/(1 - λ₁)`.
pub fn ly_lorenz(m: &PiecewiseMap, l: f64) -> Result<LYCertificate> {
    let (integral, _) = distortion_excess_integral(m, l)?;
    let two = Interval::point(2.0);
    let inf = Interval::point(m.inf_abs_deriv().lo());
    let lambda1 = Interval::point(0.5) * integral + two.div(inf)?;
    if lambda1.hi() >= 1.0 {
        return Err(Error::ExpansionTooWeak(format!(
            "lambda1 = {lambda1} with l = {l}; try a larger l or a higher iterate"
        )));
    }
    let gap = Interval::point(m.min_gap().lo());
    let b = (two.div(gap)? + Interval::point(l)).div(Interval::ONE - lambda1)?;
    Ok(LYCertificate {
        a: Interval::ONE,
        lambda1,
        b,
        provenance: Provenance::Computed,
    })
}

/// Inequality for the operator with a hole, from the closed one-step
/// inequality `(2λ, B')`: one step gives `(4λ, 2B')`, collapsed as in
/// [`ly_iterate`].
pub fn ly_hole(closed: &OneStepLY) -> Result<LYCertificate> {
    let two = Interval::point(2.0);
    ly_iterate(&OneStepLY {
        contraction: two * closed.contraction,
        affine_term: two * closed.affine_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::linear_mod1;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn q(p: i64, q: i64) -> Interval {
        Interval::from_i64_ratio(p, q)
    }

    #[test]
    fn linear_one_step() {
        let m = linear_mod1(&rat(23, 5)).unwrap();
        let one = ly_one_step(&m).unwrap();
        assert!(one.contraction.contains(10.0 / 23.0));
        let exact = q(46, 3);
        assert!(one.affine_term.hi() >= exact.lo());
        assert!(one.affine_term.lo() - exact.hi() < 1e-12);
    }

    #[test]
    fn doubling_is_too_weak() {
        let m = linear_mod1(&rat(2, 1)).unwrap();
        assert!(matches!(ly_one_step(&m), Err(Error::ExpansionTooWeak(_))));
    }

    #[test]
    fn affine_equal_branches() {
        let m = linear_mod1(&rat(4, 1)).unwrap();
        let one = ly_one_step(&m).unwrap();
        assert!(one.contraction.contains(0.5));
        assert!(one.affine_term.contains(8.0));
    }

    #[test]
    fn iterate_examples() {
        let c = ly_iterate(&OneStepLY {
            contraction: q(10, 23),
            affine_term: q(46, 3),
        })
        .unwrap();
        assert!(c.b.overlaps(&q(1058, 39)));
        assert_eq!(c.a, Interval::ONE);
        let z = ly_iterate(&OneStepLY {
            contraction: Interval::point(0.5),
            affine_term: Interval::ZERO,
        })
        .unwrap();
        assert_eq!((z.lambda1, z.b), (Interval::point(0.5), Interval::ZERO));
        let g = ly_iterate(&OneStepLY {
            contraction: Interval::parse("0.99").unwrap(),
            affine_term: Interval::ONE,
        })
        .unwrap();
        assert!(g.b.contains(100.0));
    }

    #[test]
    fn hole_examples() {
        let h = ly_hole(&OneStepLY {
            contraction: q(10, 23),
            affine_term: q(46, 3),
        })
        .unwrap();
        assert!(h.lambda1.contains(20.0 / 23.0) && h.lambda1.hi() <= 0.87);
        let s = ly_hole(&OneStepLY {
            contraction: Interval::point(0.2),
            affine_term: Interval::ONE,
        })
        .unwrap();
        assert!(s.lambda1.overlaps(&Interval::point(0.4)));
        assert!(s.b.overlaps(&q(10, 3)));
        let z = ly_hole(&OneStepLY {
            contraction: Interval::point(0.3),
            affine_term: Interval::ZERO,
        })
        .unwrap();
        assert_eq!(z.b, Interval::ZERO);
        assert!(matches!(
            ly_hole(&OneStepLY {
                contraction: Interval::point(0.5),
                affine_term: Interval::ONE
            }),
            Err(Error::ExpansionTooWeak(_))
        ));
    }

    #[test]
    fn affine_threshold_form() {
        let m = linear_mod1(&rat(5, 1)).unwrap();
        let c = ly_lorenz(&m, 3.0).unwrap();
        assert!(c.lambda1.contains(0.4));
        // (2/(1/5) + 3) / (1 - 2/5)
        let exact = q(65, 3);
        assert!(c.b.hi() >= exact.lo() && c.b.lo() - exact.hi() < 1e-12);
    }
}
