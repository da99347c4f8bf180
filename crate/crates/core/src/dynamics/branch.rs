use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rigor::{eval_jet, Expr, Interval, Jet2};

/// A formula together with a closed interval on which it is C².
#[derive(Debug)]
pub struct Piece {
    formula: Expr,
    domain: Interval,
}

impl Piece {
    pub fn new(formula: Expr, domain: Interval) -> Self {
        Piece { formula, domain }
    }

    pub fn formula(&self) -> &Expr {
        &self.formula
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }
}

/// One monotone branch of a map or of an iterate.
///
/// The branch acts on `[lo, hi]` (each endpoint known up to an enclosure)
/// by applying the pieces of `chain` in order.
#[derive(Clone, Debug)]
pub struct Branch {
    lo: Interval,
    hi: Interval,
    chain: Vec<Arc<Piece>>,
    increasing: bool,
}

impl Branch {
    pub(crate) fn from_parts(
        lo: Interval,
        hi: Interval,
        chain: Vec<Arc<Piece>>,
        increasing: bool,
    ) -> Self {
        Branch {
            lo,
            hi,
            chain,
            increasing,
        }
    }

    /// A single-piece branch with the monotonicity still undetermined.
    pub(crate) fn single(lo: Interval, hi: Interval, formula: Expr) -> Self {
        let piece = Piece::new(formula, lo.hull(&hi));
        Branch::from_parts(lo, hi, vec![Arc::new(piece)], true)
    }

    pub(crate) fn with_increasing(mut self, increasing: bool) -> Self {
        self.increasing = increasing;
        self
    }

    /// Enclosure of the left endpoint of the domain.
    pub fn lo(&self) -> Interval {
        self.lo
    }

    /// Enclosure of the right endpoint of the domain.
    pub fn hi(&self) -> Interval {
        self.hi
    }

    /// Smallest interval certainly containing the domain.
    pub fn domain_hull(&self) -> Interval {
        self.lo.hull(&self.hi)
    }

    /// Largest interval certainly contained in the domain.
    pub fn domain_inner(&self) -> Option<Interval> {
        Interval::try_new(self.lo.hi(), self.hi.lo())
    }

    /// Enclosure of the domain length.
    pub fn length(&self) -> Interval {
        let l = self.hi - self.lo;
        Interval::new(l.lo().max(0.0), l.hi())
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn chain(&self) -> &[Arc<Piece>] {
        &self.chain
    }

    /// The branch formula as a single expression (pieces substituted).
    pub fn formula(&self) -> Expr {
        let mut e = Expr::X;
        for p in &self.chain {
            e = p.formula.compose(&e);
        }
        e
    }

    /// Value enclosure over `x`. `Ok(None)` means that no point of `x`
    /// lies in the domain of the chain.
    pub fn eval(&self, x: Interval) -> Result<Option<Interval>> {
        let mut v = x;
        for p in &self.chain {
            let Some(inside) = v.intersect(&p.domain) else {
                return Ok(None);
            };
            v = p.formula.eval(inside)?;
        }
        Ok(Some(v))
    }

    /// Jet enclosure over `x`, composed through the chain.
    pub fn jet(&self, x: Interval) -> Result<Option<Jet2>> {
        let mut acc: Option<Jet2> = None;
        let mut v = x;
        for p in &self.chain {
            let Some(inside) = v.intersect(&p.domain) else {
                return Ok(None);
            };
            let j = eval_jet(&p.formula, inside)?;
            acc = Some(match acc {
                None => j,
                Some(inner) => Jet2::chain(j, inner),
            });
            v = acc.as_ref().unwrap().val;
        }
        Ok(acc)
    }

    /// Approximate value and derivative in plain floating point.
    pub fn eval_f64(&self, x: f64) -> (f64, f64) {
        let mut v = x;
        let mut d = 1.0;
        for p in &self.chain {
            let dom = p.domain;
            let (fv, fd) = p.formula.eval_f64(v.clamp(dom.lo(), dom.hi()));
            v = fv;
            d *= fd;
        }
        (v, d)
    }

    /// Enclosure of the image.
    pub fn image(&self) -> Result<Interval> {
        let a = self.eval(self.lo)?;
        let b = self.eval(self.hi)?;
        match (a, b) {
            (Some(a), Some(b)) => Ok(a.hull(&b)),
            _ => Err(Error::Precision(format!(
                "endpoint enclosures of branch {:?} fall outside its chain",
                self.domain_hull()
            ))),
        }
    }

    // x <= q(t) is certain
    fn left_of_root(&self, x: f64, t: Interval) -> bool {
        match self.eval(Interval::point(x)) {
            Ok(Some(v)) => {
                if self.increasing {
                    v.hi() <= t.lo()
                } else {
                    v.lo() >= t.hi()
                }
            }
            _ => false,
        }
    }

    // q(t) <= x is certain
    fn right_of_root(&self, x: f64, t: Interval) -> bool {
        match self.eval(Interval::point(x)) {
            Ok(Some(v)) => {
                if self.increasing {
                    v.lo() >= t.hi()
                } else {
                    v.hi() <= t.lo()
                }
            }
            _ => false,
        }
    }

    fn approximate_root(&self, t: f64, a: f64, b: f64) -> f64 {
        let s = if self.increasing { 1.0 } else { -1.0 };
        let g = |x: f64| s * (self.eval_f64(x).0 - t);
        if g(a) >= 0.0 {
            return a;
        }
        if g(b) <= 0.0 {
            return b;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let m = 0.5 * lo + 0.5 * hi;
            if m <= lo || m >= hi {
                break;
            }
            if g(m) <= 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        lo
    }

    /// Enclosure of the point `q(t)` where the branch crosses level `t`,
    /// clamped to the domain: below the image it is the endpoint mapped
    /// lowest, above the image the endpoint mapped highest.
    pub fn root(&self, t: Interval) -> Interval {
        let hull = self.domain_hull();
        let Some(inner) = self.domain_inner() else {
            return hull;
        };
        let (dl, dh) = (inner.lo(), inner.hi());
        let x0 = self.approximate_root(t.mid(), dl, dh);

        let mut lower = hull.lo();
        let mut step = f64::EPSILON * x0.abs().max(f64::MIN_POSITIVE);
        let mut x = x0;
        for _ in 0..2100 {
            if self.left_of_root(x, t) {
                lower = x;
                break;
            }
            if x <= dl {
                break;
            }
            x = (x0 - step).max(dl);
            step *= 2.0;
        }

        let mut upper = hull.hi();
        let mut step = f64::EPSILON * x0.abs().max(f64::MIN_POSITIVE);
        let mut x = x0;
        for _ in 0..2100 {
            if self.right_of_root(x, t) {
                upper = x;
                break;
            }
            if x >= dh {
                break;
            }
            x = (x0 + step).min(dh);
            step *= 2.0;
        }

        let mut r = Interval::new(lower.min(upper), upper.max(lower));
        if lower <= upper {
            r = self.newton_refine(r, t);
        }
        r
    }

    /// Interval Newton contraction of a root enclosure of `F(x) = t`.
    fn newton_refine(&self, mut x: Interval, t: Interval) -> Interval {
        for _ in 0..8 {
            if x.width() <= 4.0 * f64::EPSILON * x.mag().max(f64::MIN_POSITIVE) {
                break;
            }
            let Some(inner) = self.domain_inner() else {
                break;
            };
            if !x.is_subset_of(&inner) {
                break;
            }
            let Ok(Some(j)) = self.jet(x) else { break };
            let m = x.mid();
            let Ok(Some(fm)) = self.eval(Interval::point(m)) else {
                break;
            };
            let Ok(step) = (fm - t).div(j.d1) else { break };
            let n = Interval::point(m) - step;
            match x.intersect(&n) {
                Some(y) if y.width() < x.width() => x = y,
                _ => break,
            }
        }
        x
    }
}

/// Enclosures of the two ends of the preimage of `target` under `b`,
/// ordered left to right.
pub fn preimage_ends(b: &Branch, target: Interval) -> Result<(Interval, Interval)> {
    let image = b.image()?;
    if target.hi() < image.lo() || target.lo() > image.hi() {
        return Err(Error::EmptyPreimage);
    }
    let qa = b.root(Interval::point(target.lo()));
    let qb = b.root(Interval::point(target.hi()));
    Ok(if b.is_increasing() {
        (qa, qb)
    } else {
        (qb, qa)
    })
}

/// Enclosure of `{x in domain(b) : b(x) in target}`.
pub fn branch_preimage(b: &Branch, target: Interval) -> Result<Interval> {
    let (a, z) = preimage_ends(b, target)?;
    Ok(a.hull(&z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigor::parse_expr;

    fn lanford_first() -> Branch {
        let f = parse_expr("2*x + 0.5*x*(1-x)").unwrap();
        Branch::single(Interval::ZERO, Interval::ONE, f)
    }

    #[test]
    fn linear_inverse() {
        let b = Branch::single(
            Interval::ZERO,
            Interval::from_i64_ratio(5, 23),
            parse_expr("23/5*x").unwrap(),
        );
        let p = branch_preimage(&b, Interval::new(0.0, 0.1)).unwrap();
        assert_eq!(p.lo(), 0.0);
        assert!(p.contains(1.0 / 46.0));
        assert!(p.hi() - 1.0 / 46.0 < 1e-15);
    }

    #[test]
    fn full_branch() {
        let b = Branch::single(
            Interval::ZERO,
            Interval::point(0.5),
            parse_expr("2*x").unwrap(),
        );
        let p = branch_preimage(&b, Interval::UNIT).unwrap();
        assert_eq!(p, Interval::new(0.0, 0.5));
    }

    #[test]
    fn lanford_root_matches_bisection() {
        let b = lanford_first();
        let r = b.root(Interval::point(0.25));
        // bisection oracle on the exact polynomial
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if 2.0 * m + 0.5 * m * (1.0 - m) < 0.25 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!(r.lo() <= hi + 1e-12 && lo - 1e-12 <= r.hi());
        assert!(r.width() < 1e-15);
    }

    #[test]
    fn empty_preimage_is_distinguished() {
        let b = Branch::single(
            Interval::ZERO,
            Interval::point(0.25),
            parse_expr("2*x").unwrap(),
        );
        assert!(matches!(
            branch_preimage(&b, Interval::new(0.75, 1.0)),
            Err(Error::EmptyPreimage)
        ));
    }

    #[test]
    fn root_clamps_outside_image() {
        let b = Branch::single(
            Interval::point(0.5),
            Interval::ONE,
            parse_expr("2*x - 1").unwrap(),
        );
        assert_eq!(b.root(Interval::point(-0.5)), Interval::point(0.5));
        assert_eq!(b.root(Interval::point(2.0)), Interval::point(1.0));
    }

    #[test]
    fn decreasing_branch_preimage() {
        let b = Branch::single(Interval::ZERO, Interval::ONE, parse_expr("1 - x").unwrap())
            .with_increasing(false);
        let p = branch_preimage(&b, Interval::new(0.25, 0.5)).unwrap();
        assert!(p.contains(0.5) && p.contains(0.75));
        assert!(p.width() < 0.25 + 1e-15);
    }
}
