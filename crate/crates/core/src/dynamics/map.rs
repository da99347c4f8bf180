use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::branch::{Branch, Piece};
use super::search::minimize;
use crate::error::{Error, Result};
use crate::rigor::round::mul_down;
use crate::rigor::{Expr, Interval};

/// Relative tolerance of the branch-and-bound searches.
const SEARCH_TOL: f64 = 1e-9;
const SEARCH_SPLITS: usize = 4000;

/// A piecewise monotone map of `[0, 1]` (or an iterate of one).
#[derive(Clone, Debug)]
pub struct PiecewiseMap {
    branches: Vec<Branch>,
    cut_points: Vec<Interval>,
    inf_abs_deriv: Interval,
    min_gap: Interval,
    unbounded_derivative: bool,
    iterate: usize,
}

/// User-level description of one branch.
#[derive(Clone, Debug)]
pub struct BranchSpec {
    pub lo: Interval,
    pub hi: Interval,
    pub formula: Expr,
}

impl BranchSpec {
    pub fn new(lo: Interval, hi: Interval, formula: Expr) -> Self {
        BranchSpec { lo, hi, formula }
    }

    /// Branch on the exact rational interval `[lo, hi]`.
    pub fn exact(lo: &BigRational, hi: &BigRational, formula: Expr) -> Self {
        BranchSpec::new(Interval::from_ratio(lo), Interval::from_ratio(hi), formula)
    }
}

impl PiecewiseMap {
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn cut_points(&self) -> &[Interval] {
        &self.cut_points
    }

    /// Enclosure of `inf |T'|` over the union of branch domains.
    pub fn inf_abs_deriv(&self) -> Interval {
        self.inf_abs_deriv
    }

    /// Enclosure of the shortest branch length.
    pub fn min_gap(&self) -> Interval {
        self.min_gap
    }

    pub fn unbounded_derivative(&self) -> bool {
        self.unbounded_derivative
    }

    /// `n` when this map was produced as the `n`-th iterate of a built map.
    pub fn iterate(&self) -> usize {
        self.iterate
    }

    /// Approximate value of the map at `x` (floating point).
    pub fn eval_f64(&self, x: f64) -> f64 {
        let i = self
            .branches
            .partition_point(|b| b.hi().mid() < x)
            .min(self.branches.len() - 1);
        self.branches[i].eval_f64(x).0
    }

    /// Certified upper bound on `sup |T''/T'^2|` over all branches.
    pub fn sup_distortion(&self) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for b in &self.branches {
            sup = sup.max(branch_sup_distortion(b)?);
        }
        Ok(sup)
    }

    fn assemble(branches: Vec<Branch>, iterate: usize, floor: Option<f64>) -> Result<Self> {
        check_partition(&branches)?;
        let infs: Vec<(f64, f64)> = branches
            .par_iter()
            .map(branch_inf_abs_deriv)
            .collect::<Result<_>>()?;
        let mut lb = infs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let ub = infs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if let Some(f) = floor {
            lb = lb.max(f);
        }
        let min_gap = branches
            .iter()
            .map(Branch::length)
            .reduce(|a, b| Interval::new(a.lo().min(b.lo()), a.hi().min(b.hi())))
            .unwrap();
        let mut cut_points = vec![branches[0].lo()];
        for w in branches.windows(2) {
            cut_points.push(w[0].hi().hull(&w[1].lo()));
        }
        cut_points.push(branches.last().unwrap().hi());
        let mut unbounded = false;
        for b in &branches {
            for end in [b.lo(), b.hi()] {
                if let Ok(Some(j)) = b.jet(end) {
                    unbounded |= !j.d1.mag().is_finite();
                }
            }
        }
        Ok(PiecewiseMap {
            branches,
            cut_points,
            inf_abs_deriv: Interval::new(lb.min(ub), ub),
            min_gap,
            unbounded_derivative: unbounded,
            iterate,
        })
    }
}

fn check_partition(branches: &[Branch]) -> Result<()> {
    if branches.is_empty() {
        return Err(Error::Config("a map needs at least one branch".into()));
    }
    let first = branches[0].lo();
    let last = branches[branches.len() - 1].hi();
    if !first.contains(0.0) || !last.contains(1.0) {
        return Err(Error::Config(format!(
            "branch domains must cover [0, 1]; they span {first} .. {last}"
        )));
    }
    for (i, b) in branches.iter().enumerate() {
        if b.domain_inner().is_none() {
            return Err(Error::Config(format!(
                "branch {} has an empty or unresolved domain {} .. {}",
                i + 1,
                b.lo(),
                b.hi()
            )));
        }
    }
    for (i, w) in branches.windows(2).enumerate() {
        let (end, start) = (w[0].hi(), w[1].lo());
        if start.hi() < end.lo() {
            return Err(Error::Config(format!(
                "branches {} and {} overlap: {} starts before {} ends",
                i + 1,
                i + 2,
                start,
                end
            )));
        }
        if start.lo() > end.hi() {
            return Err(Error::Config(format!(
                "gap between branches {} and {}: {} .. {}",
                i + 1,
                i + 2,
                end,
                start
            )));
        }
    }
    Ok(())
}

/// Certified lower bound and point-value upper bound of `inf |F'|` on a
/// branch.
pub(crate) fn branch_inf_abs_deriv(b: &Branch) -> Result<(f64, f64)> {
    let hull = b.domain_hull();
    let inner = b.domain_inner().unwrap_or(hull);
    let r = minimize(
        hull.lo(),
        hull.hi(),
        |cell| match b.jet(cell) {
            Ok(Some(j)) => Some(j.d1.mig()),
            Ok(None) => None,
            Err(_) => Some(0.0),
        },
        |x| {
            let x = x.clamp(inner.lo(), inner.hi());
            match b.jet(Interval::point(x)) {
                Ok(Some(j)) => Some(j.d1.mag()),
                _ => None,
            }
        },
        SEARCH_TOL,
        SEARCH_SPLITS,
    );
    Ok((r.lower, r.upper))
}

/// Certified upper bound of `sup |F''/F'^2|` on a branch.
pub(crate) fn branch_sup_distortion(b: &Branch) -> Result<f64> {
    let hull = b.domain_hull();
    let inner = b.domain_inner().unwrap_or(hull);
    let r = minimize(
        hull.lo(),
        hull.hi(),
        |cell| match b.jet(cell) {
            Ok(Some(j)) => Some(-j.dist.mag()),
            Ok(None) => None,
            Err(_) => Some(f64::NEG_INFINITY),
        },
        |x| {
            let x = x.clamp(inner.lo(), inner.hi());
            match b.jet(Interval::point(x)) {
                Ok(Some(j)) => Some(-j.dist.mig()),
                _ => None,
            }
        },
        SEARCH_TOL,
        SEARCH_SPLITS,
    );
    Ok(-r.lower)
}

/// Determines the monotonicity of a single-piece branch from the sign of
/// its derivative.
fn orient(b: Branch, index: usize) -> Result<Branch> {
    let (lb, _) = branch_inf_abs_deriv(&b)?;
    let hull = b.domain_hull();
    let inner = b.domain_inner().unwrap_or(hull);
    let probe = b.jet(Interval::point(inner.mid()))?;
    let d1 = probe.map(|j| j.d1);
    match d1 {
        Some(d) if lb > 0.0 && !d.contains_zero() => Ok(b.with_increasing(d.is_positive())),
        _ => {
            let whole = b.jet(hull).ok().flatten().map(|j| j.d1);
            let unbounded = whole.is_some_and(|d| !d.mag().is_finite());
            let enclosure = whole.map_or("unavailable".to_string(), |d| d.to_string());
            if unbounded && lb > 0.0 {
                Ok(b)
            } else {
                Err(Error::NotExpanding {
                    branch: index + 1,
                    enclosure,
                })
            }
        }
    }
}

/// Builds a map from explicit branches, which must partition `[0, 1]`.
pub fn build_map(specs: &[BranchSpec]) -> Result<PiecewiseMap> {
    let mut specs = specs.to_vec();
    specs.sort_by(|a, b| a.lo.mid().total_cmp(&b.lo.mid()));
    let raw: Vec<Branch> = specs
        .into_iter()
        .map(|s| Branch::single(s.lo, s.hi, s.formula))
        .collect();
    check_partition(&raw)?;
    let branches = raw
        .into_iter()
        .enumerate()
        .map(|(i, b)| orient(b, i))
        .collect::<Result<Vec<_>>>()?;
    for (i, b) in branches.iter().enumerate() {
        let img = b.image()?;
        let slack = 1e-9;
        if img.hi() < -slack
            || img.lo() > 1.0 + slack
            || img.lo() < -slack
            || img.hi() > 1.0 + slack
        {
            return Err(Error::Config(format!(
                "branch {} maps outside [0, 1]: image {}",
                i + 1,
                img
            )));
        }
    }
    PiecewiseMap::assemble(branches, 1, None)
}

/// `x -> a x mod 1` for a rational slope `a > 1`.
pub fn linear_mod1(slope: &BigRational) -> Result<PiecewiseMap> {
    if slope <= &BigRational::one() {
        return Err(Error::Config(format!("slope {slope} must exceed 1")));
    }
    let mut specs = Vec::new();
    let mut m = BigInt::zero();
    loop {
        let lo = BigRational::from_integer(m.clone()) / slope;
        if lo >= BigRational::one() {
            break;
        }
        let hi = (BigRational::from_integer(&m + 1) / slope).min(BigRational::one());
        let f = Expr::Mul(Box::new(Expr::constant(slope.clone())), Box::new(Expr::X));
        let formula = if m.is_zero() {
            f
        } else {
            Expr::Sub(
                Box::new(f),
                Box::new(Expr::constant(BigRational::from_integer(m.clone()))),
            )
        };
        specs.push(BranchSpec::exact(&lo, &hi, formula));
        m += 1;
    }
    build_map(&specs)
}

/// `x -> f(x) mod 1` for a function `f` monotone on `[0, 1]`. The cut
/// points are the certified solutions of `f(x) = m` for integers `m`.
pub fn mod_one(f: &Expr) -> Result<PiecewiseMap> {
    let whole = orient(Branch::single(Interval::ZERO, Interval::ONE, f.clone()), 0)?;
    let f0 = f.eval(Interval::ZERO)?;
    let f1 = f.eval(Interval::ONE)?;
    let (low, high) = if whole.is_increasing() {
        (f0, f1)
    } else {
        (f1, f0)
    };
    let floor_lo = low.lo().floor();
    if low.hi().floor() != floor_lo && low.hi() != low.hi().floor() {
        return Err(Error::Config(format!(
            "cannot resolve the integer part of f at an endpoint: {low}"
        )));
    }
    let ceil_hi = high.hi().ceil();
    if high.lo().ceil() != ceil_hi && high.lo() != high.lo().ceil() {
        return Err(Error::Config(format!(
            "cannot resolve the integer part of f at an endpoint: {high}"
        )));
    }
    let (first, last) = (
        floor_lo.to_i64().unwrap_or(0),
        ceil_hi.to_i64().unwrap_or(0),
    );
    if last - first > 100_000 {
        return Err(Error::Config("too many branches".into()));
    }
    let mut cuts = Vec::new();
    for m in first + 1..last {
        cuts.push(whole.root(Interval::point(m as f64)));
    }
    let mut specs = Vec::new();
    let n = (last - first) as usize;
    for idx in 0..n {
        let (lo, hi) = (
            if idx == 0 {
                Interval::ZERO
            } else {
                cuts[idx - 1]
            },
            if idx == n - 1 {
                Interval::ONE
            } else {
                cuts[idx]
            },
        );
        let level = if whole.is_increasing() {
            first + idx as i64
        } else {
            last - 1 - idx as i64
        };
        let formula = if level == 0 {
            f.clone()
        } else {
            Expr::Sub(Box::new(f.clone()), Box::new(Expr::int(level)))
        };
        specs.push(BranchSpec::new(lo, hi, formula));
    }
    build_map(&specs)
}

fn compose_once(current: &[Branch], base: &[Branch]) -> Result<Vec<Branch>> {
    let mut out = Vec::new();
    for g in current {
        let img = g.image()?;
        let mut subs = Vec::new();
        for b in base {
            let (blo, bhi) = (b.lo(), b.hi());
            if img.hi() <= blo.lo() || img.lo() >= bhi.hi() {
                continue;
            }
            let qa = g.root(blo);
            let qb = g.root(bhi);
            let (lo, hi) = if g.is_increasing() {
                (qa, qb)
            } else {
                (qb, qa)
            };
            if lo.hi() >= hi.lo() {
                if img.hi() <= blo.hi() || img.lo() >= bhi.lo() {
                    continue;
                }
                return Err(Error::Precision(format!(
                    "cannot separate pulled-back cut points {lo} and {hi}"
                )));
            }
            let mut chain: Vec<Arc<Piece>> = g.chain().to_vec();
            chain.extend(b.chain().iter().cloned());
            subs.push(Branch::from_parts(
                lo,
                hi,
                chain,
                g.is_increasing() == b.is_increasing(),
            ));
        }
        if !g.is_increasing() {
            subs.reverse();
        }
        out.extend(subs);
    }
    Ok(out)
}

/// The `n`-th iterate `T^n` of `m`.
pub fn iterate_map(m: &PiecewiseMap, n: usize) -> Result<PiecewiseMap> {
    if n == 0 {
        return Err(Error::Config("iterate must be at least 1".into()));
    }
    if n == 1 {
        return Ok(m.clone());
    }
    let mut cur = m.branches.clone();
    for _ in 1..n {
        cur = compose_once(&cur, &m.branches)?;
    }
    let mut floor = 1.0;
    for _ in 0..n {
        floor = mul_down(floor, m.inf_abs_deriv.lo());
    }
    PiecewiseMap::assemble(cur, m.iterate * n, Some(floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigor::parse_expr;

    fn lanford() -> PiecewiseMap {
        mod_one(&parse_expr("2*x + 0.5*x*(1-x)").unwrap()).unwrap()
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn linear_23_over_5() {
        let m = linear_mod1(&rat(23, 5)).unwrap();
        assert_eq!(m.branches().len(), 5);
        assert!(m.inf_abs_deriv().contains(4.6));
        assert!(m.min_gap().contains(3.0 / 23.0));
        assert!(!m.unbounded_derivative());
    }

    #[test]
    fn lanford_branches() {
        let m = lanford();
        assert_eq!(m.branches().len(), 2);
        let c = (5.0 - 17f64.sqrt()) / 2.0;
        assert!(m.cut_points()[1].contains(c) || (m.cut_points()[1].mid() - c).abs() < 1e-15);
        assert!(m.inf_abs_deriv().contains(1.5));
        assert!(m.inf_abs_deriv().lo() > 1.4999);
    }

    #[test]
    fn lanford_second_iterate() {
        let f = iterate_map(&lanford(), 2).unwrap();
        assert_eq!(f.branches().len(), 4);
        assert!(f.inf_abs_deriv().lo() >= 2.25 - 1e-9);
        assert!(f.inf_abs_deriv().contains(2.25));
        assert_eq!(f.iterate(), 2);
    }

    #[test]
    fn doubling_second_iterate() {
        let d = linear_mod1(&rat(2, 1)).unwrap();
        let f = iterate_map(&d, 2).unwrap();
        assert_eq!(f.branches().len(), 4);
        for (i, b) in f.branches().iter().enumerate() {
            assert!(b.lo().contains(i as f64 / 4.0));
            assert!(b.hi().contains((i + 1) as f64 / 4.0));
            let j = b.jet(b.domain_hull()).unwrap().unwrap();
            assert_eq!(j.d1, Interval::point(4.0));
        }
        let same = iterate_map(&d, 1).unwrap();
        assert_eq!(same.branches().len(), 2);
    }

    #[test]
    fn identity_is_not_rejected_here() {
        let m = build_map(&[BranchSpec::new(Interval::ZERO, Interval::ONE, Expr::X)]).unwrap();
        assert_eq!(m.inf_abs_deriv(), Interval::ONE);
    }

    #[test]
    fn overlap_and_gap_rejected() {
        let half = Interval::point(0.5);
        let e = parse_expr("2*x").unwrap();
        let g = parse_expr("2*x - 1").unwrap();
        let overlap = [
            BranchSpec::new(Interval::ZERO, Interval::point(0.6), e.clone()),
            BranchSpec::new(half, Interval::ONE, g.clone()),
        ];
        assert!(matches!(build_map(&overlap), Err(Error::Config(m)) if m.contains("overlap")));
        let gap = [
            BranchSpec::new(Interval::ZERO, Interval::point(0.4), e),
            BranchSpec::new(half, Interval::ONE, g),
        ];
        assert!(matches!(build_map(&gap), Err(Error::Config(m)) if m.contains("gap")));
    }

    #[test]
    fn flat_branch_is_not_expanding() {
        let r = build_map(&[BranchSpec::new(
            Interval::ZERO,
            Interval::ONE,
            parse_expr("4*x*(1-x)").unwrap(),
        )]);
        assert!(matches!(r, Err(Error::NotExpanding { branch: 1, .. })));
    }

    #[test]
    fn lorenz_is_flagged_unbounded() {
        let half = Interval::point(0.5);
        let m = build_map(&[
            BranchSpec::new(
                Interval::ZERO,
                half,
                parse_expr("(109/64)*abs(x-1/2)^(57/64)").unwrap(),
            ),
            BranchSpec::new(
                half,
                Interval::ONE,
                parse_expr("1 - (109/64)*abs(x-1/2)^(57/64)").unwrap(),
            ),
        ])
        .unwrap();
        assert!(m.unbounded_derivative());
        assert!(!m.branches()[0].is_increasing());
        // theta * alpha * 2^(1 - alpha) at the outer endpoints
        let a = 57.0 / 64.0;
        let expect = 109.0 / 64.0 * a * 2f64.powf(1.0 - a);
        assert!((m.inf_abs_deriv().lo() - expect).abs() < 1e-6);
    }
}
