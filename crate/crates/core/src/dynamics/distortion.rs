use rayon::prelude::*;

use super::branch::Branch;
use super::map::PiecewiseMap;
use crate::error::{Error, Result};
use crate::rigor::round::add_up;
use crate::rigor::Interval;

/// Cells narrower than this are no longer split.
const WIDTH_TOL: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Default)]
struct Tally {
    lower: f64,
    upper: f64,
    sup_below: f64,
}

// |1/F'(b) - 1/F'(a)| when F''/F'^2 has one sign on [a, b]; this is the
// integral of |F''/F'^2| over the cell, finite even where F' blows up.
// At an end where the point jet is unavailable (F' infinite, or the point
// sits just outside the chain) 1/F' is enclosed by its range on the cell;
// the flag reports whether that fallback was needed.
fn variation_of_reciprocal(b: &Branch, x0: f64, x1: f64) -> Option<(Interval, bool)> {
    let over_cell = || -> Option<Interval> {
        let j = b.jet(Interval::new(x0, x1)).ok()??;
        j.d1.recip().ok()
    };
    let mut fallback = false;
    let mut r = |x: f64| -> Option<Interval> {
        let at_point = b
            .jet(Interval::point(x))
            .ok()
            .flatten()
            .and_then(|j| j.d1.recip().ok())
            .filter(|v| v.lo().is_finite() && v.hi().is_finite());
        match (at_point, over_cell()) {
            (Some(p), Some(c)) => Some(p.intersect(&c).unwrap_or(p)),
            (Some(p), None) => Some(p),
            (None, c) => {
                fallback = true;
                c
            }
        }
    };
    let v = (r(x1)? - r(x0)?).abs();
    v.hi().is_finite().then_some((v, fallback))
}

fn integrate_branch(b: &Branch, l: f64) -> Result<Tally> {
    let hull = b.domain_hull();
    let mut t = Tally::default();
    let mut stack = vec![(hull.lo(), hull.hi())];
    while let Some((x0, x1)) = stack.pop() {
        let cell = Interval::new(x0, x1);
        let mid = 0.5 * x0 + 0.5 * x1;
        let splittable = x1 - x0 > WIDTH_TOL && x0 < mid && mid < x1;
        let jet = match b.jet(cell) {
            Ok(Some(j)) => j,
            Ok(None) => continue,
            Err(_) if splittable => {
                stack.push((mid, x1));
                stack.push((x0, mid));
                continue;
            }
            Err(e) => {
                return Err(Error::Precision(format!(
                    "distortion undefined near {cell}: {e}"
                )))
            }
        };
        let d = jet.dist;
        if d.mag() <= l {
            t.sup_below = t.sup_below.max(d.mag());
        } else if d.mig() > l {
            let v = variation_of_reciprocal(b, x0, x1);
            if v.is_none_or(|(_, fallback)| fallback) && splittable {
                stack.push((mid, x1));
                stack.push((x0, mid));
                continue;
            }
            let (v, _) = v.ok_or_else(|| {
                Error::Precision(format!("cannot bound 1/F' at the ends of {cell}"))
            })?;
            t.lower += v.lo();
            t.upper = add_up(t.upper, v.hi());
        } else if splittable {
            stack.push((mid, x1));
            stack.push((x0, mid));
        } else {
            t.sup_below = l;
            let by_variation = if d.contains_zero() {
                None
            } else {
                variation_of_reciprocal(b, x0, x1).map(|(v, _)| v.hi())
            };
            let by_width = (Interval::point(x1 - x0).scale(1.0) * Interval::point(d.mag())).hi();
            let add = by_variation.map_or(by_width, |v| v.min(by_width));
            if !add.is_finite() {
                return Err(Error::Precision(format!(
                    "unbounded distortion on unresolved cell {cell}"
                )));
            }
            t.upper = add_up(t.upper, add);
        }
    }
    Ok(t)
}

/// Encloses `∫ |T''/T'^2|` over the set where the distortion exceeds `l`,
/// together with an upper bound for the distortion on the rest of `[0, 1]`
/// (returned as `[0, sup]`).
///
/// On cells where the distortion has one sign the integral equals the
/// variation of `1/T'`, which stays finite next to points where `T'` is
/// infinite; cells straddling the threshold are split down to width
/// `2^-40` and then counted in full in the upper bound.
pub fn distortion_excess_integral(m: &PiecewiseMap, l: f64) -> Result<(Interval, Interval)> {
    if l.is_nan() || l <= 0.0 {
        return Err(Error::Config(format!(
            "distortion threshold {l} must be positive"
        )));
    }
    let parts: Vec<Tally> = m
        .branches()
        .par_iter()
        .map(|b| integrate_branch(b, l))
        .collect::<Result<_>>()?;
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut sup: f64 = 0.0;
    for p in parts {
        lower += p.lower;
        upper = add_up(upper, p.upper);
        sup = sup.max(p.sup_below);
    }
    // the lower sum was accumulated in round-to-nearest
    let lower = (lower * (1.0 - 4.0 * f64::EPSILON * m.branches().len() as f64)).max(0.0);
    Ok((
        Interval::new(lower.min(upper), upper),
        Interval::new(0.0, sup),
    ))
}
