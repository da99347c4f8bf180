//! Certified weak-norm contraction of powers of the Ulam matrix.
//!
//! Vectors hold cell averages; the weak norm is `‖f‖₁ = δ Σ|f_i|`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rigor::round::{add_up, div_up, gamma, mul_up};
use crate::rigor::Interval;
use crate::ulam::UlamMatrix;

/// Floating-point cell averages together with a bound on the L¹ distance
/// to the exact vector they stand for.
#[derive(Clone, Debug, PartialEq)]
pub struct RigorousVector {
    pub values: Vec<f64>,
    pub err_l1: f64,
}

impl RigorousVector {
    pub fn exact(values: Vec<f64>) -> Self {
        RigorousVector {
            values,
            err_l1: 0.0,
        }
    }

    /// `k·1_{I_i}` for the 1-based cell `i`: unit L¹ mass on one cell.
    pub fn cell_indicator(k: usize, i: usize) -> Self {
        let mut values = vec![0.0; k];
        values[i - 1] = k as f64;
        RigorousVector::exact(values)
    }

    /// Upper bound on `‖values‖₁`, not counting `err_l1`.
    pub fn l1_upper(&self) -> f64 {
        l1_upper(&self.values)
    }

    /// Enclosure of the total mass `δ Σ values_i` widened by `err_l1`.
    pub fn mass(&self) -> Interval {
        let k = self.values.len() as f64;
        let s: f64 = self.values.iter().sum();
        let slack = mul_up(gamma(self.values.len()), mul_up(l1_upper(&self.values), k));
        let s = Interval::point(s) + Interval::new(-slack, slack);
        let s = s.div(Interval::point(k)).expect("k > 0");
        s + Interval::new(-self.err_l1, self.err_l1)
    }
}

// Upper bound on (1/k) Σ t_i for nonnegative terms summed in
// round-to-nearest; each term is itself within one rounding of the truth.
fn scaled_sum_upper(sum: f64, n: usize) -> f64 {
    let widen = add_up(1.0, 2.0 * gamma(n + 1));
    let s = add_up(mul_up(sum, widen), n as f64 * f64::MIN_POSITIVE);
    div_up(s, n as f64)
}

/// Upper bound on `δ Σ|v_i|` with `δ = 1/len`.
pub fn l1_upper(v: &[f64]) -> f64 {
    scaled_sum_upper(v.iter().map(|x| x.abs()).sum(), v.len())
}

/// Upper bound on `δ Σ|a_i - b_i|`.
pub fn l1_distance_upper(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let s = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    scaled_sum_upper(s, a.len())
}

/// Error-propagation constants of one multiplication by the matrix.
#[derive(Clone, Copy, Debug)]
struct ErrorModel {
    column_sum: f64,
    radius: f64,
    accumulation: f64,
}

impl ErrorModel {
    fn of(u: &UlamMatrix) -> Self {
        ErrorModel {
            column_sum: u.max_column_sum(),
            radius: u.max_column_radius(),
            accumulation: mul_up(gamma(u.max_row_nnz().max(1)), u.max_column_mid_sum()),
        }
    }

    fn apply(&self, u: &UlamMatrix, v: &RigorousVector, out: &mut RigorousVector) {
        u.mid_matvec(&v.values, &mut out.values);
        let norm = v.l1_upper();
        let carried = mul_up(self.column_sum, v.err_l1);
        let enclosure = mul_up(self.radius, norm);
        let rounding = add_up(
            mul_up(self.accumulation, norm),
            f64::MIN_POSITIVE * u.nnz() as f64,
        );
        out.err_l1 = add_up(add_up(carried, enclosure), rounding);
    }
}

/// `P v` for the matrix enclosure `P`: midpoint product plus the
/// enclosure radius, the rounding of the product and the incoming error.
pub fn rigorous_matvec(u: &UlamMatrix, v: &RigorousVector) -> RigorousVector {
    assert_eq!(u.k(), v.values.len(), "dimension mismatch");
    let mut out = RigorousVector::exact(vec![0.0; u.k()]);
    ErrorModel::of(u).apply(u, v, &mut out);
    out
}

/// Fixed point of the midpoint matrix by power iteration from the uniform
/// density, normalised to unit mass.
pub fn reference_fixed_point(u: &UlamMatrix, max_iter: usize) -> (Vec<f64>, usize) {
    let k = u.k();
    let mut w = vec![1.0; k];
    let mut next = vec![0.0; k];
    for it in 1..=max_iter {
        u.mid_matvec(&w, &mut next);
        let mass: f64 = next.iter().sum::<f64>() / k as f64;
        if mass.is_nan() || mass <= 0.0 {
            return (w, it);
        }
        next.iter_mut().for_each(|x| *x /= mass);
        let change = l1_distance_upper(&w, &next);
        std::mem::swap(&mut w, &mut next);
        if change < 1e-15 {
            return (w, it);
        }
    }
    (w, max_iter)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    ZeroAverage,
    Whole,
}

/// One step of the search: the certified bound at `n` and the largest
/// accumulated error among the basis vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub lambda2_upper: f64,
    pub err_component: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCertificate {
    pub n1: usize,
    pub lambda2: Interval,
    pub space: Space,
    pub basis_count: usize,
    pub trace: Vec<TraceRow>,
}

impl ContractionCertificate {
    pub fn write_trace_csv(&self, w: impl Write) -> std::io::Result<()> {
        write_trace_csv(&self.trace, w)
    }
}

pub fn write_trace_csv(trace: &[TraceRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "n,lambda2_upper,err_component")?;
    for r in trace {
        writeln!(w, "{},{:?},{:?}", r.n, r.lambda2_upper, r.err_component)?;
    }
    Ok(())
}

/// A vector whose bound has dropped below this fraction of the target
/// stops iterating; later bounds follow from the envelope.
const STOP_FRACTION: f64 = 0.25;

// Bounds t(n), n = 1..=n_max, on the distance of the n-th iterate of the
// cell indicator to `w` (or its norm when `w` is None), with errors.
fn basis_trajectory(
    u: &UlamMatrix,
    model: &ErrorModel,
    i: usize,
    w: Option<&[f64]>,
    drift: f64,
    stop: f64,
    n_max: usize,
) -> Vec<(f64, f64)> {
    let mut v = RigorousVector::cell_indicator(u.k(), i);
    let mut next = RigorousVector::exact(vec![0.0; u.k()]);
    let mut out = Vec::with_capacity(n_max);
    while out.len() < n_max {
        model.apply(u, &v, &mut next);
        std::mem::swap(&mut v, &mut next);
        let d = match w {
            Some(w) => l1_distance_upper(&v.values, w),
            None => v.l1_upper(),
        };
        let t = add_up(d, v.err_l1);
        out.push((t, v.err_l1));
        if t <= stop {
            let (mut t, e) = (t, v.err_l1);
            while out.len() < n_max {
                t = add_up(mul_up(model.column_sum, t), drift);
                out.push((t, e));
            }
        }
    }
    out
}

fn check_target(target: f64, n_max: usize) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!(
            "lambda2 target {target} must lie in (0, 1)"
        )));
    }
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    Ok(())
}

fn conclude(
    bounds: Vec<f64>,
    errs: Vec<f64>,
    target: f64,
    space: Space,
    basis_count: usize,
) -> Result<ContractionCertificate> {
    let trace: Vec<TraceRow> = bounds
        .iter()
        .zip(&errs)
        .enumerate()
        .map(|(n, (&l, &e))| TraceRow {
            n: n + 1,
            lambda2_upper: l,
            err_component: e,
        })
        .collect();
    match trace.iter().find(|r| r.lambda2_upper <= target) {
        Some(r) => {
            let n1 = r.n;
            let lambda2 = Interval::point(r.lambda2_upper);
            Ok(ContractionCertificate {
                n1,
                lambda2,
                space,
                basis_count,
                trace: trace[..n1].to_vec(),
            })
        }
        None => {
            let best = trace
                .iter()
                .min_by(|a, b| {
                    a.lambda2_upper
                        .total_cmp(&b.lambda2_upper)
                        .then(a.n.cmp(&b.n))
                })
                .expect("n_max >= 1");
            Err(Error::NoContraction {
                best_n: best.n,
                best_lambda2: best.lambda2_upper,
                target,
                trace: trace
                    .iter()
                    .map(|r| (r.n, r.lambda2_upper, r.err_component))
                    .collect(),
            })
        }
    }
}

// colsum^n rounded up, the trivial bound on the L¹ operator norm.
fn trivial_bounds(column_sum: f64, n_max: usize) -> Vec<f64> {
    let mut p = 1.0;
    (0..n_max)
        .map(|_| {
            p = mul_up(p, column_sum);
            p
        })
        .collect()
}

/// Finds the smallest `n ≤ n_max` with `‖P^n v‖₁ ≤ λ₂ ‖v‖₁ ≤ target ‖v‖₁`
/// for every zero-average `v`.
///
/// The unit ball of the zero-average space has the extreme points
/// `(f_i - f_j)/2`, and for any reference `w`
/// `‖P^n (f_i - f_j)/2‖₁ ≤ (‖P^n f_i - w‖₁ + ‖P^n f_j - w‖₁)/2`,
/// so the bound is the mean of the two largest distances to `w`.
pub fn estimate_lambda2_mixing(
    u: &UlamMatrix,
    target: f64,
    n_max: usize,
) -> Result<ContractionCertificate> {
    check_target(target, n_max)?;
    if !u.hole_rows().is_empty() || !u.is_stochastic() {
        return Err(Error::Config(
            "mixing certification needs a closed, column-stochastic matrix".into(),
        ));
    }
    let k = u.k();
    let model = ErrorModel::of(u);
    let (w, _) = reference_fixed_point(u, 100_000);
    let mut pw = RigorousVector::exact(vec![0.0; k]);
    model.apply(u, &RigorousVector::exact(w.clone()), &mut pw);
    let drift = add_up(l1_distance_upper(&pw.values, &w), pw.err_l1);

    let stop = target * STOP_FRACTION;
    let runs: Vec<Vec<(f64, f64)>> = (1..=k)
        .into_par_iter()
        .map(|i| basis_trajectory(u, &model, i, Some(&w), drift, stop, n_max))
        .collect();

    let trivial = trivial_bounds(model.column_sum, n_max);
    let mut bounds = Vec::with_capacity(n_max);
    let mut errs = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let (mut first, mut second, mut err) = (0.0f64, 0.0f64, 0.0f64);
        for r in &runs {
            let (t, e) = r[n];
            if t > first {
                second = first;
                first = t;
            } else if t > second {
                second = t;
            }
            err = err.max(e);
        }
        let pair = 0.5 * add_up(first, second);
        bounds.push(pair.min(trivial[n]));
        errs.push(err);
    }
    conclude(bounds, errs, target, Space::ZeroAverage, k)
}

/// Finds the smallest `n ≤ n_max` with `‖P^n v‖₁ ≤ λ₂ ‖v‖₁ ≤ target ‖v‖₁`
/// for every `v`, for a matrix that loses mass. The extreme points of the
/// unit ball are `±f_i`.
pub fn estimate_lambda2_escape(
    u: &UlamMatrix,
    target: f64,
    n_max: usize,
) -> Result<ContractionCertificate> {
    check_target(target, n_max)?;
    if u.is_stochastic() {
        return Err(Error::Config(
            "escape certification needs a matrix with a hole".into(),
        ));
    }
    let k = u.k();
    let model = ErrorModel::of(u);
    let stop = target * STOP_FRACTION;
    let runs: Vec<Vec<(f64, f64)>> = (1..=k)
        .into_par_iter()
        .map(|i| basis_trajectory(u, &model, i, None, 0.0, stop, n_max))
        .collect();
    let trivial = trivial_bounds(model.column_sum, n_max);
    let mut bounds = Vec::with_capacity(n_max);
    let mut errs = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let worst = runs.iter().map(|r| r[n].0).fold(0.0, f64::max);
        let err = runs.iter().map(|r| r[n].1).fold(0.0, f64::max);
        bounds.push(worst.min(trivial[n]));
        errs.push(err);
    }
    conclude(bounds, errs, target, Space::Whole, k)
}
