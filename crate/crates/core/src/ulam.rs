//! Ulam discretization `L_δ = π_δ L π_δ` of the transfer operator on the
//! uniform partition `I_i = [(i-1)/k, i/k]`, `i = 1..=k`.
//!
//! Entry `(j, i)` encloses the fraction of the mass of cell `i` that the
//! map sends into cell `j`, so densities are column vectors of cell
//! averages and the matrix acts by left multiplication.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::dynamics::{Hole, PiecewiseMap};
use crate::error::{Error, Result};
use crate::lasota_yorke::LYCertificate;
use crate::rigor::round::{add_down, add_up, mul_down, mul_up, sub_down, sub_up};
use crate::rigor::{parse_rational, Interval};

/// Uniform partition of `[0, 1]` into `k` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    k: usize,
}

impl Partition {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!(
                "a partition needs at least 2 cells, got {k}"
            )));
        }
        if k > u32::MAX as usize {
            return Err(Error::Config(format!("{k} cells is too many")));
        }
        Ok(Partition { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Enclosure of the cell size `1/k`.
    pub fn delta(&self) -> Interval {
        Interval::from_i64_ratio(1, self.k as i64)
    }

    /// Enclosure of the grid point `j/k`.
    pub fn grid_point(&self, j: usize) -> Interval {
        Interval::from_i64_ratio(j as i64, self.k as i64)
    }

    /// The closed cell `I_i`, 1-based.
    pub fn cell(&self, i: usize) -> Interval {
        assert!(
            (1..=self.k).contains(&i),
            "cell index {i} out of 1..={}",
            self.k
        );
        self.grid_point(i - 1).hull(&self.grid_point(i))
    }
}

/// Certified Ulam matrix in compressed sparse column form.
#[derive(Clone, Debug)]
pub struct UlamMatrix {
    partition: Partition,
    col_ptr: Vec<usize>,
    rows: Vec<u32>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    mid: Vec<f64>,
    hole: Option<Hole>,
    hole_rows: BTreeSet<usize>,
    stochastic: bool,
}

impl UlamMatrix {
    /// Builds a matrix from explicit columns of `(row, enclosure)` pairs,
    /// both indices 1-based. Duplicate rows within a column are summed.
    pub fn from_columns(k: usize, columns: Vec<Vec<(usize, Interval)>>) -> Result<Self> {
        let partition = Partition::new(k)?;
        if columns.len() != k {
            return Err(Error::Config(format!(
                "expected {k} columns, got {}",
                columns.len()
            )));
        }
        let mut triplets = Vec::new();
        for (i, col) in columns.into_iter().enumerate() {
            for (j, v) in col {
                if !(1..=k).contains(&j) {
                    return Err(Error::Config(format!("row index {j} out of 1..={k}")));
                }
                if v.lo() < 0.0 || v.hi() > 1.0 {
                    return Err(Error::Config(format!(
                        "entry ({j}, {}) = {v} is not in [0, 1]",
                        i + 1
                    )));
                }
                triplets.push((i, j - 1, v.lo(), v.hi()));
            }
        }
        let mut m = Self::assemble(partition, triplets);
        if let Some(i) = (1..=k).find(|&i| m.column_sum(i).lo() > 1.0) {
            return Err(Error::Consistency(format!(
                "column {i} sums to {}, more than 1",
                m.column_sum(i)
            )));
        }
        m.stochastic = (1..=k).all(|i| m.column_sum(i).contains(1.0));
        Ok(m)
    }

    // `triplets` are (column, row, lo, hi), 0-based.
    fn assemble(partition: Partition, mut triplets: Vec<(usize, usize, f64, f64)>) -> Self {
        let k = partition.k;
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut col_ptr = vec![0usize; k + 1];
        let mut rows = Vec::with_capacity(triplets.len());
        let mut lo = Vec::with_capacity(triplets.len());
        let mut hi = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, l, h) in triplets {
            if last == Some((i, j)) {
                let n = lo.len() - 1;
                lo[n] = add_down(lo[n], l);
                hi[n] = add_up(hi[n], h);
            } else {
                rows.push(j as u32);
                lo.push(l);
                hi.push(h);
                col_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..k {
            col_ptr[i + 1] += col_ptr[i];
        }
        for h in &mut hi {
            *h = h.min(1.0);
        }
        let mid = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| 0.5 * l + 0.5 * h)
            .collect();
        UlamMatrix {
            partition,
            col_ptr,
            rows,
            lo,
            hi,
            mid,
            hole: None,
            hole_rows: BTreeSet::new(),
            stochastic: true,
        }
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn k(&self) -> usize {
        self.partition.k
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn hole(&self) -> Option<&Hole> {
        self.hole.as_ref()
    }

    /// Masked rows, 1-based.
    pub fn hole_rows(&self) -> &BTreeSet<usize> {
        &self.hole_rows
    }

    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    /// Nonzero entries of column `i` as `(row, enclosure)`, 1-based.
    pub fn column(&self, i: usize) -> impl Iterator<Item = (usize, Interval)> + '_ {
        let r = self.col_ptr[i - 1]..self.col_ptr[i];
        r.map(move |p| {
            (
                self.rows[p] as usize + 1,
                Interval::new(self.lo[p], self.hi[p]),
            )
        })
    }

    /// Entry `(j, i)`, 1-based; zero when not stored.
    pub fn entry(&self, j: usize, i: usize) -> Interval {
        self.column(i)
            .find(|&(r, _)| r == j)
            .map_or(Interval::ZERO, |(_, v)| v)
    }

    /// Enclosure of the sum of column `i`. Mass is never created, so the
    /// upper end is at most 1.
    pub fn column_sum(&self, i: usize) -> Interval {
        let (mut l, mut h) = (0.0, 0.0);
        for p in self.col_ptr[i - 1]..self.col_ptr[i] {
            l = add_down(l, self.lo[p]);
            h = add_up(h, self.hi[p]);
        }
        Interval::new(l.min(1.0), h.min(1.0))
    }

    /// Upper bound on the column sums.
    pub fn max_column_sum(&self) -> f64 {
        (1..=self.k())
            .map(|i| self.column_sum(i).hi())
            .fold(0.0, f64::max)
    }

    /// Largest sum of entry radii over a column.
    pub fn max_column_radius(&self) -> f64 {
        (0..self.k())
            .map(|i| {
                (self.col_ptr[i]..self.col_ptr[i + 1])
                    .map(|p| sub_up(self.hi[p], self.mid[p]).max(sub_up(self.mid[p], self.lo[p])))
                    .fold(0.0, add_up)
            })
            .fold(0.0, f64::max)
    }

    /// Largest sum of midpoints over a column.
    pub fn max_column_mid_sum(&self) -> f64 {
        (0..self.k())
            .map(|i| {
                self.mid[self.col_ptr[i]..self.col_ptr[i + 1]]
                    .iter()
                    .copied()
                    .fold(0.0, add_up)
            })
            .fold(0.0, f64::max)
    }

    pub fn max_row_nnz(&self) -> usize {
        let mut count = vec![0usize; self.k()];
        for &r in &self.rows {
            count[r as usize] += 1;
        }
        count.into_iter().max().unwrap_or(0)
    }

    pub fn max_column_nnz(&self) -> usize {
        self.col_ptr
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    /// `y = mid(P) x` in round-to-nearest, accumulating in column order.
    pub fn mid_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for p in self.col_ptr[i]..self.col_ptr[i + 1] {
                y[self.rows[p] as usize] += self.mid[p] * xi;
            }
        }
    }

    /// Writes the matrix as a header line followed by `j i lo hi` lines.
    pub fn export(&self, mut w: impl Write) -> std::io::Result<()> {
        let hole = match &self.hole {
            Some(h) => format!("{},{}", h.lo, h.hi),
            None => "none".into(),
        };
        writeln!(w, "ulam k={} hole={hole}", self.k())?;
        for i in 1..=self.k() {
            for (j, v) in self.column(i) {
                writeln!(w, "{j} {i} {:?} {:?}", v.lo(), v.hi())?;
            }
        }
        Ok(())
    }

    pub fn export_string(&self) -> String {
        let mut buf = Vec::new();
        self.export(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("export is ASCII")
    }

    /// Reads the format written by [`UlamMatrix::export`].
    pub fn parse_export(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Config(format!("line {line}: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let mut words = header.split_whitespace();
        if words.next() != Some("ulam") {
            return Err(bad(1, "expected `ulam`"));
        }
        let k: usize = words
            .next()
            .and_then(|w| w.strip_prefix("k="))
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| bad(1, "expected k=<cells>"))?;
        let hole_text = words
            .next()
            .and_then(|w| w.strip_prefix("hole="))
            .ok_or_else(|| bad(1, "expected hole=<lo,hi|none>"))?;
        let mut columns = vec![Vec::new(); k];
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let parsed = (f.len() == 4)
                .then(|| {
                    Some((
                        f[0].parse::<usize>().ok()?,
                        f[1].parse::<usize>().ok()?,
                        f[2].parse::<f64>().ok()?,
                        f[3].parse::<f64>().ok()?,
                    ))
                })
                .flatten();
            let (j, i, l, h) = parsed.ok_or_else(|| bad(n + 2, "expected `j i lo hi`"))?;
            if !(1..=k).contains(&i) || l > h {
                return Err(bad(n + 2, "entry out of range"));
            }
            columns[i - 1].push((j, Interval::new(l, h)));
        }
        let mut m = Self::from_columns(k, columns)?;
        if hole_text != "none" {
            let (a, b) = hole_text
                .split_once(',')
                .ok_or_else(|| bad(1, "malformed hole"))?;
            let (a, b) = parse_rational(a)
                .zip(parse_rational(b))
                .ok_or_else(|| bad(1, "malformed hole"))?;
            let h = Hole::new(a, b)?;
            m.hole_rows = aligned_rows(&h, k)?;
            m.hole = Some(h);
            m.stochastic = false;
        }
        Ok(m)
    }
}

// (lo, hi) bounds of |cell ∩ [p0, p1]| where the cell is [c0, c1].
fn overlap(p0: Interval, p1: Interval, c0: Interval, c1: Interval) -> (f64, f64) {
    let lo = sub_down(p1.lo().min(c1.lo()), p0.hi().max(c0.hi())).max(0.0);
    let hi = sub_up(p1.hi().min(c1.hi()), p0.lo().max(c0.lo())).max(0.0);
    (lo, hi)
}

/// Assembles the Ulam matrix of `m` on `k` cells from branch preimages of
/// the grid points.
pub fn build_ulam(m: &PiecewiseMap, k: usize) -> Result<UlamMatrix> {
    let part = Partition::new(k)?;
    let kf = k as f64;
    let grid: Vec<Interval> = (0..=k).map(|j| part.grid_point(j)).collect();
    let mut triplets = Vec::new();
    for b in m.branches() {
        let image = b.image()?;
        let jlo = ((image.lo() * kf).floor().max(0.0) as usize).min(k);
        let jhi = ((image.hi() * kf).ceil().max(0.0) as usize).min(k);
        if jlo >= jhi {
            continue;
        }
        let roots: Vec<Interval> = (jlo..=jhi)
            .into_par_iter()
            .map(|j| b.root(grid[j]))
            .collect();
        let parts: Vec<Vec<(usize, usize, f64, f64)>> = (jlo + 1..=jhi)
            .into_par_iter()
            .map(|j| {
                let (a, z) = (roots[j - 1 - jlo], roots[j - jlo]);
                let (p0, p1) = if b.is_increasing() { (a, z) } else { (z, a) };
                let first = ((p0.lo() * kf).floor().max(0.0) as usize).min(k - 1);
                let last = ((p1.hi() * kf).ceil().max(1.0) as usize).min(k);
                (first..last)
                    .filter_map(|i| {
                        let (l, h) = overlap(p0, p1, grid[i], grid[i + 1]);
                        (h > 0.0).then(|| (i, j - 1, mul_down(l, kf), mul_up(h, kf)))
                    })
                    .collect()
            })
            .collect();
        triplets.extend(parts.into_iter().flatten());
    }
    let u = UlamMatrix::assemble(part, triplets);
    for i in 1..=k {
        let s = u.column_sum(i);
        if !s.contains(1.0) {
            return Err(Error::Consistency(format!(
                "column {i} of the Ulam matrix sums to {s}, which excludes 1"
            )));
        }
    }
    Ok(u)
}

/// 1-based rows of the cells inside `h`, failing when an endpoint of the
/// hole is not a grid point.
fn aligned_rows(h: &Hole, k: usize) -> Result<BTreeSet<usize>> {
    let kk = BigRational::from_integer(BigInt::from(k));
    let a = &h.lo * &kk;
    let b = &h.hi * &kk;
    if !a.is_integer() || !b.is_integer() {
        return Err(Error::Config(misalignment_hint(h, k)));
    }
    let a = a.to_integer().to_usize().unwrap_or(0);
    let b = b.to_integer().to_usize().unwrap_or(0);
    Ok((a + 1..=b).collect())
}

fn misalignment_hint(h: &Hole, k: usize) -> String {
    let mut msg = format!(
        "hole [{}, {}] is not aligned with the grid of {k} cells",
        h.lo, h.hi
    );
    let denom = h.lo.denom().lcm(h.hi.denom());
    let two = BigInt::from(2);
    let mut d = denom.clone();
    while d.is_even() {
        d /= &two;
    }
    if d.is_one() {
        let need = denom.to_usize().unwrap_or(usize::MAX);
        let suggested = need.lcm(&k);
        let _ = write!(msg, "; use k = {suggested}");
    } else {
        let kk = BigRational::from_integer(BigInt::from(k));
        let snap = |x: &BigRational| (x * &kk).round() / &kk;
        let _ = write!(
            msg,
            "; no power-of-two grid contains these endpoints, the nearest aligned hole is [{}, {}]",
            snap(&h.lo),
            snap(&h.hi)
        );
    }
    msg
}

/// Zeroes the rows of the cells inside the hole; the result represents
/// `1_{H^c} L_δ`.
pub fn apply_hole_mask(u: &UlamMatrix, h: &Hole) -> Result<UlamMatrix> {
    let rows = aligned_rows(h, u.k())?;
    if rows.is_empty() {
        return Ok(u.clone());
    }
    let mut triplets = Vec::with_capacity(u.nnz());
    for i in 0..u.k() {
        for p in u.col_ptr[i]..u.col_ptr[i + 1] {
            let j = u.rows[p] as usize;
            if !rows.contains(&(j + 1)) {
                triplets.push((i, j, u.lo[p], u.hi[p]));
            }
        }
    }
    let mut m = UlamMatrix::assemble(u.partition, triplets);
    m.hole = Some(h.clone());
    m.hole_rows = rows;
    m.stochastic = false;
    Ok(m)
}

/// Coefficients of the approximation inequality
/// `‖(L_δⁿ - Lⁿ)g‖₁ ≤ δ(C‖g‖_BV + nD‖g‖₁)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxCoefficients {
    pub c: Interval,
    pub d: Interval,
}

/// `C = (Aλ₁ + 1)A/(1 - λ₁)` and `D = B(Aλ₁ + 2)`.
pub fn approx_coefficients(ly: &LYCertificate) -> Result<ApproxCoefficients> {
    ly.require_contracting()?;
    let (a, l, b) = (ly.a, ly.lambda1, ly.b);
    let al = a * l;
    let c = (al + Interval::ONE) * a;
    let c = c.div(Interval::ONE - l)?;
    let d = b * (al + Interval::point(2.0));
    let clamp = |x: Interval| Interval::new(x.lo().max(0.0), x.hi());
    Ok(ApproxCoefficients {
        c: clamp(c),
        d: clamp(d),
    })
}
