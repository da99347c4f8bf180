#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use decaycert::Interval;

pub type Q = BigRational;

pub fn q(p: i64, r: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(r))
}

pub fn qf(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

/// `lo ≤ x ≤ hi`, compared exactly.
pub fn contains_q(iv: Interval, x: &Q) -> bool {
    let lo_ok = iv.lo() == f64::NEG_INFINITY || qf(iv.lo()) <= *x;
    let hi_ok = iv.hi() == f64::INFINITY || *x <= qf(iv.hi());
    lo_ok && hi_ok
}

pub fn le_q(x: &Q, bound: f64) -> bool {
    bound == f64::INFINITY || *x <= qf(bound)
}

/// A piecewise-constant function on `[0, 1]` with rational breakpoints.
#[derive(Clone, Debug)]
pub struct Pw {
    pub breaks: Vec<Q>,
    pub vals: Vec<Q>,
}

impl Pw {
    pub fn grid(vals: Vec<Q>) -> Pw {
        let k = vals.len() as i64;
        Pw {
            breaks: (0..=k).map(|j| q(j, k)).collect(),
            vals,
        }
    }

    pub fn at(&self, x: &Q) -> Q {
        let n = self.vals.len();
        let idx = self
            .breaks
            .partition_point(|b| b <= x)
            .saturating_sub(1)
            .min(n - 1);
        self.vals[idx].clone()
    }

    fn merged_breaks(&self, o: &Pw) -> Vec<Q> {
        let mut b: Vec<Q> = self.breaks.iter().chain(&o.breaks).cloned().collect();
        b.sort();
        b.dedup();
        b
    }

    pub fn sub(&self, o: &Pw) -> Pw {
        let breaks = self.merged_breaks(o);
        let vals = breaks
            .windows(2)
            .map(|w| {
                let m = (&w[0] + &w[1]) / q(2, 1);
                self.at(&m) - o.at(&m)
            })
            .collect();
        Pw { breaks, vals }
    }

    pub fn l1(&self) -> Q {
        self.breaks
            .windows(2)
            .zip(&self.vals)
            .map(|(w, v)| (&w[1] - &w[0]) * v.abs())
            .fold(Q::zero(), |s, t| s + t)
    }

    /// Variation of the function extended by zero outside `[0, 1]`.
    pub fn bv(&self) -> Q {
        let inner = self
            .vals
            .windows(2)
            .map(|w| (&w[1] - &w[0]).abs())
            .fold(Q::zero(), |s, t| s + t);
        inner + self.vals[0].abs() + self.vals[self.vals.len() - 1].abs()
    }

    /// Cell averages on the uniform grid with `k` cells.
    pub fn project(&self, k: usize) -> Pw {
        let kq = q(k as i64, 1);
        let vals = (0..k)
            .map(|i| {
                let lo = q(i as i64, k as i64);
                let hi = q(i as i64 + 1, k as i64);
                let mut s = Q::zero();
                for (w, v) in self.breaks.windows(2).zip(&self.vals) {
                    let a = if w[0] > lo { w[0].clone() } else { lo.clone() };
                    let b = if w[1] < hi { w[1].clone() } else { hi.clone() };
                    if a < b {
                        s += (b - a) * v;
                    }
                }
                s * &kq
            })
            .collect();
        Pw::grid(vals)
    }
}

/// `x -> a x mod 1` with rational `a > 1`, handled exactly.
#[derive(Clone, Debug)]
pub struct LinearMod1 {
    pub a: Q,
}

impl LinearMod1 {
    pub fn new(p: i64, r: i64) -> Self {
        LinearMod1 { a: q(p, r) }
    }

    /// `(b, lo, hi)`: on `[lo, hi]` the map is `a x - b`.
    pub fn branches(&self) -> Vec<(Q, Q, Q)> {
        let n = self.a.ceil().to_integer().to_i64().expect("small slope");
        (0..n)
            .map(|b| {
                let bq = q(b, 1);
                let lo = &bq / &self.a;
                let hi = (&bq + Q::one()) / &self.a;
                let hi = if hi > Q::one() { Q::one() } else { hi };
                (bq, lo, hi)
            })
            .collect()
    }

    pub fn transfer(&self, g: &Pw) -> Pw {
        let br = self.branches();
        let mut pts = vec![Q::zero(), Q::one()];
        for (b, lo, hi) in &br {
            pts.push(&self.a * hi - b);
            for p in &g.breaks {
                if p > lo && p < hi {
                    pts.push(&self.a * p - b);
                }
            }
        }
        pts.sort();
        pts.dedup();
        let vals = pts
            .windows(2)
            .map(|w| {
                let m = (&w[0] + &w[1]) / q(2, 1);
                br.iter()
                    .filter(|(b, _, hi)| m < &self.a * hi - b)
                    .map(|(b, _, _)| g.at(&((&m + b) / &self.a)) / &self.a)
                    .fold(Q::zero(), |s, t| s + t)
            })
            .collect();
        Pw { breaks: pts, vals }
    }

    /// `k · |I_i ∩ T⁻¹ I_j|`, 1-based.
    pub fn ulam_entry(&self, k: usize, j: usize, i: usize) -> Q {
        let (k, j, i) = (k as i64, j as i64, i as i64);
        let (ci_lo, ci_hi) = (q(i - 1, k), q(i, k));
        let mut s = Q::zero();
        for (b, lo, hi) in self.branches() {
            let plo = (&b + q(j - 1, k)) / &self.a;
            let phi = (&b + q(j, k)) / &self.a;
            let a = [plo, lo, ci_lo.clone()]
                .into_iter()
                .max()
                .expect("nonempty");
            let c = [phi, hi, ci_hi.clone()]
                .into_iter()
                .min()
                .expect("nonempty");
            if a < c {
                s += c - a;
            }
        }
        s * q(k, 1)
    }

    /// The exact Ulam matrix, `m[j-1][i-1]`.
    pub fn ulam_dense(&self, k: usize) -> Vec<Vec<Q>> {
        (1..=k)
            .map(|j| (1..=k).map(|i| self.ulam_entry(k, j, i)).collect())
            .collect()
    }
}

pub fn dense_apply(m: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(a, _)| !a.is_zero())
                .fold(Q::zero(), |s, (a, x)| s + a * x)
        })
        .collect()
}

/// `Σ|v_i| / k`, the `L¹` norm of cell averages.
pub fn l1_cells(v: &[Q]) -> Q {
    v.iter().fold(Q::zero(), |s, x| s + x.abs()) / q(v.len() as i64, 1)
}

/// An exact second-order jet, for checking enclosures.
#[derive(Clone, Debug, PartialEq)]
pub struct QJet {
    pub val: Q,
    pub d1: Q,
    pub d2: Q,
}

impl QJet {
    pub fn var(x: Q) -> Self {
        QJet {
            val: x,
            d1: Q::one(),
            d2: Q::zero(),
        }
    }
    pub fn cst(c: Q) -> Self {
        QJet {
            val: c,
            d1: Q::zero(),
            d2: Q::zero(),
        }
    }
    pub fn add(&self, o: &QJet) -> Self {
        QJet {
            val: &self.val + &o.val,
            d1: &self.d1 + &o.d1,
            d2: &self.d2 + &o.d2,
        }
    }
    pub fn sub(&self, o: &QJet) -> Self {
        QJet {
            val: &self.val - &o.val,
            d1: &self.d1 - &o.d1,
            d2: &self.d2 - &o.d2,
        }
    }
    pub fn mul(&self, o: &QJet) -> Self {
        QJet {
            val: &self.val * &o.val,
            d1: &self.d1 * &o.val + &self.val * &o.d1,
            d2: &self.d2 * &o.val + q(2, 1) * &self.d1 * &o.d1 + &self.val * &o.d2,
        }
    }
    pub fn recip(&self) -> Self {
        let v = Q::one() / &self.val;
        let d1 = -&self.d1 * &v * &v;
        let d2 = (q(2, 1) * &self.d1 * &self.d1 / &self.val - &self.d2) * &v * &v;
        QJet { val: v, d1, d2 }
    }
    pub fn neg(&self) -> Self {
        QJet {
            val: -&self.val,
            d1: -&self.d1,
            d2: -&self.d2,
        }
    }
    /// `(f∘g)` from the jets of `f` at `g(x)` and of `g` at `x`.
    pub fn chain(f: &QJet, g: &QJet) -> Self {
        QJet {
            val: f.val.clone(),
            d1: &f.d1 * &g.d1,
            d2: &f.d2 * &g.d1 * &g.d1 + &f.d1 * &g.d2,
        }
    }
}

/// A random expression tree that renders to the parser's grammar and can
/// be differentiated exactly.
#[derive(Clone, Debug)]
pub enum Tree {
    X,
    Const(i64, i64),
    Add(Box<Tree>, Box<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    /// `a / (1 + b^2)`, never singular.
    Div(Box<Tree>, Box<Tree>),
    Neg(Box<Tree>),
    Sq(Box<Tree>),
}

impl Tree {
    pub fn render(&self) -> String {
        match self {
            Tree::X => "x".into(),
            Tree::Const(p, r) if *r == 1 => format!("{p}"),
            Tree::Const(p, r) => format!("({p}/{r})"),
            Tree::Add(a, b) => format!("({} + {})", a.render(), b.render()),
            Tree::Sub(a, b) => format!("({} - {})", a.render(), b.render()),
            Tree::Mul(a, b) => format!("({} * {})", a.render(), b.render()),
            Tree::Div(a, b) => format!("({} / (1 + ({})^2))", a.render(), b.render()),
            Tree::Neg(a) => format!("(-{})", a.render()),
            Tree::Sq(a) => format!("({})^2", a.render()),
        }
    }

    pub fn substitute(&self, inner: &Tree) -> Tree {
        let s = |t: &Tree| Box::new(t.substitute(inner));
        match self {
            Tree::X => inner.clone(),
            Tree::Const(p, r) => Tree::Const(*p, *r),
            Tree::Add(a, b) => Tree::Add(s(a), s(b)),
            Tree::Sub(a, b) => Tree::Sub(s(a), s(b)),
            Tree::Mul(a, b) => Tree::Mul(s(a), s(b)),
            Tree::Div(a, b) => Tree::Div(s(a), s(b)),
            Tree::Neg(a) => Tree::Neg(s(a)),
            Tree::Sq(a) => Tree::Sq(s(a)),
        }
    }

    pub fn jet(&self, x: &Q) -> QJet {
        match self {
            Tree::X => QJet::var(x.clone()),
            Tree::Const(p, r) => QJet::cst(q(*p, *r)),
            Tree::Add(a, b) => a.jet(x).add(&b.jet(x)),
            Tree::Sub(a, b) => a.jet(x).sub(&b.jet(x)),
            Tree::Mul(a, b) => a.jet(x).mul(&b.jet(x)),
            Tree::Div(a, b) => {
                let bj = b.jet(x);
                let den = QJet::cst(Q::one()).add(&bj.mul(&bj));
                a.jet(x).mul(&den.recip())
            }
            Tree::Neg(a) => a.jet(x).neg(),
            Tree::Sq(a) => {
                let j = a.jet(x);
                j.mul(&j)
            }
        }
    }

    /// A tree from a stream of choices, at most `depth` levels deep.
    pub fn from_choices(choices: &mut impl Iterator<Item = u32>, depth: u32) -> Tree {
        let c = choices.next().unwrap_or(0);
        if depth == 0 {
            return if c.is_multiple_of(2) {
                Tree::X
            } else {
                let p = (choices.next().unwrap_or(1) % 19) as i64 - 9;
                let r = (choices.next().unwrap_or(1) % 7) as i64 + 1;
                Tree::Const(p, r)
            };
        }
        let mut sub = || Box::new(Tree::from_choices(choices, depth - 1));
        match c % 9 {
            0 => Tree::X,
            1 => Tree::Const((c % 11) as i64 - 5, (c % 4) as i64 + 1),
            2 => Tree::Add(sub(), sub()),
            3 => Tree::Sub(sub(), sub()),
            4 | 5 => Tree::Mul(sub(), sub()),
            6 => Tree::Div(sub(), sub()),
            7 => Tree::Neg(sub()),
            _ => Tree::Sq(sub()),
        }
    }
}

/// `(a, b)·M` overlaps `ρ (a, b)` in both components.
pub fn eigen_identity_holds(m: [f64; 4]) -> bool {
    use decaycert::certify::{left_eigen_ab, spectral_radius_rho, BoundMatrix};
    let [m11, m12, m21, m22] = m.map(Interval::point);
    let bm = BoundMatrix::new(m11, m12, m21, m22).expect("nonnegative");
    let rho = spectral_radius_rho(&bm);
    let Ok((a, b)) = left_eigen_ab(&bm, rho) else {
        return false;
    };
    let first = a * m11 + b * m21;
    let second = a * m12 + b * m22;
    first.overlaps(&(rho * a)) && second.overlaps(&(rho * b)) && (a + b).contains(1.0)
}

/// The dominant eigenvalue of a point sample, computed in floating point,
/// lies in the enclosure for the whole box (up to the sample's own
/// rounding).
pub fn rho_encloses_sample(lo: [f64; 4], hi: [f64; 4], t: [f64; 4]) -> bool {
    use decaycert::certify::{spectral_radius_rho, BoundMatrix};
    let iv: Vec<Interval> = (0..4).map(|i| Interval::new(lo[i], hi[i])).collect();
    let bm = BoundMatrix::new(iv[0], iv[1], iv[2], iv[3]).expect("nonnegative");
    let rho = spectral_radius_rho(&bm);
    let s: Vec<f64> = (0..4).map(|i| lo[i] + t[i] * (hi[i] - lo[i])).collect();
    let d = s[0] - s[3];
    let ev = 0.5 * (s[0] + s[3] + (d * d + 4.0 * s[1] * s[2]).sqrt());
    let slack = 1e-12 * ev.abs().max(1.0);
    rho.lo() - slack <= ev && ev <= rho.hi() + slack
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Compares every entry of the certified Ulam matrix of `x -> (p/r) x mod 1`
/// with the exact measure. Returns `(entries checked, failures)`.
pub fn ulam_oracle_failures(p: i64, r: i64, k: usize) -> (usize, usize) {
    use decaycert::dynamics::linear_mod1;
    use decaycert::ulam::build_ulam;
    let exact = LinearMod1::new(p, r);
    let u = build_ulam(&linear_mod1(&q(p, r)).expect("map"), k).expect("matrix");
    let mut failures = 0;
    for j in 1..=k {
        for i in 1..=k {
            if !contains_q(u.entry(j, i), &exact.ulam_entry(k, j, i)) {
                failures += 1;
            }
        }
    }
    (k * k, failures)
}

/// Checks `‖(L_δⁿ - Lⁿ) g‖₁ ≤ δ (C ‖g‖_BV + n D ‖g‖₁)` exactly for random
/// grid densities `g` under `x -> 23x/5 mod 1`, `n = 1, 2, 3`.
/// Returns `(cases, violations, largest lhs/rhs)`.
pub fn lemp_violations(k: usize, trials: usize, seed: u64) -> (usize, usize, f64) {
    use decaycert::dynamics::linear_mod1;
    use decaycert::lasota_yorke::{ly_iterate, ly_one_step};
    use decaycert::ulam::approx_coefficients;
    use rand::{Rng, SeedableRng};

    let map = LinearMod1::new(23, 5);
    let ly =
        ly_iterate(&ly_one_step(&linear_mod1(&q(23, 5)).expect("map")).expect("ly")).expect("ly");
    let ac = approx_coefficients(&ly).expect("coefficients");
    let delta = 1.0 / k as f64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut cases, mut bad, mut worst) = (0, 0, 0.0f64);
    for _ in 0..trials {
        let g = Pw::grid(
            (0..k)
                .map(|_| q(rng.gen_range(-12..=12), rng.gen_range(1..=4)))
                .collect(),
        );
        let (bv, l1) = (to_f64(&g.bv()), to_f64(&g.l1()));
        let (mut exact, mut ulam) = (g.clone(), g.clone());
        for n in 1..=3usize {
            exact = map.transfer(&exact);
            ulam = map.transfer(&ulam).project(k);
            let lhs = ulam.sub(&exact).l1();
            let rhs = (ac.c * Interval::point(bv) + ac.d * Interval::point(n as f64 * l1))
                * Interval::point(delta);
            let rhs = rhs.hi() * (1.0 + 1e-12);
            cases += 1;
            if !le_q(&lhs, rhs) {
                bad += 1;
            }
            worst = worst.max(to_f64(&lhs) / rhs);
        }
    }
    (cases, bad, worst)
}

// Exact result of interval operation `op`, or None where it is undefined.
fn exact_op(op: u8, x: &Q, y: &Q, n: i64) -> Option<Q> {
    Some(match op {
        0 => x + y,
        1 => x - y,
        2 => x * y,
        3 if !y.is_zero() => x / y,
        4 => x * x,
        5 => (0..n).fold(q(1, 1), |acc, _| acc * x),
        6 => x.abs(),
        7 if !x.is_zero() => q(1, 1) / x,
        _ => return None,
    })
}

pub fn interval_op(op: u8, x: Interval, y: Interval, n: i64) -> Option<Interval> {
    match op {
        0 => Some(x + y),
        1 => Some(x - y),
        2 => Some(x * y),
        3 => x.div(y).ok(),
        4 => Some(x.sqr()),
        5 => x.powi(n).ok(),
        6 => Some(x.abs()),
        7 => x.recip().ok(),
        _ => None,
    }
}

/// Operation `op` (0..8: add, sub, mul, div, sqr, powi, abs, recip) on the
/// enclosures of two rationals contains the exact result.
pub fn interval_case_holds(op: u8, (p1, r1): (i64, i64), (p2, r2): (i64, i64), n: i64) -> bool {
    let (x, y) = (q(p1, r1), q(p2, r2));
    match exact_op(op, &x, &y, n) {
        None => true,
        Some(exact) => interval_op(
            op,
            Interval::from_i64_ratio(p1, r1),
            Interval::from_i64_ratio(p2, r2),
            n,
        )
        .is_some_and(|iv| contains_q(iv, &exact)),
    }
}

fn contains_jet(j: &decaycert::Jet2, exact: &QJet) -> bool {
    contains_q(j.val, &exact.val) && contains_q(j.d1, &exact.d1) && contains_q(j.d2, &exact.d2)
}

/// The jet of the parsed composition `f∘g`, and the chain of the separate
/// jets, both contain the exact jet at `x = p/r`.
pub fn jet_case_holds(f: &Tree, g: &Tree, (p, r): (i64, i64)) -> bool {
    use decaycert::rigor::eval_jet;
    use decaycert::{parse_expr, Jet2};
    let x = q(p, r);
    let xi = Interval::from_i64_ratio(p, r);
    let gj = g.jet(&x);
    let exact = QJet::chain(&f.jet(&gj.val), &gj);
    if exact != f.substitute(g).jet(&x) {
        return false;
    }
    let Ok(composed) = parse_expr(&f.substitute(g).render()) else {
        return false;
    };
    let direct = eval_jet(&composed, xi).expect("nonsingular");
    let inner = eval_jet(&parse_expr(&g.render()).expect("renders"), xi).expect("nonsingular");
    let outer =
        eval_jet(&parse_expr(&f.render()).expect("renders"), inner.val).expect("nonsingular");
    contains_jet(&direct, &exact) && contains_jet(&Jet2::chain(outer, inner), &exact)
}

fn exact_power(m: &[Vec<Q>], v: &[Q], n: usize) -> Vec<Q> {
    (0..n).fold(v.to_vec(), |acc, _| dense_apply(m, &acc))
}

/// Checks the certified mixing `λ₂` of `23x/5 mod 1` against exact
/// rational powers of the true Ulam matrix: every pair of cell indicators
/// and `trials` random zero-average vectors. Returns `(cases, violations)`.
pub fn mixing_dominance_violations(k: usize, trials: usize, seed: u64) -> (usize, usize) {
    use decaycert::contraction::estimate_lambda2_mixing;
    use decaycert::dynamics::linear_mod1;
    use decaycert::ulam::build_ulam;
    use rand::{Rng, SeedableRng};

    let u = build_ulam(&linear_mod1(&q(23, 5)).expect("map"), k).expect("matrix");
    let cert = estimate_lambda2_mixing(&u, 0.5, 64).expect("contraction");
    let exact = LinearMod1::new(23, 5).ulam_dense(k);
    let lambda2 = cert.lambda2.hi();
    let (mut cases, mut bad) = (0, 0);

    let images: Vec<Vec<Q>> = (0..k)
        .map(|i| {
            let mut v = vec![Q::zero(); k];
            v[i] = q(k as i64, 1);
            exact_power(&exact, &v, cert.n1)
        })
        .collect();
    for i in 0..k {
        for j in i + 1..k {
            let d: Vec<Q> = images[i]
                .iter()
                .zip(&images[j])
                .map(|(a, b)| (a - b) / q(2, 1))
                .collect();
            cases += 1;
            if !le_q(&l1_cells(&d), lambda2) {
                bad += 1;
            }
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let raw: Vec<Q> = (0..k).map(|_| q(rng.gen_range(-50..=50), 1)).collect();
        let mean = raw.iter().fold(Q::zero(), |s, x| s + x) / q(k as i64, 1);
        let v: Vec<Q> = raw.iter().map(|x| x - &mean).collect();
        let norm = l1_cells(&v);
        if norm.is_zero() {
            continue;
        }
        cases += 1;
        if !le_q(
            &(l1_cells(&exact_power(&exact, &v, cert.n1)) / norm),
            lambda2,
        ) {
            bad += 1;
        }
    }
    (cases, bad)
}

/// As [`mixing_dominance_violations`] for the open system with hole
/// `[7/16, 9/16]` on arbitrary vectors.
pub fn escape_dominance_violations(k: usize, trials: usize, seed: u64) -> (usize, usize) {
    use decaycert::contraction::estimate_lambda2_escape;
    use decaycert::dynamics::{linear_mod1, Hole};
    use decaycert::ulam::{apply_hole_mask, build_ulam};
    use rand::{Rng, SeedableRng};

    let h = Hole::new(q(7, 16), q(9, 16)).expect("hole");
    let closed = build_ulam(&linear_mod1(&q(23, 5)).expect("map"), k).expect("matrix");
    let u = apply_hole_mask(&closed, &h).expect("aligned");
    let cert = estimate_lambda2_escape(&u, 0.5, 64).expect("contraction");
    let mut exact = LinearMod1::new(23, 5).ulam_dense(k);
    for &j in u.hole_rows() {
        exact[j - 1].iter_mut().for_each(|e| *e = Q::zero());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..trials {
        let v: Vec<Q> = (0..k).map(|_| q(rng.gen_range(-50..=50), 1)).collect();
        let norm = l1_cells(&v);
        if norm.is_zero() {
            continue;
        }
        cases += 1;
        if !le_q(
            &(l1_cells(&exact_power(&exact, &v, cert.n1)) / norm),
            cert.lambda2.hi(),
        ) {
            bad += 1;
        }
    }
    (cases, bad)
}
