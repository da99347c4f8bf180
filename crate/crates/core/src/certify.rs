//! The 2×2 bound matrix `M`, its leading eigenvalue `ρ` and left
//! eigenvector `(a, b)`, and the decay, escape and density bounds built
//! from them.

use serde::Serialize;

use crate::contraction::{
    l1_distance_upper, l1_upper, reference_fixed_point, rigorous_matvec, ContractionCertificate,
    RigorousVector, Space,
};
use crate::error::{Error, Result};
use crate::lasota_yorke::LYCertificate;
use crate::rigor::round::{add_up, div_down, div_up, ln_down, ln_up, mul_up, sub_up};
use crate::rigor::Interval;
use crate::ulam::{ApproxCoefficients, UlamMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Mixing,
    Escape,
}

/// `M = [[Aλ₁^{n₁}, B], [δC, δn₁D + λ₂]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundMatrix {
    pub m11: Interval,
    pub m12: Interval,
    pub m21: Interval,
    pub m22: Interval,
}

type Mat = [[Interval; 2]; 2];

fn nonneg(x: Interval) -> Interval {
    Interval::new(x.lo().max(0.0), x.hi().max(0.0))
}

impl BoundMatrix {
    pub fn new(m11: Interval, m12: Interval, m21: Interval, m22: Interval) -> Result<Self> {
        for (name, v) in [("m11", m11), ("m12", m12), ("m21", m21), ("m22", m22)] {
            if v.hi() < 0.0 || !v.is_bounded() {
                return Err(Error::Config(format!(
                    "{name} = {v} must be finite and nonnegative"
                )));
            }
        }
        Ok(BoundMatrix {
            m11: nonneg(m11),
            m12: nonneg(m12),
            m21: nonneg(m21),
            m22: nonneg(m22),
        })
    }

    pub fn as_array(&self) -> Mat {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    fn corner(&self, upper: bool) -> [f64; 4] {
        let e = |x: Interval| if upper { x.hi() } else { x.lo() };
        [e(self.m11), e(self.m12), e(self.m21), e(self.m22)]
    }
}

/// Assembles `M` from the inequality coefficients, the approximation
/// coefficients, the contraction certificate and the cell size.
pub fn assemble_m(
    ly: &LYCertificate,
    ac: &ApproxCoefficients,
    cc: &ContractionCertificate,
    delta: Interval,
) -> Result<BoundMatrix> {
    ly.require_contracting()?;
    if cc.n1 == 0 {
        return Err(Error::Config("n1 must be at least 1".into()));
    }
    let n1 = Interval::point(cc.n1 as f64);
    let m11 = ly.a * nonneg(ly.lambda1).powi(cc.n1 as i64)?;
    let m21 = delta * ac.c;
    let m22 = delta * n1 * ac.d + cc.lambda2;
    BoundMatrix::new(m11, ly.b, m21, m22)
}

// ρ at one corner of the entry box, enclosed.
fn rho_at(m: [f64; 4]) -> Interval {
    let [m11, m12, m21, m22] = m.map(Interval::point);
    let x = m11 - m22;
    let disc = x.sqr() + Interval::point(4.0) * m12 * m21;
    let s = disc.sqrt().expect("discriminant is a sum of squares");
    (m11 + m22 + s).scale(0.5)
}

/// Leading eigenvalue
/// `ρ = (m11 + m22 + √((m11 - m22)² + 4 m12 m21))/2`.
///
/// The Perron root of a nonnegative matrix increases with every entry, so
/// the enclosure is taken between the lowest and the highest corner.
pub fn spectral_radius_rho(m: &BoundMatrix) -> Interval {
    let lo = rho_at(m.corner(false)).lo();
    let hi = rho_at(m.corner(true)).hi();
    Interval::new(lo, hi)
}

// X + √(X² + 4 m12 m21) at X = m11 - m22, increasing in X and in the product.
fn balance(x: Interval, prod: Interval) -> Interval {
    let s = (x.sqr() + Interval::point(4.0) * prod)
        .sqrt()
        .expect("nonnegative discriminant");
    x + s
}

/// Left eigenvector `(a, b)` of `M` for `ρ`, normalised by `a + b = 1`:
/// `a = t/(t + 2 m12)`, `b = 2 m12/(t + 2 m12)` with
/// `t = m11 - m22 + √((m11 - m22)² + 4 m12 m21)`.
pub fn left_eigen_ab(m: &BoundMatrix, rho: Interval) -> Result<(Interval, Interval)> {
    let t_lo = balance(
        Interval::point(m.m11.lo()) - Interval::point(m.m22.hi()),
        Interval::point(m.m12.lo()) * Interval::point(m.m21.lo()),
    )
    .lo();
    let t_hi = balance(
        Interval::point(m.m11.hi()) - Interval::point(m.m22.lo()),
        Interval::point(m.m12.hi()) * Interval::point(m.m21.hi()),
    )
    .hi();
    let t = Interval::new(t_lo.max(0.0), t_hi.max(0.0));
    let two_b = m.m12.scale(2.0);
    let den = t + two_b;
    if den.contains_zero() {
        return Err(Error::Precision(format!(
            "denominator {den} of the eigenvector contains 0"
        )));
    }
    // a is increasing in t and decreasing in m12; b the other way round
    let a = Interval::new(
        (Interval::point(t.lo()).div(Interval::point(t.lo()) + Interval::point(two_b.hi()))?).lo(),
        (Interval::point(t.hi()).div(Interval::point(t.hi()) + Interval::point(two_b.lo()))?).hi(),
    );
    let b = Interval::new(
        (Interval::point(two_b.lo()).div(Interval::point(t.hi()) + Interval::point(two_b.lo()))?)
            .lo(),
        (Interval::point(two_b.hi()).div(Interval::point(t.lo()) + Interval::point(two_b.hi()))?)
            .hi(),
    );
    // second enclosure from the eigen relation a m12 = b (ρ - m22)
    let gap = rho - m.m22;
    let via_rho = gap
        .div(gap + m.m12)
        .ok()
        .filter(|_| gap.lo() >= 0.0)
        .and_then(|x| x.intersect(&a));
    let a = via_rho.unwrap_or(a);
    let b = (Interval::ONE - a).intersect(&b).unwrap_or(b);
    Ok((a, b))
}

/// One row of the finite-time table: `M^i` bounds
/// `‖L^{h} g‖_s ≤ strong[0] ‖g‖_s + strong[1] ‖g‖_w` and the same for the
/// weak norm, with `h = i n₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    pub i: usize,
    pub h: usize,
    pub strong: [Interval; 2],
    pub weak: [Interval; 2],
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let e = |r: usize, c: usize| a[r][0] * b[0][c] + a[r][1] * b[1][c];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn mat_pow(m: &Mat, mut e: usize) -> Mat {
    let mut acc = [
        [Interval::ONE, Interval::ZERO],
        [Interval::ZERO, Interval::ONE],
    ];
    let mut base = *m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
        }
    }
    acc
}

/// Rows of `M^i` for each requested `i`.
pub fn power_table(m: &BoundMatrix, n1: usize, steps: &[usize]) -> Vec<TableRow> {
    let a = m.as_array();
    steps
        .iter()
        .map(|&i| {
            let p = mat_pow(&a, i);
            TableRow {
                i,
                h: i * n1,
                strong: [nonneg(p[0][0]), nonneg(p[0][1])],
                weak: [nonneg(p[1][0]), nonneg(p[1][1])],
            }
        })
        .collect()
}

/// Everything derived from `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayCertificate {
    pub m: BoundMatrix,
    pub rho: Interval,
    pub a: Interval,
    pub b: Interval,
    pub n1: usize,
    pub mode: Mode,
}

impl DecayCertificate {
    pub fn new(m: BoundMatrix, n1: usize, mode: Mode) -> Result<Self> {
        let rho = spectral_radius_rho(&m);
        let (a, b) = left_eigen_ab(&m, rho)?;
        Ok(DecayCertificate {
            m,
            rho,
            a,
            b,
            n1,
            mode,
        })
    }

    pub fn from_parts(
        ly: &LYCertificate,
        ac: &ApproxCoefficients,
        cc: &ContractionCertificate,
        delta: Interval,
    ) -> Result<Self> {
        let mode = match cc.space {
            Space::ZeroAverage => Mode::Mixing,
            Space::Whole => Mode::Escape,
        };
        DecayCertificate::new(assemble_m(ly, ac, cc, delta)?, cc.n1, mode)
    }

    /// `ρ < 1` holds for the whole enclosure.
    pub fn is_conclusive(&self) -> bool {
        self.rho.hi() < 1.0
    }

    /// `A/a + B/b`.
    pub fn strong_constant(&self, ly: &LYCertificate) -> Result<Interval> {
        Ok(ly.a.div(self.a)? + self.weak_constant(ly)?)
    }

    /// `B/b`.
    pub fn weak_constant(&self, ly: &LYCertificate) -> Result<Interval> {
        ly.b.div(self.b)
    }

    /// `ρ^{⌊k/n₁⌋}`.
    pub fn rate_factor(&self, k: usize) -> Result<Interval> {
        nonneg(self.rho).powi((k / self.n1) as i64)
    }
}

/// Bounds on `‖L^k g‖_s / ‖g‖_s` and `‖L^k g‖_w / ‖g‖_s`.
pub fn decay_bounds(
    dc: &DecayCertificate,
    ly: &LYCertificate,
    k: usize,
) -> Result<(Interval, Interval)> {
    let r = dc.rate_factor(k)?;
    Ok((dc.strong_constant(ly)? * r, dc.weak_constant(ly)? * r))
}

/// Enclosure of `-ln(ρ)/n₁`, whose lower end is the certified lower bound
/// on the escape rate per application of the operator. Inconclusive
/// certificates give 0.
pub fn escape_rate_bound(dc: &DecayCertificate) -> Result<Interval> {
    if dc.mode != Mode::Escape {
        return Err(Error::Config(
            "the escape rate needs an escape certificate".into(),
        ));
    }
    let n = dc.n1 as f64;
    let lo = if dc.rho.hi() >= 1.0 {
        0.0
    } else {
        div_down(-ln_up(dc.rho.hi()), n).max(0.0)
    };
    let hi = if dc.rho.lo() <= 0.0 {
        f64::INFINITY
    } else {
        div_up(-ln_down(dc.rho.lo()), n).max(lo)
    };
    Ok(Interval::new(lo, hi))
}

/// The strong norm `Σ|f_{i+1} - f_i| + |f_1| + |f_k|` of a vector of cell
/// averages, rounded up.
pub fn bv_norm_upper(f: &[f64]) -> f64 {
    let (Some(first), Some(last)) = (f.first(), f.last()) else {
        return 0.0;
    };
    let var = f.windows(2).fold(0.0, |s, w| {
        let d = if w[1] >= w[0] {
            sub_up(w[1], w[0])
        } else {
            sub_up(w[0], w[1])
        };
        add_up(s, d)
    });
    add_up(add_up(var, first.abs()), last.abs())
}

/// The separate contributions to the density error, all upper bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityTerms {
    /// Steps `N` of the decomposition.
    pub steps: usize,
    /// `δ(C‖f_δ‖_BV + N D‖f_δ‖₁)`.
    pub discretization: f64,
    /// `N ‖L_δ f_δ - f_δ‖₁`.
    pub fixity: f64,
    /// `(B/b) ρ^{⌊N/n₁⌋} (‖f_δ‖_BV + m B)`.
    pub decay: f64,
    /// `|m - 1|` for the mass `m` of `f_δ`.
    pub mass: f64,
    pub near_fixity: f64,
    pub bv_f_delta: f64,
    pub bv_f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityResult {
    pub f_delta: RigorousVector,
    pub l1_error: Interval,
    pub terms: DensityTerms,
}

/// Approximates the invariant density by the fixed point `f_δ` of the
/// Ulam matrix and bounds `‖f - f_δ‖₁` by
/// `‖(L^N - L_δ^N) f_δ‖₁ + ‖L_δ^N f_δ - f_δ‖₁ + ‖L^N (f_δ - f)‖₁`,
/// minimised over multiples `N` of `n₁` up to `max_steps`.
///
/// The invariant density satisfies `‖f‖_BV ≤ B`, the limit of the
/// inequality `‖L^n f‖_BV ≤ Aλ₁ⁿ‖f‖_BV + B‖f‖₁`.
pub fn invariant_density_with_error(
    u: &UlamMatrix,
    dc: &DecayCertificate,
    ly: &LYCertificate,
    ac: &ApproxCoefficients,
    max_steps: usize,
) -> Result<DensityResult> {
    if dc.mode != Mode::Mixing || !u.is_stochastic() {
        return Err(Error::Config(
            "the invariant density needs a closed mixing certificate".into(),
        ));
    }
    if !dc.is_conclusive() {
        return Err(Error::Config(format!("rho = {} is not below 1", dc.rho)));
    }
    let (f, iters) = reference_fixed_point(u, 1_000_000);
    if iters >= 1_000_000 {
        return Err(Error::Precision("power iteration did not converge".into()));
    }
    let f_delta = RigorousVector::exact(f);
    let image = rigorous_matvec(u, &f_delta);
    let near_fixity = add_up(
        l1_distance_upper(&image.values, &f_delta.values),
        image.err_l1,
    );
    let mass = f_delta.mass();
    let bv_fd = bv_norm_upper(&f_delta.values);
    let l1_fd = l1_upper(&f_delta.values);
    let bv_f = ly.b.hi();
    let mass_gap = sub_up(mass.hi(), 1.0).max(sub_up(1.0, mass.lo())).max(0.0);
    let delta = u.partition().delta().hi();
    let weak = dc.weak_constant(ly)?.hi();
    let spread = add_up(bv_fd, mul_up(mass.hi(), bv_f));

    let mut best: Option<DensityTerms> = None;
    let total =
        |t: &DensityTerms| add_up(add_up(add_up(t.discretization, t.fixity), t.decay), t.mass);
    for j in 0..=max_steps / dc.n1 {
        let steps = j * dc.n1;
        let nf = steps as f64;
        let discretization = mul_up(
            delta,
            add_up(
                mul_up(ac.c.hi(), bv_fd),
                mul_up(mul_up(nf, ac.d.hi()), l1_fd),
            ),
        );
        let decay = mul_up(mul_up(weak, dc.rate_factor(steps)?.hi()), spread);
        let t = DensityTerms {
            steps,
            discretization,
            fixity: mul_up(nf, near_fixity),
            decay,
            mass: mass_gap,
            near_fixity,
            bv_f_delta: bv_fd,
            bv_f,
        };
        if best.as_ref().is_none_or(|b| total(&t) < total(b)) {
            best = Some(t);
        }
    }
    let terms = best.expect("at least N = 0 is tried");
    Ok(DensityResult {
        f_delta,
        l1_error: Interval::new(0.0, total(&terms)),
        terms,
    })
}
