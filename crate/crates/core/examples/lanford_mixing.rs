//! End-to-end decay of correlations for the second iterate of the Lanford
//! map `T(x) = 2x + x(1-x)/2 mod 1`.
//!
//! ```text
//! cargo run --release --example lanford_mixing -- 11
//! ```
//!
//! The optional argument is `log₂(1/δ)` (default 11).

use decaycert::certify::{power_table, DecayCertificate};
use decaycert::contraction::estimate_lambda2_mixing;
use decaycert::dynamics::{iterate_map, mod_one};
use decaycert::lasota_yorke::LYCertificate;
use decaycert::ulam::{approx_coefficients, build_ulam};
use decaycert::{parse_expr, Interval, Result};

fn main() -> Result<()> {
    let e: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(11);
    let t = mod_one(&parse_expr("2*x + 0.5*x*(1-x)")?)?;
    let f = iterate_map(&t, 2)?;
    println!(
        "F = T^2 has {} branches, inf |F'| = {:?}",
        f.branches().len(),
        f.inf_abs_deriv()
    );

    let ly = LYCertificate::user_supplied(
        Interval::point(1.0),
        Interval::parse("0.32")?,
        Interval::parse("30.6")?,
    )?;
    let ac = approx_coefficients(&ly)?;

    let u = build_ulam(&f, 1 << e)?;
    println!("Ulam matrix: k = {}, nnz = {}", u.k(), u.nnz());

    let cc = estimate_lambda2_mixing(&u, 0.5, 64)?;
    println!(
        "coarse contraction: n1 = {}, lambda2 <= {:?}",
        cc.n1,
        cc.lambda2.hi()
    );

    let dc = DecayCertificate::from_parts(&ly, &ac, &cc, u.partition().delta())?;
    println!("rho in {:?}  conclusive: {}", dc.rho, dc.is_conclusive());
    println!(
        "||L^k g||_BV <= {:.6e} * {:.6}^floor(k/{}) ||g||_BV",
        dc.strong_constant(&ly)?.hi(),
        dc.rho.hi(),
        dc.n1
    );
    for r in power_table(&dc.m, dc.n1, &[1, 2, 4]) {
        println!(
            "h = {:>4}: strong row {:.3e} {:.3e}",
            r.h,
            r.strong[0].hi(),
            r.strong[1].hi()
        );
    }
    Ok(())
}
