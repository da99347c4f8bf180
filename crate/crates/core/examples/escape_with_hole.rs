//! Escape rate of `x -> 23x/5 mod 1` through the hole `[7/16, 9/16]`.
//!
//! ```text
//! cargo run --release --example escape_with_hole
//! ```

use decaycert::certify::{escape_rate_bound, DecayCertificate};
use decaycert::contraction::estimate_lambda2_escape;
use decaycert::dynamics::{linear_mod1, Hole};
use decaycert::lasota_yorke::{ly_hole, ly_one_step, LYCertificate};
use decaycert::rigor::parse_rational;
use decaycert::ulam::{apply_hole_mask, approx_coefficients, build_ulam};
use decaycert::{Interval, Result};

fn main() -> Result<()> {
    let t = linear_mod1(&parse_rational("23/5").expect("literal"))?;
    let hole = Hole::new(
        parse_rational("7/16").expect("literal"),
        parse_rational("9/16").expect("literal"),
    )?;

    let derived = ly_hole(&ly_one_step(&t)?)?;
    println!(
        "derived open-system inequality: A = {:?}, lambda1 = {:?}, B = {:?}",
        derived.a.hi(),
        derived.lambda1.hi(),
        derived.b.hi()
    );
    let ly = LYCertificate::user_supplied(
        Interval::point(1.0),
        Interval::parse("0.87")?,
        Interval::parse("7.08")?,
    )?;
    let ac = approx_coefficients(&ly)?;

    let u = apply_hole_mask(&build_ulam(&t, 1 << 12)?, &hole)?;
    println!("rows removed by the hole: {}", u.hole_rows().len());

    let cc = estimate_lambda2_escape(&u, 0.5, 64)?;
    let dc = DecayCertificate::from_parts(&ly, &ac, &cc, u.partition().delta())?;
    let rate = escape_rate_bound(&dc)?;
    println!("n1 = {}, lambda2 <= {:?}", cc.n1, cc.lambda2.hi());
    println!("rho in {:?}", dc.rho);
    println!("escape rate >= {:?} per iterate", rate.lo());
    Ok(())
}
