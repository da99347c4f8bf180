//! Lasota–Yorke coefficients for the fourth iterate of a Lorenz-like map
//! whose derivative blows up at the critical point.
//!
//! ```text
//! cargo run --release --example lorenz_lasota_yorke
//! ```

use decaycert::dynamics::{build_map, distortion_excess_integral, iterate_map, BranchSpec};
use decaycert::lasota_yorke::ly_lorenz;
use decaycert::rigor::parse_rational;
use decaycert::{parse_expr, Result};

fn main() -> Result<()> {
    let q = |s: &str| parse_rational(s).expect("literal");
    let left = parse_expr("(109/64)*abs(x - 1/2)^(57/64)")?;
    let right = parse_expr("1 - (109/64)*abs(x - 1/2)^(57/64)")?;
    let t = build_map(&[
        BranchSpec::exact(&q("0"), &q("1/2"), left),
        BranchSpec::exact(&q("1/2"), &q("1"), right),
    ])?;
    let f = iterate_map(&t, 4)?;
    println!("T^4: {} branches", f.branches().len());
    println!("inf |F'|  = {:?}", f.inf_abs_deriv());
    println!("min gap   = {:?}", f.min_gap());

    let l = 300.0;
    let (excess, total) = distortion_excess_integral(&f, l)?;
    println!(
        "distortion integral above l = {l}: {excess:?}, sup elsewhere <= {:?}",
        total.hi()
    );

    let ly = ly_lorenz(&f, l)?;
    println!("A       = {:?}", ly.a);
    println!("lambda1 = {:?}", ly.lambda1);
    println!("B       = {:?}", ly.b);
    Ok(())
}
