//! Approximate invariant density of `x -> 23x/5 mod 1` with a certified
//! `L¹` error bound.
//!
//! ```text
//! cargo run --release --example invariant_density > density.csv
//! ```
//!
//! The density is written to stdout as `x,f` pairs at cell midpoints; the
//! error budget goes to stderr.

use decaycert::certify::{invariant_density_with_error, DecayCertificate};
use decaycert::contraction::estimate_lambda2_mixing;
use decaycert::dynamics::linear_mod1;
use decaycert::lasota_yorke::{ly_iterate, ly_one_step};
use decaycert::rigor::parse_rational;
use decaycert::ulam::{approx_coefficients, build_ulam};
use decaycert::Result;

fn main() -> Result<()> {
    let t = linear_mod1(&parse_rational("23/5").expect("literal"))?;
    let ly = ly_iterate(&ly_one_step(&t)?)?;
    let ac = approx_coefficients(&ly)?;

    let u = build_ulam(&t, 1 << 14)?;
    let cc = estimate_lambda2_mixing(&u, 0.5, 64)?;
    let dc = DecayCertificate::from_parts(&ly, &ac, &cc, u.partition().delta())?;
    let d = invariant_density_with_error(&u, &dc, &ly, &ac, 4000)?;

    let k = u.k();
    println!("x,f");
    for (i, v) in d.f_delta.values.iter().enumerate() {
        println!("{:?},{:?}", (i as f64 + 0.5) / k as f64, v);
    }
    let t = &d.terms;
    eprintln!("rho in {:?}, n1 = {}", dc.rho, dc.n1);
    eprintln!("||f - f_delta||_1 <= {:?}", d.l1_error.hi());
    eprintln!(
        "  N = {}: discretisation {:.3e}, fixity {:.3e}, decay {:.3e}, mass {:.3e}",
        t.steps, t.discretization, t.fixity, t.decay, t.mass
    );
    Ok(())
}
