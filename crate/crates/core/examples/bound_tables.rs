//! From published coefficients to the bound matrix, its leading eigenvalue,
//! the balancing weights and the power tables, with no matrix assembly.
//!
//! The inputs are those of the Lanford map at `δ = 2⁻²⁰`, `n₁ = 18`,
//! `λ₂ < 0.5`.
//!
//! ```text
//! cargo run --example bound_tables
//! ```

use decaycert::certify::{assemble_m, power_table, DecayCertificate, Mode};
use decaycert::contraction::{ContractionCertificate, Space};
use decaycert::lasota_yorke::LYCertificate;
use decaycert::ulam::approx_coefficients;
use decaycert::{Interval, Result};

fn main() -> Result<()> {
    let ly = LYCertificate::user_supplied(
        Interval::point(1.0),
        Interval::parse("0.32")?,
        Interval::parse("30.6")?,
    )?;
    let ac = approx_coefficients(&ly)?;
    println!("C = {:?}", ac.c);
    println!("D = {:?}", ac.d);

    let cc = ContractionCertificate {
        n1: 18,
        lambda2: Interval::point(0.5),
        space: Space::ZeroAverage,
        basis_count: 0,
        trace: Vec::new(),
    };
    let delta = Interval::from_i64_ratio(1, 1 << 20);
    let m = assemble_m(&ly, &ac, &cc, delta)?;
    let dc = DecayCertificate::new(m, cc.n1, Mode::Mixing)?;
    println!("rho = {:?}", dc.rho);
    println!("a   = {:?}", dc.a);
    println!("b   = {:?}", dc.b);
    println!("strong constant A/a + B/b = {:?}", dc.strong_constant(&ly)?);
    println!("weak constant   B/b       = {:?}", dc.weak_constant(&ly)?);

    println!(
        "\n{:>5} {:>12} {:>12} {:>12} {:>12}",
        "h", "strong c1", "strong c2", "weak c1", "weak c2"
    );
    for r in power_table(&m, cc.n1, &[2, 4, 6, 8]) {
        println!(
            "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.h,
            r.strong[0].hi(),
            r.strong[1].hi(),
            r.weak[0].hi(),
            r.weak[1].hi()
        );
    }
    Ok(())
}
