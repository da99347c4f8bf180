//! Outward-rounded interval arithmetic, expression parsing and second-order
//! jets.
//!
//! ```text
//! cargo run --example interval_enclosures
//! ```

use decaycert::rigor::{eval_jet, Interval};
use decaycert::{parse_expr, Result};

fn main() -> Result<()> {
    let tenth = Interval::parse("0.1")?;
    let sum = (0..10).fold(Interval::point(0.0), |s, _| s + tenth);
    println!("ten tenths      = [{:?}, {:?}]", sum.lo(), sum.hi());
    println!("contains 1      = {}", sum.contains(1.0));

    let third = Interval::from_i64_ratio(1, 3);
    println!("1/3             = [{:?}, {:?}]", third.lo(), third.hi());
    println!("sqrt(2)         = {:?}", Interval::point(2.0).sqrt()?);

    let lanford = parse_expr("2*x + 0.5*x*(1-x)")?;
    let x = Interval::new(0.25, 0.5);
    println!("T([1/4, 1/2])   = {:?}", lanford.eval(x)?);

    let jet = eval_jet(&lanford, x)?;
    println!("T'  on the cell = {:?}", jet.d1);
    println!("T'' on the cell = {:?}", jet.d2);

    match parse_expr("2*x + ") {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("parse error     : {e}"),
    }
    Ok(())
}
