//! Assemble a small Ulam matrix with certified entries, print it, and read
//! the export back.
//!
//! ```text
//! cargo run --example ulam_export
//! ```

use decaycert::dynamics::linear_mod1;
use decaycert::rigor::parse_rational;
use decaycert::ulam::{build_ulam, UlamMatrix};
use decaycert::Result;

fn main() -> Result<()> {
    let t = linear_mod1(&parse_rational("23/5").expect("literal"))?;
    let u = build_ulam(&t, 8)?;

    println!(
        "k = {}, nnz = {}, stochastic = {}",
        u.k(),
        u.nnz(),
        u.is_stochastic()
    );
    for i in 1..=u.k() {
        let sum = u.column_sum(i);
        print!("column {i}:");
        for (j, p) in u.column(i) {
            print!(" {j}:{:.5}", p.mid());
        }
        println!("   (sum in [{:?}, {:?}])", sum.lo(), sum.hi());
    }

    let text = u.export_string();
    println!("\n{}", text.lines().take(6).collect::<Vec<_>>().join("\n"));
    let back = UlamMatrix::parse_export(&text)?;
    println!(
        "...\nround trip identical: {}",
        back.export_string() == text
    );
    Ok(())
}
