//! Prints the eight bundled master filters, their closest analytic kernel
//! and their pairwise similarities.
//!
//!     cargo run --example master_filters

use masterkey::masterkeys::verify_masters;

fn main() -> masterkey::Result<()> {
    let report = verify_masters()?;
    println!("filter    mean     norm  family     sigma  similarity");
    for s in &report.filters {
        println!(
            "{:>6} {:>8.5} {:>8.5}  {:<9} {:>6.2}  {:>9.4}",
            s.number, s.mean, s.norm, s.best.family, s.best.sigma, s.best.similarity
        );
    }
    println!("\n|cos| between masters:");
    for row in &report.pairwise {
        let cells: Vec<String> = row.iter().map(|c| format!("{:5.2}", c.abs())).collect();
        println!("  {}", cells.join(" "));
    }
    Ok(())
}
