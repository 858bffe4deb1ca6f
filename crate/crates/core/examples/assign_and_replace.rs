//! Builds a noisy bank of linear shifts of the masters, assigns every
//! filter to its best master and swaps the filters for their fits.
//!
//!     cargo run --example assign_and_replace

use masterkey::linfit::{assign_best, coverage, replace_bank};
use masterkey::masterkeys::get_masters;
use masterkey::synth::{noisy_shifts, rng, ShiftRanges};

fn main() -> masterkey::Result<()> {
    let masters = get_masters().into_bank();
    let mut rng = rng(7);
    let (bank, labels) = noisy_shifts(&masters, 300, 0.01, ShiftRanges::default(), &mut rng)?;

    let assignment = assign_best(&masters, &bank)?;
    let correct = assignment
        .entries
        .iter()
        .zip(&labels)
        .filter(|(e, &g)| e.fit.candidate_index == g)
        .count();
    println!("{correct}/{} filters assigned to their generator", bank.len());
    for t in [0.05, 0.1, 0.2] {
        println!("coverage at residual <= {t}: {:.3}", coverage(&assignment, t));
    }

    let replaced = replace_bank(&bank, &masters, &assignment)?;
    let worst = bank
        .filters()
        .zip(replaced.filters())
        .map(|(x, y)| x.values().iter().zip(y.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    println!("largest replacement error: {worst:.4}");
    Ok(())
}
