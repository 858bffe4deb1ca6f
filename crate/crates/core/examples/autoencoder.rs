//! Trains the one-dimensional autoencoder on a synthetic bank and samples
//! new candidate filters along the learned curve.
//!
//!     cargo run --release --example autoencoder

use masterkey::manifold::{encode, reconstruction_mse, sample_uniform, train_autoencoder, TrainConfig};
use masterkey::normalize::normalize_bank;
use masterkey::synth::{noisy_shifts, orthogonal_generators, rng, ShiftRanges};

fn main() -> masterkey::Result<()> {
    let generators = orthogonal_generators();
    let (bank, labels) = noisy_shifts(&generators, 300, 0.01, ShiftRanges { allow_negative: false, ..ShiftRanges::default() }, &mut rng(1))?;
    let (filters, _) = normalize_bank(&bank);

    let outcome = train_autoencoder(&filters, &TrainConfig::default())?;
    let history = &outcome.loss_history;
    println!("loss: epoch 1 {:.5}, epoch {} {:.6}", history[0], history.len(), history[history.len() - 1]);
    println!("reconstruction mse: {:.6}", reconstruction_mse(&outcome.model, &filters)?);

    for g in 0..generators.len() {
        let codes: Vec<f64> = filters
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == g)
            .map(|(f, _)| encode(&outcome.model, f))
            .collect::<Result<_, _>>()?;
        let (lo, hi) = codes.iter().fold((1.0f64, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        println!("generator {g}: codes in [{lo:.3}, {hi:.3}]");
    }

    let samples = sample_uniform(&outcome.model, 11)?;
    println!("sampled {} candidate filters", samples.len());
    Ok(())
}
