//! Greedy backward elimination: a pool of masters mixed with random decoys
//! is pruned one candidate at a time, and the elbow of the objective curve
//! suggests how many candidates to keep. The second half runs the two-round
//! search over candidates decoded from a trained autoencoder.
//!
//!     cargo run --release --example greedy_selection

use masterkey::greedy::{elbow_index, greedy_eliminate, two_round_search, Objective, TwoRoundConfig, DEFAULT_DROP_FRACTION};
use masterkey::manifold::{train_autoencoder, TrainConfig};
use masterkey::masterkeys::get_masters;
use masterkey::normalize::normalize_bank;
use masterkey::synth::{noisy_shifts, orthogonal_generators, random_filter, rng, ShiftRanges};
use masterkey::FilterBank;

fn main() -> masterkey::Result<()> {
    let masters = get_masters().into_bank();
    let mut rng = rng(3);
    let (targets, _) = noisy_shifts(&masters, 300, 0.01, ShiftRanges::default(), &mut rng)?;
    let decoys: Vec<_> = (0..12).map(|_| random_filter(7, &mut rng)).collect();
    let pool = FilterBank::from_filters(7, masters.filters().cloned().chain(decoys))?;

    let trace = greedy_eliminate(&targets, &pool, &mut Objective::IntrinsicResidual, 1)?;
    println!("removal order (8..19 are decoys): {:?}", trace.removal_order());
    println!("elbow: keep {} candidates", elbow_index(&trace, DEFAULT_DROP_FRACTION)?);

    let generators = orthogonal_generators();
    let (bank, _) = noisy_shifts(&generators, 300, 0.01, ShiftRanges::default(), &mut rng)?;
    let model = train_autoencoder(&normalize_bank(&bank).0, &TrainConfig::default())?.model;
    let config = TwoRoundConfig {
        stop_at: 3,
        ..TwoRoundConfig::default()
    };
    let result = two_round_search(&bank, &model, &config, &mut Objective::IntrinsicResidual)?;
    println!("round one kept codes {:?}", result.round1.survivors.iter().map(|&i| result.round1_codes[i]).collect::<Vec<_>>());
    println!("final codes {:?}", result.survivor_codes);
    println!("final objective {:.4}", result.round2.final_objective());
    Ok(())
}
