//! Empirical properties of the pipeline on synthetic data.

use masterkey::analytic::{fit_family, Family, SigmaGrid, DOG_RATIOS};
use masterkey::greedy::{greedy_eliminate, two_round_search, Objective, TwoRoundConfig};
use masterkey::linfit::{assign_best, coverage, fit_pair, replace_bank};
use masterkey::manifold::{decode, encode, reconstruction_mse, train_autoencoder, AutoencoderModel, TrainConfig};
use masterkey::masterkeys::get_masters;
use masterkey::normalize::{normalize_bank, normalize_filter, NormalizedFilter};
use masterkey::synth::{noisy_shifts, orthogonal_generators, random_filter, rng, ShiftRanges};
use masterkey::{Filter, FilterBank};

fn generator_model() -> (AutoencoderModel, Vec<NormalizedFilter>) {
    let (bank, _) = noisy_shifts(&orthogonal_generators(), 300, 0.01, ShiftRanges::default(), &mut rng(42)).unwrap();
    let (filters, _) = normalize_bank(&bank);
    let model = train_autoencoder(&filters, &TrainConfig::default()).unwrap().model;
    (model, filters)
}

#[test]
fn single_direction_is_learned_exactly() {
    let direction = normalize_filter(&orthogonal_generators().filter(2).clone()).unwrap();
    let filters = vec![direction; 100];
    let config = TrainConfig {
        epochs: 200,
        ..TrainConfig::default()
    };
    let model = train_autoencoder(&filters, &config).unwrap().model;
    assert!(reconstruction_mse(&model, &filters).unwrap() <= 1e-3);
}

#[test]
fn round_trip_through_the_code_is_close() {
    let (model, filters) = generator_model();
    let mut worst = 0.0f64;
    for f in &filters {
        let back = decode(&model, encode(&model, f).unwrap()).unwrap();
        for (x, y) in f.values().iter().zip(back.values()) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst <= 0.1, "worst per-element error {worst}");
}

#[test]
fn two_round_survivors_match_generators() {
    let (model, _) = generator_model();
    let generators = orthogonal_generators();
    let (targets, _) = noisy_shifts(&generators, 300, 0.01, ShiftRanges::default(), &mut rng(43)).unwrap();
    let config = TwoRoundConfig {
        round1_n: 10,
        keep_top: 5,
        stop_at: 3,
        ..TwoRoundConfig::default()
    };
    let result = two_round_search(&targets, &model, &config, &mut Objective::IntrinsicResidual).unwrap();
    assert_eq!(result.survivors.len(), 3);
    let unit: Vec<Filter> = generators.filters().map(|g| normalize_filter(g).unwrap().to_filter()).collect();
    let mut matched = Vec::new();
    for s in result.survivors.filters() {
        let (best, residual) = unit
            .iter()
            .enumerate()
            .map(|(i, g)| (i, fit_pair(s, g).unwrap().residual))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(residual <= 0.05, "survivor fits generator {best} with residual {residual}");
        matched.push(best);
    }
    matched.sort();
    assert_eq!(matched, [0, 1, 2]);
}

#[test]
fn masters_cover_their_noisy_shifts() {
    let masters = get_masters().into_bank();
    let (bank, _) = noisy_shifts(&masters, 300, 0.01, ShiftRanges::default(), &mut rng(9)).unwrap();
    let assignment = assign_best(&masters, &bank).unwrap();
    assert!(coverage(&assignment, 3.0 * 0.01 * 7.0) >= 0.99);
}

#[test]
fn replacement_error_is_the_residual() {
    let masters = get_masters().into_bank();
    let (bank, _) = noisy_shifts(&masters, 120, 0.05, ShiftRanges::default(), &mut rng(10)).unwrap();
    let assignment = assign_best(&masters, &bank).unwrap();
    let replaced = replace_bank(&bank, &masters, &assignment).unwrap();
    for ((x, y), e) in bank.filters().zip(replaced.filters()).zip(&assignment.entries) {
        let err = x.values().iter().zip(y.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((err - e.fit.residual).abs() <= 1e-6, "{err} vs {}", e.fit.residual);
    }
}

#[test]
fn master_eight_scale_is_frozen() {
    let fit = fit_family(get_masters().get(8), Family::Gaussian, &SigmaGrid::default(), &DOG_RATIOS).unwrap();
    assert_eq!(fit.sigma, 0.55);
}

#[test]
fn transposed_gradient_masters() {
    let masters = get_masters();
    let cos = masterkey::masterkeys::centered_similarity;
    let (f5, f6) = (masters.get(5), masters.get(6));
    let direct = cos(f5, f6).abs();
    assert!(direct < cos(&f5.transpose(), f6).abs());
    assert!(direct < cos(f5, &f6.transpose()).abs());
}

#[test]
fn intrinsic_curve_is_monotone_and_order_free() {
    let mut rng = rng(12);
    let masters = get_masters().into_bank();
    let (targets, _) = noisy_shifts(&masters, 80, 0.02, ShiftRanges::default(), &mut rng).unwrap();
    let decoys: Vec<Filter> = (0..4).map(|_| random_filter(7, &mut rng)).collect();
    let pool = FilterBank::from_filters(7, masters.filters().cloned().chain(decoys)).unwrap();
    let trace = greedy_eliminate(&targets, &pool, &mut Objective::IntrinsicResidual, 1).unwrap();
    let mut previous = trace.initial_objective;
    for s in &trace.steps {
        assert!(s.objective <= previous + 1e-12);
        previous = s.objective;
    }

    // Reversing the pool can only reorder exact ties (unused decoys), so
    // the curve is unchanged.
    let n = pool.len();
    let reversed = pool.subset(&(0..n).rev().collect::<Vec<_>>()).unwrap();
    let mirrored = greedy_eliminate(&targets, &reversed, &mut Objective::IntrinsicResidual, 1).unwrap();
    for (a, b) in trace.steps.iter().zip(&mirrored.steps) {
        assert!((a.objective - b.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
    }
    assert_eq!(n - 1 - mirrored.survivors[0], trace.survivors[0]);
}
