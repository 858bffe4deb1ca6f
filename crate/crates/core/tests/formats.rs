use masterkey::filterbank::{load_bank, save_bank, BankFormat};
use masterkey::greedy::{read_trace_csv, write_trace_csv, GreedyTrace, TraceStep};
use masterkey::linfit::{assign_best, read_assignment_csv, write_assignment_csv};
use masterkey::manifold::AutoencoderModel;
use masterkey::masterkeys::get_masters;
use masterkey::{Filter, FilterBank};
use proptest::prelude::*;

fn bank_strategy() -> impl Strategy<Value = FilterBank> {
    (0usize..3, 0usize..12).prop_flat_map(|(half, count)| {
        let k = 2 * half + 1;
        (
            Just(k),
            prop::collection::vec((0u32..4, prop::collection::vec(-1e3f32..1e3, k * k)), count),
            any::<bool>(),
        )
            .prop_map(|(k, rows, implicit)| {
                let mut bank = FilterBank::new(k).unwrap();
                for (i, (layer, values)) in rows.into_iter().enumerate() {
                    let (layer, channel) = if implicit { (0, i as u32) } else { (layer, i as u32 * 3 + layer) };
                    bank.push(layer, channel, Filter::from_f32(k, &values).unwrap()).unwrap();
                }
                bank
            })
    })
}

proptest! {
    #[test]
    fn mkfb_round_trip_is_bitwise(bank in bank_strategy()) {
        let bytes = bank.to_mkfb_bytes();
        let back = FilterBank::from_mkfb_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_mkfb_bytes(), bytes);
        prop_assert_eq!(&back, &bank);
    }

    #[test]
    fn json_and_binary_agree(bank in bank_strategy()) {
        let via_json = FilterBank::from_json_str(&bank.to_json_string()).unwrap();
        prop_assert_eq!(via_json.to_mkfb_bytes(), bank.to_mkfb_bytes());
        prop_assert_eq!(via_json.content_hash(), bank.content_hash());
    }

    #[test]
    fn mkae_round_trip_is_bitwise(seed in any::<u64>()) {
        let bytes = AutoencoderModel::initialize(7, seed).unwrap().to_mkae_bytes();
        prop_assert_eq!(AutoencoderModel::from_mkae_bytes(&bytes).unwrap().to_mkae_bytes(), bytes);
    }

    #[test]
    fn trace_csv_round_trip(objectives in prop::collection::vec(-1e6f64..0.0, 1..10)) {
        let n = objectives.len();
        let trace = GreedyTrace {
            initial_count: n,
            initial_objective: objectives[0],
            steps: objectives[1..]
                .iter()
                .enumerate()
                .map(|(i, &objective)| TraceStep { removed_candidate: n - 1 - i, remaining_count: n - 1 - i, objective })
                .collect(),
            survivors: vec![0],
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        prop_assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), trace);
    }
}

#[test]
fn files_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let bank = get_masters().into_bank();
    let bin = dir.path().join("m.mkfb");
    let json = dir.path().join("m.json");
    save_bank(&bank, &bin, BankFormat::Binary).unwrap();
    save_bank(&load_bank(&bin, BankFormat::Binary).unwrap(), &json, BankFormat::Json).unwrap();
    let bin2 = dir.path().join("m2.mkfb");
    save_bank(&load_bank(&json, BankFormat::Json).unwrap(), &bin2, BankFormat::Binary).unwrap();
    assert_eq!(std::fs::read(&bin).unwrap(), std::fs::read(&bin2).unwrap());
}

#[test]
fn assignment_csv_keeps_nine_digits() {
    let masters = get_masters().into_bank();
    let assignment = assign_best(&masters, &masters).unwrap();
    let mut buf = Vec::new();
    write_assignment_csv(&assignment, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("layer,channel,candidate,a,b,residual\n"));
    let back = read_assignment_csv(buf.as_slice()).unwrap();
    for (x, y) in assignment.entries.iter().zip(&back.entries) {
        assert_eq!(x.fit.candidate_index, y.fit.candidate_index);
        assert!((x.fit.a - y.fit.a).abs() <= 1e-8 * x.fit.a.abs().max(1.0));
        assert!((x.fit.b - y.fit.b).abs() <= 1e-8 * x.fit.b.abs().max(1e-3));
    }
}
