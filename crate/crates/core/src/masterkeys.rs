//! The eight 7x7 master filters as an embedded dataset.
//!
//! Filters are numbered 1 to 8 in documentation and reports. Inside banks
//! exported from here they sit at layer 0 with channel `index - 1`.

use std::path::Path;

use crate::analytic::{master_report, FamilyFit};
use crate::error::Result;
use crate::filterbank::{save_bank, BankFormat, Filter, FilterBank};
use crate::normalize::normalize_values;

pub const MASTER_K: usize = 7;
pub const MASTER_COUNT: usize = 8;

/// Values exactly as tabulated, two decimals, row-major.
#[rustfmt::skip]
pub const MASTER_VALUES: [[f32; 49]; MASTER_COUNT] = [
    // Filter 1
    [
        -0.01, -0.02, -0.01, -0.00, -0.01, -0.02, -0.01,
        -0.02, -0.02, -0.00, 0.00, -0.01, -0.02, -0.01,
        -0.01, -0.02, 0.01, -0.11, -0.00, -0.01, -0.01,
        -0.03, -0.05, -0.09, -0.23, -0.06, -0.05, -0.03,
        -0.03, -0.06, 0.02, 0.94, 0.04, -0.06, -0.03,
        -0.02, -0.02, 0.00, 0.12, 0.01, -0.02, -0.02,
        -0.02, -0.02, 0.01, 0.09, 0.00, -0.02, -0.02,
    ],
    // Filter 2
    [
        -0.00, -0.01, -0.02, -0.05, -0.04, -0.02, -0.00,
        -0.02, -0.02, -0.02, -0.04, -0.03, -0.02, -0.03,
        -0.02, -0.00, -0.01, -0.06, 0.06, -0.01, -0.01,
        0.00, 0.04, -0.06, -0.46, 0.85, 0.13, 0.07,
        0.00, 0.01, 0.01, -0.12, 0.07, 0.02, 0.01,
        -0.01, -0.01, -0.01, -0.05, -0.03, -0.01, -0.01,
        0.00, -0.01, -0.01, -0.04, 0.00, -0.01, 0.00,
    ],
    // Filter 3
    [
        -0.03, -0.02, -0.02, 0.07, -0.02, -0.03, -0.03,
        -0.03, -0.02, 0.01, 0.14, 0.01, -0.02, -0.03,
        -0.03, -0.04, 0.10, 0.88, 0.11, -0.05, -0.04,
        -0.02, -0.02, -0.08, -0.36, -0.09, -0.03, -0.03,
        -0.02, -0.00, -0.05, -0.14, -0.05, -0.01, -0.02,
        -0.01, -0.01, 0.01, 0.01, 0.00, -0.01, -0.01,
        -0.01, 0.00, 0.00, 0.01, 0.01, 0.00, -0.00,
    ],
    // Filter 4
    [
        -0.04, -0.03, -0.02, -0.01, 0.00, -0.00, -0.01,
        -0.04, -0.01, -0.04, -0.01, 0.03, 0.01, -0.01,
        -0.01, 0.00, 0.03, -0.05, 0.00, 0.02, 0.01,
        0.04, 0.08, 0.87, -0.35, -0.30, -0.00, -0.00,
        -0.02, 0.00, 0.05, -0.01, -0.05, -0.00, -0.00,
        -0.03, -0.01, -0.01, 0.00, 0.00, 0.00, -0.02,
        -0.04, -0.02, -0.01, -0.01, -0.00, -0.00, -0.00,
    ],
    // Filter 5
    [
        0.05, 0.02, 0.04, 0.01, -0.04, -0.02, -0.07,
        0.04, 0.03, 0.05, 0.02, -0.02, -0.01, -0.07,
        0.10, 0.09, 0.19, 0.02, -0.17, -0.06, -0.09,
        0.20, 0.20, 0.54, -0.03, -0.53, -0.20, -0.22,
        0.09, 0.08, 0.19, 0.01, -0.22, -0.09, -0.11,
        0.04, 0.03, 0.07, 0.01, -0.04, -0.02, -0.07,
        0.05, 0.02, 0.05, -0.00, -0.04, -0.03, -0.07,
    ],
    // Filter 6
    [
        -0.07, -0.05, -0.08, -0.16, -0.07, -0.04, -0.06,
        -0.03, -0.01, -0.06, -0.14, -0.04, 0.00, -0.03,
        -0.03, -0.04, -0.22, -0.47, -0.22, -0.03, -0.04,
        -0.01, -0.01, 0.01, 0.02, 0.01, -0.00, 0.00,
        0.02, 0.03, 0.20, 0.68, 0.20, 0.02, 0.03,
        -0.00, 0.02, 0.06, 0.16, 0.05, 0.01, 0.01,
        0.02, 0.03, 0.05, 0.14, 0.06, 0.03, 0.04,
    ],
    // Filter 7
    [
        -0.01, -0.01, -0.01, -0.02, -0.02, -0.00, -0.01,
        -0.01, -0.00, -0.02, -0.05, -0.01, -0.00, -0.01,
        -0.01, -0.01, -0.04, -0.06, -0.05, -0.01, -0.01,
        -0.01, -0.03, -0.01, 0.98, -0.02, -0.04, -0.02,
        -0.01, -0.01, -0.05, -0.07, -0.06, -0.02, -0.02,
        -0.01, -0.01, -0.01, -0.05, -0.01, -0.00, -0.01,
        -0.01, -0.01, -0.02, -0.03, -0.02, -0.01, -0.01,
    ],
    // Filter 8
    [
        -0.04, -0.04, -0.04, -0.02, -0.04, -0.03, -0.04,
        -0.04, -0.03, -0.04, -0.04, -0.04, -0.03, -0.04,
        -0.04, -0.04, -0.02, 0.16, -0.01, -0.04, -0.04,
        -0.02, -0.04, 0.16, 0.92, 0.15, -0.04, -0.02,
        -0.04, -0.05, -0.03, 0.15, -0.03, -0.05, -0.04,
        -0.04, -0.03, -0.04, -0.04, -0.04, -0.03, -0.04,
        -0.04, -0.04, -0.04, -0.02, -0.04, -0.03, -0.04,
    ],
];

/// The eight master filters.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterSet {
    bank: FilterBank,
}

impl MasterSet {
    /// Filter by 1-based number.
    pub fn get(&self, number: usize) -> &Filter {
        assert!((1..=MASTER_COUNT).contains(&number), "master filters are numbered 1..=8");
        self.bank.filter(number - 1)
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn into_bank(self) -> FilterBank {
        self.bank
    }
}

pub fn get_masters() -> MasterSet {
    let filters = MASTER_VALUES
        .iter()
        .map(|v| Filter::from_f32(MASTER_K, v).expect("embedded filters are valid"));
    MasterSet {
        bank: FilterBank::from_filters(MASTER_K, filters).expect("embedded bank is valid"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterSummary {
    /// 1-based.
    pub number: usize,
    pub mean: f64,
    pub norm: f64,
    pub best: FamilyFit,
    pub all_fits: Vec<FamilyFit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterVerification {
    pub filters: Vec<MasterSummary>,
    /// `|cos|` between centered filters; `pairwise[i][j]` for 0-based `i, j`.
    pub pairwise: Vec<Vec<f64>>,
}

/// Absolute cosine similarity of two centered filters.
pub fn centered_similarity(x: &Filter, y: &Filter) -> f64 {
    match (
        normalize_values(x.k(), x.values()),
        normalize_values(y.k(), y.values()),
    ) {
        (Some(a), Some(b)) => a
            .values()
            .iter()
            .zip(b.values())
            .map(|(p, q)| p * q)
            .sum::<f64>()
            .abs(),
        _ => 0.0,
    }
}

pub fn verify_masters() -> Result<MasterVerification> {
    let masters = get_masters();
    let report = master_report(masters.bank())?;
    let filters = masters
        .bank()
        .filters()
        .zip(report)
        .enumerate()
        .map(|(i, (f, fams))| MasterSummary {
            number: i + 1,
            mean: f.mean(),
            norm: f.norm(),
            best: *fams.best(),
            all_fits: fams.fits,
        })
        .collect();
    let bank = masters.bank();
    let pairwise = (0..MASTER_COUNT)
        .map(|i| {
            (0..MASTER_COUNT)
                .map(|j| centered_similarity(bank.filter(i), bank.filter(j)))
                .collect()
        })
        .collect();
    Ok(MasterVerification { filters, pairwise })
}

pub fn export_masters(path: impl AsRef<Path>, format: BankFormat) -> Result<()> {
    save_bank(get_masters().bank(), path, format)
}
