//! Centering and unit-length scaling of filters.

use crate::error::{Error, Result};
use crate::filterbank::{Filter, FilterBank};

/// Centered norms at or below this are treated as constant filters.
pub const EPSILON_ZERO: f64 = 1e-12;

/// Ratio of centered norm to raw norm below which a filter is nearly constant
/// and its normalized direction is dominated by rounding.
pub const NEAR_CONSTANT_RATIO: f64 = 1e-3;

/// A zero-mean, unit-norm filter together with what was removed from it.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedFilter {
    k: usize,
    values: Vec<f64>,
    pub original_mean: f64,
    /// Norm of the centered original.
    pub original_norm: f64,
}

impl NormalizedFilter {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_filter(&self) -> Filter {
        Filter::new(self.k, self.values.clone()).expect("normalized values are finite")
    }

    /// `original_norm * values + original_mean`.
    pub fn reconstruct(&self) -> Filter {
        let values = self
            .values
            .iter()
            .map(|v| self.original_norm * v + self.original_mean)
            .collect();
        Filter::new(self.k, values).expect("reconstruction is finite")
    }

    /// Centered norm relative to the raw norm of the original filter.
    pub fn relative_spread(&self) -> f64 {
        let n = self.values.len() as f64;
        let raw_sq = self.original_norm * self.original_norm + n * self.original_mean * self.original_mean;
        self.original_norm / raw_sq.sqrt()
    }

    pub fn is_near_constant(&self) -> bool {
        self.relative_spread() < NEAR_CONSTANT_RATIO
    }
}

pub fn normalize_filter(filter: &Filter) -> Result<NormalizedFilter> {
    normalize_values(filter.k(), filter.values()).ok_or(Error::ZeroVariance { index: 0 })
}

pub(crate) fn normalize_values(k: usize, values: &[f64]) -> Option<NormalizedFilter> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > EPSILON_ZERO) {
        return None;
    }
    for v in &mut centered {
        *v /= norm;
    }
    Some(NormalizedFilter {
        k,
        values: centered,
        original_mean: mean,
        original_norm: norm,
    })
}

/// Normalizes every filter, reporting constant ones by position.
pub fn normalize_bank(bank: &FilterBank) -> (Vec<NormalizedFilter>, Vec<usize>) {
    let mut normalized = Vec::with_capacity(bank.len());
    let mut rejected = Vec::new();
    for (i, filter) in bank.filters().enumerate() {
        match normalize_filter(filter) {
            Ok(n) => normalized.push(n),
            Err(_) => rejected.push(i),
        }
    }
    (normalized, rejected)
}

/// Normalized bank with provenance kept; constant filters are left out and
/// their indices returned.
pub fn normalize_bank_keep_provenance(bank: &FilterBank) -> Result<(FilterBank, Vec<usize>)> {
    let mut out = FilterBank::new(bank.k())?;
    let mut rejected = Vec::new();
    for (i, e) in bank.entries().iter().enumerate() {
        match normalize_filter(&e.filter) {
            Ok(n) => out.push(e.layer, e.channel, n.to_filter())?,
            Err(_) => rejected.push(i),
        }
    }
    Ok((out, rejected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn filter(k: usize, values: Vec<f64>) -> Filter {
        Filter::new(k, values).unwrap()
    }

    #[test]
    fn diagonal_pair() {
        // k must be odd, so embed the 2x2 example in the corner of a 3x3
        // grid whose remaining cells keep the mean at zero.
        let f = filter(3, vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        let n = normalize_filter(&f).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n.values()[0] - h).abs() < 1e-15);
        assert!((n.values()[4] + h).abs() < 1e-15);
        assert_eq!(n.original_mean, 0.0);
        assert!((n.original_norm - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_is_zero_variance() {
        let f = filter(3, vec![3.0; 9]);
        assert!(matches!(normalize_filter(&f), Err(Error::ZeroVariance { .. })));
    }

    #[test]
    fn bank_rejections_are_reported() {
        let bank = FilterBank::from_filters(
            3,
            [
                filter(3, (0..9).map(|v| v as f64).collect()),
                filter(3, vec![2.0; 9]),
                filter(3, (0..9).map(|v| -(v as f64)).collect()),
            ],
        )
        .unwrap();
        let (ok, rejected) = normalize_bank(&bank);
        assert_eq!(ok.len(), 2);
        assert_eq!(rejected, vec![1]);

        let (empty, none) = normalize_bank(&FilterBank::new(7).unwrap());
        assert!(empty.is_empty() && none.is_empty());
    }

    #[test]
    fn near_constant_is_flagged() {
        let mut values = vec![5.0; 9];
        values[4] += 1e-4;
        let n = normalize_filter(&filter(3, values)).unwrap();
        assert!(n.is_near_constant());
        let n = normalize_filter(&filter(3, (0..9).map(|v| v as f64).collect())).unwrap();
        assert!(!n.is_near_constant());
    }

    fn arb_filter() -> impl Strategy<Value = Filter> {
        prop::collection::vec(-10.0f64..10.0, 49).prop_map(|v| Filter::new(7, v).unwrap())
    }

    proptest! {
        #[test]
        fn invariants_and_reconstruction(f in arb_filter()) {
            let n = normalize_filter(&f).unwrap();
            let sum: f64 = n.values().iter().sum();
            let norm: f64 = n.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(sum.abs() < 1e-9);
            prop_assert!((norm - 1.0).abs() < 1e-9);
            for (r, o) in n.reconstruct().values().iter().zip(f.values()) {
                prop_assert!((r - o).abs() < 1e-9);
            }
        }

        #[test]
        fn idempotent(f in arb_filter()) {
            let once = normalize_filter(&f).unwrap();
            let twice = normalize_filter(&once.to_filter()).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn affine_invariance(f in arb_filter(), alpha in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], beta in -5.0f64..5.0) {
            let shifted = Filter::new(7, f.values().iter().map(|v| alpha * v + beta).collect()).unwrap();
            let base = normalize_filter(&f).unwrap();
            let moved = normalize_filter(&shifted).unwrap();
            let sign = alpha.signum();
            for (a, b) in base.values().iter().zip(moved.values()) {
                prop_assert!((sign * a - b).abs() < 1e-9);
            }
        }
    }
}
