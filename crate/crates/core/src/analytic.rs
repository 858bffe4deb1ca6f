//! Scale-space kernel families on a `k x k` integer grid and fitting them to
//! arbitrary filters.
//!
//! Kernels are point-sampled at offsets `x, y ∈ {-(k-1)/2 ..= (k-1)/2}` with
//! `x` running along columns and `y` along rows:
//!
//! | family     | value at `(x, y)`                                  |
//! |------------|----------------------------------------------------|
//! | `gaussian` | `G(x, y) = exp(-(x² + y²) / 2σ²)`                  |
//! | `gauss_dx` | `-x / σ² · G(x, y)`                                |
//! | `gauss_dy` | `-y / σ² · G(x, y)`                                |
//! | `dog`      | `G_σ(x, y) - G_σ₂(x, y)`                           |
//! | `ricker`   | `(1 - r² / 2σ²) · exp(-r² / 2σ²)`, `r² = x² + y²`  |
//!
//! Fits compare centered kernels by absolute cosine similarity, which is
//! the same ranking as the linear-shift residual of the target against the
//! kernel (`residual² = |y - ȳ|² (1 - cos²)`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filterbank::{Filter, FilterBank};
use crate::linfit::fit_pair;
use crate::normalize::normalize_values;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Gaussian,
    GaussDx,
    GaussDy,
    Dog,
    Ricker,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Gaussian,
        Family::GaussDx,
        Family::GaussDy,
        Family::Dog,
        Family::Ricker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::GaussDx => "gauss_dx",
            Family::GaussDy => "gauss_dy",
            Family::Dog => "dog",
            Family::Ricker => "ricker",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel family {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelNorm {
    /// The formula as written (Gaussian peak 1).
    Raw,
    /// Unit L1 norm; for `dog` each Gaussian is scaled to unit mass before
    /// the subtraction.
    UnitL1Components,
    /// Unit L2 norm; `dog` components are mass-normalized first.
    UnitL2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticKernelSpec {
    pub family: Family,
    pub sigma: f64,
    /// Outer scale, `dog` only.
    pub sigma2: Option<f64>,
    pub k: usize,
    pub norm: KernelNorm,
}

impl AnalyticKernelSpec {
    pub fn new(family: Family, sigma: f64, k: usize) -> Self {
        AnalyticKernelSpec {
            family,
            sigma,
            sigma2: None,
            k,
            norm: KernelNorm::Raw,
        }
    }

    pub fn dog(sigma: f64, sigma2: f64, k: usize) -> Self {
        AnalyticKernelSpec {
            family: Family::Dog,
            sigma,
            sigma2: Some(sigma2),
            k,
            norm: KernelNorm::UnitL1Components,
        }
    }

    pub fn with_norm(mut self, norm: KernelNorm) -> Self {
        self.norm = norm;
        self
    }
}

fn gaussian_grid(k: usize, sigma: f64) -> Vec<f64> {
    let half = (k / 2) as f64;
    let two_s2 = 2.0 * sigma * sigma;
    let mut out = Vec::with_capacity(k * k);
    for row in 0..k {
        let y = row as f64 - half;
        for col in 0..k {
            let x = col as f64 - half;
            out.push((-(x * x + y * y) / two_s2).exp());
        }
    }
    out
}

fn scale_to(values: &mut [f64], norm: f64) {
    if norm > 0.0 {
        for v in values {
            *v /= norm;
        }
    }
}

fn l1(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).sum()
}

fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn generate(spec: &AnalyticKernelSpec) -> Result<Filter> {
    let AnalyticKernelSpec { family, sigma, k, norm, .. } = *spec;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidFilter(format!("k must be odd and positive, got {k}")));
    }
    let half = (k / 2) as f64;
    let offset = |i: usize| i as f64 - half;
    let s2 = sigma * sigma;
    let mut values = match family {
        Family::Gaussian => gaussian_grid(k, sigma),
        Family::GaussDx => {
            let g = gaussian_grid(k, sigma);
            (0..k * k).map(|i| -offset(i % k) / s2 * g[i]).collect()
        }
        Family::GaussDy => {
            let g = gaussian_grid(k, sigma);
            (0..k * k).map(|i| -offset(i / k) / s2 * g[i]).collect()
        }
        Family::Ricker => {
            let g = gaussian_grid(k, sigma);
            (0..k * k)
                .map(|i| {
                    let (x, y) = (offset(i % k), offset(i / k));
                    (1.0 - (x * x + y * y) / (2.0 * s2)) * g[i]
                })
                .collect()
        }
        Family::Dog => {
            let sigma2 = spec.sigma2.ok_or_else(|| {
                Error::InvalidArgument("difference of Gaussians needs sigma2".into())
            })?;
            if !(sigma2 > sigma) || !sigma2.is_finite() {
                return Err(Error::DegenerateDoG { sigma, sigma2 });
            }
            let mut inner = gaussian_grid(k, sigma);
            let mut outer = gaussian_grid(k, sigma2);
            if norm != KernelNorm::Raw {
                let (si, so) = (inner.iter().sum(), outer.iter().sum());
                scale_to(&mut inner, si);
                scale_to(&mut outer, so);
            }
            inner.iter().zip(&outer).map(|(a, b)| a - b).collect()
        }
    };
    match (family, norm) {
        (_, KernelNorm::Raw) | (Family::Dog, KernelNorm::UnitL1Components) => {}
        (_, KernelNorm::UnitL1Components) => {
            let n = l1(&values);
            scale_to(&mut values, n);
        }
        (_, KernelNorm::UnitL2) => {
            let n = l2(&values);
            scale_to(&mut values, n);
        }
    }
    Filter::new(k, values)
}

/// Inclusive arithmetic grid of scales. Grid points are snapped to nine
/// decimals so that e.g. `1.2` is hit exactly by `0.3 + 90 * 0.01`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for SigmaGrid {
    fn default() -> Self {
        SigmaGrid {
            start: 0.3,
            stop: 3.0,
            step: 0.01,
        }
    }
}

impl SigmaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start > 0.0) || !(self.step > 0.0) || self.stop < self.start {
            return Err(Error::InvalidArgument(format!(
                "empty or invalid sigma grid {}..={} step {}",
                self.start, self.stop, self.step
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

/// Default outer/inner scale ratios searched for `dog`.
pub const DOG_RATIOS: [f64; 3] = [1.2, 1.6, 2.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyFit {
    pub family: Family,
    pub sigma: f64,
    pub sigma2: Option<f64>,
    /// Absolute cosine similarity of the centered target and kernel.
    pub similarity: f64,
    /// Residual of the best linear shift of the kernel onto the target.
    pub linshift_residual: f64,
}

/// Grid search for the family member closest to `target`.
///
/// Scales are visited in ascending order (then ascending ratio for `dog`)
/// and only a strictly better similarity replaces the incumbent, so ties
/// resolve to the smallest scale.
pub fn fit_family(target: &Filter, family: Family, grid: &SigmaGrid, dog_ratios: &[f64]) -> Result<FamilyFit> {
    let target_hat = normalize_values(target.k(), target.values()).ok_or(Error::ZeroVariance { index: 0 })?;
    let sigmas = grid.values()?;
    let ratios: &[f64] = if family == Family::Dog {
        if dog_ratios.is_empty() {
            return Err(Error::InvalidArgument("empty ratio grid".into()));
        }
        dog_ratios
    } else {
        &[1.0]
    };
    let mut best: Option<(f64, f64, Option<f64>, Filter)> = None;
    for &sigma in &sigmas {
        for &ratio in ratios {
            let mut spec = AnalyticKernelSpec::new(family, sigma, target.k()).with_norm(KernelNorm::UnitL1Components);
            if family == Family::Dog {
                spec.sigma2 = Some(sigma * ratio);
            }
            let kernel = generate(&spec)?;
            let Some(kernel_hat) = normalize_values(kernel.k(), kernel.values()) else {
                continue;
            };
            let similarity = target_hat
                .values()
                .iter()
                .zip(kernel_hat.values())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
                .min(1.0);
            if best.as_ref().is_none_or(|(s, ..)| similarity > *s) {
                best = Some((similarity, sigma, spec.sigma2, kernel));
            }
        }
    }
    let (similarity, sigma, sigma2, kernel) =
        best.ok_or_else(|| Error::InvalidArgument(format!("no usable {family} kernel on the grid")))?;
    let residual = fit_pair(&kernel, target)?.residual;
    Ok(FamilyFit {
        family,
        sigma,
        sigma2,
        similarity,
        linshift_residual: residual,
    })
}

/// Fits of one filter against all families.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterFamilies {
    pub fits: Vec<FamilyFit>,
}

impl FilterFamilies {
    /// Highest similarity; earlier families in [`Family::ALL`] win ties.
    pub fn best(&self) -> &FamilyFit {
        let mut best = &self.fits[0];
        for fit in &self.fits[1..] {
            if fit.similarity > best.similarity {
                best = fit;
            }
        }
        best
    }
}

pub fn fit_all_families(target: &Filter, grid: &SigmaGrid, dog_ratios: &[f64]) -> Result<FilterFamilies> {
    let fits = Family::ALL
        .iter()
        .map(|&family| fit_family(target, family, grid, dog_ratios))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterFamilies { fits })
}

/// Best family per filter, over the default grids.
pub fn master_report(masters: &FilterBank) -> Result<Vec<FilterFamilies>> {
    let grid = SigmaGrid::default();
    masters
        .filters()
        .enumerate()
        .map(|(index, f)| {
            fit_all_families(f, &grid, &DOG_RATIOS).map_err(|e| match e {
                Error::ZeroVariance { .. } => Error::ZeroVariance { index },
                other => other,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::normalize_filter;

    fn gen(family: Family, sigma: f64) -> Filter {
        let mut spec = AnalyticKernelSpec::new(family, sigma, 7);
        if family == Family::Dog {
            spec = AnalyticKernelSpec::dog(sigma, sigma * 1.6, 7);
        }
        generate(&spec).unwrap()
    }

    #[test]
    fn gauss_dx_is_antisymmetric_in_x() {
        let f = gen(Family::GaussDx, 1.3);
        for row in 0..7 {
            assert_eq!(f.get(row, 3), 0.0);
            for col in 0..7 {
                assert_eq!(f.get(row, col), -f.get(row, 6 - col));
                assert_eq!(f.get(row, col), f.get(6 - row, col));
            }
        }
        assert_eq!(gen(Family::GaussDy, 1.3), f.transpose());
    }

    #[test]
    fn dog_components_have_unit_mass() {
        let f = gen(Family::Dog, 1.0);
        assert!(f.values().iter().sum::<f64>().abs() < 1e-12);
        assert!(f.get(3, 3) > 0.0 && f.get(0, 0) < 0.0);
    }

    #[test]
    fn zero_sum_derivatives() {
        for family in [Family::GaussDx, Family::GaussDy] {
            assert!(gen(family, 0.9).values().iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn radial_families_have_full_symmetry() {
        for family in [Family::Gaussian, Family::Ricker] {
            let spec = AnalyticKernelSpec::new(family, 0.75, 7).with_norm(KernelNorm::UnitL2);
            let f = generate(&spec).unwrap();
            let max = f.values().iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(f.get(3, 3), max);
            for r in 0..7 {
                for c in 0..7 {
                    assert_eq!(f.get(r, c), f.get(6 - r, c));
                    assert_eq!(f.get(r, c), f.get(r, 6 - c));
                    assert_eq!(f.get(r, c), f.get(c, r));
                }
            }
        }
    }

    #[test]
    fn ricker_matches_formula() {
        let f = gen(Family::Ricker, 1.0);
        // r² = 2 at the diagonal neighbour: (1 - 1) e^{-1} = 0.
        assert!(f.get(2, 2).abs() < 1e-15);
        assert!((f.get(3, 5) - (1.0 - 2.0) * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_dog() {
        let spec = AnalyticKernelSpec::dog(1.0, 1.0, 7);
        assert!(matches!(generate(&spec), Err(Error::DegenerateDoG { .. })));
        let spec = AnalyticKernelSpec::dog(1.0, 0.5, 7);
        assert!(matches!(generate(&spec), Err(Error::DegenerateDoG { .. })));
    }

    #[test]
    fn unit_l2_has_unit_norm() {
        for family in Family::ALL {
            let mut spec = AnalyticKernelSpec::new(family, 1.1, 7).with_norm(KernelNorm::UnitL2);
            spec.sigma2 = Some(1.8);
            let f = generate(&spec).unwrap();
            assert!((f.norm() - 1.0).abs() < 1e-12, "{family}");
        }
    }

    #[test]
    fn grid_snaps_points() {
        let values = SigmaGrid::default().values().unwrap();
        assert_eq!(values.len(), 271);
        assert_eq!(values[0], 0.3);
        assert_eq!(values[90], 1.2);
        assert_eq!(*values.last().unwrap(), 3.0);
        assert!(SigmaGrid { start: 1.0, stop: 0.5, step: 0.1 }.values().is_err());
    }

    #[test]
    fn self_recovery() {
        let target = gen(Family::Gaussian, 1.2);
        let fit = fit_family(&target, Family::Gaussian, &SigmaGrid::default(), &DOG_RATIOS).unwrap();
        assert_eq!(fit.sigma, 1.2);
        assert!((fit.similarity - 1.0).abs() < 1e-12);
        assert!(fit.linshift_residual < 1e-9);

        let target = generate(&AnalyticKernelSpec::dog(0.8, 1.28, 7)).unwrap();
        let fit = fit_family(&target, Family::Dog, &SigmaGrid::default(), &DOG_RATIOS).unwrap();
        assert_eq!((fit.sigma, fit.sigma2), (0.8, Some(0.8 * 1.6)));
    }

    #[test]
    fn constant_target_rejected() {
        let target = Filter::new(7, vec![1.0; 49]).unwrap();
        assert!(matches!(
            fit_family(&target, Family::Gaussian, &SigmaGrid::default(), &DOG_RATIOS),
            Err(Error::ZeroVariance { .. })
        ));
    }

    #[test]
    fn broad_gaussian_is_nearly_constant() {
        let wide = normalize_filter(&gen(Family::Gaussian, 100.0)).unwrap();
        assert!(wide.is_near_constant());
        assert!(!normalize_filter(&gen(Family::Gaussian, 1.0)).unwrap().is_near_constant());
    }

    #[test]
    fn similarity_ranking_matches_residual_ranking() {
        let target = Filter::from_fn(7, |r, c| {
            let (x, y) = (c as f64 - 3.0, r as f64 - 3.0);
            (-(x * x + y * y) / 2.0).exp() - 0.3 * x * (-(x * x + y * y) / 3.0).exp()
                + 0.2 * y * (-(x * x + y * y) / 5.0).exp()
        })
        .unwrap();
        let grid = SigmaGrid { start: 0.5, stop: 2.0, step: 0.05 };
        for family in Family::ALL {
            let best = fit_family(&target, family, &grid, &DOG_RATIOS).unwrap();
            // Brute-force argmin of the linear-shift residual over the same grid.
            let mut min: Option<(f64, f64)> = None;
            for sigma in grid.values().unwrap() {
                for ratio in if family == Family::Dog { DOG_RATIOS.to_vec() } else { vec![1.0] } {
                    let mut spec = AnalyticKernelSpec::new(family, sigma, 7);
                    if family == Family::Dog {
                        spec = AnalyticKernelSpec::dog(sigma, sigma * ratio, 7);
                    }
                    let r = fit_pair(&generate(&spec).unwrap(), &target).unwrap().residual;
                    if min.is_none_or(|(m, _)| r < m - 1e-12) {
                        min = Some((r, sigma));
                    }
                }
            }
            let (r, sigma) = min.unwrap();
            assert_eq!(best.sigma, sigma, "{family}");
            assert!((best.linshift_residual - r).abs() < 1e-9);
        }
    }
}
