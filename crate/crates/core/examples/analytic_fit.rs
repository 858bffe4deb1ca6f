//! Generates analytic scale-space kernels and recovers their family and
//! scale by fitting.
//!
//!     cargo run --example analytic_fit

use masterkey::analytic::{fit_all_families, generate, AnalyticKernelSpec, Family, KernelNorm, SigmaGrid, DOG_RATIOS};

fn main() -> masterkey::Result<()> {
    let grid = SigmaGrid::default();
    for family in Family::ALL {
        let spec = match family {
            Family::Dog => AnalyticKernelSpec::dog(0.8, 1.28, 7),
            _ => AnalyticKernelSpec::new(family, 1.1, 7),
        }
        .with_norm(KernelNorm::UnitL2);
        let kernel = generate(&spec)?;
        let fits = fit_all_families(&kernel, &grid, &DOG_RATIOS)?;
        let best = fits.best();
        println!(
            "{:<9} sigma {:.2} -> best {:<9} sigma {:.2} similarity {:.4}",
            family, spec.sigma, best.family, best.sigma, best.similarity
        );
    }
    Ok(())
}
