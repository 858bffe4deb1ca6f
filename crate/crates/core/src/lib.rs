//! Filter-basis distillation for depthwise convolution kernels.
//!
//! Banks of `k x k` depthwise filters are decomposed onto a small set of
//! candidate filters, each target being replaced by the best linear shift
//! `a * x̂ + b` of one candidate. Candidates come from a one-dimensional
//! autoencoder code ([`manifold`]), from analytic scale-space kernels
//! ([`analytic`]) or from the bundled eight master filters
//! ([`masterkeys`]). [`greedy`] prunes a candidate pool by backward
//! elimination.
//!
//! ```
//! use masterkey::{linfit, masterkeys};
//!
//! let masters = masterkeys::get_masters();
//! let assignment = linfit::assign_best(masters.bank(), masters.bank()).unwrap();
//! for (i, entry) in assignment.entries.iter().enumerate() {
//!     assert_eq!(entry.fit.candidate_index, i);
//!     assert!(entry.fit.residual < 1e-9);
//! }
//! ```

pub mod analytic;
pub mod cli;
pub mod error;
pub mod filterbank;
pub mod greedy;
pub mod linfit;
pub mod manifold;
pub mod masterkeys;
pub mod normalize;
mod numfmt;
pub mod render;
pub mod synth;

pub use error::{Error, Result};
pub use filterbank::{BankFormat, Filter, FilterBank};
