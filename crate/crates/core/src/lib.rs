//! Exact verification toolkit for Riesz-sequence bounds of Haar functions
//! restricted to a set `E ⊂ [0,1)`.
//!
//! Every quantity that enters a certificate (measures, densities, inner
//! products, weights, constants) is an exact rational. Floating point is used
//! only for spectral estimates that drive the extremal search and for
//! plot-ready output.

pub mod cli;
pub mod constants;
pub mod counterexample;
pub mod error;
pub mod gram;
pub mod haar;
pub mod linalg;
pub mod measure;
pub mod search;
pub mod weights;

pub use error::{Error, Result};
pub use measure::{DyadicInterval, Rational, StepSet};
