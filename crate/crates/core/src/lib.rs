//! Identify the most informative pairwise logratios of compositional data
//! with sparse PCA over the full logratio expansion.

pub mod cli;
pub mod coda;
pub mod error;
pub mod linalg;
pub mod simlab;
pub mod spca;
pub mod stability;
pub mod step;

pub use error::{CodaError, Result};
