//! Exact cutting-and-stacking constructions of rank-one transformations,
//! correlation and rigidity diagnostics along index sets, and classical
//! Riesz-product spectral measures.

pub mod analyzer;
pub mod builder;
pub mod error;
pub mod exact;
pub mod heights;
pub mod sets;
pub mod spectral;
pub mod tower;

pub use error::{Error, Result};
