//! Classical Riesz products as spectral measures: exact Fourier coefficients,
//! numeric integration oracles, and the stationary Gaussian sequences they define.

mod gaussian;
mod measure;

pub use gaussian::{
    bartlett_standard_error, empirical_covariance, gaussian_covariance, gaussian_sample, CovarianceSequence,
    GaussianSample, REPAIR_TOLERANCE,
};
pub use measure::{
    format_complex, fourier_coefficient, integration_oracle, integration_table, mixing_verdict_along,
    ComplexRational, OracleValue, SpectralMeasure, SpectralVerdict, SupportHit, ORACLE_MAX_FACTORS,
};
