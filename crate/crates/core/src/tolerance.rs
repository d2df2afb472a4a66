//! Numerical thresholds shared across the crate.

/// Maximum entrywise `|m - m†|` accepted as Hermitian.
pub const HERMITIAN: f64 = 1e-10;

/// Slack on the elementary symmetric polynomials in the Newton positivity test.
pub const POSITIVITY: f64 = 1e-12;

/// Eigenvalue floor used when positivity is decided from a spectrum.
pub const EIGEN_POSITIVITY: f64 = 1e-9;

/// Allowed deviation of a density-matrix trace from one.
pub const TRACE: f64 = 1e-10;

/// Jacobi sweeps stop once the off-diagonal Frobenius mass drops below this.
pub const JACOBI_OFF_DIAGONAL: f64 = 1e-14;

/// Hard cap on Jacobi sweeps; 4x4 and 8x8 inputs converge in well under ten.
pub const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a density matrix at or below this are treated as exact zeros
/// before taking a matrix square root. It sits just above the absolute
/// resolution of the eigensolver on unit-trace input.
pub const SQRT_CLAMP: f64 = 1e-14;

/// Concurrence differences (and concurrences) inside this band count as zero.
pub const CONCURRENCE_ZERO: f64 = 1e-9;

/// Normalization slack for Schmidt coefficients.
pub const NORMALIZATION: f64 = 1e-12;

/// Outcome probabilities at or below this are rejected by the measurement API.
pub const MIN_PROBABILITY: f64 = 1e-15;

/// Two Schmidt coefficients closer than this are considered equal.
pub const MAXIMAL: f64 = 1e-12;

/// Successive-difference threshold for declaring the cumulative success
/// probability converged.
pub const CONVERGENCE: f64 = 1e-12;

/// Slack applied when comparing `A_{s,z}` against its threshold.
pub const CRITERION: f64 = 1e-12;
