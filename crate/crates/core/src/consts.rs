//! Physical constants and fixed model parameters.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Time-bandwidth product of a transform-limited Gaussian (FWHM × FWHM).
pub const GAUSSIAN_TIME_BANDWIDTH: f64 = 0.441;

/// Detector time resolution. The coincidence model only holds for arm
/// delays well inside it.
pub const DETECTOR_RESOLUTION: f64 = 1e-9;

/// FWHM of a Gaussian `exp(-x^2 / (2 s^2))` in units of `s`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
