//! Filtered degenerate photon-pair source.
//!
//! A CW pump at `ω_p` produces pairs with exact energy anticorrelation,
//! `ω + ω' = ω_p`, so the joint amplitude collapses to a function of the
//! detuning `Ω = ω - ω₀` from the degenerate center `ω₀ = ω_p / 2`.

use core::f64::consts::PI;

use libm::{exp, sqrt};

use crate::consts::{FWHM_PER_SIGMA, GAUSSIAN_TIME_BANDWIDTH, SPEED_OF_LIGHT};
use crate::error::{ensure, Result};

/// Everything defining the photon-pair input of the interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pump_wavelength: f64,
    pump_angular_frequency: f64,
    filter_fwhm: f64,
    pair_rate: f64,
    mode_overlap: f64,
    coherence_time_override: Option<f64>,
}

impl SourceSpec {
    /// `pump_wavelength` and `filter_fwhm` in meters, `pair_rate` in pairs/s.
    pub fn new(
        pump_wavelength: f64,
        filter_fwhm: f64,
        pair_rate: f64,
        mode_overlap: f64,
    ) -> Result<Self> {
        ensure(
            pump_wavelength.is_finite() && pump_wavelength > 0.0,
            "pump_wavelength",
            "must be positive",
        )?;
        ensure(
            filter_fwhm.is_finite() && filter_fwhm > 0.0,
            "filter_fwhm",
            "must be positive",
        )?;
        ensure(
            pair_rate.is_finite() && pair_rate >= 0.0,
            "pair_rate",
            "must be non-negative",
        )?;
        ensure(
            (0.0..=1.0).contains(&mode_overlap),
            "mode_overlap",
            "must lie in [0, 1]",
        )?;
        Ok(Self {
            pump_wavelength,
            pump_angular_frequency: 2.0 * PI * SPEED_OF_LIGHT / pump_wavelength,
            filter_fwhm,
            pair_rate,
            mode_overlap,
            coherence_time_override: None,
        })
    }

    /// Pin the FWHM coherence time instead of deriving it from the filter.
    pub fn with_coherence_time(mut self, coherence_time: f64) -> Result<Self> {
        ensure(
            coherence_time.is_finite() && coherence_time > 0.0,
            "coherence_time",
            "must be positive",
        )?;
        self.coherence_time_override = Some(coherence_time);
        Ok(self)
    }

    /// 783 nm pump, 0.8 nm filter, 4.25 ps coherence time.
    pub fn lab_default() -> Self {
        Self::new(783e-9, 0.8e-9, 1.0e5, 1.0)
            .and_then(|s| s.with_coherence_time(4.25e-12))
            .expect("laboratory defaults are valid")
    }

    pub fn pump_wavelength(&self) -> f64 {
        self.pump_wavelength
    }

    pub fn pump_angular_frequency(&self) -> f64 {
        self.pump_angular_frequency
    }

    /// `ω₀ = ω_p / 2`.
    pub fn degenerate_center(&self) -> f64 {
        0.5 * self.pump_angular_frequency
    }

    pub fn degenerate_wavelength(&self) -> f64 {
        2.0 * self.pump_wavelength
    }

    pub fn filter_fwhm(&self) -> f64 {
        self.filter_fwhm
    }

    pub fn pair_rate(&self) -> f64 {
        self.pair_rate
    }

    pub fn mode_overlap(&self) -> f64 {
        self.mode_overlap
    }

    pub fn coherence_time_override(&self) -> Option<f64> {
        self.coherence_time_override
    }

    /// Filter FWHM in optical frequency (Hz) at the degenerate wavelength.
    pub fn filter_bandwidth(&self) -> f64 {
        self.filter_fwhm * SPEED_OF_LIGHT / (self.degenerate_wavelength() * self.degenerate_wavelength())
    }
}

/// FWHM in optical frequency (Hz) of a band `delta_lambda` wide at `lambda0`.
pub fn bandwidth_wavelength_to_frequency(delta_lambda: f64, lambda0: f64) -> Result<f64> {
    ensure(
        delta_lambda.is_finite() && delta_lambda > 0.0,
        "delta_lambda",
        "must be positive",
    )?;
    ensure(lambda0.is_finite() && lambda0 > 0.0, "lambda0", "must be positive")?;
    Ok(SPEED_OF_LIGHT * delta_lambda / (lambda0 * lambda0))
}

/// Inverse of [`bandwidth_wavelength_to_frequency`].
pub fn bandwidth_frequency_to_wavelength(delta_nu: f64, lambda0: f64) -> Result<f64> {
    ensure(
        delta_nu.is_finite() && delta_nu > 0.0,
        "delta_nu",
        "must be positive",
    )?;
    ensure(lambda0.is_finite() && lambda0 > 0.0, "lambda0", "must be positive")?;
    Ok(lambda0 * lambda0 * delta_nu / SPEED_OF_LIGHT)
}

/// Fourier-limited FWHM coherence time. The override wins when present.
pub fn coherence_time(spec: &SourceSpec) -> f64 {
    match spec.coherence_time_override {
        Some(t) => t,
        None => GAUSSIAN_TIME_BANDWIDTH / spec.filter_bandwidth(),
    }
}

/// Coherence length in air (vacuum speed), meters.
pub fn coherence_length_air(coherence_time: f64) -> f64 {
    SPEED_OF_LIGHT * coherence_time
}

/// Gaussian joint spectral amplitude under exact CW anticorrelation.
///
/// The single-photon detuning amplitude is
/// `f(Ω) = (π σ²)^(-1/4) exp(-Ω² / (2σ²))`, normalized so `∫|f|² dΩ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpectrum {
    center: f64,
    amplitude_sigma: f64,
    mode_overlap: f64,
}

impl JointSpectrum {
    pub fn new(center: f64, amplitude_sigma: f64, mode_overlap: f64) -> Result<Self> {
        ensure(center.is_finite() && center > 0.0, "center", "must be positive")?;
        ensure(
            amplitude_sigma.is_finite() && amplitude_sigma > 0.0,
            "amplitude_sigma",
            "must be positive",
        )?;
        ensure(
            (0.0..=1.0).contains(&mode_overlap),
            "mode_overlap",
            "must lie in [0, 1]",
        )?;
        Ok(Self {
            center,
            amplitude_sigma,
            mode_overlap,
        })
    }

    /// Degenerate center `ω₀`, rad/s.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// `σ_Ω`, rad/s.
    pub fn amplitude_sigma(&self) -> f64 {
        self.amplitude_sigma
    }

    pub fn mode_overlap(&self) -> f64 {
        self.mode_overlap
    }

    pub fn pump_angular_frequency(&self) -> f64 {
        2.0 * self.center
    }

    /// Frequency of the twin photon.
    pub fn partner(&self, omega: f64) -> f64 {
        self.pump_angular_frequency() - omega
    }

    pub fn amplitude(&self, detuning: f64) -> f64 {
        let s = self.amplitude_sigma;
        let norm = 1.0 / sqrt(sqrt(PI) * s);
        norm * exp(-detuning * detuning / (2.0 * s * s))
    }

    /// `|f(Ω)|²`.
    pub fn intensity(&self, detuning: f64) -> f64 {
        let s = self.amplitude_sigma;
        exp(-detuning * detuning / (s * s)) / (sqrt(PI) * s)
    }

    /// Same spectrum with the mode overlap replaced.
    pub fn with_mode_overlap(self, mode_overlap: f64) -> Result<Self> {
        Self::new(self.center, self.amplitude_sigma, mode_overlap)
    }
}

/// Build the joint spectrum of `spec`.
///
/// The amplitude FWHM in frequency is `K / coherence_time(spec)`, which is
/// the filter bandwidth unless a coherence time override is set.
pub fn make_joint_spectrum(spec: &SourceSpec) -> JointSpectrum {
    let bandwidth = match spec.coherence_time_override {
        Some(t) => GAUSSIAN_TIME_BANDWIDTH / t,
        None => spec.filter_bandwidth(),
    };
    JointSpectrum {
        center: spec.degenerate_center(),
        amplitude_sigma: 2.0 * PI * bandwidth / FWHM_PER_SIGMA,
        mode_overlap: spec.mode_overlap,
    }
}
