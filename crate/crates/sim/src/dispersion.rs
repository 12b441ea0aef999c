//! Dispersion and stability analysis of the two fiber arms.

use hom_core::fiber::{
    is_dispersion_cancelled, max_delay_difference, max_link_length, pulse_broadening,
    stability_for_fringe_resolution, thermal_length_drift, two_path_delay_difference,
    CorrelationKind,
};
use hom_core::source::make_joint_spectrum;
use hom_core::Bound;

use crate::config::{ExperimentConfig, Model};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRow {
    pub detuning_ghz: f64,
    /// `ω₁ = ω₀ + Ω`, `ω₂ = ω₀ - Ω`.
    pub dtau_correlated_ps: f64,
    /// Both photons at `ω₀ + Ω`.
    pub dtau_independent_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    pub band: Vec<BandRow>,
    pub coherence_time_ps: f64,
    pub tolerance_ps: f64,
    pub max_dtau_correlated_ps: f64,
    pub max_dtau_independent_ps: f64,
    pub cancelled_correlated: bool,
    pub cancelled_independent: bool,
    pub broadening_a_ps: f64,
    pub broadening_b_ps: f64,
    pub max_link_length_km: Bound,
    pub thermal_drift_mm_per_k: f64,
    pub thermal_drift_mm_per_h: f64,
    pub fringe_stability_k: Bound,
}

/// Evaluate the arms over `ω₀ ± 3σ` of the joint spectrum.
pub fn analyze(cfg: &ExperimentConfig, model: &Model) -> Result<DispersionReport> {
    let js = make_joint_spectrum(&model.source);
    let omega0 = js.center();
    let sigma = js.amplitude_sigma();
    let (a, b) = (&model.fiber_a, &model.fiber_b);
    let n = cfg.dispersion.band_points;

    let band = (0..n)
        .map(|k| {
            let x = sigma * (-3.0 + 6.0 * k as f64 / (n - 1) as f64);
            let w1 = omega0 + x;
            BandRow {
                detuning_ghz: x / (2.0 * std::f64::consts::PI) * 1e-9,
                dtau_correlated_ps: two_path_delay_difference(a, b, w1, 2.0 * omega0 - w1, omega0)
                    * 1e12,
                dtau_independent_ps: two_path_delay_difference(a, b, w1, w1, omega0) * 1e12,
            }
        })
        .collect();

    let tolerance = cfg
        .dispersion
        .tolerance_ps
        .value()
        .map_or(model.coherence_time / 10.0, |t| t * 1e-12);
    let verdict = |kind| is_dispersion_cancelled(a, b, kind, omega0, sigma, tolerance);
    let worst = |kind| max_delay_difference(a, b, kind, omega0, sigma) * 1e12;

    let filter_nm = cfg.source.filter_fwhm_nm;
    let drift_per_k = thermal_length_drift(a, 1.0) * 1e3;
    Ok(DispersionReport {
        band,
        coherence_time_ps: model.coherence_time * 1e12,
        tolerance_ps: tolerance * 1e12,
        max_dtau_correlated_ps: worst(CorrelationKind::EnergyAnticorrelated),
        max_dtau_independent_ps: worst(CorrelationKind::Independent),
        cancelled_correlated: verdict(CorrelationKind::EnergyAnticorrelated)?,
        cancelled_independent: verdict(CorrelationKind::Independent)?,
        broadening_a_ps: pulse_broadening(
            cfg.fiber_a.dispersion_ps_nm_km.abs(),
            cfg.fiber_a.length_km,
            filter_nm,
        )? * 1e12,
        broadening_b_ps: pulse_broadening(
            cfg.fiber_b.dispersion_ps_nm_km.abs(),
            cfg.fiber_b.length_km,
            filter_nm,
        )? * 1e12,
        max_link_length_km: max_link_length(
            model.coherence_time,
            cfg.dispersion.delay_spread_ps_per_km * 1e-12,
        )?,
        thermal_drift_mm_per_k: drift_per_k,
        thermal_drift_mm_per_h: drift_per_k * cfg.dispersion.drift_rate_k_per_h,
        fringe_stability_k: stability_for_fringe_resolution(
            a,
            model.source.pump_wavelength(),
            model.interferometer.group_index(),
        )?,
    })
}

fn bound(b: Bound) -> String {
    match b {
        Bound::Finite(v) => format!("{v:.6e}"),
        Bound::Unbounded => "unbounded".into(),
    }
}

impl DispersionReport {
    /// Band table as CSV, LF line endings.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("detuning_ghz,dtau_correlated_ps,dtau_independent_ps\n");
        for r in &self.band {
            out.push_str(&format!(
                "{:.8e},{:.8e},{:.8e}\n",
                r.detuning_ghz, r.dtau_correlated_ps, r.dtau_independent_ps
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "coherence_time_ps: {:.6}\n\
             tolerance_ps: {:.6}\n\
             max_dtau_correlated_ps: {:.6e}\n\
             max_dtau_independent_ps: {:.6e}\n\
             cancelled_correlated: {}\n\
             cancelled_independent: {}\n\
             broadening_a_ps: {:.3}\n\
             broadening_b_ps: {:.3}\n\
             max_link_length_km: {}\n\
             thermal_drift_mm_per_k: {:.6}\n\
             thermal_drift_mm_per_h: {:.6}\n\
             fringe_stability_k: {}\n",
            self.coherence_time_ps,
            self.tolerance_ps,
            self.max_dtau_correlated_ps,
            self.max_dtau_independent_ps,
            self.cancelled_correlated,
            self.cancelled_independent,
            self.broadening_a_ps,
            self.broadening_b_ps,
            bound(self.max_link_length_km),
            self.thermal_drift_mm_per_k,
            self.thermal_drift_mm_per_h,
            bound(self.fringe_stability_k),
        )
    }
}
