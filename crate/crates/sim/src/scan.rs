//! Arm-length scans: model curve, simulated counts and the dip fit.

use hom_core::counting::simulate_point;
use hom_core::dip_fit::{
    dip_width_prediction, fit_gaussian_dip, visibilities_from_fit, DipFit, FitOptions,
};
use hom_core::interference::{delay_from_stretch, CoincidenceModel};
use hom_core::rng::stream_key;
use hom_core::source::make_joint_spectrum;

use crate::config::{ExperimentConfig, Model, ScanMode};
use crate::error::{Result, SimError};

/// One scan position as written to the CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub delta_l_mm: f64,
    pub tau_ps: f64,
    pub p_model: f64,
    pub expected_signal: f64,
    pub expected_accidentals: f64,
    pub counts: u64,
}

/// Calibrated coincidence model of one configuration, reusable across
/// seeds and scan grids.
#[derive(Debug, Clone)]
pub struct Scanner {
    model: Model,
    curve: CoincidenceModel,
}

impl Scanner {
    pub fn new(model: Model) -> Result<Self> {
        let js = make_joint_spectrum(&model.source);
        let curve = CoincidenceModel::calibrated(&js, &model.interferometer)?;
        Ok(Self { model, curve })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn curve(&self) -> &CoincidenceModel {
        &self.curve
    }

    /// Simulate the scan grid, mode and seed of `cfg`. Point `k` draws from
    /// stream `k` of `cfg.run.seed`.
    ///
    /// In theory mode nothing is sampled and `counts` holds the expected
    /// total rounded to the nearest integer.
    pub fn rows(&self, cfg: &ExperimentConfig) -> Result<Vec<ScanRow>> {
        let n_eff = self.model.interferometer.group_index();
        cfg.scan_grid_mm()
            .into_iter()
            .enumerate()
            .map(|(k, x_mm)| {
                let delta_l = x_mm * 1e-3;
                let tau = delay_from_stretch(delta_l, n_eff)?;
                let p = match cfg.run.mode {
                    ScanMode::Envelope => self.curve.blurred_envelope(tau, self.model.drift_rms_delay),
                    ScanMode::Fringes => self.curve.probability(tau),
                    ScanMode::Theory => self.curve.envelope(tau),
                };
                let record = simulate_point(
                    &self.model.setup,
                    delta_l,
                    tau,
                    p,
                    stream_key(cfg.run.seed, k as u64),
                )?;
                let counts = match cfg.run.mode {
                    ScanMode::Theory => {
                        (record.expected_signal + record.expected_accidentals).round() as u64
                    }
                    _ => record.sampled_total,
                };
                Ok(ScanRow {
                    delta_l_mm: x_mm,
                    tau_ps: tau * 1e12,
                    p_model: p,
                    expected_signal: record.expected_signal,
                    expected_accidentals: record.expected_accidentals,
                    counts,
                })
            })
            .collect()
    }
}

/// Calibrate `model` and simulate the scan of `cfg`.
pub fn run_scan(cfg: &ExperimentConfig, model: &Model) -> Result<Vec<ScanRow>> {
    Scanner::new(model.clone())?.rows(cfg)
}

/// Dip fit of a scan plus derived figures. Widths are in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanFit {
    pub fit: DipFit,
    /// Level subtracted from the baseline for the net visibility.
    pub accidental_level: f64,
    pub raw_visibility: f64,
    pub net_visibility: f64,
    pub fwhm_mm: f64,
    pub predicted_fwhm_mm: f64,
}

/// Fit the dip of `rows`. Theory scans fit `p_model` unweighted; the others
/// fit `counts` with Poisson weights and take the mean expected accidentals
/// as the net-visibility background.
///
/// Non-convergence is reported through `fit.converged`; the visibilities
/// are NaN whenever they are undefined.
pub fn fit_scan(
    rows: &[ScanRow],
    mode: ScanMode,
    coherence_time: f64,
    group_index: f64,
) -> Result<ScanFit> {
    let xs: Vec<f64> = rows.iter().map(|r| r.delta_l_mm).collect();
    let (ys, options, accidental_level): (Vec<f64>, _, _) = match mode {
        ScanMode::Theory => (
            rows.iter().map(|r| r.p_model).collect(),
            FitOptions::unweighted(),
            0.0,
        ),
        _ => (
            rows.iter().map(|r| r.counts as f64).collect(),
            FitOptions::default(),
            rows.iter().map(|r| r.expected_accidentals).sum::<f64>() / rows.len().max(1) as f64,
        ),
    };
    let fit = fit_gaussian_dip(&xs, &ys, &options)?;
    let (raw_visibility, net_visibility) = if fit.converged {
        visibilities_from_fit(&fit, accidental_level).unwrap_or((f64::NAN, f64::NAN))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ScanFit {
        fit,
        accidental_level,
        raw_visibility,
        net_visibility,
        fwhm_mm: fit.fwhm(),
        predicted_fwhm_mm: dip_width_prediction(coherence_time, group_index)? * 1e3,
    })
}

impl ScanFit {
    pub fn require_converged(&self) -> Result<()> {
        if self.fit.converged {
            Ok(())
        } else {
            Err(SimError::NotConverged {
                iterations: self.fit.iterations,
            })
        }
    }

    /// Human-readable report, one `name: value` per line.
    pub fn summary(&self) -> String {
        let f = &self.fit;
        let sd = |v: f64| v.sqrt();
        format!(
            "converged: {}\n\
             iterations: {}\n\
             baseline: {:.6e} +- {:.2e}\n\
             depth: {:.6e} +- {:.2e}\n\
             center_mm: {:.6} +- {:.2e}\n\
             width_mm: {:.6} +- {:.2e}\n\
             fwhm_mm: {:.6}\n\
             predicted_fwhm_mm: {:.6}\n\
             accidental_level: {:.6e}\n\
             raw_visibility: {:.6}\n\
             net_visibility: {:.6}\n\
             residual_norm: {:.6e}\n",
            f.converged,
            f.iterations,
            f.baseline,
            sd(f.covariance_diag[0]),
            f.depth,
            sd(f.covariance_diag[1]),
            f.center,
            sd(f.covariance_diag[2]),
            f.width,
            sd(f.covariance_diag[3]),
            self.fwhm_mm,
            self.predicted_fwhm_mm,
            self.accidental_level,
            self.raw_visibility,
            self.net_visibility,
            f.residual_norm,
        )
    }
}
