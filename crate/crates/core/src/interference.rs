//! Two-photon evolution through BS1, the delayed arms and BS2.
//!
//! Both photons of a pair enter the same input port of BS1. Arm `a` is
//! delayed by `τ` relative to arm `b`; BS2 recombines them into outputs `c`
//! and `d`. A single photon at frequency `ω` leaves through `c` with
//! amplitude `∝ sin(ωτ/2)` and through `d` with amplitude `∝ cos(ωτ/2)` for
//! balanced splitters, which gives the four output terms `cd`, `dc`, `cc`
//! and `dd` of the two-photon state.
//!
//! The exact coincidence probability integrates those terms over the
//! detuning `Ω`. For a Gaussian spectrum it reduces to
//! `(2 - e^{-τ²/δ²} - cos τω_p) / 4`, the superposition of a Franson-type
//! fringe and the HOM dip. The closed form's `δ` is obtained by fitting it to
//! the quadrature, never assumed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{ceil, cos, exp, fabs, log, sin, sqrt};
use num_complex::Complex64;

use crate::consts::{DETECTOR_RESOLUTION, SPEED_OF_LIGHT};
use crate::error::{ensure, Error, Result};
use crate::source::JointSpectrum;

/// Beam splitters and the stretched-fiber delay conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerSpec {
    bs1_transmittance: f64,
    bs2_transmittance: f64,
    group_index: f64,
}

impl Default for InterferometerSpec {
    fn default() -> Self {
        Self {
            bs1_transmittance: 0.5,
            bs2_transmittance: 0.5,
            group_index: 1.8,
        }
    }
}

impl InterferometerSpec {
    pub fn new(bs1_transmittance: f64, bs2_transmittance: f64, group_index: f64) -> Result<Self> {
        ensure(
            (0.0..=1.0).contains(&bs1_transmittance),
            "bs1_transmittance",
            "must lie in [0, 1]",
        )?;
        ensure(
            (0.0..=1.0).contains(&bs2_transmittance),
            "bs2_transmittance",
            "must lie in [0, 1]",
        )?;
        ensure(
            group_index.is_finite() && group_index > 1.0,
            "group_index",
            "must exceed 1",
        )?;
        Ok(Self {
            bs1_transmittance,
            bs2_transmittance,
            group_index,
        })
    }

    pub fn bs1_transmittance(&self) -> f64 {
        self.bs1_transmittance
    }

    pub fn bs2_transmittance(&self) -> f64 {
        self.bs2_transmittance
    }

    pub fn group_index(&self) -> f64 {
        self.group_index
    }

    /// Output-mode amplitudes `(c, d)` of one photon at `omega`, split into
    /// the component sharing arm `b`'s mode and the orthogonal remainder.
    fn photon_amplitudes(&self, omega: f64, tau: f64, overlap: f64) -> [[Complex64; 2]; 2] {
        let t1 = sqrt(self.bs1_transmittance);
        let r1 = sqrt(1.0 - self.bs1_transmittance);
        let t2 = sqrt(self.bs2_transmittance);
        let r2 = sqrt(1.0 - self.bs2_transmittance);
        let i = Complex64::new(0.0, 1.0);
        let phase = omega * tau;
        let delay = Complex64::new(cos(phase), -sin(phase));
        let parallel = sqrt(overlap);
        let orthogonal = sqrt(1.0 - overlap);

        // Port c collects t1·t2 via arm b and -r1·r2·e^{-iωτ} via arm a,
        // which is ∝ sin(ωτ/2) for 50/50 splitters.
        let c_par = Complex64::new(t1 * t2, 0.0) - delay * (r1 * r2 * parallel);
        let c_orth = -delay * (r1 * r2 * orthogonal);
        let d_par = i * (delay * (r1 * t2 * parallel) + t1 * r2);
        let d_orth = i * delay * (r1 * t2 * orthogonal);
        [[c_par, c_orth], [d_par, d_orth]]
    }

    /// Probabilities that one photon at `omega` exits via `c` and via `d`.
    fn photon_port_probabilities(&self, omega: f64, tau: f64, overlap: f64) -> (f64, f64) {
        let [c, d] = self.photon_amplitudes(omega, tau, overlap);
        (
            c[0].norm_sqr() + c[1].norm_sqr(),
            d[0].norm_sqr() + d[1].norm_sqr(),
        )
    }
}

/// Probabilities of the three detection classes at BS2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities {
    /// One photon in `c`, one in `d`.
    pub cd: f64,
    pub cc: f64,
    pub dd: f64,
}

impl OutcomeProbabilities {
    pub fn total(&self) -> f64 {
        self.cd + self.cc + self.dd
    }
}

fn check_delay(tau: f64) -> Result<()> {
    if !tau.is_finite() || fabs(tau) > DETECTOR_RESOLUTION {
        return Err(Error::OutOfModelDomain {
            tau,
            limit: DETECTOR_RESOLUTION,
        });
    }
    Ok(())
}

/// Integrate the squared amplitudes of the four output terms over the
/// detuning `Ω`, with the twin photon at `ω₀ - Ω`.
pub fn evolve_state(
    js: &JointSpectrum,
    spec: &InterferometerSpec,
    tau: f64,
) -> Result<OutcomeProbabilities> {
    check_delay(tau)?;
    let sigma = js.amplitude_sigma();
    let center = js.center();
    let overlap = js.mode_overlap();

    // |f|² decays as exp(-Ω²/σ²); ±10σ leaves e^-100. The integrand
    // oscillates with period π/|τ| in Ω, sample it at least 32 times per period.
    let half_span = 10.0 * sigma;
    let by_oscillation = ceil(2.0 * half_span * 32.0 * fabs(tau) / PI) as usize;
    let intervals = by_oscillation.clamp(4000, 4_000_000);
    let h = 2.0 * half_span / intervals as f64;

    let mut cd = 0.0;
    let mut cc = 0.0;
    let mut dd = 0.0;
    let mut weight_sum = 0.0;
    for k in 0..=intervals {
        let detuning = -half_span + k as f64 * h;
        let edge = if k == 0 || k == intervals { 0.5 } else { 1.0 };
        let w = edge * js.intensity(detuning);
        let (c1, d1) = spec.photon_port_probabilities(center + detuning, tau, overlap);
        let (c2, d2) = spec.photon_port_probabilities(center - detuning, tau, overlap);
        cd += w * (c1 * d2 + d1 * c2);
        cc += w * c1 * c2;
        dd += w * d1 * d2;
        weight_sum += w;
    }
    if fabs(weight_sum * h - 1.0) > 1e-9 {
        return Err(Error::InvalidParameter {
            name: "joint_spectrum",
            reason: "spectrum is not normalized",
        });
    }
    Ok(OutcomeProbabilities {
        cd: cd * h,
        cc: cc * h,
        dd: dd * h,
    })
}

/// Coincidence (`cd`) probability by spectral quadrature. This is the
/// oracle the closed form is checked and calibrated against.
pub fn coincidence_probability_exact(
    js: &JointSpectrum,
    spec: &InterferometerSpec,
    tau: f64,
) -> Result<f64> {
    Ok(evolve_state(js, spec, tau)?.cd)
}

/// `(2 - e^{-τ²/δ²} - cos τω_p) / 4`.
pub fn coincidence_probability_closed(delta: f64, omega_p: f64, tau: f64) -> Result<f64> {
    ensure(delta.is_finite() && delta > 0.0, "delta", "must be positive")?;
    Ok(closed_form(delta, omega_p, 1.0, tau, 0.0))
}

/// Phase-averaged closed form, `(2 - e^{-τ²/δ²}) / 4`.
pub fn averaged_envelope(delta: f64, tau: f64) -> Result<f64> {
    ensure(delta.is_finite() && delta > 0.0, "delta", "must be positive")?;
    Ok(0.25 * (2.0 - hom_term(delta, tau)))
}

fn hom_term(delta: f64, tau: f64) -> f64 {
    exp(-(tau * tau) / (delta * delta))
}

fn closed_form(delta: f64, omega_p: f64, overlap: f64, tau: f64, phase: f64) -> f64 {
    0.25 * (2.0 - overlap * hom_term(delta, tau) - overlap * cos(tau * omega_p + phase))
}

/// `(B - m) / B`.
pub fn visibility(baseline: f64, minimum: f64) -> Result<f64> {
    ensure(
        baseline.is_finite() && baseline > 0.0,
        "baseline",
        "must be positive",
    )?;
    ensure(minimum.is_finite(), "minimum", "must be finite")?;
    Ok((baseline - minimum) / baseline)
}

/// Relative delay produced by stretching one arm by `stretch` meters.
pub fn delay_from_stretch(stretch: f64, group_index: f64) -> Result<f64> {
    ensure(group_index > 1.0, "group_index", "must exceed 1")?;
    Ok(group_index * stretch / SPEED_OF_LIGHT)
}

pub fn stretch_from_delay(tau: f64, group_index: f64) -> Result<f64> {
    ensure(group_index > 1.0, "group_index", "must exceed 1")?;
    Ok(tau * SPEED_OF_LIGHT / group_index)
}

/// Closed-form coincidence model with a calibrated `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceModel {
    delta: f64,
    omega_p: f64,
    overlap: f64,
}

impl CoincidenceModel {
    pub fn new(delta: f64, omega_p: f64, overlap: f64) -> Result<Self> {
        ensure(delta.is_finite() && delta > 0.0, "delta", "must be positive")?;
        ensure(
            omega_p.is_finite() && omega_p > 0.0,
            "omega_p",
            "must be positive",
        )?;
        ensure(
            (0.0..=1.0).contains(&overlap),
            "mode_overlap",
            "must lie in [0, 1]",
        )?;
        Ok(Self {
            delta,
            omega_p,
            overlap,
        })
    }

    /// Fit `δ` against the quadrature oracle of `js` once.
    pub fn calibrated(js: &JointSpectrum, spec: &InterferometerSpec) -> Result<Self> {
        let delta = calibrate_delta(js, spec)?;
        Self::new(delta, js.pump_angular_frequency(), js.mode_overlap())
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Closed form at interferometer phase 0.
    pub fn probability(&self, tau: f64) -> f64 {
        closed_form(self.delta, self.omega_p, self.overlap, tau, 0.0)
    }

    /// Closed form with the Franson fringe shifted by `phase`.
    pub fn probability_at_phase(&self, tau: f64, phase: f64) -> f64 {
        closed_form(self.delta, self.omega_p, self.overlap, tau, phase)
    }

    /// Average of the closed form over a uniform interferometer phase.
    pub fn envelope(&self, tau: f64) -> f64 {
        0.25 * (2.0 - self.overlap * hom_term(self.delta, tau))
    }

    /// Envelope averaged over a Gaussian jitter of the delay with standard
    /// deviation `drift_rms` (seconds) during the integration.
    pub fn blurred_envelope(&self, tau: f64, drift_rms: f64) -> f64 {
        let d2 = self.delta * self.delta + 2.0 * drift_rms * drift_rms;
        let hom = self.delta / sqrt(d2) * exp(-(tau * tau) / d2);
        0.25 * (2.0 - self.overlap * hom)
    }

    /// Visibility of the phase-averaged dip, `overlap / 2`.
    pub fn envelope_visibility(&self) -> f64 {
        let baseline = 0.5;
        (baseline - self.envelope(0.0)) / baseline
    }
}

/// Least-squares `δ` of the closed form against the quadrature oracle.
///
/// The oracle is evaluated with unit mode overlap on 241 delays spanning
/// `±6/σ_Ω`; the fit is a coarse logarithmic scan followed by Gauss-Newton.
pub fn calibrate_delta(js: &JointSpectrum, spec: &InterferometerSpec) -> Result<f64> {
    let js = js.with_mode_overlap(1.0)?;
    let omega_p = js.pump_angular_frequency();
    let scale = 1.0 / js.amplitude_sigma();
    let n = 241;
    let mut taus = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for k in 0..n {
        let tau = scale * (-6.0 + 12.0 * k as f64 / (n - 1) as f64);
        let exact = coincidence_probability_exact(&js, spec, tau)?;
        // Residual target for the HOM term alone: 2 - cos τω_p - 4p = e^{-τ²/δ²}.
        taus.push(tau);
        targets.push(2.0 - cos(tau * omega_p) - 4.0 * exact);
    }

    let cost = |delta: f64| -> f64 {
        taus.iter()
            .zip(&targets)
            .map(|(&t, &y)| {
                let r = y - hom_term(delta, t);
                r * r
            })
            .sum()
    };

    let mut best = scale;
    let mut best_cost = f64::INFINITY;
    let steps = 400;
    for k in 0..=steps {
        let delta = scale * exp(log(0.02) + (log(50.0) - log(0.02)) * k as f64 / steps as f64);
        let c = cost(delta);
        if c < best_cost {
            best = delta;
            best_cost = c;
        }
    }

    let mut delta = best;
    for _ in 0..100 {
        let mut jtj = 0.0;
        let mut jtr = 0.0;
        for (&t, &y) in taus.iter().zip(&targets) {
            let e = hom_term(delta, t);
            let r = y - e;
            let de = e * 2.0 * t * t / (delta * delta * delta);
            jtj += de * de;
            jtr += de * r;
        }
        if jtj <= 0.0 {
            break;
        }
        let mut step = jtr / jtj;
        let current = cost(delta);
        let mut accepted = false;
        for _ in 0..40 {
            let trial = delta + step;
            if trial > 0.0 && cost(trial) <= current {
                delta = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || fabs(step) <= 1e-15 * delta {
            break;
        }
    }
    Ok(delta)
}

/// One sample of the coincidence curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceCurvePoint {
    pub tau: f64,
    pub p_exact: f64,
    pub p_closed: f64,
    pub p_envelope: f64,
}

/// Evaluate oracle, closed form and envelope on the given delays.
pub fn coincidence_curve(
    js: &JointSpectrum,
    spec: &InterferometerSpec,
    model: &CoincidenceModel,
    taus: &[f64],
) -> Result<Vec<CoincidenceCurvePoint>> {
    taus.iter()
        .map(|&tau| {
            Ok(CoincidenceCurvePoint {
                tau,
                p_exact: coincidence_probability_exact(js, spec, tau)?,
                p_closed: model.probability(tau),
                p_envelope: model.envelope(tau),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{make_joint_spectrum, SourceSpec};

    fn lab() -> (JointSpectrum, InterferometerSpec) {
        (
            make_joint_spectrum(&SourceSpec::lab_default()),
            InterferometerSpec::default(),
        )
    }

    /// Average the exact probability over one period of `ω₀`, which removes
    /// every fringe harmonic present for balanced and unbalanced splitters.
    fn fringe_averaged_exact(js: &JointSpectrum, spec: &InterferometerSpec, tau: f64) -> f64 {
        let period = 2.0 * PI / js.center();
        let m = 16;
        (0..m)
            .map(|k| coincidence_probability_exact(js, spec, tau + period * k as f64 / m as f64).unwrap())
            .sum::<f64>()
            / m as f64
    }

    #[test]
    fn zero_delay_bunches_perfectly() {
        let (js, spec) = lab();
        let out = evolve_state(&js, &spec, 0.0).unwrap();
        // sin(0) = 0 removes the cd, dc and cc terms: both photons leave via d.
        assert!(out.cd.abs() < 1e-15);
        assert!(out.cc.abs() < 1e-15);
        assert!((out.dd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitarity_on_a_delay_grid() {
        let (js, spec) = lab();
        for k in -20..=20 {
            let tau = k as f64 * 1.3e-12;
            let out = evolve_state(&js, &spec, tau).unwrap();
            assert!((out.total() - 1.0).abs() < 1e-9, "{tau}: {}", out.total());
        }
    }

    #[test]
    fn distinguishable_limit_is_one_half() {
        let (js, spec) = lab();
        let tau = 40.0 / js.amplitude_sigma();
        let avg = fringe_averaged_exact(&js, &spec, tau);
        assert!((avg - 0.5).abs() < 1e-9, "{avg}");
    }

    #[test]
    fn exact_rejects_delays_beyond_resolution() {
        let (js, spec) = lab();
        assert!(matches!(
            coincidence_probability_exact(&js, &spec, 2e-9),
            Err(Error::OutOfModelDomain { .. })
        ));
        assert!(coincidence_probability_exact(&js, &spec, 1e-9).is_ok());
    }

    #[test]
    fn closed_form_examples() {
        let wp = SourceSpec::lab_default().pump_angular_frequency();
        assert_eq!(coincidence_probability_closed(1e-12, wp, 0.0).unwrap(), 0.0);
        // cos τω_p = -1, hom term negligible.
        let tau = 101.0 * PI / wp;
        let p = coincidence_probability_closed(1e-14, wp, tau).unwrap();
        assert!((p - 0.75).abs() < 1e-9, "{p}");
        assert!(coincidence_probability_closed(0.0, wp, 0.0).is_err());
        assert!(coincidence_probability_closed(-1.0, wp, 0.0).is_err());
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(averaged_envelope(1e-12, 0.0).unwrap(), 0.25);
        assert!((averaged_envelope(1e-12, 1e-9).unwrap() - 0.5).abs() < 1e-15);
        let b = averaged_envelope(1e-12, 1e-9).unwrap();
        assert!((visibility(b, averaged_envelope(1e-12, 0.0).unwrap()).unwrap() - 0.5).abs() < 1e-15);
        assert!(averaged_envelope(0.0, 0.0).is_err());
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(0.5, 0.25).unwrap(), 0.5);
        assert_eq!(visibility(0.7, 0.7).unwrap(), 0.0);
        let v = visibility(0.8, 0.3).unwrap();
        assert!((visibility(0.8 * 7.5, 0.3 * 7.5).unwrap() - v).abs() < 1e-15);
        assert!(visibility(0.0, 0.0).is_err());
        assert!(visibility(-1.0, -2.0).is_err());
    }

    #[test]
    fn delay_from_stretch_examples() {
        let t = delay_from_stretch(1e-3, 1.8).unwrap();
        assert!((t - 6.004_153_713_566_7e-12).abs() < 1e-24, "{t}");
        assert_eq!(delay_from_stretch(0.0, 1.8).unwrap(), 0.0);
        // One fringe period: τω_p = 2π.
        let wp = SourceSpec::lab_default().pump_angular_frequency();
        let dl = stretch_from_delay(2.0 * PI / wp, 1.8).unwrap();
        assert!((dl - 435e-9).abs() < 1e-15, "{dl}");
        assert!(delay_from_stretch(1e-3, 1.0).is_err());
    }

    #[test]
    fn calibrated_delta_matches_gaussian_identity() {
        // For f ∝ exp(-Ω²/2σ²) the dip term is exp(-σ²τ²), so δ = 1/σ.
        let (js, spec) = lab();
        let delta = calibrate_delta(&js, &spec).unwrap();
        let analytic = 1.0 / js.amplitude_sigma();
        assert!(((delta - analytic) / analytic).abs() < 1e-8, "{delta} vs {analytic}");
    }

    #[test]
    fn mode_overlap_scales_visibility() {
        let (js, spec) = lab();
        let delta = calibrate_delta(&js, &spec).unwrap();
        for p in [0.0, 0.5, 1.0] {
            let m = CoincidenceModel::new(delta, js.pump_angular_frequency(), p).unwrap();
            assert!((m.envelope_visibility() - 0.5 * p).abs() < 1e-15);

            // Oracle agrees: fringe-averaged exact visibility is p/2 too.
            let jsp = js.with_mode_overlap(p).unwrap();
            let at_zero = fringe_averaged_exact(&jsp, &spec, 0.0);
            let far = fringe_averaged_exact(&jsp, &spec, 40.0 * delta);
            let v = visibility(far, at_zero).unwrap();
            assert!((v - 0.5 * p).abs() < 1e-6, "p={p}: {v}");
        }
    }

    #[test]
    fn blurred_envelope_matches_quadrature() {
        let (js, spec) = lab();
        let m = CoincidenceModel::calibrated(&js, &spec).unwrap();
        let s = 0.4 * m.delta();
        for tau in [0.0, 0.5 * m.delta(), 1.7 * m.delta()] {
            // Simpson over the Gaussian jitter, ±10 s.
            let n = 2000;
            let h = 20.0 * s / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let x = -10.0 * s + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let g = (-x * x / (2.0 * s * s)).exp() / ((2.0 * PI).sqrt() * s);
                acc += w * g * m.envelope(tau + x);
            }
            let q = acc * h / 3.0;
            assert!((q - m.blurred_envelope(tau, s)).abs() < 1e-12);
        }
        assert_eq!(m.blurred_envelope(0.3e-12, 0.0), m.envelope(0.3e-12));
    }

    #[test]
    fn coincidence_curve_rows_are_consistent() {
        let (js, spec) = lab();
        let m = CoincidenceModel::calibrated(&js, &spec).unwrap();
        let taus = [-2e-12, 0.0, 3e-12];
        let curve = coincidence_curve(&js, &spec, &m, &taus).unwrap();
        for pt in curve {
            for p in [pt.p_exact, pt.p_closed, pt.p_envelope] {
                assert!((0.0..=1.0).contains(&p));
            }
            assert!((pt.p_exact - pt.p_closed).abs() < 1e-6);
        }
    }

    #[test]
    fn unbalanced_splitters_lose_visibility() {
        let js = lab().0;
        let delta = 1.0 / js.amplitude_sigma();
        let bal = InterferometerSpec::default();
        let v_bal = visibility(
            fringe_averaged_exact(&js, &bal, 40.0 * delta),
            fringe_averaged_exact(&js, &bal, 0.0),
        )
        .unwrap();
        let unbal = InterferometerSpec::new(0.7, 0.4, 1.8).unwrap();
        let v_unbal = visibility(
            fringe_averaged_exact(&js, &unbal, 40.0 * delta),
            fringe_averaged_exact(&js, &unbal, 0.0),
        )
        .unwrap();
        assert!((v_bal - 0.5).abs() < 1e-6);
        assert!(v_unbal < v_bal - 1e-3, "{v_unbal}");
    }
}
