//! Fiber arms: Taylor group-delay model, two-path delay difference,
//! dispersion cancellation, pulse broadening and thermal drift.
//!
//! Delay coefficients are stored per kilometre and scaled by the arm length:
//! `τ(ω) = L (τ₀ + τ₁ (ω - ω₀) + ½ τ₂ (ω - ω₀)²)`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::fabs;

use crate::consts::SPEED_OF_LIGHT;
use crate::error::{ensure, Result};
use crate::Bound;

#[derive(Debug, Clone, PartialEq)]
pub struct FiberChannel {
    label: String,
    length_km: f64,
    /// s/km, `1 / v_g` per km.
    tau0: f64,
    /// s²/km.
    tau1: f64,
    /// s³/km.
    tau2: f64,
    /// m / (K km).
    thermal_coeff: f64,
}

impl FiberChannel {
    pub fn new(
        label: impl Into<String>,
        length_km: f64,
        tau0: f64,
        tau1: f64,
        tau2: f64,
        thermal_coeff: f64,
    ) -> Result<Self> {
        ensure(
            length_km.is_finite() && length_km >= 0.0,
            "length_km",
            "must be non-negative",
        )?;
        ensure(
            tau0.is_finite() && tau1.is_finite() && tau2.is_finite(),
            "delay coefficients",
            "must be finite",
        )?;
        ensure(
            thermal_coeff.is_finite() && thermal_coeff >= 0.0,
            "thermal_coeff",
            "must be non-negative",
        )?;
        Ok(Self {
            label: label.into(),
            length_km,
            tau0,
            tau1,
            tau2,
            thermal_coeff,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn length_km(&self) -> f64 {
        self.length_km
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn thermal_coeff(&self) -> f64 {
        self.thermal_coeff
    }

    /// Chromatic dispersion in s/m per km, `D = -(ω₀/λ₀) τ₁`.
    pub fn dispersion(&self, lambda0: f64) -> f64 {
        let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda0;
        -omega0 / lambda0 * self.tau1
    }

    /// Copy with a different length.
    pub fn with_length(&self, length_km: f64) -> Result<Self> {
        Self::new(
            self.label.clone(),
            length_km,
            self.tau0,
            self.tau1,
            self.tau2,
            self.thermal_coeff,
        )
    }
}

/// Photon frequency correlation assumed when scanning the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    /// `ω₁ + ω₂ = 2ω₀` exactly (CW-pumped pairs).
    EnergyAnticorrelated,
    /// `ω₁`, `ω₂` free (photons from independent sources).
    Independent,
}

/// Build a channel from a dispersion parameter `D` in ps/(nm km).
///
/// `tau2` in s³/km, `tau0` in s/km, `thermal` in m/(K km).
pub fn channel_from_dispersion(
    label: impl Into<String>,
    length_km: f64,
    dispersion_ps_nm_km: f64,
    lambda0: f64,
    tau2: f64,
    tau0: f64,
    thermal: f64,
) -> Result<FiberChannel> {
    ensure(
        dispersion_ps_nm_km.is_finite(),
        "dispersion",
        "must be finite",
    )?;
    ensure(lambda0.is_finite() && lambda0 > 0.0, "lambda0", "must be positive")?;
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda0;
    // ps/(nm km) -> s/(m km)
    let d_si = dispersion_ps_nm_km * 1e-3;
    let tau1 = -d_si * lambda0 / omega0;
    FiberChannel::new(label, length_km, tau0, tau1, tau2, thermal)
}

/// Total group delay of `ch` at `omega`.
pub fn propagation_delay(ch: &FiberChannel, omega: f64, omega0: f64) -> f64 {
    let x = omega - omega0;
    ch.length_km * (ch.tau0 + ch.tau1 * x + 0.5 * ch.tau2 * x * x)
}

/// Arrival-time difference between the two indistinguishable detection
/// paths: photon 1 through A and photon 2 through B, versus the reverse.
///
/// `Δτ = (τᴬ(ω₁) - τᴮ(ω₂)) - (τᴮ(ω₁) - τᴬ(ω₂))`, evaluated directly.
pub fn two_path_delay_difference(
    a: &FiberChannel,
    b: &FiberChannel,
    omega1: f64,
    omega2: f64,
    omega0: f64,
) -> f64 {
    let (ta1, tb2, tb1, ta2) = path_delays(a, b, omega1, omega2, omega0);
    let direct = (ta1 - tb2) - (tb1 - ta2);
    debug_assert!({
        let expanded = two_path_delay_difference_expanded(a, b, omega1, omega2, omega0);
        let scale = fabs(ta1) + fabs(tb2) + fabs(tb1) + fabs(ta2);
        fabs(direct - expanded) <= 1e-12 * scale + f64::MIN_POSITIVE
    });
    direct
}

fn path_delays(
    a: &FiberChannel,
    b: &FiberChannel,
    omega1: f64,
    omega2: f64,
    omega0: f64,
) -> (f64, f64, f64, f64) {
    (
        propagation_delay(a, omega1, omega0),
        propagation_delay(b, omega2, omega0),
        propagation_delay(b, omega1, omega0),
        propagation_delay(a, omega2, omega0),
    )
}

/// Sum of the magnitudes of the four path delays entering
/// [`two_path_delay_difference`]; the natural scale for its rounding error.
pub fn delay_difference_scale(
    a: &FiberChannel,
    b: &FiberChannel,
    omega1: f64,
    omega2: f64,
    omega0: f64,
) -> f64 {
    let (ta1, tb2, tb1, ta2) = path_delays(a, b, omega1, omega2, omega0);
    fabs(ta1) + fabs(tb2) + fabs(tb1) + fabs(ta2)
}

/// Same quantity through the expanded form
/// `2(τ₀ᴬ-τ₀ᴮ) + (τ₁ᴬ-τ₁ᴮ)(ω₁+ω₂-2ω₀) + ½(τ₂ᴬ-τ₂ᴮ)((ω₁-ω₀)²+(ω₂-ω₀)²)`
/// with every coefficient already multiplied by its arm length.
pub fn two_path_delay_difference_expanded(
    a: &FiberChannel,
    b: &FiberChannel,
    omega1: f64,
    omega2: f64,
    omega0: f64,
) -> f64 {
    let d0 = a.length_km * a.tau0 - b.length_km * b.tau0;
    let d1 = a.length_km * a.tau1 - b.length_km * b.tau1;
    let d2 = a.length_km * a.tau2 - b.length_km * b.tau2;
    let x1 = omega1 - omega0;
    let x2 = omega2 - omega0;
    2.0 * d0 + d1 * (x1 + x2) + 0.5 * d2 * (x1 * x1 + x2 * x2)
}

/// Largest `|Δτ|` over `ω₀ ± 3σ` under the given correlation.
///
/// `Δτ` is quadratic and separable in the two detunings, so its extremes
/// over the band lie on the band edges, the center, or the stationary point
/// of the per-photon term; only those candidates are evaluated.
pub fn max_delay_difference(
    a: &FiberChannel,
    b: &FiberChannel,
    kind: CorrelationKind,
    omega0: f64,
    sigma: f64,
) -> f64 {
    let edge = 3.0 * sigma;
    let mut candidates: Vec<f64> = alloc::vec![-edge, 0.0, edge];
    let d1 = a.length_km * a.tau1 - b.length_km * b.tau1;
    let d2 = a.length_km * a.tau2 - b.length_km * b.tau2;
    if d2 != 0.0 {
        let stationary = -d1 / d2;
        if stationary.is_finite() && fabs(stationary) < edge {
            candidates.push(stationary);
        }
    }
    let mut worst: f64 = 0.0;
    match kind {
        CorrelationKind::EnergyAnticorrelated => {
            for &x in &candidates {
                let omega1 = omega0 + x;
                let omega2 = 2.0 * omega0 - omega1;
                worst = worst.max(fabs(two_path_delay_difference(a, b, omega1, omega2, omega0)));
            }
        }
        CorrelationKind::Independent => {
            for &x in &candidates {
                for &y in &candidates {
                    let dt = two_path_delay_difference(a, b, omega0 + x, omega0 + y, omega0);
                    worst = worst.max(fabs(dt));
                }
            }
        }
    }
    worst
}

/// True iff `max |Δτ|` over the ±3σ band is within `tol` seconds.
pub fn is_dispersion_cancelled(
    a: &FiberChannel,
    b: &FiberChannel,
    kind: CorrelationKind,
    omega0: f64,
    sigma: f64,
    tol: f64,
) -> Result<bool> {
    ensure(tol.is_finite() && tol > 0.0, "tol", "must be positive")?;
    ensure(sigma.is_finite() && sigma >= 0.0, "sigma", "must be non-negative")?;
    Ok(max_delay_difference(a, b, kind, omega0, sigma) <= tol)
}

/// Broadening `D·L·Δλ` of a transform-limited pulse, in seconds.
pub fn pulse_broadening(dispersion_ps_nm_km: f64, length_km: f64, bandwidth_nm: f64) -> Result<f64> {
    ensure(
        dispersion_ps_nm_km >= 0.0 && length_km >= 0.0 && bandwidth_nm >= 0.0,
        "pulse_broadening",
        "inputs must be non-negative",
    )?;
    Ok(dispersion_ps_nm_km * length_km * bandwidth_nm * 1e-12)
}

/// Length over which a delay spread of `spread_per_km` (s/km) accumulates
/// to the coherence time, in km.
pub fn max_link_length(coherence_time: f64, spread_per_km: f64) -> Result<Bound> {
    ensure(
        spread_per_km.is_finite() && spread_per_km >= 0.0,
        "delay_spread_per_km",
        "must be non-negative",
    )?;
    if spread_per_km == 0.0 {
        return Ok(Bound::Unbounded);
    }
    Ok(Bound::Finite(coherence_time / spread_per_km))
}

/// Length change of the arm for a temperature change `delta_t`, meters.
pub fn thermal_length_drift(ch: &FiberChannel, delta_t: f64) -> f64 {
    ch.thermal_coeff * ch.length_km * delta_t
}

/// Temperature change that moves the arm by one Franson fringe,
/// `(λ_p / n_eff) / (thermal_coeff · L)`, in kelvin.
pub fn stability_for_fringe_resolution(
    ch: &FiberChannel,
    pump_wavelength: f64,
    group_index: f64,
) -> Result<Bound> {
    ensure(group_index > 1.0, "group_index", "must exceed 1")?;
    ensure(
        pump_wavelength > 0.0,
        "pump_wavelength",
        "must be positive",
    )?;
    let per_kelvin = ch.thermal_coeff * ch.length_km;
    if per_kelvin == 0.0 {
        return Ok(Bound::Unbounded);
    }
    Ok(Bound::Finite(pump_wavelength / group_index / per_kelvin))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA0: f64 = 1566e-9;

    fn omega0() -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / LAMBDA0
    }

    fn smf(label: &str, d: f64) -> FiberChannel {
        channel_from_dispersion(label, 25.3, d, LAMBDA0, 0.0, 4.9e-6, 4e-3).unwrap()
    }

    #[test]
    fn dispersion_round_trip() {
        let ch = smf("a", 17.0);
        let back = ch.dispersion(LAMBDA0) * 1e3;
        assert!((back - 17.0).abs() < 1e-12, "{back}");
        assert!(ch.tau1() < 0.0);
        assert_eq!(smf("z", 0.0).tau1(), 0.0);
        for d in [16.8, 17.9] {
            assert!(channel_from_dispersion("x", 1.0, d, LAMBDA0, 0.0, 0.0, 0.0).is_ok());
        }
        assert!(channel_from_dispersion("x", 1.0, f64::NAN, LAMBDA0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn propagation_delay_examples() {
        let w0 = omega0();
        let ch = FiberChannel::new("a", 2.0, 4.9e-6, -2e-23, 1e-37, 0.0).unwrap();
        assert_eq!(propagation_delay(&ch, w0, w0), 2.0 * 4.9e-6);
        let flat = FiberChannel::new("f", 2.0, 4.9e-6, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(
            propagation_delay(&flat, w0 + 1e12, w0),
            propagation_delay(&flat, w0 - 3e11, w0)
        );
        let doubled = ch.with_length(4.0).unwrap();
        let w = w0 + 7e11;
        assert!((propagation_delay(&doubled, w, w0) - 2.0 * propagation_delay(&ch, w, w0)).abs() < 1e-22);
    }

    #[test]
    fn identical_channels_give_zero() {
        let a = smf("a", 17.0);
        let w0 = omega0();
        for (x, y) in [(1e11, -4e11), (0.0, 3e11), (-2e11, -2e11)] {
            assert_eq!(two_path_delay_difference(&a, &a, w0 + x, w0 + y, w0), 0.0);
        }
    }

    #[test]
    fn tau1_cancels_for_anticorrelated_photons() {
        let a = smf("a", 16.8);
        let b = smf("b", 26.8).with_length(25.3).unwrap();
        let w0 = omega0();
        for x in [1e10, 3.3e11, -8e11] {
            let w1 = w0 + x;
            let w2 = 2.0 * w0 - w1;
            let dt = two_path_delay_difference_expanded(&a, &b, w1, w2, w0);
            assert_eq!(dt, 0.0);
        }
    }

    #[test]
    fn tau2_mismatch_gives_quadratic_delay() {
        let w0 = omega0();
        let m = 2.3e-38;
        let length = 25.3;
        let a = FiberChannel::new("a", length, 4.9e-6, 0.0, m, 0.0).unwrap();
        let b = FiberChannel::new("b", length, 4.9e-6, 0.0, 0.0, 0.0).unwrap();
        let omega = 4.1e11;
        let dt = two_path_delay_difference_expanded(&a, &b, w0 + omega, w0 - omega, w0);
        let expected = m * length * omega * omega;
        assert!(((dt - expected) / expected).abs() < 1e-14);
        let direct = two_path_delay_difference(&a, &b, w0 + omega, w0 - omega, w0);
        let scale = delay_difference_scale(&a, &b, w0 + omega, w0 - omega, w0);
        assert!((direct - expected).abs() <= 1e-15 * scale);
    }

    #[test]
    fn cancellation_predicate() {
        let w0 = omega0();
        let sigma = 2.77e11;
        let tol = 0.425e-12;
        let a = smf("a", 16.8);
        let b = smf("b", 17.9);
        for kind in [CorrelationKind::EnergyAnticorrelated, CorrelationKind::Independent] {
            assert!(is_dispersion_cancelled(&a, &a, kind, w0, sigma, tol).unwrap());
        }
        assert!(is_dispersion_cancelled(&a, &b, CorrelationKind::EnergyAnticorrelated, w0, sigma, 1e-18).unwrap());
        assert!(!is_dispersion_cancelled(&a, &b, CorrelationKind::Independent, w0, sigma, tol).unwrap());

        // Threshold sits at |Δτ₁ (2ω₀ - ω₁ - ω₂)| with both photons at the band edge.
        let d1 = a.length_km() * a.tau1() - b.length_km() * b.tau1();
        let edge = (d1 * 6.0 * sigma).abs();
        assert!(is_dispersion_cancelled(&a, &b, CorrelationKind::Independent, w0, sigma, edge * 1.000001).unwrap());
        assert!(!is_dispersion_cancelled(&a, &b, CorrelationKind::Independent, w0, sigma, edge * 0.999999).unwrap());
        assert!(is_dispersion_cancelled(&a, &b, CorrelationKind::Independent, w0, sigma, 0.0).is_err());
    }

    #[test]
    fn broadening_examples() {
        let t = pulse_broadening(17.0, 25.3, 0.8).unwrap();
        assert!((t - 344.08e-12).abs() < 1e-22);
        assert_eq!(pulse_broadening(0.0, 25.3, 0.8).unwrap(), 0.0);
        assert!((pulse_broadening(16.8, 25.0, 0.8).unwrap() - 336e-12).abs() < 1e-22);
    }

    #[test]
    fn link_length_examples() {
        let l = max_link_length(4.25e-12, 0.14e-12).unwrap().finite().unwrap();
        assert!((l - 30.357_142_857).abs() < 1e-8);
        assert_eq!(max_link_length(4.25e-12, 0.0).unwrap(), Bound::Unbounded);
        assert!((max_link_length(1e-12, 0.5e-12).unwrap().finite().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_examples() {
        let ch = smf("a", 17.0);
        assert!((thermal_length_drift(&ch, 1.0) - 0.1012).abs() < 1e-15);
        assert_eq!(thermal_length_drift(&ch, 0.0), 0.0);
        assert!(thermal_length_drift(&ch, -0.5) < 0.0);

        let dt = stability_for_fringe_resolution(&ch, 783e-9, 1.8).unwrap().finite().unwrap();
        assert!((dt - 4.298_418_972e-6).abs() < 1e-14, "{dt}");
        let long = ch.with_length(50.6).unwrap();
        let half = stability_for_fringe_resolution(&long, 783e-9, 1.8).unwrap().finite().unwrap();
        assert!((half - dt / 2.0).abs() < 1e-18);
        let cold = FiberChannel::new("c", 25.3, 4.9e-6, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(stability_for_fringe_resolution(&cold, 783e-9, 1.8).unwrap(), Bound::Unbounded);
    }
}
