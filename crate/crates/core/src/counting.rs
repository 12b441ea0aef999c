//! Detection chain: efficiencies, dark counts, gating, accidentals and
//! Poisson sampling of coincidence counts.
//!
//! One detector runs free and triggers the other, which is gated. A
//! coincidence needs both photons of a pair to leave through different ports
//! and both to be detected. Accidentals are trigger firings (true singles and
//! darks) coinciding with a false firing of the gated detector inside the
//! window (its dark probability, or an uncorrelated photon).

use alloc::string::String;

use crate::dip_fit::{fit_gaussian_dip, visibilities_from_fit, FitOptions};
use crate::error::{ensure, Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorMode {
    /// Dark counts per second.
    FreeRunning { dark_rate: f64 },
    /// Dark count probability per nanosecond of open gate.
    Gated { dark_prob_per_ns: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub label: String,
    pub efficiency: f64,
    pub mode: DetectorMode,
}

impl DetectorModel {
    pub fn new(label: impl Into<String>, efficiency: f64, mode: DetectorMode) -> Result<Self> {
        ensure(
            (0.0..=1.0).contains(&efficiency),
            "efficiency",
            "must lie in [0, 1]",
        )?;
        let dark = match mode {
            DetectorMode::FreeRunning { dark_rate } => dark_rate,
            DetectorMode::Gated { dark_prob_per_ns } => dark_prob_per_ns,
        };
        ensure(dark.is_finite() && dark >= 0.0, "dark", "must be non-negative")?;
        Ok(Self {
            label: label.into(),
            efficiency,
            mode,
        })
    }

    /// Passive-quenching InGaAs APD: 7 %, 2 kHz darks.
    pub fn lab_free_running() -> Self {
        Self::new("C", 0.07, DetectorMode::FreeRunning { dark_rate: 2e3 }).expect("valid")
    }

    /// Gated InGaAs APD: 8 %, 1e-5 darks per ns.
    pub fn lab_gated() -> Self {
        Self::new("D", 0.08, DetectorMode::Gated { dark_prob_per_ns: 1e-5 }).expect("valid")
    }

    fn is_free_running(&self) -> bool {
        matches!(self.mode, DetectorMode::FreeRunning { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceSetup {
    pub det_c: DetectorModel,
    pub det_d: DetectorModel,
    /// Coincidence window, s.
    pub window: f64,
    /// Integration time per point, s.
    pub integration_time: f64,
    /// Pairs per second reaching BS2.
    pub pair_rate_at_bs2: f64,
    /// When set, accidentals are a constant rate making up this fraction of
    /// the distinguishable-photon baseline, `A / (S(1/2) + A)`, instead of
    /// the detector-chain estimate.
    pub accidental_fraction: Option<f64>,
}

impl CoincidenceSetup {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.window.is_finite() && self.window > 0.0,
            "window",
            "must be positive",
        )?;
        ensure(
            self.integration_time.is_finite() && self.integration_time > 0.0,
            "integration_time",
            "must be positive",
        )?;
        ensure(
            self.pair_rate_at_bs2.is_finite() && self.pair_rate_at_bs2 >= 0.0,
            "pair_rate_at_bs2",
            "must be non-negative",
        )?;
        ensure(
            self.det_c.is_free_running() || self.det_d.is_free_running(),
            "detectors",
            "at least one detector must run free to trigger the other",
        )?;
        if let Some(f) = self.accidental_fraction {
            ensure(
                (0.0..1.0).contains(&f),
                "accidental_fraction",
                "must lie in [0, 1)",
            )?;
        }
        Ok(())
    }

    /// Laboratory detectors, 2 ns window, 50 s integration.
    pub fn lab_default(pair_rate_at_bs2: f64) -> Self {
        Self {
            det_c: DetectorModel::lab_free_running(),
            det_d: DetectorModel::lab_gated(),
            window: 2e-9,
            integration_time: 50.0,
            pair_rate_at_bs2,
            accidental_fraction: Some(0.205),
        }
    }
}

/// Expected coincidence rates, counts/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub signal: f64,
    pub accidentals: f64,
}

impl Rates {
    pub fn total(&self) -> f64 {
        self.signal + self.accidentals
    }
}

fn signal_rate(setup: &CoincidenceSetup, p_coinc: f64) -> f64 {
    setup.pair_rate_at_bs2 * setup.det_c.efficiency * setup.det_d.efficiency * p_coinc
}

/// Accidental rate from the trigger chain. Each pair delivers one photon per
/// output port on average.
pub fn chain_accidental_rate(setup: &CoincidenceSetup) -> Result<f64> {
    setup.validate()?;
    let (trigger, gated) = if setup.det_c.is_free_running() {
        (&setup.det_c, &setup.det_d)
    } else {
        (&setup.det_d, &setup.det_c)
    };
    let singles = |d: &DetectorModel| setup.pair_rate_at_bs2 * d.efficiency;
    let trigger_rate = singles(trigger)
        + match trigger.mode {
            DetectorMode::FreeRunning { dark_rate } => dark_rate,
            DetectorMode::Gated { .. } => 0.0,
        };
    let false_fire = singles(gated) * setup.window
        + match gated.mode {
            DetectorMode::Gated { dark_prob_per_ns } => dark_prob_per_ns * setup.window * 1e9,
            DetectorMode::FreeRunning { dark_rate } => dark_rate * setup.window,
        };
    Ok(trigger_rate * false_fire)
}

/// Signal and accidental coincidence rates for coincidence probability
/// `p_coinc`.
pub fn expected_rates(setup: &CoincidenceSetup, p_coinc: f64) -> Result<Rates> {
    setup.validate()?;
    ensure(
        (0.0..=1.0).contains(&p_coinc),
        "p_coinc",
        "must lie in [0, 1]",
    )?;
    let accidentals = match setup.accidental_fraction {
        Some(f) => f / (1.0 - f) * signal_rate(setup, 0.5),
        None => chain_accidental_rate(setup)?,
    };
    Ok(Rates {
        signal: signal_rate(setup, p_coinc),
        accidentals,
    })
}

/// One simulated scan point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    /// Arm length difference, m.
    pub delta_l: f64,
    /// Relative delay, s.
    pub tau: f64,
    /// Expected signal counts over the integration.
    pub expected_signal: f64,
    /// Expected accidental counts over the integration.
    pub expected_accidentals: f64,
    pub sampled_total: u64,
    /// Generator key the sample was drawn with.
    pub seed: u64,
}

/// Draw the total count of one point, Poisson with mean
/// `(signal + accidentals) · T`, from the counter-based stream `seed`.
pub fn simulate_point(
    setup: &CoincidenceSetup,
    delta_l: f64,
    tau: f64,
    p_coinc: f64,
    seed: u64,
) -> Result<CountRecord> {
    let rates = expected_rates(setup, p_coinc)?;
    let expected_signal = rates.signal * setup.integration_time;
    let expected_accidentals = rates.accidentals * setup.integration_time;
    let mut rng = CounterRng::new(seed);
    let sampled_total = rng.poisson(expected_signal + expected_accidentals);
    Ok(CountRecord {
        delta_l,
        tau,
        expected_signal,
        expected_accidentals,
        sampled_total,
        seed,
    })
}

fn fit_records(records: &[CountRecord]) -> Result<crate::dip_fit::DipFit> {
    let xs: alloc::vec::Vec<f64> = records.iter().map(|r| r.delta_l).collect();
    let ys: alloc::vec::Vec<f64> = records.iter().map(|r| r.sampled_total as f64).collect();
    let fit = fit_gaussian_dip(&xs, &ys, &FitOptions::default())?;
    if !fit.converged {
        return Err(Error::DegenerateData("dip fit did not converge"));
    }
    Ok(fit)
}

/// Raw visibility `(B - min) / B` of the Gaussian fit to the records.
pub fn raw_visibility(records: &[CountRecord]) -> Result<f64> {
    Ok(visibilities_from_fit(&fit_records(records)?, 0.0)?.0)
}

/// Visibility after subtracting `accidental_level` counts from the baseline.
pub fn net_visibility(records: &[CountRecord], accidental_level: f64) -> Result<f64> {
    Ok(visibilities_from_fit(&fit_records(records)?, accidental_level)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(pair_rate: f64) -> CoincidenceSetup {
        CoincidenceSetup {
            det_c: DetectorModel::new("C", 0.07, DetectorMode::FreeRunning { dark_rate: 0.0 }).unwrap(),
            det_d: DetectorModel::new("D", 0.08, DetectorMode::Gated { dark_prob_per_ns: 0.0 }).unwrap(),
            window: 2e-9,
            integration_time: 50.0,
            pair_rate_at_bs2: pair_rate,
            accidental_fraction: None,
        }
    }

    #[test]
    fn no_light_no_darks_no_counts() {
        let r = expected_rates(&ideal(0.0), 0.0).unwrap();
        assert_eq!((r.signal, r.accidentals), (0.0, 0.0));
        assert_eq!(expected_rates(&ideal(1e5), 0.0).unwrap().signal, 0.0);
    }

    #[test]
    fn pair_rate_scaling() {
        let a = expected_rates(&ideal(1e5), 0.3).unwrap();
        let b = expected_rates(&ideal(2e5), 0.3).unwrap();
        assert!((b.signal - 2.0 * a.signal).abs() < 1e-9);
        assert!((b.accidentals - 4.0 * a.accidentals).abs() < 1e-12 * b.accidentals);
    }

    #[test]
    fn signal_is_linear_in_each_efficiency() {
        let base = expected_rates(&ideal(1e5), 0.4).unwrap().signal;
        let mut s = ideal(1e5);
        s.det_c.efficiency *= 2.0;
        assert!((expected_rates(&s, 0.4).unwrap().signal - 2.0 * base).abs() < 1e-9);
        s.det_d.efficiency *= 0.5;
        assert!((expected_rates(&s, 0.4).unwrap().signal - base).abs() < 1e-9);
    }

    #[test]
    fn lab_trigger_chain() {
        let s = CoincidenceSetup {
            accidental_fraction: None,
            ..CoincidenceSetup::lab_default(1e4)
        };
        // (R η_c + 2 kHz) (1e-5/ns · 2 ns + R η_d · 2 ns)
        let expected = (1e4 * 0.07 + 2e3) * (2e-5 + 1e4 * 0.08 * 2e-9);
        let got = chain_accidental_rate(&s).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got}");
    }

    #[test]
    fn accidental_fraction_sets_raw_to_net_ratio() {
        // A/S = 0.258 <=> A/(S+A) = 0.205 <=> raw/net = 0.795.
        let s = CoincidenceSetup::lab_default(1e5);
        let r = expected_rates(&s, 0.5).unwrap();
        assert!((r.accidentals / r.signal - 0.205 / 0.795).abs() < 1e-12);
        assert!((r.accidentals / r.total() - 0.205).abs() < 1e-12);
        let raw_over_net = 1.0 - r.accidentals / r.total();
        assert!((raw_over_net - 0.795).abs() < 1e-12);
    }

    #[test]
    fn both_gated_is_rejected() {
        let mut s = ideal(1.0);
        s.det_c.mode = DetectorMode::Gated { dark_prob_per_ns: 0.0 };
        assert!(expected_rates(&s, 0.1).is_err());
        assert!(expected_rates(&ideal(1.0), 1.5).is_err());
    }

    #[test]
    fn zero_rate_point_is_zero() {
        for seed in 0..200 {
            assert_eq!(simulate_point(&ideal(0.0), 0.0, 0.0, 0.4, seed).unwrap().sampled_total, 0);
        }
    }

    #[test]
    fn poisson_statistics_over_seeds() {
        let mut s = ideal(1.0);
        s.pair_rate_at_bs2 = 400.0 / (50.0 * 0.07 * 0.08 * 0.5);
        let mu = {
            let r = simulate_point(&s, 0.0, 0.0, 0.5, 0).unwrap();
            r.expected_signal + r.expected_accidentals
        };
        assert!(mu > 400.0 && mu < 500.0, "{mu}");
        let n = 10_000u64;
        let xs: std::vec::Vec<f64> = (0..n)
            .map(|k| simulate_point(&s, 0.0, 0.0, 0.5, crate::rng::stream_key(5, k)).unwrap())
            .map(|r| {
                assert_eq!(r.expected_signal + r.expected_accidentals, mu);
                r.sampled_total as f64
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - mu).abs() < 3.0 * (mu / n as f64).sqrt(), "{mean}");
        assert!((var / mean - 1.0).abs() < 0.05, "fano {}", var / mean);
    }

    #[test]
    fn same_seed_same_record() {
        let s = CoincidenceSetup::lab_default(1e5);
        let a = simulate_point(&s, 1e-3, 6e-12, 0.3, 42).unwrap();
        let b = simulate_point(&s, 1e-3, 6e-12, 0.3, 42).unwrap();
        assert_eq!(a, b);
    }
}
