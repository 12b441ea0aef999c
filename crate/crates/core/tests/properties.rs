use std::f64::consts::PI;
use std::sync::OnceLock;

use hom_core::consts::SPEED_OF_LIGHT;
use hom_core::counting::{expected_rates, CoincidenceSetup};
use hom_core::dip_fit::{
    dip_model, dip_width_prediction, fit_gaussian_dip, visibilities_from_fit, FitOptions,
};
use hom_core::fiber::{
    delay_difference_scale, max_link_length, two_path_delay_difference,
    two_path_delay_difference_expanded, FiberChannel,
};
use hom_core::interference::{
    coincidence_probability_exact, CoincidenceModel, InterferometerSpec,
};
use hom_core::rng::CounterRng;
use hom_core::source::{
    bandwidth_frequency_to_wavelength, bandwidth_wavelength_to_frequency, coherence_time,
    make_joint_spectrum, SourceSpec,
};
use proptest::prelude::*;

const LAMBDA0: f64 = 1566e-9;

fn omega0() -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / LAMBDA0
}

fn lab_model() -> CoincidenceModel {
    static MODEL: OnceLock<CoincidenceModel> = OnceLock::new();
    *MODEL.get_or_init(|| {
        let js = make_joint_spectrum(&SourceSpec::lab_default());
        CoincidenceModel::calibrated(&js, &InterferometerSpec::default()).unwrap()
    })
}

fn channel(label: &str, length: f64, tau0: f64, tau1: f64, tau2: f64) -> FiberChannel {
    FiberChannel::new(label, length, tau0, tau1, tau2, 4e-3).unwrap()
}

prop_compose! {
    fn arb_channel()(
        length in 0.5f64..120.0,
        tau0 in 4.8e-6f64..5.0e-6,
        tau1 in -5e-26f64..5e-26,
        tau2 in -2e-40f64..2e-40,
    ) -> FiberChannel {
        channel("x", length, tau0, tau1, tau2)
    }
}

proptest! {
    #[test]
    fn bandwidth_round_trip(dl in 0.01e-9f64..5e-9, lambda in 500e-9f64..2000e-9) {
        let nu = bandwidth_wavelength_to_frequency(dl, lambda).unwrap();
        let back = bandwidth_frequency_to_wavelength(nu, lambda).unwrap();
        prop_assert!((back - dl).abs() <= 1e-12 * dl);
    }

    #[test]
    fn coherence_time_decreases_with_filter_width(a in 0.1e-9f64..3e-9, b in 0.1e-9f64..3e-9) {
        prop_assume!((a - b).abs() > 1e-13);
        let tc = |w| coherence_time(&SourceSpec::new(783e-9, w, 1.0, 1.0).unwrap());
        prop_assert_eq!(a < b, tc(a) > tc(b));
    }

    #[test]
    fn spectrum_is_symmetric(x in 0.0f64..2e12) {
        let js = make_joint_spectrum(&SourceSpec::lab_default());
        prop_assert_eq!(js.amplitude(x), js.amplitude(-x));
        prop_assert!((js.partner(js.center() + x) - (js.center() - x)).abs() <= 1e-15 * js.center());
    }

    #[test]
    fn closed_form_and_envelope_are_even(t in 0.0f64..40e-12) {
        let m = lab_model();
        prop_assert_eq!(m.probability(t), m.probability(-t));
        prop_assert_eq!(m.envelope(t), m.envelope(-t));
    }

    #[test]
    fn envelope_bounded_and_increasing(t in 0.0f64..12e-12, dt in 1e-14f64..5e-12) {
        let m = lab_model();
        let (lo, hi) = (m.envelope(t), m.envelope(t + dt));
        prop_assert!(lo >= 0.25 && hi < 0.5);
        prop_assert!(hi > lo);
    }

    #[test]
    fn direct_matches_expanded(
        a in arb_channel(),
        b in arb_channel(),
        x1 in -1.5e12f64..1.5e12,
        x2 in -1.5e12f64..1.5e12,
    ) {
        let w0 = omega0();
        let direct = two_path_delay_difference(&a, &b, w0 + x1, w0 + x2, w0);
        let expanded = two_path_delay_difference_expanded(&a, &b, w0 + x1, w0 + x2, w0);
        let scale = delay_difference_scale(&a, &b, w0 + x1, w0 + x2, w0);
        prop_assert!((direct - expanded).abs() <= 1e-15 * scale);
    }

    #[test]
    fn delay_difference_antisymmetric_and_photon_symmetric(
        a in arb_channel(),
        b in arb_channel(),
        x1 in -1.5e12f64..1.5e12,
        x2 in -1.5e12f64..1.5e12,
    ) {
        let w0 = omega0();
        let (w1, w2) = (w0 + x1, w0 + x2);
        let scale = delay_difference_scale(&a, &b, w1, w2, w0);
        let ab = two_path_delay_difference(&a, &b, w1, w2, w0);
        let ba = two_path_delay_difference(&b, &a, w1, w2, w0);
        let swapped = two_path_delay_difference(&a, &b, w2, w1, w0);
        prop_assert!((ab + ba).abs() <= 1e-15 * scale);
        prop_assert!((ab - swapped).abs() <= 1e-15 * scale);
    }

    #[test]
    fn common_tau0_shift_changes_nothing(
        length in 0.5f64..120.0,
        tau1a in -5e-26f64..5e-26,
        tau1b in -5e-26f64..5e-26,
        shift in -1e-8f64..1e-8,
        x in -1.5e12f64..1.5e12,
    ) {
        let w0 = omega0();
        let base = 4.9e-6;
        let d = |t0: f64| {
            let a = channel("a", length, t0, tau1a, 0.0);
            let b = channel("b", length, t0, tau1b, 0.0);
            two_path_delay_difference_expanded(&a, &b, w0 + x, w0 - x, w0)
        };
        prop_assert_eq!(d(base), d(base + shift));
    }

    #[test]
    fn link_length_times_spread_is_coherence_time(tc in 0.1e-12f64..50e-12, spread in 1e-15f64..5e-12) {
        let km = max_link_length(tc, spread).unwrap().finite().unwrap();
        prop_assert!((km * spread - tc).abs() <= 1e-14 * tc);
    }

    #[test]
    fn net_visibility_at_least_raw(b in 1.0f64..1e6, frac_a in 0.0f64..1.0, frac_acc in 0.0f64..0.99) {
        let fit = noiseless_fit([b, frac_a * b, 0.0, 0.6]);
        let (raw, net) = visibilities_from_fit(&fit, frac_acc * fit.baseline).unwrap();
        prop_assert!(net >= raw);
    }

    #[test]
    fn fit_invariant_under_scaling_and_translation(k in 0.01f64..100.0, shift in -2.0f64..2.0) {
        let xs = grid();
        let truth = [900.0, 380.0, 0.15, 0.55];
        let ys = sample(&truth, &xs, 3);
        let base = fit_gaussian_dip(&xs, &ys, &FitOptions::unweighted()).unwrap();

        let scaled: Vec<f64> = ys.iter().map(|y| y * k).collect();
        let f = fit_gaussian_dip(&xs, &scaled, &FitOptions::unweighted()).unwrap();
        prop_assert!((f.baseline / (k * base.baseline) - 1.0).abs() < 1e-7);
        prop_assert!((f.raw_visibility() - base.raw_visibility()).abs() < 1e-7);

        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let f = fit_gaussian_dip(&moved, &ys, &FitOptions::unweighted()).unwrap();
        prop_assert!((f.center - base.center - shift).abs() < 1e-7);
        prop_assert!((f.width / base.width - 1.0).abs() < 1e-7);
        prop_assert!((f.depth / base.depth - 1.0).abs() < 1e-7);
    }

    #[test]
    fn fit_never_worse_than_initial_guess(seed in 0u64..10_000) {
        let xs = grid();
        let ys = sample(&[17_000.0, 6_500.0, 0.0, 0.62], &xs, seed);
        let f = fit_gaussian_dip(&xs, &ys, &FitOptions::default()).unwrap();
        prop_assert!(f.converged);
        prop_assert!(f.residual_norm <= f.initial_residual_norm);
        prop_assert!(f.depth >= 0.0 && f.depth <= f.baseline && f.width > 0.0);
    }
}

fn grid() -> Vec<f64> {
    (0..23).map(|k| -5.5 + 0.5 * k as f64).collect()
}

fn sample(truth: &[f64; 4], xs: &[f64], seed: u64) -> Vec<f64> {
    xs.iter()
        .enumerate()
        .map(|(k, &x)| CounterRng::for_stream(seed, k as u64).poisson(dip_model(truth, x)) as f64)
        .collect()
}

fn noiseless_fit(truth: [f64; 4]) -> hom_core::dip_fit::DipFit {
    let xs = grid();
    let ys: Vec<f64> = xs.iter().map(|&x| dip_model(&truth, x)).collect();
    fit_gaussian_dip(&xs, &ys, &FitOptions::unweighted()).unwrap()
}

#[test]
fn oracle_equivalence_on_dense_grid() {
    let js = make_joint_spectrum(&SourceSpec::lab_default());
    let spec = InterferometerSpec::default();
    let m = CoincidenceModel::calibrated(&js, &spec).unwrap();
    let worst = (0..501)
        .map(|k| m.delta() * (-5.0 + 0.02 * k as f64))
        .map(|t| (coincidence_probability_exact(&js, &spec, t).unwrap() - m.probability(t)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn random_phase_average_converges_to_envelope() {
    let m = lab_model();
    let mut rng = CounterRng::for_stream(3, 0);
    for tau in [0.0, 1e-12, 3.6e-12, 8e-12] {
        for (n, tol) in [(10_000usize, 1e-2), (160_000, 2.5e-3)] {
            let mean = (0..n)
                .map(|_| m.probability_at_phase(tau, 2.0 * PI * rng.next_f64()))
                .sum::<f64>()
                / n as f64;
            // Standard deviation of the integrand is at most 1/(4√2).
            assert!((mean - m.envelope(tau)).abs() < tol, "tau {tau} n {n}: {mean}");
        }
    }
}

#[test]
fn fitted_width_matches_prediction_without_drift() {
    let m = lab_model();
    let n_eff = 1.8;
    let xs: Vec<f64> = (0..441).map(|k| -5.5 + 0.025 * k as f64).collect();
    let tau = |x_mm: f64| n_eff * x_mm * 1e-3 / SPEED_OF_LIGHT;
    let predicted = dip_width_prediction(4.25e-12, n_eff).unwrap() * 1e3;

    let clean: Vec<f64> = xs.iter().map(|&x| m.envelope(tau(x))).collect();
    let f = fit_gaussian_dip(&xs, &clean, &FitOptions::unweighted()).unwrap();
    assert!((f.fwhm() / predicted - 1.0).abs() < 0.02, "{} vs {predicted}", f.fwhm());

    let drift = n_eff * 0.146e-3 / SPEED_OF_LIGHT;
    let blurred: Vec<f64> = xs.iter().map(|&x| m.blurred_envelope(tau(x), drift)).collect();
    let f = fit_gaussian_dip(&xs, &blurred, &FitOptions::unweighted()).unwrap();
    assert!(f.fwhm() >= predicted);
}

#[test]
fn default_counting_reproduces_accidental_fraction() {
    let setup = CoincidenceSetup::lab_default(1e5);
    let off = expected_rates(&setup, 0.5).unwrap();
    let dip = expected_rates(&setup, 0.25).unwrap();
    let raw = (off.total() - dip.total()) / off.total();
    let net = (off.total() - dip.total()) / (off.total() - off.accidentals);
    assert!((raw - 0.5 * 0.795).abs() < 1e-12);
    assert!((net - 0.5).abs() < 1e-12);
}
