//! Weighted nonlinear least-squares fit of a Gaussian dip
//! `C(x) = B - A·exp(-(x - x₀)² / w²)`.
//!
//! The solver is Levenberg-Marquardt with Marquardt's diagonal scaling and
//! an analytic Jacobian. Parameters are projected onto `0 ≤ A ≤ B`, `w > 0`
//! after every step.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use libm::{exp, fabs, sqrt};

use crate::consts::SPEED_OF_LIGHT;
use crate::error::{ensure, Error, Result};
use crate::linalg;

/// Parameter vector `[B, A, x₀, w]`.
pub type DipParams = [f64; 4];

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Weighting {
    /// `1 / max(y, 1)`.
    #[default]
    Poisson,
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Bound on the scaled gradient, relative to the weighted data norm.
    pub gradient_tolerance: f64,
    pub weighting: Weighting,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            weighting: Weighting::Poisson,
        }
    }
}

impl FitOptions {
    pub fn unweighted() -> Self {
        Self {
            weighting: Weighting::Uniform,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipFit {
    pub baseline: f64,
    pub depth: f64,
    pub center: f64,
    /// `1/e` half-width.
    pub width: f64,
    /// `sqrt(Σ wᵢ rᵢ²)` at the solution.
    pub residual_norm: f64,
    /// Same at the initial guess.
    pub initial_residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Variances of `[B, A, x₀, w]`, scaled by the reduced chi-square.
    pub covariance_diag: [f64; 4],
}

impl DipFit {
    pub fn params(&self) -> DipParams {
        [self.baseline, self.depth, self.center, self.width]
    }

    pub fn fwhm(&self) -> f64 {
        2.0 * sqrt(LN_2) * self.width
    }

    pub fn raw_visibility(&self) -> f64 {
        self.depth / self.baseline
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        dip_model(&self.params(), x)
    }
}

pub fn dip_model(p: &DipParams, x: f64) -> f64 {
    let u = (x - p[2]) / p[3];
    p[0] - p[1] * exp(-u * u)
}

/// Analytic partial derivatives of [`dip_model`] in `[B, A, x₀, w]` order.
pub fn dip_jacobian(p: &DipParams, x: f64) -> [f64; 4] {
    let [_, a, _, w] = *p;
    let u = (x - p[2]) / w;
    let e = exp(-u * u);
    [1.0, -e, -a * e * 2.0 * u / w, -a * e * 2.0 * u * u / w]
}

/// Expected FWHM of the dip in arm-length difference: the two wave packets
/// convolve (`√2 τ_c`) and the delay maps to stretch through `c / n_eff`.
pub fn dip_width_prediction(coherence_time: f64, group_index: f64) -> Result<f64> {
    ensure(
        coherence_time.is_finite() && coherence_time > 0.0,
        "coherence_time",
        "must be positive",
    )?;
    ensure(group_index >= 1.0, "group_index", "must be at least 1")?;
    Ok(core::f64::consts::SQRT_2 * coherence_time * SPEED_OF_LIGHT / group_index)
}

/// `(raw, net)` = `(A / B, A / (B - accidental_level))`.
pub fn visibilities_from_fit(fit: &DipFit, accidental_level: f64) -> Result<(f64, f64)> {
    ensure(
        fit.baseline.is_finite() && fit.baseline > 0.0,
        "baseline",
        "must be positive",
    )?;
    ensure(
        accidental_level.is_finite() && accidental_level >= 0.0,
        "accidental_level",
        "must be non-negative",
    )?;
    if accidental_level >= fit.baseline {
        return Err(Error::DegenerateData(
            "accidental level reaches the fitted baseline",
        ));
    }
    Ok((
        fit.depth / fit.baseline,
        fit.depth / (fit.baseline - accidental_level),
    ))
}

struct Problem<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    weights: Vec<f64>,
}

impl Problem<'_> {
    fn chi2(&self, p: &DipParams) -> f64 {
        self.xs
            .iter()
            .zip(self.ys)
            .zip(&self.weights)
            .map(|((&x, &y), &w)| {
                let r = y - dip_model(p, x);
                w * r * r
            })
            .sum()
    }

    /// `(JᵀWJ, JᵀWr, χ²)`.
    fn normal_equations(&self, p: &DipParams) -> ([[f64; 4]; 4], [f64; 4], f64) {
        let mut h = [[0.0; 4]; 4];
        let mut g = [0.0; 4];
        let mut chi2 = 0.0;
        for ((&x, &y), &w) in self.xs.iter().zip(self.ys).zip(&self.weights) {
            let j = dip_jacobian(p, x);
            let r = y - dip_model(p, x);
            chi2 += w * r * r;
            for a in 0..4 {
                g[a] += w * r * j[a];
                for b in a..4 {
                    h[a][b] += w * j[a] * j[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                h[a][b] = h[b][a];
            }
        }
        (h, g, chi2)
    }
}

fn project(mut p: DipParams, previous: &DipParams) -> DipParams {
    p[3] = fabs(p[3]);
    if !(p[3] > 0.0) || !p[3].is_finite() {
        p[3] = previous[3];
    }
    if p[0] > 0.0 {
        p[1] = p[1].clamp(0.0, p[0]);
    } else {
        p[1] = p[1].max(0.0);
    }
    p
}

/// Depth bound that the current point sits on while the gradient pushes
/// against it.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ActiveBound {
    None,
    NoDip,
    FullDip,
}

fn active_bound(p: &DipParams, g: &[f64; 4]) -> ActiveBound {
    if p[1] <= 0.0 && g[1] < 0.0 {
        ActiveBound::NoDip
    } else if p[1] >= p[0] && g[1] > 0.0 {
        ActiveBound::FullDip
    } else {
        ActiveBound::None
    }
}

/// Directions the parameters may move along under `bound`; `None` marks
/// the frozen one. On `A = B` the baseline and depth move together.
fn free_directions(bound: ActiveBound) -> [Option<[f64; 4]>; 4] {
    let e = |i: usize| {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        Some(v)
    };
    match bound {
        ActiveBound::None => [e(0), e(1), e(2), e(3)],
        ActiveBound::NoDip => [e(0), None, e(2), e(3)],
        ActiveBound::FullDip => [Some([1.0, 1.0, 0.0, 0.0]), None, e(2), e(3)],
    }
}

/// Normal equations in the free directions; frozen ones get an identity row
/// and a zero right-hand side.
fn restrict(
    h: &[[f64; 4]; 4],
    g: &[f64; 4],
    dirs: &[Option<[f64; 4]>; 4],
) -> ([[f64; 4]; 4], [f64; 4]) {
    let mut hr = [[0.0; 4]; 4];
    let mut gr = [0.0; 4];
    for i in 0..4 {
        let Some(di) = dirs[i] else {
            hr[i][i] = 1.0;
            continue;
        };
        gr[i] = (0..4).map(|k| di[k] * g[k]).sum();
        for j in 0..4 {
            if let Some(dj) = dirs[j] {
                hr[i][j] = (0..4)
                    .map(|k| (0..4).map(|l| di[k] * h[k][l] * dj[l]).sum::<f64>())
                    .sum();
            }
        }
    }
    (hr, gr)
}

/// Reduction of χ² promised by a full Gauss-Newton step. Once it drops
/// below the rounding of χ² no further step can be verified.
fn newton_decrement(hr: &[[f64; 4]; 4], gr: &[f64; 4]) -> f64 {
    match linalg::solve(*hr, *gr) {
        Some(s) if s.iter().all(|v| v.is_finite()) => (0..4).map(|i| s[i] * gr[i]).sum(),
        _ => f64::INFINITY,
    }
}

/// Seed: `B` from the outer 20 % of points, `A = B - min`, `x₀` at the
/// minimum, `w` half the span of points below `B - A/2`.
pub fn initial_guess(xs: &[f64], ys: &[f64]) -> DipParams {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let n = xs.len();
    let k = ((n as f64 * 0.1) + 0.5) as usize;
    let k = k.max(1);
    let outer = order[..k].iter().chain(&order[n - k..]);
    let baseline = outer.map(|&i| ys[i]).sum::<f64>() / (2 * k) as f64;

    let (imin, ymin) = ys
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &y)| if y < acc.1 { (i, y) } else { acc });
    let depth = (baseline - ymin).max(0.0);
    let half = baseline - 0.5 * depth;
    let (lo, hi) = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y < half)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&x, _)| {
            (lo.min(x), hi.max(x))
        });
    let mut width = 0.5 * (hi - lo);
    if !(width > 0.0) || !width.is_finite() {
        // Fall back to the smallest positive sample spacing.
        width = order
            .windows(2)
            .map(|w| xs[w[1]] - xs[w[0]])
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
    }
    [baseline, depth, xs[imin], width]
}

/// Fit the Gaussian dip to `(xs, ys)`.
///
/// Data without a positive baseline yields a diagnostic fit with
/// `converged = false`; so does hitting the iteration limit.
pub fn fit_gaussian_dip(xs: &[f64], ys: &[f64], options: &FitOptions) -> Result<DipFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "x and y lengths differ",
        });
    }
    if xs.len() < 5 {
        return Err(Error::DegenerateData("need at least five points"));
    }
    ensure(
        xs.iter().chain(ys).all(|v| v.is_finite()),
        "points",
        "must be finite",
    )?;
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateData("all x values are equal"));
    }
    let weights = match &options.weighting {
        Weighting::Poisson => ys.iter().map(|&y| 1.0 / y.max(1.0)).collect(),
        Weighting::Uniform => alloc::vec![1.0; xs.len()],
        Weighting::Explicit(w) => {
            ensure(w.len() == xs.len(), "weights", "length must match the data")?;
            ensure(
                w.iter().all(|&v| v.is_finite() && v >= 0.0),
                "weights",
                "must be finite and non-negative",
            )?;
            w.clone()
        }
    };
    let problem = Problem { xs, ys, weights };

    let mut p = initial_guess(xs, ys);
    let initial_chi2 = problem.chi2(&p);
    let initial_residual_norm = sqrt(initial_chi2);
    if !(p[0] > 0.0) {
        return Ok(DipFit {
            baseline: p[0],
            depth: p[1],
            center: p[2],
            width: p[3],
            residual_norm: initial_residual_norm,
            initial_residual_norm,
            converged: false,
            iterations: 0,
            covariance_diag: [f64::NAN; 4],
        });
    }

    let data_norm = sqrt(
        ys.iter()
            .zip(&problem.weights)
            .map(|(&y, &w)| w * y * y)
            .sum::<f64>(),
    );
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut polish = 0;
    let mut iterations = 0;
    // Largest gradient component in units of its curvature, over the free
    // directions only.
    let measure_at = |p: &DipParams, h: &[[f64; 4]; 4], g: &[f64; 4]| {
        let dirs = free_directions(active_bound(p, g));
        let (hr, gr) = restrict(h, g, &dirs);
        let m = (0..4)
            .filter(|&i| dirs[i].is_some() && hr[i][i] > 0.0)
            .map(|i| fabs(gr[i]) / sqrt(hr[i][i]))
            .fold(0.0f64, f64::max)
            / data_norm;
        (m, dirs, hr, gr)
    };
    // Near the optimum χ² stops resolving improvements; steps that keep it
    // flat to rounding are then judged by the gradient instead.
    let chi2_rounding = 8.0 * xs.len() as f64 * f64::EPSILON;
    let (mut h, mut g, mut chi2) = problem.normal_equations(&p);

    while iterations < options.max_iterations {
        let (measure, dirs, hr, gr) = measure_at(&p, &h, &g);
        if measure <= options.gradient_tolerance || newton_decrement(&hr, &gr) <= chi2_rounding * chi2 {
            converged = true;
        }
        if converged && (polish >= 3 || measure == 0.0) {
            break;
        }
        if converged {
            polish += 1;
        }
        iterations += 1;

        let diag_floor = (0..4).map(|i| hr[i][i]).fold(0.0f64, f64::max) * 1e-12;
        let mut damped = hr;
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += lambda * hr[i][i].max(diag_floor);
        }
        let Some(reduced_step) = linalg::solve(damped, gr) else {
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e20 {
                break;
            }
            continue;
        };
        // Reduction of χ² predicted by the linearized model.
        let predicted: f64 = (0..4)
            .map(|i| reduced_step[i] * (2.0 * gr[i] - (0..4).map(|j| hr[i][j] * reduced_step[j]).sum::<f64>()))
            .sum();
        let mut trial = p;
        for (d, s) in dirs.iter().zip(reduced_step) {
            if let Some(d) = d {
                for k in 0..4 {
                    trial[k] += d[k] * s;
                }
            }
        }
        let trial = project(trial, &p);
        let trial_chi2 = problem.chi2(&trial);
        let accepted = if trial_chi2 < chi2 {
            Some(problem.normal_equations(&trial))
        } else if trial_chi2 <= chi2 * (1.0 + chi2_rounding) {
            let next = problem.normal_equations(&trial);
            (measure_at(&trial, &next.0, &next.1).0 < measure).then_some(next)
        } else {
            None
        };
        if let Some(next) = accepted {
            // Gain-ratio damping update (Nielsen).
            let rho = if predicted > 0.0 { (chi2 - trial_chi2) / predicted } else { 0.0 };
            let t = 2.0 * rho - 1.0;
            lambda = (lambda * (1.0 / 3.0f64).max(1.0 - t * t * t)).max(1e-15);
            nu = 2.0;
            p = trial;
            (h, g, chi2) = next;
        } else {
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e20 {
                break;
            }
        }
    }

    let dof = xs.len().saturating_sub(4).max(1) as f64;
    let covariance_diag = match linalg::inverse_diagonal(h) {
        Some(d) => d.map(|v| v * chi2 / dof),
        None => [f64::NAN; 4],
    };
    Ok(DipFit {
        baseline: p[0],
        depth: p[1],
        center: p[2],
        width: p[3],
        residual_norm: sqrt(chi2),
        initial_residual_norm,
        converged,
        iterations,
        covariance_diag,
    })
}
