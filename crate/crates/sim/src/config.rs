//! Experiment configuration: a line-oriented `section.key = value` file.
//!
//! Units at this boundary are nm, ps, mm, km, Hz and seconds; everything is
//! converted to SI when the core models are built. Unknown keys are errors.
//! `#` starts a comment.

use std::fmt::{self, Display};
use std::str::FromStr;

use hom_core::counting::{CoincidenceSetup, DetectorMode, DetectorModel};
use hom_core::fiber::{channel_from_dispersion, FiberChannel};
use hom_core::interference::{delay_from_stretch, InterferometerSpec};
use hom_core::source::{coherence_time, SourceSpec};

use crate::error::ConfigError;

/// Longest scan accepted without `--allow-long-scan`, mm.
pub const MAX_SCAN_SPAN_MM: f64 = 11.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScanMode {
    /// Phase-averaged dip with drift blur and Poisson counts.
    Envelope,
    /// Fixed-phase curve including the two-photon fringes.
    Fringes,
    /// Noiseless phase-averaged dip without drift.
    Theory,
}

impl Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::Envelope => "envelope",
            ScanMode::Fringes => "fringes",
            ScanMode::Theory => "theory",
        })
    }
}

impl FromStr for ScanMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "envelope" => Ok(ScanMode::Envelope),
            "fringes" => Ok(ScanMode::Fringes),
            "theory" => Ok(ScanMode::Theory),
            _ => Err("expected envelope, fringes or theory".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    FreeRunning,
    Gated,
}

impl Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::FreeRunning => "free_running",
            DetectorKind::Gated => "gated",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "free_running" => Ok(DetectorKind::FreeRunning),
            "gated" => Ok(DetectorKind::Gated),
            _ => Err("expected free_running or gated".into()),
        }
    }
}

/// A number or the literal `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl Display for Auto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Auto {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Auto::Auto);
        }
        parse_f64(s).map(Auto::Value)
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub pump_wavelength_nm: f64,
    pub filter_fwhm_nm: f64,
    pub coherence_time_ps: Auto,
    /// Pairs per second leaving the source.
    pub pair_rate: f64,
    pub mode_overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerConfig {
    pub bs1_transmittance: f64,
    pub bs2_transmittance: f64,
    pub group_index: f64,
    /// Fraction of pairs that reach BS2 with both photons.
    pub transmission: f64,
    pub scan_start_mm: f64,
    pub scan_stop_mm: f64,
    /// RMS arm-length jitter during one integration, mm.
    pub drift_rms_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberConfig {
    pub length_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub tau2_ps3_km: f64,
    pub group_index: f64,
    pub thermal_mm_per_k_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub mode: DetectorKind,
    pub dark_rate_hz: f64,
    pub dark_prob_per_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingConfig {
    pub window_ns: f64,
    pub integration_s: f64,
    /// Accidentals as a fraction of the off-dip baseline; `auto` uses the
    /// detector chain.
    pub accidental_fraction: Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionConfig {
    pub delay_spread_ps_per_km: f64,
    pub drift_rate_k_per_h: f64,
    pub band_points: usize,
    /// `auto` is a tenth of the coherence time.
    pub tolerance_ps: Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub points: usize,
    pub mode: ScanMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub interferometer: InterferometerConfig,
    pub fiber_a: FiberConfig,
    pub fiber_b: FiberConfig,
    pub detector_c: DetectorConfig,
    pub detector_d: DetectorConfig,
    pub counting: CountingConfig,
    pub dispersion: DispersionConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fiber = |d| FiberConfig {
            length_km: 25.3,
            dispersion_ps_nm_km: d,
            tau2_ps3_km: 0.0,
            group_index: 1.4682,
            thermal_mm_per_k_km: 4.0,
        };
        let detector = |efficiency, mode| DetectorConfig {
            efficiency,
            mode,
            dark_rate_hz: 2e3,
            dark_prob_per_ns: 1e-5,
        };
        Self {
            source: SourceConfig {
                pump_wavelength_nm: 783.0,
                filter_fwhm_nm: 0.8,
                coherence_time_ps: Auto::Value(4.25),
                pair_rate: 1e5,
                mode_overlap: 1.0,
            },
            interferometer: InterferometerConfig {
                bs1_transmittance: 0.5,
                bs2_transmittance: 0.5,
                group_index: 1.8,
                transmission: 1.0,
                scan_start_mm: -5.5,
                scan_stop_mm: 5.5,
                drift_rms_mm: 0.146,
            },
            fiber_a: fiber(16.8),
            fiber_b: fiber(17.9),
            detector_c: detector(0.07, DetectorKind::FreeRunning),
            detector_d: detector(0.08, DetectorKind::Gated),
            counting: CountingConfig {
                window_ns: 2.0,
                integration_s: 50.0,
                accidental_fraction: Auto::Value(0.205),
            },
            dispersion: DispersionConfig {
                delay_spread_ps_per_km: 0.14,
                drift_rate_k_per_h: 0.1,
                band_points: 13,
                tolerance_ps: Auto::Auto,
            },
            run: RunConfig {
                seed: 1,
                points: 23,
                mode: ScanMode::Envelope,
            },
        }
    }
}

fn set<T: FromStr>(slot: &mut T, key: &str, value: &str) -> Result<(), ConfigError>
where
    T::Err: Display,
{
    *slot = value
        .parse()
        .map_err(|e: T::Err| ConfigError::new(key, e.to_string()))?;
    Ok(())
}

fn set_f64(slot: &mut f64, key: &str, value: &str) -> Result<(), ConfigError> {
    *slot = parse_f64(value).map_err(|e| ConfigError::new(key, e))?;
    Ok(())
}

/// Built core objects for one configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub source: SourceSpec,
    pub interferometer: InterferometerSpec,
    pub setup: CoincidenceSetup,
    pub fiber_a: FiberChannel,
    pub fiber_b: FiberChannel,
    /// Drift blur expressed as a delay, s.
    pub drift_rms_delay: f64,
    /// Coherence time in effect, s.
    pub coherence_time: f64,
}

impl ExperimentConfig {
    /// Parse `text` on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::new(content, "expected `key = value`").at_line(line));
            };
            cfg.set(key.trim(), value.trim())
                .map_err(|e| e.at_line(line))?;
        }
        Ok(cfg)
    }

    /// Assign one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| ConfigError::new(key, "keys take the form section.field"))?;
        let unknown = || ConfigError::new(key, "unknown key");
        match section {
            "source" => {
                let s = &mut self.source;
                match field {
                    "pump_wavelength_nm" => set_f64(&mut s.pump_wavelength_nm, key, value),
                    "filter_fwhm_nm" => set_f64(&mut s.filter_fwhm_nm, key, value),
                    "coherence_time_ps" => set(&mut s.coherence_time_ps, key, value),
                    "pair_rate" => set_f64(&mut s.pair_rate, key, value),
                    "mode_overlap" => set_f64(&mut s.mode_overlap, key, value),
                    _ => Err(unknown()),
                }
            }
            "interferometer" => {
                let s = &mut self.interferometer;
                match field {
                    "bs1_transmittance" => set_f64(&mut s.bs1_transmittance, key, value),
                    "bs2_transmittance" => set_f64(&mut s.bs2_transmittance, key, value),
                    "group_index" => set_f64(&mut s.group_index, key, value),
                    "transmission" => set_f64(&mut s.transmission, key, value),
                    "scan_start_mm" => set_f64(&mut s.scan_start_mm, key, value),
                    "scan_stop_mm" => set_f64(&mut s.scan_stop_mm, key, value),
                    "drift_rms_mm" => set_f64(&mut s.drift_rms_mm, key, value),
                    _ => Err(unknown()),
                }
            }
            "fiberA" | "fiberB" => {
                let s = if section == "fiberA" {
                    &mut self.fiber_a
                } else {
                    &mut self.fiber_b
                };
                match field {
                    "length_km" => set_f64(&mut s.length_km, key, value),
                    "dispersion_ps_nm_km" => set_f64(&mut s.dispersion_ps_nm_km, key, value),
                    "tau2_ps3_km" => set_f64(&mut s.tau2_ps3_km, key, value),
                    "group_index" => set_f64(&mut s.group_index, key, value),
                    "thermal_mm_per_k_km" => set_f64(&mut s.thermal_mm_per_k_km, key, value),
                    _ => Err(unknown()),
                }
            }
            "detectorC" | "detectorD" => {
                let s = if section == "detectorC" {
                    &mut self.detector_c
                } else {
                    &mut self.detector_d
                };
                match field {
                    "efficiency" => set_f64(&mut s.efficiency, key, value),
                    "mode" => set(&mut s.mode, key, value),
                    "dark_rate_hz" => set_f64(&mut s.dark_rate_hz, key, value),
                    "dark_prob_per_ns" => set_f64(&mut s.dark_prob_per_ns, key, value),
                    _ => Err(unknown()),
                }
            }
            "counting" => {
                let s = &mut self.counting;
                match field {
                    "window_ns" => set_f64(&mut s.window_ns, key, value),
                    "integration_s" => set_f64(&mut s.integration_s, key, value),
                    "accidental_fraction" => set(&mut s.accidental_fraction, key, value),
                    _ => Err(unknown()),
                }
            }
            "dispersion" => {
                let s = &mut self.dispersion;
                match field {
                    "delay_spread_ps_per_km" => set_f64(&mut s.delay_spread_ps_per_km, key, value),
                    "drift_rate_k_per_h" => set_f64(&mut s.drift_rate_k_per_h, key, value),
                    "band_points" => set(&mut s.band_points, key, value),
                    "tolerance_ps" => set(&mut s.tolerance_ps, key, value),
                    _ => Err(unknown()),
                }
            }
            "run" => {
                let s = &mut self.run;
                match field {
                    "seed" => set(&mut s.seed, key, value),
                    "points" => set(&mut s.points, key, value),
                    "mode" => set(&mut s.mode, key, value),
                    _ => Err(unknown()),
                }
            }
            _ => Err(unknown()),
        }
    }

    /// Every key with its resolved value, in file order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: &dyn Display| out.push((k.to_string(), v.to_string()));
        let s = &self.source;
        push("source.pump_wavelength_nm", &s.pump_wavelength_nm);
        push("source.filter_fwhm_nm", &s.filter_fwhm_nm);
        push("source.coherence_time_ps", &s.coherence_time_ps);
        push("source.pair_rate", &s.pair_rate);
        push("source.mode_overlap", &s.mode_overlap);
        let i = &self.interferometer;
        push("interferometer.bs1_transmittance", &i.bs1_transmittance);
        push("interferometer.bs2_transmittance", &i.bs2_transmittance);
        push("interferometer.group_index", &i.group_index);
        push("interferometer.transmission", &i.transmission);
        push("interferometer.scan_start_mm", &i.scan_start_mm);
        push("interferometer.scan_stop_mm", &i.scan_stop_mm);
        push("interferometer.drift_rms_mm", &i.drift_rms_mm);
        for (name, f) in [("fiberA", &self.fiber_a), ("fiberB", &self.fiber_b)] {
            push(&format!("{name}.length_km"), &f.length_km);
            push(&format!("{name}.dispersion_ps_nm_km"), &f.dispersion_ps_nm_km);
            push(&format!("{name}.tau2_ps3_km"), &f.tau2_ps3_km);
            push(&format!("{name}.group_index"), &f.group_index);
            push(&format!("{name}.thermal_mm_per_k_km"), &f.thermal_mm_per_k_km);
        }
        for (name, d) in [("detectorC", &self.detector_c), ("detectorD", &self.detector_d)] {
            push(&format!("{name}.efficiency"), &d.efficiency);
            push(&format!("{name}.mode"), &d.mode);
            push(&format!("{name}.dark_rate_hz"), &d.dark_rate_hz);
            push(&format!("{name}.dark_prob_per_ns"), &d.dark_prob_per_ns);
        }
        let c = &self.counting;
        push("counting.window_ns", &c.window_ns);
        push("counting.integration_s", &c.integration_s);
        push("counting.accidental_fraction", &c.accidental_fraction);
        let d = &self.dispersion;
        push("dispersion.delay_spread_ps_per_km", &d.delay_spread_ps_per_km);
        push("dispersion.drift_rate_k_per_h", &d.drift_rate_k_per_h);
        push("dispersion.band_points", &d.band_points);
        push("dispersion.tolerance_ps", &d.tolerance_ps);
        let r = &self.run;
        push("run.seed", &r.seed);
        push("run.points", &r.points);
        push("run.mode", &r.mode);
        out
    }

    /// The configuration as a file that [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Check scan-grid settings; `allow_long_scan` lifts the span guard.
    pub fn validate_scan(&self, allow_long_scan: bool) -> Result<(), ConfigError> {
        let i = &self.interferometer;
        if self.run.points < 5 {
            return Err(ConfigError::new("run.points", "need at least 5 points to fit a dip"));
        }
        if i.scan_stop_mm <= i.scan_start_mm {
            return Err(ConfigError::new(
                "interferometer.scan_stop_mm",
                "must exceed interferometer.scan_start_mm",
            ));
        }
        let span = i.scan_stop_mm - i.scan_start_mm;
        if span > MAX_SCAN_SPAN_MM && !allow_long_scan {
            return Err(ConfigError::new(
                "interferometer.scan_stop_mm",
                format!(
                    "scan span {span} mm exceeds the {MAX_SCAN_SPAN_MM} mm stage travel; pass --allow-long-scan to override"
                ),
            ));
        }
        if i.drift_rms_mm < 0.0 {
            return Err(ConfigError::new("interferometer.drift_rms_mm", "must be non-negative"));
        }
        Ok(())
    }

    /// Scan positions in mm, evenly spaced and ascending.
    pub fn scan_grid_mm(&self) -> Vec<f64> {
        let i = &self.interferometer;
        let n = self.run.points;
        let step = (i.scan_stop_mm - i.scan_start_mm) / (n - 1) as f64;
        (0..n)
            .map(|k| if k + 1 == n { i.scan_stop_mm } else { i.scan_start_mm + step * k as f64 })
            .collect()
    }

    /// Build and validate the core models.
    pub fn build(&self) -> Result<Model, ConfigError> {
        let at = |key: &'static str| move |e: hom_core::Error| ConfigError::new(key, e.to_string());

        let s = &self.source;
        let mut source = SourceSpec::new(
            s.pump_wavelength_nm * 1e-9,
            s.filter_fwhm_nm * 1e-9,
            s.pair_rate,
            s.mode_overlap,
        )
        .map_err(at("source"))?;
        if let Some(tc) = s.coherence_time_ps.value() {
            source = source
                .with_coherence_time(tc * 1e-12)
                .map_err(at("source.coherence_time_ps"))?;
        }

        let i = &self.interferometer;
        let interferometer =
            InterferometerSpec::new(i.bs1_transmittance, i.bs2_transmittance, i.group_index)
                .map_err(at("interferometer"))?;
        if !(0.0..=1.0).contains(&i.transmission) {
            return Err(ConfigError::new("interferometer.transmission", "must lie in [0, 1]"));
        }
        let drift_rms_delay = delay_from_stretch(i.drift_rms_mm * 1e-3, i.group_index)
            .map_err(at("interferometer.drift_rms_mm"))?;

        let detector = |key: &'static str, label: &str, d: &DetectorConfig| {
            let mode = match d.mode {
                DetectorKind::FreeRunning => DetectorMode::FreeRunning {
                    dark_rate: d.dark_rate_hz,
                },
                DetectorKind::Gated => DetectorMode::Gated {
                    dark_prob_per_ns: d.dark_prob_per_ns,
                },
            };
            DetectorModel::new(label, d.efficiency, mode).map_err(at(key))
        };
        let c = &self.counting;
        let setup = CoincidenceSetup {
            det_c: detector("detectorC", "C", &self.detector_c)?,
            det_d: detector("detectorD", "D", &self.detector_d)?,
            window: c.window_ns * 1e-9,
            integration_time: c.integration_s,
            pair_rate_at_bs2: s.pair_rate * i.transmission,
            accidental_fraction: c.accidental_fraction.value(),
        };
        setup.validate().map_err(at("counting"))?;

        let lambda0 = source.degenerate_wavelength();
        let fiber = |key: &'static str, label: &str, f: &FiberConfig| {
            if f.group_index < 1.0 {
                return Err(ConfigError::new(
                    format!("{key}.group_index"),
                    "must be at least 1",
                ));
            }
            channel_from_dispersion(
                label,
                f.length_km,
                f.dispersion_ps_nm_km,
                lambda0,
                f.tau2_ps3_km * 1e-36,
                f.group_index / hom_core::consts::SPEED_OF_LIGHT * 1e3,
                f.thermal_mm_per_k_km * 1e-3,
            )
            .map_err(at(key))
        };
        let fiber_a = fiber("fiberA", "A", &self.fiber_a)?;
        let fiber_b = fiber("fiberB", "B", &self.fiber_b)?;

        let d = &self.dispersion;
        if !(d.delay_spread_ps_per_km >= 0.0) {
            return Err(ConfigError::new("dispersion.delay_spread_ps_per_km", "must be non-negative"));
        }
        if d.band_points < 2 {
            return Err(ConfigError::new("dispersion.band_points", "need at least 2"));
        }
        if matches!(d.tolerance_ps, Auto::Value(v) if v <= 0.0) {
            return Err(ConfigError::new("dispersion.tolerance_ps", "must be positive"));
        }

        let coherence_time = coherence_time(&source);
        Ok(Model {
            source,
            interferometer,
            setup,
            fiber_a,
            fiber_b,
            drift_rms_delay,
            coherence_time,
        })
    }
}
