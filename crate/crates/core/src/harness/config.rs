//! Scenario configuration: a TOML document with dotted keys.
//!
//! Every section is optional and falls back to the documented default.
//! Unknown keys are rejected. A top-level `base = "<builtin>"` starts from a
//! built-in scenario and overlays the file's keys on it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::builtin;
use super::envsynth::EnvKind;
use crate::control::{GuardAction, StepKind};
use crate::error::{Error, Result};
use crate::scene::{default_speakers, Ear, MembraneLocation, Position3};
use crate::signal::Band;
use crate::tracking::TrackingMode;

/// Reduced profile for quick runs: sample rate, filter lengths, duration.
pub const CI_SAMPLE_RATE: u32 = 16000;
pub const CI_TAPS: usize = 256;
pub const CI_DURATION_S: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "d_sample_rate")]
    pub sample_rate: u32,
    #[serde(default = "d_duration")]
    pub duration_s: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_ears")]
    pub ears: Vec<Ear>,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub membrane: MembraneConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub guard: GuardSection,
    #[serde(default)]
    pub identification: IdentificationConfig,
    #[serde(default)]
    pub head: HeadConfig,
    #[serde(default)]
    pub tracking: TrackingConfig,
    #[serde(default)]
    pub ldv: LdvConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub expect: ExpectConfig,
}

fn d_sample_rate() -> u32 {
    32000
}
fn d_duration() -> f64 {
    15.0
}
fn d_seed() -> u64 {
    1
}
fn d_ears() -> Vec<Ear> {
    vec![Ear::Left]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    GreyNoise,
    Wav,
    Env,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Scale the source so the ANC-off eardrum level over the metric window
    /// equals the target.
    #[default]
    EardrumOff,
    /// Scale the source signal itself to the target level, in Pa.
    Source,
}

/// One level for every ear, or one per ear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    Uniform(f64),
    PerEar(BTreeMap<Ear, f64>),
}

impl Levels {
    pub fn for_ear(&self, ear: Ear) -> Option<f64> {
        match self {
            Levels::Uniform(v) => Some(*v),
            Levels::PerEar(m) => m.get(&ear).copied(),
        }
    }
}

impl Default for Levels {
    fn default() -> Self {
        Levels::Uniform(77.7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: SourceKind,
    /// WAV file, relative paths resolved against the config file.
    pub path: Option<PathBuf>,
    pub env: Option<EnvKind>,
    pub target_spl_db: Levels,
    pub calibration: CalibrationMode,
    /// Grey-noise band.
    pub band: [f64; 2],
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            kind: SourceKind::GreyNoise,
            path: None,
            env: None,
            target_spl_db: Levels::default(),
            calibration: CalibrationMode::EardrumOff,
            band: [Band::EVALUATION.f_lo, Band::EVALUATION.f_hi],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Primary loudspeakers, all driven by the common source signal.
    pub sources: Vec<Position3>,
    pub speakers: [Position3; 2],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            sources: vec![Position3::new(0.0, -0.6, 0.0)],
            speakers: default_speakers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembraneConfig {
    pub locations: Vec<MembraneLocation>,
}

impl Default for MembraneConfig {
    fn default() -> Self {
        MembraneConfig {
            locations: vec![MembraneLocation::CavumConcha],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecondaryPathMode {
    /// ŝ equals the true speaker-to-reading path, refreshed with the
    /// geometry.
    #[default]
    Exact,
    /// ŝ comes from an identification preamble and stays fixed.
    Identified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub enabled: bool,
    pub taps: usize,
    pub sec_taps: usize,
    /// µ₀ for the normalized rule, µ for the raw rule.
    pub mu0: f64,
    pub step: StepKind,
    pub leakage: f64,
    pub secondary_path: SecondaryPathMode,
    /// Floor the normalized step's energy at `power_floor_db` below the
    /// long-term filtered-reference energy.
    pub power_floor: bool,
    pub power_floor_db: f64,
    pub power_floor_tau_s: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            enabled: true,
            taps: 1024,
            sec_taps: 1024,
            mu0: 0.05,
            step: StepKind::Normalized,
            leakage: 0.0,
            secondary_path: SecondaryPathMode::Exact,
            power_floor: true,
            power_floor_db: -10.0,
            power_floor_tau_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardSection {
    pub enabled: bool,
    pub window_s: f64,
    pub trip_ratio: f64,
    pub arm_s: f64,
    pub action: GuardAction,
}

impl Default for GuardSection {
    fn default() -> Self {
        GuardSection {
            enabled: true,
            window_s: 0.25,
            trip_ratio: 10.0,
            arm_s: 2.0,
            action: GuardAction::Freeze,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentificationConfig {
    pub duration_s: f64,
    pub mu: f64,
    /// RMS of the white excitation fed to the speaker.
    pub level: f64,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        IdentificationConfig {
            duration_s: 2.0,
            mu: 0.5,
            level: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub enabled: bool,
    pub axis: Position3,
    pub amplitude_m: f64,
    pub angular_rate: f64,
    pub phase: f64,
    pub onset_s: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            enabled: false,
            axis: Position3::new(0.0, 1.0, 0.0),
            amplitude_m: 0.04,
            angular_rate: 1.0,
            phase: 0.0,
            onset_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    pub enabled: bool,
    /// Also the geometry refresh rate when tracking is off.
    pub frame_rate: f64,
    pub latency_frames: usize,
    pub threshold: u8,
    pub distance_m: f64,
    pub focal_px: f64,
    pub image_size: usize,
    pub mode: TrackingMode,
    pub marker_radius_m: f64,
    /// Marker centre to membrane centre, in the membrane plane.
    pub marker_offset: [f64; 2],
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            enabled: false,
            frame_rate: 30.0,
            latency_frames: 1,
            threshold: 128,
            distance_m: 0.3,
            focal_px: 300.0,
            image_size: 256,
            mode: TrackingMode::Position,
            marker_radius_m: 0.006,
            marker_offset: [0.0, 0.02],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdvConfig {
    pub noise: bool,
    pub noise_density: f64,
    pub dropout_db: f64,
    /// Stand-off of the vibrometer along the membrane normal.
    pub distance_m: f64,
}

impl Default for LdvConfig {
    fn default() -> Self {
        LdvConfig {
            noise: true,
            noise_density: crate::sensing::NOISE_DENSITY,
            dropout_db: crate::sensing::DROPOUT_DB,
            distance_m: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Leading convergence time left out of every metric.
    pub exclude_s: f64,
    /// Explicit [start, end] window; overrides `exclude_s`.
    pub window: Option<[f64; 2]>,
    pub band: [f64; 2],
    pub segment_s: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            exclude_s: 5.0,
            window: None,
            band: [Band::EVALUATION.f_lo, Band::EVALUATION.f_hi],
            segment_s: 0.128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub timeseries: bool,
    pub coefficients: bool,
    /// Number of leading camera frames written as PGM images.
    pub pgm_frames: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            timeseries: true,
            coefficients: true,
            pgm_frames: 0,
        }
    }
}

/// Run-time assertions. A failed expectation makes the CLI exit with 3.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectConfig {
    /// Lower bound on the overall eardrum attenuation of every channel.
    pub min_attenuation_db: Option<f64>,
    /// Whether the guard is expected to trip. Any mismatch fails.
    pub guard_trip: bool,
    /// Require the beam to stay on the membrane in every frame.
    pub beam_on_membrane: bool,
    /// Upper bound on the delay between first beam loss and guard trip.
    pub max_trip_delay_s: Option<f64>,
}

impl ScenarioConfig {
    pub fn band(&self) -> Result<Band> {
        Band::new(self.metrics.band[0], self.metrics.band[1])
    }

    pub fn source_band(&self) -> Result<Band> {
        Band::new(self.source.band[0], self.source.band[1])
    }

    /// Metric window in seconds.
    pub fn metric_window(&self) -> (f64, f64) {
        match self.metrics.window {
            Some([a, b]) => (a, b),
            None => (self.metrics.exclude_s, self.duration_s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if !(4000..=192_000).contains(&self.sample_rate) {
            return bad(format!("sample_rate {} outside 4000..=192000", self.sample_rate));
        }
        if !(self.duration_s >= 1.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s {} must be at least 1 s", self.duration_s));
        }
        if self.ears.is_empty() {
            return bad("ears must list at least one ear".into());
        }
        if self.membrane.locations.is_empty() {
            return bad("membrane.locations must list at least one location".into());
        }
        if self.geometry.sources.is_empty() {
            return bad("geometry.sources must list at least one source".into());
        }
        let band = self.band().map_err(|e| Error::config(format!("metrics.band: {e}")))?;
        band.validate(self.sample_rate)
            .map_err(|e| Error::config(format!("metrics.band: {e}")))?;
        if self.source.kind == SourceKind::GreyNoise {
            self.source_band()
                .and_then(|b| b.validate(self.sample_rate))
                .map_err(|e| Error::config(format!("source.band: {e}")))?;
        }
        for ear in &self.ears {
            match self.source.target_spl_db.for_ear(*ear) {
                Some(l) if l.is_finite() => {}
                _ => return bad(format!("source.target_spl_db has no level for the {ear} ear")),
            }
        }
        match self.source.kind {
            SourceKind::Wav if self.source.path.is_none() => {
                return bad("source.kind = \"wav\" needs source.path".into())
            }
            SourceKind::Env if self.source.env.is_none() => {
                return bad("source.kind = \"env\" needs source.env".into())
            }
            _ => {}
        }
        let (a, b) = self.metric_window();
        if !(a >= 0.0 && b > a && b <= self.duration_s + 1e-9) {
            return bad(format!(
                "metric window [{a}, {b}] s must be non-empty and inside the {} s run",
                self.duration_s
            ));
        }
        if b - a < self.metrics.segment_s {
            return bad("metric window is shorter than one spectral segment".into());
        }
        let c = &self.controller;
        if c.taps == 0 || c.sec_taps == 0 {
            return bad("controller.taps and controller.sec_taps must be positive".into());
        }
        if !(c.mu0 >= 0.0 && c.mu0.is_finite()) {
            return bad("controller.mu0 must be non-negative".into());
        }
        if c.power_floor && !(c.power_floor_db.is_finite() && c.power_floor_tau_s > 0.0) {
            return bad("controller.power_floor_db must be finite and power_floor_tau_s positive".into());
        }
        if !(0.0..1.0).contains(&c.leakage) {
            return bad("controller.leakage must be in [0, 1)".into());
        }
        let g = &self.guard;
        if g.enabled && !(g.trip_ratio > 1.0 && g.window_s > 0.0 && g.arm_s >= 0.0) {
            return bad("guard needs trip_ratio > 1, window_s > 0, arm_s >= 0".into());
        }
        let id = &self.identification;
        if !(id.duration_s > 0.0 && id.mu > 0.0 && id.mu < 2.0 && id.level > 0.0) {
            return bad("identification needs duration_s > 0, 0 < mu < 2, level > 0".into());
        }
        let h = &self.head;
        if h.enabled {
            self.trajectory()
                .validate()
                .map_err(|e| Error::config(format!("head: {e}")))?;
            if h.amplitude_m > crate::scene::MOTION_MARGIN_M {
                return bad(format!(
                    "head.amplitude_m above the {} m motion margin",
                    crate::scene::MOTION_MARGIN_M
                ));
            }
        }
        let t = &self.tracking;
        if !(t.frame_rate > 0.0 && t.frame_rate <= self.sample_rate as f64) {
            return bad("tracking.frame_rate must be positive and below the sample rate".into());
        }
        if t.threshold == 0 {
            return bad("tracking.threshold must be in 1..=255".into());
        }
        if !(t.distance_m > 0.0 && t.focal_px > 0.0 && t.marker_radius_m > 0.0) {
            return bad("tracking distances and sizes must be positive".into());
        }
        if t.image_size < crate::tracking::MIN_FRAME_SIDE {
            return bad("tracking.image_size is too small".into());
        }
        if !(self.ldv.distance_m > 0.0 && self.ldv.noise_density >= 0.0) {
            return bad("ldv.distance_m must be positive and ldv.noise_density non-negative".into());
        }
        Ok(())
    }

    pub fn trajectory(&self) -> crate::scene::HeadTrajectory {
        let h = &self.head;
        crate::scene::HeadTrajectory {
            axis: h.axis,
            amplitude_m: h.amplitude_m,
            angular_rate: h.angular_rate,
            phase: h.phase,
            onset_s: h.onset_s,
        }
    }

    /// Switch to the reduced profile. Every time constant that is tied to
    /// the run length is scaled by the same factor.
    pub fn apply_ci_profile(&mut self) {
        let k = CI_DURATION_S / self.duration_s;
        self.sample_rate = CI_SAMPLE_RATE;
        self.duration_s = CI_DURATION_S;
        self.controller.taps = self.controller.taps.min(CI_TAPS);
        self.controller.sec_taps = self.controller.sec_taps.min(CI_TAPS);
        self.metrics.exclude_s *= k;
        if let Some(w) = &mut self.metrics.window {
            w[0] *= k;
            w[1] *= k;
        }
        self.guard.arm_s *= k;
        self.guard.window_s *= k;
        self.head.onset_s *= k;
        self.identification.duration_s *= k;
    }

    /// Resolve relative paths against `dir`.
    pub fn resolve_paths(&mut self, dir: &Path) {
        if let Some(p) = &self.source.path {
            if p.is_relative() {
                self.source.path = Some(dir.join(p));
            }
        }
    }

    /// Referenced files must exist.
    pub fn check_files(&self) -> Result<()> {
        if self.source.kind == SourceKind::Wav {
            if let Some(p) = &self.source.path {
                if !p.is_file() {
                    return Err(Error::config(format!("source file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse a config document. `base` (if present) names a built-in scenario
/// to start from.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
    if let Some(base) = table.remove("base") {
        let name = base
            .as_str()
            .ok_or_else(|| Error::config("base must be a scenario name"))?;
        let entry = builtin::find(name).ok_or_else(|| Error::config(format!("unknown base scenario '{name}'")))?;
        let mut merged: toml::Table = entry
            .toml
            .parse()
            .map_err(|e: toml::de::Error| Error::config(format!("built-in '{name}': {e}")))?;
        merge(&mut merged, table);
        table = merged;
    }
    let cfg: ScenarioConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.check_files()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_defaults() {
        let c = parse_config("name = \"x\"").unwrap();
        assert_eq!(c.sample_rate, 32000);
        assert_eq!(c.duration_s, 15.0);
        assert_eq!(c.controller.taps, 1024);
        assert_eq!(c.controller.sec_taps, 1024);
        assert_eq!(c.metric_window(), (5.0, 15.0));
        assert_eq!(c.membrane.locations, vec![MembraneLocation::CavumConcha]);
    }

    #[test]
    fn dotted_keys_and_sections_agree() {
        let a = parse_config("name = \"x\"\ncontroller.mu0 = 0.02\nhead.enabled = true").unwrap();
        let b = parse_config("name = \"x\"\n[controller]\nmu0 = 0.02\n[head]\nenabled = true").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.controller.mu0, 0.02);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse_config("name = \"x\"\nfoo = 1"), Err(Error::Config(_))));
        assert!(matches!(
            parse_config("name = \"x\"\ncontroller.mu = 1"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn base_overlay() {
        let c = parse_config("base = \"fig4a\"\nname = \"mine\"\ncontroller.mu0 = 0.01").unwrap();
        let base = builtin::config("fig4a").unwrap();
        assert_eq!(c.name, "mine");
        assert_eq!(c.controller.mu0, 0.01);
        assert_eq!(c.geometry, base.geometry);
        assert_eq!(c.source, base.source);
        assert!(parse_config("base = \"nope\"\nname = \"x\"").is_err());
    }

    #[test]
    fn per_ear_levels() {
        let c = parse_config("name = \"x\"\nears = [\"left\", \"right\"]\nsource.target_spl_db = { left = 78.1, right = 77.3 }")
            .unwrap();
        assert_eq!(c.source.target_spl_db.for_ear(Ear::Right), Some(77.3));
        assert!(parse_config("name = \"x\"\nears = [\"right\"]\nsource.target_spl_db = { left = 78.1 }").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for doc in [
            "name = \"x\"\nduration_s = 0.5",
            "name = \"x\"\nmetrics.exclude_s = 20",
            "name = \"x\"\nsource.kind = \"wav\"",
            "name = \"x\"\nguard.trip_ratio = 1.0",
            "name = \"x\"\nmetrics.band = [500, 20000]",
            "name = \"x\"\ntracking.threshold = 0",
            "name = \"x\"\nears = []",
        ] {
            assert!(matches!(parse_config(doc), Err(Error::Config(_))), "{doc}");
        }
    }

    #[test]
    fn ci_profile_scales_time_constants() {
        let mut c = builtin::config("table1-flyby").unwrap();
        c.apply_ci_profile();
        assert_eq!(c.sample_rate, 16000);
        assert_eq!(c.controller.taps, 256);
        assert_eq!(c.duration_s, 4.0);
        let (a, b) = c.metric_window();
        assert!((a - 0.8).abs() < 1e-12 && (b - 32.0 / 15.0).abs() < 1e-12);
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        for entry in builtin::BUILTINS {
            let c = builtin::config(entry.name).unwrap();
            let back = parse_config(&c.to_toml()).unwrap();
            assert_eq!(c, back, "{}", entry.name);
        }
    }
}
