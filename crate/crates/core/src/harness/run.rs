//! The lock-step simulation loop and the metrics drawn from it.
//!
//! Every (ear, location) channel is an independent run: a calibration pass,
//! an ANC-off pass and an ANC-on pass, all with the same seeds. Frames
//! advance the head, the tracker and the geometry; the audio samples of a
//! frame then run scene → pick-up → vibrometer → controller.

use rayon::prelude::*;

use super::config::{CalibrationMode, ScenarioConfig, SecondaryPathMode, SourceKind};
use super::envsynth::synthesize_env;
use crate::control::{
    identify_secondary_path, FxLms, Guard, GuardAction, GuardConfig, PowerFloor, StepKind, StepRule,
};
use crate::dsp::convolve;
use crate::error::{Error, Result};
use crate::scene::{head_position, Ear, MembraneLocation, Position3, Scene, SceneGeometry};
use crate::sensing::{incidence_gain, BeamState, Ldv, MembranePickup};
use crate::signal::{
    attenuation, averaged_spectrum, generate_grey_noise, load_wav, overall_spl, resample_linear,
    stream_seed, third_octave_bands, white_noise, Signal, Spectrum,
};
use crate::tracking::{calibrate_beta, render_frame, Camera, FrameImage, Tracker, TrackerConfig, Vec2};

const SOURCE_STREAM: u64 = 0;
const LDV_STREAM: u64 = 1;
const ID_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel {
    pub ear: Ear,
    pub location: MembraneLocation,
}

impl Channel {
    /// Directory and metric prefix, e.g. `left_cavum_concha`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.ear, self.location)
    }

    fn index(&self) -> u64 {
        self.ear.speaker_index() as u64 * 16 + self.location as u64
    }
}

/// One camera frame of a pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub time_s: f64,
    pub centroid_px: Option<Vec2>,
    /// Beam position in the membrane plane, relative to the membrane at rest.
    pub beam: Vec2,
    pub lost: bool,
    /// Distance from the beam to the moving membrane centre.
    pub beam_offset_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandResult {
    pub nominal_hz: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub eardrum_attenuation_db: f64,
    pub membrane_attenuation_db: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelReport {
    pub channel: Channel,
    pub eardrum_spl_off_db: f64,
    pub eardrum_spl_on_db: f64,
    pub eardrum_attenuation_db: f64,
    pub membrane_spl_off_db: f64,
    pub membrane_spl_on_db: f64,
    pub membrane_attenuation_db: f64,
    pub bands: Vec<BandResult>,
    /// Eardrum spectra over the metric window.
    pub spectrum_off: Spectrum,
    pub spectrum_on: Spectrum,
    pub membrane_spectrum_off: Spectrum,
    pub membrane_spectrum_on: Spectrum,
    /// Full-length eardrum pressure of both passes.
    pub eardrum_off: Signal,
    pub eardrum_on: Signal,
    /// Frames of the ANC-on pass.
    pub frames: Vec<FrameRecord>,
    pub frame_images: Vec<FrameImage>,
    pub tracking: bool,
    pub guard_trip_s: Option<f64>,
    pub beam_loss_s: Option<f64>,
    pub source_gain: f64,
    pub identification_misalignment_db: Option<f64>,
    pub weights: Vec<f64>,
    pub s_hat: Vec<f64>,
}

impl ChannelReport {
    /// Eardrum attenuation within `[f_lo, f_hi]`, from the spectra.
    pub fn band_attenuation_db(&self, f_lo: f64, f_hi: f64) -> f64 {
        self.spectrum_off.band_level_db(f_lo, f_hi) - self.spectrum_on.band_level_db(f_lo, f_hi)
    }

    pub fn membrane_band_attenuation_db(&self, f_lo: f64, f_hi: f64) -> f64 {
        self.membrane_spectrum_off.band_level_db(f_lo, f_hi) - self.membrane_spectrum_on.band_level_db(f_lo, f_hi)
    }

    pub fn max_beam_offset_m(&self) -> f64 {
        self.frames.iter().map(|f| f.beam_offset_m).fold(0.0, f64::max)
    }

    pub fn on_membrane_fraction(&self) -> f64 {
        if self.frames.is_empty() {
            return 1.0;
        }
        let on = self
            .frames
            .iter()
            .filter(|f| f.beam_offset_m <= crate::sensing::MEMBRANE_DIAMETER_M / 2.0)
            .count();
        on as f64 / self.frames.len() as f64
    }

    pub fn guard_trip_delay_s(&self) -> Option<f64> {
        Some(self.guard_trip_s? - self.beam_loss_s?)
    }

    /// Named scalar metrics in a fixed order.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut m: Vec<(String, f64)> = vec![
            ("eardrum_spl_off_db".into(), self.eardrum_spl_off_db),
            ("eardrum_spl_on_db".into(), self.eardrum_spl_on_db),
            ("eardrum_attenuation_db".into(), self.eardrum_attenuation_db),
            ("membrane_spl_off_db".into(), self.membrane_spl_off_db),
            ("membrane_spl_on_db".into(), self.membrane_spl_on_db),
            ("membrane_attenuation_db".into(), self.membrane_attenuation_db),
            ("eardrum_attenuation_4000_6000_db".into(), self.band_attenuation_db(4000.0, 6000.0)),
            ("eardrum_attenuation_5000_6000_db".into(), self.band_attenuation_db(5000.0, 6000.0)),
        ];
        for b in &self.bands {
            m.push((format!("eardrum_attenuation_3oct_{}_db", b.nominal_hz), b.eardrum_attenuation_db));
        }
        for b in &self.bands {
            m.push((format!("membrane_attenuation_3oct_{}_db", b.nominal_hz), b.membrane_attenuation_db));
        }
        m.push(("source_gain".into(), self.source_gain));
        m.push(("guard_tripped".into(), self.guard_trip_s.is_some() as u8 as f64));
        if let Some(t) = self.guard_trip_s {
            m.push(("guard_trip_time_s".into(), t));
        }
        m.push(("beam_on_membrane_fraction".into(), self.on_membrane_fraction()));
        m.push(("max_beam_offset_m".into(), self.max_beam_offset_m()));
        if let Some(t) = self.beam_loss_s {
            m.push(("beam_loss_time_s".into(), t));
        }
        if let Some(d) = self.guard_trip_delay_s() {
            m.push(("guard_trip_delay_s".into(), d));
        }
        if self.tracking {
            let lost = self.frames.iter().filter(|f| f.lost).count();
            m.push(("tracker_lost_frames".into(), lost as f64));
        }
        if let Some(d) = self.identification_misalignment_db {
            m.push(("secondary_path_misalignment_db".into(), d));
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub channels: Vec<ChannelReport>,
}

impl RunReport {
    /// Violated expectations, one message each.
    pub fn check_expectations(&self) -> Vec<String> {
        let ex = &self.config.expect;
        let mut fails = Vec::new();
        for ch in &self.channels {
            let label = ch.channel.label();
            if let Some(min) = ex.min_attenuation_db {
                if !(ch.eardrum_attenuation_db >= min) {
                    fails.push(format!(
                        "{label}: eardrum attenuation {:.2} dB below {min} dB",
                        ch.eardrum_attenuation_db
                    ));
                }
            }
            let tripped = ch.guard_trip_s.is_some();
            if tripped != ex.guard_trip {
                fails.push(match ch.guard_trip_s {
                    Some(t) => format!("{label}: unexpected guard trip at {t:.3} s"),
                    None => format!("{label}: guard was expected to trip but did not"),
                });
            }
            if ex.beam_on_membrane && ch.on_membrane_fraction() < 1.0 {
                fails.push(format!(
                    "{label}: beam left the membrane (max offset {:.2} mm)",
                    ch.max_beam_offset_m() * 1e3
                ));
            }
            if let Some(max) = ex.max_trip_delay_s {
                match ch.guard_trip_delay_s() {
                    Some(d) if d <= max => {}
                    Some(d) => fails.push(format!("{label}: guard tripped {d:.3} s after beam loss")),
                    None => fails.push(format!("{label}: no beam loss followed by a guard trip")),
                }
            }
        }
        fails
    }
}

/// Channels of a scenario in report order.
pub fn channels(config: &ScenarioConfig) -> Vec<Channel> {
    config
        .ears
        .iter()
        .flat_map(|&ear| config.membrane.locations.iter().map(move |&location| Channel { ear, location }))
        .collect()
}

/// The common primary-source signal before calibration.
pub fn source_signal(config: &ScenarioConfig) -> Result<Signal> {
    let fs = config.sample_rate;
    let n = (config.duration_s * fs as f64).round() as usize;
    let seed = stream_seed(config.seed, SOURCE_STREAM);
    let raw = match config.source.kind {
        SourceKind::GreyNoise => {
            let level = config.source.target_spl_db.for_ear(config.ears[0]).unwrap_or(94.0);
            generate_grey_noise(config.duration_s, fs, &config.source_band()?, level, seed)?
        }
        SourceKind::Env => {
            let kind = config.source.env.ok_or_else(|| Error::config("source.env is missing"))?;
            synthesize_env(kind, config.duration_s, fs, seed)?
        }
        SourceKind::Wav => {
            let path = config.source.path.as_ref().ok_or_else(|| Error::config("source.path is missing"))?;
            resample_linear(&load_wav(path)?, fs)?
        }
    };
    if raw.len() < n {
        return Err(Error::config(format!(
            "source is {:.3} s long, the scenario needs {} s",
            raw.duration_s(),
            config.duration_s
        )));
    }
    let mut x = raw.into_samples();
    x.truncate(n);
    Signal::new(x, fs)
}

fn geometry(config: &ScenarioConfig, ch: Channel) -> SceneGeometry {
    let mut g = SceneGeometry::headrest(ch.ear, config.geometry.sources.clone(), ch.location);
    g.secondary_speakers = config.geometry.speakers;
    g
}

/// True path from controller output to vibrometer reading: one sample of
/// loop delay, the speaker-to-membrane path, the pick-up and the incidence
/// loss.
fn exact_s_hat(scene: &Scene, pickup: &MembranePickup, ear: Ear, gain: f64, taps: usize) -> Vec<f64> {
    let s = &scene.paths().secondary[ear.speaker_index()];
    let mut out = Vec::with_capacity(taps);
    out.push(0.0);
    out.extend(convolve(pickup.response().taps(), s.taps()).into_iter().map(|v| v * gain));
    out.truncate(taps);
    out
}

fn incidence_deg(beam: Vec2, standoff: f64) -> f64 {
    beam[0].hypot(beam[1]).atan2(standoff).to_degrees()
}

struct Controller {
    fx: FxLms,
    guard: Option<Guard>,
    exact: bool,
}

struct PassOutput {
    eardrum: Vec<f64>,
    membrane: Vec<f64>,
    frames: Vec<FrameRecord>,
    images: Vec<FrameImage>,
    guard_trip_sample: Option<u64>,
    weights: Vec<f64>,
    s_hat: Vec<f64>,
}

fn build_controller(config: &ScenarioConfig, fixed_s_hat: Option<Vec<f64>>) -> Result<Controller> {
    let c = &config.controller;
    let rule = match c.step {
        StepKind::Normalized => StepRule::normalized(c.mu0),
        StepKind::Raw => StepRule::Raw { mu: c.mu0 },
    };
    let exact = fixed_s_hat.is_none();
    let s_hat = fixed_s_hat.unwrap_or_else(|| vec![0.0; c.sec_taps]);
    let mut fx = FxLms::new(c.taps, s_hat, rule, c.leakage)?;
    if c.power_floor && c.step == StepKind::Normalized {
        fx = fx.with_power_floor(PowerFloor {
            ratio: 10f64.powf(c.power_floor_db / 10.0),
            time_constant_samples: (c.power_floor_tau_s * config.sample_rate as f64).max(1.0),
        })?;
    }
    let guard = if config.guard.enabled {
        let g = &config.guard;
        Some(Guard::new(
            GuardConfig {
                window_s: g.window_s,
                trip_ratio: g.trip_ratio,
                arm_s: g.arm_s,
                action: g.action,
            },
            config.sample_rate,
        )?)
    } else {
        None
    };
    Ok(Controller { fx, guard, exact })
}

fn simulate(
    config: &ScenarioConfig,
    ch: Channel,
    source: &[f64],
    mut controller: Option<Controller>,
    keep_images: usize,
) -> Result<PassOutput> {
    let fs = config.sample_rate;
    let n_total = source.len();
    let mut scene = Scene::new(geometry(config, ch), fs)?;
    let mut pickup = MembranePickup::new(fs)?;
    let ldv_seed = stream_seed(config.seed, LDV_STREAM + 8 * ch.index());
    let mut ldv = Ldv::with_levels(fs, ldv_seed, config.ldv.noise_density, config.ldv.dropout_db);
    if !config.ldv.noise {
        ldv = ldv.without_noise();
    }
    let trk = &config.tracking;
    let marker_rest = [-trk.marker_offset[0], -trk.marker_offset[1]];
    let camera = Camera {
        width: trk.image_size,
        height: trk.image_size,
        focal_px: trk.focal_px,
        distance_m: trk.distance_m,
        axis: marker_rest,
    };
    let mut tracker = if trk.enabled {
        let beta = camera.beta();
        let cal = calibrate_beta(trk.distance_m, 10.0 * beta, 10.0)?;
        let tcfg = TrackerConfig {
            frame_rate: trk.frame_rate,
            threshold: trk.threshold,
            latency_frames: trk.latency_frames,
            mode: trk.mode,
            marker_offset: trk.marker_offset,
        };
        Some(Tracker::new(tcfg, cal, &camera)?)
    } else {
        None
    };
    let trajectory = config.trajectory();
    let own = ch.ear.speaker_index();
    let n_src = config.geometry.sources.len();
    let mut eardrum = Vec::with_capacity(n_total);
    let mut membrane = Vec::with_capacity(n_total);
    let mut frames = Vec::new();
    let mut images = Vec::new();
    let mut xs = vec![0.0; n_src];
    let mut controls = [0.0; 2];
    let mut u_prev = 0.0;
    let mut s_hat_state: Option<(Position3, f64)> = None;

    let frame_start = |k: usize| ((k as f64) * fs as f64 / trk.frame_rate).round() as usize;
    let mut k = 0;
    while frame_start(k) < n_total {
        let start = frame_start(k);
        let end = frame_start(k + 1).min(n_total);
        let t = start as f64 / fs as f64;

        let offset = if config.head.enabled {
            head_position(&trajectory, t)
        } else {
            Position3::ORIGIN
        };
        let membrane_uv = [offset.y, offset.z];
        let (beam, centroid, lost) = match tracker.as_mut() {
            Some(tr) => {
                let marker = [membrane_uv[0] + marker_rest[0], membrane_uv[1] + marker_rest[1]];
                let frame = render_frame(marker, trk.marker_radius_m, &camera)?;
                let out = tr.track_step(&frame)?;
                if images.len() < keep_images {
                    images.push(frame);
                }
                (out.applied.beam_target, out.centroid, out.lost)
            }
            None => ([0.0, 0.0], None, false),
        };
        scene.set_head_offset(offset)?;
        let spot = [beam[0] - membrane_uv[0], beam[1] - membrane_uv[1]];
        let beam_state = BeamState {
            spot,
            incidence_deg: incidence_deg(beam, config.ldv.distance_m),
        };
        frames.push(FrameRecord {
            frame_index: k,
            time_s: t,
            centroid_px: centroid,
            beam,
            lost,
            beam_offset_m: beam_state.offset(),
        });

        if let Some(c) = controller.as_mut() {
            if c.exact {
                let gain = incidence_gain(beam_state.incidence_deg.min(89.0))?;
                if s_hat_state != Some((offset, gain)) {
                    let s = exact_s_hat(&scene, &pickup, ch.ear, gain, config.controller.sec_taps);
                    c.fx.set_s_hat(&s)?;
                    s_hat_state = Some((offset, gain));
                }
            }
        }

        for &x in &source[start..end] {
            xs.iter_mut().for_each(|v| *v = x);
            controls[own] = u_prev;
            let p = scene.step(&xs, &controls)?;
            let v = pickup.membrane_velocity(p.membrane);
            let e = ldv.ldv_measure(&beam_state, &pickup, v).velocity;
            if let Some(c) = controller.as_mut() {
                if let Some(g) = c.guard.as_mut() {
                    if g.guard_update(e) && g.config().action == GuardAction::Freeze {
                        c.fx.set_frozen(true);
                    }
                }
                u_prev = c.fx.filter(x)?;
                c.fx.adapt(e)?;
            }
            eardrum.push(p.eardrum);
            membrane.push(p.membrane);
        }
        k += 1;
    }

    let (guard_trip_sample, weights, s_hat) = match &controller {
        Some(c) => (
            c.guard.as_ref().and_then(Guard::trip_sample),
            c.fx.weights().to_vec(),
            c.fx.s_hat().to_vec(),
        ),
        None => (None, Vec::new(), Vec::new()),
    };
    Ok(PassOutput {
        eardrum,
        membrane,
        frames,
        images,
        guard_trip_sample,
        weights,
        s_hat,
    })
}

/// Secondary-path identification for one channel with the head at rest:
/// white excitation into the channel's speaker, vibrometer reading as the
/// response. Returns the estimate and its misalignment against the truth.
pub fn identify_channel(config: &ScenarioConfig, ch: Channel) -> Result<(Vec<f64>, Option<f64>)> {
    let fs = config.sample_rate;
    let id = &config.identification;
    let n = (id.duration_s * fs as f64).round() as usize;
    let mut scene = Scene::new(geometry(config, ch), fs)?;
    let mut pickup = MembranePickup::new(fs)?;
    let mut ldv = Ldv::with_levels(
        fs,
        stream_seed(config.seed, ID_STREAM + 8 * ch.index()),
        config.ldv.noise_density,
        config.ldv.dropout_db,
    );
    if !config.ldv.noise {
        ldv = ldv.without_noise();
    }
    let excite: Vec<f64> = white_noise(n, stream_seed(config.seed, ID_STREAM + 8 * ch.index() + 4))
        .into_iter()
        .map(|v| v * id.level)
        .collect();
    let zeros = vec![0.0; config.geometry.sources.len()];
    let beam = BeamState::default();
    let mut controls = [0.0; 2];
    let mut u_prev = 0.0;
    let mut response = Vec::with_capacity(n);
    for &y in &excite {
        controls[ch.ear.speaker_index()] = u_prev;
        let p = scene.step(&zeros, &controls)?;
        let v = pickup.membrane_velocity(p.membrane);
        response.push(ldv.ldv_measure(&beam, &pickup, v).velocity);
        u_prev = y;
    }
    let truth_taps = exact_s_hat(&scene, &pickup, ch.ear, 1.0, config.controller.sec_taps);
    let truth = crate::scene::PathFir::new(truth_taps, fs)?.resized(config.controller.sec_taps)?;
    let result = identify_secondary_path(
        &Signal::new(excite, fs)?,
        &Signal::new(response, fs)?,
        config.controller.sec_taps,
        id.mu,
        Some(&truth),
    )?;
    Ok((result.path.into_taps(), result.misalignment_db))
}

fn window_of(x: &[f64], fs: u32, window: (f64, f64)) -> Result<Signal> {
    Ok(Signal::new(x.to_vec(), fs)?.window(window.0, window.1))
}

fn run_channel(config: &ScenarioConfig, ch: Channel, source: &Signal) -> Result<ChannelReport> {
    let fs = config.sample_rate;
    let band = config.band()?;
    let window = config.metric_window();
    let target = config
        .source
        .target_spl_db
        .for_ear(ch.ear)
        .ok_or_else(|| Error::config(format!("no target level for the {} ear", ch.ear)))?;

    let gain = match config.source.calibration {
        CalibrationMode::EardrumOff => {
            let probe = simulate(config, ch, source.samples(), None, 0)?;
            let level = overall_spl(&window_of(&probe.eardrum, fs, window)?, &band)?;
            if !level.is_finite() {
                return Err(Error::Calibration(format!(
                    "{}: ANC-off eardrum pressure is silent in the metric window",
                    ch.label()
                )));
            }
            10f64.powf((target - level) / 20.0)
        }
        CalibrationMode::Source => {
            let level = overall_spl(&source.window(window.0, window.1), &band)?;
            if !level.is_finite() {
                return Err(Error::Calibration("source is silent in the metric window".into()));
            }
            10f64.powf((target - level) / 20.0)
        }
    };
    let x = source.scaled(gain);

    let off = simulate(config, ch, x.samples(), None, 0)?;
    let (on, misalignment) = if config.controller.enabled {
        let (fixed, mis) = match config.controller.secondary_path {
            SecondaryPathMode::Exact => (None, None),
            SecondaryPathMode::Identified => {
                let (s, mis) = identify_channel(config, ch)?;
                (Some(s), mis)
            }
        };
        let ctrl = build_controller(config, fixed)?;
        (simulate(config, ch, x.samples(), Some(ctrl), config.output.pgm_frames)?, mis)
    } else {
        (simulate(config, ch, x.samples(), None, config.output.pgm_frames)?, None)
    };

    let ed_off = window_of(&off.eardrum, fs, window)?;
    let ed_on = window_of(&on.eardrum, fs, window)?;
    let mb_off = window_of(&off.membrane, fs, window)?;
    let mb_on = window_of(&on.membrane, fs, window)?;
    let eardrum_spl_off_db = overall_spl(&ed_off, &band)?;
    let eardrum_spl_on_db = overall_spl(&ed_on, &band)?;
    let membrane_spl_off_db = overall_spl(&mb_off, &band)?;
    let membrane_spl_on_db = overall_spl(&mb_on, &band)?;
    let seg = config.metrics.segment_s;
    let spectrum_off = averaged_spectrum(&ed_off, seg, &band)?;
    let spectrum_on = averaged_spectrum(&ed_on, seg, &band)?;
    let membrane_spectrum_off = averaged_spectrum(&mb_off, seg, &band)?;
    let membrane_spectrum_on = averaged_spectrum(&mb_on, seg, &band)?;
    let bands = third_octave_bands(&band)
        .into_iter()
        .map(|b| BandResult {
            nominal_hz: b.nominal_hz,
            f_lo: b.f_lo,
            f_hi: b.f_hi,
            eardrum_attenuation_db: spectrum_off.band_level_db(b.f_lo, b.f_hi)
                - spectrum_on.band_level_db(b.f_lo, b.f_hi),
            membrane_attenuation_db: membrane_spectrum_off.band_level_db(b.f_lo, b.f_hi)
                - membrane_spectrum_on.band_level_db(b.f_lo, b.f_hi),
        })
        .collect();

    let radius = crate::sensing::MEMBRANE_DIAMETER_M / 2.0;
    let beam_loss_s = on.frames.iter().find(|f| f.beam_offset_m > radius).map(|f| f.time_s);
    Ok(ChannelReport {
        channel: ch,
        eardrum_spl_off_db,
        eardrum_spl_on_db,
        eardrum_attenuation_db: attenuation(eardrum_spl_off_db, eardrum_spl_on_db),
        membrane_spl_off_db,
        membrane_spl_on_db,
        membrane_attenuation_db: attenuation(membrane_spl_off_db, membrane_spl_on_db),
        bands,
        spectrum_off,
        spectrum_on,
        membrane_spectrum_off,
        membrane_spectrum_on,
        eardrum_off: Signal::new(off.eardrum, fs)?,
        eardrum_on: Signal::new(on.eardrum, fs)?,
        frames: on.frames,
        frame_images: on.images,
        tracking: config.tracking.enabled,
        guard_trip_s: on.guard_trip_sample.map(|n| n as f64 / fs as f64),
        beam_loss_s,
        source_gain: gain,
        identification_misalignment_db: misalignment,
        weights: on.weights,
        s_hat: on.s_hat,
    })
}

/// Run every channel of a scenario. Channels run in parallel; the report
/// lists them in config order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    config.check_files()?;
    let source = source_signal(config)?;
    let channels = channels(config)
        .into_par_iter()
        .map(|ch| run_channel(config, ch, &source))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        config: config.clone(),
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    fn short(extra: &str) -> ScenarioConfig {
        let c = parse_config(&format!(
            "name = \"t\"\nsample_rate = 16000\nduration_s = 2.0\nmetrics.exclude_s = 1.0\n\
             controller.taps = 128\ncontroller.sec_taps = 256\nguard.enabled = false\n{extra}"
        ))
        .unwrap();
        c.validate().unwrap();
        c
    }

    #[test]
    fn controller_off_gives_identical_passes() {
        let c = short("controller.enabled = false");
        let r = run_scenario(&c).unwrap();
        let ch = &r.channels[0];
        assert_eq!(ch.eardrum_off, ch.eardrum_on);
        assert_eq!(ch.eardrum_attenuation_db, 0.0);
        assert_eq!(ch.eardrum_spl_off_db, ch.eardrum_spl_on_db);
    }

    #[test]
    fn calibration_hits_target() {
        let c = short("source.target_spl_db = 70.0");
        let r = run_scenario(&c).unwrap();
        assert!((r.channels[0].eardrum_spl_off_db - 70.0).abs() < 1e-9);
    }

    #[test]
    fn off_pass_equals_pure_scene_response() {
        let c = short("controller.enabled = false");
        let src = source_signal(&c).unwrap();
        let ch = channels(&c)[0];
        let out = simulate(&c, ch, src.samples(), None, 0).unwrap();
        let mut scene = Scene::new(geometry(&c, ch), c.sample_rate).unwrap();
        for (i, &x) in src.samples().iter().enumerate() {
            let p = scene.step(&[x], &[0.0, 0.0]).unwrap();
            assert_eq!(p.eardrum, out.eardrum[i]);
        }
    }

    #[test]
    fn exact_path_has_loop_delay_and_fits() {
        let c = short("");
        let ch = channels(&c)[0];
        let scene = Scene::new(geometry(&c, ch), c.sample_rate).unwrap();
        let pickup = MembranePickup::new(c.sample_rate).unwrap();
        let s = exact_s_hat(&scene, &pickup, ch.ear, 1.0, 256);
        assert_eq!(s[0], 0.0);
        assert!(s.len() <= 256);
        let peak = s.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        let d = scene.paths().secondary[0].peak_index();
        assert!(peak > d, "{peak} vs {d}");
    }

    #[test]
    fn identification_matches_exact_path() {
        let c = short("identification.duration_s = 1.0");
        let (_, mis) = identify_channel(&c, channels(&c)[0]).unwrap();
        assert!(mis.unwrap() < -20.0, "{mis:?}");
    }

    #[test]
    fn short_wav_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        crate::signal::write_wav_f32(&p, &Signal::new(vec![0.1; 1000], 16000).unwrap()).unwrap();
        let mut c = short("source.kind = \"wav\"\nsource.path = \"x.wav\"");
        c.resolve_paths(dir.path());
        assert!(matches!(source_signal(&c), Err(Error::Config(_))));
    }
}
