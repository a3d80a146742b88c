//! Camera-based marker tracking that steers the vibrometer beam.
//!
//! Everything here lives in the membrane plane: 2-D coordinates in metres
//! relative to the membrane centre at rest, u horizontal and v vertical.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

pub const MIN_FRAME_SIDE: usize = 16;

/// Grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl FrameImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(Error::domain(format!(
                "frame {width}x{height} is smaller than {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::contract("pixel count does not match frame size"));
        }
        Ok(FrameImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        FrameImage::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Binary PGM (P5).
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write!(f, "P5\n{} {}\n255\n", self.width, self.height).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.pixels).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Back to intensities (0 or 255), for re-thresholding.
    pub fn to_frame(&self) -> FrameImage {
        FrameImage {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

/// Orthographic camera looking along the membrane normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    /// Focal length in pixels; the scale at distance D is D / focal_px.
    pub focal_px: f64,
    pub distance_m: f64,
    /// World point imaged at the frame centre.
    pub axis: Vec2,
}

impl Camera {
    pub const DEFAULT_SIZE: usize = 256;
    pub const DEFAULT_FOCAL_PX: f64 = 300.0;

    pub fn new(distance_m: f64, axis: Vec2) -> Self {
        Camera {
            width: Camera::DEFAULT_SIZE,
            height: Camera::DEFAULT_SIZE,
            focal_px: Camera::DEFAULT_FOCAL_PX,
            distance_m,
            axis,
        }
    }

    /// Metres per pixel.
    pub fn beta(&self) -> f64 {
        self.distance_m / self.focal_px
    }

    pub fn center_px(&self) -> Vec2 {
        [(self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0]
    }

    pub fn project(&self, world: Vec2) -> Vec2 {
        let c = self.center_px();
        let b = self.beta();
        [c[0] + (world[0] - self.axis[0]) / b, c[1] + (world[1] - self.axis[1]) / b]
    }

    pub fn unproject(&self, px: Vec2) -> Vec2 {
        let c = self.center_px();
        let b = self.beta();
        [self.axis[0] + (px[0] - c[0]) * b, self.axis[1] + (px[1] - c[1]) * b]
    }
}

/// Draw a disk of `radius_m` at `marker_world`. Edge pixels get intensity
/// proportional to coverage, estimated from the distance between pixel
/// centre and rim. A marker centre outside the frame yields a blank frame.
pub fn render_frame(marker_world: Vec2, radius_m: f64, camera: &Camera) -> Result<FrameImage> {
    let mut frame = FrameImage::filled(camera.width, camera.height, 0)?;
    let [cx, cy] = camera.project(marker_world);
    let inside = cx >= -0.5
        && cy >= -0.5
        && cx <= camera.width as f64 - 0.5
        && cy <= camera.height as f64 - 0.5;
    if !inside || !cx.is_finite() || !cy.is_finite() {
        return Ok(frame);
    }
    let r = radius_m / camera.beta();
    let x0 = (cx - r - 1.0).floor().max(0.0) as usize;
    let y0 = (cy - r - 1.0).floor().max(0.0) as usize;
    let x1 = ((cx + r + 1.0).ceil() as usize).min(camera.width - 1);
    let y1 = ((cy + r + 1.0).ceil() as usize).min(camera.height - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = (x as f64 - cx).hypot(y as f64 - cy);
            let cover = (r - d + 0.5).clamp(0.0, 1.0);
            frame.set(x, y, (255.0 * cover).round() as u8);
        }
    }
    Ok(frame)
}

/// B(x, y) = 1 where I(x, y) ≥ λ.
pub fn binarize(frame: &FrameImage, lambda: u8) -> Result<BinaryImage> {
    if lambda == 0 {
        return Err(Error::domain("threshold must be in 1..=255"));
    }
    Ok(BinaryImage {
        width: frame.width,
        height: frame.height,
        bits: frame.pixels.iter().map(|&p| p >= lambda).collect(),
    })
}

/// Mean coordinate of the set pixels.
pub fn centroid(image: &BinaryImage) -> Result<Vec2> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for y in 0..image.height {
        for x in 0..image.width {
            if image.get(x, y) {
                sx += x as f64;
                sy += y as f64;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::TargetLost);
    }
    Ok([sx / n as f64, sy / n as f64])
}

/// Pixel shift between consecutive centroids, per second.
pub fn pixel_velocity(prev: Vec2, cur: Vec2, frame_rate: f64) -> Vec2 {
    [(cur[0] - prev[0]) * frame_rate, (cur[1] - prev[1]) * frame_rate]
}

/// v_r = β · v_p.
pub fn to_world(v_p: Vec2, beta: f64) -> Vec2 {
    [beta * v_p[0], beta * v_p[1]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub beta: f64,
    pub distance_m: f64,
}

/// β from a known marker displacement and the pixel shift it produced.
pub fn calibrate_beta(distance_m: f64, known_shift_m: f64, observed_shift_px: f64) -> Result<Calibration> {
    if !(observed_shift_px.abs() >= 1.0) {
        return Err(Error::Calibration(format!(
            "observed shift of {observed_shift_px} px is below one pixel"
        )));
    }
    let beta = known_shift_m / observed_shift_px;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Calibration("shift and pixel shift must share a sign".into()));
    }
    Ok(Calibration { beta, distance_m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackingMode {
    /// Beam target from the absolute centroid position.
    #[default]
    Position,
    /// Beam target advanced by β times the centroid velocity.
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub frame_rate: f64,
    pub threshold: u8,
    pub latency_frames: usize,
    pub mode: TrackingMode,
    /// Marker centre to membrane centre.
    pub marker_offset: Vec2,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            frame_rate: 30.0,
            threshold: 128,
            latency_frames: 1,
            mode: TrackingMode::Position,
            marker_offset: [0.0, 0.02],
        }
    }
}

/// Command for the steering mirrors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalvoCommand {
    pub beam_target: Vec2,
}

/// What one tracker step saw and what it commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub centroid: Option<Vec2>,
    /// Target derived from this frame, before transport delay.
    pub measured: GalvoCommand,
    /// Target the mirrors hold for the coming frame.
    pub applied: GalvoCommand,
    pub lost: bool,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    calibration: Calibration,
    axis: Vec2,
    center_px: Vec2,
    prev_centroid: Option<Vec2>,
    beam_target: Vec2,
    pipeline: VecDeque<Vec2>,
}

impl Tracker {
    /// A tracker whose beam starts on the membrane centre at rest.
    pub fn new(config: TrackerConfig, calibration: Calibration, camera: &Camera) -> Result<Self> {
        if !(calibration.beta > 0.0) || !(config.frame_rate > 0.0) {
            return Err(Error::domain("beta and frame rate must be positive"));
        }
        if config.threshold == 0 {
            return Err(Error::domain("threshold must be in 1..=255"));
        }
        let start = [camera.axis[0] + config.marker_offset[0], camera.axis[1] + config.marker_offset[1]];
        Ok(Tracker {
            config,
            calibration,
            axis: camera.axis,
            center_px: camera.center_px(),
            prev_centroid: None,
            beam_target: start,
            pipeline: std::iter::repeat_n(start, config.latency_frames).collect(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn beam_target(&self) -> Vec2 {
        self.beam_target
    }

    fn from_centroid(&self, c: Vec2) -> Vec2 {
        let b = self.calibration.beta;
        [
            self.axis[0] + (c[0] - self.center_px[0]) * b + self.config.marker_offset[0],
            self.axis[1] + (c[1] - self.center_px[1]) * b + self.config.marker_offset[1],
        ]
    }

    pub fn track_step(&mut self, frame: &FrameImage) -> Result<TrackOutput> {
        let found = match centroid(&binarize(frame, self.config.threshold)?) {
            Ok(c) => Some(c),
            Err(Error::TargetLost) => None,
            Err(e) => return Err(e),
        };
        if let Some(c) = found {
            self.beam_target = match (self.config.mode, self.prev_centroid) {
                (TrackingMode::Velocity, Some(p)) => {
                    let v = to_world(pixel_velocity(p, c, self.config.frame_rate), self.calibration.beta);
                    [
                        self.beam_target[0] + v[0] / self.config.frame_rate,
                        self.beam_target[1] + v[1] / self.config.frame_rate,
                    ]
                }
                _ => self.from_centroid(c),
            };
            self.prev_centroid = Some(c);
        }
        self.pipeline.push_back(self.beam_target);
        let applied = self.pipeline.pop_front().unwrap_or(self.beam_target);
        Ok(TrackOutput {
            centroid: found,
            measured: GalvoCommand {
                beam_target: self.beam_target,
            },
            applied: GalvoCommand { beam_target: applied },
            lost: found.is_none(),
        })
    }
}
