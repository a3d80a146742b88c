//! Headrest geometry, free-field propagation, head motion and the
//! membrane-to-eardrum observation model.
//!
//! Coordinates: head centre at the origin, x to the listener's right, y
//! forward, z up, metres throughout.

mod coupling;
mod motion;
mod path;
mod propagation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use coupling::{coupling_filter, mismatch_db};
pub use motion::{head_position, HeadTrajectory};
pub use path::{PathFir, MAX_PATH_TAPS};
pub use propagation::{delay_samples, free_field_ir, KERNEL_TAPS, MIN_DISTANCE_M, SPEED_OF_SOUND};

use crate::dsp::{dot, DelayLine};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position3 { x, y, z }
    }

    pub fn add(self, o: Position3) -> Position3 {
        Position3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Position3) -> Position3 {
        Position3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, k: f64) -> Position3 {
        Position3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, o: Position3) -> f64 {
        self.sub(o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Position3 {
    fn from(v: [f64; 3]) -> Self {
        Position3::new(v[0], v[1], v[2])
    }
}

impl From<Position3> for [f64; 3] {
    fn from(p: Position3) -> Self {
        [p.x, p.y, p.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn name(self) -> &'static str {
        match self {
            Ear::Left => "left",
            Ear::Right => "right",
        }
    }

    /// +1 for the right side of the head, -1 for the left.
    pub fn side(self) -> f64 {
        match self {
            Ear::Left => -1.0,
            Ear::Right => 1.0,
        }
    }

    /// Index of this ear's own headrest speaker.
    pub fn speaker_index(self) -> usize {
        match self {
            Ear::Left => 0,
            Ear::Right => 1,
        }
    }
}

impl fmt::Display for Ear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where on the outer ear the membrane pick-up is worn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembraneLocation {
    AnteriorNotch,
    Tragus,
    CavumConcha,
    Lobule,
}

impl MembraneLocation {
    pub const ALL: [MembraneLocation; 4] = [
        MembraneLocation::AnteriorNotch,
        MembraneLocation::Tragus,
        MembraneLocation::CavumConcha,
        MembraneLocation::Lobule,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MembraneLocation::AnteriorNotch => "anterior_notch",
            MembraneLocation::Tragus => "tragus",
            MembraneLocation::CavumConcha => "cavum_concha",
            MembraneLocation::Lobule => "lobule",
        }
    }
}

impl fmt::Display for MembraneLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MembraneLocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MembraneLocation::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::config(format!("unknown membrane location '{s}'")))
    }
}

/// Half-width of the head at the ear openings.
pub const EAR_HALF_WIDTH_M: f64 = 0.075;

/// The eardrum lies this far inward from the membrane point.
pub const CANAL_DEPTH_M: f64 = 0.025;

/// Headrest speakers: 0.44 m apart, each 45° behind the ear axis.
pub const SPEAKER_SPACING_M: f64 = 0.44;

/// Extra propagation distance reserved in every path for head motion.
pub const MOTION_MARGIN_M: f64 = 0.15;

pub fn default_speakers() -> [Position3; 2] {
    let h = SPEAKER_SPACING_M / 2.0;
    [Position3::new(-h, -h, 0.0), Position3::new(h, -h, 0.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGeometry {
    pub primary_sources: Vec<Position3>,
    pub secondary_speakers: [Position3; 2],
    pub ear_membrane: Position3,
    pub eardrum_eval: Position3,
    pub location: MembraneLocation,
}

impl SceneGeometry {
    /// Headrest layout for one ear with the default speaker pair.
    pub fn headrest(ear: Ear, primary_sources: Vec<Position3>, location: MembraneLocation) -> Self {
        let side = ear.side();
        SceneGeometry {
            primary_sources,
            secondary_speakers: default_speakers(),
            ear_membrane: Position3::new(side * EAR_HALF_WIDTH_M, 0.0, 0.0),
            eardrum_eval: Position3::new(side * (EAR_HALF_WIDTH_M - CANAL_DEPTH_M), 0.0, 0.0),
            location,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primary_sources.is_empty() {
            return Err(Error::domain("at least one primary source is required"));
        }
        let all = self
            .primary_sources
            .iter()
            .chain(&self.secondary_speakers)
            .chain([&self.ear_membrane, &self.eardrum_eval]);
        if all.into_iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("positions must be finite"));
        }
        Ok(())
    }

    fn max_distance(&self) -> f64 {
        self.primary_sources
            .iter()
            .chain(&self.secondary_speakers)
            .map(|p| p.distance(self.ear_membrane).max(MIN_DISTANCE_M))
            .fold(0.0, f64::max)
    }

    /// FIR length that holds every path with the head up to
    /// `MOTION_MARGIN_M` away from rest.
    pub fn path_taps(&self, sample_rate: u32) -> usize {
        let d = self.max_distance() + MOTION_MARGIN_M;
        (d / SPEED_OF_SOUND * sample_rate as f64).ceil() as usize + KERNEL_TAPS
    }
}

/// All filters of one scene at one head position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePaths {
    /// Source to membrane point, one per primary source.
    pub primary: Vec<PathFir>,
    /// Headrest speaker to membrane point.
    pub secondary: [PathFir; 2],
    /// Membrane point to eardrum.
    pub coupling: PathFir,
}

pub fn scene_paths(
    geometry: &SceneGeometry,
    head_offset: Position3,
    sample_rate: u32,
    n_taps: usize,
) -> Result<ScenePaths> {
    geometry.validate()?;
    if !head_offset.is_finite() {
        return Err(Error::domain("head offset must be finite"));
    }
    let membrane = geometry.ear_membrane.add(head_offset);
    let primary = geometry
        .primary_sources
        .iter()
        .map(|&s| free_field_ir(s, membrane, sample_rate, n_taps))
        .collect::<Result<Vec<_>>>()?;
    let [a, b] = geometry.secondary_speakers;
    let secondary = [
        free_field_ir(a, membrane, sample_rate, n_taps)?,
        free_field_ir(b, membrane, sample_rate, n_taps)?,
    ];
    Ok(ScenePaths {
        primary,
        secondary,
        coupling: coupling_filter(geometry.location, sample_rate)?,
    })
}

/// Pressures produced by one scene step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePressures {
    pub membrane: f64,
    pub eardrum: f64,
}

/// Streaming acoustic scene for one ear.
///
/// The membrane point hears the primary and secondary fields summed. At
/// the eardrum the primary field arrives unchanged, while the control
/// field is seen through the location's coupling filter; a perfectly
/// cancelled membrane therefore leaves `(1 - C) * p` at the eardrum.
#[derive(Debug, Clone)]
pub struct Scene {
    geometry: SceneGeometry,
    sample_rate: u32,
    n_taps: usize,
    head_offset: Position3,
    paths: ScenePaths,
    sources: Vec<DelayLine>,
    speakers: [DelayLine; 2],
    secondary_sum: DelayLine,
}

impl Scene {
    pub fn new(geometry: SceneGeometry, sample_rate: u32) -> Result<Self> {
        let n_taps = geometry.path_taps(sample_rate);
        let paths = scene_paths(&geometry, Position3::ORIGIN, sample_rate, n_taps)?;
        let sources = geometry.primary_sources.iter().map(|_| DelayLine::new(n_taps)).collect();
        let coupling_len = paths.coupling.len();
        Ok(Scene {
            geometry,
            sample_rate,
            n_taps,
            head_offset: Position3::ORIGIN,
            paths,
            sources,
            speakers: [DelayLine::new(n_taps), DelayLine::new(n_taps)],
            secondary_sum: DelayLine::new(coupling_len),
        })
    }

    pub fn geometry(&self) -> &SceneGeometry {
        &self.geometry
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn path_taps(&self) -> usize {
        self.n_taps
    }

    pub fn paths(&self) -> &ScenePaths {
        &self.paths
    }

    pub fn head_offset(&self) -> Position3 {
        self.head_offset
    }

    /// Current membrane-point position in world coordinates.
    pub fn membrane_position(&self) -> Position3 {
        self.geometry.ear_membrane.add(self.head_offset)
    }

    /// Move the head and re-derive the paths. Delay-line contents carry
    /// over, so the change takes effect from the next sample.
    pub fn set_head_offset(&mut self, offset: Position3) -> Result<()> {
        if offset == self.head_offset {
            return Ok(());
        }
        self.paths = scene_paths(&self.geometry, offset, self.sample_rate, self.n_taps)?;
        self.head_offset = offset;
        Ok(())
    }

    /// Advance one sample. `sources` holds one sample per primary source,
    /// `controls` one per headrest speaker.
    pub fn step(&mut self, sources: &[f64], controls: &[f64]) -> Result<ScenePressures> {
        if sources.len() != self.sources.len() || controls.len() != 2 {
            return Err(Error::contract(format!(
                "expected {} source and 2 control samples, got {} and {}",
                self.sources.len(),
                sources.len(),
                controls.len()
            )));
        }
        let mut primary = 0.0;
        for ((line, path), &x) in self.sources.iter_mut().zip(&self.paths.primary).zip(sources) {
            line.push(x);
            primary += dot(path.taps(), line.recent());
        }
        let mut secondary = 0.0;
        for ((line, path), &u) in self.speakers.iter_mut().zip(&self.paths.secondary).zip(controls) {
            line.push(u);
            secondary += dot(path.taps(), line.recent());
        }
        self.secondary_sum.push(secondary);
        let observed = dot(self.paths.coupling.taps(), self.secondary_sum.recent());
        Ok(ScenePressures {
            membrane: primary + secondary,
            eardrum: primary + observed,
        })
    }

    /// Clear all streaming state, keeping the geometry.
    pub fn reset(&mut self) {
        self.sources.iter_mut().for_each(DelayLine::clear);
        self.speakers.iter_mut().for_each(DelayLine::clear);
        self.secondary_sum.clear();
    }
}

/// Radius of the region around the error point expected to see 10 dB of
/// attenuation: a tenth of the wavelength.
pub fn quiet_zone_radius(freq_hz: f64) -> f64 {
    SPEED_OF_SOUND / freq_hz / 10.0
}
