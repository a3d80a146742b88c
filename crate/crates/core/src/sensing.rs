//! Membrane pick-up and laser vibrometer channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dsp::{cascade_impulse, dot, highpass_resonant, lowpass_first_order, DelayLine};
use crate::error::{Error, Result};
use crate::scene::PathFir;

pub const MEMBRANE_DIAMETER_M: f64 = 9.2e-3;
pub const MEMBRANE_DEPTH_M: f64 = 4.6e-3;
pub const MEMBRANE_MASS_KG: f64 = 0.2e-3;

/// Pressure-to-velocity gain at 1 kHz, (m/s)/Pa.
pub const PICKUP_GAIN: f64 = 1e-3;
pub const PICKUP_RESONANCE_HZ: f64 = 300.0;
pub const PICKUP_Q: f64 = 1.0;
pub const PICKUP_LOWPASS_HZ: f64 = 10_000.0;
/// Length of the pick-up impulse response.
pub const PICKUP_LENGTH_S: f64 = 0.010;

/// Instrument noise density, (m/s)/√Hz.
pub const NOISE_DENSITY: f64 = 20e-9;
/// Level of the invalid-return noise above the noise floor.
pub const DROPOUT_DB: f64 = 60.0;

/// Incidence loss anchor: 5 dB at 60°.
pub const INCIDENCE_ANCHOR_DEG: f64 = 60.0;
pub const INCIDENCE_ANCHOR_DB: f64 = -5.0;

/// Impulse response of the pick-up: resonant high-pass at 300 Hz followed
/// by a first-order low-pass, scaled to [`PICKUP_GAIN`] at 1 kHz.
pub fn pickup_response(sample_rate: u32) -> Result<PathFir> {
    let fs = sample_rate as f64;
    if fs <= 2000.0 {
        return Err(Error::domain("pick-up model needs a sample rate above 2 kHz"));
    }
    let len = (PICKUP_LENGTH_S * fs).round() as usize;
    let lp = PICKUP_LOWPASS_HZ.min(0.45 * fs);
    let h = cascade_impulse(
        &[highpass_resonant(PICKUP_RESONANCE_HZ, PICKUP_Q, fs), lowpass_first_order(lp, fs)],
        len,
    );
    let raw = PathFir::new(h, sample_rate)?;
    let g = 10f64.powf(raw.magnitude_db(1000.0) / 20.0);
    raw.scaled(PICKUP_GAIN / g)
}

/// The retro-reflective membrane worn on the ear, as a streaming filter
/// from local pressure to surface velocity.
#[derive(Debug, Clone)]
pub struct MembranePickup {
    pub diameter_m: f64,
    pub depth_m: f64,
    pub mass_kg: f64,
    response: PathFir,
    history: DelayLine,
}

impl MembranePickup {
    pub fn new(sample_rate: u32) -> Result<Self> {
        let response = pickup_response(sample_rate)?;
        let history = DelayLine::new(response.len());
        Ok(MembranePickup {
            diameter_m: MEMBRANE_DIAMETER_M,
            depth_m: MEMBRANE_DEPTH_M,
            mass_kg: MEMBRANE_MASS_KG,
            response,
            history,
        })
    }

    pub fn radius(&self) -> f64 {
        self.diameter_m / 2.0
    }

    pub fn response(&self) -> &PathFir {
        &self.response
    }

    /// Surface velocity for the next pressure sample.
    pub fn membrane_velocity(&mut self, pressure: f64) -> f64 {
        self.history.push(pressure);
        dot(self.response.taps(), self.history.recent())
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }
}

fn incidence_exponent() -> f64 {
    let g = 10f64.powf(INCIDENCE_ANCHOR_DB / 20.0);
    g.ln() / INCIDENCE_ANCHOR_DEG.to_radians().cos().ln()
}

/// Amplitude loss of the vibrometer signal at a given beam incidence:
/// cos(θ)^k, with k fixed by the 60° anchor.
pub fn incidence_gain(incidence_deg: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&incidence_deg) {
        return Err(Error::domain(format!("incidence {incidence_deg}° outside [0, 90)")));
    }
    Ok(incidence_deg.to_radians().cos().powf(incidence_exponent()))
}

/// Beam spot relative to the membrane centre, in the membrane plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BeamState {
    pub spot: [f64; 2],
    pub incidence_deg: f64,
}

impl BeamState {
    pub fn offset(&self) -> f64 {
        self.spot[0].hypot(self.spot[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdvReading {
    pub velocity: f64,
    pub on_membrane: bool,
}

/// Vibrometer with seeded instrument noise.
#[derive(Debug, Clone)]
pub struct Ldv {
    rng: ChaCha8Rng,
    floor_sigma: f64,
    dropout_sigma: f64,
    noise_enabled: bool,
}

impl Ldv {
    /// White noise of [`NOISE_DENSITY`] across the full band and dropout
    /// noise [`DROPOUT_DB`] above it.
    pub fn new(sample_rate: u32, seed: u64) -> Self {
        Ldv::with_levels(sample_rate, seed, NOISE_DENSITY, DROPOUT_DB)
    }

    pub fn with_levels(sample_rate: u32, seed: u64, noise_density: f64, dropout_db: f64) -> Self {
        let floor_sigma = noise_density * (sample_rate as f64 / 2.0).sqrt();
        Ldv {
            rng: ChaCha8Rng::seed_from_u64(seed),
            floor_sigma,
            dropout_sigma: floor_sigma * 10f64.powf(dropout_db / 20.0),
            noise_enabled: true,
        }
    }

    /// Turn off the noise floor. Dropout readings are still noise.
    pub fn without_noise(mut self) -> Self {
        self.noise_enabled = false;
        self
    }

    pub fn floor_sigma(&self) -> f64 {
        self.floor_sigma
    }

    pub fn dropout_sigma(&self) -> f64 {
        self.dropout_sigma
    }

    fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One reading. A spot inside the membrane rim sees the true velocity
    /// scaled by the incidence loss; outside it the instrument returns
    /// only noise.
    pub fn ldv_measure(&mut self, beam: &BeamState, pickup: &MembranePickup, true_velocity: f64) -> LdvReading {
        let g = self.gaussian();
        if beam.offset() > pickup.radius() {
            return LdvReading {
                velocity: self.dropout_sigma * g,
                on_membrane: false,
            };
        }
        let gain = incidence_gain(beam.incidence_deg.clamp(0.0, 89.999)).unwrap_or(0.0);
        let noise = if self.noise_enabled { self.floor_sigma * g } else { 0.0 };
        LdvReading {
            velocity: gain * true_velocity + noise,
            on_membrane: true,
        }
    }
}
