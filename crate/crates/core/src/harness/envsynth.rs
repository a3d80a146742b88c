//! Deterministic stand-ins for recorded environmental sounds.
//!
//! Each kind is noise shaped in the frequency domain plus a few structured
//! components. Most of the energy lies between 2 and 4 kHz. Output is
//! normalized to a peak of 0.9, like a recording on disk.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{stream_seed, white_noise, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// Stationary cabin noise.
    AircraftInterior,
    /// A pass-by that peaks 5.5 s into the recording.
    AircraftFlyby,
    /// Several overlapping talkers.
    CrowdSpeech,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::AircraftInterior, EnvKind::AircraftFlyby, EnvKind::CrowdSpeech];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::AircraftInterior => "aircraft_interior",
            EnvKind::AircraftFlyby => "aircraft_flyby",
            EnvKind::CrowdSpeech => "crowd_speech",
        }
    }
}

/// Time of the flyby's loudest moment.
pub const FLYBY_PEAK_S: f64 = 5.5;

const UPPER_EDGE_HZ: f64 = 10_000.0;

fn upper_edge(fs: f64) -> f64 {
    UPPER_EDGE_HZ.min(0.45 * fs)
}

fn bump_db(f: f64, centre: f64, octaves: f64, height_db: f64) -> f64 {
    let u = (f / centre).log2() / octaves;
    height_db * (-u * u).exp()
}

fn shaped_noise(n: usize, fs: f64, seed: u64, gain_db: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut spec: Vec<Complex<f64>> = white_noise(n, seed).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spec);
    for (k, bin) in spec.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        let g = if f < 40.0 || f > upper_edge(fs) {
            0.0
        } else {
            10f64.powf(gain_db(f) / 20.0)
        };
        *bin *= g;
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

fn cabin_db(f: f64) -> f64 {
    -6.0 * (f / 500.0).log2().max(0.0) + bump_db(f, 2800.0, 0.6, 16.0)
}

fn interior(n: usize, fs: f64, seed: u64) -> Vec<f64> {
    let mut x = shaped_noise(n, fs, seed, cabin_db);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 / fs;
        *v += rms * (0.3 * (2.0 * PI * 2340.0 * t).sin() + 0.2 * (2.0 * PI * 3510.0 * t + 1.0).sin());
    }
    x
}

fn flyby(n: usize, fs: f64, seed: u64) -> Vec<f64> {
    let mut x = shaped_noise(n, fs, seed, |f| cabin_db(f) - 4.0 * (f / 3000.0).log2().max(0.0));
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let floor = 10f64.powf(-25.0 / 20.0);
    let mut phase = 0.0;
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 / fs;
        let env = floor + (-((t - FLYBY_PEAK_S) / 1.5).powi(2)).exp();
        // Doppler glide of the engine tone through the pass.
        let f_tone = 2800.0 - 400.0 * ((t - FLYBY_PEAK_S) / 1.0).tanh();
        phase += 2.0 * PI * f_tone / fs;
        *v = env * (*v + 0.5 * rms * phase.sin());
    }
    x
}

fn syllables(n: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut env = vec![0.0; n];
    let mut t = rng.random_range(0.0..0.4);
    let total = n as f64 / fs;
    while t < total {
        let len = rng.random_range(0.08..0.3);
        let amp = rng.random_range(0.4..1.0);
        let a = (t * fs) as usize;
        let b = (((t + len) * fs) as usize).min(n);
        for (i, e) in env.iter_mut().enumerate().take(b).skip(a) {
            let u = (i - a) as f64 / (b - a).max(1) as f64;
            *e += amp * (PI * u).sin().powi(2);
        }
        t += len + rng.random_range(0.02..0.25);
    }
    env
}

fn crowd(n: usize, fs: f64, seed: u64) -> Vec<f64> {
    const TALKERS: u64 = 6;
    let mut out = vec![0.0; n];
    for k in 0..TALKERS {
        let s = stream_seed(seed, k);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let f0 = rng.random_range(100.0..220.0);
        let centre = rng.random_range(2200.0..3600.0);
        let noise = shaped_noise(n, fs, s ^ 0x5eed, |f| {
            -3.0 * (f / 300.0).log2().abs() + bump_db(f, centre, 0.5, 18.0)
        });
        let env = syllables(n, fs, &mut rng);
        let mut phase = 0.0;
        for i in 0..n {
            let t = i as f64 / fs;
            let pitch = f0 * (1.0 + 0.05 * (2.0 * PI * 3.0 * t + k as f64).sin());
            phase += 2.0 * PI * pitch / fs;
            let voiced: f64 = (1..=8).map(|h| (h as f64 * phase).sin() / h as f64).sum();
            out[i] += env[i] * (noise[i] + 0.02 * voiced);
        }
    }
    out
}

/// Synthesize `duration_s` of one environmental sound at `sample_rate`.
pub fn synthesize_env(kind: EnvKind, duration_s: f64, sample_rate: u32, seed: u64) -> Result<Signal> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::domain("duration must be positive"));
    }
    if sample_rate < 8000 {
        return Err(Error::domain(format!("sample rate {sample_rate} Hz is below 8000 Hz")));
    }
    let fs = sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    let seed = stream_seed(seed, kind as u64 + 100);
    let mut x = match kind {
        EnvKind::AircraftInterior => interior(n, fs, seed),
        EnvKind::AircraftFlyby => flyby(n, fs, seed),
        EnvKind::CrowdSpeech => crowd(n, fs, seed),
    };
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= 0.9 / peak);
    }
    Signal::new(x, sample_rate)
}
