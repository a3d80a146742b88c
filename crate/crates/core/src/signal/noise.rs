use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{overall_spl, Band, Signal};
use crate::error::{Error, Result};

/// Grey-noise weighting in dB re 1 kHz at third-octave centres.
///
/// Inverse of a 40-phon equal-loudness contour: the sound pressure needed
/// at each frequency for equal loudness, minus the level needed at 1 kHz.
/// Values between centres are interpolated linearly in log-frequency and
/// held constant outside the table.
pub const SHAPING_TABLE: [(f64, f64); 16] = [
    (250.0, 10.39),
    (315.0, 7.57),
    (400.0, 4.97),
    (500.0, 3.04),
    (630.0, 1.33),
    (800.0, 0.05),
    (1000.0, 0.0),
    (1250.0, 1.81),
    (1600.0, 2.50),
    (2000.0, -0.78),
    (2500.0, -3.50),
    (3150.0, -4.40),
    (4000.0, -3.36),
    (5000.0, 0.0),
    (6300.0, 5.82),
    (8000.0, 11.79),
];

fn shaping_db(f: f64) -> f64 {
    let t = &SHAPING_TABLE;
    if f <= t[0].0 {
        return t[0].1;
    }
    if f >= t[t.len() - 1].0 {
        return t[t.len() - 1].1;
    }
    let i = t.iter().position(|&(fc, _)| fc > f).unwrap_or(t.len() - 1);
    let (f0, g0) = t[i - 1];
    let (f1, g1) = t[i];
    let u = (f / f0).ln() / (f1 / f0).ln();
    g0 + u * (g1 - g0)
}

/// Linear spectral gain of the grey-noise curve at `freq_hz`; exactly 1.0
/// at 1 kHz.
pub fn shaping_gain(freq_hz: f64, sample_rate: f64) -> Result<f64> {
    if !(freq_hz > 0.0 && freq_hz < sample_rate / 2.0) {
        return Err(Error::domain(format!(
            "frequency {freq_hz} Hz outside (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    Ok(10f64.powf(shaping_db(freq_hz) / 20.0))
}

/// Unit-variance Gaussian white noise from a ChaCha8 stream.
pub fn white_noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Independent seed for a named sub-stream of a run, by splitmix64 mixing.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded grey noise: white Gaussian noise shaped in the frequency domain by
/// [`shaping_gain`] inside `band`, zero outside it, then scaled so that
/// [`overall_spl`] over `band` equals `target_spl_db`.
pub fn generate_grey_noise(
    duration_s: f64,
    sample_rate: u32,
    band: &Band,
    target_spl_db: f64,
    seed: u64,
) -> Result<Signal> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::domain(format!("duration {duration_s} s must be positive")));
    }
    if !target_spl_db.is_finite() {
        return Err(Error::domain("target level must be finite"));
    }
    band.validate(sample_rate)?;
    let fs = sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    if n < 2 {
        return Err(Error::domain("duration shorter than two samples"));
    }

    let mut spec: Vec<Complex<f64>> = white_noise(n, seed)
        .into_iter()
        .map(|v| Complex::new(v, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spec);
    for (k, bin) in spec.iter_mut().enumerate() {
        let kk = k.min(n - k);
        let f = kk as f64 * fs / n as f64;
        let g = if kk > 0 && band.contains(f) {
            shaping_gain(f, fs)?
        } else {
            0.0
        };
        *bin *= g;
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let shaped: Vec<f64> = spec.iter().map(|c| c.re / n as f64).collect();

    let raw = Signal::new(shaped, sample_rate)?;
    let level = overall_spl(&raw, band)?;
    if !level.is_finite() {
        return Err(Error::domain("band contains no frequency bins at this duration"));
    }
    Ok(raw.scaled(10f64.powf((target_spl_db - level) / 20.0)))
}
