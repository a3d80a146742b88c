//! Test-signal generation, ingestion and the level metrics every scenario
//! reports.

mod bands;
mod noise;
mod spectrum;
mod wav;

pub use bands::{third_octave_bands, ThirdOctave};
pub use noise::{generate_grey_noise, shaping_gain, stream_seed, white_noise, SHAPING_TABLE};
pub use spectrum::{averaged_spectrum, averaged_spectrum_ref, Spectrum};
pub use wav::{load_wav, resample_linear, write_wav_f32, write_wav_i16};

use crate::dsp::{butterworth, Biquad};
use crate::error::{Error, Result};

/// Reference pressure for dB SPL.
pub const P_REF: f64 = 20e-6;

/// Level reported for a silent signal or an empty spectral bin.
pub const SILENT_LEVEL: f64 = f64::NEG_INFINITY;

/// Uniformly sampled real waveform (Pa or m/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::domain("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("sample {i} is not finite")));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Signal::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, gain: f64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|v| v * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Samples in `[start_s, end_s)`, clamped to the signal.
    pub fn window(&self, start_s: f64, end_s: f64) -> Signal {
        let fs = self.sample_rate as f64;
        let a = ((start_s * fs).round().max(0.0) as usize).min(self.len());
        let b = ((end_s * fs).round().max(0.0) as usize).clamp(a, self.len());
        Signal {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }
}

/// Frequency band `[f_lo, f_hi]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Band {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Band {
    /// The band over which all broadband results are evaluated.
    pub const EVALUATION: Band = Band {
        f_lo: 500.0,
        f_hi: 6000.0,
    };

    pub fn new(f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(f_lo.is_finite() && f_hi.is_finite() && 0.0 < f_lo && f_lo < f_hi) {
            return Err(Error::domain(format!("invalid band [{f_lo}, {f_hi}] Hz")));
        }
        Ok(Band { f_lo, f_hi })
    }

    /// Check the band against a sample rate.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        Band::new(self.f_lo, self.f_hi)?;
        if self.f_hi >= sample_rate as f64 / 2.0 {
            return Err(Error::domain(format!(
                "band upper edge {} Hz is not below Nyquist ({} Hz)",
                self.f_hi,
                sample_rate as f64 / 2.0
            )));
        }
        Ok(())
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }
}

/// Order of the Butterworth band-pass used for band-limited levels
/// (a fourth-order high-pass cascaded with a fourth-order low-pass).
pub const BAND_FILTER_ORDER: usize = 8;

fn band_sections(band: &Band, sample_rate: u32) -> Vec<Biquad> {
    let fs = sample_rate as f64;
    let mut s = butterworth(BAND_FILTER_ORDER / 2, band.f_lo, fs, true);
    s.extend(butterworth(BAND_FILTER_ORDER / 2, band.f_hi, fs, false));
    s
}

/// Zero-phase band-pass: the Butterworth cascade is run forward and then
/// backward over an odd-reflected extension of the signal.
pub fn band_filter(signal: &Signal, band: &Band) -> Result<Signal> {
    band.validate(signal.sample_rate)?;
    let x = signal.samples();
    if x.is_empty() {
        return Ok(signal.clone());
    }
    let sections = band_sections(band, signal.sample_rate);
    let pad = ((4.0 * signal.sample_rate as f64 / band.f_lo).ceil() as usize).min(x.len() - 1);

    let mut ext = Vec::with_capacity(x.len() + 2 * pad);
    let (first, last) = (x[0], x[x.len() - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));

    for s in &sections {
        s.filter_in_place(&mut ext);
    }
    ext.reverse();
    for s in &sections {
        s.filter_in_place(&mut ext);
    }
    ext.reverse();
    Signal::new(ext[pad..pad + x.len()].to_vec(), signal.sample_rate)
}

/// dB re `reference` for an RMS value; silent input maps to [`SILENT_LEVEL`].
pub fn level_db(rms: f64, reference: f64) -> f64 {
    if rms > 0.0 {
        20.0 * (rms / reference).log10()
    } else {
        SILENT_LEVEL
    }
}

/// Overall band-limited sound pressure level, dB re 20 µPa.
pub fn overall_spl(signal: &Signal, band: &Band) -> Result<f64> {
    let filtered = band_filter(signal, band)?;
    Ok(level_db(filtered.rms(), P_REF))
}

/// Level reduction in dB; positive means the second level is quieter.
pub fn attenuation(spl_before: f64, spl_after: f64) -> f64 {
    spl_before - spl_after
}
