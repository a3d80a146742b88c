use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{Band, Signal, P_REF, SILENT_LEVEL};
use crate::error::{Error, Result};

/// Averaged magnitude spectrum restricted to a band.
///
/// Each bin holds the power a sinusoid centred on that bin would show,
/// so tones read at their true level. Band powers divide the bin sum by the
/// window's equivalent noise bandwidth, which makes them consistent with
/// time-domain power for broadband signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub level_db: Vec<f64>,
    /// Level reference (20 µPa for pressure, 1 m/s for velocity).
    pub reference: f64,
    /// Equivalent noise bandwidth of the analysis window, in bins.
    pub enbw_bins: f64,
    pub bin_width_hz: f64,
    pub segments: usize,
}

impl Spectrum {
    fn bin_power(&self, i: usize) -> f64 {
        let l = self.level_db[i];
        if l == SILENT_LEVEL {
            0.0
        } else {
            self.reference * self.reference * 10f64.powf(l / 10.0)
        }
    }

    /// Mean-square value contained in `[f_lo, f_hi]`.
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> f64 {
        let sum: f64 = self
            .freqs
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= f_lo && f <= f_hi)
            .map(|(i, _)| self.bin_power(i))
            .sum();
        sum / self.enbw_bins
    }

    pub fn band_level_db(&self, f_lo: f64, f_hi: f64) -> f64 {
        super::level_db(self.band_power(f_lo, f_hi).sqrt(), self.reference)
    }

    /// Frequency and level of the strongest bin.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.level_db
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != SILENT_LEVEL)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &l)| (self.freqs[i], l))
    }
}

/// Averaged pressure spectrum in dB re 20 µPa.
pub fn averaged_spectrum(signal: &Signal, segment_s: f64, band: &Band) -> Result<Spectrum> {
    averaged_spectrum_ref(signal, segment_s, band, P_REF)
}

/// Averaged spectrum over 50 %-overlapping periodic-Hann segments, with
/// levels in dB re `reference`.
pub fn averaged_spectrum_ref(
    signal: &Signal,
    segment_s: f64,
    band: &Band,
    reference: f64,
) -> Result<Spectrum> {
    band.validate(signal.sample_rate())?;
    let fs = signal.sample_rate() as f64;
    let seg = (segment_s * fs).round() as usize;
    if seg < 16 {
        return Err(Error::domain(format!("segment of {seg} samples is too short")));
    }
    let x = signal.samples();
    if x.len() < seg {
        return Err(Error::domain(format!(
            "signal of {} samples is shorter than one {seg}-sample segment",
            x.len()
        )));
    }
    let hop = seg / 2;
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos())
        .collect();
    let sum_w: f64 = window.iter().sum();
    let sum_w2: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::new().plan_fft_forward(seg);
    let mut acc = vec![0.0; seg / 2 + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); seg];
    let segments = (x.len() - seg) / hop + 1;
    for s in 0..segments {
        let chunk = &x[s * hop..s * hop + seg];
        for ((b, &v), &w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new(v * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }

    let bin_width = fs / seg as f64;
    let mut freqs = Vec::new();
    let mut level_db = Vec::new();
    for (k, &a) in acc.iter().enumerate() {
        let f = k as f64 * bin_width;
        if !band.contains(f) {
            continue;
        }
        let one_sided = if k == 0 || 2 * k == seg { 1.0 } else { 2.0 };
        let p = one_sided * a / segments as f64 / (sum_w * sum_w);
        freqs.push(f);
        level_db.push(if p > 0.0 {
            10.0 * (p / (reference * reference)).log10()
        } else {
            SILENT_LEVEL
        });
    }
    Ok(Spectrum {
        freqs,
        level_db,
        reference,
        enbw_bins: seg as f64 * sum_w2 / (sum_w * sum_w),
        bin_width_hz: bin_width,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_grey_noise, white_noise};
    use std::f64::consts::PI;

    #[test]
    fn tone_peak_level_and_frequency() {
        let fs = 32000;
        let s: Vec<f64> = (0..15 * fs)
            .map(|i| (2.0 * PI * 1000.0 * i as f64 / fs as f64).sin())
            .collect();
        let spec = averaged_spectrum(&Signal::new(s, fs as u32).unwrap(), 0.128, &Band::EVALUATION).unwrap();
        let (f, l) = spec.peak().unwrap();
        assert!((f - 1000.0).abs() <= spec.bin_width_hz);
        let closed_form = 20.0 * (0.5f64.sqrt() / P_REF).log10();
        assert!((l - closed_form).abs() <= 0.5, "{l} vs {closed_form}");
        assert!(spec.segments >= 230);
    }

    #[test]
    fn white_noise_is_flat_across_band() {
        let s = Signal::new(white_noise(15 * 32000, 11), 32000).unwrap();
        let spec = averaged_spectrum(&s, 0.128, &Band::EVALUATION).unwrap();
        let mean = spec.level_db.iter().sum::<f64>() / spec.level_db.len() as f64;
        for &l in &spec.level_db {
            assert!((l - mean).abs() <= 3.0, "{l} vs {mean}");
        }
    }

    #[test]
    fn parseval_band_power_matches_time_domain() {
        // Band-limited input, so the time-domain power is the band power.
        let s = generate_grey_noise(15.0, 32000, &Band::EVALUATION, 80.0, 5).unwrap();
        let spec = averaged_spectrum(&s, 0.128, &Band::EVALUATION).unwrap();
        let from_bins = spec.band_power(500.0, 6000.0);
        let time = s.rms().powi(2);
        assert!((from_bins / time - 1.0).abs() < 0.01, "{}", from_bins / time);

        // Unit-variance white noise carries 2*B/fs of its power in a band of width B.
        let w = Signal::new(white_noise(15 * 32000, 2), 32000).unwrap();
        let spec = averaged_spectrum(&w, 0.128, &Band::EVALUATION).unwrap();
        let expected = 2.0 * 3000.0 / 32000.0 * w.rms().powi(2);
        let ratio = spec.band_power(1000.0, 4000.0) / expected;
        assert!((ratio - 1.0).abs() < 0.03, "{ratio}");
    }

    #[test]
    fn zero_signal_bins_are_silent() {
        let s = Signal::zeros(32000, 32000).unwrap();
        let spec = averaged_spectrum(&s, 0.128, &Band::EVALUATION).unwrap();
        assert!(!spec.level_db.is_empty());
        assert!(spec.level_db.iter().all(|&l| l == SILENT_LEVEL));
        assert_eq!(spec.band_level_db(500.0, 6000.0), SILENT_LEVEL);
    }

    #[test]
    fn too_short_signal_is_rejected() {
        let s = Signal::zeros(1000, 32000).unwrap();
        assert!(averaged_spectrum(&s, 0.128, &Band::EVALUATION).is_err());
    }
}
