use crate::dsp::convolve;
use crate::error::{Error, Result};

/// Upper bound on any FIR the scene or controller will hold.
pub const MAX_PATH_TAPS: usize = 1 << 16;

/// Finite impulse response of an acoustic or electro-acoustic path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFir {
    taps: Vec<f64>,
    sample_rate: u32,
}

impl PathFir {
    pub fn new(taps: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::domain("a path needs at least one tap"));
        }
        if taps.len() > MAX_PATH_TAPS {
            return Err(Error::domain(format!(
                "{} taps exceeds the limit of {MAX_PATH_TAPS}",
                taps.len()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::domain("sample rate must be positive"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("path taps must be finite"));
        }
        Ok(PathFir { taps, sample_rate })
    }

    /// Unit impulse delayed by `delay` samples.
    pub fn delay(delay: usize, sample_rate: u32) -> Result<Self> {
        let mut taps = vec![0.0; delay + 1];
        taps[delay] = 1.0;
        PathFir::new(taps, sample_rate)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn into_taps(self) -> Vec<f64> {
        self.taps
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn dc_gain(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Centre of mass of the taps, in samples. Equals the group delay at DC.
    pub fn dc_group_delay(&self) -> f64 {
        let num: f64 = self.taps.iter().enumerate().map(|(n, t)| n as f64 * t).sum();
        num / self.dc_gain()
    }

    /// Index of the largest-magnitude tap.
    pub fn peak_index(&self) -> usize {
        self.taps
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &t)| if t.abs() > bv { (i, t.abs()) } else { (bi, bv) })
            .0
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> (f64, f64) {
        let w = 2.0 * std::f64::consts::PI * freq_hz / self.sample_rate as f64;
        self.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &t)| {
            let ph = w * n as f64;
            (re + t * ph.cos(), im - t * ph.sin())
        })
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        let (re, im) = self.response(freq_hz);
        10.0 * (re * re + im * im).log10()
    }

    /// Cascade of two paths at the same rate.
    pub fn then(&self, other: &PathFir) -> Result<PathFir> {
        if other.sample_rate != self.sample_rate {
            return Err(Error::contract("cannot cascade paths at different sample rates"));
        }
        PathFir::new(convolve(&self.taps, &other.taps), self.sample_rate)
    }

    /// Truncate or zero-pad to exactly `len` taps.
    pub fn resized(&self, len: usize) -> Result<PathFir> {
        let mut taps = self.taps.clone();
        taps.resize(len, 0.0);
        PathFir::new(taps, self.sample_rate)
    }

    pub fn scaled(&self, gain: f64) -> Result<PathFir> {
        PathFir::new(self.taps.iter().map(|t| t * gain).collect(), self.sample_rate)
    }

    /// 20·log10(‖self − truth‖ / ‖truth‖), comparing over the longer of the
    /// two lengths. `None` when the truth has zero norm.
    pub fn misalignment_db(&self, truth: &PathFir) -> Option<f64> {
        let n = self.len().max(truth.len());
        let mut diff = 0.0;
        for i in 0..n {
            let a = self.taps.get(i).copied().unwrap_or(0.0);
            let b = truth.taps.get(i).copied().unwrap_or(0.0);
            diff += (a - b) * (a - b);
        }
        let t = truth.energy();
        if t == 0.0 {
            return None;
        }
        Some(10.0 * (diff / t).log10())
    }
}
