//! Streaming building blocks shared by the scene, the sensing channel and
//! the controller: a contiguous delay line, a dot product that vectorizes,
//! and biquad sections.

/// Fixed-length history of the most recent samples, newest first.
///
/// The buffer is stored twice so that `recent()` is always one contiguous
/// slice, which keeps FIR inner loops free of index wrapping.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    len: usize,
    pos: usize,
}

impl DelayLine {
    pub fn new(len: usize) -> Self {
        let len = len.max(1);
        DelayLine {
            buf: vec![0.0; 2 * len],
            len,
            pos: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push(&mut self, x: f64) {
        self.pos = if self.pos == 0 { self.len - 1 } else { self.pos - 1 };
        self.buf[self.pos] = x;
        self.buf[self.pos + self.len] = x;
    }

    /// The last `len()` samples; index 0 is the most recent.
    pub fn recent(&self) -> &[f64] {
        &self.buf[self.pos..self.pos + self.len]
    }

    pub fn clear(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.pos = 0;
    }
}

/// Inner product over the common prefix of `a` and `b`.
///
/// Eight independent accumulators let the compiler keep the loop in SIMD
/// registers; the summation order is fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Full linear convolution.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Streaming FIR filter with its own input history.
#[derive(Debug, Clone)]
pub struct StreamingFir {
    taps: Vec<f64>,
    history: DelayLine,
}

impl StreamingFir {
    pub fn new(taps: Vec<f64>) -> Self {
        let history = DelayLine::new(taps.len());
        StreamingFir { taps, history }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Swap coefficients without clearing the input history. The new taps
    /// must not be longer than the history.
    pub fn set_taps(&mut self, taps: &[f64]) {
        if taps.len() > self.history.len() {
            let mut grown = DelayLine::new(taps.len());
            for &x in self.history.recent().iter().rev() {
                grown.push(x);
            }
            self.history = grown;
        }
        self.taps.clear();
        self.taps.extend_from_slice(taps);
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.history.push(x);
        dot(&self.taps, self.history.recent())
    }
}

/// Direct-form-I biquad, normalized so that `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Run the section over a buffer in place, starting from rest.
    pub fn filter_in_place(&self, data: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in data.iter_mut() {
            let x = *v;
            let y = self.b[0] * x + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
            x2 = x1;
            x1 = x;
            y2 = y1;
            y1 = y;
            *v = y;
        }
    }

    /// Complex response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> (f64, f64) {
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (
            self.b[0] + self.b[1] * z1.0 + self.b[2] * z2.0,
            self.b[1] * z1.1 + self.b[2] * z2.1,
        );
        let den = (1.0 + self.a[0] * z1.0 + self.a[1] * z2.0, self.a[0] * z1.1 + self.a[1] * z2.1);
        let d = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / d,
            (num.1 * den.0 - num.0 * den.1) / d,
        )
    }
}

/// Butterworth sections (bilinear, prewarped) for an even order.
pub fn butterworth(order: usize, cutoff_hz: f64, sample_rate: f64, highpass: bool) -> Vec<Biquad> {
    debug_assert!(order.is_multiple_of(2) && order > 0);
    let k = (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
    let k2 = k * k;
    (0..order / 2)
        .map(|i| {
            let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * order) as f64;
            let q_inv = 2.0 * theta.sin();
            let a0 = 1.0 + q_inv * k + k2;
            let a = [2.0 * (k2 - 1.0) / a0, (1.0 - q_inv * k + k2) / a0];
            let b = if highpass {
                [1.0 / a0, -2.0 / a0, 1.0 / a0]
            } else {
                [k2 / a0, 2.0 * k2 / a0, k2 / a0]
            };
            Biquad { b, a }
        })
        .collect()
}

/// First-order low-pass as a biquad with zero second-order terms.
pub fn lowpass_first_order(cutoff_hz: f64, sample_rate: f64) -> Biquad {
    let k = (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
    let g = k / (1.0 + k);
    Biquad {
        b: [g, g, 0.0],
        a: [(k - 1.0) / (k + 1.0), 0.0],
    }
}

/// Resonant second-order high-pass.
pub fn highpass_resonant(f0_hz: f64, q: f64, sample_rate: f64) -> Biquad {
    let w0 = 2.0 * std::f64::consts::PI * f0_hz / sample_rate;
    let alpha = w0.sin() / (2.0 * q);
    let cw = w0.cos();
    let a0 = 1.0 + alpha;
    Biquad {
        b: [(1.0 + cw) / 2.0 / a0, -(1.0 + cw) / a0, (1.0 + cw) / 2.0 / a0],
        a: [-2.0 * cw / a0, (1.0 - alpha) / a0],
    }
}

/// Resonant second-order low-pass.
pub fn lowpass_resonant(f0_hz: f64, q: f64, sample_rate: f64) -> Biquad {
    let w0 = 2.0 * std::f64::consts::PI * f0_hz / sample_rate;
    let alpha = w0.sin() / (2.0 * q);
    let cw = w0.cos();
    let a0 = 1.0 + alpha;
    Biquad {
        b: [(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0],
        a: [-2.0 * cw / a0, (1.0 - alpha) / a0],
    }
}

/// Peaking equalizer section.
pub fn peaking(f0_hz: f64, gain_db: f64, q: f64, sample_rate: f64) -> Biquad {
    let a = 10f64.powf(gain_db / 40.0);
    let w0 = 2.0 * std::f64::consts::PI * f0_hz / sample_rate;
    let alpha = w0.sin() / (2.0 * q);
    let cw = w0.cos();
    let a0 = 1.0 + alpha / a;
    Biquad {
        b: [(1.0 + alpha * a) / a0, -2.0 * cw / a0, (1.0 - alpha * a) / a0],
        a: [-2.0 * cw / a0, (1.0 - alpha / a) / a0],
    }
}

/// Impulse response of a biquad cascade, truncated to `len` taps.
pub fn cascade_impulse(sections: &[Biquad], len: usize) -> Vec<f64> {
    let mut h = vec![0.0; len];
    if len > 0 {
        h[0] = 1.0;
    }
    for s in sections {
        s.filter_in_place(&mut h);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_line_is_newest_first() {
        let mut d = DelayLine::new(3);
        for x in [1.0, 2.0, 3.0, 4.0] {
            d.push(x);
        }
        assert_eq!(d.recent(), &[4.0, 3.0, 2.0]);
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..37).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..37).map(|i| 1.0 - i as f64 * 0.1).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }

    #[test]
    fn streaming_fir_replays_taps_on_impulse() {
        let mut f = StreamingFir::new(vec![0.5, -1.0, 2.0]);
        let out: Vec<f64> = [1.0, 0.0, 0.0, 0.0].iter().map(|&x| f.process(x)).collect();
        assert_eq!(out, vec![0.5, -1.0, 2.0, 0.0]);
    }

    #[test]
    fn butterworth_half_power_at_cutoff() {
        let fs = 32000.0;
        for highpass in [false, true] {
            let s = butterworth(4, 1000.0, fs, highpass);
            let w = 2.0 * std::f64::consts::PI * 1000.0 / fs;
            let mag2: f64 = s
                .iter()
                .map(|b| {
                    let (re, im) = b.response(w);
                    re * re + im * im
                })
                .product();
            assert!((mag2 - 0.5).abs() < 1e-9, "{mag2}");
        }
    }

    #[test]
    fn convolve_lengths_and_values() {
        assert_eq!(convolve(&[1.0, 2.0], &[0.0, 1.0, 0.5]), vec![0.0, 1.0, 2.5, 1.0]);
    }
}
