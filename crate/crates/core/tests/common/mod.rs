#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanc_core::control::{FxLms, StepRule};
use vanc_core::dsp::{convolve, dot};
use vanc_core::signal::white_noise;

/// A single-channel control problem: white reference x, disturbance
/// d = p * x, secondary path s.
pub struct Toy {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub s: Vec<f64>,
    pub taps: usize,
}

pub fn random_toy(seed: u64, len: usize) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = rng.random_range(2..=16);
    // Redraw until the secondary path has no deep notch, so every mode of
    // the filtered reference is excited.
    let mut s: Vec<f64> = loop {
        let s_len = rng.random_range(1..=4);
        let s: Vec<f64> = (0..s_len).map(|_| rng.random_range(-1.0..1.0)).collect();
        if min_gain(&s) >= 0.3 {
            break s;
        }
    };
    if rng.random_bool(0.5) {
        s.insert(0, 0.0);
    }
    // Mostly reachable by an L-tap controller, plus an unmodelled part.
    let mut w_true: Vec<f64> = (0..taps).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = w_true.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    w_true.iter_mut().for_each(|v| *v /= norm);
    let mut p: Vec<f64> = convolve(&s, &w_true).iter().map(|v| -v).collect();
    p.resize(taps + s.len() + 2, 0.0);
    for v in p.iter_mut() {
        *v += 0.1 * rng.random_range(-1.0..1.0);
    }
    let x = white_noise(len, seed ^ 0xabcdef);
    let mut d = convolve(&p, &x);
    d.truncate(len);
    Toy { x, d, s, taps }
}

fn min_gain(s: &[f64]) -> f64 {
    (0..=64)
        .map(|k| {
            let w = std::f64::consts::PI * k as f64 / 64.0;
            let (re, im) = s.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, c)| {
                (re + c * (w * n as f64).cos(), im - c * (w * n as f64).sin())
            });
            re.hypot(im)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Closed-loop FxLMS on a toy with ŝ = s. Returns the weights averaged over
/// the final quarter of the run.
pub fn run_fxlms(toy: &Toy, rule: StepRule) -> Vec<f64> {
    let mut c = FxLms::new(toy.taps, toy.s.clone(), rule, 0.0).unwrap();
    let mut y_hist = vec![0.0; toy.s.len()];
    let n = toy.x.len();
    let mut avg = vec![0.0; toy.taps];
    let start = 3 * n / 4;
    for i in 0..n {
        let y = c.filter(toy.x[i]).unwrap();
        y_hist.rotate_right(1);
        y_hist[0] = y;
        let e = toy.d[i] + dot(&toy.s, &y_hist);
        c.adapt(e).unwrap();
        if i >= start {
            for (a, w) in avg.iter_mut().zip(c.weights()) {
                *a += w;
            }
        }
    }
    let k = (n - start) as f64;
    avg.iter().map(|a| a / k).collect()
}

pub fn misalignment_db(w: &[f64], w_opt: &[f64]) -> f64 {
    let err: f64 = w.iter().zip(w_opt).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = w_opt.iter().map(|b| b * b).sum();
    10.0 * (err / norm).log10()
}
