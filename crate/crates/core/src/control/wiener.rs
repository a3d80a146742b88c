use nalgebra::{DMatrix, DVector};

use crate::dsp::convolve;
use crate::error::{Error, Result};
use crate::scene::PathFir;
use crate::signal::Signal;

/// Ridge added to the normal matrix, relative to its mean diagonal.
pub const RIDGE: f64 = 1e-10;

/// Batch least-squares controller: the L-tap `w` minimizing
/// ‖d + s * (w * x)‖², found from the normal equations with a small ridge.
pub fn wiener_oracle(x: &Signal, d: &Signal, s: &PathFir, taps: usize) -> Result<Vec<f64>> {
    if x.len() != d.len() {
        return Err(Error::contract("reference and disturbance lengths differ"));
    }
    if taps == 0 {
        return Err(Error::domain("controller length must be positive"));
    }
    if x.len() <= taps {
        return Err(Error::domain("signals must be longer than the controller"));
    }
    let n = x.len();
    let mut r = convolve(s.taps(), x.samples());
    r.truncate(n);
    let d = d.samples();

    // R[i][j] = Σ r(k-i) r(k-j); b[i] = Σ r(k-i) d(k).
    let mut gram = DMatrix::<f64>::zeros(taps, taps);
    let mut rhs = DVector::<f64>::zeros(taps);
    for i in 0..taps {
        for j in i..taps {
            let v: f64 = (j..n).map(|k| r[k - i] * r[k - j]).sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        rhs[i] = -(i..n).map(|k| r[k - i] * d[k]).sum::<f64>();
    }
    let ridge = RIDGE * gram.trace() / taps as f64;
    let ridge = if ridge > 0.0 { ridge } else { RIDGE };
    for i in 0..taps {
        gram[(i, i)] += ridge;
    }
    let w = match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::domain("normal equations are singular"))?,
    };
    Ok(w.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::white_noise;

    #[test]
    fn zero_target_gives_zero_filter() {
        let x = Signal::new(white_noise(2000, 1), 32000).unwrap();
        let d = Signal::zeros(2000, 32000).unwrap();
        let s = PathFir::new(vec![0.0, 1.0], 32000).unwrap();
        let w = wiener_oracle(&x, &d, &s, 4).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scalar_toy_solution() {
        let xv = white_noise(5000, 2);
        let dv: Vec<f64> = xv.iter().map(|v| -0.5 * v).collect();
        let x = Signal::new(xv, 32000).unwrap();
        let d = Signal::new(dv, 32000).unwrap();
        let s = PathFir::new(vec![1.0], 32000).unwrap();
        let w = wiener_oracle(&x, &d, &s, 1).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn recovers_an_exact_eight_tap_solution() {
        let xv = white_noise(4000, 3);
        let truth: Vec<f64> = white_noise(8, 4).iter().map(|v| 0.3 * v).collect();
        let s = PathFir::new(vec![0.0, 0.8, -0.3, 0.1], 32000).unwrap();
        let mut sw = convolve(s.taps(), &convolve(&truth, &xv));
        sw.truncate(xv.len());
        let dv: Vec<f64> = sw.iter().map(|v| -v).collect();
        let x = Signal::new(xv.clone(), 32000).unwrap();
        let d = Signal::new(dv.clone(), 32000).unwrap();
        let w = wiener_oracle(&x, &d, &s, 8).unwrap();
        let mut y = convolve(s.taps(), &convolve(&w, &xv));
        y.truncate(xv.len());
        let resid: f64 = dv.iter().zip(&y).map(|(a, b)| (a + b).powi(2)).sum();
        let primary: f64 = dv.iter().map(|a| a * a).sum();
        assert!(10.0 * (resid / primary).log10() <= -40.0);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let x = Signal::zeros(100, 32000).unwrap();
        let d = Signal::zeros(101, 32000).unwrap();
        let s = PathFir::new(vec![1.0], 32000).unwrap();
        assert!(matches!(wiener_oracle(&x, &d, &s, 4), Err(Error::Contract(_))));
        assert!(wiener_oracle(&x, &Signal::zeros(100, 32000).unwrap(), &s, 200).is_err());
    }
}
