use crate::dsp::{dot, DelayLine};
use crate::error::{Error, Result};
use crate::scene::PathFir;
use crate::signal::Signal;

/// Coefficient norm beyond which identification is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;

const NLMS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub path: PathFir,
    /// `None` when no truth is supplied or the truth has zero norm.
    pub misalignment_db: Option<f64>,
}

/// NLMS system identification of an M-tap path from an excitation and
/// the response it produced. `mu_id` is the normalized step.
pub fn identify_secondary_path(
    excite: &Signal,
    response: &Signal,
    taps: usize,
    mu_id: f64,
    truth: Option<&PathFir>,
) -> Result<Identification> {
    if excite.len() != response.len() {
        return Err(Error::contract("excitation and response lengths differ"));
    }
    if excite.sample_rate() != response.sample_rate() {
        return Err(Error::contract("excitation and response rates differ"));
    }
    if taps == 0 {
        return Err(Error::domain("path length must be positive"));
    }
    if !(mu_id > 0.0 && mu_id < 2.0) {
        return Err(Error::domain(format!("normalized step {mu_id} outside (0, 2)")));
    }
    if excite.samples().iter().all(|&v| v == 0.0) {
        return Err(Error::Identification("excitation is identically zero".into()));
    }

    let mut s = vec![0.0; taps];
    let mut hist = DelayLine::new(taps);
    let mut energy = 0.0;
    let mut check = 0usize;
    for (&x, &d) in excite.samples().iter().zip(response.samples()) {
        let oldest = hist.recent()[taps - 1];
        hist.push(x);
        energy += x * x - oldest * oldest;
        let xs = hist.recent();
        let e = d - dot(&s, xs);
        let g = mu_id * e / (NLMS_EPS + energy.max(0.0));
        for (c, v) in s.iter_mut().zip(xs) {
            *c += g * v;
        }
        check += 1;
        if check == taps {
            check = 0;
            energy = dot(xs, xs);
            let norm = dot(&s, &s).sqrt();
            if !(norm <= DIVERGENCE_NORM) {
                return Err(Error::Identification(format!("estimate diverged (norm {norm:e})")));
            }
        }
    }
    if s.iter().any(|c| !c.is_finite()) || !(dot(&s, &s).sqrt() <= DIVERGENCE_NORM) {
        return Err(Error::Identification("estimate diverged".into()));
    }
    let path = PathFir::new(s, excite.sample_rate())?;
    let misalignment_db = truth.and_then(|t| path.misalignment_db(t));
    Ok(Identification { path, misalignment_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::convolve;
    use crate::signal::white_noise;

    fn through(path: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = convolve(path, x);
        y.truncate(x.len());
        y
    }

    #[test]
    fn three_tap_path_to_minus_forty_db() {
        let fs = 32000;
        let truth = PathFir::new(vec![0.0, 0.9, 0.1], fs).unwrap();
        let x = white_noise(2 * fs as usize, 10);
        let y = through(truth.taps(), &x);
        let id = identify_secondary_path(
            &Signal::new(x, fs).unwrap(),
            &Signal::new(y, fs).unwrap(),
            16,
            0.5,
            Some(&truth),
        )
        .unwrap();
        assert!(id.misalignment_db.unwrap() <= -40.0, "{:?}", id.misalignment_db);
    }

    #[test]
    fn silent_response_gives_zero_path() {
        let fs = 16000;
        let x = Signal::new(white_noise(4000, 1), fs).unwrap();
        let zero = Signal::zeros(4000, fs).unwrap();
        let id = identify_secondary_path(&x, &zero, 8, 0.5, None).unwrap();
        assert!(id.path.taps().iter().all(|&c| c == 0.0));
        assert_eq!(id.misalignment_db, None);
        let zero_truth = PathFir::new(vec![0.0; 8], fs).unwrap();
        let id = identify_secondary_path(&x, &zero, 8, 0.5, Some(&zero_truth)).unwrap();
        assert_eq!(id.misalignment_db, None);
    }

    #[test]
    fn zero_excitation_is_an_error() {
        let z = Signal::zeros(1000, 16000).unwrap();
        assert!(matches!(
            identify_secondary_path(&z, &z, 8, 0.5, None),
            Err(Error::Identification(_))
        ));
    }

    #[test]
    fn bad_step_is_rejected() {
        let x = Signal::new(white_noise(100, 1), 16000).unwrap();
        assert!(identify_secondary_path(&x, &x, 8, 2.5, None).is_err());
    }
}
