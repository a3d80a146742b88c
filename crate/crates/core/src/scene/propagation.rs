use std::f64::consts::PI;

use super::{PathFir, Position3};
use crate::error::{Error, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Source-receiver distances are clamped to at least this value.
pub const MIN_DISTANCE_M: f64 = 0.05;

/// Length of the windowed-sinc fractional-delay kernel.
pub const KERNEL_TAPS: usize = 32;

const HALF_KERNEL: f64 = (KERNEL_TAPS / 2) as f64;

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// Blackman window on [-16, 16], zero at both ends.
fn blackman(t: f64) -> f64 {
    if t.abs() >= HALF_KERNEL {
        return 0.0;
    }
    let u = PI * t / HALF_KERNEL;
    0.42 + 0.5 * u.cos() + 0.08 * (2.0 * u).cos()
}

/// Propagation delay in samples for a distance, after the clamp.
pub fn delay_samples(distance_m: f64, sample_rate: u32) -> f64 {
    distance_m.max(MIN_DISTANCE_M) / SPEED_OF_SOUND * sample_rate as f64
}

/// Point-source free-field response: delay d/c and spherical spreading 1/d.
///
/// Fractional delays use a 32-tap Blackman-windowed sinc spanning
/// `floor(D)-15 ..= floor(D)+16`, scaled so that the tap energy is exactly
/// 1/d². Integer delays collapse to a single tap of 1/d. Kernel taps that
/// would land before index 0 are dropped.
pub fn free_field_ir(src: Position3, rcv: Position3, sample_rate: u32, n_taps: usize) -> Result<PathFir> {
    if sample_rate == 0 {
        return Err(Error::domain("sample rate must be positive"));
    }
    let d = src.distance(rcv).max(MIN_DISTANCE_M);
    let delay = d / SPEED_OF_SOUND * sample_rate as f64;
    let gain = 1.0 / d;
    let base = delay.floor();
    let frac = delay - base;
    let base = base as usize;

    let mut taps = vec![0.0; n_taps];
    if frac == 0.0 {
        if base >= n_taps {
            return Err(Error::domain(format!(
                "delay of {delay} samples does not fit in {n_taps} taps"
            )));
        }
        taps[base] = gain;
        return PathFir::new(taps, sample_rate);
    }

    let last = base + KERNEL_TAPS / 2;
    if last >= n_taps {
        return Err(Error::domain(format!(
            "delay of {delay:.3} samples needs at least {} taps, got {n_taps}",
            last + 1
        )));
    }
    let first = base as isize - (KERNEL_TAPS as isize / 2 - 1);
    let mut energy = 0.0;
    for n in first.max(0)..=last as isize {
        let t = n as f64 - delay;
        let v = sinc(t) * blackman(t);
        taps[n as usize] = v;
        energy += v * v;
    }
    let scale = gain / energy.sqrt();
    for t in &mut taps {
        *t *= scale;
    }
    PathFir::new(taps, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_axis(d: f64) -> (Position3, Position3) {
        (Position3::new(0.0, d, 0.0), Position3::ORIGIN)
    }

    #[test]
    fn sixty_centimetres_at_32k() {
        let (s, r) = on_axis(0.6);
        let h = free_field_ir(s, r, 32000, 128).unwrap();
        let expected_delay: f64 = 0.6 / 343.0 * 32000.0;
        assert!((expected_delay - 55.977).abs() < 1e-3);
        assert!((h.dc_group_delay() - expected_delay).abs() < 0.05, "{}", h.dc_group_delay());
        assert!((h.energy() - 1.0 / 0.36).abs() < 1e-9);
        assert!((h.dc_gain() / (1.0 / 0.6) - 1.0).abs() < 0.04);
        assert_eq!(h.peak_index(), 56);
    }

    #[test]
    fn integer_delay_is_a_single_tap() {
        let d = 343.0 / 32000.0 * 32.0;
        let (s, r) = on_axis(d);
        let h = free_field_ir(s, r, 32000, 64).unwrap();
        let nonzero: Vec<usize> = (0..64).filter(|&i| h.taps()[i] != 0.0).collect();
        assert_eq!(nonzero, vec![32]);
        assert!((h.taps()[32] - 1.0 / d).abs() < 1e-12);
    }

    #[test]
    fn distance_is_clamped() {
        let (s, r) = on_axis(0.01);
        let h = free_field_ir(s, r, 32000, 64).unwrap();
        assert!((h.energy().sqrt() - 20.0).abs() < 1e-9);
        let (s, r) = on_axis(0.05);
        let h2 = free_field_ir(s, r, 32000, 64).unwrap();
        assert_eq!(h, h2);
    }

    #[test]
    fn too_few_taps_is_a_domain_error() {
        let (s, r) = on_axis(0.6);
        assert!(matches!(free_field_ir(s, r, 32000, 60), Err(Error::Domain(_))));
        assert!(free_field_ir(s, r, 32000, 73).is_ok());
    }

    #[test]
    fn magnitude_is_flat_in_band() {
        let (s, r) = on_axis(0.6047);
        let h = free_field_ir(s, r, 32000, 128).unwrap();
        let ref_db = 20.0 * (1.0 / 0.6047f64).log10();
        for f in [500.0, 1000.0, 2000.0, 4000.0, 6000.0] {
            assert!((h.magnitude_db(f) - ref_db).abs() < 0.35, "{f}: {}", h.magnitude_db(f));
        }
    }
}
