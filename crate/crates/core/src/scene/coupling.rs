//! Membrane-point to eardrum observation filters, one per pick-up location.
//!
//! Every filter has unit DC gain. The cavum concha sits at the ear-canal
//! entrance and is transparent. Tragus and anterior notch follow the canal
//! up to about 4 kHz and then fall away at 6 dB/octave. The lobule is the
//! furthest point and behaves as a resonant flap: flat at low frequencies,
//! a lift and a quarter-cycle lag at 5 kHz, falling off above.

use super::{MembraneLocation, PathFir};
use crate::dsp::{cascade_impulse, lowpass_first_order, lowpass_resonant};
use crate::error::Result;

/// Filter length at 32 kHz; scaled with the sample rate.
const TAPS_AT_32K: usize = 64;

pub const TRAGUS_CORNER_HZ: f64 = 4000.0;
pub const LOBULE_RESONANCE_HZ: f64 = 5000.0;
pub const LOBULE_Q: f64 = 1.5;

fn taps_for(sample_rate: u32) -> usize {
    (TAPS_AT_32K * sample_rate as usize).div_ceil(32000).max(8)
}

fn unit_dc(mut taps: Vec<f64>) -> Vec<f64> {
    let g: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= g);
    taps
}

pub fn coupling_filter(location: MembraneLocation, sample_rate: u32) -> Result<PathFir> {
    let fs = sample_rate as f64;
    let n = taps_for(sample_rate);
    let taps = match location {
        MembraneLocation::CavumConcha => vec![1.0],
        MembraneLocation::Tragus | MembraneLocation::AnteriorNotch => {
            unit_dc(cascade_impulse(&[lowpass_first_order(TRAGUS_CORNER_HZ, fs)], n))
        }
        MembraneLocation::Lobule => unit_dc(cascade_impulse(
            &[lowpass_resonant(LOBULE_RESONANCE_HZ, LOBULE_Q, fs)],
            n,
        )),
    };
    PathFir::new(taps, sample_rate)
}

/// 20·log10|1 − C(f)|: the eardrum residual, relative to the uncontrolled
/// level, left behind when the membrane signal is cancelled perfectly.
pub fn mismatch_db(coupling: &PathFir, freq_hz: f64) -> f64 {
    let (re, im) = coupling.response(freq_hz);
    10.0 * ((1.0 - re).powi(2) + im * im).log10()
}
