use super::Band;

/// Nominal third-octave centre frequencies, Hz.
const NOMINAL: [f64; 22] = [
    100.0, 125.0, 160.0, 200.0, 250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0, 1600.0,
    2000.0, 2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0, 10000.0, 12500.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOctave {
    pub nominal_hz: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Third-octave bands whose nominal centres lie inside `band`, with edges
/// clipped to it. Exact centres follow the base-10 series `1000·10^(n/10)`.
pub fn third_octave_bands(band: &Band) -> Vec<ThirdOctave> {
    NOMINAL
        .iter()
        .enumerate()
        .filter(|(_, &f)| band.contains(f))
        .map(|(i, &nominal)| {
            let n = i as f64 - 10.0;
            let centre = 1000.0 * 10f64.powf(n / 10.0);
            let half = 10f64.powf(1.0 / 20.0);
            ThirdOctave {
                nominal_hz: nominal,
                f_lo: (centre / half).max(band.f_lo),
                f_hi: (centre * half).min(band.f_hi),
            }
        })
        .collect()
}
