use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardAction {
    /// Zero the controller output and stop adapting.
    #[default]
    Freeze,
    /// Record the trip but leave the controller running.
    Monitor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardConfig {
    pub window_s: f64,
    pub trip_ratio: f64,
    /// Time ignored after start before the baseline window opens.
    pub arm_s: f64,
    pub action: GuardAction,
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig {
            window_s: 0.25,
            trip_ratio: 10.0,
            arm_s: 2.0,
            action: GuardAction::Freeze,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Arming { remaining: usize },
    Baseline,
    Monitoring,
}

/// Divergence detector on the error stream.
///
/// After `arm_s`, the mean-square error over the first full window becomes
/// the baseline. From then on the sliding-window power is compared with
/// `trip_ratio · baseline`; a trip latches until [`Guard::reset`].
#[derive(Debug, Clone)]
pub struct Guard {
    config: GuardConfig,
    window: usize,
    ring: VecDeque<f64>,
    sum: f64,
    pushes: usize,
    phase: Phase,
    baseline_power: Option<f64>,
    tripped: bool,
    samples: u64,
    trip_sample: Option<u64>,
}

impl Guard {
    pub fn new(config: GuardConfig, sample_rate: u32) -> Result<Self> {
        if !(config.trip_ratio > 1.0) {
            return Err(Error::domain("trip ratio must exceed 1"));
        }
        if !(config.window_s > 0.0) || !(config.arm_s >= 0.0) {
            return Err(Error::domain("guard window must be positive and arm time non-negative"));
        }
        let fs = sample_rate as f64;
        let window = ((config.window_s * fs).round() as usize).max(1);
        Ok(Guard {
            config,
            window,
            ring: VecDeque::with_capacity(window),
            sum: 0.0,
            pushes: 0,
            phase: Phase::Arming {
                remaining: (config.arm_s * fs).round() as usize,
            },
            baseline_power: None,
            tripped: false,
            samples: 0,
            trip_sample: None,
        })
    }

    pub fn config(&self) -> &GuardConfig {
        &self.config
    }

    pub fn tripped(&self) -> bool {
        self.tripped
    }

    pub fn baseline_power(&self) -> Option<f64> {
        self.baseline_power
    }

    /// Sample index (counted from construction) at which the guard tripped.
    pub fn trip_sample(&self) -> Option<u64> {
        self.trip_sample
    }

    /// Mean-square error over the current window.
    pub fn window_power(&self) -> f64 {
        if self.ring.is_empty() {
            0.0
        } else {
            self.sum.max(0.0) / self.ring.len() as f64
        }
    }

    fn push(&mut self, e2: f64) {
        if self.ring.len() == self.window {
            let old = self.ring.pop_front().unwrap_or(0.0);
            self.sum -= old;
        }
        self.ring.push_back(e2);
        self.sum += e2;
        self.pushes += 1;
        if self.pushes >= 8 * self.window {
            self.sum = self.ring.iter().sum();
            self.pushes = 0;
        }
    }

    pub fn guard_update(&mut self, e: f64) -> bool {
        let idx = self.samples;
        self.samples += 1;
        if let Phase::Arming { remaining } = &mut self.phase {
            if *remaining > 0 {
                *remaining -= 1;
                return self.tripped;
            }
            self.phase = Phase::Baseline;
        }
        self.push(e * e);
        match self.phase {
            Phase::Baseline if self.ring.len() == self.window => {
                self.baseline_power = Some(self.window_power());
                self.phase = Phase::Monitoring;
            }
            Phase::Monitoring if !self.tripped => {
                let base = self.baseline_power.unwrap_or(0.0);
                if self.window_power() > self.config.trip_ratio * base {
                    self.tripped = true;
                    self.trip_sample = Some(idx);
                }
            }
            _ => {}
        }
        self.tripped
    }

    /// Clear the trip and measure a fresh baseline from the next window.
    pub fn reset(&mut self) {
        self.tripped = false;
        self.trip_sample = None;
        self.baseline_power = None;
        self.ring.clear();
        self.sum = 0.0;
        self.pushes = 0;
        self.phase = Phase::Baseline;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::white_noise;

    fn quick(window_s: f64, arm_s: f64) -> Guard {
        Guard::new(
            GuardConfig {
                window_s,
                trip_ratio: 10.0,
                arm_s,
                action: GuardAction::Freeze,
            },
            1000,
        )
        .unwrap()
    }

    #[test]
    fn steady_power_never_trips() {
        let mut g = quick(0.1, 0.5);
        for _ in 0..10_000 {
            assert!(!g.guard_update(0.3));
        }
        assert!((g.baseline_power().unwrap() - 0.09).abs() < 1e-12);
    }

    #[test]
    fn hundredfold_step_trips_within_a_window() {
        let mut g = quick(0.1, 0.0);
        let noise = white_noise(5000, 1);
        for &v in &noise[..1000] {
            assert!(!g.guard_update(v));
        }
        let mut tripped_after = None;
        for (i, &v) in noise[1000..].iter().enumerate() {
            if g.guard_update(10.0 * v) {
                tripped_after = Some(i);
                break;
            }
        }
        let n = tripped_after.expect("guard should trip");
        assert!(n < 100, "{n}");
    }

    #[test]
    fn trip_latches_until_reset() {
        let mut g = quick(0.01, 0.0);
        for _ in 0..10 {
            g.guard_update(1.0);
        }
        assert!(g.guard_update(100.0));
        for _ in 0..100 {
            assert!(g.guard_update(1.0));
        }
        g.reset();
        assert!(!g.tripped());
        assert_eq!(g.baseline_power(), None);
        for _ in 0..10 {
            assert!(!g.guard_update(1.0));
        }
        assert_eq!(g.baseline_power(), Some(1.0));
    }

    #[test]
    fn arming_ignores_early_transients() {
        let mut g = quick(0.01, 0.1);
        for _ in 0..100 {
            assert!(!g.guard_update(1e6));
        }
        assert_eq!(g.baseline_power(), None);
        for _ in 0..10 {
            g.guard_update(1.0);
        }
        assert_eq!(g.baseline_power(), Some(1.0));
    }

    #[test]
    fn rejects_ratio_at_most_one() {
        let cfg = GuardConfig {
            trip_ratio: 1.0,
            ..GuardConfig::default()
        };
        assert!(Guard::new(cfg, 1000).is_err());
    }
}
