use serde::{Deserialize, Serialize};

use super::Position3;
use crate::error::{Error, Result};

/// Sinusoidal rigid head translation along a fixed axis.
///
/// The motion starts at `onset_s`; before that the head rests at the
/// origin. With `phase = 0` the trajectory is continuous at the onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadTrajectory {
    pub axis: Position3,
    /// Half the peak-to-peak excursion.
    pub amplitude_m: f64,
    pub angular_rate: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub onset_s: f64,
}

impl HeadTrajectory {
    pub fn new(axis: Position3, amplitude_m: f64, angular_rate: f64, phase: f64) -> Result<Self> {
        let t = HeadTrajectory {
            axis,
            amplitude_m,
            angular_rate,
            phase,
            onset_s: 0.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_onset(mut self, onset_s: f64) -> Self {
        self.onset_s = onset_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.amplitude_m, self.angular_rate, self.phase, self.onset_s]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !self.axis.is_finite() {
            return Err(Error::domain("head trajectory parameters must be finite"));
        }
        if self.amplitude_m < 0.0 {
            return Err(Error::domain("amplitude must be non-negative"));
        }
        if self.onset_s < 0.0 {
            return Err(Error::domain("onset must be non-negative"));
        }
        if self.axis.norm() == 0.0 {
            return Err(Error::domain("motion axis must be non-zero"));
        }
        Ok(())
    }

    pub fn max_speed(&self) -> f64 {
        self.amplitude_m * self.angular_rate.abs()
    }
}

/// Head offset at time `t`. The axis is normalized here, so callers may pass
/// any non-zero direction.
pub fn head_position(traj: &HeadTrajectory, t: f64) -> Position3 {
    let n = traj.axis.norm();
    if n == 0.0 {
        return Position3::ORIGIN;
    }
    let local = (t - traj.onset_s).max(0.0);
    let s = traj.amplitude_m * (traj.angular_rate * local + traj.phase).sin();
    traj.axis.scale(s / n)
}
