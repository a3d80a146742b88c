use serde::{Deserialize, Serialize};

use crate::dsp::{dot, DelayLine};
use crate::error::{Error, Result};

/// How the adaptation step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Fixed µ.
    Raw { mu: f64 },
    /// µ = µ₀ / (ε + ‖r̂‖²), with the filtered-reference energy taken over
    /// the controller's L-sample window.
    Normalized { mu0: f64, eps: f64 },
}

impl StepRule {
    pub const DEFAULT_MU0: f64 = 0.05;
    pub const DEFAULT_EPS: f64 = 1e-12;

    pub fn normalized(mu0: f64) -> Self {
        StepRule::Normalized {
            mu0,
            eps: StepRule::DEFAULT_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    #[default]
    Normalized,
    Raw,
}

/// Single-channel filtered-x LMS controller.
///
/// Per sample, [`FxLms::filter`] takes the reference x(n), forms the filtered
/// reference r̂(n) = ŝ * x and returns y(n) = wᵀx with the current weights;
/// [`FxLms::adapt`] then applies w ← ν·w − µ·r̂·e(n).
#[derive(Debug, Clone)]
pub struct FxLms {
    w: Vec<f64>,
    s_hat: Vec<f64>,
    x_hist: DelayLine,
    r_hist: DelayLine,
    r_energy: f64,
    since_refresh: usize,
    rule: StepRule,
    retain: f64,
    frozen: bool,
    floor: Option<PowerFloor>,
    long_power: f64,
}

/// Lower bound on the normalizer of [`StepRule::Normalized`]: a fraction
/// of the long-term filtered-reference energy, tracked by a one-pole
/// average. Keeps µ from growing in pauses of a non-stationary reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFloor {
    pub ratio: f64,
    pub time_constant_samples: f64,
}

impl FxLms {
    pub const DEFAULT_TAPS: usize = 1024;

    /// `leakage` is the per-step fraction removed from every weight; 0 is
    /// the plain algorithm.
    pub fn new(taps: usize, s_hat: Vec<f64>, rule: StepRule, leakage: f64) -> Result<Self> {
        if taps == 0 || s_hat.is_empty() {
            return Err(Error::domain("controller and secondary-path lengths must be positive"));
        }
        if s_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("secondary-path estimate must be finite"));
        }
        if !(0.0..1.0).contains(&leakage) {
            return Err(Error::domain(format!("leakage {leakage} outside [0, 1)")));
        }
        match rule {
            StepRule::Raw { mu } if !(mu >= 0.0 && mu.is_finite()) => {
                return Err(Error::domain("step size must be non-negative"));
            }
            StepRule::Normalized { mu0, eps } if !(mu0 >= 0.0 && eps > 0.0 && mu0.is_finite()) => {
                return Err(Error::domain("normalized step needs mu0 >= 0 and eps > 0"));
            }
            _ => {}
        }
        let hist = taps.max(s_hat.len());
        Ok(FxLms {
            w: vec![0.0; taps],
            s_hat,
            x_hist: DelayLine::new(hist),
            r_hist: DelayLine::new(taps),
            r_energy: 0.0,
            since_refresh: 0,
            rule,
            retain: 1.0 - leakage,
            frozen: false,
            floor: None,
            long_power: 0.0,
        })
    }

    pub fn with_power_floor(mut self, floor: PowerFloor) -> Result<Self> {
        if !(floor.ratio >= 0.0 && floor.ratio.is_finite() && floor.time_constant_samples >= 1.0) {
            return Err(Error::domain("power floor needs ratio >= 0 and a time constant of at least one sample"));
        }
        self.floor = Some(floor);
        Ok(self)
    }

    pub fn taps(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn set_weights(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.w.len() {
            return Err(Error::contract("weight vector length mismatch"));
        }
        self.w.copy_from_slice(w);
        Ok(())
    }

    pub fn s_hat(&self) -> &[f64] {
        &self.s_hat
    }

    /// Replace ŝ. Its length may not exceed the one given at construction.
    pub fn set_s_hat(&mut self, s_hat: &[f64]) -> Result<()> {
        if s_hat.len() > self.x_hist.len() || s_hat.is_empty() {
            return Err(Error::contract("secondary-path estimate length changed"));
        }
        self.s_hat.clear();
        self.s_hat.extend_from_slice(s_hat);
        Ok(())
    }

    /// Most recent filtered-reference samples, newest first.
    pub fn filtered_reference(&self) -> &[f64] {
        self.r_hist.recent()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// A frozen controller outputs zero and never adapts; its histories keep
    /// running so that unfreezing resumes cleanly.
    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    /// Step size that the next `adapt` will use.
    pub fn current_mu(&self) -> f64 {
        match self.rule {
            StepRule::Raw { mu } => mu,
            StepRule::Normalized { mu0, eps } => {
                let floor = match self.floor {
                    Some(f) => f.ratio * self.r_hist.len() as f64 * self.long_power,
                    None => 0.0,
                };
                mu0 / (eps + self.r_energy.max(floor))
            }
        }
    }

    pub fn filter(&mut self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::contract("non-finite reference sample"));
        }
        self.x_hist.push(x);
        let xs = self.x_hist.recent();
        let r = dot(&self.s_hat, xs);
        let oldest = self.r_hist.recent()[self.r_hist.len() - 1];
        self.r_hist.push(r);
        self.since_refresh += 1;
        if self.since_refresh >= 4 * self.r_hist.len() {
            // Bound the drift of the running sum.
            let rs = self.r_hist.recent();
            self.r_energy = dot(rs, rs);
            self.since_refresh = 0;
        } else {
            self.r_energy += r * r - oldest * oldest;
        }
        if let Some(f) = self.floor {
            self.long_power += (r * r - self.long_power) / f.time_constant_samples;
        }
        if self.frozen {
            return Ok(0.0);
        }
        let y = dot(&self.w, xs);
        if !y.is_finite() {
            return Err(Error::contract("controller output diverged"));
        }
        Ok(y)
    }

    pub fn adapt(&mut self, e: f64) -> Result<()> {
        if !e.is_finite() {
            return Err(Error::contract("non-finite error sample"));
        }
        if self.frozen {
            return Ok(());
        }
        let g = self.current_mu() * e;
        let rs = self.r_hist.recent();
        if self.retain == 1.0 {
            for (w, r) in self.w.iter_mut().zip(rs) {
                *w -= g * r;
            }
        } else {
            let nu = self.retain;
            for (w, r) in self.w.iter_mut().zip(rs) {
                *w = nu * *w - g * r;
            }
        }
        Ok(())
    }

    /// `filter(x)` followed by `adapt(e)`; returns the output computed
    /// before the update.
    pub fn step(&mut self, x: f64, e: f64) -> Result<f64> {
        let y = self.filter(x)?;
        self.adapt(e)?;
        Ok(y)
    }

    pub fn reset(&mut self) {
        self.w.iter_mut().for_each(|v| *v = 0.0);
        self.x_hist.clear();
        self.r_hist.clear();
        self.r_energy = 0.0;
        self.long_power = 0.0;
        self.since_refresh = 0;
        self.frozen = false;
    }
}
