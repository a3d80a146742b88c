//! Simulation core for a virtual active-noise-control headphone: a
//! headrest ANC system whose error signal is the velocity of a small
//! membrane worn on the ear, read remotely by a laser vibrometer whose beam
//! is kept on the membrane by a camera tracker.

pub mod control;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod scene;
pub mod sensing;
pub mod signal;
pub mod tracking;

pub use error::{Error, Result};
