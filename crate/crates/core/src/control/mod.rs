//! Per-ear feedforward controller, its secondary-path estimate and the
//! divergence guard.

mod fxlms;
mod guard;
mod identify;
mod wiener;

pub use fxlms::{FxLms, PowerFloor, StepKind, StepRule};
pub use guard::{Guard, GuardAction, GuardConfig};
pub use identify::{identify_secondary_path, Identification, DIVERGENCE_NORM};
pub use wiener::{wiener_oracle, RIDGE};
