//! Scenario configuration, the multirate run loop and report output.

pub mod builtin;
pub mod config;
pub mod envsynth;
mod report;
mod run;

pub use builtin::{list_scenarios, BuiltinScenario, BUILTINS};
pub use config::{load_config, parse_config, ScenarioConfig};
pub use envsynth::{synthesize_env, EnvKind, FLYBY_PEAK_S};
pub use report::{emit_report, summary_rows};
pub use run::{
    channels, identify_channel, run_scenario, source_signal, BandResult, Channel, ChannelReport, FrameRecord,
    RunReport,
};
