//! Built-in scenarios, stored as config documents.

use super::config::{parse_config, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BuiltinScenario {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const BUILTINS: &[BuiltinScenario] = &[
    BuiltinScenario {
        name: "fig4a",
        description: "one grey-noise source 0.6 m behind, both ears, stationary head",
        toml: r#"
name = "fig4a"
description = "one grey-noise source 0.6 m behind, both ears, stationary head"
ears = ["left", "right"]
source.target_spl_db = { left = 78.1, right = 77.3 }
geometry.sources = [[0.0, -0.6, 0.0]]
expect.min_attenuation_db = 10.0
"#,
    },
    BuiltinScenario {
        name: "fig4b",
        description: "two coherent sources: 0.6 m behind and 0.8 m left-rear",
        toml: r#"
name = "fig4b"
description = "two coherent sources: 0.6 m behind and 0.8 m left-rear"
ears = ["left", "right"]
source.target_spl_db = { left = 80.2, right = 77.9 }
geometry.sources = [[0.0, -0.6, 0.0], [-0.565685, -0.565685, 0.0]]
expect.min_attenuation_db = 10.0
"#,
    },
    BuiltinScenario {
        name: "fig4c",
        description: "four coherent sources around the head",
        toml: r#"
name = "fig4c"
description = "four coherent sources around the head"
ears = ["left", "right"]
source.target_spl_db = { left = 80.4, right = 80.1 }
geometry.sources = [
    [0.0, -0.6, 0.0],
    [-0.565685, -0.565685, 0.0],
    [0.565685, -0.565685, 0.0],
    [-1.0, 0.0, 0.0],
]
expect.min_attenuation_db = 10.0
"#,
    },
    BuiltinScenario {
        name: "fig3-placement",
        description: "fig4a geometry, left ear, membrane at each of the four outer-ear locations",
        toml: r#"
name = "fig3-placement"
description = "fig4a geometry, left ear, membrane at each of the four outer-ear locations"
ears = ["left"]
source.target_spl_db = 77.7
geometry.sources = [[0.0, -0.6, 0.0]]
membrane.locations = ["anterior_notch", "tragus", "cavum_concha", "lobule"]
"#,
    },
    BuiltinScenario {
        name: "fig7-motion",
        description: "fig4a geometry with the head moving forward and back, beam tracking on",
        toml: r#"
name = "fig7-motion"
description = "fig4a geometry with the head moving forward and back, beam tracking on"
ears = ["left"]
source.target_spl_db = 81.1
geometry.sources = [[0.0, -0.6, 0.0]]
head = { enabled = true, axis = [0.0, 1.0, 0.0], amplitude_m = 0.04, angular_rate = 1.0, onset_s = 3.0 }
tracking.enabled = true
expect = { min_attenuation_db = 10.0, beam_on_membrane = true }
"#,
    },
    BuiltinScenario {
        name: "fig7-dropout",
        description: "fig7-motion with tracking off: the beam leaves the membrane and control fails",
        toml: r#"
name = "fig7-dropout"
description = "fig7-motion with tracking off: the beam leaves the membrane and control fails"
ears = ["left"]
source.target_spl_db = 81.1
geometry.sources = [[0.0, -0.6, 0.0]]
head = { enabled = true, axis = [0.0, 1.0, 0.0], amplitude_m = 0.04, angular_rate = 1.0, onset_s = 3.0 }
tracking.enabled = false
guard.action = "monitor"
expect = { guard_trip = true, max_trip_delay_s = 2.0 }
"#,
    },
    BuiltinScenario {
        name: "table1-env",
        description: "aircraft interior noise from 1.2 m behind, right ear",
        toml: r#"
name = "table1-env"
description = "aircraft interior noise from 1.2 m behind, right ear"
ears = ["right"]
source = { kind = "env", env = "aircraft_interior", target_spl_db = 74.7 }
geometry.sources = [[0.0, -1.2, 0.0]]
guard.enabled = false
expect.min_attenuation_db = 10.0
"#,
    },
    BuiltinScenario {
        name: "table1-flyby",
        description: "aircraft flyby from 1.2 m behind, right ear, metrics over 3-8 s",
        toml: r#"
name = "table1-flyby"
description = "aircraft flyby from 1.2 m behind, right ear, metrics over 3-8 s"
ears = ["right"]
source = { kind = "env", env = "aircraft_flyby", target_spl_db = 82.1 }
geometry.sources = [[0.0, -1.2, 0.0]]
guard.enabled = false
metrics.window = [3.0, 8.0]
expect.min_attenuation_db = 10.0
"#,
    },
    BuiltinScenario {
        name: "table1-speech",
        description: "crowd speech from 1.2 m behind, right ear",
        toml: r#"
name = "table1-speech"
description = "crowd speech from 1.2 m behind, right ear"
ears = ["right"]
source = { kind = "env", env = "crowd_speech", target_spl_db = 75.5 }
geometry.sources = [[0.0, -1.2, 0.0]]
guard.enabled = false
expect.min_attenuation_db = 10.0
"#,
    },
];

pub fn find(name: &str) -> Option<&'static BuiltinScenario> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Names and descriptions in table order.
pub fn list_scenarios() -> Vec<(&'static str, &'static str)> {
    BUILTINS.iter().map(|b| (b.name, b.description)).collect()
}

pub fn config(name: &str) -> Result<ScenarioConfig> {
    let entry = find(name).ok_or_else(|| Error::config(format!("unknown scenario '{name}'")))?;
    parse_config(entry.toml)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::MembraneLocation;

    #[test]
    fn table_is_complete_and_parses() {
        let names: Vec<_> = list_scenarios().into_iter().map(|(n, _)| n).collect();
        for want in ["fig4a", "fig4b", "fig4c", "fig3-placement", "fig7-motion", "fig7-dropout", "table1-env"] {
            assert!(names.contains(&want), "{want}");
        }
        for b in BUILTINS {
            let c = config(b.name).unwrap();
            assert_eq!(c.name, b.name);
            assert_eq!(c.description, b.description);
        }
    }

    #[test]
    fn placement_sweeps_all_locations() {
        let c = config("fig3-placement").unwrap();
        assert_eq!(c.membrane.locations, MembraneLocation::ALL.to_vec());
    }

    #[test]
    fn fig4c_sources_are_at_declared_distances() {
        let c = config("fig4c").unwrap();
        let d: Vec<f64> = c.geometry.sources.iter().map(|p| p.norm()).collect();
        for (got, want) in d.iter().zip([0.6, 0.8, 0.8, 1.0]) {
            assert!((got - want).abs() < 1e-5);
        }
    }
}
