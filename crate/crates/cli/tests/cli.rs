use std::fs;
use std::process::{Command, Output};

fn vanc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_shows_every_builtin() {
    let o = vanc(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fig4a", "fig4b", "fig4c", "fig3-placement", "fig7-motion", "fig7-dropout", "table1-env"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn version_prints_package_version() {
    let o = vanc(&["version"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), format!("vanc {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let o = vanc(&["run", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_and_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (file, text) in [
        ("bad.toml", "base = \"fig4a\"\nsample_rate = 0\n"),
        ("unknown.toml", "base = \"fig4a\"\ncontroller.tapz = 12\n"),
        ("broken.toml", "sample_rate = \n"),
    ] {
        let p = dir.path().join(file);
        fs::write(&p, text).unwrap();
        let o = vanc(&["run", p.to_str().unwrap(), "--ci", "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{file}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn ci_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4a");
    let o = vanc(&["run", "fig4a", "--ci", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["metrics.csv", "config.toml", "README.md", "left_cavum_concha/spectrum_on.csv", "right_cavum_concha/timeseries.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,value\nseed,1\n"));
}

#[test]
fn failed_expectation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("strict.toml");
    fs::write(&p, "base = \"fig4a\"\nexpect.min_attenuation_db = 100.0\n").unwrap();
    let o = vanc(&["run", p.to_str().unwrap(), "--ci", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expectation failed"));
}

#[test]
fn identify_reports_misalignment() {
    let dir = tempfile::tempdir().unwrap();
    let o = vanc(&["identify", "fig4a", "--ci", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("left_cavum_concha"));
    assert!(dir.path().join("right_cavum_concha_secondary_path.csv").is_file());
}

#[test]
fn synth_env_writes_a_wav() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("speech.wav");
    let o = vanc(&["synth-env", "crowd_speech", p.to_str().unwrap(), "--duration", "1", "--rate", "16000"]);
    assert!(o.status.success());
    assert!(fs::metadata(&p).unwrap().len() > 16000);
    assert_eq!(vanc(&["synth-env", "jackhammer", p.to_str().unwrap()]).status.code(), Some(2));
}
