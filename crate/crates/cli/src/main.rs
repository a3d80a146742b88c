use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use vanc_core::harness::{
    builtin, channels, emit_report, identify_channel, list_scenarios, load_config, run_scenario, synthesize_env,
    EnvKind, ScenarioConfig,
};
use vanc_core::signal::write_wav_f32;
use vanc_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ASSERT: u8 = 3;

#[derive(Parser)]
#[command(name = "vanc", about = "Virtual ANC headphone simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a built-in name.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Output directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reduced profile: 16 kHz, 256 taps, 4 s.
        #[arg(long)]
        ci: bool,
    },
    /// List the built-in scenarios.
    List,
    /// Identify the secondary path of every channel and report misalignment.
    Identify {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write each estimate as <out>/<ear>_<location>_secondary_path.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ci: bool,
    },
    /// Print the version.
    Version,
    /// Write a synthetic environmental recording as a WAV file.
    SynthEnv {
        /// aircraft_interior, aircraft_flyby or crowd_speech.
        kind: String,
        out: PathBuf,
        #[arg(long, default_value_t = 15.0)]
        duration: f64,
        #[arg(long, default_value_t = 48000)]
        rate: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
    Assert(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Format(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn resolve(scenario: &str, seed: Option<u64>, duration: Option<f64>, ci: bool) -> Result<ScenarioConfig, Failure> {
    let mut cfg = if Path::new(scenario).is_file() {
        load_config(scenario)?
    } else if let Some(b) = builtin::find(scenario) {
        builtin::config(b.name)?
    } else {
        return Err(Failure::Config(format!(
            "'{scenario}' is neither a config file nor a built-in scenario (see `vanc list`)"
        )));
    };
    if ci {
        cfg.apply_ci_profile();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(scenario: &str, seed: Option<u64>, duration: Option<f64>, out: Option<PathBuf>, ci: bool) -> Result<(), Failure> {
    let cfg = resolve(scenario, seed, duration, ci)?;
    let out = out.unwrap_or_else(|| Path::new("runs").join(&cfg.name));
    let (a, b) = cfg.metric_window();
    println!(
        "{}: {} Hz, {} s, seed {}, metrics over [{a}, {b}] s",
        cfg.name, cfg.sample_rate, cfg.duration_s, cfg.seed
    );
    let report = run_scenario(&cfg)?;
    emit_report(&report, &out)?;
    for ch in &report.channels {
        println!(
            "  {:<24} eardrum {:6.1} -> {:6.1} dB ({:+.1} dB)  membrane {:+.1} dB{}",
            ch.channel.label(),
            ch.eardrum_spl_off_db,
            ch.eardrum_spl_on_db,
            -ch.eardrum_attenuation_db,
            -ch.membrane_attenuation_db,
            match ch.guard_trip_s {
                Some(t) => format!("  guard tripped at {t:.3} s"),
                None => String::new(),
            }
        );
    }
    println!("wrote {}", out.display());
    let fails = report.check_expectations();
    if fails.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assert(fails))
    }
}

fn identify(scenario: &str, seed: Option<u64>, out: Option<PathBuf>, ci: bool) -> Result<(), Failure> {
    let cfg = resolve(scenario, seed, None, ci)?;
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }
    for ch in channels(&cfg) {
        let (path, mis) = identify_channel(&cfg, ch)?;
        match mis {
            Some(m) => println!("{:<24} misalignment {m:.1} dB", ch.label()),
            None => println!("{:<24} misalignment n/a", ch.label()),
        }
        if let Some(dir) = &out {
            let p = dir.join(format!("{}_secondary_path.csv", ch.label()));
            let mut text = String::from("index,value\n");
            for (i, v) in path.iter().enumerate() {
                text.push_str(&format!("{i},{v}\n"));
            }
            std::fs::write(&p, text).with_context(|| p.display().to_string())?;
        }
    }
    Ok(())
}

fn synth_env(kind: &str, out: &Path, duration: f64, rate: u32, seed: u64) -> Result<(), Failure> {
    let kind = EnvKind::ALL
        .into_iter()
        .find(|k| k.name() == kind)
        .ok_or_else(|| Failure::Config(format!("unknown environment kind '{kind}'")))?;
    let s = synthesize_env(kind, duration, rate, seed)?;
    write_wav_f32(out, &s)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            duration,
            out,
            ci,
        } => run(&scenario, seed, duration, out, ci),
        Command::List => {
            for (name, description) in list_scenarios() {
                println!("{name:<16} {description}");
            }
            Ok(())
        }
        Command::Identify { scenario, seed, out, ci } => identify(&scenario, seed, out, ci),
        Command::Version => {
            println!("vanc {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::SynthEnv {
            kind,
            out,
            duration,
            rate,
            seed,
        } => synth_env(&kind, &out, duration, rate, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Assert(fails)) => {
            for f in fails {
                eprintln!("expectation failed: {f}");
            }
            ExitCode::from(EXIT_ASSERT)
        }
    }
}
