//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any
//! failure.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use vanc_core::control::{identify_secondary_path, wiener_oracle, FxLms, StepRule};
use vanc_core::harness::{
    builtin, emit_report, load_config, run_scenario, synthesize_env, EnvKind, RunReport, ScenarioConfig,
};
use vanc_core::scene::{MembraneLocation, PathFir};
use vanc_core::signal::{attenuation, white_noise, write_wav_f32, Signal};
use vanc_core::tracking::{binarize, calibrate_beta, centroid, render_frame, to_world, Camera, FrameImage};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(name: &str, ci: bool) -> RunReport {
    let mut cfg = builtin::config(name).unwrap();
    if ci {
        cfg.apply_ci_profile();
    }
    run_scenario(&cfg).unwrap()
}

fn wiener() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..24u64 {
        let toy = common::random_toy(seed, 200_000);
        let w = common::run_fxlms(&toy, StepRule::normalized(0.01));
        let x = Signal::new(toy.x.clone(), 32000).unwrap();
        let d = Signal::new(toy.d.clone(), 32000).unwrap();
        let s = PathFir::new(toy.s.clone(), 32000).unwrap();
        let w_opt = wiener_oracle(&x, &d, &s, toy.taps).unwrap();
        worst = worst.max(common::misalignment_db(&w, &w_opt));
    }
    check(worst <= -30.0, format!("24 toys, worst misalignment {worst:.1} dB"))
}

fn gradient() -> Outcome {
    let mu = 0.01;
    let s = vec![0.0, 0.8, -0.3];
    let mut c = FxLms::new(4, s, StepRule::Raw { mu }, 0.0).unwrap();
    c.set_weights(&[0.3, -0.2, 0.1, 0.05]).unwrap();
    let x = white_noise(64, 3);
    for &v in &x {
        c.filter(v).unwrap();
    }
    let r = c.filtered_reference().to_vec();
    let w0 = c.weights().to_vec();
    let d = 0.7;
    let e_of = |w: &[f64]| d + w.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let e = e_of(&w0);
    c.adapt(e).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let mut wp = w0.clone();
        let mut wm = w0.clone();
        wp[i] += h;
        wm[i] -= h;
        let grad = (e_of(&wp).powi(2) - e_of(&wm).powi(2)) / (2.0 * h);
        let expect = -(mu / 2.0) * grad;
        let got = c.weights()[i] - w0[i];
        worst = worst.max((got - expect).abs() / expect.abs());
    }
    check(worst <= 1e-6, format!("4 taps, worst relative error {worst:.1e}"))
}

fn fig4a() -> Outcome {
    let t = Instant::now();
    let report = run("fig4a", false);
    let desk = t.elapsed().as_secs_f64();
    let t = Instant::now();
    run("fig4a", true);
    let ci = t.elapsed().as_secs_f64();
    let mut min_m = f64::INFINITY;
    let mut min_e = f64::INFINITY;
    for ch in &report.channels {
        for b in &ch.bands {
            min_m = min_m.min(b.membrane_attenuation_db);
            min_e = min_e.min(b.eardrum_attenuation_db);
        }
    }
    check(
        min_m >= 15.0 && min_e >= 10.0 && desk < 120.0 && ci < 20.0,
        format!("min third-octave membrane {min_m:.1} dB, eardrum {min_e:.1} dB; {desk:.1} s desk, {ci:.1} s ci"),
    )
}

fn fig4c() -> Outcome {
    let report = run("fig4c", false);
    let worst = report
        .channels
        .iter()
        .map(|c| c.eardrum_attenuation_db)
        .fold(f64::INFINITY, f64::min);
    check(worst >= 10.0, format!("worst ear {worst:.1} dB"))
}

fn fig3() -> Outcome {
    let report = run("fig3-placement", false);
    let by: BTreeMap<String, (f64, f64)> = report
        .channels
        .iter()
        .map(|c| {
            let hi = c.band_attenuation_db(4000.0, 6000.0);
            (c.channel.location.to_string(), (hi, c.band_attenuation_db(5000.0, 6000.0)))
        })
        .collect();
    let get = |l: MembraneLocation| by[&l.to_string()];
    let concha = get(MembraneLocation::CavumConcha).0;
    let tragus = get(MembraneLocation::Tragus).0;
    let notch = get(MembraneLocation::AnteriorNotch).0;
    let (lobule, lobule_top) = get(MembraneLocation::Lobule);
    let ordered = concha >= tragus && concha >= notch && tragus >= lobule && notch >= lobule;
    check(
        ordered && -lobule_top >= 3.0,
        format!(
            "4-6 kHz: concha {concha:.1}, tragus {tragus:.1}, notch {notch:.1}, lobule {lobule:.1} dB; \
             lobule 5-6 kHz increase {:.1} dB",
            -lobule_top
        ),
    )
}

fn table1() -> Outcome {
    let pairs = [(74.7, 59.6, "15.1"), (82.1, 61.6, "20.5"), (75.5, 59.8, "15.7")];
    for (off, on, want) in pairs {
        let got = format!("{:.1}", attenuation(off, on));
        if got != want {
            return Err(format!("fixture {off} -> {on} gave {got}, expected {want}"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (EnvKind::AircraftInterior, 74.7, ""),
        (EnvKind::AircraftFlyby, 82.1, "metrics.window = [3.0, 8.0]\n"),
        (EnvKind::CrowdSpeech, 75.5, ""),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, level, extra) in cases {
        let wav = dir.path().join(format!("{}.wav", kind.name()));
        write_wav_f32(&wav, &synthesize_env(kind, 15.0, 48000, 7).unwrap()).unwrap();
        let toml = format!(
            "name = \"{name}\"\nears = [\"right\"]\ngeometry.sources = [[0.0, -1.2, 0.0]]\n\
             guard.enabled = false\n{extra}\n[source]\nkind = \"wav\"\npath = \"{name}.wav\"\ntarget_spl_db = {level}\n",
            name = kind.name()
        );
        let path = dir.path().join(format!("{}.toml", kind.name()));
        fs::write(&path, toml).unwrap();
        let report = run_scenario(&load_config(&path).unwrap()).unwrap();
        let ch = &report.channels[0];
        let calibrated = (ch.eardrum_spl_off_db - level).abs() <= 0.1;
        ok &= calibrated && ch.eardrum_attenuation_db >= 10.0;
        parts.push(format!(
            "{} {:.1} -> {:.1} dB",
            kind.name(),
            ch.eardrum_spl_off_db,
            ch.eardrum_spl_on_db
        ));
    }
    check(ok, format!("fixtures 15.1/20.5/15.7 exact; {}", parts.join(", ")))
}

fn dropout() -> Outcome {
    let report = run("fig7-dropout", false);
    let ch = &report.channels[0];
    let delay = ch.guard_trip_delay_s();
    check(
        ch.eardrum_spl_on_db >= ch.eardrum_spl_off_db && matches!(delay, Some(d) if (0.0..=2.0).contains(&d)),
        format!(
            "{:.1} -> {:.1} dB, beam lost at {:?} s, trip delay {:?} s",
            ch.eardrum_spl_off_db, ch.eardrum_spl_on_db, ch.beam_loss_s, delay
        ),
    )
}

fn motion() -> Outcome {
    let report = run("fig7-motion", false);
    let ch = &report.channels[0];
    let max = ch.max_beam_offset_m();
    check(
        ch.on_membrane_fraction() == 1.0 && max <= 4.6e-3 && ch.eardrum_attenuation_db >= 10.0,
        format!(
            "{} frames, max beam offset {:.2} mm, {:.1} dB",
            ch.frames.len(),
            max * 1e3,
            ch.eardrum_attenuation_db
        ),
    )
}

fn tracker() -> Outcome {
    // Inclusive threshold on every level.
    let pixels: Vec<u8> = (0..=255u8).collect();
    let frame = FrameImage::new(16, 16, pixels.clone()).unwrap();
    for lambda in 1..=255u8 {
        let b = binarize(&frame, lambda).unwrap();
        for (i, &p) in pixels.iter().enumerate() {
            if b.get(i % 16, i / 16) != (p >= lambda) {
                return Err(format!("threshold {lambda} wrong at level {p}"));
            }
        }
    }
    let cam = Camera::new(0.3, [0.0, 0.0]);
    let beta = cam.beta();
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let r_px = 5.0 + (k % 6) as f64 * 3.0;
        let px = [40.0 + 3.37 * k as f64, 60.0 + 2.71 * k as f64];
        let f = render_frame(cam.unproject(px), r_px * beta, &cam).unwrap();
        let c = centroid(&binarize(&f, 128).unwrap()).unwrap();
        worst = worst.max((c[0] - px[0]).abs()).max((c[1] - px[1]).abs());
    }
    let v = to_world([12.5, -3.25], beta);
    let exact = v == [beta * 12.5, beta * -3.25];
    let shift = 0.01;
    let a = centroid(&binarize(&render_frame([0.0, 0.0], 0.004, &cam).unwrap(), 128).unwrap()).unwrap();
    let b = centroid(&binarize(&render_frame([shift, 0.0], 0.004, &cam).unwrap(), 128).unwrap()).unwrap();
    let cal = calibrate_beta(0.3, shift, b[0] - a[0]).unwrap();
    let rel = (cal.beta - beta).abs() / beta;
    check(
        worst <= 0.5 && exact && rel <= 0.02,
        format!("centroid error {worst:.3} px, scaling exact {exact}, beta error {:.3} %", rel * 100.0),
    )
}

fn identification() -> Outcome {
    let fs = 16000;
    let truth = PathFir::new(vec![0.6, -0.3, 0.15], fs).unwrap();
    let x = white_noise(2 * fs as usize, 11);
    let mut y = vanc_core::dsp::convolve(truth.taps(), &x);
    y.truncate(x.len());
    let id = identify_secondary_path(
        &Signal::new(x, fs).unwrap(),
        &Signal::new(y, fs).unwrap(),
        3,
        0.5,
        Some(&truth),
    )
    .unwrap();
    let mis = id.misalignment_db.unwrap();
    check(mis <= -40.0, format!("misalignment {mis:.1} dB"))
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let mut motion = builtin::config("fig7-motion").unwrap();
    motion.apply_ci_profile();
    motion.output.pgm_frames = 5;
    let mut fig4a = builtin::config("fig4a").unwrap();
    fig4a.apply_ci_profile();
    let mut count = 0;
    for cfg in [fig4a, motion] {
        let emit = |cfg: &ScenarioConfig| {
            let dir = tempfile::tempdir().unwrap();
            emit_report(&run_scenario(cfg).unwrap(), dir.path()).unwrap();
            files(dir.path())
        };
        let a = emit(&cfg);
        let b = emit(&cfg);
        if a != b {
            return Err(format!("{} outputs differ between runs", cfg.name));
        }
        count += a.len();
    }
    Ok(format!("{count} files identical across reruns"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("fxlms converges to the wiener solution", wiener),
        ("update is the scaled finite-difference gradient", gradient),
        ("fig4a third-octave attenuation and runtime", fig4a),
        ("fig4c four sources", fig4c),
        ("fig3 placement ordering", fig3),
        ("table1 environmental recordings", table1),
        ("fig7 dropout diverges and trips the guard", dropout),
        ("fig7 tracked motion", motion),
        ("tracker units", tracker),
        ("secondary-path identification", identification),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
