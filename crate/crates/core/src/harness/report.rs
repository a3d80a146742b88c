//! CSV and README output of a run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::run::{ChannelReport, RunReport};
use crate::error::{Error, Result};
use crate::signal::Spectrum;

const README: &str = "# Run output

All files are UTF-8 CSV with a header row. Levels are dB re 20 uPa over the
metric band. Metrics use the metric window only; time series cover the
whole run.

## Top level

- `metrics.csv` (`metric,value`): run settings, then every channel metric
  prefixed with `<ear>_<location>.`.
- `config.toml`: the resolved configuration, including the seed.

## Per channel: `<ear>_<location>/`

- `metrics.csv` (`metric,value`)
  - `eardrum_spl_off_db`, `eardrum_spl_on_db`: band-limited overall level at
    the eardrum point without and with control.
  - `eardrum_attenuation_db`: off minus on.
  - `membrane_*`: the same at the membrane point.
  - `eardrum_attenuation_4000_6000_db`, `eardrum_attenuation_5000_6000_db`:
    attenuation within those bands, from the spectra. Negative is an
    increase.
  - `eardrum_attenuation_3oct_<f>_db`, `membrane_attenuation_3oct_<f>_db`:
    per third-octave band with nominal centre `<f>` Hz.
  - `source_gain`: calibration gain applied to the source signal.
  - `guard_tripped` (0/1), `guard_trip_time_s`.
  - `beam_on_membrane_fraction`, `max_beam_offset_m`, `beam_loss_time_s`,
    `guard_trip_delay_s` (trip time minus first beam loss).
  - `tracker_lost_frames` when tracking ran.
  - `secondary_path_misalignment_db` when the secondary path was identified.
- `spectrum_off.csv`, `spectrum_on.csv` (`freq_hz,level_db`): averaged
  eardrum spectra, Hann windows with 50 % overlap.
- `timeseries.csv` (`t_s,p_off_pa,p_on_pa`): eardrum pressure, both passes.
- `tracker.csv` (`frame_index,centroid_x_px,centroid_y_px,beam_x_m,beam_y_m,lost_flag`):
  one row per camera frame when tracking ran. Centroid cells are empty
  when the marker was not found. Beam coordinates are in the membrane
  plane relative to the membrane at rest.
- `coefficients.csv` (`index,value`): final control filter.
- `secondary_path.csv` (`index,value`): secondary-path estimate in use at
  the end of the run.
- `frame_NNNN.pgm`: leading camera frames, when requested.
";

struct Csv {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Csv {
    fn create(path: PathBuf, header: &str) -> Result<Csv> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut csv = Csv {
            path,
            out: BufWriter::new(file),
        };
        csv.line(format_args!("{header}"))?;
        Ok(csv)
    }

    fn line(&mut self, args: std::fmt::Arguments<'_>) -> Result<()> {
        self.out
            .write_fmt(args)
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_metrics(path: PathBuf, rows: &[(String, f64)]) -> Result<PathBuf> {
    let mut csv = Csv::create(path, "metric,value")?;
    for (k, v) in rows {
        csv.line(format_args!("{k},{v}"))?;
    }
    csv.finish()
}

fn write_spectrum(path: PathBuf, s: &Spectrum) -> Result<PathBuf> {
    let mut csv = Csv::create(path, "freq_hz,level_db")?;
    for (f, l) in s.freqs.iter().zip(&s.level_db) {
        csv.line(format_args!("{f},{l}"))?;
    }
    csv.finish()
}

fn write_series(path: PathBuf, values: &[f64]) -> Result<PathBuf> {
    let mut csv = Csv::create(path, "index,value")?;
    for (i, v) in values.iter().enumerate() {
        csv.line(format_args!("{i},{v}"))?;
    }
    csv.finish()
}

fn write_channel(dir: &Path, ch: &ChannelReport, report: &RunReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let out = &report.config.output;
    let mut files = vec![
        write_metrics(dir.join("metrics.csv"), &ch.metrics())?,
        write_spectrum(dir.join("spectrum_off.csv"), &ch.spectrum_off)?,
        write_spectrum(dir.join("spectrum_on.csv"), &ch.spectrum_on)?,
    ];
    if out.timeseries {
        let fs = ch.eardrum_off.sample_rate() as f64;
        let mut csv = Csv::create(dir.join("timeseries.csv"), "t_s,p_off_pa,p_on_pa")?;
        for (i, (a, b)) in ch.eardrum_off.samples().iter().zip(ch.eardrum_on.samples()).enumerate() {
            csv.line(format_args!("{},{a},{b}", i as f64 / fs))?;
        }
        files.push(csv.finish()?);
    }
    if ch.tracking {
        let mut csv = Csv::create(
            dir.join("tracker.csv"),
            "frame_index,centroid_x_px,centroid_y_px,beam_x_m,beam_y_m,lost_flag",
        )?;
        for f in &ch.frames {
            let (cx, cy) = match f.centroid_px {
                Some([x, y]) => (x.to_string(), y.to_string()),
                None => (String::new(), String::new()),
            };
            csv.line(format_args!(
                "{},{cx},{cy},{},{},{}",
                f.frame_index, f.beam[0], f.beam[1], f.lost as u8
            ))?;
        }
        files.push(csv.finish()?);
    }
    if out.coefficients && !ch.weights.is_empty() {
        files.push(write_series(dir.join("coefficients.csv"), &ch.weights)?);
        files.push(write_series(dir.join("secondary_path.csv"), &ch.s_hat)?);
    }
    for (i, img) in ch.frame_images.iter().enumerate() {
        let p = dir.join(format!("frame_{i:04}.pgm"));
        img.write_pgm(&p)?;
        files.push(p);
    }
    Ok(files)
}

/// Summary rows for the top-level metrics file.
pub fn summary_rows(report: &RunReport) -> Vec<(String, f64)> {
    let c = &report.config;
    let (a, b) = c.metric_window();
    let mut rows = vec![
        ("seed".to_string(), c.seed as f64),
        ("sample_rate_hz".to_string(), c.sample_rate as f64),
        ("duration_s".to_string(), c.duration_s),
        ("metric_window_start_s".to_string(), a),
        ("metric_window_end_s".to_string(), b),
    ];
    for ch in &report.channels {
        let label = ch.channel.label();
        rows.extend(ch.metrics().into_iter().map(|(k, v)| (format!("{label}.{k}"), v)));
    }
    rows
}

/// Write all report files under `out_dir` and return their paths.
pub fn emit_report(report: &RunReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = vec![
        write_metrics(out_dir.join("metrics.csv"), &summary_rows(report))?,
        write_text(out_dir.join("config.toml"), &report.config.to_toml())?,
        write_text(out_dir.join("README.md"), README)?,
    ];
    for ch in &report.channels {
        files.extend(write_channel(&out_dir.join(ch.channel.label()), ch, report)?);
    }
    Ok(files)
}
