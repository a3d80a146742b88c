use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Signal;
use crate::error::{Error, Result};

/// Read a mono or stereo WAV file (16-bit PCM or 32-bit float) into a
/// dimensionless stream in `[-1, 1]`. Stereo channels are averaged.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(Error::Format(format!(
            "{}: {channels} channels, expected mono or stereo",
            path.display()
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>(),
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{}: unsupported encoding {fmt:?} {bits}-bit",
                path.display()
            )))
        }
    }
    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;

    if interleaved.is_empty() {
        return Err(Error::Format(format!("{}: no samples", path.display())));
    }
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Signal::new(mono, spec.sample_rate).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_with<F>(path: &Path, spec: WavSpec, mut put: F) -> Result<()>
where
    F: FnMut(&mut WavWriter<std::io::BufWriter<std::fs::File>>) -> hound::Result<()>,
{
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    };
    let mut w = WavWriter::create(path, spec).map_err(to_err)?;
    put(&mut w).map_err(to_err)?;
    w.finalize().map_err(to_err)
}

/// Write a mono 16-bit PCM file; samples are clipped to `[-1, 1)`.
pub fn write_wav_i16(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    write_with(path.as_ref(), spec, |w| {
        for &v in signal.samples() {
            w.write_sample((v * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?;
        }
        Ok(())
    })
}

/// Write a mono 32-bit float file.
pub fn write_wav_f32(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    write_with(path.as_ref(), spec, |w| {
        for &v in signal.samples() {
            w.write_sample(v as f32)?;
        }
        Ok(())
    })
}

/// Linear-interpolation resampler. Output sample `i` sits at input time
/// `i·old/new`; the last output never extrapolates past the input.
pub fn resample_linear(signal: &Signal, new_rate: u32) -> Result<Signal> {
    if new_rate == 0 {
        return Err(Error::domain("target sample rate must be positive"));
    }
    let x = signal.samples();
    if signal.sample_rate() == new_rate || x.len() < 2 {
        return Signal::new(x.to_vec(), new_rate);
    }
    let ratio = signal.sample_rate() as f64 / new_rate as f64;
    let n_out = ((x.len() - 1) as f64 / ratio).floor() as usize + 1;
    let out = (0..n_out)
        .map(|i| {
            let t = i as f64 * ratio;
            let j = (t.floor() as usize).min(x.len() - 2);
            let frac = t - j as f64;
            x[j] + frac * (x[j + 1] - x[j])
        })
        .collect();
    Signal::new(out, new_rate)
}
