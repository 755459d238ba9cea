//! Signal loading and overlapping framing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mono vibration recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::param("sample_rate_hz", "must be positive and finite"));
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalFormat {
    Wav,
    Csv,
}

impl SignalFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "wav" => Some(SignalFormat::Wav),
            "csv" | "txt" => Some(SignalFormat::Csv),
            _ => None,
        }
    }
}

/// Load a signal. CSV files carry no rate, so `sample_rate_hz` is required for them;
/// for WAV it is ignored in favour of the header.
pub fn load_signal(path: &Path, format: SignalFormat, sample_rate_hz: Option<f64>) -> Result<Signal> {
    match format {
        SignalFormat::Wav => load_wav(path),
        SignalFormat::Csv => {
            let rate = sample_rate_hz
                .ok_or_else(|| Error::param("sample_rate_hz", "required for csv input"))?;
            load_csv(path, rate)
        }
    }
}

/// One sample per line; blank lines and lines starting with `#` are skipped.
pub fn load_csv(path: &Path, sample_rate_hz: f64) -> Result<Signal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let samples = parse_csv_samples(&text)?;
    Signal::new(samples, sample_rate_hz)
}

pub(crate) fn parse_csv_samples(text: &str) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // tolerate a trailing column separator from spreadsheet exports
        let field = line.split(',').next().unwrap_or("").trim();
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("not a number: {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "non-finite sample".into(),
            });
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(samples)
}

/// Mono PCM 16/24/32-bit or 32-bit float. Integer PCM is rescaled to [-1, 1].
pub fn load_wav(path: &Path) -> Result<Signal> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedWav(format!(
            "{} channels; only mono is supported",
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedWav(format!("{fmt:?} at {bits} bits")));
        }
    };
    Signal::new(samples, spec.sample_rate as f64)
}

pub fn write_csv(signal: &Signal, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "# sample_rate_hz={}", signal.sample_rate_hz).map_err(io)?;
    for s in &signal.samples {
        // `{}` on f64 prints the shortest string that round-trips
        writeln!(w, "{s}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes 32-bit float mono. The sample rate is rounded to an integer (WAV header limit).
pub fn write_wav(signal: &Signal, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in &signal.samples {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramingConfig {
    pub frame_len: usize,
    pub hop: usize,
}

impl Default for FramingConfig {
    fn default() -> Self {
        Self {
            frame_len: 8192,
            hop: 128,
        }
    }
}

impl FramingConfig {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        let cfg = Self { frame_len, hop };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 {
            return Err(Error::param("frame_len", "must be at least 2"));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::param("hop", "must satisfy 1 <= hop <= frame_len"));
        }
        Ok(())
    }

    /// Number of whole frames in a signal of `len` samples (0 if it is shorter than a frame).
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    pub fn start_sample(&self, index: usize) -> usize {
        (index - 1) * self.hop
    }

    /// Frame-center timestamp for 1-based `index`.
    pub fn center_time_s(&self, index: usize, sample_rate_hz: f64) -> f64 {
        (self.start_sample(index) as f64 + self.frame_len as f64 / 2.0) / sample_rate_hz
    }
}

/// A borrowed analysis window; `index` is 1-based.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub index: usize,
    pub start_sample: usize,
    pub data: &'a [f64],
    pub time_s: f64,
}

/// Slice into frames t = 1..T, T = floor((len - N)/H) + 1. Trailing samples that
/// do not fill a frame are dropped.
pub fn frame_signal<'a>(signal: &'a Signal, cfg: &FramingConfig) -> Result<Vec<Frame<'a>>> {
    cfg.validate()?;
    let len = signal.samples.len();
    if len < cfg.frame_len {
        return Err(Error::SignalTooShort {
            len,
            frame_len: cfg.frame_len,
        });
    }
    let count = cfg.frame_count(len);
    Ok((1..=count)
        .map(|index| {
            let start = cfg.start_sample(index);
            Frame {
                index,
                start_sample: start,
                data: &signal.samples[start..start + cfg.frame_len],
                time_s: cfg.center_time_s(index, signal.sample_rate_hz),
            }
        })
        .collect())
}
