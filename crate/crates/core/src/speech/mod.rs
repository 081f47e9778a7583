//! Speech features: phonation and prosody from voiced segments, articulation
//! from voice onsets, and ingestion of precomputed phonological posteriors.

mod articulation;
mod phonation;
mod phonological;
mod pitch;
mod prosody;

pub use articulation::{
    articulation_features, bark_band_edges, bark_band_energies, detect_onsets, OnsetSegment,
};
pub use phonation::{phonation_features, PHONATION_NAMES};
pub use phonological::{load_phonological, parse_phonological};
pub use pitch::{estimate_f0, segment_voiced, F0Contour, VoicedSegment};
pub use prosody::{lagrange_interpolate, prosody_features, PROSODY_NODES};

use std::io::{Read, Seek, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PHONATION_DIM: usize = 7;
pub const ARTICULATION_DIM: usize = 58;
pub const PROSODY_DIM: usize = 13;
pub const PHONOLOGICAL_DIM: usize = 18;

/// Rate every speech file must be recorded at.
pub const SPEECH_RATE: u32 = 16_000;
/// Shortest recording accepted for feature extraction, in seconds.
pub const MIN_DURATION: f64 = 0.5;

/// A mono recording with samples scaled to `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeechRecording {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub subject: String,
    pub task: String,
}

impl SpeechRecording {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("non-finite speech sample"));
        }
        Ok(Self {
            samples,
            sample_rate,
            subject: String::new(),
            task: String::new(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.samples.reverse();
        out
    }

    /// Reads 16-bit PCM mono at 16 kHz; other formats are refused rather than converted.
    pub fn from_wav_reader<R: Read>(reader: R) -> Result<Self> {
        let mut wav = hound::WavReader::new(reader)?;
        let spec = wav.spec();
        if spec.channels != 1 {
            return Err(Error::invalid(format!(
                "expected mono audio, found {} channels",
                spec.channels
            )));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::invalid("expected 16-bit integer PCM"));
        }
        if spec.sample_rate != SPEECH_RATE {
            return Err(Error::invalid(format!(
                "expected {SPEECH_RATE} Hz audio, found {} Hz",
                spec.sample_rate
            )));
        }
        let samples = wav
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(samples, spec.sample_rate)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rec = Self::from_wav_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        rec.task = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(rec)
    }

    /// Writes 16-bit PCM, clipping samples to the representable range.
    pub fn write_wav<W: Write + Seek>(&self, writer: W) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::new(writer, spec)?;
        for s in &self.samples {
            let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            w.write_sample(q)?;
        }
        w.finalize()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_wav(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub(crate) fn check_duration(&self) -> Result<()> {
        if self.duration() < MIN_DURATION {
            return Err(Error::TooShort {
                what: "speech recording (samples)",
                needed: (MIN_DURATION * self.sample_rate as f64).ceil() as usize,
                got: self.samples.len(),
            });
        }
        Ok(())
    }
}
