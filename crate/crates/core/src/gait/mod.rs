//! Gait: six-channel inertial recordings cut into windows, described by
//! wavelet/Fourier energies and by nonlinear-dynamics estimators.

mod harmonic;
pub mod nonlinear;

pub use harmonic::{
    cwt_scalogram, freeze_index, harmonic_channel, harmonic_features, scalogram_frequencies, FREEZE_BAND,
    HARMONIC_NAMES, HARMONIC_PER_CHANNEL, LOCOMOTOR_BAND, SCALOGRAM_BANDS, SCALOGRAM_ROWS,
};
pub use nonlinear::{
    correlation_dimension, dfa, embed, hurst, largest_lyapunov, lempel_ziv, sample_entropy, EmbeddingConfig,
    LyapunovConfig,
};

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};

pub const HARMONIC_DIM: usize = 102;
pub const NONLINEAR_DIM: usize = 36;
pub const CHANNELS: usize = 6;
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["ax", "ay", "az", "gx", "gy", "gz"];
pub const GAIT_RATE: f64 = 100.0;

pub const HARMONIC_WINDOW_SECONDS: f64 = 3.0;
pub const NONLINEAR_WINDOW_SECONDS: f64 = 10.0;
pub const WINDOW_OVERLAP: f64 = 0.5;
/// Embedding dimension used for every channel.
pub const EMBEDDING_DIM: usize = 4;

pub const NONLINEAR_NAMES: [&str; 6] = [
    "corr_dim",
    "lyapunov",
    "hurst",
    "dfa",
    "sample_entropy",
    "lempel_ziv",
];

/// Three accelerometer and three gyroscope channels from one foot.
#[derive(Debug, Clone, PartialEq)]
pub struct InertialRecording {
    channels: [Vec<f64>; CHANNELS],
    sample_rate: f64,
    pub foot: String,
    pub task: String,
}

impl InertialRecording {
    pub fn new(channels: [Vec<f64>; CHANNELS], sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let n = channels[0].len();
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("inertial channels differ in length"));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite inertial sample"));
        }
        Ok(Self {
            channels,
            sample_rate,
            foot: String::new(),
            task: String::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    /// Reads `t,ax,ay,az,gx,gy,gz` rows. The sample rate is taken from the
    /// mean spacing of the strictly increasing time column.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut times: Vec<f64> = Vec::new();
        let mut channels: [Vec<f64>; CHANNELS] = Default::default();
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
            if rec.len() != CHANNELS + 1 {
                return Err(Error::parse(
                    line,
                    format!("expected 7 columns, found {}", rec.len()),
                ));
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let v = match parsed {
                Ok(v) => v,
                Err(_) if idx == 0 => continue,
                Err(e) => return Err(Error::parse(line, format!("malformed row: {e}"))),
            };
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::parse(line, "malformed row: non-finite value"));
            }
            if times.last().is_some_and(|&t| v[0] <= t) {
                return Err(Error::parse(line, "non-monotone time"));
            }
            times.push(v[0]);
            for (c, x) in channels.iter_mut().zip(&v[1..]) {
                c.push(*x);
            }
        }
        if times.len() < 2 {
            return Err(Error::TooShort {
                what: "gait recording (rows)",
                needed: 2,
                got: times.len(),
            });
        }
        let rate = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
        Self::new(channels, rate)
    }

    /// Loads a CSV file; the file stem becomes the task tag and a trailing
    /// `_left`/`_right` becomes the foot tag.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rec = Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match stem.rsplit_once('_') {
            Some((task, foot)) if foot == "left" || foot == "right" => {
                rec.task = task.to_string();
                rec.foot = foot.to_string();
            }
            _ => rec.task = stem,
        }
        Ok(rec)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("t").chain(CHANNEL_NAMES))?;
        for i in 0..self.len() {
            let mut row = vec![format!("{}", i as f64 / self.sample_rate)];
            row.extend(self.channels.iter().map(|c| format!("{}", c[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A fixed-length slice of all six channels.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitWindow {
    /// Start time in seconds.
    pub start: f64,
    pub channels: [Vec<f64>; CHANNELS],
    pub sample_rate: f64,
}

/// Windows of `length` seconds advancing by `(1 - overlap) * length`; a
/// trailing remainder shorter than one window is dropped.
pub fn window_signal(rec: &InertialRecording, length: f64, overlap: f64) -> Result<Vec<GaitWindow>> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid("overlap must lie in [0, 1)"));
    }
    let fs = rec.sample_rate;
    let len = (length * fs).round() as usize;
    if len == 0 {
        return Err(Error::invalid("window length must cover at least one sample"));
    }
    let hop = ((len as f64 * (1.0 - overlap)).round() as usize).max(1);
    if rec.len() < len {
        return Err(Error::TooShort {
            what: "gait recording for one window (samples)",
            needed: len,
            got: rec.len(),
        });
    }
    let count = (rec.len() - len) / hop + 1;
    Ok((0..count)
        .map(|w| {
            let s = w * hop;
            GaitWindow {
                start: s as f64 / fs,
                channels: std::array::from_fn(|c| rec.channels[c][s..s + len].to_vec()),
                sample_rate: fs,
            }
        })
        .collect())
}

/// The six nonlinear estimators for each channel (36 values). Each channel
/// is embedded in four dimensions with its own mutual-information delay;
/// the Lyapunov exponent is reported per second.
pub fn nonlinear_features(window: &GaitWindow) -> Result<Vec<f64>> {
    let lcfg = LyapunovConfig {
        min_samples: 1000,
        horizon: None,
    };
    let mut out = Vec::with_capacity(NONLINEAR_DIM);
    for x in &window.channels {
        check_window_len(x, 1000)?;
        let cfg = EmbeddingConfig::estimate(x, EMBEDDING_DIM)?;
        out.push(correlation_dimension(x, &cfg)?);
        out.push(largest_lyapunov(x, &cfg, &lcfg)? * window.sample_rate);
        out.push(hurst(x)?);
        out.push(dfa(x)?);
        out.push(sample_entropy(x, 2, 0.2)?);
        out.push(lempel_ziv(x)?);
    }
    Ok(out)
}

fn check_window_len(x: &[f64], needed: usize) -> Result<()> {
    if x.len() < needed {
        return Err(Error::TooShort {
            what: "window for nonlinear analysis (samples)",
            needed,
            got: x.len(),
        });
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::Undefined("constant channel".into()));
    }
    Ok(())
}

/// Runs `extract` over windows in parallel, keeping window order. Windows
/// whose extraction fails are dropped with a warning.
fn window_sequence(
    windows: &[GaitWindow],
    dim: usize,
    set: FeatureSet,
    hop: f64,
    extract: impl Fn(&GaitWindow) -> Result<Vec<f64>> + Sync,
) -> Result<FrameSequence> {
    let results: Vec<Result<Vec<f64>>> = windows.par_iter().map(&extract).collect();
    let mut data = Vec::with_capacity(windows.len() * dim);
    let mut dropped = 0;
    for (w, r) in windows.iter().zip(results) {
        match r {
            Ok(v) => data.extend(v),
            Err(e) => {
                dropped += 1;
                log::warn!("{set} window at {:.2} s dropped: {e}", w.start);
            }
        }
    }
    if data.is_empty() {
        return Err(Error::Undefined(format!(
            "every {set} window failed ({dropped} of {})",
            windows.len()
        )));
    }
    Ok(FrameSequence::new(data, dim)?
        .with_feature_set(set)?
        .with_frame_period(hop))
}

/// Harmonic frames from 3 s windows with 50% overlap.
pub fn harmonic_sequence(rec: &InertialRecording) -> Result<FrameSequence> {
    let windows = window_signal(rec, HARMONIC_WINDOW_SECONDS, WINDOW_OVERLAP)?;
    let hop = HARMONIC_WINDOW_SECONDS * (1.0 - WINDOW_OVERLAP);
    window_sequence(
        &windows,
        HARMONIC_DIM,
        FeatureSet::Harmonic,
        hop,
        harmonic_features,
    )
}

/// Nonlinear frames from 10 s windows with 50% overlap.
pub fn nonlinear_sequence(rec: &InertialRecording) -> Result<FrameSequence> {
    let windows = window_signal(rec, NONLINEAR_WINDOW_SECONDS, WINDOW_OVERLAP)?;
    let hop = NONLINEAR_WINDOW_SECONDS * (1.0 - WINDOW_OVERLAP);
    window_sequence(
        &windows,
        NONLINEAR_DIM,
        FeatureSet::Nonlinear,
        hop,
        nonlinear_features,
    )
}

#[cfg(test)]
mod tests {
    use super::nonlinear::tests::gaussian;
    use super::*;

    fn tone(freq: f64, seconds: f64, fs: f64) -> Vec<f64> {
        (0..(seconds * fs) as usize)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn recording(seconds: f64) -> InertialRecording {
        let n = (seconds * GAIT_RATE) as usize;
        InertialRecording::new(std::array::from_fn(|c| gaussian(n, c as u64)), GAIT_RATE).unwrap()
    }

    #[test]
    fn window_arithmetic() {
        let w = window_signal(&recording(10.0), 3.0, 0.5).unwrap();
        let starts: Vec<f64> = w.iter().map(|w| w.start).collect();
        assert_eq!(starts, [0.0, 1.5, 3.0, 4.5, 6.0]);
        assert!(w.iter().all(|w| w.channels[0].len() == 300));
        assert_eq!(window_signal(&recording(3.0), 3.0, 0.5).unwrap().len(), 1);
        assert!(window_signal(&recording(2.0), 3.0, 0.5).is_err());
        assert!(window_signal(&recording(5.0), 3.0, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let rec = recording(1.0);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let back = InertialRecording::read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 100);
        assert!((back.sample_rate() - 100.0).abs() < 1e-9);
        assert_eq!(back.channel(3), rec.channel(3));
        assert!(InertialRecording::read_csv("0,1,2,3,4,5,6\n0,1,2,3,4,5,6\n".as_bytes()).is_err());
        assert!(InertialRecording::read_csv("0,1,2,3,4,5\n".as_bytes()).is_err());
    }

    #[test]
    fn scalogram_peak_row_follows_the_tone() {
        let freqs = scalogram_frequencies();
        for f0 in [0.5, 1.0, 2.0, 4.0, 7.0] {
            let s = cwt_scalogram(&tone(f0, 6.0, 100.0), 100.0, &freqs).unwrap();
            let energy: Vec<f64> = s.iter().map(|r| r.iter().sum()).collect();
            let best = (0..SCALOGRAM_ROWS)
                .max_by(|a, b| energy[*a].total_cmp(&energy[*b]))
                .unwrap();
            // Analytic oracle: the response of a row is x e^{-x^2/2} with x = f0 / f_row.
            let response = |f: f64| (f0 / f) * (-(f0 / f).powi(2) / 2.0).exp();
            let oracle = (0..SCALOGRAM_ROWS)
                .max_by(|a, b| response(freqs[*a]).total_cmp(&response(freqs[*b])))
                .unwrap();
            assert_eq!(best, oracle, "tone {f0} Hz");
        }
    }

    #[test]
    fn scalogram_is_quadratic_and_zero_on_silence() {
        let freqs = scalogram_frequencies();
        let x = gaussian(300, 9);
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = cwt_scalogram(&x, 100.0, &freqs).unwrap();
        let b = cwt_scalogram(&doubled, 100.0, &freqs).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (u, v) in ra.iter().zip(rb) {
                assert!((4.0 * u - v).abs() <= 1e-9 * (1.0 + v.abs()));
            }
        }
        let z = cwt_scalogram(&[0.0; 300], 100.0, &freqs).unwrap();
        assert!(z.iter().flatten().all(|v| *v == 0.0));
        assert!(cwt_scalogram(&[1.0; 50], 100.0, &freqs).is_err());
    }

    #[test]
    fn freeze_index_of_tones_and_noise() {
        assert!(freeze_index(&tone(1.0, 3.0, 100.0), 100.0).unwrap() < 0.01);
        assert!(freeze_index(&tone(5.0, 3.0, 100.0), 100.0).unwrap() > 100.0);
        let mean_fi: f64 = (0..20)
            .map(|s| freeze_index(&gaussian(3000, 50 + s), 100.0).unwrap())
            .sum::<f64>()
            / 20.0;
        assert!((mean_fi - 2.0).abs() < 0.6, "{mean_fi}");
        assert!(freeze_index(&[0.0; 300], 100.0).is_err());
    }

    #[test]
    fn harmonic_vector_layout_and_scaling() {
        let w = &window_signal(&recording(3.0), 3.0, 0.5).unwrap()[0];
        let h = harmonic_features(w).unwrap();
        assert_eq!(h.len(), HARMONIC_DIM);
        assert!(h.iter().all(|v| v.is_finite() && *v >= 0.0));
        let scaled = GaitWindow {
            channels: std::array::from_fn(|c| w.channels[c].iter().map(|v| 3.0 * v).collect()),
            ..w.clone()
        };
        let hs = harmonic_features(&scaled).unwrap();
        for c in 0..CHANNELS {
            for d in 0..HARMONIC_PER_CHANNEL {
                let (u, v) = (h[c * 17 + d], hs[c * 17 + d]);
                let factor = if (8..11).contains(&d) || d == 16 { 1.0 } else { 9.0 };
                assert!(
                    (factor * u - v).abs() <= 1e-9 * (1.0 + v.abs()),
                    "channel {c} dim {d}"
                );
            }
        }
    }

    #[test]
    fn nonlinear_vector_on_noise() {
        let w = &window_signal(&recording(10.0), 10.0, 0.5).unwrap()[0];
        let v = nonlinear_features(w).unwrap();
        assert_eq!(v.len(), NONLINEAR_DIM);
        for c in 0..CHANNELS {
            assert!((v[c * 6 + 2] - 0.5).abs() < 0.15, "hurst {}", v[c * 6 + 2]);
        }
        let zero = GaitWindow {
            channels: std::array::from_fn(|_| vec![0.0; 1000]),
            ..w.clone()
        };
        assert!(nonlinear_features(&zero).is_err());
    }

    #[test]
    fn sequences_drop_failed_windows() {
        let mut channels: [Vec<f64>; CHANNELS] = std::array::from_fn(|c| gaussian(1500, 30 + c as u64));
        // Silence the first 4.5 s of one channel: the first two harmonic windows fail.
        channels[2][..450].iter_mut().for_each(|v| *v = 0.0);
        let rec = InertialRecording::new(channels, GAIT_RATE).unwrap();
        let h = harmonic_sequence(&rec).unwrap();
        assert_eq!(h.len(), window_signal(&rec, 3.0, 0.5).unwrap().len() - 2);
        assert_eq!(h.dim(), HARMONIC_DIM);
        let nl = nonlinear_sequence(&rec).unwrap();
        assert_eq!((nl.len(), nl.dim()), (2, NONLINEAR_DIM));
    }
}
