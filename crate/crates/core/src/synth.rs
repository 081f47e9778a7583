//! Synthetic cohorts with a programmed severity, written in the corpus
//! layout read by [`crate::pipeline::ingest_corpus`].
//!
//! Severity acts on three targets: cycle-to-cycle jitter and shimmer of a
//! sustained vowel, a tremor sinusoid and slowing on a drawn spiral, and a
//! 3–8 Hz component on top of the gait oscillation. Phonological posterior
//! streams get severity-scaled variance.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gait::{InertialRecording, CHANNELS, GAIT_RATE};
use crate::handwriting::{write_pen_stream, PenSample, PenState, PEN_RATE};
use crate::pipeline::{write_metadata, Gender, SubjectRecord, MAX_SCORE};
use crate::speech::{SpeechRecording, PHONOLOGICAL_DIM, SPEECH_RATE};

pub const METADATA_FILE: &str = "metadata.csv";

/// Signal perturbation per unit of normalised severity (`score / 132`).
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionGains {
    /// Added relative standard deviation of the glottal period.
    pub jitter: f64,
    /// Added relative standard deviation of the cycle amplitude.
    pub shimmer: f64,
    /// Tremor amplitude on the pen trace, in millimetres.
    pub tremor: f64,
    /// Fractional loss of drawing speed.
    pub slowing: f64,
    /// Amplitude of the 3–8 Hz gait component relative to the locomotor one.
    pub freeze: f64,
    /// Added standard deviation of the phonological posteriors.
    pub phonological: f64,
}

impl Default for DistortionGains {
    fn default() -> Self {
        Self {
            jitter: 0.006,
            shimmer: 0.04,
            tremor: 1.0,
            slowing: 0.5,
            freeze: 0.8,
            phonological: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_controls: usize,
    pub n_patients: usize,
    /// Inclusive range patient scores are drawn from, uniformly.
    pub severity_range: (u16, u16),
    pub gains: DistortionGains,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_controls: 10,
            n_patients: 10,
            severity_range: (0, MAX_SCORE),
            gains: DistortionGains::default(),
            seed: 0,
        }
    }
}

/// Concrete perturbation levels for one subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion {
    pub jitter: f64,
    pub shimmer: f64,
    pub tremor_amplitude: f64,
    pub speed_factor: f64,
    pub freeze_amplitude: f64,
    pub phonological_sd: f64,
}

const BASE_JITTER: f64 = 0.004;
const BASE_SHIMMER: f64 = 0.03;
const BASE_PHONOLOGICAL_SD: f64 = 0.05;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_controls < 2 || self.n_patients < 2 {
            return Err(Error::invalid(
                "a cohort needs at least two controls and two patients",
            ));
        }
        let (lo, hi) = self.severity_range;
        if lo > hi || hi > MAX_SCORE {
            return Err(Error::invalid(format!(
                "severity range {lo}..={hi} outside 0..={MAX_SCORE}"
            )));
        }
        let g = &self.gains;
        let gains = [g.jitter, g.shimmer, g.tremor, g.slowing, g.freeze, g.phonological];
        if gains.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("distortion gains must be finite and non-negative"));
        }
        if g.slowing >= 1.0 {
            return Err(Error::invalid("slowing gain must stay below 1"));
        }
        Ok(())
    }

    /// Perturbation levels for a score; controls use score 0.
    pub fn distortion(&self, score: u16) -> Distortion {
        let u = score.min(MAX_SCORE) as f64 / MAX_SCORE as f64;
        let g = &self.gains;
        Distortion {
            jitter: BASE_JITTER + g.jitter * u,
            shimmer: BASE_SHIMMER + g.shimmer * u,
            tremor_amplitude: g.tremor * u,
            speed_factor: 1.0 - g.slowing * u,
            freeze_amplitude: g.freeze * u,
            phonological_sd: BASE_PHONOLOGICAL_SD + g.phonological * u,
        }
    }
}

/// Files written for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSubject {
    pub record: SubjectRecord,
    pub files: Vec<PathBuf>,
}

/// Writes `metadata.csv` and one directory per subject under `out`.
///
/// Every subject draws from its own stream of one seeded generator, so the
/// corpus is byte-identical for a given configuration regardless of threading.
pub fn generate_cohort(cfg: &SynthConfig, out: impl AsRef<Path>) -> Result<Vec<GeneratedSubject>> {
    cfg.validate()?;
    let out = out.as_ref();
    std::fs::create_dir_all(out)?;
    let n = cfg.n_controls + cfg.n_patients;
    let subjects = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let record = draw_record(cfg, i, &mut rng)?;
            let files = write_subject(cfg, &record, &mut rng, &out.join(&record.id))?;
            Ok(GeneratedSubject { record, files })
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<SubjectRecord> = subjects.iter().map(|s| s.record.clone()).collect();
    write_metadata(
        std::io::BufWriter::new(std::fs::File::create(out.join(METADATA_FILE))?),
        &records,
    )?;
    Ok(subjects)
}

fn draw_record(cfg: &SynthConfig, i: usize, rng: &mut ChaCha8Rng) -> Result<SubjectRecord> {
    let gender = if rng.random_bool(0.5) {
        Gender::F
    } else {
        Gender::M
    };
    let age = rng.random_range(45..=80) as f64;
    if i < cfg.n_controls {
        SubjectRecord::control(format!("c{:03}", i + 1), gender, age)
    } else {
        let (lo, hi) = cfg.severity_range;
        let score = rng.random_range(lo..=hi);
        SubjectRecord::patient(format!("p{:03}", i - cfg.n_controls + 1), gender, age, score)
    }
}

fn write_subject(
    cfg: &SynthConfig,
    rec: &SubjectRecord,
    rng: &mut ChaCha8Rng,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let d = cfg.distortion(rec.score.unwrap_or(0));
    let mut files = Vec::new();
    let sub = |name: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::create_dir_all(&p)?;
        Ok(p)
    };

    let path = sub("speech")?.join("vowel.wav");
    sustained_vowel(&d, rec.gender, rng).save(&path)?;
    files.push(path);

    let path = sub("phonological")?.join("vowel.csv");
    write_posteriors(&path, &posterior_stream(&d, rng))?;
    files.push(path);

    let path = sub("handwriting")?.join("spiral.csv");
    write_pen_stream(
        std::io::BufWriter::new(std::fs::File::create(&path)?),
        &spiral(&d, rng),
    )?;
    files.push(path);

    let gait_dir = sub("gait")?;
    let cadence = rng.random_range(1.0..2.0);
    for foot in ["left", "right"] {
        let path = gait_dir.join(format!("walk_{foot}.csv"));
        walk(&d, cadence, rng)?.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        files.push(path);
    }
    Ok(files)
}

/// Five voiced bursts of a three-harmonic source separated by faint noise.
/// Each glottal cycle draws its own period and amplitude.
pub fn sustained_vowel(d: &Distortion, gender: Gender, rng: &mut impl Rng) -> SpeechRecording {
    let fs = SPEECH_RATE as f64;
    let f0 = match gender {
        Gender::F => rng.random_range(180.0..230.0),
        Gender::M => rng.random_range(100.0..140.0),
    };
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let gap = (0.2 * fs) as usize;
    let mut samples = Vec::new();
    let noise = |n: usize, samples: &mut Vec<f64>, rng: &mut dyn rand::RngCore| {
        samples.extend((0..n).map(|_| 0.002 * unit.sample(rng)));
    };
    noise(gap, &mut samples, rng);
    for burst in 0..5 {
        let burst_len = (rng.random_range(0.45..0.6) * fs) as usize;
        let target = samples.len() + burst_len;
        let burst_f0 = f0 * (1.0 + 0.03 * (burst as f64 - 2.0) / 2.0);
        while samples.len() < target {
            let period = fs / burst_f0 * (1.0 + d.jitter * unit.sample(rng)).max(0.5);
            let amp = 0.5 * (1.0 + d.shimmer * unit.sample(rng)).clamp(0.2, 1.8);
            let len = period.round().max(2.0) as usize;
            for j in 0..len {
                let ph = 2.0 * PI * j as f64 / len as f64;
                let v = ph.sin() + 0.35 * (2.0 * ph).sin() + 0.15 * (3.0 * ph).sin();
                samples.push(amp * v + 0.002 * unit.sample(rng));
            }
        }
        noise(gap, &mut samples, rng);
    }
    SpeechRecording::new(samples, SPEECH_RATE).expect("finite synthetic samples")
}

/// 18 smoothed posterior tracks at 100 frames per second, clipped to `[0, 1]`.
pub fn posterior_stream(d: &Distortion, rng: &mut impl Rng) -> Vec<[f64; PHONOLOGICAL_DIM]> {
    let frames = 300;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let rho: f64 = 0.9;
    let innovation = d.phonological_sd * (1.0 - rho * rho).sqrt();
    let mut state = [0.0; PHONOLOGICAL_DIM];
    for s in state.iter_mut() {
        *s = d.phonological_sd * unit.sample(rng);
    }
    (0..frames)
        .map(|_| {
            std::array::from_fn(|j| {
                state[j] = rho * state[j] + innovation * unit.sample(rng);
                let level = 0.2 + 0.6 * j as f64 / (PHONOLOGICAL_DIM - 1) as f64;
                (level + state[j]).clamp(0.0, 1.0)
            })
        })
        .collect()
}

fn write_posteriors(path: &Path, rows: &[[f64; PHONOLOGICAL_DIM]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=PHONOLOGICAL_DIM).map(|j| format!("p{j}")));
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = vec![format!("{}", i as f64 * 0.01)];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// An Archimedean spiral of three turns, lifted briefly after each turn,
/// with a tremor sinusoid on both axes.
pub fn spiral(d: &Distortion, rng: &mut impl Rng) -> Vec<PenSample> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let dt = 1.0 / PEN_RATE;
    let speed = rng.random_range(35.0..45.0) * d.speed_factor;
    let tremor_freq = rng.random_range(4.5..6.0);
    let tremor_phase = rng.random_range(0.0..2.0 * PI);
    let (r0, growth) = (5.0, 4.0 / (2.0 * PI));
    let (cx, cy) = (rng.random_range(40.0..60.0), rng.random_range(40.0..60.0));
    let lift = (0.15 / dt) as usize;

    let mut out = Vec::new();
    let mut theta = 0.0f64;
    let mut lifted_at = 1;
    let mut air_left = 0;
    let mut i = 0usize;
    while theta < 6.0 * PI {
        let t = i as f64 * dt;
        let r = r0 + growth * theta;
        let air = air_left > 0;
        let tremor = d.tremor_amplitude * (2.0 * PI * tremor_freq * t + tremor_phase).sin();
        out.push(PenSample {
            t,
            x: cx + r * theta.cos() + tremor + 0.01 * unit.sample(rng),
            y: cy + r * theta.sin() + 0.8 * tremor + 0.01 * unit.sample(rng),
            pressure: if air {
                0.0
            } else {
                (0.55 + 0.05 * unit.sample(rng)).clamp(0.05, 1.0)
            },
            azimuth: 45.0 + 2.0 * unit.sample(rng),
            altitude: 60.0 + 2.0 * unit.sample(rng),
            state: if air { PenState::Air } else { PenState::Surface },
        });
        theta += speed * dt / r;
        if air_left > 0 {
            air_left -= 1;
        } else if theta >= 2.0 * PI * lifted_at as f64 && lifted_at < 3 {
            lifted_at += 1;
            air_left = lift;
        }
        i += 1;
    }
    out
}

/// 25 s of six-channel foot motion: a locomotor oscillation with its first
/// harmonic, an optional 3–8 Hz component and sensor noise.
pub fn walk(d: &Distortion, cadence: f64, rng: &mut impl Rng) -> Result<InertialRecording> {
    const SCALE: [f64; CHANNELS] = [1.0, 0.6, 1.2, 2.0, 1.5, 1.0];
    let n = (25.0 * GAIT_RATE) as usize;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let freeze_freq = rng.random_range(4.0..6.5);
    let channels: [Vec<f64>; CHANNELS] = std::array::from_fn(|c| {
        let (p1, p2, p3): (f64, f64, f64) = (
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        );
        (0..n)
            .map(|i| {
                let t = i as f64 / GAIT_RATE;
                let w = 2.0 * PI * cadence * t;
                SCALE[c]
                    * ((w + p1).sin()
                        + 0.3 * (2.0 * w + p2).sin()
                        + d.freeze_amplitude * (2.0 * PI * freeze_freq * t + p3).sin()
                        + 0.15 * unit.sample(rng))
            })
            .collect()
    });
    InertialRecording::new(channels, GAIT_RATE)
}
