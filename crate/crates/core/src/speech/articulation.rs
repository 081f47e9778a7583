use super::pitch::F0Contour;
use super::{SpeechRecording, ARTICULATION_DIM};
use crate::dsp;
use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};

/// Half-width of an onset segment: 40 ms on either side of the border.
pub const ONSET_HALF_SECONDS: f64 = 0.040;
const N_MEL: usize = 26;
const N_MFCC: usize = 12;
const SUBFRAME_SECONDS: f64 = 0.025;
const SUBFRAME_HOP_SECONDS: f64 = 0.010;
const LOG_FLOOR: f64 = 1e-12;

/// Zwicker critical-band edges in Hz, truncated at 8 kHz: 22 bands.
const BARK_EDGES: [f64; 23] = [
    0.0, 100.0, 200.0, 300.0, 400.0, 510.0, 630.0, 770.0, 920.0, 1080.0, 1270.0, 1480.0, 1720.0, 2000.0,
    2320.0, 2700.0, 3150.0, 3700.0, 4400.0, 5300.0, 6400.0, 7700.0, 8000.0,
];

pub fn bark_band_edges() -> &'static [f64] {
    &BARK_EDGES
}

/// Samples around one unvoiced-to-voiced border.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetSegment {
    /// Border time in seconds.
    pub center: f64,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// One 80 ms segment centred on every unvoiced-to-voiced border of the
/// contour, clipped at the recording edges.
pub fn detect_onsets(rec: &SpeechRecording, contour: &F0Contour) -> Vec<OnsetSegment> {
    let fs = rec.sample_rate as f64;
    let half = (ONSET_HALF_SECONDS * fs).round() as isize;
    (1..contour.len())
        .filter(|&i| !contour.is_voiced(i - 1) && contour.is_voiced(i))
        .map(|i| {
            let center = 0.5 * (contour.frame_center(i - 1) + contour.frame_center(i));
            let mid = (center * fs).round() as isize;
            let lo = (mid - half).clamp(0, rec.samples.len() as isize) as usize;
            let hi = (mid + half).clamp(0, rec.samples.len() as isize) as usize;
            OnsetSegment {
                center,
                samples: rec.samples[lo..hi].to_vec(),
                sample_rate: rec.sample_rate,
            }
        })
        .collect()
}

/// Linear energies in the 22 Bark bands of a Hann-windowed segment.
pub fn bark_band_energies(samples: &[f64], fs: f64) -> Vec<f64> {
    let nfft = dsp::next_pow2(samples.len());
    let power = dsp::power_spectrum(samples, &dsp::hann(samples.len()), nfft);
    let mut bands = vec![0.0; BARK_EDGES.len() - 1];
    for (f, p) in dsp::bin_frequencies(nfft, fs).zip(&power) {
        if let Some(b) = BARK_EDGES.windows(2).position(|e| f >= e[0] && f < e[1]) {
            bands[b] += p;
        }
    }
    bands
}

fn mfcc_subframes(samples: &[f64], fs: f64) -> Result<Vec<Vec<f64>>> {
    let len = (SUBFRAME_SECONDS * fs).round() as usize;
    let hop = (SUBFRAME_HOP_SECONDS * fs).round() as usize;
    if samples.len() < len {
        return Err(Error::TooShort {
            what: "onset segment (samples)",
            needed: len,
            got: samples.len(),
        });
    }
    let nfft = dsp::next_pow2(len);
    let window = dsp::hamming(len);
    let bank = dsp::mel_filterbank(N_MEL, nfft, fs, 0.0, 8000.0);
    let count = (samples.len() - len) / hop + 1;
    Ok((0..count)
        .map(|i| {
            let power = dsp::power_spectrum(&samples[i * hop..i * hop + len], &window, nfft);
            let log_mel: Vec<f64> = bank
                .iter()
                .map(|w| (w.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>() + LOG_FLOOR).ln())
                .collect();
            dsp::dct2(&log_mel, 1, N_MFCC)
        })
        .collect())
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= rows.len() as f64);
    out
}

/// 22 log Bark-band energies plus averaged MFCCs and their first two
/// derivatives over 25 ms sub-frames: 58 values per onset.
pub fn articulation_features(segments: &[OnsetSegment], fs: u32) -> Result<FrameSequence> {
    if segments.is_empty() {
        return Err(Error::invalid("no onset segments"));
    }
    if fs < 16_000 {
        return Err(Error::invalid(
            "articulation analysis needs at least 16 kHz audio",
        ));
    }
    let mut data = Vec::with_capacity(segments.len() * ARTICULATION_DIM);
    for seg in segments {
        if seg.sample_rate != fs {
            return Err(Error::invalid(format!(
                "onset sampled at {} Hz, expected {fs} Hz",
                seg.sample_rate
            )));
        }
        let fsf = fs as f64;
        data.extend(
            bark_band_energies(&seg.samples, fsf)
                .into_iter()
                .map(|e| (e + LOG_FLOOR).ln()),
        );
        let mfcc = mfcc_subframes(&seg.samples, fsf)?;
        let d1 = dsp::deltas(&mfcc);
        let d2 = dsp::deltas(&d1);
        data.extend(mean_rows(&mfcc));
        data.extend(mean_rows(&d1));
        data.extend(mean_rows(&d2));
    }
    FrameSequence::new(data, ARTICULATION_DIM)?.with_feature_set(FeatureSet::Articulation)
}
