use super::pitch::{F0Contour, VoicedSegment};
use super::{SpeechRecording, PROSODY_DIM};
use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};

/// Interpolation nodes per contour: a degree-5 polynomial is fixed by six values.
pub const PROSODY_NODES: usize = 6;

/// Linear resampling of `v` at `count` equidistant points of normalised time.
fn resample(v: &[f64], count: usize) -> Vec<f64> {
    let last = (v.len() - 1) as f64;
    (0..count)
        .map(|j| {
            let pos = last * j as f64 / (count - 1) as f64;
            let i = (pos.floor() as usize).min(v.len() - 2);
            let frac = pos - i as f64;
            v[i] + frac * (v[i + 1] - v[i])
        })
        .collect()
}

/// Evaluates the Lagrange polynomial through `(j / (n-1), nodes[j])` at `u`.
pub fn lagrange_interpolate(nodes: &[f64], u: f64) -> f64 {
    let n = nodes.len();
    if n == 1 {
        return nodes[0];
    }
    let x = |j: usize| j as f64 / (n - 1) as f64;
    (0..n)
        .map(|j| {
            let basis: f64 = (0..n)
                .filter(|&m| m != j)
                .map(|m| (u - x(m)) / (x(j) - x(m)))
                .product();
            nodes[j] * basis
        })
        .sum()
}

/// Log-F0 and log-energy contours of every voiced segment, each summarised by
/// its values at six equidistant nodes, plus the segment duration.
pub fn prosody_features(
    rec: &SpeechRecording,
    segments: &[VoicedSegment],
    contour: &F0Contour,
) -> Result<FrameSequence> {
    if segments.is_empty() {
        return Err(Error::invalid("no voiced segment for prosody analysis"));
    }
    if contour.sample_rate() != rec.sample_rate {
        return Err(Error::invalid("contour and recording sample rates differ"));
    }
    let mut data = Vec::with_capacity(segments.len() * PROSODY_DIM);
    for seg in segments {
        if seg.n_frames < PROSODY_NODES {
            return Err(Error::TooShort {
                what: "voiced segment (frames)",
                needed: PROSODY_NODES,
                got: seg.n_frames,
            });
        }
        if seg.frames().end > contour.len() {
            return Err(Error::invalid("voiced segment extends past the contour"));
        }
        let mut log_f0 = Vec::with_capacity(seg.n_frames);
        let mut log_energy = Vec::with_capacity(seg.n_frames);
        for i in seg.frames() {
            let f0 = contour.values()[i];
            if f0 <= 0.0 {
                return Err(Error::invalid("voiced segment contains an unvoiced frame"));
            }
            log_f0.push(f0.ln());
            let range = contour.frame_range(i);
            let end = range.end.min(rec.samples.len());
            let energy: f64 = rec.samples[range.start.min(end)..end].iter().map(|v| v * v).sum();
            log_energy.push(energy.max(f64::MIN_POSITIVE).ln());
        }
        data.extend(resample(&log_f0, PROSODY_NODES));
        data.extend(resample(&log_energy, PROSODY_NODES));
        data.push(seg.duration());
    }
    FrameSequence::new(data, PROSODY_DIM)?.with_feature_set(FeatureSet::Prosody)
}
