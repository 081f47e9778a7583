use super::pitch::{segment_voiced, F0Contour};
use super::{SpeechRecording, PHONATION_DIM};
use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};

pub const PHONATION_NAMES: [&str; PHONATION_DIM] =
    ["jitter", "shimmer", "apq", "ppq", "d_f0", "dd_f0", "log_energy"];

/// Upward zero crossings of `x`, linearly interpolated to fractional positions.
fn upward_crossings(x: &[f64]) -> Vec<f64> {
    x.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < 0.0 && w[1] >= 0.0)
        .map(|(j, w)| j as f64 + w[0] / (w[0] - w[1]))
        .collect()
}

/// Glottal cycles as consecutive crossing marks roughly one period apart.
/// Returns the period lengths (samples) and peak amplitude of every cycle.
fn cycles(x: &[f64], period: f64) -> (Vec<f64>, Vec<f64>) {
    let marks = upward_crossings(x);
    let mut periods = Vec::new();
    let mut amps = Vec::new();
    let mut i = 0;
    while i < marks.len() {
        let here = marks[i];
        let target = here + period;
        let next = marks[i + 1..]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m >= here + 0.7 * period && m <= here + 1.3 * period)
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()));
        match next {
            Some((offset, &m)) => {
                periods.push(m - here);
                let lo = here.ceil() as usize;
                let hi = (m.floor() as usize).min(x.len() - 1).max(lo);
                amps.push(interpolated_peak(x, lo, hi));
                i += offset + 1;
            }
            None => i += 1,
        }
    }
    (periods, amps)
}

/// Maximum of `x[lo..=hi]`, refined by a parabola through its neighbours.
fn interpolated_peak(x: &[f64], lo: usize, hi: usize) -> f64 {
    let (p, &b) = x[lo..=hi]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty cycle");
    let p = lo + p;
    if p == 0 || p + 1 >= x.len() {
        return b;
    }
    let (a, c) = (x[p - 1], x[p + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature < 0.0 {
        b - (a - c) * (a - c) / (8.0 * curvature)
    } else {
        b
    }
}

/// Mean absolute consecutive difference relative to the mean.
fn local_perturbation(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let diffs: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    diffs / (v.len() - 1) as f64 / mean
}

/// Five-point perturbation quotient; falls back to three points, then to the
/// local measure, when the frame holds too few cycles.
fn perturbation_quotient(v: &[f64]) -> f64 {
    let width = if v.len() >= 5 {
        5
    } else if v.len() >= 3 {
        3
    } else {
        return local_perturbation(v);
    };
    let half = width / 2;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mut acc = 0.0;
    for i in half..v.len() - half {
        let local = v[i - half..=i + half].iter().sum::<f64>() / width as f64;
        acc += (v[i] - local).abs();
    }
    acc / (v.len() - 2 * half) as f64 / mean
}

/// Central differences with one-sided ends, in units per second.
fn derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (v[1] - v[0]) / dt
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / dt
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Jitter, shimmer, APQ, PPQ, F0 derivatives and log-energy for every 40 ms
/// voiced frame. Frames with fewer than two complete cycles are skipped.
pub fn phonation_features(rec: &SpeechRecording, contour: &F0Contour) -> Result<FrameSequence> {
    if contour.sample_rate() != rec.sample_rate {
        return Err(Error::invalid("contour and recording sample rates differ"));
    }
    let segments = segment_voiced(contour);
    if segments.is_empty() {
        return Err(Error::invalid("no voiced content for phonation analysis"));
    }
    let fs = rec.sample_rate as f64;
    let mut data = Vec::new();
    for seg in &segments {
        let f0: Vec<f64> = seg.frames().map(|i| contour.values()[i]).collect();
        let d1 = derivative(&f0, contour.hop());
        let d2 = derivative(&d1, contour.hop());
        for (j, frame) in seg.frames().enumerate() {
            let range = contour.frame_range(frame);
            if range.end > rec.samples.len() {
                break;
            }
            let raw = &rec.samples[range];
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            let x: Vec<f64> = raw.iter().map(|v| v - mean).collect();
            let (periods, amps) = cycles(&x, fs / f0[j]);
            if periods.len() < 2 || amps.iter().any(|a| *a <= 0.0) {
                continue;
            }
            let energy: f64 = raw.iter().map(|v| v * v).sum();
            data.extend_from_slice(&[
                local_perturbation(&periods),
                local_perturbation(&amps),
                perturbation_quotient(&amps),
                perturbation_quotient(&periods),
                d1[j],
                d2[j],
                energy.max(f64::MIN_POSITIVE).ln(),
            ]);
        }
    }
    if data.is_empty() {
        return Err(Error::invalid("no voiced frame with complete glottal cycles"));
    }
    Ok(FrameSequence::new(data, PHONATION_DIM)?
        .with_feature_set(FeatureSet::Phonation)?
        .with_frame_period(contour.hop()))
}

#[cfg(test)]
mod tests {
    use super::super::pitch::estimate_f0;
    use super::super::pitch::tests::tone;
    use super::*;

    fn from_periods(periods: &[f64], amps: &[f64]) -> SpeechRecording {
        let mut samples = Vec::new();
        let mut t0 = 0.0f64;
        for (p, a) in periods.iter().zip(amps) {
            let end = t0 + p;
            let mut i = samples.len();
            while (i as f64) < end {
                let phase = (i as f64 - t0) / p;
                samples.push(a * (2.0 * std::f64::consts::PI * phase).sin());
                i += 1;
            }
            t0 = end;
        }
        SpeechRecording::new(samples, 16000).unwrap()
    }

    fn column(fs: &FrameSequence, d: usize) -> Vec<f64> {
        fs.rows().map(|r| r[d]).collect()
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn periodic_pulse_train_has_no_perturbation() {
        let mut samples = vec![0.0; 16000];
        for i in (0..samples.len()).step_by(160) {
            samples[i] = 0.8;
        }
        let rec = SpeechRecording::new(samples, 16000).unwrap();
        let contour = estimate_f0(&rec).unwrap();
        let f = phonation_features(&rec, &contour).unwrap();
        assert!(f.len() > 50);
        for row in f.rows() {
            assert!(
                row[0] < 1e-3 && row[1] < 1e-3,
                "jitter {} shimmer {}",
                row[0],
                row[1]
            );
        }
    }

    #[test]
    fn alternating_periods_give_two_percent_jitter() {
        let base = 80.0;
        let periods: Vec<f64> = (0..250)
            .map(|i| base * if i % 2 == 0 { 1.01 } else { 0.99 })
            .collect();
        let rec = from_periods(&periods, &vec![0.7; 250]);
        let contour = estimate_f0(&rec).unwrap();
        let f = phonation_features(&rec, &contour).unwrap();
        let jitter = mean(&column(&f, 0));
        assert!((jitter - 0.02).abs() < 0.002, "jitter {jitter}");
        assert!(mean(&column(&f, 1)) < 1e-3);
    }

    #[test]
    fn amplitude_scaling_only_shifts_log_energy() {
        let periods: Vec<f64> = (0..200).map(|i| 100.0 + (i % 3) as f64).collect();
        let amps: Vec<f64> = (0..200).map(|i| 0.3 + 0.02 * (i % 4) as f64).collect();
        let rec = from_periods(&periods, &amps);
        let mut loud = rec.clone();
        loud.samples.iter_mut().for_each(|s| *s *= 2.0);
        let a = phonation_features(&rec, &estimate_f0(&rec).unwrap()).unwrap();
        let b = phonation_features(&loud, &estimate_f0(&loud).unwrap()).unwrap();
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.rows().zip(b.rows()) {
            for d in 0..6 {
                assert!((ra[d] - rb[d]).abs() < 1e-9 * (1.0 + ra[d].abs()));
            }
            assert!((rb[6] - ra[6] - 2.0 * 2f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn unvoiced_input_is_an_error() {
        let rec = SpeechRecording::new(vec![0.0; 16000], 16000).unwrap();
        let contour = estimate_f0(&rec).unwrap();
        assert!(phonation_features(&rec, &contour).is_err());
    }

    #[test]
    fn tone_has_finite_features() {
        let rec = tone(150.0, 1.0, 0.5);
        let f = phonation_features(&rec, &estimate_f0(&rec).unwrap()).unwrap();
        assert!(f.rows().all(|r| r[..4].iter().all(|v| *v >= 0.0)));
    }
}
