use super::SpeechRecording;
use crate::error::{Error, Result};

pub const FRAME_SECONDS: f64 = 0.040;
pub const HOP_SECONDS: f64 = 0.010;
pub const MIN_F0: f64 = 50.0;
pub const MAX_F0: f64 = 500.0;
/// Normalised autocorrelation peak needed to call a frame voiced.
pub const VOICING_THRESHOLD: f64 = 0.45;
pub const MIN_SEGMENT_SECONDS: f64 = 0.060;

/// Per-frame fundamental frequency; `0` marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour {
    f0: Vec<f64>,
    sample_rate: u32,
    frame_len: usize,
    hop: usize,
}

impl F0Contour {
    pub fn new(f0: Vec<f64>, sample_rate: u32, frame_len: usize, hop: usize) -> Result<Self> {
        if sample_rate == 0 || hop == 0 || frame_len == 0 {
            return Err(Error::invalid(
                "contour needs positive rate, hop and frame length",
            ));
        }
        if let Some(bad) = f0
            .iter()
            .find(|f| !(**f == 0.0 || (MIN_F0..=MAX_F0).contains(*f)))
        {
            return Err(Error::invalid(format!(
                "F0 value {bad} outside [{MIN_F0}, {MAX_F0}] Hz"
            )));
        }
        Ok(Self {
            f0,
            sample_rate,
            frame_len,
            hop,
        })
    }

    /// Contour with the standard 40 ms frame and 10 ms hop at `sample_rate`.
    pub fn standard(f0: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let (frame_len, hop) = standard_framing(sample_rate);
        Self::new(f0, sample_rate, frame_len, hop)
    }

    pub fn values(&self) -> &[f64] {
        &self.f0
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn is_voiced(&self, i: usize) -> bool {
        self.f0[i] > 0.0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn hop(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    pub fn frame_length(&self) -> f64 {
        self.frame_len as f64 / self.sample_rate as f64
    }

    pub fn hop_samples(&self) -> usize {
        self.hop
    }

    pub fn frame_samples(&self) -> usize {
        self.frame_len
    }

    /// Sample range `[start, end)` analysed by frame `i`.
    pub fn frame_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = i * self.hop;
        start..start + self.frame_len
    }

    /// Centre of frame `i`, in seconds.
    pub fn frame_center(&self, i: usize) -> f64 {
        (i * self.hop) as f64 / self.sample_rate as f64 + 0.5 * self.frame_length()
    }
}

fn standard_framing(sample_rate: u32) -> (usize, usize) {
    let fs = sample_rate as f64;
    (
        (FRAME_SECONDS * fs).round() as usize,
        (HOP_SECONDS * fs).round().max(1.0) as usize,
    )
}

/// Normalised cross-correlation between `x[..n-lag]` and `x[lag..]`.
fn ncc(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&x[lag..]) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let denom = (xx * yy).sqrt();
    if denom > 0.0 {
        xy / denom
    } else {
        0.0
    }
}

/// Autocorrelation pitch of one frame, `0.0` when unvoiced.
fn frame_pitch(frame: &[f64], fs: f64, min_lag: usize, max_lag: usize) -> f64 {
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy <= 1e-20 * x.len() as f64 {
        return 0.0;
    }
    let lo = min_lag - 1;
    let r: Vec<f64> = (lo..=max_lag + 1).map(|lag| ncc(&x, lag)).collect();
    let at = |lag: usize| r[lag - lo];

    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&lag| at(lag) > at(lag - 1) && at(lag) >= at(lag + 1))
        .collect();
    let Some(best) = peaks.iter().map(|&l| at(l)).reduce(f64::max) else {
        return 0.0;
    };
    if best < VOICING_THRESHOLD {
        return 0.0;
    }
    // Shortest lag close to the best peak, to avoid sub-octave errors.
    let lag = peaks
        .into_iter()
        .find(|&l| at(l) >= 0.9 * best)
        .expect("best peak is in the list");
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let curvature = a - 2.0 * b + c;
    let offset = if curvature < 0.0 {
        (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    (fs / (lag as f64 + offset)).clamp(MIN_F0, MAX_F0)
}

/// Autocorrelation pitch track with a voicing decision, 40 ms frames every 10 ms.
pub fn estimate_f0(rec: &SpeechRecording) -> Result<F0Contour> {
    let (frame_len, hop) = standard_framing(rec.sample_rate);
    if rec.samples.len() < frame_len {
        return Err(Error::TooShort {
            what: "recording for pitch analysis (samples)",
            needed: frame_len,
            got: rec.samples.len(),
        });
    }
    let fs = rec.sample_rate as f64;
    let min_lag = ((fs / MAX_F0).floor() as usize).max(2);
    let max_lag = ((fs / MIN_F0).ceil() as usize).min(frame_len.saturating_sub(2));
    if max_lag <= min_lag {
        return Err(Error::invalid("sample rate too low for the pitch search band"));
    }
    let n_frames = (rec.samples.len() - frame_len) / hop + 1;
    let f0 = (0..n_frames)
        .map(|i| frame_pitch(&rec.samples[i * hop..i * hop + frame_len], fs, min_lag, max_lag))
        .collect();
    F0Contour::new(f0, rec.sample_rate, frame_len, hop)
}

/// A maximal run of voiced frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoicedSegment {
    pub start: f64,
    pub end: f64,
    pub first_frame: usize,
    pub n_frames: usize,
}

impl VoicedSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        self.first_frame..self.first_frame + self.n_frames
    }
}

/// Maximal voiced runs of at least 60 ms; each frame stands for one hop of time.
pub fn segment_voiced(contour: &F0Contour) -> Vec<VoicedSegment> {
    let hop = contour.hop();
    let min_frames = ((MIN_SEGMENT_SECONDS / hop) - 1e-9).ceil() as usize;
    let mut out = Vec::new();
    let mut i = 0;
    while i < contour.len() {
        if !contour.is_voiced(i) {
            i += 1;
            continue;
        }
        let first = i;
        while i < contour.len() && contour.is_voiced(i) {
            i += 1;
        }
        let n = i - first;
        if n >= min_frames {
            let start = contour.frame_center(first) - 0.5 * hop;
            out.push(VoicedSegment {
                start,
                end: start + n as f64 * hop,
                first_frame: first,
                n_frames: n,
            });
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn tone(freq: f64, seconds: f64, amp: f64) -> SpeechRecording {
        let n = (seconds * 16000.0) as usize;
        let samples = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / 16000.0).sin())
            .collect();
        SpeechRecording::new(samples, 16000).unwrap()
    }

    pub(crate) fn noise(seconds: f64, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sd).unwrap();
        (0..(seconds * 16000.0) as usize)
            .map(|_| normal.sample(&mut rng))
            .collect()
    }

    #[test]
    fn pure_tone_pitch() {
        let c = estimate_f0(&tone(100.0, 1.0, 0.9)).unwrap();
        assert!(c.len() > 90);
        for &f in &c.values()[1..c.len() - 1] {
            assert!((f - 100.0).abs() <= 2.0, "f0 {f}");
        }
    }

    #[test]
    fn silence_is_unvoiced() {
        let rec = SpeechRecording::new(vec![0.0; 16000], 16000).unwrap();
        assert!(estimate_f0(&rec).unwrap().values().iter().all(|f| *f == 0.0));
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let rec = SpeechRecording::new(noise(2.0, 0.3, 5), 16000).unwrap();
        let c = estimate_f0(&rec).unwrap();
        let unvoiced = c.values().iter().filter(|f| **f == 0.0).count();
        assert!(unvoiced as f64 >= 0.9 * c.len() as f64);
    }

    #[test]
    fn too_short_recording() {
        let rec = SpeechRecording::new(vec![0.1; 100], 16000).unwrap();
        assert!(matches!(estimate_f0(&rec), Err(Error::TooShort { .. })));
    }

    fn contour(pattern: &[(bool, usize)]) -> F0Contour {
        let f0 = pattern
            .iter()
            .flat_map(|&(v, n)| std::iter::repeat_n(if v { 120.0 } else { 0.0 }, n))
            .collect();
        F0Contour::standard(f0, 16000).unwrap()
    }

    #[test]
    fn segmentation_rules() {
        assert!(segment_voiced(&contour(&[(false, 30)])).is_empty());
        let one = segment_voiced(&contour(&[(false, 5), (true, 50), (false, 5)]));
        assert_eq!(one.len(), 1);
        assert!((one[0].duration() - 0.5).abs() < 1e-12);
        assert_eq!(one[0].first_frame, 5);
        assert!(segment_voiced(&contour(&[(false, 5), (true, 4), (false, 5)])).is_empty());
        let two = segment_voiced(&contour(&[(true, 6), (false, 1), (true, 8)]));
        assert_eq!(two.len(), 2);
        assert!(two[0].end <= two[1].start);
    }

    #[test]
    fn contour_validates_range() {
        assert!(F0Contour::standard(vec![0.0, 30.0], 16000).is_err());
        assert!(F0Contour::standard(vec![0.0, 600.0], 16000).is_err());
    }
}
