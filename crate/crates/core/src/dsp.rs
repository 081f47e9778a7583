//! Small spectral helpers shared by the speech and gait extractors.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

pub(crate) fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// `|X_k|^2` for `k = 0..=nfft/2` of the windowed, zero-padded input.
pub(crate) fn power_spectrum(x: &[f64], window: &[f64], nfft: usize) -> Vec<f64> {
    debug_assert!(x.len() <= nfft && window.len() == x.len());
    let mut buf: Vec<Complex64> = x
        .iter()
        .zip(window)
        .map(|(v, w)| Complex64::new(v * w, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(nfft)
        .collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    buf[..=nfft / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Bin centre frequencies matching [`power_spectrum`].
pub(crate) fn bin_frequencies(nfft: usize, fs: f64) -> impl Iterator<Item = f64> {
    (0..=nfft / 2).map(move |k| k as f64 * fs / nfft as f64)
}

pub(crate) fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub(crate) fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over `[low, high]` Hz, one weight row per filter.
pub(crate) fn mel_filterbank(n_filters: usize, nfft: usize, fs: f64, low: f64, high: f64) -> Vec<Vec<f64>> {
    let (ml, mh) = (hz_to_mel(low), hz_to_mel(high));
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(ml + (mh - ml) * i as f64 / (n_filters + 1) as f64))
        .collect();
    let freqs: Vec<f64> = bin_frequencies(nfft, fs).collect();
    (0..n_filters)
        .map(|j| {
            let (l, c, r) = (edges[j], edges[j + 1], edges[j + 2]);
            freqs
                .iter()
                .map(|&f| {
                    if f <= l || f >= r {
                        0.0
                    } else if f <= c {
                        (f - l) / (c - l)
                    } else {
                        (r - f) / (r - c)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II coefficients `first..first+count` of `x`.
pub(crate) fn dct2(x: &[f64], first: usize, count: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (first..first + count)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Regression deltas over a sequence of vectors, window +-2 with edge replication.
pub(crate) fn deltas(frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = frames.len();
    let dim = frames.first().map(Vec::len).unwrap_or(0);
    let at = |i: isize| &frames[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|t| {
            (0..dim)
                .map(|d| {
                    let num: f64 = (1..=2).map(|k| k as f64 * (at(t + k)[d] - at(t - k)[d])).sum();
                    num / 10.0
                })
                .collect()
        })
        .collect()
}

pub(crate) fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_peaks_at_tone() {
        let fs = 1000.0;
        let x: Vec<f64> = (0..256)
            .map(|i| (2.0 * PI * 125.0 * i as f64 / fs).sin())
            .collect();
        let p = power_spectrum(&x, &hann(256), 256);
        let peak = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(peak, 32);
    }

    #[test]
    fn dct_of_constant_has_only_dc() {
        let c = dct2(&[2.0; 8], 0, 4);
        assert!((c[0] - 2.0 * 8f64.sqrt()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn deltas_of_linear_ramp() {
        let frames: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 * 3.0]).collect();
        let d = deltas(&frames);
        assert!((d[3][0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mel_round_trip() {
        for f in [0.0, 100.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
        let bank = mel_filterbank(26, 512, 16000.0, 0.0, 8000.0);
        assert_eq!(bank.len(), 26);
        assert!(bank.iter().all(|row| row.iter().any(|w| *w > 0.0)));
    }
}
