//! Wavelet and Fourier energy descriptors of one inertial window.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{GaitWindow, CHANNELS, HARMONIC_DIM};
use crate::dsp;
use crate::error::{Error, Result};

pub const SCALOGRAM_ROWS: usize = 16;
pub const SCALOGRAM_BANDS: usize = 8;
pub const SCALOGRAM_LOW_HZ: f64 = 0.3;
pub const SCALOGRAM_HIGH_HZ: f64 = 12.0;
pub const LOCOMOTOR_BAND: (f64, f64) = (0.5, 3.0);
pub const FREEZE_BAND: (f64, f64) = (3.0, 8.0);
/// Bands pooled by each spectral centroid: low, middle and high groups.
const CENTROID_GROUPS: [std::ops::Range<usize>; 3] = [0..3, 3..6, 6..8];
pub const HARMONIC_PER_CHANNEL: usize = 17;

pub const HARMONIC_NAMES: [&str; HARMONIC_PER_CHANNEL] = [
    "band0",
    "band1",
    "band2",
    "band3",
    "band4",
    "band5",
    "band6",
    "band7",
    "centroid_low",
    "centroid_mid",
    "centroid_high",
    "quarter1",
    "quarter2",
    "quarter3",
    "locomotor",
    "freeze",
    "freeze_index",
];

/// Pseudo-frequencies (Hz) of the scalogram rows, log-spaced over 0.3-12 Hz.
pub fn scalogram_frequencies() -> [f64; SCALOGRAM_ROWS] {
    let ratio = (SCALOGRAM_HIGH_HZ / SCALOGRAM_LOW_HZ).ln() / (SCALOGRAM_ROWS - 1) as f64;
    std::array::from_fn(|i| SCALOGRAM_LOW_HZ * (ratio * i as f64).exp())
}

/// Continuous wavelet transform with the first derivative of a Gaussian,
/// evaluated in the frequency domain on a zero-padded copy of `x`. The
/// wavelet is normalised so that a unit tone at a row's pseudo-frequency
/// gives the same response at every scale. Returns `|W|^2` per row and sample.
pub fn cwt_scalogram(x: &[f64], fs: f64, freqs: &[f64]) -> Result<Vec<Vec<f64>>> {
    if x.is_empty() {
        return Err(Error::invalid("empty window"));
    }
    if (x.len() as f64) < fs {
        return Err(Error::TooShort {
            what: "window for wavelet analysis (samples)",
            needed: fs.ceil() as usize,
            got: x.len(),
        });
    }
    let n = x.len();
    let nfft = dsp::next_pow2(2 * n);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(nfft);
    let inverse = planner.plan_fft_inverse(nfft);
    let mut spectrum: Vec<Complex64> = x
        .iter()
        .map(|v| Complex64::new(*v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(nfft)
        .collect();
    forward.process(&mut spectrum);
    let omega = |k: usize| {
        let k = if k <= nfft / 2 {
            k as f64
        } else {
            k as f64 - nfft as f64
        };
        2.0 * PI * k / nfft as f64
    };
    Ok(freqs
        .iter()
        .map(|&f| {
            let scale = fs / (2.0 * PI * f);
            let mut buf: Vec<Complex64> = spectrum
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let sw = scale * omega(k);
                    v * Complex64::new(0.0, sw * (-0.5 * sw * sw).exp())
                })
                .collect();
            inverse.process(&mut buf);
            buf[..n].iter().map(|c| (c.re / nfft as f64).powi(2)).collect()
        })
        .collect())
}

/// Windowed power spectrum of the mean-removed series, normalised by its length.
fn centered_power(x: &[f64]) -> (Vec<f64>, usize) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let nfft = dsp::next_pow2(x.len());
    let p = dsp::power_spectrum(&centered, &dsp::hann(x.len()), nfft);
    (p.into_iter().map(|v| v / x.len() as f64).collect(), nfft)
}

fn band_energy(power: &[f64], nfft: usize, fs: f64, (lo, hi): (f64, f64)) -> f64 {
    dsp::bin_frequencies(nfft, fs)
        .zip(power)
        .filter(|(f, _)| *f >= lo && *f < hi)
        .map(|(_, p)| p)
        .sum()
}

/// Freeze-band energy over locomotor-band energy.
pub fn freeze_index(x: &[f64], fs: f64) -> Result<f64> {
    let (power, nfft) = centered_power(x);
    let loco = band_energy(&power, nfft, fs, LOCOMOTOR_BAND);
    let freeze = band_energy(&power, nfft, fs, FREEZE_BAND);
    if loco <= 0.0 {
        return Err(Error::Undefined("freeze index with no locomotor energy".into()));
    }
    Ok(freeze / loco)
}

/// The 17 harmonic descriptors of one channel.
pub fn harmonic_channel(x: &[f64], fs: f64) -> Result<[f64; HARMONIC_PER_CHANNEL]> {
    let freqs = scalogram_frequencies();
    let scalogram = cwt_scalogram(x, fs, &freqs)?;
    let row_energy: Vec<f64> = scalogram
        .iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect();
    let bands: Vec<f64> = row_energy.chunks_exact(2).map(|p| p[0] + p[1]).collect();
    let centers: Vec<f64> = freqs.chunks_exact(2).map(|p| (p[0] * p[1]).sqrt()).collect();

    let mut out = [0.0; HARMONIC_PER_CHANNEL];
    out[..SCALOGRAM_BANDS].copy_from_slice(&bands);
    for (g, range) in CENTROID_GROUPS.iter().enumerate() {
        let e: f64 = bands[range.clone()].iter().sum();
        out[SCALOGRAM_BANDS + g] = if e > 0.0 {
            range.clone().map(|b| centers[b] * bands[b]).sum::<f64>() / e
        } else {
            // No energy at all: fall back to the geometric centre of the group.
            (centers[range.start] * centers[range.end - 1]).sqrt()
        };
    }
    let (power, nfft) = centered_power(x);
    let quarter = fs / 8.0;
    for q in 0..3 {
        out[11 + q] = band_energy(&power, nfft, fs, (q as f64 * quarter, (q + 1) as f64 * quarter));
    }
    let loco = band_energy(&power, nfft, fs, LOCOMOTOR_BAND);
    let freeze = band_energy(&power, nfft, fs, FREEZE_BAND);
    if loco <= 0.0 {
        return Err(Error::Undefined("freeze index with no locomotor energy".into()));
    }
    out[14] = loco;
    out[15] = freeze;
    out[16] = freeze / loco;
    Ok(out)
}

/// Harmonic descriptors of all six channels, concatenated (102 values).
pub fn harmonic_features(window: &GaitWindow) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(HARMONIC_DIM);
    for c in 0..CHANNELS {
        out.extend(harmonic_channel(&window.channels[c], window.sample_rate)?);
    }
    Ok(out)
}
