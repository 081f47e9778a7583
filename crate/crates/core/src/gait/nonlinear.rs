//! Nonlinear-dynamics estimators on scalar series: delay embedding,
//! correlation dimension, largest Lyapunov exponent, Hurst and DFA scaling
//! exponents, sample entropy and Lempel-Ziv complexity.

use statrs::function::gamma::ln_gamma;

use crate::dsp;
use crate::error::{Error, Result};

/// Delay-embedding parameters shared by the phase-space estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingConfig {
    pub m: usize,
    pub tau: usize,
    /// Pairs closer than this many samples in time are never compared.
    pub theiler: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            m: 4,
            tau: 1,
            theiler: 1,
        }
    }
}

impl EmbeddingConfig {
    pub fn new(m: usize, tau: usize, theiler: usize) -> Result<Self> {
        let cfg = Self { m, tau, theiler };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::invalid("embedding dimension must be at least 2"));
        }
        if self.tau < 1 {
            return Err(Error::invalid("embedding delay must be at least 1"));
        }
        Ok(())
    }

    /// Dimension `m`, delay at the first minimum of the auto mutual
    /// information and a Theiler window of one mean period.
    pub fn estimate(series: &[f64], m: usize) -> Result<Self> {
        let max_lag = (series.len() / 10).max(2);
        let tau = ami_delay(series, max_lag)?;
        let theiler = mean_period(series)?.ceil() as usize;
        Self::new(m, tau, theiler.max(1))
    }
}

/// Delay vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    data: Vec<f64>,
    m: usize,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.m)
    }
}

/// Row `i` is `(x[i], x[i+tau], ..., x[i+(m-1)tau])`.
pub fn embed(series: &[f64], cfg: &EmbeddingConfig) -> Result<Embedding> {
    cfg.validate()?;
    let span = (cfg.m - 1) * cfg.tau;
    if series.len() <= span + 1 {
        return Err(Error::TooShort {
            what: "series for embedding (samples)",
            needed: span + 2,
            got: series.len(),
        });
    }
    let rows = series.len() - span;
    let mut data = Vec::with_capacity(rows * cfg.m);
    for i in 0..rows {
        data.extend((0..cfg.m).map(|k| series[i + k * cfg.tau]));
    }
    Ok(Embedding { data, m: cfg.m })
}

fn check_len(series: &[f64], needed: usize, what: &'static str) -> Result<()> {
    if series.len() < needed {
        return Err(Error::TooShort {
            what,
            needed,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite sample in series"));
    }
    Ok(())
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Ordinary least-squares slope of `y` on `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Distinct integers spaced roughly evenly in log between `lo` and `hi`.
fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Auto mutual information (nats) between `x[t]` and `x[t+lag]`, from a
/// 16-bin joint histogram.
pub fn auto_mutual_information(series: &[f64], lag: usize) -> f64 {
    const BINS: usize = 16;
    let n = series.len() - lag;
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    if hi <= lo {
        return 0.0;
    }
    let bin = |v: f64| (((v - lo) / (hi - lo) * BINS as f64) as usize).min(BINS - 1);
    let mut joint = vec![0.0; BINS * BINS];
    let (mut pa, mut pb) = (vec![0.0; BINS], vec![0.0; BINS]);
    for i in 0..n {
        let (a, b) = (bin(series[i]), bin(series[i + lag]));
        joint[a * BINS + b] += 1.0;
        pa[a] += 1.0;
        pb[b] += 1.0;
    }
    let n = n as f64;
    let mut mi = 0.0;
    for a in 0..BINS {
        for b in 0..BINS {
            let p = joint[a * BINS + b];
            if p > 0.0 {
                mi += p / n * (p * n / (pa[a] * pb[b])).ln();
            }
        }
    }
    mi
}

/// First local minimum of the auto mutual information over lags
/// `1..=max_lag`; the global minimum when the curve never turns up.
pub fn ami_delay(series: &[f64], max_lag: usize) -> Result<usize> {
    if series.len() < max_lag + 3 || max_lag < 2 {
        return Err(Error::TooShort {
            what: "series for delay selection (samples)",
            needed: max_lag.max(2) + 3,
            got: series.len(),
        });
    }
    let ami: Vec<f64> = (1..=max_lag + 1)
        .map(|l| auto_mutual_information(series, l))
        .collect();
    if let Some(i) = (1..max_lag).find(|&i| ami[i] < ami[i - 1] && ami[i] <= ami[i + 1]) {
        return Ok(i + 1);
    }
    let (i, _) = ami[..max_lag]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    Ok(i + 1)
}

/// Reciprocal of the power-weighted mean frequency, in samples.
pub fn mean_period(series: &[f64]) -> Result<f64> {
    let (mean, _) = mean_std(series);
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let nfft = dsp::next_pow2(x.len());
    let p = dsp::power_spectrum(&x, &vec![1.0; x.len()], nfft);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, v) in p.iter().enumerate().skip(1) {
        num += k as f64 / nfft as f64 * v;
        den += v;
    }
    if den <= 0.0 {
        return Err(Error::Undefined("mean period of a constant series".into()));
    }
    Ok(den / num)
}

/// Correlation sums are evaluated on this grid of log-radius bins.
const CD_BIN_WIDTH: f64 = 0.02;
/// The fitted decade ends where the correlation sum reaches this value.
const CD_UPPER_SUM: f64 = 1e-2;
/// Fewest pairs allowed at the small end of the scaling region.
const CD_MIN_PAIRS: f64 = 20.0;

/// Grassberger-Procaccia correlation dimension: slope of `ln C(r)` against
/// `ln r` over the decade of radii ending where `C` reaches 1%. Short or
/// high-dimensional series may not populate a full decade; the region then
/// shrinks to where at least 20 pairs are counted, down to a quarter decade.
pub fn correlation_dimension(series: &[f64], cfg: &EmbeddingConfig) -> Result<f64> {
    check_len(series, 1000, "series for correlation dimension (samples)")?;
    if is_constant(series) {
        return Err(Error::Undefined(
            "correlation dimension of a constant series".into(),
        ));
    }
    let emb = embed(series, cfg)?;
    let n = emb.len();
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    // Every distance lies below sqrt(m) * range; bins cover 15 decades under that.
    let ln_top = ((hi - lo) * (cfg.m as f64).sqrt()).ln() + CD_BIN_WIDTH;
    let n_bins = (15.0 * std::f64::consts::LN_10 / CD_BIN_WIDTH) as usize;
    let ln_bottom = ln_top - n_bins as f64 * CD_BIN_WIDTH;
    let repeat2 = (1e-9 * (hi - lo)).powi(2);
    let mut hist = vec![0u64; n_bins];
    let mut pairs = 0u64;
    for i in 0..n {
        let a = emb.row(i);
        for j in i + cfg.theiler.max(1)..n {
            let d2 = squared_distance(a, emb.row(j));
            // Repeats (up to rounding) carry no scale information.
            if d2 > repeat2 {
                let b = ((0.5 * d2.ln() - ln_bottom) / CD_BIN_WIDTH).max(0.0) as usize;
                hist[b.min(n_bins - 1)] += 1;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::TooShort {
            what: "embedded series beyond the Theiler window (rows)",
            needed: cfg.theiler + 2,
            got: n,
        });
    }
    // C at the upper edge of each bin.
    let mut acc = 0u64;
    let sums: Vec<f64> = hist
        .iter()
        .map(|h| {
            acc += h;
            acc as f64 / pairs as f64
        })
        .collect();
    let top = sums
        .iter()
        .position(|c| *c >= CD_UPPER_SUM)
        .expect("the last bin holds every pair");
    let width = (std::f64::consts::LN_10 / CD_BIN_WIDTH).round() as usize;
    let populated = sums
        .iter()
        .position(|c| c * pairs as f64 >= CD_MIN_PAIRS)
        .expect("the last bin holds every pair");
    let bottom = top.saturating_sub(width).max(populated);
    if top < bottom + width / 4 {
        return Err(Error::Undefined(
            "no scaling region for the correlation sum".into(),
        ));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (bottom..=top)
        .map(|b| (ln_bottom + (b + 1) as f64 * CD_BIN_WIDTH, sums[b].ln()))
        .unzip();
    Ok(slope(&xs, &ys))
}

/// Rosenstein's method settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LyapunovConfig {
    pub min_samples: usize,
    /// Divergence steps fitted; `None` uses two mean periods, capped at a
    /// quarter of the embedded length.
    pub horizon: Option<usize>,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            min_samples: 2000,
            horizon: None,
        }
    }
}

/// Largest Lyapunov exponent in nats per sample: every delay vector is
/// paired with its nearest neighbour outside the Theiler window, and the
/// mean log separation is regressed on elapsed steps.
pub fn largest_lyapunov(series: &[f64], cfg: &EmbeddingConfig, lcfg: &LyapunovConfig) -> Result<f64> {
    check_len(
        series,
        lcfg.min_samples.max(10),
        "series for Lyapunov exponent (samples)",
    )?;
    if is_constant(series) {
        return Err(Error::Undefined("Lyapunov exponent of a constant series".into()));
    }
    let emb = embed(series, cfg)?;
    let horizon = match lcfg.horizon {
        Some(h) => h,
        None => ((2.0 * mean_period(series)?).round() as usize).min(emb.len() / 4),
    }
    .max(2);
    if emb.len() <= horizon + cfg.theiler + 2 {
        return Err(Error::TooShort {
            what: "embedded series for Lyapunov exponent (rows)",
            needed: horizon + cfg.theiler + 3,
            got: emb.len(),
        });
    }
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let repeat2 = (1e-9 * (hi - lo)).powi(2);
    let usable = emb.len() - horizon;
    let mut sum = vec![0.0; horizon + 1];
    let mut count = vec![0usize; horizon + 1];
    for i in 0..usable {
        let a = emb.row(i);
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..usable {
            if i.abs_diff(j) <= cfg.theiler {
                continue;
            }
            let d = squared_distance(a, emb.row(j));
            if d > repeat2 && d < best.0 {
                best = (d, j);
            }
        }
        if best.1 == usize::MAX {
            continue;
        }
        for k in 0..=horizon {
            let d = squared_distance(emb.row(i + k), emb.row(best.1 + k));
            if d > repeat2 {
                sum[k] += 0.5 * d.ln();
                count[k] += 1;
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..=horizon)
        .filter(|&k| count[k] > 0)
        .map(|k| (k as f64, sum[k] / count[k] as f64))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Undefined("no neighbour pairs for divergence curve".into()));
    }
    Ok(slope(&xs, &ys))
}

/// Expected rescaled range of white noise at block size `n`
/// (Anis-Lloyd with Peters' small-sample factor).
fn expected_rescaled_range(n: usize) -> f64 {
    let nf = n as f64;
    let sum: f64 = (1..n).map(|i| ((nf - i as f64) / i as f64).sqrt()).sum();
    let front = (nf - 0.5) / nf;
    if n <= 340 {
        front * (ln_gamma((nf - 1.0) / 2.0) - ln_gamma(nf / 2.0)).exp() / std::f64::consts::PI.sqrt() * sum
    } else {
        front / (nf * std::f64::consts::PI / 2.0).sqrt() * sum
    }
}

/// Hurst exponent from rescaled-range analysis over log-spaced block sizes
/// `16..=N/4`. The white-noise expectation is subtracted before the fit so
/// that short series are not biased upward.
pub fn hurst(series: &[f64]) -> Result<f64> {
    check_len(series, 500, "series for Hurst exponent (samples)")?;
    if is_constant(series) {
        return Err(Error::Undefined("Hurst exponent of a constant series".into()));
    }
    let n = series.len();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for size in log_spaced(16, n / 4, 12) {
        let mut acc = 0.0;
        let mut blocks = 0;
        for block in series.chunks_exact(size) {
            let (mean, sd) = mean_std(block);
            if sd <= 0.0 {
                continue;
            }
            let (mut z, mut zmax, mut zmin) = (0.0, f64::NEG_INFINITY, f64::INFINITY);
            for v in block {
                z += v - mean;
                zmax = zmax.max(z);
                zmin = zmin.min(z);
            }
            acc += (zmax - zmin) / sd;
            blocks += 1;
        }
        if blocks > 0 {
            xs.push((size as f64).ln());
            ys.push((acc / blocks as f64).ln() - expected_rescaled_range(size).ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Undefined("too few block sizes with nonzero spread".into()));
    }
    Ok(0.5 + slope(&xs, &ys))
}

/// First-order detrended fluctuation analysis exponent over log-spaced box
/// sizes `4..=N/4`, boxes taken from both ends of the profile.
pub fn dfa(series: &[f64]) -> Result<f64> {
    check_len(series, 500, "series for DFA (samples)")?;
    if is_constant(series) {
        return Err(Error::Undefined("DFA of a constant series".into()));
    }
    let (mean, _) = mean_std(series);
    let mut profile = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for v in series {
        acc += v - mean;
        profile.push(acc);
    }
    let n = profile.len();
    let detrended_ms = |seg: &[f64]| {
        let len = seg.len() as f64;
        let mt = (len - 1.0) / 2.0;
        let my = seg.iter().sum::<f64>() / len;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, y) in seg.iter().enumerate() {
            sxy += (i as f64 - mt) * (y - my);
            sxx += (i as f64 - mt) * (i as f64 - mt);
        }
        let b = sxy / sxx;
        seg.iter()
            .enumerate()
            .map(|(i, y)| {
                let r = y - my - b * (i as f64 - mt);
                r * r
            })
            .sum::<f64>()
            / len
    };
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for size in log_spaced(4, n / 4, 16) {
        let boxes = n / size;
        let offset = n - boxes * size;
        let f2: f64 = (0..boxes)
            .map(|b| {
                detrended_ms(&profile[b * size..(b + 1) * size])
                    + detrended_ms(&profile[offset + b * size..offset + (b + 1) * size])
            })
            .sum::<f64>()
            / (2 * boxes) as f64;
        if f2 > 0.0 {
            xs.push((size as f64).ln());
            ys.push(0.5 * f2.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Undefined("fluctuation function vanishes".into()));
    }
    Ok(slope(&xs, &ys))
}

/// Sample entropy with template length `m` and tolerance `r_factor * std`
/// under the Chebyshev distance, self-matches excluded.
pub fn sample_entropy(series: &[f64], m: usize, r_factor: f64) -> Result<f64> {
    check_len(series, 200, "series for sample entropy (samples)")?;
    if m == 0 {
        return Err(Error::invalid("template length must be positive"));
    }
    let (_, sd) = mean_std(series);
    let r = r_factor * sd;
    let templates = series.len() - m;
    let (mut a, mut b) = (0u64, 0u64);
    for i in 0..templates {
        for j in i + 1..templates {
            let mut matched = true;
            for k in 0..m {
                if (series[i + k] - series[j + k]).abs() > r {
                    matched = false;
                    break;
                }
            }
            if matched {
                b += 1;
                if (series[i + m] - series[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return Err(Error::Undefined(format!(
            "sample entropy undefined (A = {a}, B = {b})"
        )));
    }
    Ok(-(a as f64 / b as f64).ln())
}

/// Number of phrases in the Lempel-Ziv (1976) parsing of `s`.
pub fn lz76_phrases(s: &[bool]) -> usize {
    let n = s.len();
    if n < 2 {
        return n;
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1, 1, 0, 1, 1);
    loop {
        if s[i + k - 1] == s[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    c
}

/// Lempel-Ziv complexity of the series binarised at its median,
/// normalised by `n / log2 n`.
pub fn lempel_ziv(series: &[f64]) -> Result<f64> {
    check_len(series, 100, "series for Lempel-Ziv complexity (samples)")?;
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    // Ties join the smaller side so that two-valued series split evenly.
    let above = series.iter().filter(|v| **v > median).count();
    let below = series.iter().filter(|v| **v < median).count();
    let tie = above < below;
    let bits: Vec<bool> = series
        .iter()
        .map(|v| if *v == median { tie } else { *v > median })
        .collect();
    let nf = n as f64;
    Ok(lz76_phrases(&bits) as f64 * nf.log2() / nf)
}
