use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{posteriors_and_loglik, DiagGmm, Posteriors};
use crate::error::{Error, Result};
use crate::frames::FrameSequence;

/// Absolute lower bound on the variance floor, for constant input dimensions.
const MIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub n_components: usize,
    pub max_iterations: usize,
    /// Stop once the mean per-frame log-likelihood improves by less than this.
    pub tolerance: f64,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub floor_factor: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_components: 16,
            max_iterations: 200,
            tolerance: 1e-6,
            floor_factor: 0.01,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(Error::invalid("EM needs at least one component"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("EM tolerance must be positive"));
        }
        if !(self.floor_factor > 0.0 && self.floor_factor <= 1.0) {
            return Err(Error::invalid("variance floor factor must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Trains a UBM by EM from k-means++ seeds.
pub fn train_ubm(frames: &FrameSequence, cfg: &EmConfig) -> Result<DiagGmm> {
    train_ubm_traced(frames, cfg).map(|(m, _)| m)
}

/// Like [`train_ubm`], also returning the mean per-frame log-likelihood after
/// initialisation and after every EM iteration.
pub fn train_ubm_traced(frames: &FrameSequence, cfg: &EmConfig) -> Result<(DiagGmm, Vec<f64>)> {
    cfg.validate()?;
    let k = cfg.n_components;
    if frames.len() < 10 * k {
        return Err(Error::TooShort {
            what: "UBM training frames",
            needed: 10 * k,
            got: frames.len(),
        });
    }
    let distinct = count_distinct(frames, k);
    if distinct < k {
        return Err(Error::invalid(format!(
            "{k} components requested but only {distinct} distinct frames"
        )));
    }

    let (_, global_var) = frames.moments();
    let floor: Vec<f64> = global_var
        .iter()
        .map(|v| (cfg.floor_factor * v).max(MIN_FLOOR))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds = kmeans_pp_seeds(frames, k, &mut rng);
    let mut model = init_from_seeds(frames, &seeds, &floor)?;

    let (mut post, mut ll) = posteriors_and_loglik(&model, frames);
    let mut trace = vec![ll];
    for _ in 0..cfg.max_iterations {
        model = m_step(frames, &post, &model, &floor)?;
        let (next_post, next_ll) = posteriors_and_loglik(&model, frames);
        trace.push(next_ll);
        let gain = next_ll - ll;
        post = next_post;
        ll = next_ll;
        if gain.abs() < cfg.tolerance {
            break;
        }
    }
    if !ll.is_finite() {
        return Err(Error::Numerical("EM produced a non-finite likelihood".into()));
    }
    Ok((model, trace))
}

pub(crate) fn count_distinct(frames: &FrameSequence, enough: usize) -> usize {
    let mut seen = HashSet::new();
    for row in frames.rows() {
        seen.insert(row.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        if seen.len() >= enough {
            break;
        }
    }
    seen.len()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of k-means++ seed frames.
fn kmeans_pp_seeds(frames: &FrameSequence, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = frames.len();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = frames.rows().map(|x| sq_dist(x, frames.row(seeds[0]))).collect();
    while seeds.len() < k {
        let total: f64 = nearest.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, d) in nearest.iter().enumerate() {
            if *d <= 0.0 {
                continue;
            }
            pick = Some(i);
            if target < *d {
                break;
            }
            target -= d;
        }
        // Enough distinct frames were verified, so some frame has positive distance.
        let pick = pick.expect("a frame distinct from all seeds");
        seeds.push(pick);
        let c = frames.row(pick);
        for (d, x) in nearest.iter_mut().zip(frames.rows()) {
            *d = d.min(sq_dist(x, c));
        }
    }
    seeds
}

/// Hard-assigns every frame to its nearest seed and takes cluster moments.
fn init_from_seeds(frames: &FrameSequence, seeds: &[usize], floor: &[f64]) -> Result<DiagGmm> {
    let k = seeds.len();
    let dim = frames.dim();
    let mut data = vec![0.0; frames.len() * k];
    for (x, row) in frames.rows().zip(data.chunks_exact_mut(k)) {
        let best = seeds
            .iter()
            .enumerate()
            .map(|(j, &s)| (j, sq_dist(x, frames.row(s))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
            .unwrap_or(0);
        row[best] = 1.0;
    }
    let hard = Posteriors { data, k };
    let placeholder = DiagGmm {
        weights: vec![1.0 / k as f64; k],
        means: seeds.iter().flat_map(|&s| frames.row(s).to_vec()).collect(),
        variances: (0..k).flat_map(|_| floor.to_vec()).collect(),
        floor: floor.to_vec(),
        dim,
    };
    m_step(frames, &hard, &placeholder, floor)
}

/// Maximisation step. Components with no responsibility mass keep their
/// previous mean and variance.
fn m_step(frames: &FrameSequence, post: &Posteriors, prev: &DiagGmm, floor: &[f64]) -> Result<DiagGmm> {
    let k = post.n_components();
    let dim = frames.dim();
    let n = post.counts();
    let mut means = vec![0.0; k * dim];
    for (x, g) in frames.rows().zip(post.rows()) {
        for (j, gj) in g.iter().enumerate() {
            if *gj == 0.0 {
                continue;
            }
            for (m, xd) in means[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                *m += gj * xd;
            }
        }
    }
    let alive: Vec<bool> = n.iter().map(|&c| c > 1e-10).collect();
    for j in 0..k {
        let row = &mut means[j * dim..(j + 1) * dim];
        if alive[j] {
            row.iter_mut().for_each(|m| *m /= n[j]);
        } else {
            row.copy_from_slice(prev.mean(j));
        }
    }
    let mut variances = vec![0.0; k * dim];
    for (x, g) in frames.rows().zip(post.rows()) {
        for (j, gj) in g.iter().enumerate() {
            if *gj == 0.0 || !alive[j] {
                continue;
            }
            let mu = &means[j * dim..(j + 1) * dim];
            for ((v, xd), md) in variances[j * dim..(j + 1) * dim].iter_mut().zip(x).zip(mu) {
                *v += gj * (xd - md) * (xd - md);
            }
        }
    }
    for j in 0..k {
        let row = &mut variances[j * dim..(j + 1) * dim];
        if alive[j] {
            for (v, f) in row.iter_mut().zip(floor) {
                *v = (*v / n[j]).max(*f);
            }
        } else {
            row.copy_from_slice(prev.variance(j));
        }
    }
    let total: f64 = n.iter().sum();
    let weights = n.iter().map(|c| c / total).collect();
    DiagGmm::new(weights, means, variances, floor.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn gaussian_frames(seed: u64, n: usize, mean: &[f64], sd: &[f64]) -> FrameSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * mean.len());
        for _ in 0..n {
            for (m, s) in mean.iter().zip(sd) {
                data.push(Normal::new(*m, *s).unwrap().sample(&mut rng));
            }
        }
        FrameSequence::new(data, mean.len()).unwrap()
    }

    #[test]
    fn single_component_recovers_moments() {
        let frames = gaussian_frames(1, 1000, &[3.0, -1.0], &[1.0, 2.0]);
        let cfg = EmConfig {
            n_components: 1,
            ..Default::default()
        };
        let m = train_ubm(&frames, &cfg).unwrap();
        assert!((m.mean(0)[0] - 3.0).abs() < 0.2);
        assert!((m.mean(0)[1] + 1.0).abs() < 0.2);
        assert!((m.variance(0)[0] - 1.0).abs() < 0.25);
        assert!((m.variance(0)[1] - 4.0).abs() < 1.0);
    }

    /// Plain Lloyd k-means, used as an independent reference for the two-cluster case.
    fn kmeans_1d(xs: &[f64], mut c: [f64; 2]) -> ([f64; 2], [usize; 2]) {
        let mut counts = [0usize; 2];
        for _ in 0..100 {
            let mut sum = [0.0; 2];
            counts = [0; 2];
            for &x in xs {
                let j = usize::from((x - c[1]).abs() < (x - c[0]).abs());
                sum[j] += x;
                counts[j] += 1;
            }
            c = [sum[0] / counts[0] as f64, sum[1] / counts[1] as f64];
        }
        (c, counts)
    }

    #[test]
    fn two_separated_clusters_match_kmeans() {
        let mut data = gaussian_frames(2, 500, &[0.0], &[1.0]).as_slice().to_vec();
        data.extend_from_slice(gaussian_frames(3, 500, &[10.0], &[1.0]).as_slice());
        let (centers, counts) = kmeans_1d(&data, [data[0], data[999]]);
        let frames = FrameSequence::new(data, 1).unwrap();
        let cfg = EmConfig {
            n_components: 2,
            seed: 11,
            ..Default::default()
        };
        let m = train_ubm(&frames, &cfg).unwrap();
        let mut comps: Vec<(f64, f64)> = (0..2).map(|k| (m.mean(k)[0], m.weights()[k])).collect();
        comps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (j, (mu, w)) in comps.iter().enumerate() {
            assert!(
                (mu - centers[j]).abs() < 0.3,
                "mean {mu} vs k-means {}",
                centers[j]
            );
            assert!((w - counts[j] as f64 / 1000.0).abs() < 0.05);
            assert!((w - 0.5).abs() < 0.05);
        }
        assert!((comps[0].0).abs() < 0.3 && (comps[1].0 - 10.0).abs() < 0.3);
    }

    #[test]
    fn log_likelihood_is_monotone() {
        let frames = gaussian_frames(5, 400, &[0.0, 1.0, 2.0], &[1.0, 0.5, 3.0]);
        let cfg = EmConfig {
            n_components: 4,
            tolerance: 1e-12,
            max_iterations: 60,
            ..Default::default()
        };
        let (_, trace) = train_ubm_traced(&frames, &cfg).unwrap();
        assert!(trace.len() > 2);
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let frames = gaussian_frames(6, 300, &[0.0, 0.0], &[1.0, 1.0]);
        let cfg = EmConfig {
            n_components: 3,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(
            train_ubm(&frames, &cfg).unwrap(),
            train_ubm(&frames, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let few = gaussian_frames(7, 15, &[0.0], &[1.0]);
        let cfg = EmConfig {
            n_components: 2,
            ..Default::default()
        };
        assert!(matches!(train_ubm(&few, &cfg), Err(Error::TooShort { .. })));

        let repeated = FrameSequence::new(vec![1.0; 100], 1).unwrap();
        assert!(matches!(train_ubm(&repeated, &cfg), Err(Error::InvalidInput(_))));

        let bad = EmConfig {
            floor_factor: 0.0,
            ..cfg
        };
        assert!(train_ubm(&gaussian_frames(8, 100, &[0.0], &[1.0]), &bad).is_err());
    }

    #[test]
    fn variances_respect_floor() {
        let frames = gaussian_frames(9, 500, &[0.0, 5.0], &[1.0, 0.1]);
        let m = train_ubm(
            &frames,
            &EmConfig {
                n_components: 8,
                ..Default::default()
            },
        )
        .unwrap();
        for k in 0..8 {
            for (v, f) in m.variance(k).iter().zip(m.variance_floor()) {
                assert!(v >= f);
            }
        }
    }
}
