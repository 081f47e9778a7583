use super::{posteriors_and_loglik, DiagGmm};
use crate::error::{check_dim, Error, Result};
use crate::frames::FrameSequence;

/// Relevance-factor MAP adaptation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub relevance: f64,
    pub adapt_means: bool,
    pub adapt_variances: bool,
    pub adapt_weights: bool,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            relevance: 16.0,
            adapt_means: true,
            adapt_variances: true,
            adapt_weights: false,
        }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relevance >= 0.0) || self.relevance.is_infinite() {
            return Err(Error::invalid("relevance factor must be finite and non-negative"));
        }
        if !(self.adapt_means || self.adapt_variances || self.adapt_weights) {
            return Err(Error::invalid(
                "MAP adaptation needs at least one parameter to adapt",
            ));
        }
        Ok(())
    }
}

/// Adapts `ubm` towards `frames`.
///
/// Each component gets `alpha_k = n_k / (n_k + r)` and its parameters are
/// interpolated between the posterior-weighted data statistics and the UBM.
/// Component order is preserved, so the result stays aligned with the UBM.
pub fn map_adapt(ubm: &DiagGmm, frames: &FrameSequence, cfg: &MapConfig) -> Result<DiagGmm> {
    cfg.validate()?;
    check_dim(ubm.dim(), frames.dim())?;
    let k = ubm.n_components();
    let dim = ubm.dim();
    let (post, _) = posteriors_and_loglik(ubm, frames);
    let n = post.counts();

    let mut first = vec![0.0; k * dim];
    for (x, g) in frames.rows().zip(post.rows()) {
        for (j, gj) in g.iter().enumerate() {
            for (s, xd) in first[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                *s += gj * xd;
            }
        }
    }

    let alpha: Vec<f64> = n
        .iter()
        .map(|&nk| if nk > 0.0 { nk / (nk + cfg.relevance) } else { 0.0 })
        .collect();

    let mut means = ubm.means().to_vec();
    if cfg.adapt_means {
        for j in 0..k {
            if alpha[j] == 0.0 {
                continue;
            }
            for d in 0..dim {
                let ex = first[j * dim + d] / n[j];
                means[j * dim + d] = alpha[j] * ex + (1.0 - alpha[j]) * ubm.mean(j)[d];
            }
        }
    }

    let mut variances = ubm.variances().to_vec();
    if cfg.adapt_variances {
        // Second moment about the adapted mean, accumulated directly for accuracy.
        let mut second = vec![0.0; k * dim];
        for (x, g) in frames.rows().zip(post.rows()) {
            for (j, gj) in g.iter().enumerate() {
                let mu = &means[j * dim..(j + 1) * dim];
                for ((s, xd), md) in second[j * dim..(j + 1) * dim].iter_mut().zip(x).zip(mu) {
                    *s += gj * (xd - md) * (xd - md);
                }
            }
        }
        let floor = ubm.variance_floor();
        for j in 0..k {
            if alpha[j] == 0.0 {
                continue;
            }
            for d in 0..dim {
                let idx = j * dim + d;
                let shift = ubm.mean(j)[d] - means[idx];
                let prior = ubm.variance(j)[d] + shift * shift;
                let v = alpha[j] * second[idx] / n[j] + (1.0 - alpha[j]) * prior;
                variances[idx] = v.max(floor[d]);
            }
        }
    }

    let mut weights = ubm.weights().to_vec();
    if cfg.adapt_weights {
        let t = frames.len() as f64;
        for j in 0..k {
            weights[j] = alpha[j] * n[j] / t + (1.0 - alpha[j]) * weights[j];
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }

    DiagGmm::new(weights, means, variances, ubm.variance_floor().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::responsibilities;

    fn two_component_ubm() -> DiagGmm {
        DiagGmm::new(
            vec![0.4, 0.6],
            vec![0.0, 0.0, 4.0, 1.0],
            vec![1.0, 2.0, 1.5, 0.5],
            vec![1e-3, 1e-3],
        )
        .unwrap()
    }

    fn frames() -> FrameSequence {
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [(t * 0.37).sin() * 3.0 + 1.0, (t * 0.91).cos() + 0.5]
            })
            .collect();
        FrameSequence::from_rows(&rows).unwrap()
    }

    #[test]
    fn huge_relevance_keeps_the_ubm() {
        let ubm = two_component_ubm();
        let cfg = MapConfig {
            relevance: 1e12,
            adapt_weights: true,
            ..Default::default()
        };
        let a = map_adapt(&ubm, &frames(), &cfg).unwrap();
        for (x, y) in a.means().iter().zip(ubm.means()) {
            assert!((x - y).abs() < 1e-6);
        }
        for (x, y) in a.variances().iter().zip(ubm.variances()) {
            assert!((x - y).abs() < 1e-6);
        }
        for (x, y) in a.weights().iter().zip(ubm.weights()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_relevance_single_component_is_sample_mean() {
        let ubm = DiagGmm::new(vec![1.0], vec![10.0, -10.0], vec![1.0, 1.0], vec![1e-6, 1e-6]).unwrap();
        let f = frames();
        let cfg = MapConfig {
            relevance: 0.0,
            ..Default::default()
        };
        let a = map_adapt(&ubm, &f, &cfg).unwrap();
        let (mean, var) = f.moments();
        for d in 0..2 {
            assert!((a.mean(0)[d] - mean[d]).abs() < 1e-9);
            assert!((a.variance(0)[d] - var[d]).abs() < 1e-9);
        }
    }

    #[test]
    fn means_are_alpha_blends_of_posterior_means() {
        let ubm = two_component_ubm();
        let f = frames();
        let r = 16.0;
        let a = map_adapt(
            &ubm,
            &f,
            &MapConfig {
                relevance: r,
                ..Default::default()
            },
        )
        .unwrap();
        let post = responsibilities(&ubm, &f).unwrap();
        for k in 0..2 {
            let nk: f64 = (0..f.len()).map(|t| post.row(t)[k]).sum();
            let alpha = nk / (nk + r);
            for d in 0..2 {
                let ex: f64 = (0..f.len()).map(|t| post.row(t)[k] * f.row(t)[d]).sum::<f64>() / nk;
                let expected = alpha * ex + (1.0 - alpha) * ubm.mean(k)[d];
                assert!((a.mean(k)[d] - expected).abs() < 1e-12);
            }
        }
        assert_eq!(a.weights(), ubm.weights());
    }

    #[test]
    fn config_validation() {
        let ubm = two_component_ubm();
        let none = MapConfig {
            adapt_means: false,
            adapt_variances: false,
            adapt_weights: false,
            ..Default::default()
        };
        assert!(map_adapt(&ubm, &frames(), &none).is_err());
        let neg = MapConfig {
            relevance: -1.0,
            ..Default::default()
        };
        assert!(map_adapt(&ubm, &frames(), &neg).is_err());
        let wrong = FrameSequence::new(vec![1.0, 2.0, 3.0], 3).unwrap();
        assert!(map_adapt(&ubm, &wrong, &MapConfig::default()).is_err());
    }
}
