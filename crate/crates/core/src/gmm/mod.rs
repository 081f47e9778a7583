//! Diagonal-covariance Gaussian mixtures: EM training of a universal background
//! model, relevance-factor MAP adaptation and Bhattacharyya scoring.

mod distance;
mod em;
mod io;
mod map;

pub use distance::{bhattacharyya_gaussian, gmm_distance};
pub(crate) use em::count_distinct;
pub use em::{train_ubm, train_ubm_traced, EmConfig};
pub use map::{map_adapt, MapConfig};

use crate::error::{check_dim, Error, Result};
use crate::frames::FrameSequence;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Weighted mixture of `K` diagonal Gaussians in `D` dimensions.
///
/// Means and variances are stored row-major, one row per component. The
/// variance floor used during training travels with the model so that
/// adapted models can honour the same lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGmm {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    floor: Vec<f64>,
    dim: usize,
}

impl DiagGmm {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>, floor: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        let dim = floor.len();
        if k == 0 || dim == 0 {
            return Err(Error::invalid("a mixture needs K >= 1 and D >= 1"));
        }
        check_dim(k * dim, means.len())?;
        check_dim(k * dim, variances.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("mixture weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("non-finite component mean"));
        }
        if floor.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::invalid("variance floor must be finite and positive"));
        }
        for (i, v) in variances.iter().enumerate() {
            if !v.is_finite() || *v < floor[i % dim] {
                return Err(Error::invalid(format!(
                    "variance {v} of component {} below floor {}",
                    i / dim,
                    floor[i % dim]
                )));
            }
        }
        Ok(Self {
            weights,
            means,
            variances,
            floor,
            dim,
        })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn variance_floor(&self) -> &[f64] {
        &self.floor
    }

    /// `ln w_k - 0.5 * sum_d ln(2 pi var_kd)` for every component.
    fn log_normalizers(&self) -> Vec<f64> {
        (0..self.n_components())
            .map(|k| {
                let det: f64 = self.variance(k).iter().map(|v| LN_2PI + v.ln()).sum();
                self.weights[k].ln() - 0.5 * det
            })
            .collect()
    }

    /// Fills `out[k]` with `ln(w_k N(x; mu_k, var_k))` and returns their log-sum-exp.
    fn joint_log_densities(&self, normalizers: &[f64], x: &[f64], out: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (k, slot) in out.iter_mut().enumerate() {
            let mut maha = 0.0;
            for ((xd, md), vd) in x.iter().zip(self.mean(k)).zip(self.variance(k)) {
                let diff = xd - md;
                maha += diff * diff / vd;
            }
            *slot = normalizers[k] - 0.5 * maha;
            max = max.max(*slot);
        }
        let sum: f64 = out.iter().map(|l| (l - max).exp()).sum();
        max + sum.ln()
    }

    fn check_frames(&self, frames: &FrameSequence) -> Result<()> {
        check_dim(self.dim, frames.dim())
    }
}

/// Per-frame component posteriors, `T` rows of `K` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors {
    data: Vec<f64>,
    k: usize,
}

impl Posteriors {
    pub fn n_frames(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn n_components(&self) -> usize {
        self.k
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.k..(t + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.k)
    }

    /// Soft counts `n_k = sum_t gamma_tk`.
    pub fn counts(&self) -> Vec<f64> {
        let mut n = vec![0.0; self.k];
        for row in self.rows() {
            for (acc, g) in n.iter_mut().zip(row) {
                *acc += g;
            }
        }
        n
    }
}

/// Mean per-frame log-likelihood of `frames` under `model`.
pub fn log_likelihood(model: &DiagGmm, frames: &FrameSequence) -> Result<f64> {
    model.check_frames(frames)?;
    let norms = model.log_normalizers();
    let mut scratch = vec![0.0; model.n_components()];
    let total: f64 = frames
        .rows()
        .map(|x| model.joint_log_densities(&norms, x, &mut scratch))
        .sum();
    Ok(total / frames.len() as f64)
}

/// Component posteriors for every frame.
pub fn responsibilities(model: &DiagGmm, frames: &FrameSequence) -> Result<Posteriors> {
    model.check_frames(frames)?;
    let (post, _) = posteriors_and_loglik(model, frames);
    Ok(post)
}

pub(crate) fn posteriors_and_loglik(model: &DiagGmm, frames: &FrameSequence) -> (Posteriors, f64) {
    let k = model.n_components();
    let norms = model.log_normalizers();
    let mut data = vec![0.0; frames.len() * k];
    let mut total = 0.0;
    for (x, row) in frames.rows().zip(data.chunks_exact_mut(k)) {
        let lse = model.joint_log_densities(&norms, x, row);
        total += lse;
        for g in row.iter_mut() {
            *g = (*g - lse).exp();
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|g| *g /= s);
    }
    (Posteriors { data, k }, total / frames.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_1d() -> DiagGmm {
        DiagGmm::new(vec![1.0], vec![0.0], vec![1.0], vec![1e-6]).unwrap()
    }

    fn symmetric_pair(separation: f64) -> DiagGmm {
        DiagGmm::new(vec![0.5, 0.5], vec![0.0, separation], vec![1.0, 1.0], vec![1e-6]).unwrap()
    }

    fn single(x: f64) -> FrameSequence {
        FrameSequence::new(vec![x], 1).unwrap()
    }

    #[test]
    fn standard_normal_log_density() {
        let m = unit_1d();
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((log_likelihood(&m, &single(0.0)).unwrap() + half_ln_2pi).abs() < 1e-12);
        assert!((log_likelihood(&m, &single(1.0)).unwrap() + half_ln_2pi + 0.5).abs() < 1e-12);
    }

    #[test]
    fn equidistant_frame_matches_direct_density() {
        let m = symmetric_pair(2.0);
        // Both components see the frame at distance 1: 0.5 N(1) + 0.5 N(1) = N(1).
        let direct = (0.5 * (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt() * 2.0).ln();
        assert!((log_likelihood(&m, &single(1.0)).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn posterior_rows() {
        let one =
            responsibilities(&unit_1d(), &FrameSequence::new(vec![-3.0, 0.5, 9.0], 1).unwrap()).unwrap();
        assert!(one.rows().all(|r| r == [1.0]));

        let far = symmetric_pair(20.0);
        assert!(responsibilities(&far, &single(0.0)).unwrap().row(0)[0] > 0.999);

        let mid = responsibilities(&symmetric_pair(4.0), &single(2.0)).unwrap();
        assert!((mid.row(0)[0] - 0.5).abs() < 1e-9);
        assert!((mid.row(0)[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let frames = FrameSequence::new(vec![0.0, 0.0], 2).unwrap();
        assert!(matches!(
            log_likelihood(&unit_1d(), &frames),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(responsibilities(&unit_1d(), &frames).is_err());
    }

    #[test]
    fn constructor_enforces_invariants() {
        assert!(DiagGmm::new(vec![0.6, 0.6], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.1]).is_err());
        assert!(DiagGmm::new(vec![1.0], vec![0.0], vec![0.01], vec![0.1]).is_err());
        assert!(DiagGmm::new(vec![1.0], vec![0.0, 1.0], vec![1.0], vec![0.1]).is_err());
        assert!(DiagGmm::new(vec![], vec![], vec![], vec![0.1]).is_err());
    }
}
