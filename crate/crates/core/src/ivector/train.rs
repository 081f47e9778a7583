use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BaumWelchStats, TotalVariabilityModel};
use crate::error::{check_dim, Error, Result};
use crate::gmm::DiagGmm;

#[derive(Debug, Clone, PartialEq)]
pub struct TvConfig {
    pub rank: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            rank: 16,
            iterations: 10,
            seed: 0,
        }
    }
}

impl TotalVariabilityModel {
    /// Random orthonormal columns scaled by the mean UBM standard deviation.
    pub fn initial(ubm: &DiagGmm, rank: usize, seed: u64) -> Result<Self> {
        let sup = ubm.n_components() * ubm.dim();
        if rank == 0 || rank > sup {
            return Err(Error::invalid(format!("rank {rank} outside 1..={sup}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = DMatrix::<f64>::from_fn(sup, rank, |_, _| StandardNormal.sample(&mut rng));
        let q = gauss.qr().q();
        let scale = (ubm.variances().iter().sum::<f64>() / sup as f64).sqrt();
        Self::new(ubm.clone(), q * scale)
    }
}

/// EM for the total-variability matrix with the UBM covariances held fixed.
///
/// E-step: per recording, the latent posterior precision
/// `L = I + sum_k n_k T_k' S_k^-1 T_k` and mean `w`. M-step: per component,
/// `T_k = C_k A_k^-1` with `C_k = sum F_k E[w]'` and `A_k = sum n_k E[ww']`.
/// Accumulation follows the order of `stats`, so results are reproducible.
pub fn train_total_variability(
    ubm: &DiagGmm,
    stats: &[BaumWelchStats],
    cfg: &TvConfig,
) -> Result<TotalVariabilityModel> {
    let (k, d) = (ubm.n_components(), ubm.dim());
    let sup = k * d;
    if cfg.rank == 0 || cfg.rank > sup {
        return Err(Error::invalid(format!("rank {} outside 1..={sup}", cfg.rank)));
    }
    if stats.len() < 2 || stats.len() < cfg.rank {
        return Err(Error::TooShort {
            what: "total-variability training set",
            needed: cfg.rank.max(2),
            got: stats.len(),
        });
    }
    for s in stats {
        check_dim(k, s.n_components())?;
        check_dim(d, s.dim)?;
    }
    let r = cfg.rank;
    let mut model = TotalVariabilityModel::initial(ubm, r, cfg.seed)?;
    for _ in 0..cfg.iterations {
        let mut c = DMatrix::<f64>::zeros(sup, r);
        let mut a: Vec<DMatrix<f64>> = vec![DMatrix::zeros(r, r); k];
        for s in stats {
            let (precision, w) = model.posterior(s)?;
            let cov = precision
                .cholesky()
                .ok_or_else(|| Error::Numerical("singular latent precision".into()))?
                .inverse();
            let second = &cov + &w * w.transpose();
            for j in 0..k {
                if s.counts[j] != 0.0 {
                    a[j] += &second * s.counts[j];
                }
                for dd in 0..d {
                    let f = s.first(j)[dd];
                    let mut row = c.row_mut(j * d + dd);
                    row += w.transpose() * f;
                }
            }
        }
        let mut t = model.matrix().clone();
        for j in 0..k {
            let Some(chol) = a[j].clone().cholesky() else {
                // Component never observed: keep its previous loading.
                continue;
            };
            let block = c.rows(j * d, d).transpose();
            let solved = chol.solve(&block);
            t.rows_mut(j * d, d).copy_from(&solved.transpose());
        }
        model = TotalVariabilityModel::new(ubm.clone(), t)?;
    }
    if !model.has_full_rank() {
        return Err(Error::Numerical(
            "trained total-variability matrix is rank deficient".into(),
        ));
    }
    Ok(model)
}
