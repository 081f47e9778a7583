//! Total-variability modelling: Baum-Welch statistics, extractor training,
//! i-vector extraction, cosine scoring and age/gender matched references.

mod io;
mod reference;
mod train;

pub use io::{read_ivectors_csv, write_ivectors_csv};
pub use reference::{build_reference, DEFAULT_AGE_WINDOW};
pub use train::{train_total_variability, TvConfig};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::frames::{FeatureSet, FrameSequence};
use crate::gmm::{responsibilities, DiagGmm};

/// Zero-order counts and UBM-centred first-order sums for one recording set.
#[derive(Debug, Clone, PartialEq)]
pub struct BaumWelchStats {
    /// `n_k`, one per component.
    pub counts: Vec<f64>,
    /// `F_k = sum_t gamma_tk (x_t - mu_k)`, row-major `K x D`.
    pub first_order: Vec<f64>,
    pub dim: usize,
}

impl BaumWelchStats {
    pub fn new(counts: Vec<f64>, first_order: Vec<f64>, dim: usize) -> Result<Self> {
        check_dim(counts.len() * dim, first_order.len())?;
        if counts.iter().any(|n| !(*n >= 0.0) || !n.is_finite()) {
            return Err(Error::invalid(
                "zero-order statistics must be finite and non-negative",
            ));
        }
        if first_order.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid("non-finite first-order statistics"));
        }
        Ok(Self {
            counts,
            first_order,
            dim,
        })
    }

    pub fn n_components(&self) -> usize {
        self.counts.len()
    }

    pub fn total_count(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn first(&self, k: usize) -> &[f64] {
        &self.first_order[k * self.dim..(k + 1) * self.dim]
    }
}

/// Accumulates statistics of `frames` against the UBM posteriors.
pub fn accumulate_stats(ubm: &DiagGmm, frames: &FrameSequence) -> Result<BaumWelchStats> {
    let post = responsibilities(ubm, frames)?;
    let (k, d) = (ubm.n_components(), ubm.dim());
    let counts = post.counts();
    let mut first = vec![0.0; k * d];
    for (x, g) in frames.rows().zip(post.rows()) {
        for (j, gj) in g.iter().enumerate() {
            let mu = ubm.mean(j);
            for ((f, xd), md) in first[j * d..(j + 1) * d].iter_mut().zip(x).zip(mu) {
                *f += gj * (xd - md);
            }
        }
    }
    BaumWelchStats::new(counts, first, d)
}

/// A UBM together with its `(K*D) x R` total-variability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalVariabilityModel {
    ubm: DiagGmm,
    t: DMatrix<f64>,
}

impl TotalVariabilityModel {
    pub fn new(ubm: DiagGmm, t: DMatrix<f64>) -> Result<Self> {
        let sup = ubm.n_components() * ubm.dim();
        check_dim(sup, t.nrows())?;
        if t.ncols() == 0 || t.ncols() > sup {
            return Err(Error::invalid(format!("rank {} outside 1..={sup}", t.ncols())));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite total-variability matrix"));
        }
        Ok(Self { ubm, t })
    }

    pub fn ubm(&self) -> &DiagGmm {
        &self.ubm
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn rank(&self) -> usize {
        self.t.ncols()
    }

    /// Checks full column rank via the singular values of `T`.
    pub fn has_full_rank(&self) -> bool {
        let sv = self.t.clone().svd(false, false).singular_values;
        let max = sv.max();
        max > 0.0 && sv.min() > max * 1e-10
    }

    /// Posterior of the latent factor: precision `L` and mean `w`.
    pub(crate) fn posterior(&self, stats: &BaumWelchStats) -> Result<(DMatrix<f64>, DVector<f64>)> {
        check_dim(self.ubm.n_components(), stats.n_components())?;
        check_dim(self.ubm.dim(), stats.dim)?;
        let r = self.rank();
        let d = self.ubm.dim();
        let mut precision = DMatrix::<f64>::identity(r, r);
        let mut proj = DVector::<f64>::zeros(r);
        for k in 0..self.ubm.n_components() {
            let var = self.ubm.variance(k);
            let nk = stats.counts[k];
            let fk = stats.first(k);
            for dd in 0..d {
                let row = self.t.row(k * d + dd);
                let inv = 1.0 / var[dd];
                for a in 0..r {
                    proj[a] += row[a] * inv * fk[dd];
                    if nk == 0.0 {
                        continue;
                    }
                    let scaled = nk * inv * row[a];
                    for b in 0..r {
                        precision[(a, b)] += scaled * row[b];
                    }
                }
            }
        }
        let chol = precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("i-vector precision matrix is singular".into()))?;
        let w = chol.solve(&proj);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite i-vector".into()));
        }
        Ok((precision, w))
    }
}

/// Low-dimensional representation of one subject's deviation from the UBM.
#[derive(Debug, Clone, PartialEq)]
pub struct IVector {
    pub values: Vec<f64>,
    pub subject: String,
    pub feature_set: Option<FeatureSet>,
}

impl IVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite i-vector entry"));
        }
        Ok(Self {
            values,
            subject: String::new(),
            feature_set: None,
        })
    }

    pub fn with_source(mut self, subject: impl Into<String>, feature_set: FeatureSet) -> Self {
        self.subject = subject.into();
        self.feature_set = Some(feature_set);
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Posterior mean `w = L^-1 T' S^-1 F` with `L = I + T' N S^-1 T`.
pub fn extract_ivector(tv: &TotalVariabilityModel, stats: &BaumWelchStats) -> Result<IVector> {
    let (_, w) = tv.posterior(stats)?;
    IVector::new(w.iter().copied().collect())
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &IVector, b: &IVector) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let na: f64 = a.values.iter().map(|x| x * x).sum();
    let nb: f64 = b.values.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Numerical("cosine distance of a zero-norm i-vector".into()));
    }
    Ok((1.0 - dot / (na * nb).sqrt()).clamp(0.0, 2.0))
}
