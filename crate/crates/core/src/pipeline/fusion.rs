use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::metrics::{median_abs_error, pearson, spearman, Correlation};
use super::report::{EvaluationReport, Prediction, SetCoefficient};
use super::score::DistanceMatrix;
use super::subject::SubjectRecord;
use crate::error::{Error, Result};

/// Penalty used when the least-squares design is rank deficient.
pub const RIDGE_PENALTY: f64 = 1e-6;

/// Linear model on z-normalised predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// True when the ridge fallback was needed.
    pub ridge: bool,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.shift)
                .zip(&self.scale)
                .zip(&self.coefficients)
                .map(|(((x, m), s), b)| (x - m) / s * b)
                .sum::<f64>()
    }
}

/// Least squares with intercept after z-normalising every column over `rows`.
///
/// Columns and target are centred, so the intercept is the target mean and
/// a constant target yields exactly zero slopes. Falls back to ridge with
/// [`RIDGE_PENALTY`] when there are fewer rows than parameters or the
/// normal matrix is numerically singular.
pub fn fit_linear(rows: &[&[f64]], targets: &[f64]) -> Result<LinearFit> {
    let n = rows.len();
    if n == 0 || targets.len() != n {
        return Err(Error::invalid(
            "regression needs one target per row and at least one row",
        ));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("ragged regression design"));
    }
    let nf = n as f64;
    let mut shift = vec![0.0; p];
    let mut scale = vec![0.0; p];
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / nf;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf;
        shift[j] = mean;
        scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let x = DMatrix::from_fn(n, p, |i, j| (rows[i][j] - shift[j]) / scale[j]);
    let y_mean = targets.iter().sum::<f64>() / nf;
    let y = DVector::from_iterator(n, targets.iter().map(|t| t - y_mean));

    let mut gram = x.transpose() * &x;
    let rhs = x.transpose() * &y;
    let sv = gram.singular_values();
    let max_sv = sv.max();
    let rank = sv.iter().filter(|&&s| s > max_sv * p as f64 * 1e-12).count();
    let ridge = n < p + 1 || rank < p;
    if ridge {
        for j in 0..p {
            gram[(j, j)] += RIDGE_PENALTY;
        }
    }
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("regression normal matrix is not positive definite".into()))?
        .solve(&rhs);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical("non-finite regression coefficient".into()));
    }
    Ok(LinearFit {
        intercept: y_mean,
        coefficients: beta.iter().copied().collect(),
        shift,
        scale,
        ridge,
    })
}

/// Patients usable for fusion: complete rows with a score.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionData {
    pub subjects: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Matrix subjects left out for gaps or a missing score.
    pub excluded: Vec<String>,
}

impl FusionData {
    pub fn new(dm: &DistanceMatrix, records: &[SubjectRecord]) -> Result<Self> {
        dm.validate()?;
        let scores: HashMap<&str, Option<u16>> = records.iter().map(|r| (r.id.as_str(), r.score)).collect();
        let mut out = Self {
            subjects: Vec::new(),
            rows: Vec::new(),
            targets: Vec::new(),
            excluded: Vec::new(),
        };
        for (id, row) in dm.subjects.iter().zip(&dm.values) {
            let complete: Option<Vec<f64>> = row.iter().copied().collect();
            match (complete, scores.get(id.as_str()).copied().flatten()) {
                (Some(r), Some(score)) => {
                    out.subjects.push(id.clone());
                    out.rows.push(r);
                    out.targets.push(score as f64);
                }
                _ => out.excluded.push(id.clone()),
            }
        }
        if !out.excluded.is_empty() {
            log::warn!("{} subject(s) excluded from fusion", out.excluded.len());
        }
        if out.subjects.len() < 3 {
            return Err(Error::TooShort {
                what: "patients with complete distances",
                needed: 3,
                got: out.subjects.len(),
            });
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// The fit that predicts subject `held_out`: every other row, never its own.
    pub fn fold(&self, held_out: usize) -> Result<LinearFit> {
        let (rows, targets): (Vec<&[f64]>, Vec<f64>) = (0..self.len())
            .filter(|&i| i != held_out)
            .map(|i| (self.rows[i].as_slice(), self.targets[i]))
            .unzip();
        fit_linear(&rows, &targets)
    }
}

fn defined(c: Result<Correlation>, what: &str) -> Result<Option<Correlation>> {
    match c {
        Ok(c) => Ok(Some(c)),
        Err(Error::Undefined(msg)) => {
            log::warn!("{what} undefined: {msg}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Leave-one-subject-out linear fusion of the distance columns.
pub fn fuse_loso(dm: &DistanceMatrix, records: &[SubjectRecord]) -> Result<EvaluationReport> {
    let data = FusionData::new(dm, records)?;
    let mut predicted = Vec::with_capacity(data.len());
    let mut any_ridge = false;
    for i in 0..data.len() {
        let fit = data.fold(i)?;
        any_ridge |= fit.ridge;
        predicted.push(fit.predict(&data.rows[i]));
    }
    if any_ridge {
        log::warn!("rank-deficient fusion design; ridge penalty {RIDGE_PENALTY} applied");
    }
    let full = fit_linear(
        &data.rows.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        &data.targets,
    )?;

    let mut coefficients = Vec::with_capacity(dm.sets.len());
    for (j, (&set, &coefficient)) in dm.sets.iter().zip(&full.coefficients).enumerate() {
        let column: Vec<f64> = data.rows.iter().map(|r| r[j]).collect();
        let single = defined(spearman(&column, &data.targets), set.tag())?;
        coefficients.push(SetCoefficient {
            feature_set: set,
            coefficient,
            column_spearman: single.map(|c| c.coefficient),
        });
    }

    Ok(EvaluationReport {
        family: dm.family,
        n_subjects: data.len(),
        pearson: defined(pearson(&data.targets, &predicted), "pearson")?,
        spearman: defined(spearman(&data.targets, &predicted), "spearman")?,
        median_abs_error: median_abs_error(&data.targets, &predicted)?,
        intercept: full.intercept,
        coefficients,
        ridge: any_ridge || full.ridge,
        predictions: data
            .subjects
            .iter()
            .zip(data.targets.iter().zip(&predicted))
            .map(|(s, (&truth, &predicted))| Prediction {
                subject: s.clone(),
                truth,
                predicted,
            })
            .collect(),
        excluded: data.excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::FeatureSet;
    use crate::pipeline::{Family, Gender};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>], sets: &[FeatureSet]) -> DistanceMatrix {
        DistanceMatrix {
            family: Family::Gmm,
            sets: sets.to_vec(),
            subjects: (0..rows.len()).map(|i| format!("p{i}")).collect(),
            values: rows
                .iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
        }
    }

    fn patients(scores: &[u16]) -> Vec<SubjectRecord> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| SubjectRecord::patient(format!("p{i}"), Gender::F, 60.0, s).unwrap())
            .collect()
    }

    fn random_rows(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(0.0..5.0)).collect())
            .collect()
    }

    #[test]
    fn exact_linear_targets_are_recovered() {
        let rows = random_rows(20, 3, 1);
        let scores: Vec<u16> = (0..20).map(|i| 10 + 3 * i as u16).collect();
        // Pick targets first, then solve the last column so the relation is exact.
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .zip(&scores)
            .map(|(r, &s)| vec![r[0], r[1], (s as f64 - 4.0 - 2.0 * r[0] + 1.5 * r[1]) / 3.0])
            .collect();
        let sets = [FeatureSet::Harmonic, FeatureSet::Kinematic, FeatureSet::Phonation];
        let rep = fuse_loso(&matrix(&rows, &sets), &patients(&scores)).unwrap();
        for p in &rep.predictions {
            assert!((p.predicted - p.truth).abs() < 1e-6, "{p:?}");
        }
        assert!((rep.spearman.unwrap().coefficient - 1.0).abs() < 1e-12);
        assert!(!rep.ridge);
    }

    #[test]
    fn constant_targets() {
        let rows = random_rows(10, 2, 2);
        let rep = fuse_loso(
            &matrix(&rows, &[FeatureSet::Harmonic, FeatureSet::Prosody]),
            &patients(&[25; 10]),
        )
        .unwrap();
        assert!(rep.pearson.is_none());
        assert!(rep.spearman.is_none());
        assert_eq!(rep.median_abs_error, 0.0);
    }

    #[test]
    fn independent_targets_rarely_correlate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Monte-Carlo reference for 7 uniform columns and 50 patients:
        // |rho| >= 0.35 in about 12% of draws, mean rho about -0.07.
        let mut strong = 0;
        let mut sum = 0.0;
        for trial in 0..100 {
            let rows = random_rows(50, 7, 100 + trial);
            let scores: Vec<u16> = (0..50).map(|_| rng.random_range(0..=132)).collect();
            let rep = fuse_loso(&matrix(&rows, &FeatureSet::ALL), &patients(&scores)).unwrap();
            let rho = rep.spearman.unwrap().coefficient;
            sum += rho;
            if rho.abs() >= 0.35 {
                strong += 1;
            }
        }
        assert!(strong <= 20, "{strong} of 100 trials");
        assert!((sum / 100.0).abs() < 0.15, "mean {}", sum / 100.0);
    }

    #[test]
    fn held_out_row_never_enters_its_fold() {
        let rows = random_rows(12, 3, 4);
        let scores: Vec<u16> = (0..12).map(|i| (7 * i % 13) as u16 * 5).collect();
        let sets = [FeatureSet::Harmonic, FeatureSet::Kinematic, FeatureSet::Phonation];
        let clean = FusionData::new(&matrix(&rows, &sets), &patients(&scores)).unwrap();
        for i in 0..12 {
            let mut poisoned_rows = rows.clone();
            poisoned_rows[i] = vec![1e6, 0.0, 42.0];
            let mut poisoned = FusionData::new(&matrix(&poisoned_rows, &sets), &patients(&scores)).unwrap();
            poisoned.targets[i] = 132.0;
            assert_eq!(clean.fold(i).unwrap(), poisoned.fold(i).unwrap());
        }
    }

    #[test]
    fn few_patients_fall_back_to_ridge() {
        let rows = random_rows(5, 7, 5);
        let rep = fuse_loso(&matrix(&rows, &FeatureSet::ALL), &patients(&[1, 20, 30, 50, 90])).unwrap();
        assert!(rep.ridge);
        assert!(rep.predictions.iter().all(|p| p.predicted.is_finite()));
    }

    #[test]
    fn incomplete_rows_are_excluded() {
        let rows = random_rows(5, 2, 6);
        let mut dm = matrix(&rows, &[FeatureSet::Harmonic, FeatureSet::Prosody]);
        dm.values[1][0] = None;
        let rep = fuse_loso(&dm, &patients(&[1, 20, 30, 50, 90])).unwrap();
        assert_eq!(rep.n_subjects, 4);
        assert_eq!(rep.excluded, vec!["p1".to_string()]);
        dm.values[2][1] = None;
        dm.values[3][1] = None;
        assert!(fuse_loso(&dm, &patients(&[1, 20, 30, 50, 90])).is_err());
    }
}
