use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::Correlation;
use super::score::Family;
use crate::error::Result;
use crate::frames::FeatureSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject: String,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCoefficient {
    pub feature_set: FeatureSet,
    /// Slope on the z-normalised distance, from the fit on every patient.
    pub coefficient: f64,
    /// Spearman correlation of this distance column alone with the score.
    pub column_spearman: Option<f64>,
}

/// Outcome of a fusion run. `None` correlations were undefined (constant input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub family: Family,
    pub n_subjects: usize,
    pub pearson: Option<Correlation>,
    pub spearman: Option<Correlation>,
    pub median_abs_error: f64,
    pub intercept: f64,
    pub coefficients: Vec<SetCoefficient>,
    pub ridge: bool,
    pub predictions: Vec<Prediction>,
    pub excluded: Vec<String>,
}

/// File names written by [`emit_report`].
pub const SCATTER_FILE: &str = "predictions.csv";
pub const COEFFICIENT_FILE: &str = "coefficients.csv";
pub const SUMMARY_FILE: &str = "summary.json";

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Best Spearman correlation of any single distance column.
    pub fn best_column_spearman(&self) -> Option<f64> {
        self.coefficients
            .iter()
            .filter_map(|c| c.column_spearman)
            .max_by(f64::total_cmp)
    }
}

/// Writes the (truth, predicted) scatter, the per-set coefficients and the
/// full report as JSON into `dir`, creating it if needed.
pub fn emit_report(report: &EvaluationReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let scatter = dir.join(SCATTER_FILE);
    let mut w = csv::Writer::from_path(&scatter)?;
    w.write_record(["subject", "truth", "predicted"])?;
    for p in &report.predictions {
        w.write_record([p.subject.clone(), p.truth.to_string(), p.predicted.to_string()])?;
    }
    w.flush()?;

    let coefs = dir.join(COEFFICIENT_FILE);
    let mut w = csv::Writer::from_path(&coefs)?;
    w.write_record(["feature_set", "coefficient", "column_spearman"])?;
    for c in &report.coefficients {
        w.write_record([
            c.feature_set.tag().to_string(),
            c.coefficient.to_string(),
            c.column_spearman.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let summary = dir.join(SUMMARY_FILE);
    std::fs::write(&summary, report.to_json()? + "\n")?;
    Ok(vec![scatter, coefs, summary])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(n: usize) -> EvaluationReport {
        EvaluationReport {
            family: Family::Gmm,
            n_subjects: n,
            pearson: Some(Correlation {
                coefficient: 0.1 + 0.2,
                p_value: 1.0 / 3.0,
            }),
            spearman: None,
            median_abs_error: std::f64::consts::PI,
            intercept: 30.5,
            coefficients: FeatureSet::ALL
                .iter()
                .enumerate()
                .map(|(i, &fs)| SetCoefficient {
                    feature_set: fs,
                    coefficient: (i as f64).sqrt(),
                    column_spearman: if i == 2 { None } else { Some(-0.1 * i as f64) },
                })
                .collect(),
            ridge: false,
            predictions: (0..n)
                .map(|i| Prediction {
                    subject: format!("p{i}"),
                    truth: i as f64,
                    predicted: i as f64 * 1.1,
                })
                .collect(),
            excluded: vec![],
        }
    }

    #[test]
    fn emitted_files() {
        let dir = tempfile::tempdir().unwrap();
        let rep = report(3);
        let files = emit_report(&rep, dir.path().join("out")).unwrap();
        assert_eq!(files.len(), 3);
        let scatter = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(scatter.lines().count(), 1 + 3);
        let coefs = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(coefs.lines().count(), 1 + 7);
        let back = EvaluationReport::load(&files[2]).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.median_abs_error.to_bits(), rep.median_abs_error.to_bits());
        assert_eq!(rep.best_column_spearman(), Some(0.0));
    }

    #[test]
    fn unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        assert!(emit_report(&report(3), blocker.join("sub")).is_err());
    }
}
