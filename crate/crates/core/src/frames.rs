//! Frame sequences: the matrix of feature vectors every extractor emits and
//! every model consumes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Speech,
    Handwriting,
    Gait,
}

/// The seven feature families scored by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Harmonic,
    Nonlinear,
    Kinematic,
    Phonation,
    Articulation,
    Prosody,
    Phonological,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 7] = [
        FeatureSet::Harmonic,
        FeatureSet::Nonlinear,
        FeatureSet::Kinematic,
        FeatureSet::Phonation,
        FeatureSet::Articulation,
        FeatureSet::Prosody,
        FeatureSet::Phonological,
    ];

    pub fn modality(self) -> Modality {
        match self {
            FeatureSet::Harmonic | FeatureSet::Nonlinear => Modality::Gait,
            FeatureSet::Kinematic => Modality::Handwriting,
            FeatureSet::Phonation
            | FeatureSet::Articulation
            | FeatureSet::Prosody
            | FeatureSet::Phonological => Modality::Speech,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Harmonic => crate::gait::HARMONIC_DIM,
            FeatureSet::Nonlinear => crate::gait::NONLINEAR_DIM,
            FeatureSet::Kinematic => crate::handwriting::KINEMATIC_DIM,
            FeatureSet::Phonation => crate::speech::PHONATION_DIM,
            FeatureSet::Articulation => crate::speech::ARTICULATION_DIM,
            FeatureSet::Prosody => crate::speech::PROSODY_DIM,
            FeatureSet::Phonological => crate::speech::PHONOLOGICAL_DIM,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FeatureSet::Harmonic => "harmonic",
            FeatureSet::Nonlinear => "nonlinear",
            FeatureSet::Kinematic => "kinematic",
            FeatureSet::Phonation => "phonation",
            FeatureSet::Articulation => "articulation",
            FeatureSet::Prosody => "prosody",
            FeatureSet::Phonological => "phonological",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|fs| fs.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown feature set `{s}`")))
    }
}

/// A T×D row-major matrix of finite feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f64>,
    dim: usize,
    frame_period: f64,
    feature_set: Option<FeatureSet>,
}

impl FrameSequence {
    /// Builds a sequence from row-major data. Requires at least one frame and finite values.
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("frame dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::TooShort {
                what: "frame sequence",
                needed: 1,
                got: 0,
            });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not divide into frames of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value in frame {}", pos / dim)));
        }
        Ok(Self {
            data,
            dim,
            frame_period: 0.0,
            feature_set: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, dim)
    }

    /// Tags the sequence with its feature set, checking the declared dimension.
    pub fn with_feature_set(mut self, fs: FeatureSet) -> Result<Self> {
        if fs.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: fs.dim(),
                found: self.dim,
            });
        }
        self.feature_set = Some(fs);
        Ok(self)
    }

    pub fn with_frame_period(mut self, seconds: f64) -> Self {
        self.frame_period = seconds;
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn feature_set(&self) -> Option<FeatureSet> {
        self.feature_set
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Stacks sequences of equal dimension. The result keeps the first sequence's tags.
    pub fn concat(parts: &[FrameSequence]) -> Result<Self> {
        let first = parts.first().ok_or(Error::TooShort {
            what: "frame sequence list",
            needed: 1,
            got: 0,
        })?;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        for p in parts {
            if p.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    expected: first.dim,
                    found: p.dim,
                });
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            data,
            dim: first.dim,
            frame_period: first.frame_period,
            feature_set: first.feature_set,
        })
    }

    /// Per-dimension mean and (population) variance.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len() as f64;
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; self.dim];
        for row in self.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        (mean, var)
    }

    /// Applies `(x - shift) / scale` column-wise.
    pub fn standardized(&self, shift: &[f64], scale: &[f64]) -> Result<Self> {
        crate::error::check_dim(self.dim, shift.len())?;
        crate::error::check_dim(self.dim, scale.len())?;
        let data = self
            .data
            .chunks_exact(self.dim)
            .flat_map(|row| row.iter().zip(shift).zip(scale).map(|((x, s), c)| (x - s) / c))
            .collect();
        Ok(Self { data, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(FrameSequence::new(vec![], 2).is_err());
        assert!(FrameSequence::new(vec![1.0, f64::NAN], 2).is_err());
        assert!(FrameSequence::new(vec![1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn feature_set_dimension_is_checked() {
        let fs = FrameSequence::new(vec![0.0; 13], 13).unwrap();
        assert!(fs.clone().with_feature_set(FeatureSet::Prosody).is_ok());
        assert!(fs.with_feature_set(FeatureSet::Phonation).is_err());
    }

    #[test]
    fn tags_parse_back() {
        for fs in FeatureSet::ALL {
            assert_eq!(fs.tag().parse::<FeatureSet>().unwrap(), fs);
        }
        assert!("gait".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn moments_of_two_rows() {
        let fs = FrameSequence::from_rows(&[[1.0, 0.0], [3.0, 4.0]]).unwrap();
        let (m, v) = fs.moments();
        assert_eq!(m, vec![2.0, 2.0]);
        assert_eq!(v, vec![1.0, 4.0]);
    }
}
