use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::subject::SubjectRecord;
use crate::error::{check_dim, Error, Result};
use crate::frames::{FeatureSet, FrameSequence};
use crate::gmm::{count_distinct, gmm_distance, map_adapt, train_ubm, DiagGmm, EmConfig, MapConfig};
use crate::ivector::{
    accumulate_stats, build_reference, cosine_distance, extract_ivector, train_total_variability, IVector,
    TvConfig,
};
use crate::textfmt::{push_record, Records};

/// Which reference model produced a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gmm,
    Ivector,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gmm => "gmm",
            Family::Ivector => "ivector",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gmm" | "gmm-ubm" => Ok(Family::Gmm),
            "ivector" | "i-vector" => Ok(Family::Ivector),
            other => Err(Error::invalid(format!("unknown model family `{other}`"))),
        }
    }
}

/// Distances of every patient to the reference for one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreColumn {
    pub set: FeatureSet,
    pub family: Family,
    pub values: Vec<(String, f64)>,
    /// Patients that could not be scored, with the reason.
    pub gaps: Vec<(String, String)>,
}

impl ScoreColumn {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.iter().find(|(s, _)| s == id).map(|&(_, v)| v)
    }
}

/// A UBM over control frames standardised by the control-pool moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlReference {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub ubm: DiagGmm,
}

impl ControlReference {
    pub fn standardize(&self, frames: &FrameSequence) -> Result<FrameSequence> {
        frames.standardized(&self.shift, &self.scale)
    }

    /// The UBM text preceded by a `control-reference 1` header and the
    /// `shift`/`scale` vectors.
    pub fn to_text(&self) -> String {
        let mut out = String::from("control-reference 1\n");
        out.push_str(&format!("dims {}\n", self.shift.len()));
        push_record(&mut out, "shift", &self.shift);
        push_record(&mut out, "scale", &self.scale);
        out.push_str(&self.ubm.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rec = Records::new(text);
        rec.header("control-reference", "1")?;
        let d = rec.count("dims")?;
        if d == 0 || d > 1 << 16 {
            return Err(Error::invalid(format!("unsupported dimension {d}")));
        }
        let shift = rec.floats("shift", d)?;
        let scale = rec.floats("scale", d)?;
        if scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("scales must be positive"));
        }
        let ubm = DiagGmm::read_records(&mut rec)?;
        rec.finish()?;
        check_dim(d, ubm.dim())?;
        Ok(Self { shift, scale, ubm })
    }
}

fn control_frames<'a>(
    set: FeatureSet,
    records: &'a [SubjectRecord],
    frames: &'a [Result<FrameSequence>],
) -> Result<Vec<(&'a SubjectRecord, &'a FrameSequence)>> {
    if records.len() != frames.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            found: frames.len(),
        });
    }
    let controls: Vec<_> = records
        .iter()
        .zip(frames)
        .filter(|(r, _)| !r.is_patient())
        .filter_map(|(r, f)| f.as_ref().ok().map(|f| (r, f)))
        .collect();
    if controls.len() < 2 {
        return Err(Error::TooShort {
            what: "controls with usable frames",
            needed: 2,
            got: controls.len(),
        });
    }
    log::debug!("{set}: {} controls with frames", controls.len());
    Ok(controls)
}

/// Standardises the pooled control frames and trains the UBM on them. The
/// component count shrinks when the pool cannot support `em.n_components`.
pub fn train_control_reference(pool: &[&FrameSequence], em: &EmConfig) -> Result<ControlReference> {
    let pooled = FrameSequence::concat(&pool.iter().map(|f| (*f).clone()).collect::<Vec<_>>())?;
    let (shift, var) = pooled.moments();
    let scale: Vec<f64> = var
        .iter()
        .map(|&v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    let pooled = pooled.standardized(&shift, &scale)?;
    let k = em
        .n_components
        .min(pooled.len() / 10)
        .min(count_distinct(&pooled, em.n_components));
    if k == 0 {
        return Err(Error::TooShort {
            what: "pooled control frames",
            needed: 10,
            got: pooled.len(),
        });
    }
    if k < em.n_components {
        log::warn!("UBM reduced to {k} components for lack of control data");
    }
    let ubm = train_ubm(
        &pooled,
        &EmConfig {
            n_components: k,
            ..em.clone()
        },
    )?;
    Ok(ControlReference { shift, scale, ubm })
}

fn patient_frames<'a>(
    records: &'a [SubjectRecord],
    frames: &'a [Result<FrameSequence>],
    gaps: &mut Vec<(String, String)>,
) -> Vec<(&'a SubjectRecord, &'a FrameSequence)> {
    let mut out = Vec::new();
    for (r, f) in records.iter().zip(frames).filter(|(r, _)| r.is_patient()) {
        match f {
            Ok(f) => out.push((r, f)),
            Err(e) => gaps.push((r.id.clone(), e.to_string())),
        }
    }
    out
}

/// GMM-UBM column: a UBM on the pooled, standardised control frames, then
/// each patient is MAP-adapted and scored by [`gmm_distance`].
///
/// `frames[i]` belongs to `records[i]`; failures are recorded as gaps.
pub fn score_gmm_frames(
    set: FeatureSet,
    records: &[SubjectRecord],
    frames: &[Result<FrameSequence>],
    em: &EmConfig,
    map: &MapConfig,
) -> Result<ScoreColumn> {
    map.validate()?;
    let controls = control_frames(set, records, frames)?;
    let reference = train_control_reference(&controls.iter().map(|(_, f)| *f).collect::<Vec<_>>(), em)?;
    let mut gaps = Vec::new();
    let patients = patient_frames(records, frames, &mut gaps);
    let mut values = Vec::with_capacity(patients.len());
    for (rec, f) in patients {
        let scored = f
            .standardized(&reference.shift, &reference.scale)
            .and_then(|z| map_adapt(&reference.ubm, &z, map))
            .and_then(|adapted| gmm_distance(&reference.ubm, &adapted));
        match scored {
            Ok(d) => values.push((rec.id.clone(), d)),
            Err(e) => gaps.push((rec.id.clone(), e.to_string())),
        }
    }
    Ok(ScoreColumn {
        set,
        family: Family::Gmm,
        values,
        gaps,
    })
}

/// i-vector column: UBM and total-variability model trained on controls,
/// each patient's i-vector compared by cosine distance with the mean
/// i-vector of age- and gender-matched controls.
pub fn score_ivector_frames(
    set: FeatureSet,
    records: &[SubjectRecord],
    frames: &[Result<FrameSequence>],
    em: &EmConfig,
    tv: &TvConfig,
    age_window: f64,
) -> Result<ScoreColumn> {
    let controls = control_frames(set, records, frames)?;
    let reference = train_control_reference(&controls.iter().map(|(_, f)| *f).collect::<Vec<_>>(), em)?;
    let ubm = &reference.ubm;
    let standardize = |f: &FrameSequence| f.standardized(&reference.shift, &reference.scale);
    let stats = controls
        .iter()
        .map(|(_, f)| accumulate_stats(ubm, &standardize(f)?))
        .collect::<Result<Vec<_>>>()?;
    let rank = tv
        .rank
        .min(controls.len() - 1)
        .min(ubm.n_components() * ubm.dim())
        .max(1);
    if rank < tv.rank {
        log::warn!("{set}: total-variability rank reduced to {rank}");
    }
    let model = train_total_variability(ubm, &stats, &TvConfig { rank, ..tv.clone() })?;
    let pool = controls
        .iter()
        .zip(&stats)
        .map(|((rec, _), s)| {
            Ok((
                extract_ivector(&model, s)?.with_source(rec.id.clone(), set),
                (*rec).clone(),
            ))
        })
        .collect::<Result<Vec<(IVector, SubjectRecord)>>>()?;

    let mut gaps = Vec::new();
    let patients = patient_frames(records, frames, &mut gaps);
    let mut values = Vec::with_capacity(patients.len());
    for (rec, f) in patients {
        let scored = standardize(f)
            .and_then(|z| accumulate_stats(ubm, &z))
            .and_then(|s| extract_ivector(&model, &s))
            .and_then(|w| cosine_distance(&w, &build_reference(&pool, rec, age_window)?));
        match scored {
            Ok(d) => values.push((rec.id.clone(), d)),
            Err(e) => gaps.push((rec.id.clone(), e.to_string())),
        }
    }
    Ok(ScoreColumn {
        set,
        family: Family::Ivector,
        values,
        gaps,
    })
}

/// Patients × feature sets; `None` marks a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub family: Family,
    pub sets: Vec<FeatureSet>,
    pub subjects: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl DistanceMatrix {
    /// Assembles columns over `subjects`; ids missing from a column become gaps.
    pub fn from_columns(family: Family, subjects: Vec<String>, columns: &[ScoreColumn]) -> Result<Self> {
        if let Some(c) = columns.iter().find(|c| c.family != family) {
            return Err(Error::invalid(format!(
                "{} column mixed into a {family} matrix",
                c.family
            )));
        }
        let values = subjects
            .iter()
            .map(|id| columns.iter().map(|c| c.get(id)).collect())
            .collect();
        let dm = Self {
            family,
            sets: columns.iter().map(|c| c.set).collect(),
            subjects,
            values,
        };
        dm.validate()?;
        Ok(dm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::invalid("distance matrix has no feature sets"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.sets.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::invalid(format!("feature set {dup} appears twice")));
        }
        if self.values.len() != self.subjects.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subjects.len(),
                found: self.values.len(),
            });
        }
        let upper = match self.family {
            Family::Gmm => f64::INFINITY,
            Family::Ivector => 2.0,
        };
        for (id, row) in self.subjects.iter().zip(&self.values) {
            if row.len() != self.sets.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.sets.len(),
                    found: row.len(),
                });
            }
            if let Some(v) = row
                .iter()
                .flatten()
                .find(|v| !(**v >= 0.0 && **v <= upper) || !v.is_finite())
            {
                return Err(Error::invalid(format!("subject {id}: distance {v} out of range")));
            }
        }
        Ok(())
    }

    /// Indices of subjects with every cell present.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.subjects.len())
            .filter(|&i| self.values[i].iter().all(Option::is_some))
            .collect()
    }

    pub fn column(&self, set: FeatureSet) -> Option<Vec<Option<f64>>> {
        let j = self.sets.iter().position(|&s| s == set)?;
        Some(self.values.iter().map(|row| row[j]).collect())
    }

    /// CSV with header `id,<set>,...`; gaps are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(self.sets.iter().map(|s| s.tag().to_string()));
        w.write_record(&header)?;
        for (id, row) in self.subjects.iter().zip(&self.values) {
            let mut rec = vec![id.clone()];
            rec.extend(
                row.iter()
                    .map(|v| v.map(|v| format!("{v:.17e}")).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, family: Family) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("id") {
            return Err(Error::parse(1, "first column must be `id`"));
        }
        let sets = header
            .iter()
            .skip(1)
            .map(|h| {
                h.parse::<FeatureSet>()
                    .map_err(|e| Error::parse(1, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut subjects = Vec::new();
        let mut values = Vec::new();
        for (idx, row) in rdr.records().enumerate() {
            let row = row?;
            let line = row.position().map_or(idx + 2, |p| p.line() as usize);
            if row.len() != sets.len() + 1 {
                return Err(Error::parse(
                    line,
                    format!("expected {} columns, found {}", sets.len() + 1, row.len()),
                ));
            }
            subjects.push(row[0].to_string());
            values.push(
                row.iter()
                    .skip(1)
                    .map(|c| match c {
                        "" => Ok(None),
                        c => c
                            .parse::<f64>()
                            .map(Some)
                            .map_err(|_| Error::parse(line, format!("bad distance `{c}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let dm = Self {
            family,
            sets,
            subjects,
            values,
        };
        dm.validate()?;
        Ok(dm)
    }
}
