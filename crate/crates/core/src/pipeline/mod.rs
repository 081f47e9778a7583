//! Corpus ingestion, per-subject scoring against the control reference,
//! leave-one-subject-out fusion and evaluation.

mod config;
mod corpus;
mod fusion;
mod metrics;
mod report;
mod score;
mod subject;

pub use config::{PipelineConfig, CONFIG_KEYS};
pub use corpus::{
    extract_feature_set, extract_subject, ingest_corpus, parse_metadata, write_metadata, Corpus, Source,
    SubjectEntry,
};
pub use fusion::{fit_linear, fuse_loso, FusionData, LinearFit, RIDGE_PENALTY};
pub use metrics::{average_ranks, median_abs_error, pearson, spearman, Correlation};
pub use report::{
    emit_report, EvaluationReport, Prediction, SetCoefficient, COEFFICIENT_FILE, SCATTER_FILE, SUMMARY_FILE,
};
pub use score::{
    score_gmm_frames, score_ivector_frames, train_control_reference, ControlReference, DistanceMatrix,
    Family, ScoreColumn,
};
pub use subject::{Gender, Group, SubjectRecord, MAX_SCORE};

use rayon::prelude::*;

use crate::error::Result;
use crate::frames::FeatureSet;
use crate::gmm::{EmConfig, MapConfig};
use crate::ivector::TvConfig;

/// Control reference (standardisation and UBM) for one feature set.
pub fn control_reference(corpus: &Corpus, set: FeatureSet, em: &EmConfig) -> Result<ControlReference> {
    let frames = corpus
        .subjects
        .par_iter()
        .filter(|s| !s.record.is_patient())
        .map(|s| extract_subject(s, set))
        .collect::<Vec<_>>();
    let pool: Vec<&crate::frames::FrameSequence> = frames.iter().filter_map(|f| f.as_ref().ok()).collect();
    if pool.len() < 2 {
        return Err(crate::Error::TooShort {
            what: "controls with usable frames",
            needed: 2,
            got: pool.len(),
        });
    }
    train_control_reference(&pool, em)
}

pub fn score_gmm(corpus: &Corpus, set: FeatureSet, em: &EmConfig, map: &MapConfig) -> Result<ScoreColumn> {
    score_gmm_frames(set, &corpus.records(), &extract_feature_set(corpus, set), em, map)
}

pub fn score_ivector(
    corpus: &Corpus,
    set: FeatureSet,
    em: &EmConfig,
    tv: &TvConfig,
    age_window: f64,
) -> Result<ScoreColumn> {
    score_ivector_frames(
        set,
        &corpus.records(),
        &extract_feature_set(corpus, set),
        em,
        tv,
        age_window,
    )
}

/// One column per feature set, scored concurrently, over all patients.
pub fn score_corpus(
    corpus: &Corpus,
    family: Family,
    sets: &[FeatureSet],
    cfg: &PipelineConfig,
) -> Result<DistanceMatrix> {
    cfg.validate()?;
    let columns = sets
        .par_iter()
        .map(|&set| match family {
            Family::Gmm => score_gmm(corpus, set, &cfg.em, &cfg.map),
            Family::Ivector => score_ivector(corpus, set, &cfg.em, &cfg.tv, cfg.age_window),
        })
        .collect::<Result<Vec<_>>>()?;
    for col in &columns {
        for (id, why) in &col.gaps {
            log::warn!("{} distance missing for {id}: {why}", col.set);
        }
    }
    let patients = corpus
        .subjects
        .iter()
        .filter(|s| s.record.is_patient())
        .map(|s| s.record.id.clone())
        .collect();
    DistanceMatrix::from_columns(family, patients, &columns)
}

/// Scores the corpus and fuses the distances.
pub fn run_pipeline(
    corpus: &Corpus,
    family: Family,
    sets: &[FeatureSet],
    cfg: &PipelineConfig,
) -> Result<(DistanceMatrix, EvaluationReport)> {
    let dm = score_corpus(corpus, family, sets, cfg)?;
    let report = fuse_loso(&dm, &corpus.records())?;
    Ok((dm, report))
}
