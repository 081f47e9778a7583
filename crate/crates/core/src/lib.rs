//! Healthy-reference user models for multimodal motor biosignals.
//!
//! Feature extractors turn speech, handwriting and gait recordings into
//! [`FrameSequence`]s. A reference population of control subjects trains a
//! GMM universal background model (and an i-vector extractor); each patient
//! is scored by how far their adapted model or i-vector sits from the
//! reference, and the per-feature-set distances are fused by
//! leave-one-subject-out linear regression to predict a severity score.

mod dsp;
pub mod error;
pub mod frames;
pub mod gait;
pub mod gmm;
pub mod handwriting;
pub mod ivector;
pub mod pipeline;
pub mod speech;
pub mod synth;
mod textfmt;

pub use error::{Error, Result};
pub use frames::{FeatureSet, FrameSequence, Modality};
