//! The checked-in fuzz seeds must stay valid inputs, otherwise the fuzzers
//! start from nothing but rejections.

use std::path::PathBuf;

use usermodel::gait::InertialRecording;
use usermodel::gmm::DiagGmm;
use usermodel::handwriting::read_pen_stream;
use usermodel::ivector::{read_ivectors_csv, TotalVariabilityModel};
use usermodel::pipeline::{
    parse_metadata, ControlReference, DistanceMatrix, EvaluationReport, Family, PipelineConfig,
};
use usermodel::speech::{parse_phonological, SpeechRecording};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<Vec<u8>> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{dir:?}: {e}"))
        .map(|e| std::fs::read(e.unwrap().path()).unwrap())
        .collect();
    assert!(!out.is_empty(), "no seeds for {target}");
    out.sort();
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn every_seed_parses() {
    for s in seeds("gmm_text") {
        DiagGmm::from_text(text(&s)).unwrap();
    }
    for s in seeds("tv_text") {
        TotalVariabilityModel::from_text(text(&s)).unwrap();
    }
    for s in seeds("reference_text") {
        ControlReference::from_text(text(&s)).unwrap();
    }
    for s in seeds("ivector_csv") {
        read_ivectors_csv(s.as_slice()).unwrap();
    }
    for s in seeds("phonological_csv") {
        parse_phonological(s.as_slice()).unwrap();
    }
    for s in seeds("pen_csv") {
        read_pen_stream(s.as_slice()).unwrap();
    }
    for s in seeds("gait_csv") {
        InertialRecording::read_csv(s.as_slice()).unwrap();
    }
    for s in seeds("metadata_csv") {
        parse_metadata(s.as_slice()).unwrap();
    }
    for s in seeds("distance_csv") {
        DistanceMatrix::read_csv(s.as_slice(), Family::Gmm).unwrap();
    }
    for s in seeds("pipeline_config") {
        PipelineConfig::parse(text(&s)).unwrap();
    }
    for s in seeds("report_json") {
        EvaluationReport::from_json(text(&s)).unwrap();
    }
    for s in seeds("wav") {
        SpeechRecording::from_wav_reader(std::io::Cursor::new(s)).unwrap();
    }
}
