use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::subject::{Gender, Group, SubjectRecord};
use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};
use crate::gait::{harmonic_sequence, nonlinear_sequence, InertialRecording};
use crate::handwriting::{kinematic_features, read_pen_stream, segment_strokes, Origin};
use crate::speech::{
    articulation_features, detect_onsets, estimate_f0, load_phonological, phonation_features,
    prosody_features, segment_voiced, SpeechRecording, PROSODY_NODES,
};

/// A kind of file found in a subject directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Speech,
    Phonological,
    Handwriting,
    Gait,
}

impl Source {
    pub const ALL: [Source; 4] = [
        Source::Speech,
        Source::Phonological,
        Source::Handwriting,
        Source::Gait,
    ];

    /// Subdirectory of a subject folder holding this source.
    pub fn dir_name(self) -> &'static str {
        match self {
            Source::Speech => "speech",
            Source::Phonological => "phonological",
            Source::Handwriting => "handwriting",
            Source::Gait => "gait",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Source::Speech => "wav",
            _ => "csv",
        }
    }

    pub fn of(set: FeatureSet) -> Source {
        match set {
            FeatureSet::Harmonic | FeatureSet::Nonlinear => Source::Gait,
            FeatureSet::Kinematic => Source::Handwriting,
            FeatureSet::Phonological => Source::Phonological,
            FeatureSet::Phonation | FeatureSet::Articulation | FeatureSet::Prosody => Source::Speech,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEntry {
    pub record: SubjectRecord,
    pub files: BTreeMap<Source, Vec<PathBuf>>,
}

impl SubjectEntry {
    pub fn files(&self, source: Source) -> &[PathBuf] {
        self.files.get(&source).map_or(&[], Vec::as_slice)
    }
}

/// Validated subjects with the files found for each of them, in metadata order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub root: PathBuf,
    pub subjects: Vec<SubjectEntry>,
    /// Subject/source pairs without any file.
    pub gaps: Vec<(String, Source)>,
}

impl Corpus {
    pub fn records(&self) -> Vec<SubjectRecord> {
        self.subjects.iter().map(|s| s.record.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&SubjectEntry> {
        self.subjects.iter().find(|s| s.record.id == id)
    }
}

/// Parses `id,group,gender,age,updrs` rows (header required).
///
/// A control row that carries a score is accepted with a warning and the
/// score is dropped; a patient row without one is an error.
pub fn parse_metadata<R: Read>(reader: R) -> Result<Vec<SubjectRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    if header != ["id", "group", "gender", "age", "updrs"] {
        return Err(Error::parse(
            1,
            format!(
                "expected header id,group,gender,age,updrs, found {}",
                header.join(",")
            ),
        ));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(idx + 2, |p| p.line() as usize);
        if row.len() != 5 {
            return Err(Error::parse(
                line,
                format!("expected 5 columns, found {}", row.len()),
            ));
        }
        let id = row[0].to_string();
        let group: Group = row[1]
            .parse()
            .map_err(|e: Error| Error::parse(line, e.to_string()))?;
        let gender: Gender = row[2]
            .parse()
            .map_err(|e: Error| Error::parse(line, e.to_string()))?;
        let age: f64 = row[3]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad age `{}`", &row[3])))?;
        let mut score = match &row[4] {
            "" => None,
            s => Some(
                s.parse::<u16>()
                    .map_err(|_| Error::parse(line, format!("bad score `{s}`")))?,
            ),
        };
        if group == Group::Control && score.is_some() {
            log::warn!("control {id} has a severity score; ignored");
            score = None;
        }
        let rec = SubjectRecord::new(id, group, gender, age, score)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::parse(line, format!("duplicate subject id `{}`", rec.id)));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::invalid("metadata lists no subjects"));
    }
    Ok(out)
}

pub fn write_metadata<W: std::io::Write>(out: W, records: &[SubjectRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "group", "gender", "age", "updrs"])?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.group.to_string(),
            r.gender.to_string(),
            r.age.to_string(),
            r.score.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads the metadata and indexes `<root>/<id>/<source>/*` for every subject.
pub fn ingest_corpus(root: impl AsRef<Path>, metadata: impl AsRef<Path>) -> Result<Corpus> {
    let root = root.as_ref().to_path_buf();
    let records = parse_metadata(std::io::BufReader::new(std::fs::File::open(metadata)?))?;
    let mut subjects = Vec::with_capacity(records.len());
    let mut gaps = Vec::new();
    for record in records {
        let mut files = BTreeMap::new();
        for source in Source::ALL {
            let found = list_files(&root.join(&record.id).join(source.dir_name()), source.extension())?;
            if found.is_empty() {
                gaps.push((record.id.clone(), source));
            } else {
                files.insert(source, found);
            }
        }
        subjects.push(SubjectEntry { record, files });
    }
    Ok(Corpus { root, subjects, gaps })
}

fn speech_file(path: &Path, set: FeatureSet) -> Result<FrameSequence> {
    let rec = SpeechRecording::load(path)?;
    rec.check_duration()?;
    let contour = estimate_f0(&rec)?;
    match set {
        FeatureSet::Phonation => phonation_features(&rec, &contour),
        FeatureSet::Articulation => articulation_features(&detect_onsets(&rec, &contour), rec.sample_rate),
        FeatureSet::Prosody => {
            let segments: Vec<_> = segment_voiced(&contour)
                .into_iter()
                .filter(|s| s.n_frames >= PROSODY_NODES)
                .collect();
            prosody_features(&rec, &segments, &contour)
        }
        _ => unreachable!("not a speech feature set"),
    }
}

fn file_features(path: &Path, set: FeatureSet) -> Result<FrameSequence> {
    match set {
        FeatureSet::Phonation | FeatureSet::Articulation | FeatureSet::Prosody => speech_file(path, set),
        FeatureSet::Phonological => load_phonological(path),
        FeatureSet::Kinematic => {
            let samples = read_pen_stream(std::io::BufReader::new(std::fs::File::open(path)?))?;
            kinematic_features(&segment_strokes(&samples), Origin::Centroid)
        }
        FeatureSet::Harmonic => harmonic_sequence(&InertialRecording::load(path)?),
        FeatureSet::Nonlinear => nonlinear_sequence(&InertialRecording::load(path)?),
    }
}

/// Frames of one feature set for one subject, stacked over all their files.
///
/// Files that fail are skipped with a warning; the subject fails only when
/// none of their files yields frames.
pub fn extract_subject(entry: &SubjectEntry, set: FeatureSet) -> Result<FrameSequence> {
    let files = entry.files(Source::of(set));
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "subject {} has no {} files",
            entry.record.id,
            Source::of(set)
        )));
    }
    let mut parts = Vec::new();
    let mut last_err = None;
    for path in files {
        match file_features(path, set) {
            Ok(f) => parts.push(f),
            Err(e) => {
                log::warn!("{set} features of {}: {e}", path.display());
                last_err = Some(e);
            }
        }
    }
    if parts.is_empty() {
        return Err(last_err.expect("at least one file was tried"));
    }
    FrameSequence::concat(&parts)?.with_feature_set(set)
}

/// Features of one set for every subject, extracted in parallel, in corpus order.
pub fn extract_feature_set(corpus: &Corpus, set: FeatureSet) -> Vec<Result<FrameSequence>> {
    corpus
        .subjects
        .par_iter()
        .map(|entry| extract_subject(entry, set))
        .collect()
}
