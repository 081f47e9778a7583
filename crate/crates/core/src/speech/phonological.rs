use std::io::Read;
use std::path::Path;

use super::PHONOLOGICAL_DIM;
use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};

/// Reads a posterior stream: a time column followed by 18 posteriors in
/// `[0, 1]`, with an optional header row. Time must strictly increase.
pub fn parse_phonological<R: Read>(reader: R) -> Result<FrameSequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut times: Vec<f64> = Vec::new();
    let mut data = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if rec.len() != PHONOLOGICAL_DIM + 1 {
            return Err(Error::parse(
                line,
                format!(
                    "wrong column count: expected {}, found {}",
                    PHONOLOGICAL_DIM + 1,
                    rec.len()
                ),
            ));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(Error::parse(line, format!("bad number: {e}"))),
        };
        let t = values[0];
        if !t.is_finite() {
            return Err(Error::parse(line, "non-finite time"));
        }
        if times.last().is_some_and(|&prev| t <= prev) {
            return Err(Error::parse(line, "non-monotone time"));
        }
        if let Some(bad) = values[1..].iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::parse(line, format!("posterior {bad} out of range [0, 1]")));
        }
        times.push(t);
        data.extend_from_slice(&values[1..]);
    }
    if times.is_empty() {
        return Err(Error::invalid("phonological stream has no frames"));
    }
    let period = if times.len() > 1 {
        (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
    } else {
        0.0
    };
    Ok(FrameSequence::new(data, PHONOLOGICAL_DIM)?
        .with_feature_set(FeatureSet::Phonological)?
        .with_frame_period(period))
}

pub fn load_phonological(path: impl AsRef<Path>) -> Result<FrameSequence> {
    parse_phonological(std::io::BufReader::new(std::fs::File::open(path)?))
}
