use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenState {
    Air,
    Surface,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub pressure: f64,
    pub azimuth: f64,
    pub altitude: f64,
    pub state: PenState,
}

/// A run of samples sharing one pen state (after singleton merging).
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub kind: PenState,
    pub samples: Vec<PenSample>,
}

impl Stroke {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn in_air(&self) -> bool {
        self.kind == PenState::Air
    }
}

/// Reads `t,x,y,pressure,azimuth,altitude,state` rows (state 0 = air,
/// 1 = surface). A non-numeric first row is taken as the header.
pub fn read_pen_stream<R: Read>(reader: R) -> Result<Vec<PenSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out: Vec<PenSample> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if rec.len() != 7 {
            return Err(Error::parse(
                line,
                format!("expected 7 columns, found {}", rec.len()),
            ));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let v = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(Error::parse(line, format!("malformed row: {e}"))),
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(line, "malformed row: non-finite value"));
        }
        let state = match v[6] {
            s if s == 0.0 => PenState::Air,
            s if s == 1.0 => PenState::Surface,
            s => {
                return Err(Error::parse(
                    line,
                    format!("malformed row: pen state {s} is not 0 or 1"),
                ))
            }
        };
        let pressure = v[3];
        if pressure < 0.0 {
            return Err(Error::parse(line, "malformed row: negative pressure"));
        }
        if (pressure == 0.0) != (state == PenState::Air) {
            return Err(Error::parse(
                line,
                format!("pressure {pressure} contradicts pen state {:?}", state),
            ));
        }
        if out.last().is_some_and(|p| v[0] <= p.t) {
            return Err(Error::parse(line, "non-monotone time"));
        }
        out.push(PenSample {
            t: v[0],
            x: v[1],
            y: v[2],
            pressure,
            azimuth: v[4],
            altitude: v[5],
            state,
        });
    }
    Ok(out)
}

pub fn parse_pen_stream(path: impl AsRef<Path>) -> Result<Vec<PenSample>> {
    read_pen_stream(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_pen_stream<W: std::io::Write>(out: W, samples: &[PenSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "pressure", "azimuth", "altitude", "state"])?;
    for s in samples {
        let state = match s.state {
            PenState::Air => "0",
            PenState::Surface => "1",
        };
        w.write_record([
            s.t.to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.pressure.to_string(),
            s.azimuth.to_string(),
            s.altitude.to_string(),
            state.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Maximal constant-state runs. A run of one sample joins the previous
/// stroke (a leading one joins the next), so a stroke may carry a stray
/// sample of the other state.
pub fn segment_strokes(samples: &[PenSample]) -> Vec<Stroke> {
    let mut strokes: Vec<Stroke> = Vec::new();
    let mut pending: Vec<PenSample> = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        let kind = samples[i].state;
        let start = i;
        while i < samples.len() && samples[i].state == kind {
            i += 1;
        }
        let run = &samples[start..i];
        match strokes.last_mut() {
            Some(last) if run.len() == 1 || last.kind == kind => last.samples.extend_from_slice(run),
            None if run.len() == 1 => pending.extend_from_slice(run),
            _ => {
                let mut s = std::mem::take(&mut pending);
                s.extend_from_slice(run);
                strokes.push(Stroke { kind, samples: s });
            }
        }
    }
    if !pending.is_empty() {
        // Only singletons were seen: keep them as one stroke.
        strokes.push(Stroke {
            kind: pending[0].state,
            samples: pending,
        });
    }
    strokes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(i: usize, state: PenState) -> PenSample {
        PenSample {
            t: i as f64 / 180.0,
            x: i as f64,
            y: 0.0,
            pressure: if state == PenState::Air { 0.0 } else { 0.5 },
            azimuth: 1.0,
            altitude: 0.8,
            state,
        }
    }

    fn runs(pattern: &[(PenState, usize)]) -> Vec<PenSample> {
        pattern
            .iter()
            .flat_map(|&(s, n)| std::iter::repeat_n(s, n))
            .enumerate()
            .map(|(i, s)| sample(i, s))
            .collect()
    }

    #[test]
    fn parses_well_formed_rows() {
        let text =
            "t,x,y,pressure,azimuth,altitude,state\n0,1,2,0.5,1,1,1\n0.01,1,2,0,1,1,0\n0.02,3,2,0.4,1,1,1\n";
        let s = read_pen_stream(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].state, PenState::Air);
    }

    #[test]
    fn rejects_bad_rows() {
        let dec = "0,1,2,0.5,1,1,1\n-0.1,1,2,0.5,1,1,1\n";
        assert!(read_pen_stream(dec.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("monotone"));
        let contra = "0,1,2,0.5,1,1,0\n";
        assert!(read_pen_stream(contra.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("contradicts"));
        let zero_on_surface = "0,1,2,0,1,1,1\n";
        assert!(read_pen_stream(zero_on_surface.as_bytes()).is_err());
        assert!(read_pen_stream("0,1,2,0.5,1,1\n".as_bytes()).is_err());
        assert!(read_pen_stream("0,1,2,0.5,1,1,2\n".as_bytes()).is_err());
        assert!(read_pen_stream("0,1,2,0.5,1,1,1\n0.1,x,2,0.5,1,1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn stroke_segmentation() {
        use PenState::*;
        assert_eq!(segment_strokes(&runs(&[(Surface, 12)])).len(), 1);
        let s = segment_strokes(&runs(&[(Surface, 10), (Air, 5), (Surface, 8)]));
        let kinds: Vec<_> = s.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, [Surface, Air, Surface]);
        assert_eq!(s.iter().map(Stroke::len).collect::<Vec<_>>(), [10, 5, 8]);
    }

    #[test]
    fn singletons_are_merged() {
        use PenState::*;
        let alt: Vec<_> = (0..9)
            .map(|i| (if i % 2 == 0 { Surface } else { Air }, 1))
            .collect();
        let s = segment_strokes(&runs(&alt));
        assert!(s.len() <= 2);
        assert_eq!(s.iter().map(Stroke::len).sum::<usize>(), 9);

        let s = segment_strokes(&runs(&[(Air, 1), (Surface, 4), (Air, 1), (Surface, 3)]));
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, Surface);
        assert_eq!(s[0].len(), 9);
        assert_eq!(s[0].samples[0].state, Air);
    }
}
