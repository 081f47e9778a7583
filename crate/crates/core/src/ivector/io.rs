use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{IVector, TotalVariabilityModel};
use crate::error::{Error, Result};
use crate::frames::FeatureSet;
use crate::gmm::DiagGmm;
use crate::textfmt::{push_record, Records};

impl TotalVariabilityModel {
    /// The UBM in its own text form, followed by `rank` and one `t` record
    /// per supervector row.
    pub fn to_text(&self) -> String {
        let mut out = String::from("tv-model 1\n");
        out.push_str(&self.ubm.to_text());
        out.push_str(&format!("rank {}\n", self.rank()));
        let mut row = vec![0.0; self.rank()];
        for i in 0..self.t.nrows() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = self.t[(i, j)];
            }
            push_record(&mut out, "t", &row);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rec = Records::new(text);
        rec.header("tv-model", "1")?;
        let ubm = DiagGmm::read_records(&mut rec)?;
        let rank = rec.count("rank")?;
        let rows = ubm.n_components() * ubm.dim();
        if rank == 0 || rank > rows {
            return Err(Error::invalid(format!("rank {rank} outside 1..={rows}")));
        }
        let mut values = Vec::new();
        for _ in 0..rows {
            values.extend(rec.floats("t", rank)?);
        }
        rec.finish()?;
        Self::new(ubm, DMatrix::from_row_slice(rows, rank, &values))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Writes `subject,feature_set,v0..v{R-1}` rows with a header line.
pub fn write_ivectors_csv<W: Write>(out: W, ivectors: &[IVector]) -> Result<()> {
    let dim = ivectors.first().map(IVector::dim).unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject".to_string(), "feature_set".to_string()];
    header.extend((0..dim).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for iv in ivectors {
        if iv.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: iv.dim(),
            });
        }
        let mut row = vec![
            iv.subject.clone(),
            iv.feature_set.map(|f| f.tag().to_string()).unwrap_or_default(),
        ];
        row.extend(iv.values.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ivectors_csv<R: Read>(input: R) -> Result<Vec<IVector>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let width = reader.headers()?.len();
    if width < 3 {
        return Err(Error::parse(
            1,
            "i-vector CSV needs subject, feature_set and values",
        ));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != width {
            return Err(Error::parse(line, "wrong column count"));
        }
        let values = record
            .iter()
            .skip(2)
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("bad number `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let feature_set = match record[1].trim() {
            "" => None,
            tag => Some(tag.parse::<FeatureSet>()?),
        };
        let mut iv = IVector::new(values)?;
        iv.subject = record[0].to_string();
        iv.feature_set = feature_set;
        out.push(iv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_text_round_trip() {
        let ubm = DiagGmm::new(
            vec![0.25, 0.75],
            vec![0.1, 0.2, 0.3, 0.4],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.5, 0.5],
        )
        .unwrap();
        let t = DMatrix::from_fn(4, 2, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0));
        let tv = TotalVariabilityModel::new(ubm, t).unwrap();
        assert_eq!(TotalVariabilityModel::from_text(&tv.to_text()).unwrap(), tv);
        assert!(TotalVariabilityModel::from_text(&tv.to_text().replace("rank 2", "rank 3")).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ivs = vec![
            IVector::new(vec![0.1, -2.0 / 3.0])
                .unwrap()
                .with_source("s1", FeatureSet::Harmonic),
            IVector::new(vec![1e-300, 5.0])
                .unwrap()
                .with_source("s2", FeatureSet::Harmonic),
        ];
        let mut buf = Vec::new();
        write_ivectors_csv(&mut buf, &ivs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("subject,feature_set,v0,v1\n"));
        assert_eq!(read_ivectors_csv(buf.as_slice()).unwrap(), ivs);
    }

    #[test]
    fn csv_errors() {
        assert!(read_ivectors_csv("subject,feature_set,v0\ns,harmonic,abc\n".as_bytes()).is_err());
        assert!(read_ivectors_csv("subject,feature_set,v0\ns,walking,1\n".as_bytes()).is_err());
        assert!(read_ivectors_csv("subject,v0\ns,1\n".as_bytes()).is_err());
    }
}
