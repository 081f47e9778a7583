//! Line-oriented `keyword value...` records shared by the model file formats.
//!
//! Floats are written with 17 significant digits so that every value
//! survives a write/read cycle bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub(crate) fn push_record(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v:.16e}");
    }
    out.push('\n');
}

pub(crate) struct Records<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Records<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some((i + 1, trimmed));
        }
        None
    }

    /// Next record, which must start with `key`; returns its line number and fields.
    pub(crate) fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, text) = self
            .next_line()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of input, expected `{key}`")))?;
        let mut fields = text.split_whitespace();
        match fields.next() {
            Some(k) if k == key => Ok((line, fields.collect())),
            other => Err(Error::parse(
                line,
                format!("expected `{key}`, found `{}`", other.unwrap_or("")),
            )),
        }
    }

    pub(crate) fn floats(&mut self, key: &str, count: usize) -> Result<Vec<f64>> {
        let (line, fields) = self.expect(key)?;
        if fields.len() != count {
            return Err(Error::parse(
                line,
                format!("`{key}` needs {count} values, found {}", fields.len()),
            ));
        }
        fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("bad number `{f}`")))
            })
            .collect()
    }

    pub(crate) fn count(&mut self, key: &str) -> Result<usize> {
        let (line, fields) = self.expect(key)?;
        match fields.as_slice() {
            [v] => v
                .parse()
                .map_err(|_| Error::parse(line, format!("bad count `{v}`"))),
            _ => Err(Error::parse(line, format!("`{key}` takes one value"))),
        }
    }

    pub(crate) fn header(&mut self, magic: &str, version: &str) -> Result<()> {
        let (line, fields) = self.expect(magic)?;
        if fields != [version] {
            return Err(Error::parse(line, format!("unsupported {magic} version")));
        }
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        match self.next_line() {
            None => Ok(()),
            Some((line, _)) => Err(Error::parse(line, "trailing content")),
        }
    }
}
