use std::path::Path;

use super::DiagGmm;
use crate::error::{Error, Result};
use crate::textfmt::{push_record, Records};

/// Upper bound on `K * D` accepted from a model file.
const MAX_PARAMETERS: usize = 1 << 24;

impl DiagGmm {
    /// Text form: a `diag-gmm 1` header, `components`, `dims`, the variance
    /// floor, then `weight`/`mean`/`var` records per component.
    pub fn to_text(&self) -> String {
        let mut out = String::from("diag-gmm 1\n");
        out.push_str(&format!("components {}\n", self.n_components()));
        out.push_str(&format!("dims {}\n", self.dim));
        push_record(&mut out, "floor", &self.floor);
        for k in 0..self.n_components() {
            push_record(&mut out, "weight", &[self.weights[k]]);
            push_record(&mut out, "mean", self.mean(k));
            push_record(&mut out, "var", self.variance(k));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rec = Records::new(text);
        let model = Self::read_records(&mut rec)?;
        rec.finish()?;
        Ok(model)
    }

    pub(crate) fn read_records(rec: &mut Records<'_>) -> Result<Self> {
        rec.header("diag-gmm", "1")?;
        let k = rec.count("components")?;
        let d = rec.count("dims")?;
        if k == 0 || d == 0 || k.saturating_mul(d) > MAX_PARAMETERS {
            return Err(Error::invalid(format!("unsupported model size {k}x{d}")));
        }
        let floor = rec.floats("floor", d)?;
        let mut weights = Vec::new();
        let mut means = Vec::new();
        let mut variances = Vec::new();
        for _ in 0..k {
            weights.extend(rec.floats("weight", 1)?);
            means.extend(rec.floats("mean", d)?);
            variances.extend(rec.floats("var", d)?);
        }
        DiagGmm::new(weights, means, variances, floor)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
