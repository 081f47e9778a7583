use crate::error::{Error, Result};
use crate::gmm::{EmConfig, MapConfig};
use crate::ivector::{TvConfig, DEFAULT_AGE_WINDOW};

/// Model settings for a pipeline run; readable from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub em: EmConfig,
    pub map: MapConfig,
    pub tv: TvConfig,
    pub age_window: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            em: EmConfig::default(),
            map: MapConfig::default(),
            tv: TvConfig::default(),
            age_window: DEFAULT_AGE_WINDOW,
        }
    }
}

pub const CONFIG_KEYS: [&str; 14] = [
    "seed",
    "em.components",
    "em.max_iterations",
    "em.tolerance",
    "em.floor_factor",
    "em.seed",
    "map.relevance",
    "map.adapt_means",
    "map.adapt_variances",
    "map.adapt_weights",
    "tv.rank",
    "tv.iterations",
    "tv.seed",
    "age_window",
];

fn value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(line, format!("bad value `{raw}` for `{key}`")))
}

impl PipelineConfig {
    /// Sets both the EM and the total-variability seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.em.seed = seed;
        self.tv.seed = seed;
        self
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment;
    /// unknown keys and repeated keys are errors.
    pub fn parse_overrides(mut self, text: &str) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, val) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
            let (key, val) = (key.trim(), val.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(line, format!("`{key}` set twice")));
            }
            match key {
                "seed" => {
                    let seed = value(line, key, val)?;
                    self.em.seed = seed;
                    self.tv.seed = seed;
                }
                "em.components" => self.em.n_components = value(line, key, val)?,
                "em.max_iterations" => self.em.max_iterations = value(line, key, val)?,
                "em.tolerance" => self.em.tolerance = value(line, key, val)?,
                "em.floor_factor" => self.em.floor_factor = value(line, key, val)?,
                "em.seed" => self.em.seed = value(line, key, val)?,
                "map.relevance" => self.map.relevance = value(line, key, val)?,
                "map.adapt_means" => self.map.adapt_means = value(line, key, val)?,
                "map.adapt_variances" => self.map.adapt_variances = value(line, key, val)?,
                "map.adapt_weights" => self.map.adapt_weights = value(line, key, val)?,
                "tv.rank" => self.tv.rank = value(line, key, val)?,
                "tv.iterations" => self.tv.iterations = value(line, key, val)?,
                "tv.seed" => self.tv.seed = value(line, key, val)?,
                "age_window" => self.age_window = value(line, key, val)?,
                other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::default().parse_overrides(text)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        self.map.validate()?;
        if self.tv.rank == 0 {
            return Err(Error::invalid("total-variability rank must be at least 1"));
        }
        if !(self.age_window >= 0.0) || !self.age_window.is_finite() {
            return Err(Error::invalid("age window must be finite and non-negative"));
        }
        Ok(())
    }
}
