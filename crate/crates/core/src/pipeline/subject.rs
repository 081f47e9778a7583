use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the motor severity scale.
pub const MAX_SCORE: u16 = 132;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Patient,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "patient" | "pd" => Ok(Group::Patient),
            "control" | "hc" => Ok(Group::Control),
            other => Err(Error::invalid(format!("unknown group `{other}`"))),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Patient => "patient",
            Group::Control => "control",
        })
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" | "f" => Ok(Gender::F),
            "M" | "m" => Ok(Gender::M),
            other => Err(Error::invalid(format!("unknown gender `{other}`"))),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::F => "F",
            Gender::M => "M",
        })
    }
}

/// Identity and clinical metadata of one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub group: Group,
    pub gender: Gender,
    pub age: f64,
    /// Motor severity score; present exactly for patients.
    pub score: Option<u16>,
}

impl SubjectRecord {
    pub fn new(
        id: impl Into<String>,
        group: Group,
        gender: Gender,
        age: f64,
        score: Option<u16>,
    ) -> Result<Self> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(Error::invalid("empty subject id"));
        }
        if !(age > 0.0) || !age.is_finite() {
            return Err(Error::invalid(format!("subject {id}: age must be positive")));
        }
        match (group, score) {
            (Group::Patient, None) => {
                return Err(Error::invalid(format!("patient {id} has no severity score")))
            }
            (Group::Control, Some(_)) => {
                return Err(Error::invalid(format!("control {id} carries a severity score")))
            }
            (_, Some(s)) if s > MAX_SCORE => {
                return Err(Error::invalid(format!(
                    "subject {id}: score {s} above {MAX_SCORE}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            id,
            group,
            gender,
            age,
            score,
        })
    }

    pub fn control(id: impl Into<String>, gender: Gender, age: f64) -> Result<Self> {
        Self::new(id, Group::Control, gender, age, None)
    }

    pub fn patient(id: impl Into<String>, gender: Gender, age: f64, score: u16) -> Result<Self> {
        Self::new(id, Group::Patient, gender, age, Some(score))
    }

    pub fn is_patient(&self) -> bool {
        self.group == Group::Patient
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_presence_follows_group() {
        assert!(SubjectRecord::patient("p1", Gender::F, 60.0, 30).is_ok());
        assert!(SubjectRecord::new("p1", Group::Patient, Gender::F, 60.0, None).is_err());
        assert!(SubjectRecord::new("c1", Group::Control, Gender::M, 60.0, Some(3)).is_err());
        assert!(SubjectRecord::patient("p2", Gender::M, 60.0, 133).is_err());
        assert!(SubjectRecord::control("c2", Gender::M, 0.0).is_err());
    }

    #[test]
    fn labels_parse() {
        assert_eq!("HC".parse::<Group>().unwrap(), Group::Control);
        assert_eq!("patient".parse::<Group>().unwrap(), Group::Patient);
        assert_eq!("m".parse::<Gender>().unwrap(), Gender::M);
        assert!("x".parse::<Gender>().is_err());
    }
}
