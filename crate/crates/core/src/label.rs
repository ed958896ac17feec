//! Severity taxonomy shared by every other module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::TriageError;

/// Four-level post severity, ordered from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeverityLabel {
    Green,
    Amber,
    Red,
    Crisis,
}

impl SeverityLabel {
    /// Canonical class order used by models, confusion matrices and reports.
    pub const ALL: [SeverityLabel; 4] = [Self::Green, Self::Amber, Self::Red, Self::Crisis];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// AMBER, RED or CRISIS.
    pub fn is_flagged(self) -> bool {
        self >= Self::Amber
    }

    /// RED or CRISIS.
    pub fn is_urgent(self) -> bool {
        self >= Self::Red
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Green => "green",
            Self::Amber => "amber",
            Self::Red => "red",
            Self::Crisis => "crisis",
        }
    }
}

impl fmt::Display for SeverityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeverityLabel {
    type Err = TriageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "green" => Ok(Self::Green),
            "amber" => Ok(Self::Amber),
            "red" => Ok(Self::Red),
            "crisis" => Ok(Self::Crisis),
            other => Err(TriageError::Parse(format!("unknown severity label `{other}`"))),
        }
    }
}
