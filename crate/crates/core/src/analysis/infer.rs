use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Tally};
use crate::pattern::{ConsistencyLevel, SharingPattern};

/// Percentage-point thresholds for label inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub global: u32,
    pub local: u32,
    pub comparable: u32,
    pub neutral: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            global: 50,
            local: 60,
            comparable: 15,
            neutral: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleLabel {
    Global,
    Regional,
    Local,
    LocalAndRegional,
}

impl fmt::Display for ScaleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleLabel::Global => "global",
            ScaleLabel::Regional => "regional",
            ScaleLabel::Local => "local",
            ScaleLabel::LocalAndRegional => "local_and_regional",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingLabel {
    High,
    Neutral,
    Low,
}

impl fmt::Display for CouplingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingLabel::High => "high",
            CouplingLabel::Neutral => "neutral",
            CouplingLabel::Low => "low",
        })
    }
}

fn check_sum(pcts: &[u32]) -> Result<(), AnalysisError> {
    let sum: u32 = pcts.iter().sum();
    if (99..=101).contains(&sum) {
        Ok(())
    } else {
        Err(AnalysisError::InvalidPercentages(pcts.to_vec()))
    }
}

/// Scale label from All/Some/None percentages.
///
/// Rules are tried in order: global, local, local-and-regional, regional,
/// and local as the fallback.
pub fn infer_scale(tally: &Tally, th: &Thresholds) -> Result<ScaleLabel, AnalysisError> {
    let (all, some, none) = tally.percentages();
    check_sum(&[all, some, none])?;
    Ok(if all >= th.global {
        ScaleLabel::Global
    } else if none >= th.local {
        ScaleLabel::Local
    } else if some.abs_diff(none) <= th.comparable {
        ScaleLabel::LocalAndRegional
    } else if some >= all && some >= none {
        ScaleLabel::Regional
    } else {
        ScaleLabel::Local
    })
}

pub fn infer_coupling(
    yes_pct: u32,
    no_pct: u32,
    neutral: u32,
) -> Result<CouplingLabel, AnalysisError> {
    check_sum(&[yes_pct, no_pct])?;
    Ok(if yes_pct.abs_diff(no_pct) < neutral {
        CouplingLabel::Neutral
    } else if yes_pct > no_pct {
        CouplingLabel::High
    } else {
        CouplingLabel::Low
    })
}

/// Sharing pattern and consistency level matching a pair of labels.
pub fn suggested_policy(
    scale: ScaleLabel,
    coupling: CouplingLabel,
) -> (SharingPattern, ConsistencyLevel) {
    let pattern = match scale {
        ScaleLabel::Global => SharingPattern::Internationalisation,
        ScaleLabel::Regional | ScaleLabel::LocalAndRegional => SharingPattern::Regionalisation,
        ScaleLabel::Local => SharingPattern::Localisation,
    };
    let level = match coupling {
        CouplingLabel::High => ConsistencyLevel::Strict,
        CouplingLabel::Neutral => ConsistencyLevel::Bounded,
        CouplingLabel::Low => ConsistencyLevel::Lazy,
    };
    (pattern, level)
}
