use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::RankLabel;

/// Slice-to-image aggregation of severity predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Most frequent slice label; ties go to the more severe label.
    #[default]
    Majority,
    /// Most severe slice label.
    Max,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Majority => "majority",
            Aggregation::Max => "max",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(Aggregation::Majority),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::Config(format!("unknown aggregation {other:?}"))),
        }
    }
}

pub fn aggregate(slices: &[RankLabel], rule: Aggregation) -> Result<RankLabel> {
    if slices.is_empty() {
        return Err(Error::InvalidArgument("no slice predictions to aggregate".into()));
    }
    Ok(match rule {
        Aggregation::Max => *slices.iter().max().expect("non-empty"),
        Aggregation::Majority => {
            let mut best = (0usize, slices[0]);
            for &label in slices {
                let n = slices.iter().filter(|&&s| s == label).count();
                if (n, label) > best {
                    best = (n, label);
                }
            }
            best.1
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Reject,
}

/// Indices into the input, each list in input order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateOutcome {
    pub keep: Vec<usize>,
    pub reject: Vec<usize>,
}

impl GateOutcome {
    pub fn decision(&self, index: usize) -> Decision {
        if self.reject.binary_search(&index).is_ok() {
            Decision::Reject
        } else {
            Decision::Keep
        }
    }
}

/// Rejects images graded at `reject_from` or above.
pub fn gate_from(severities: &[RankLabel], reject_from: RankLabel) -> GateOutcome {
    let mut out = GateOutcome::default();
    for (i, s) in severities.iter().enumerate() {
        if *s >= reject_from {
            out.reject.push(i);
        } else {
            out.keep.push(i);
        }
    }
    out
}

/// Rejects exactly the images graded `K`, the most severe level.
pub fn gate(severities: &[RankLabel], num_classes: usize) -> Result<GateOutcome> {
    for s in severities {
        s.check(num_classes)?;
    }
    Ok(gate_from(severities, RankLabel::new(num_classes, num_classes)?))
}
