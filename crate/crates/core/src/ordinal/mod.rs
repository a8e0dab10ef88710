//! Ordinal regression: label encoding, CORAL and CORN heads with their
//! losses and prediction rules, and the softmax/focal baselines.

mod heads;
mod labels;
mod losses;
mod objective;

use serde::{Deserialize, Serialize};

pub use heads::{
    argmax_predict, coral_forward, coral_predict, corn_forward, corn_marginals, corn_predict,
    BinaryClassifier, CoralHead, CornHead, CornOutput, OrdinalProbs, ProbKind, DECISION_THRESHOLD,
};
pub use labels::{extend_labels, is_rank_consistent, rank_index, ExtendedLabel, RankLabel};
pub use losses::{
    clamp_prob, coral_loss, coral_loss_batch, corn_loss, corn_subsets, focal_loss, log_softmax,
    softmax_ce_loss, CornSubsets, LossConfig, Reduction, DEFAULT_FOCAL_GAMMA, PROB_EPS,
};
pub use objective::{coral_objective, corn_objective, focal_objective, softmax_objective};

/// Classification head family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Coral,
    Corn,
    Softmax,
    Focal,
}

impl HeadKind {
    pub const ALL: [HeadKind; 4] = [HeadKind::Coral, HeadKind::Corn, HeadKind::Softmax, HeadKind::Focal];

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Coral => "coral",
            HeadKind::Corn => "corn",
            HeadKind::Softmax => "softmax",
            HeadKind::Focal => "focal",
        }
    }

    /// Width of the head's logit output for `num_classes` classes.
    pub fn output_width(self, num_classes: usize) -> usize {
        match self {
            HeadKind::Coral | HeadKind::Corn => num_classes - 1,
            HeadKind::Softmax | HeadKind::Focal => num_classes,
        }
    }
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HeadKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HeadKind::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| crate::error::Error::Config(format!("unknown head '{s}'")))
    }
}
