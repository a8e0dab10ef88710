//! Training, classification, gating and reporting.

mod config;
mod gate;
mod gradcheck;
mod model;
mod report;
mod train;

pub use config::{BiasInit, TrainConfig};
pub use gate::{aggregate, gate, gate_from, Aggregation, Decision, GateOutcome};
pub use gradcheck::{check_case, gradient_check_suite, HeadGradCheck, GRADCHECK_TOLERANCE};
pub use model::{prior_biases, Head, Model};
pub use report::{
    classification_table, classify_manifest, evaluate, gate_lists, render_report, render_table, run_pipeline,
    segmentation_table, ClassificationReport, ClassifiedImage, Counts, GateLists, GateReport, Grader, ImageRecord,
    LabelScores, LabelSummary, RunOptions, Segmenter, SubsetSummary,
};
pub use train::{batch_loss, evaluate_loss, train, train_from_manifest, EpochLog, LabeledSlices, TrainLog};

pub const TRAIN_LOG_FILE: &str = "train_log.json";
