//! Evaluation metrics for severity grading and segmentation.

mod classification;
mod segmentation;

pub use classification::{accuracy, cohens_kappa, confusion, mean_abs_rank_error, ConfusionMatrix};
pub use segmentation::{
    dice, hausdorff, hd95, mean_dice, percentile, pooled_surface_distances, surface, SurfaceSet,
};
