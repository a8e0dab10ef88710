use serde::{Deserialize, Serialize};

use super::heads::{OrdinalProbs, ProbKind};
use super::labels::{ExtendedLabel, RankLabel};
use crate::diffnum::log_sum_exp;
use crate::error::{Error, Result};

/// Log arguments are clamped into `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-12;

pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Sum,
    #[default]
    Mean,
}

/// Per-level importance weights and batch reduction for the CORAL loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub reduction: Reduction,
}

impl LossConfig {
    pub fn uniform(num_classes: usize) -> Self {
        Self {
            lambdas: vec![1.0; num_classes.saturating_sub(1)],
            reduction: Reduction::Mean,
        }
    }

    pub fn new(lambdas: Vec<f64>, reduction: Reduction) -> Result<Self> {
        let cfg = Self { lambdas, reduction };
        cfg.validate(cfg.lambdas.len() + 1)?;
        Ok(cfg)
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.lambdas.len() + 1 != num_classes {
            return Err(Error::Config(format!(
                "{} level weights for {num_classes} classes",
                self.lambdas.len()
            )));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::Config(format!("level weight {l} must be finite and >= 0")));
        }
        Ok(())
    }
}

/// Weighted binary cross-entropy over the `K - 1` levels of one sample.
pub fn coral_loss(probs: &OrdinalProbs, target: &ExtendedLabel, cfg: &LossConfig) -> Result<f64> {
    if probs.kind() != ProbKind::CoralLevelwise {
        return Err(Error::InvalidArgument(format!(
            "CORAL loss needs levelwise probabilities, got {:?}",
            probs.kind()
        )));
    }
    if probs.len() != target.len() || probs.len() != cfg.lambdas.len() {
        return Err(Error::Shape(format!(
            "CORAL loss: {} probs, {} targets, {} weights",
            probs.len(),
            target.len(),
            cfg.lambdas.len()
        )));
    }
    let mut total = 0.0;
    for ((&p, &y), &lambda) in probs.probs().iter().zip(target.bits()).zip(&cfg.lambdas) {
        let p = clamp_prob(p);
        let y = y as f64;
        total += lambda * (p.ln() * y + (1.0 - p).ln() * (1.0 - y));
    }
    Ok(-total)
}

pub fn coral_loss_batch(
    probs: &[OrdinalProbs],
    targets: &[ExtendedLabel],
    cfg: &LossConfig,
) -> Result<f64> {
    if probs.is_empty() || probs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "CORAL batch: {} predictions vs {} targets",
            probs.len(),
            targets.len()
        )));
    }
    let mut sum = 0.0;
    for (p, t) in probs.iter().zip(targets) {
        sum += coral_loss(p, t, cfg)?;
    }
    Ok(match cfg.reduction {
        Reduction::Sum => sum,
        Reduction::Mean => sum / probs.len() as f64,
    })
}

/// Conditional training subsets. `subsets[j]` holds the sample indices
/// whose label exceeds `j` (1-based level), so `subsets[0]` is the whole
/// dataset and classifier `j` is trained on `subsets[j]` against the target
/// `label > j + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornSubsets {
    subsets: Vec<Vec<usize>>,
}

impl CornSubsets {
    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn total_len(&self) -> usize {
        self.subsets.iter().map(Vec::len).sum()
    }

    /// Zero-based classifier indices whose subset is empty.
    pub fn empty_levels(&self) -> Vec<usize> {
        self.subsets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_empty())
            .map(|(j, _)| j)
            .collect()
    }
}

pub fn corn_subsets(labels: &[RankLabel], num_classes: usize) -> Result<CornSubsets> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("CORN subsets need at least one label".into()));
    }
    if num_classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 ordinal classes, got {num_classes}"
        )));
    }
    for l in labels {
        l.check(num_classes)?;
    }
    let subsets = (0..num_classes - 1)
        .map(|j| {
            labels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.value() > j)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    Ok(CornSubsets { subsets })
}

/// Binary cross-entropy of each conditional classifier over its subset,
/// normalized by the total subset size.
pub fn corn_loss(
    conditionals: &[OrdinalProbs],
    labels: &[RankLabel],
    subsets: &CornSubsets,
) -> Result<f64> {
    if conditionals.len() != labels.len() {
        return Err(Error::Shape(format!(
            "CORN loss: {} predictions vs {} labels",
            conditionals.len(),
            labels.len()
        )));
    }
    let num_classes = subsets.subsets.len() + 1;
    if corn_subsets(labels, num_classes)? != *subsets {
        return Err(Error::InvalidArgument("CORN subsets do not match the labels".into()));
    }
    if let Some(c) = conditionals
        .iter()
        .find(|c| c.kind() != ProbKind::CornConditional || c.len() != num_classes - 1)
    {
        return Err(Error::InvalidArgument(format!(
            "CORN loss needs {} conditional probabilities per sample, got {} ({:?})",
            num_classes - 1,
            c.len(),
            c.kind()
        )));
    }
    let total = subsets.total_len();
    if total == 0 {
        return Err(Error::InvalidArgument("CORN subsets are all empty".into()));
    }
    let mut sum = 0.0;
    for (j, subset) in subsets.subsets.iter().enumerate() {
        for &i in subset {
            let p = clamp_prob(conditionals[i].probs()[j]);
            sum += if labels[i].value() > j + 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            };
        }
    }
    Ok(-sum / total as f64)
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&v| v - lse).collect()
}

fn check_logits(logits: &[f64], y: RankLabel) -> Result<()> {
    if logits.len() < 2 {
        return Err(Error::Shape(format!("need at least 2 logits, got {}", logits.len())));
    }
    y.check(logits.len())?;
    Ok(())
}

pub fn softmax_ce_loss(logits: &[f64], y: RankLabel) -> Result<f64> {
    check_logits(logits, y)?;
    Ok(-log_softmax(logits)[y.index()])
}

/// `-(1 - p_t)^gamma * ln(p_t)` with `p_t = softmax(logits)[y]`.
pub fn focal_loss(logits: &[f64], y: RankLabel, gamma: f64) -> Result<f64> {
    check_logits(logits, y)?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidArgument(format!("focal gamma must be >= 0, got {gamma}")));
    }
    let log_pt = log_softmax(logits)[y.index()];
    let pt = clamp_prob(log_pt.exp());
    Ok(-(1.0 - pt).powf(gamma) * log_pt)
}
