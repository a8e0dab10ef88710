use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::RankLabel;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be square and non-empty".into()));
        }
        Ok(Self {
            num_classes: k,
            counts,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: RankLabel, pred: RankLabel) -> u64 {
        self.counts[truth.index()][pred.index()]
    }

    pub fn record(&mut self, truth: RankLabel, pred: RankLabel) -> Result<()> {
        truth.check(self.num_classes)?;
        pred.check(self.num_classes)?;
        self.counts[truth.index()][pred.index()] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.num_classes)
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::InvalidArgument("empty confusion matrix".into()));
        }
        Ok(self.trace() as f64 / total as f64)
    }
}

fn check_pairs(preds: &[RankLabel], truth: &[RankLabel]) -> Result<()> {
    if preds.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} ground-truth labels",
            preds.len(),
            truth.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("no labels to evaluate".into()));
    }
    Ok(())
}

pub fn confusion(preds: &[RankLabel], truth: &[RankLabel], num_classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} ground-truth labels",
            preds.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(num_classes);
    for (&p, &t) in preds.iter().zip(truth) {
        cm.record(t, p)?;
    }
    Ok(cm)
}

pub fn accuracy(preds: &[RankLabel], truth: &[RankLabel]) -> Result<f64> {
    check_pairs(preds, truth)?;
    let hits = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Mean of `|pred - truth|` in rank units.
pub fn mean_abs_rank_error(preds: &[RankLabel], truth: &[RankLabel]) -> Result<f64> {
    check_pairs(preds, truth)?;
    let sum: usize = preds
        .iter()
        .zip(truth)
        .map(|(p, t)| p.value().abs_diff(t.value()))
        .sum();
    Ok(sum as f64 / preds.len() as f64)
}

/// `(p_o - p_e) / (1 - p_e)`; defined as 1 when chance agreement is total.
pub fn cohens_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument("empty confusion matrix".into()));
    }
    let n = total as f64;
    let p_o = cm.trace() as f64 / n;
    let p_e = cm
        .row_sums()
        .iter()
        .zip(cm.col_sums())
        .map(|(&r, c)| r as f64 * c as f64)
        .sum::<f64>()
        / (n * n);
    if p_e >= 1.0 {
        // every pair fell in a single cell, so p_o is 1 as well
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
