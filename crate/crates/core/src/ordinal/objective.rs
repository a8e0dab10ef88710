//! Training objectives recorded on a [`Graph`]. Each takes the head's raw
//! logits for a batch and returns a scalar loss node whose value matches the
//! corresponding function in [`super::losses`].

use super::labels::RankLabel;
use super::losses::{LossConfig, Reduction, PROB_EPS};
use crate::diffnum::{Graph, Tensor, Var};
use crate::error::{Error, Result};

fn check_batch(g: &Graph, logits: Var, labels: &[RankLabel], width: usize) -> Result<usize> {
    let (n, m) = g.value(logits).as_matrix()?;
    if n != labels.len() || m != width {
        return Err(Error::Shape(format!(
            "logits {:?} for {} labels (expected width {width})",
            g.value(logits).shape(),
            labels.len()
        )));
    }
    Ok(n)
}

/// `(log p, log(1 - p))` of clamped sigmoid probabilities.
fn log_probs(g: &mut Graph, logits: Var) -> Result<(Var, Var)> {
    let p = g.sigmoid(logits)?;
    let pc = g.clamp(p, PROB_EPS, 1.0 - PROB_EPS);
    let log_p = g.log(pc)?;
    let q = g.scale_shift(pc, -1.0, 1.0);
    let log_q = g.log(q)?;
    Ok((log_p, log_q))
}

fn binary_ce(g: &mut Graph, logits: Var, pos: Vec<f64>, neg: Vec<f64>) -> Result<Var> {
    let shape = g.value(logits).shape().to_vec();
    let (log_p, log_q) = log_probs(g, logits)?;
    let a = g.weighted_sum(log_p, &Tensor::new(shape.clone(), pos)?)?;
    let b = g.weighted_sum(log_q, &Tensor::new(shape, neg)?)?;
    g.add(a, b)
}

/// CORAL loss for level logits `[n, K-1]`.
pub fn coral_objective(g: &mut Graph, logits: Var, labels: &[RankLabel], cfg: &LossConfig) -> Result<Var> {
    let levels = cfg.lambdas.len();
    let n = check_batch(g, logits, labels, levels)?;
    let scale = match cfg.reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / n as f64,
    };
    let mut pos = Vec::with_capacity(n * levels);
    let mut neg = Vec::with_capacity(n * levels);
    for y in labels {
        y.check(levels + 1)?;
        for (k, &lambda) in cfg.lambdas.iter().enumerate() {
            let t = if y.value() > k + 1 { 1.0 } else { 0.0 };
            pos.push(-lambda * t * scale);
            neg.push(-lambda * (1.0 - t) * scale);
        }
    }
    binary_ce(g, logits, pos, neg)
}

/// CORN loss for conditional logits `[n, K-1]`. Classifier `j` only sees
/// samples with label above level `j`; levels with no such sample in the
/// batch contribute nothing.
pub fn corn_objective(g: &mut Graph, logits: Var, labels: &[RankLabel], num_classes: usize) -> Result<Var> {
    let levels = num_classes - 1;
    let n = check_batch(g, logits, labels, levels)?;
    let mut pos = Vec::with_capacity(n * levels);
    let mut neg = Vec::with_capacity(n * levels);
    let mut total = 0usize;
    for y in labels {
        y.check(num_classes)?;
        for j in 0..levels {
            let inside = y.value() > j;
            let t = y.value() > j + 1;
            total += usize::from(inside);
            pos.push(if inside && t { -1.0 } else { 0.0 });
            neg.push(if inside && !t { -1.0 } else { 0.0 });
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("CORN batch has empty subsets".into()));
    }
    let inv = 1.0 / total as f64;
    pos.iter_mut().chain(neg.iter_mut()).for_each(|w| *w *= inv);
    binary_ce(g, logits, pos, neg)
}

fn one_hot_weights(labels: &[RankLabel], num_classes: usize) -> Result<Vec<f64>> {
    let n = labels.len();
    let mut w = vec![0.0; n * num_classes];
    for (i, y) in labels.iter().enumerate() {
        y.check(num_classes)?;
        w[i * num_classes + y.index()] = -1.0 / n as f64;
    }
    Ok(w)
}

/// Mean softmax cross-entropy for class logits `[n, K]`.
pub fn softmax_objective(g: &mut Graph, logits: Var, labels: &[RankLabel]) -> Result<Var> {
    let (_, k) = g.value(logits).as_matrix()?;
    check_batch(g, logits, labels, k)?;
    let ls = g.log_softmax(logits)?;
    let w = Tensor::new(g.value(logits).shape().to_vec(), one_hot_weights(labels, k)?)?;
    g.weighted_sum(ls, &w)
}

/// Mean focal loss for class logits `[n, K]`.
pub fn focal_objective(g: &mut Graph, logits: Var, labels: &[RankLabel], gamma: f64) -> Result<Var> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidArgument(format!("focal gamma must be >= 0, got {gamma}")));
    }
    let (_, k) = g.value(logits).as_matrix()?;
    check_batch(g, logits, labels, k)?;
    let ls = g.log_softmax(logits)?;
    let p = g.exp(ls)?;
    let pc = g.clamp(p, PROB_EPS, 1.0 - PROB_EPS);
    let q = g.scale_shift(pc, -1.0, 1.0);
    let modulating = g.pow(q, gamma)?;
    let term = g.mul(modulating, ls)?;
    let w = Tensor::new(g.value(logits).shape().to_vec(), one_hot_weights(labels, k)?)?;
    g.weighted_sum(term, &w)
}
