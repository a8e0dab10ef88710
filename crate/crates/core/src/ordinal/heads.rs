use serde::{Deserialize, Serialize};

use super::labels::{rank_index, RankLabel};
use crate::diffnum::sigmoid;
use crate::error::{Error, Result};

/// Decision threshold on level probabilities; the comparison is strict.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbKind {
    /// `P(y > level k)` from a CORAL head.
    CoralLevelwise,
    /// `P(y > level k | y > level k-1)` from a CORN head.
    CornConditional,
    /// `P(y > level k)` obtained by chaining CORN conditionals.
    CornMarginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalProbs {
    probs: Vec<f64>,
    kind: ProbKind,
}

impl OrdinalProbs {
    pub fn new(probs: Vec<f64>, kind: ProbKind) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("need at least one level probability".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { probs, kind })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> ProbKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn expect_kind(&self, kind: ProbKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidArgument(format!(
                "expected {kind:?} probabilities, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    /// `1(p_k > 0.5)` per level.
    pub fn decisions(&self) -> Vec<u8> {
        self.probs
            .iter()
            .map(|&p| u8::from(p > DECISION_THRESHOLD))
            .collect()
    }
}

/// One weight vector shared by all levels plus a bias per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoralHead {
    shared_weights: Vec<f64>,
    biases: Vec<f64>,
}

impl CoralHead {
    pub fn new(shared_weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if shared_weights.is_empty() || biases.is_empty() {
            return Err(Error::Shape("CORAL head needs weights and at least one bias".into()));
        }
        Ok(Self {
            shared_weights,
            biases,
        })
    }

    pub fn shared_weights(&self) -> &[f64] {
        &self.shared_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn num_classes(&self) -> usize {
        self.biases.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// `K - 1` independent binary classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornHead {
    classifiers: Vec<BinaryClassifier>,
}

impl CornHead {
    pub fn new(classifiers: Vec<BinaryClassifier>) -> Result<Self> {
        let Some(first) = classifiers.first() else {
            return Err(Error::Shape("CORN head needs at least one classifier".into()));
        };
        let d = first.weights.len();
        if d == 0 || classifiers.iter().any(|c| c.weights.len() != d) {
            return Err(Error::Shape("CORN classifiers must share one non-zero input width".into()));
        }
        Ok(Self { classifiers })
    }

    pub fn classifiers(&self) -> &[BinaryClassifier] {
        &self.classifiers
    }

    pub fn num_classes(&self) -> usize {
        self.classifiers.len() + 1
    }

    pub fn feature_dim(&self) -> usize {
        self.classifiers[0].weights.len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn coral_forward(z: &[f64], head: &CoralHead) -> Result<OrdinalProbs> {
    if z.len() != head.shared_weights.len() {
        return Err(Error::Shape(format!(
            "feature width {} vs CORAL weights {}",
            z.len(),
            head.shared_weights.len()
        )));
    }
    let score = dot(&head.shared_weights, z);
    let probs = head.biases.iter().map(|&b| sigmoid(score + b)).collect();
    OrdinalProbs::new(probs, ProbKind::CoralLevelwise)
}

pub fn coral_predict(probs: &OrdinalProbs) -> Result<RankLabel> {
    probs.expect_kind(ProbKind::CoralLevelwise)?;
    rank_index(&probs.decisions())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornOutput {
    pub conditional: OrdinalProbs,
    pub marginal: OrdinalProbs,
}

pub fn corn_forward(z: &[f64], head: &CornHead) -> Result<CornOutput> {
    if z.len() != head.feature_dim() {
        return Err(Error::Shape(format!(
            "feature width {} vs CORN weights {}",
            z.len(),
            head.feature_dim()
        )));
    }
    let cond = head
        .classifiers
        .iter()
        .map(|c| sigmoid(dot(&c.weights, z) + c.bias))
        .collect();
    let conditional = OrdinalProbs::new(cond, ProbKind::CornConditional)?;
    let marginal = corn_marginals(&conditional)?;
    Ok(CornOutput {
        conditional,
        marginal,
    })
}

/// Running product of conditional exceedance probabilities.
pub fn corn_marginals(conditional: &OrdinalProbs) -> Result<OrdinalProbs> {
    conditional.expect_kind(ProbKind::CornConditional)?;
    let mut acc = 1.0;
    let probs = conditional
        .probs
        .iter()
        .map(|&p| {
            acc *= p;
            acc
        })
        .collect();
    OrdinalProbs::new(probs, ProbKind::CornMarginal)
}

pub fn corn_predict(marginal: &OrdinalProbs) -> Result<RankLabel> {
    marginal.expect_kind(ProbKind::CornMarginal)?;
    rank_index(&marginal.decisions())
}

/// Argmax over class logits; ties resolve to the lowest class.
pub fn argmax_predict(logits: &[f64]) -> Result<RankLabel> {
    if logits.is_empty() {
        return Err(Error::InvalidArgument("empty logits".into()));
    }
    let mut best = 0;
    for (k, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = k;
        }
    }
    RankLabel::new(best + 1, logits.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(p: &[f64], kind: ProbKind) -> OrdinalProbs {
        OrdinalProbs::new(p.to_vec(), kind).unwrap()
    }

    #[test]
    fn coral_forward_values() {
        let head = CoralHead::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(coral_forward(&[3.0, -1.0], &head).unwrap().probs(), &[0.5, 0.5]);

        let head = CoralHead::new(vec![1.0, 0.0], vec![0.0, -2.0]).unwrap();
        let p = coral_forward(&[1.0, 5.0], &head).unwrap();
        assert!((p.probs()[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((p.probs()[1] - 0.268_941_421_369_995_1).abs() < 1e-15);

        assert!(coral_forward(&[1.0], &head).is_err());
    }

    #[test]
    fn coral_predict_examples() {
        let k = ProbKind::CoralLevelwise;
        assert_eq!(coral_predict(&probs(&[0.9, 0.6], k)).unwrap().value(), 3);
        assert_eq!(coral_predict(&probs(&[0.4, 0.1], k)).unwrap().value(), 1);
        assert_eq!(coral_predict(&probs(&[0.5, 0.5], k)).unwrap().value(), 1);
        assert!(coral_predict(&probs(&[0.9, 0.6], ProbKind::CornMarginal)).is_err());
    }

    #[test]
    fn corn_marginal_products() {
        let m = corn_marginals(&probs(&[0.8, 0.5], ProbKind::CornConditional)).unwrap();
        assert!((m.probs()[0] - 0.8).abs() < 1e-15 && (m.probs()[1] - 0.4).abs() < 1e-15);
        let m = corn_marginals(&probs(&[0.5], ProbKind::CornConditional)).unwrap();
        assert_eq!(m.probs(), &[0.5]);
        let eps = 1e-3;
        let m = corn_marginals(&probs(&[1.0 - eps; 4], ProbKind::CornConditional)).unwrap();
        for (k, &p) in m.probs().iter().enumerate() {
            assert!((p - (1.0 - eps).powi(k as i32 + 1)).abs() < 1e-14);
        }
        assert!(m.probs().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn corn_predict_examples() {
        let k = ProbKind::CornMarginal;
        assert_eq!(corn_predict(&probs(&[0.8, 0.4], k)).unwrap().value(), 2);
        assert_eq!(corn_predict(&probs(&[0.3, 0.1], k)).unwrap().value(), 1);
        assert_eq!(corn_predict(&probs(&[0.9, 0.6], k)).unwrap().value(), 3);
    }

    #[test]
    fn corn_forward_dimension_check() {
        let head = CornHead::new(vec![
            BinaryClassifier { weights: vec![1.0, 0.0], bias: 0.0 },
            BinaryClassifier { weights: vec![0.0, 1.0], bias: 0.0 },
        ])
        .unwrap();
        assert!(corn_forward(&[1.0, 2.0, 3.0], &head).is_err());
        let out = corn_forward(&[0.0, 0.0], &head).unwrap();
        assert_eq!(out.conditional.probs(), &[0.5, 0.5]);
        assert_eq!(out.marginal.probs(), &[0.5, 0.25]);
        assert!(CornHead::new(vec![
            BinaryClassifier { weights: vec![1.0], bias: 0.0 },
            BinaryClassifier { weights: vec![1.0, 2.0], bias: 0.0 },
        ])
        .is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_predict(&[1.0, 1.0, 0.0]).unwrap().value(), 1);
        assert_eq!(argmax_predict(&[0.0, 2.0, 2.0]).unwrap().value(), 2);
        assert_eq!(argmax_predict(&[0.0, 0.1, 2.0]).unwrap().value(), 3);
    }
}
