use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordinal class, 1-based. For motion grading `1` is mild, `2`
/// intermediate and `3` severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankLabel(usize);

impl RankLabel {
    pub fn new(value: usize, num_classes: usize) -> Result<Self> {
        if value == 0 || value > num_classes {
            return Err(Error::Label(format!(
                "label {value} outside 1..={num_classes}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> usize {
        self.0
    }

    /// Zero-based class index.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn check(self, num_classes: usize) -> Result<Self> {
        Self::new(self.0, num_classes)
    }
}

impl std::fmt::Display for RankLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Level-exceedance encoding of a [`RankLabel`]: `bits[k] = 1` iff the label
/// exceeds level `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedLabel {
    bits: Vec<u8>,
}

impl ExtendedLabel {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Label(format!("non-binary entry {b} in label bits")));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn check_num_classes(num_classes: usize) -> Result<()> {
    if num_classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 ordinal classes, got {num_classes}"
        )));
    }
    Ok(())
}

/// `(value - 1)` leading ones followed by zeros, length `K - 1`.
pub fn extend_labels(y: RankLabel, num_classes: usize) -> Result<ExtendedLabel> {
    check_num_classes(num_classes)?;
    y.check(num_classes)?;
    let bits = (0..num_classes - 1)
        .map(|k| u8::from(y.value() > k + 1))
        .collect();
    Ok(ExtendedLabel { bits })
}

/// `1 + sum(decisions)`. Counts every positive decision, including ones
/// that break the 1-prefix pattern; see [`is_rank_consistent`].
pub fn rank_index(decisions: &[u8]) -> Result<RankLabel> {
    if let Some(b) = decisions.iter().find(|&&b| b > 1) {
        return Err(Error::Label(format!("non-binary decision {b}")));
    }
    let ones: usize = decisions.iter().map(|&b| b as usize).sum();
    Ok(RankLabel(1 + ones))
}

/// True when the decisions are a run of ones followed only by zeros.
pub fn is_rank_consistent(decisions: &[u8]) -> bool {
    decisions.windows(2).all(|w| w[0] >= w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbl(v: usize, k: usize) -> RankLabel {
        RankLabel::new(v, k).unwrap()
    }

    #[test]
    fn three_class_encoding() {
        assert_eq!(extend_labels(lbl(1, 3), 3).unwrap().bits(), &[0, 0]);
        assert_eq!(extend_labels(lbl(2, 3), 3).unwrap().bits(), &[1, 0]);
        assert_eq!(extend_labels(lbl(3, 3), 3).unwrap().bits(), &[1, 1]);
        assert_eq!(extend_labels(lbl(1, 2), 2).unwrap().bits(), &[0]);
    }

    #[test]
    fn encoding_errors() {
        assert!(RankLabel::new(0, 3).is_err());
        assert!(RankLabel::new(4, 3).is_err());
        assert!(extend_labels(lbl(3, 3), 2).is_err());
        assert!(matches!(
            extend_labels(lbl(1, 3), 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rank_index_counts() {
        assert_eq!(rank_index(&[0, 0]).unwrap().value(), 1);
        assert_eq!(rank_index(&[1, 1]).unwrap().value(), 3);
        assert_eq!(rank_index(&[0, 1]).unwrap().value(), 2);
        assert!(rank_index(&[0, 2]).is_err());
        assert!(!is_rank_consistent(&[0, 1]));
        assert!(is_rank_consistent(&[1, 1, 0, 0]));
    }

    #[test]
    fn round_trip_all_small_k() {
        for k in 2..=10 {
            for y in 1..=k {
                let e = extend_labels(lbl(y, k), k).unwrap();
                assert!(is_rank_consistent(e.bits()));
                assert_eq!(rank_index(e.bits()).unwrap().value(), y);
            }
        }
    }
}
