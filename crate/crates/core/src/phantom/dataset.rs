use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corrupt::{corrupt_kspace, CorruptionSpec};
use super::generate::{make_phantom, Phantom};
use crate::error::{Error, Result};
use crate::io::{self, mask_path_for, Manifest, ManifestEntry, Split, StoredTensor};
use crate::ordinal::RankLabel;

pub const MANIFEST_NAME: &str = "manifest.csv";
const IMAGE_DIR: &str = "images";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub n_per_class: usize,
    /// train / val / test
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_side")]
    pub height: usize,
    #[serde(default = "default_side")]
    pub width: usize,
    #[serde(default)]
    pub corruption: CorruptionSpec,
}

fn default_ratios() -> [f64; 3] {
    [0.7, 0.15, 0.15]
}

fn default_side() -> usize {
    64
}

impl DatasetSpec {
    pub fn new(n_per_class: usize, seed: u64) -> Self {
        Self {
            n_per_class,
            ratios: default_ratios(),
            seed,
            height: default_side(),
            width: default_side(),
            corruption: CorruptionSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidArgument("n_per_class must be at least 1".into()));
        }
        if self.ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (self.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "split ratios must be in [0, 1] and sum to 1, got {:?}",
                self.ratios
            )));
        }
        self.corruption.validate()
    }

    /// Per-class image counts for train, val and test.
    pub fn split_counts(&self) -> [usize; 3] {
        let n = self.n_per_class;
        let train = ((n as f64 * self.ratios[0]).round() as usize).min(n);
        let val = ((n as f64 * self.ratios[1]).round() as usize).min(n - train);
        [train, val, n - train - val]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Image path relative to the dataset directory.
    pub path: String,
    pub split: Split,
    pub phantom: Phantom,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Balanced, stratified dataset; every image gets a distinct seed.
pub fn make_dataset(spec: &DatasetSpec) -> Result<Vec<Sample>> {
    spec.validate()?;
    let k = spec.corruption.num_severities();
    let counts = spec.split_counts();
    let mut used = HashSet::new();
    let mut seeds = vec![vec![0u64; spec.n_per_class]; k];
    let mut state = splitmix64(spec.seed);
    for class_seeds in seeds.iter_mut() {
        for s in class_seeds.iter_mut() {
            loop {
                state = splitmix64(state);
                if used.insert(state) {
                    *s = state;
                    break;
                }
            }
        }
    }

    let mut samples = Vec::with_capacity(k * spec.n_per_class);
    let mut start = 0;
    for (split, &count) in Split::ALL.iter().zip(&counts) {
        for i in start..start + count {
            for (c, class_seeds) in seeds.iter().enumerate() {
                let severity = RankLabel::new(c + 1, k)?;
                let seed = class_seeds[i];
                let clean = make_phantom(seed, spec.height, spec.width)?;
                let phantom = corrupt_kspace(&clean, severity, &spec.corruption, seed)?;
                samples.push(Sample {
                    path: format!("{IMAGE_DIR}/s{}_{i:04}.ogt", c + 1),
                    split: *split,
                    phantom,
                });
            }
        }
        start += count;
    }
    Ok(samples)
}

/// Writes images, ground-truth masks and `manifest.csv` into `dir`.
pub fn write_dataset(dir: &Path, spec: &DatasetSpec) -> Result<Manifest> {
    let samples = make_dataset(spec)?;
    io::create_dir_all(&dir.join(IMAGE_DIR))?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in &samples {
        io::write_tensor(&dir.join(&s.path), &StoredTensor::from_image(&s.phantom.image))?;
        io::write_tensor(
            &dir.join(mask_path_for(&s.path)),
            &StoredTensor::from_label_map(&s.phantom.mask),
        )?;
        entries.push(ManifestEntry {
            path: s.path.clone(),
            severity: s.phantom.severity,
            split: s.split,
            seed: s.phantom.seed,
        });
    }
    io::write_manifest(&dir.join(MANIFEST_NAME), &entries)?;
    Ok(Manifest::new(dir, entries))
}
