//! Synthetic cardiac-like phantoms, k-space motion corruption, dataset
//! assembly and a palette-tuned reference segmenter.

mod corrupt;
mod dataset;
mod fourier;
mod generate;
mod segment;

pub use corrupt::{corrupt_kspace, displace, replaced_line_count, replaced_rows, CorruptionSpec};
pub use dataset::{make_dataset, write_dataset, DatasetSpec, Sample, MANIFEST_NAME};
pub use fourier::{dft2, idft2, ComplexSpectrum};
pub use generate::{
    make_phantom, normalize_unit, Phantom, BACKGROUND, LABELS, LV, MIN_SIDE, MYO, NUM_SEVERITIES, RV,
};
pub use segment::{reference_segment, BLOOD_THRESHOLD, MYO_THRESHOLD};
