use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fourier::{dft2, idft2};
use super::generate::Phantom;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::ordinal::RankLabel;

const GOLDEN_STEP: f64 = 0.618_033_988_749_894_9;
// keeps the row-selection stream apart from the generator stream of the same seed
const CORRUPTION_STREAM: u64 = 0x6d6f_7469_6f6e;

/// Motion model: a fraction of phase-encode rows (image rows) of the
/// spectrum is taken from a copy of the image displaced along the rows by
/// `motion_shift` pixels and rotated by `motion_rotation_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Replaced fraction for severity `k` at index `k - 1`.
    pub line_fractions: Vec<f64>,
    pub motion_shift: f64,
    pub motion_rotation_deg: f64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            line_fractions: vec![0.02, 0.12, 0.30],
            motion_shift: 3.0,
            motion_rotation_deg: 2.0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.line_fractions.is_empty() {
            return Err(Error::InvalidArgument("no line fractions given".into()));
        }
        if let Some(f) = self.line_fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return Err(Error::InvalidArgument(format!("line fraction {f} outside [0, 1)")));
        }
        if self.line_fractions.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument(format!(
                "line fractions must increase with severity: {:?}",
                self.line_fractions
            )));
        }
        if !self.motion_shift.is_finite() || !self.motion_rotation_deg.is_finite() {
            return Err(Error::InvalidArgument("motion parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn num_severities(&self) -> usize {
        self.line_fractions.len()
    }

    pub fn line_fraction(&self, severity: RankLabel) -> Result<f64> {
        severity.check(self.num_severities())?;
        Ok(self.line_fractions[severity.index()])
    }
}

/// Number of replaced rows: `round(fraction · H)`, at least one for a
/// positive fraction.
pub fn replaced_line_count(fraction: f64, height: usize) -> usize {
    if fraction <= 0.0 {
        return 0;
    }
    ((fraction * height as f64).round() as usize).clamp(1, height)
}

/// First `n` distinct rows of a golden-ratio sequence with seeded offset.
/// The sequence is shared across severities, so a higher severity replaces a
/// superset of a lower one's rows.
pub fn replaced_rows(height: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ CORRUPTION_STREAM);
    let offset: f64 = rng.gen();
    let mut taken = vec![false; height];
    let mut rows = Vec::with_capacity(n);
    let mut j = 0u64;
    while rows.len() < n.min(height) {
        let k = ((height as f64 * (offset + j as f64 * GOLDEN_STEP).fract()) as usize).min(height - 1);
        j += 1;
        if !taken[k] {
            taken[k] = true;
            rows.push(k);
        }
    }
    rows
}

fn bilinear(image: &Image, y: f64, x: f64) -> f64 {
    let (h, w) = image.dims();
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let at = |r: f64, c: f64| -> f64 {
        if r < 0.0 || c < 0.0 || r >= h as f64 || c >= w as f64 {
            0.0
        } else {
            image.get(r as usize, c as usize)
        }
    };
    (1.0 - fy) * ((1.0 - fx) * at(y0, x0) + fx * at(y0, x0 + 1.0))
        + fy * ((1.0 - fx) * at(y0 + 1.0, x0) + fx * at(y0 + 1.0, x0 + 1.0))
}

/// Shift along the rows by `shift` pixels, then rotate about the image
/// centre by `rotation_deg`; bilinear sampling, zero outside.
pub fn displace(image: &Image, shift: f64, rotation_deg: f64) -> Image {
    let (h, w) = image.dims();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (s, c) = rotation_deg.to_radians().sin_cos();
    let mut out = Image::filled(h, w, 0.0);
    for r in 0..h {
        for col in 0..w {
            let (dy, dx) = (r as f64 - cy, col as f64 - cx);
            // inverse rotation, then undo the shift
            let sy = c * dy - s * dx + cy - shift;
            let sx = s * dy + c * dx + cx;
            out.set(r, col, bilinear(image, sy, sx));
        }
    }
    out
}

/// Corrupts `phantom.image` at `severity`; the mask is left untouched.
pub fn corrupt_kspace(phantom: &Phantom, severity: RankLabel, spec: &CorruptionSpec, seed: u64) -> Result<Phantom> {
    spec.validate()?;
    let fraction = spec.line_fraction(severity)?;
    let h = phantom.image.height();
    let n = replaced_line_count(fraction, h);
    let mut out = phantom.clone();
    out.severity = severity;
    if n == 0 {
        return Ok(out);
    }
    let mut spectrum = dft2(&phantom.image);
    let moved = dft2(&displace(&phantom.image, spec.motion_shift, spec.motion_rotation_deg));
    for row in replaced_rows(h, n, seed) {
        spectrum.row_mut(row).copy_from_slice(moved.row(row));
    }
    out.image = idft2(&spectrum);
    // Clip rather than min-max rescale: a rescale driven by ringing
    // overshoot can shrink the artefact of a worse corruption below a
    // milder one. The clean image already spans [0, 1].
    for v in out.image.as_mut_slice() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::generate::make_phantom;
    use super::*;

    fn sev(k: usize) -> RankLabel {
        RankLabel::new(k, 3).unwrap()
    }

    #[test]
    fn zero_fraction_is_identity() {
        let p = make_phantom(1, 64, 64).unwrap();
        let spec = CorruptionSpec {
            line_fractions: vec![0.0, 0.1, 0.2],
            ..CorruptionSpec::default()
        };
        let c = corrupt_kspace(&p, sev(1), &spec, 9).unwrap();
        assert_eq!(c.image, p.image);
        assert_eq!(c.severity, sev(1));
    }

    #[test]
    fn invalid_fractions_rejected() {
        let p = make_phantom(1, 64, 64).unwrap();
        for bad in [vec![0.1, 1.0], vec![-0.1, 0.2], vec![0.2, 0.2], vec![0.3, 0.1]] {
            let spec = CorruptionSpec {
                line_fractions: bad,
                ..CorruptionSpec::default()
            };
            assert!(corrupt_kspace(&p, sev(1), &spec, 0).is_err());
        }
    }

    #[test]
    fn rows_are_nested_and_distinct() {
        let a = replaced_rows(64, 8, 5);
        let b = replaced_rows(64, 19, 5);
        assert_eq!(&b[..8], &a[..]);
        let mut s = b.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 19);
        assert_eq!(replaced_rows(64, 64, 1).len(), 64);
        assert_eq!(replaced_line_count(0.02, 64), 1);
        assert_eq!(replaced_line_count(0.30, 64), 19);
    }

    #[test]
    fn mask_untouched_and_deterministic() {
        let p = make_phantom(4, 64, 64).unwrap();
        let spec = CorruptionSpec::default();
        let a = corrupt_kspace(&p, sev(3), &spec, 4).unwrap();
        let b = corrupt_kspace(&p, sev(3), &spec, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mask, p.mask);
        assert_ne!(a.image, p.image);
    }

    #[test]
    fn displacement_moves_content() {
        let mut img = Image::filled(9, 9, 0.0);
        img.set(2, 4, 1.0);
        let d = displace(&img, 3.0, 0.0);
        assert!((d.get(5, 4) - 1.0).abs() < 1e-12);
        assert_eq!(d.get(2, 4), 0.0);
    }
}
