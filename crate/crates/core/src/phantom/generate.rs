use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{connected_components, neighbours4, Image, LabelMap};
use crate::ordinal::RankLabel;

pub const BACKGROUND: u8 = 0;
pub const LV: u8 = 1;
pub const MYO: u8 = 2;
pub const RV: u8 = 3;
pub const LABELS: [u8; 3] = [LV, MYO, RV];

/// Severity levels of the synthetic dataset.
pub const NUM_SEVERITIES: usize = 3;
pub const MIN_SIDE: usize = 32;

const REFERENCE_SIDE: f64 = 64.0;
const MIN_REGION_PIXELS: usize = 10;
const MAX_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: Image,
    pub mask: LabelMap,
    pub severity: RankLabel,
    pub seed: u64,
}

/// Stretches `image` to span `[0, 1]`; a constant image becomes all zeros.
pub fn normalize_unit(image: &mut Image) {
    let (lo, hi) = image
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    for v in image.as_mut_slice() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

struct Geometry {
    mask: LabelMap,
    body: Vec<bool>,
}

/// Lengths below are in pixels at 64×64 and scale with `min(H, W)`:
///
/// * heart centre within ±4 of the image centre
/// * LV semi-radius 5–8, myocardium thickness 3–5, axis ratio 0.85–1.15,
///   arbitrary orientation
/// * RV ellipse to the left of the LV, kept one pixel clear of the
///   myocardium so that it reads as a crescent
/// * body ellipse with semi-axes 0.36 W × 0.32 H
fn sample_geometry(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Geometry {
    let s = h.min(w) as f64 / REFERENCE_SIDE;
    let cx = w as f64 / 2.0 + rng.gen_range(-4.0..4.0) * s;
    let cy = h as f64 / 2.0 + rng.gen_range(-4.0..4.0) * s;
    let rlv = rng.gen_range(5.0..8.0) * s;
    let th = rng.gen_range(3.0..5.0) * s;
    let ax: f64 = rng.gen_range(0.85..1.15);
    let ang: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let ro = rlv + th;
    let rcx = cx - ro * rng.gen_range(0.9..1.2);
    let rcy = cy + rng.gen_range(-3.0..3.0) * s;
    let rax = ro * rng.gen_range(0.9..1.1);
    let ray = ro * rng.gen_range(1.1..1.4);
    let (ca, sa) = (ang.cos(), ang.sin());

    let mut mask = LabelMap::filled(h, w, BACKGROUND);
    let mut body = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            let (x, y) = (c as f64, r as f64);
            let u = (x - cx) * ca + (y - cy) * sa;
            let v = -(x - cx) * sa + (y - cy) * ca;
            let d = ((u / ax).powi(2) + (v * ax).powi(2)).sqrt();
            let drv = (((x - rcx) / rax).powi(2) + ((y - rcy) / ray).powi(2)).sqrt();
            let label = if d < rlv {
                LV
            } else if d < ro {
                MYO
            } else if drv < 1.0 && d >= ro + s {
                RV
            } else {
                BACKGROUND
            };
            mask.set(r, c, label);
            let bx = (x - w as f64 / 2.0) / (w as f64 * 0.36);
            let by = (y - h as f64 / 2.0) / (h as f64 * 0.32);
            body[r * w + c] = bx * bx + by * by < 1.0;
        }
    }
    Geometry { mask, body }
}

fn geometry_ok(mask: &LabelMap) -> bool {
    let (h, w) = mask.dims();
    if LABELS.iter().any(|&l| mask.count(l) < MIN_REGION_PIXELS) {
        return false;
    }
    for l in [LV, RV] {
        if connected_components(&mask.binarize(l)).len() != 1 {
            return false;
        }
    }
    // LV must be enclosed: no LV pixel on the border or next to non-MYO
    (0..h).all(|r| {
        (0..w).all(|c| {
            mask.get(r, c) != LV
                || (r > 0
                    && c > 0
                    && r + 1 < h
                    && c + 1 < w
                    && neighbours4(h, w, r, c).all(|(rr, cc)| matches!(mask.get(rr, cc), LV | MYO)))
        })
    })
}

/// Clean (severity 1) phantom. Intensities before the final min-max stretch:
/// body texture 0.15 ± 0.04, MYO 0.35–0.45, RV 0.75–0.85, LV 0.85–0.95,
/// additive Gaussian noise σ = 0.01.
pub fn make_phantom(seed: u64, height: usize, width: usize) -> Result<Phantom> {
    if height < MIN_SIDE || width < MIN_SIDE {
        return Err(Error::InvalidArgument(format!(
            "phantom needs at least {MIN_SIDE}x{MIN_SIDE}, got {height}x{width}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = (0..MAX_ATTEMPTS)
        .map(|_| sample_geometry(&mut rng, height, width))
        .find(|g| geometry_ok(&g.mask))
        .ok_or_else(|| Error::Numerical(format!("phantom geometry for seed {seed} kept degenerating")))?;

    let s = height.min(width) as f64 / REFERENCE_SIDE;
    let fx = rng.gen_range(0.1..0.3) / s;
    let px = rng.gen_range(0.0..6.0);
    let fy = rng.gen_range(0.1..0.3) / s;
    let py = rng.gen_range(0.0..6.0);
    let myo = rng.gen_range(0.35..0.45);
    let lv = rng.gen_range(0.85..0.95);
    let rv = rng.gen_range(0.75..0.85);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");

    let mut image = Image::filled(height, width, 0.0);
    for r in 0..height {
        for c in 0..width {
            let base = match geom.mask.get(r, c) {
                LV => lv,
                MYO => myo,
                RV => rv,
                _ if geom.body[r * width + c] => {
                    0.15 + 0.04 * (c as f64 * fx + px).sin() * (r as f64 * fy + py).cos()
                }
                _ => 0.0,
            };
            image.set(r, c, base + noise.sample(&mut rng));
        }
    }
    normalize_unit(&mut image);
    Ok(Phantom {
        image,
        mask: geom.mask,
        severity: RankLabel::new(1, NUM_SEVERITIES).expect("1 is a valid rank"),
        seed,
    })
}
