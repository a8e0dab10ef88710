#![allow(dead_code)]

use ordgate::image::LabelMap;
use rand::Rng;

/// Boundary pixels straight from the definition: in the mask with a
/// 4-neighbour outside it or outside the array.
pub fn brute_surface(mask: &LabelMap, label: u8) -> Vec<(i64, i64)> {
    let (h, w) = (mask.height() as i64, mask.width() as i64);
    let inside = |r: i64, c: i64| r >= 0 && c >= 0 && r < h && c < w && mask.get(r as usize, c as usize) == label;
    let mut pts = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if inside(r, c) && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|(dr, dc)| !inside(r + dr, c + dc)) {
                pts.push((r, c));
            }
        }
    }
    pts
}

/// All-pairs pooled directed surface distances, sorted.
pub fn brute_pooled(a: &LabelMap, b: &LabelMap, label: u8, spacing: [f64; 2]) -> Option<Vec<f64>> {
    let sa = brute_surface(a, label);
    let sb = brute_surface(b, label);
    if sa.is_empty() || sb.is_empty() {
        return None;
    }
    let directed = |from: &[(i64, i64)], to: &[(i64, i64)]| -> Vec<f64> {
        from.iter()
            .map(|&(r, c)| {
                to.iter()
                    .map(|&(r2, c2)| {
                        let dy = (r - r2) as f64 * spacing[0];
                        let dx = (c - c2) as f64 * spacing[1];
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .collect()
    };
    let mut d = directed(&sa, &sb);
    d.extend(directed(&sb, &sa));
    d.sort_by(f64::total_cmp);
    Some(d)
}

pub fn brute_hd95(a: &LabelMap, b: &LabelMap, label: u8, spacing: [f64; 2]) -> Option<f64> {
    let d = brute_pooled(a, b, label, spacing)?;
    let rank = 0.95 * (d.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(d[lo] + (d[hi] - d[lo]) * (rank - lo as f64))
}

pub fn brute_dice(a: &LabelMap, b: &LabelMap, label: u8) -> f64 {
    let mut inter = 0;
    let mut na = 0;
    let mut nb = 0;
    for r in 0..a.height() {
        for c in 0..a.width() {
            let (x, y) = (a.get(r, c) == label, b.get(r, c) == label);
            na += x as usize;
            nb += y as usize;
            inter += (x && y) as usize;
        }
    }
    if na + nb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (na + nb) as f64
    }
}

/// Random label map whose density of non-background labels varies per call.
pub fn random_mask<R: Rng>(rng: &mut R, h: usize, w: usize) -> LabelMap {
    let density: f64 = rng.gen_range(0.0..1.0);
    let blobby = rng.gen_bool(0.5);
    let mut m = LabelMap::filled(h, w, 0);
    if blobby {
        for _ in 0..rng.gen_range(0..4) {
            let (cr, cc) = (rng.gen_range(0..h) as f64, rng.gen_range(0..w) as f64);
            let rad = rng.gen_range(1.0..(h.max(w) as f64 / 2.0).max(1.5));
            let label = rng.gen_range(1..=3);
            for r in 0..h {
                for c in 0..w {
                    if (r as f64 - cr).hypot(c as f64 - cc) < rad {
                        m.set(r, c, label);
                    }
                }
            }
        }
    } else {
        for r in 0..h {
            for c in 0..w {
                if rng.gen_bool(density) {
                    m.set(r, c, rng.gen_range(1..=3));
                }
            }
        }
    }
    m
}

pub const DYADIC_SPACINGS: [f64; 4] = [0.5, 1.0, 1.25, 2.0];
