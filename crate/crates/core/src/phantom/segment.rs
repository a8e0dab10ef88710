use super::generate::{BACKGROUND, LV, MYO, RV};
use crate::image::{connected_components, neighbours4, Grid, Image, LabelMap};

/// Normalized-intensity cut between body texture and myocardium.
pub const MYO_THRESHOLD: f64 = 0.27;
/// Normalized-intensity cut between myocardium and blood pools.
pub const BLOOD_THRESHOLD: f64 = 0.6;
const MIN_COMPONENT: usize = 4;
const MIN_ENCLOSURE: f64 = 0.5;

/// Fraction of a component's outer 4-neighbourhood (out of bounds included)
/// that falls on `ring`.
fn enclosure(labels: &Grid<u32>, id: u32, ring: &Grid<bool>) -> f64 {
    let (h, w) = labels.dims();
    let (mut total, mut hits) = (0usize, 0usize);
    for r in 0..h {
        for c in 0..w {
            if labels.get(r, c) != id {
                continue;
            }
            let inside = neighbours4(h, w, r, c).count();
            total += 4 - inside;
            for (rr, cc) in neighbours4(h, w, r, c) {
                if labels.get(rr, cc) != id {
                    total += 1;
                    hits += usize::from(ring.get(rr, cc));
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Marks background pockets of `mask` that do not reach the border.
fn fill_holes(mask: &Grid<bool>) -> Grid<bool> {
    let (h, w) = mask.dims();
    let outside = connected_components(&mask.map(|v| !v));
    let mut touches = vec![false; outside.len() + 1];
    for r in 0..h {
        for c in 0..w {
            if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
                touches[outside.labels.get(r, c) as usize] = true;
            }
        }
    }
    let mut filled = mask.clone();
    for r in 0..h {
        for c in 0..w {
            let id = outside.labels.get(r, c);
            if id != 0 && !touches[id as usize] {
                filled.set(r, c, true);
            }
        }
    }
    filled
}

/// Threshold-and-components segmenter matched to the phantom palette:
/// the bright component best enclosed by mid-intensity tissue is the LV, the
/// largest other bright component the RV, and the mid-intensity components
/// touching the LV the myocardium. Total failure yields all background.
pub fn reference_segment(image: &Image) -> LabelMap {
    let (h, w) = image.dims();
    let mut out = LabelMap::filled(h, w, BACKGROUND);
    let blood = image.map(|v| v >= BLOOD_THRESHOLD);
    let ring = image.map(|v| (MYO_THRESHOLD..BLOOD_THRESHOLD).contains(&v));
    let cc = connected_components(&blood);

    let candidates: Vec<u32> = (1..=cc.len() as u32)
        .filter(|&id| cc.sizes[id as usize - 1] >= MIN_COMPONENT)
        .collect();
    let lv = candidates
        .iter()
        .map(|&id| (id, enclosure(&cc.labels, id, &ring)))
        .filter(|&(_, e)| e >= MIN_ENCLOSURE)
        .max_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(cc.sizes[a.0 as usize - 1].cmp(&cc.sizes[b.0 as usize - 1]))
                .then(b.0.cmp(&a.0))
        })
        .map(|(id, _)| id);
    let rv = candidates
        .iter()
        .copied()
        .filter(|&id| Some(id) != lv)
        .max_by(|&a, &b| cc.sizes[a as usize - 1].cmp(&cc.sizes[b as usize - 1]).then(b.cmp(&a)));

    if let Some(id) = rv {
        for (r, c) in cc.pixels(id) {
            out.set(r, c, RV);
        }
    }
    let Some(lv) = lv else {
        return out;
    };
    let lv_mask = fill_holes(&cc.labels.map(|l| l == lv));
    let rings = connected_components(&ring);
    let mut keep = vec![false; rings.len() + 1];
    for r in 0..h {
        for c in 0..w {
            if lv_mask.get(r, c) {
                for (rr, cc2) in neighbours4(h, w, r, c) {
                    keep[rings.labels.get(rr, cc2) as usize] = true;
                }
            }
        }
    }
    keep[0] = false;
    for r in 0..h {
        for c in 0..w {
            if lv_mask.get(r, c) {
                out.set(r, c, LV);
            } else if keep[rings.labels.get(r, c) as usize]
                && rings.sizes[rings.labels.get(r, c) as usize - 1] >= MIN_COMPONENT
                && out.get(r, c) == BACKGROUND
            {
                out.set(r, c, MYO);
            }
        }
    }
    out
}
