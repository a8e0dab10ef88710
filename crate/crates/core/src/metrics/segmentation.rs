use crate::error::{Error, Result};
use crate::image::{Grid, LabelMap};

const HD_PERCENTILE: f64 = 0.95;

fn check_shapes(pred: &LabelMap, truth: &LabelMap) -> Result<()> {
    if !pred.same_shape(truth) {
        return Err(Error::Shape(format!(
            "mask shapes {:?} vs {:?}",
            pred.dims(),
            truth.dims()
        )));
    }
    Ok(())
}

/// Sørensen–Dice overlap of one label. Two empty masks score 1.
pub fn dice(pred: &LabelMap, truth: &LabelMap, label: u8) -> Result<f64> {
    check_shapes(pred, truth)?;
    let (mut a, mut b, mut both) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        let (ip, it) = (p == label, t == label);
        a += usize::from(ip);
        b += usize::from(it);
        both += usize::from(ip && it);
    }
    if a + b == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (a + b) as f64)
}

pub fn mean_dice(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("mean of no Dice values".into()));
    }
    // running mean: exact when all values are equal
    Ok(values
        .iter()
        .enumerate()
        .fold(0.0, |m, (i, &v)| m + (v - m) / (i + 1) as f64))
}

/// Boundary pixels of a binary mask with per-axis spacing `[row, col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSet {
    pub points: Vec<(usize, usize)>,
    pub spacing: [f64; 2],
}

/// Mask pixels with at least one 4-neighbour outside the mask; pixels
/// beyond the array bounds count as background.
pub fn surface(mask: &Grid<bool>, spacing: [f64; 2]) -> SurfaceSet {
    let (h, w) = mask.dims();
    let mut points = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let edge = r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !mask.get(r - 1, c)
                || !mask.get(r + 1, c)
                || !mask.get(r, c - 1)
                || !mask.get(r, c + 1);
            if edge {
                points.push((r, c));
            }
        }
    }
    SurfaceSet { points, spacing }
}

/// One-dimensional lower envelope of `((q - p) * step)^2 + f(p)` over the
/// finite entries of `f` (Felzenszwalb–Huttenlocher).
fn envelope_1d(f: &[f64], step: f64, out: &mut [f64]) {
    let sites: Vec<usize> = (0..f.len()).filter(|&p| f[p].is_finite()).collect();
    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let s2 = step * step;
    let meet = |a: usize, b: usize| -> f64 {
        let (fa, fb) = (f[a], f[b]);
        let (xa, xb) = (a as f64, b as f64);
        ((fb + s2 * xb * xb) - (fa + s2 * xa * xa)) / (2.0 * s2 * (xb - xa))
    };
    let mut hull: Vec<usize> = Vec::with_capacity(sites.len());
    let mut bounds: Vec<f64> = Vec::with_capacity(sites.len());
    for &q in &sites {
        while let Some(&top) = hull.last() {
            let x = meet(top, q);
            if hull.len() > 1 && x <= *bounds.last().expect("paired with hull") {
                hull.pop();
                bounds.pop();
            } else {
                hull.push(q);
                bounds.push(x);
                break;
            }
        }
        if hull.is_empty() {
            hull.push(q);
            bounds.push(f64::NEG_INFINITY);
        }
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < hull.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let v = hull[k];
        let d = (q as f64 - v as f64) * step;
        *o = d * d + f[v];
    }
}

/// Squared Euclidean distance from every pixel to the nearest point of `set`.
fn squared_distance_map(dims: (usize, usize), set: &SurfaceSet) -> Vec<f64> {
    let (h, w) = dims;
    let [sr, sc] = set.spacing;
    let mut grid = vec![f64::INFINITY; h * w];
    for &(r, c) in &set.points {
        grid[r * w + c] = 0.0;
    }
    let mut col = vec![0.0; h];
    let mut tmp = vec![0.0; h];
    for c in 0..w {
        for r in 0..h {
            col[r] = grid[r * w + c];
        }
        envelope_1d(&col, sr, &mut tmp);
        for r in 0..h {
            grid[r * w + c] = tmp[r];
        }
    }
    let mut row_out = vec![0.0; w];
    for r in 0..h {
        envelope_1d(&grid[r * w..(r + 1) * w], sc, &mut row_out);
        grid[r * w..(r + 1) * w].copy_from_slice(&row_out);
    }
    grid
}

/// Linear interpolation between order statistics at zero-based rank `q (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    match sorted.len() {
        0 => None,
        1 => Some(sorted[0]),
        n => {
            let rank = q * (n - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = rank - lo as f64;
            Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
        }
    }
}

/// Both directed surface-distance multisets, pooled and sorted. `None` if
/// either mask lacks the label.
pub fn pooled_surface_distances(
    pred: &LabelMap,
    truth: &LabelMap,
    label: u8,
    spacing: [f64; 2],
) -> Result<Option<Vec<f64>>> {
    check_shapes(pred, truth)?;
    if spacing.iter().any(|s| *s <= 0.0 || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("spacing must be positive, got {spacing:?}")));
    }
    let a = surface(&pred.binarize(label), spacing);
    let b = surface(&truth.binarize(label), spacing);
    if a.points.is_empty() || b.points.is_empty() {
        return Ok(None);
    }
    let dims = pred.dims();
    let w = dims.1;
    let to_b = squared_distance_map(dims, &b);
    let to_a = squared_distance_map(dims, &a);
    let mut d: Vec<f64> = a
        .points
        .iter()
        .map(|&(r, c)| to_b[r * w + c].sqrt())
        .chain(b.points.iter().map(|&(r, c)| to_a[r * w + c].sqrt()))
        .collect();
    d.sort_by(f64::total_cmp);
    Ok(Some(d))
}

/// 95th percentile of the pooled directed surface distances.
pub fn hd95(pred: &LabelMap, truth: &LabelMap, label: u8, spacing: [f64; 2]) -> Result<Option<f64>> {
    Ok(pooled_surface_distances(pred, truth, label, spacing)?
        .and_then(|d| percentile(&d, HD_PERCENTILE)))
}

/// Classical Hausdorff distance between the two surfaces.
pub fn hausdorff(pred: &LabelMap, truth: &LabelMap, label: u8, spacing: [f64; 2]) -> Result<Option<f64>> {
    Ok(pooled_surface_distances(pred, truth, label, spacing)?.and_then(|d| d.last().copied()))
}
