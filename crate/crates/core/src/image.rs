//! Dense row-major 2D grids used for images and label maps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

/// Real-valued image, intensities nominally in `[0, 1]`.
pub type Image = Grid<f64>;

/// Integer label map. Segmentation masks use `0` background, `1` LV, `2` MYO, `3` RV.
pub type LabelMap = Grid<u8>;

impl<T: Copy> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "grid {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width
    }
}

impl LabelMap {
    /// Number of pixels carrying `label`.
    pub fn count(&self, label: u8) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }

    /// Boolean mask of the pixels carrying `label`.
    pub fn binarize(&self, label: u8) -> Grid<bool> {
        self.map(|v| v == label)
    }
}

/// 4-connected components of a binary mask. `labels` holds 0 off the mask
/// and `1..=sizes.len()` on it, numbered in raster order of first pixel.
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Grid<u32>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Pixels of component `id` (1-based).
    pub fn pixels(&self, id: u32) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.labels.width();
        self.labels
            .as_slice()
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == id)
            .map(move |(i, _)| (i / w, i % w))
    }
}

/// Up to four in-bounds 4-neighbours of `(r, c)`.
pub fn neighbours4(h: usize, w: usize, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> {
    let cand = [
        (r.wrapping_sub(1), c),
        (r + 1, c),
        (r, c.wrapping_sub(1)),
        (r, c + 1),
    ];
    cand.into_iter().filter(move |&(rr, cc)| rr < h && cc < w)
}

pub fn connected_components(mask: &Grid<bool>) -> Components {
    let (h, w) = mask.dims();
    let mut labels = Grid::filled(h, w, 0u32);
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..h * w {
        if !mask.data[start] || labels.data[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        let mut size = 0;
        labels.data[start] = id;
        stack.push((start / w, start % w));
        while let Some((r, c)) = stack.pop() {
            size += 1;
            for (rr, cc) in neighbours4(h, w, r, c) {
                let i = rr * w + cc;
                if mask.data[i] && labels.data[i] == 0 {
                    labels.data[i] = id;
                    stack.push((rr, cc));
                }
            }
        }
        sizes.push(size);
    }
    Components { labels, sizes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_four_connectivity() {
        // diagonal neighbours are separate components
        let m = Grid::from_vec(3, 3, vec![true, false, false, false, true, true, false, false, true]).unwrap();
        let cc = connected_components(&m);
        assert_eq!(cc.sizes, vec![1, 3]);
        assert_eq!(cc.labels.get(2, 2), 2);
        assert_eq!(cc.pixels(1).collect::<Vec<_>>(), vec![(0, 0)]);
    }

    #[test]
    fn grid_shape_checked() {
        assert!(Grid::from_vec(2, 2, vec![0u8; 3]).is_err());
        let g = LabelMap::from_vec(1, 4, vec![0, 1, 1, 3]).unwrap();
        assert_eq!(g.count(1), 2);
        assert_eq!(g.binarize(3).as_slice(), &[false, false, false, true]);
    }
}
