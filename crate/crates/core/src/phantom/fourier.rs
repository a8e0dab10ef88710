use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image;

/// H×W complex frequency-domain array, row-major, unnormalized forward
/// convention `X[k,l] = Σ x[m,n] e^{-2πi(km/H + ln/W)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != height * width || data.is_empty() {
            return Err(Error::Shape(format!(
                "spectrum {height}x{width} needs {} bins, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [Complex64] {
        &mut self.data[row * self.width..(row + 1) * self.width]
    }

    /// `Σ |X|²` over all bins.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// In-place separable transform: every row, then every column.
fn transform(data: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = data[r * w + c];
        }
        col_fft.process(&mut col);
        for r in 0..h {
            data[r * w + c] = col[r];
        }
    }
}

pub fn dft2(image: &Image) -> ComplexSpectrum {
    let (h, w) = image.dims();
    let mut data: Vec<Complex64> = image.as_slice().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    transform(&mut data, h, w, false);
    ComplexSpectrum { height: h, width: w, data }
}

/// Inverse transform scaled by `1/(HW)`; the imaginary residue is dropped.
pub fn idft2(spectrum: &ComplexSpectrum) -> Image {
    let (h, w) = (spectrum.height, spectrum.width);
    let mut data = spectrum.data.clone();
    transform(&mut data, h, w, true);
    let scale = 1.0 / (h * w) as f64;
    Image::from_vec(h, w, data.iter().map(|z| z.re * scale).collect()).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_pure_dc() {
        let img = Image::filled(8, 6, 0.5);
        let s = dft2(&img);
        assert!((s.get(0, 0).re - 24.0).abs() < 1e-12);
        let off: f64 = s.as_slice()[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(off < 1e-12);
    }

    #[test]
    fn round_trip_small() {
        let data: Vec<f64> = (0..35).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let img = Image::from_vec(5, 7, data).unwrap();
        let back = idft2(&dft2(&img));
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
