use image::RgbImage;

use crate::{Error, Rect, Result, Scalar};

pub const COLOR_BINS: usize = 512;

/// Normalized 8x8x8 RGB histogram. All zeros for an empty region.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorHistogram<T> {
    bins: Vec<T>,
}

impl<T: Scalar> ColorHistogram<T> {
    pub fn empty() -> Self {
        ColorHistogram {
            bins: vec![T::zero(); COLOR_BINS],
        }
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        if weights.len() != COLOR_BINS {
            return Err(Error::InvalidParameter(format!(
                "color histogram needs {COLOR_BINS} bins, got {}",
                weights.len()
            )));
        }
        let mut h = ColorHistogram { bins: weights };
        h.normalize();
        Ok(h)
    }

    pub fn bins(&self) -> &[T] {
        &self.bins
    }

    fn normalize(&mut self) {
        let total: T = self.bins.iter().copied().sum();
        if total > T::zero() {
            self.bins.iter_mut().for_each(|b| *b /= total);
        }
    }

    /// `(1 - w) * self + w * other`, renormalized.
    pub fn blend(&self, other: &Self, w: T) -> Self {
        let keep = T::one() - w;
        let mut out = ColorHistogram {
            bins: self
                .bins
                .iter()
                .zip(&other.bins)
                .map(|(&a, &b)| keep * a + w * b)
                .collect(),
        };
        out.normalize();
        out
    }
}

#[inline]
pub fn color_bin(r: u8, g: u8, b: u8) -> usize {
    ((r as usize >> 5) << 6) | ((g as usize >> 5) << 3) | (b as usize >> 5)
}

pub fn histogram_of_region<T: Scalar>(frame: &RgbImage, rect: &Rect) -> Result<ColorHistogram<T>> {
    if rect.is_empty() {
        return Err(Error::ZeroArea);
    }
    if !rect.fits_in(frame.width(), frame.height()) {
        return Err(Error::OutOfBounds {
            rect: *rect,
            width: frame.width(),
            height: frame.height(),
        });
    }
    let mut counts = vec![0u32; COLOR_BINS];
    for y in rect.y..rect.bottom() {
        for x in rect.x..rect.right() {
            let p = frame.get_pixel(x, y);
            counts[color_bin(p[0], p[1], p[2])] += 1;
        }
    }
    let inv = 1.0 / rect.area() as f64;
    Ok(ColorHistogram {
        bins: counts.into_iter().map(|c| T::lit(c as f64 * inv)).collect(),
    })
}

/// Histogram intersection `Σ min(a_k, b_k)`.
pub fn histogram_similarity<T: Scalar>(a: &ColorHistogram<T>, b: &ColorHistogram<T>) -> T {
    a.bins.iter().zip(&b.bins).map(|(&x, &y)| x.min(y)).sum()
}
