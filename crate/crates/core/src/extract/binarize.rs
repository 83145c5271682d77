use image::RgbImage;

use crate::preprocess::{otsu_bin, scharr_gradient, GrayFrame};
use crate::{Error, Rect, Result};

/// Binary band image, 1 = text foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryBandImage {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<u8>,
}

impl BinaryBandImage {
    pub fn new(width: u32, height: u32, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::BadDimensions {
                width: width as usize,
                height: height as usize,
                got: bits.len(),
            });
        }
        Ok(BinaryBandImage {
            width,
            height,
            bits: bits.into_iter().map(|b| u8::from(b != 0)).collect(),
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        BinaryBandImage {
            width,
            height,
            bits: vec![0; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn hamming(&self, other: &BinaryBandImage) -> Option<usize> {
        (self.width == other.width && self.height == other.height)
            .then(|| self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    /// Nearest-neighbor resampling.
    pub fn resample(&self, width: u32, height: u32) -> BinaryBandImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            let sy = (y as u64 * self.height as u64 / height.max(1) as u64) as u32;
            for x in 0..width {
                let sx = (x as u64 * self.width as u64 / width.max(1) as u64) as u32;
                bits.push(self.get(sx, sy));
            }
        }
        BinaryBandImage { width, height, bits }
    }

    /// 8-bit rendering with black text on white.
    pub fn to_gray_bytes(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b != 0 { 0 } else { 255 }).collect()
    }
}

/// Integer Rec.601 luminance.
#[inline]
pub(crate) fn luma8(p: &image::Rgb<u8>) -> u8 {
    ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8
}

/// Otsu split of the band's luminance. The class whose pixels carry more
/// gradient on average is the text; on a tie the smaller class is.
pub fn binarize_band(frame: &RgbImage, rect: &Rect) -> Result<BinaryBandImage> {
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
    let (w, h) = (rect.w as usize, rect.h as usize);
    let mut lum = Vec::with_capacity(w * h);
    for y in rect.y..rect.bottom() {
        for x in rect.x..rect.right() {
            lum.push(luma8(frame.get_pixel(x, y)));
        }
    }
    let mut hist = [0u64; 256];
    for &l in &lum {
        hist[l as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Ok(BinaryBandImage::zeros(rect.w, rect.h));
    }
    let k = otsu_bin(&hist)? as u8;

    let grad: Vec<f32> = if w >= 3 && h >= 3 {
        let g = GrayFrame::new(w, h, lum.iter().map(|&l| l as f32 / 255.0).collect())?;
        scharr_gradient(&g).mag
    } else {
        vec![0.0; w * h]
    };
    let (mut sum_hi, mut n_hi, mut sum_lo, mut n_lo) = (0f64, 0usize, 0f64, 0usize);
    for (&l, &g) in lum.iter().zip(&grad) {
        if l > k {
            sum_hi += g as f64;
            n_hi += 1;
        } else {
            sum_lo += g as f64;
            n_lo += 1;
        }
    }
    let mean_hi = sum_hi / n_hi as f64;
    let mean_lo = sum_lo / n_lo as f64;
    let bright_text = if mean_hi != mean_lo {
        mean_hi > mean_lo
    } else {
        n_hi < n_lo
    };
    let bits = lum.iter().map(|&l| u8::from((l > k) == bright_text)).collect();
    Ok(BinaryBandImage {
        width: rect.w,
        height: rect.h,
        bits,
    })
}
