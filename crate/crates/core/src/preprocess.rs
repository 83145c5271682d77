//! Contrast-enhanced edge map: Scharr gradient magnitude, an Otsu-anchored
//! linear stretch that zeroes weak gradients, then histogram equalization of
//! the surviving magnitudes.

use image::RgbImage;
use num_bigint::BigUint;

use crate::{Error, Result, Scalar};

/// Upper cap on the stretch factor when the Otsu threshold sits at or above
/// the middle of the normalized range.
pub const ALPHA_MAX: f64 = 100.0;
/// Lower clamp; a stretch factor of exactly 1 suppresses nothing.
pub const ALPHA_MIN: f64 = 1.0 + 1e-6;

pub const HIST_BINS: usize = 256;

/// Luminance frame with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame<T> {
    width: usize,
    height: usize,
    lum: Vec<T>,
}

impl<T: Scalar> GrayFrame<T> {
    pub fn new(width: usize, height: usize, lum: Vec<T>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::FrameTooSmall { width, height });
        }
        if lum.len() != width * height {
            return Err(Error::BadDimensions {
                width,
                height,
                got: lum.len(),
            });
        }
        if lum.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(Error::InvalidParameter(
                "luminance values must lie in [0, 1]".into(),
            ));
        }
        Ok(GrayFrame { width, height, lum })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut lum = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                lum.push(f(x, y));
            }
        }
        Self::new(width, height, lum)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn lum(&self) -> &[T] {
        &self.lum
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.lum[y * self.width + x]
    }
}

/// Per-pixel gradient magnitude and its maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap<T> {
    pub width: usize,
    pub height: usize,
    pub mag: Vec<T>,
    pub g_max: T,
}

impl<T: Scalar> GradientMap<T> {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.mag[y * self.width + x]
    }

    /// Magnitudes divided by `g_max` (all zeros for a blank map).
    pub fn normalized(&self) -> Vec<T> {
        if self.g_max <= T::zero() {
            return vec![T::zero(); self.mag.len()];
        }
        let inv = T::one() / self.g_max;
        self.mag.iter().map(|&m| (m * inv).min(T::one())).collect()
    }

    /// 256-bin histogram of the normalized magnitudes.
    pub fn histogram(&self) -> [u64; HIST_BINS] {
        let mut hist = [0u64; HIST_BINS];
        for x in self.normalized() {
            hist[bin_of(x)] += 1;
        }
        hist
    }
}

#[inline]
fn bin_of<T: Scalar>(x: T) -> usize {
    let b = (x * T::from_count(HIST_BINS)).floor().to_usize().unwrap_or(0);
    b.min(HIST_BINS - 1)
}

/// Parameters of the linear stretch `alpha * (x - 0.5) + 0.5` over
/// normalized magnitudes `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchParams<T> {
    pub g_otsu: T,
    pub alpha: T,
    /// Lowest normalized magnitude that survives the stretch.
    pub g_ns: T,
    /// Maximum stretched value, reached at `x = 1`.
    pub lambda: T,
}

/// Stretched magnitudes divided by their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct StretchedMap<T> {
    pub width: usize,
    pub height: usize,
    pub val: Vec<T>,
    pub lambda: T,
}

/// Edge map fed to band detection. Values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedEdgeMap<T> {
    pub width: usize,
    pub height: usize,
    pub val: Vec<T>,
}

impl<T: Scalar> EnhancedEdgeMap<T> {
    pub fn new(width: usize, height: usize, val: Vec<T>) -> Result<Self> {
        if val.len() != width * height {
            return Err(Error::BadDimensions {
                width,
                height,
                got: val.len(),
            });
        }
        Ok(EnhancedEdgeMap { width, height, val })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        EnhancedEdgeMap {
            width,
            height,
            val: vec![T::zero(); width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.val[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.val[y * self.width..(y + 1) * self.width]
    }

    pub fn mean(&self) -> T {
        if self.val.is_empty() {
            return T::zero();
        }
        self.val.iter().copied().sum::<T>() / T::from_count(self.val.len())
    }
}

/// Rec.601 luminance of an 8-bit RGB frame.
pub fn to_luminance<T: Scalar>(frame: &RgbImage) -> Result<GrayFrame<T>> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    if w < 3 || h < 3 {
        return Err(Error::FrameTooSmall {
            width: w,
            height: h,
        });
    }
    let (wr, wg, wb) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
    let scale = T::lit(255.0);
    let lum = frame
        .pixels()
        .map(|p| {
            let v = (wr * T::from_u8(p[0]).unwrap()
                + wg * T::from_u8(p[1]).unwrap()
                + wb * T::from_u8(p[2]).unwrap())
                / scale;
            v.max(T::zero()).min(T::one())
        })
        .collect();
    Ok(GrayFrame {
        width: w,
        height: h,
        lum,
    })
}

/// Isotropic Scharr gradient magnitude with replicated borders.
///
/// Kernels are `[-3 0 3; -10 0 10; -3 0 3]` and its transpose; the result is
/// not rescaled.
pub fn scharr_gradient<T: Scalar>(frame: &GrayFrame<T>) -> GradientMap<T> {
    let (w, h) = (frame.width, frame.height);
    let lum = &frame.lum;
    let (three, ten) = (T::lit(3.0), T::lit(10.0));
    let mut mag = vec![T::zero(); w * h];
    let mut g_max = T::zero();

    for y in 0..h {
        let up = &lum[y.saturating_sub(1) * w..][..w];
        let mid = &lum[y * w..][..w];
        let down = &lum[(y + 1).min(h - 1) * w..][..w];
        let out = &mut mag[y * w..][..w];
        for x in 0..w {
            let l = x.saturating_sub(1);
            let r = (x + 1).min(w - 1);
            let gx = three * (up[r] - up[l]) + ten * (mid[r] - mid[l]) + three * (down[r] - down[l]);
            let gy = three * (down[l] - up[l]) + ten * (down[x] - up[x]) + three * (down[r] - up[r]);
            let m = (gx * gx + gy * gy).sqrt();
            out[x] = m;
            if m > g_max {
                g_max = m;
            }
        }
    }
    GradientMap {
        width: w,
        height: h,
        mag,
        g_max,
    }
}

/// Index `k` of the Otsu threshold: class 0 is bins `0..=k`.
///
/// Between-class variance is proportional to
/// `(N*s0 - n0*S)^2 / (n0 * (N - n0))`, compared exactly in big-integer
/// arithmetic. Ties go to the lower `k`. With a single occupied bin there is no
/// valid split and that bin is returned.
pub fn otsu_bin(hist: &[u64]) -> Result<usize> {
    let total: u128 = hist.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let weighted: u128 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * c as u128)
        .sum();

    let mut best: Option<(usize, BigUint, BigUint)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for (k, &c) in hist.iter().enumerate() {
        n0 += c as u128;
        s0 += k as u128 * c as u128;
        if n0 == 0 || n0 == total {
            continue;
        }
        let diff = (total * s0).abs_diff(n0 * weighted);
        let num = BigUint::from(diff) * BigUint::from(diff);
        let den = BigUint::from(n0) * BigUint::from(total - n0);
        let better = match &best {
            None => true,
            Some((_, bnum, bden)) => &num * bden > bnum * &den,
        };
        if better {
            best = Some((k, num, den));
        }
    }
    match best {
        Some((k, _, _)) => Ok(k),
        None => Ok(hist.iter().position(|&c| c > 0).expect("nonzero total")),
    }
}

/// Otsu threshold of a 256-bin histogram of normalized values, returned as the
/// center of the threshold bin.
pub fn otsu_threshold<T: Scalar>(hist: &[u64; HIST_BINS]) -> Result<T> {
    let k = otsu_bin(hist)?;
    Ok(T::lit((k as f64 + 0.5) / HIST_BINS as f64))
}

/// Stretch factor chosen so the lowest surviving magnitude equals the Otsu
/// threshold: `alpha = 1 / (1 - 2 g_otsu)` in normalized units, clamped to
/// `[ALPHA_MIN, ALPHA_MAX]`.
pub fn compute_stretch_params<T: Scalar>(g_otsu: T, g_max: T) -> Result<StretchParams<T>> {
    if !(g_max > T::zero()) {
        return Err(Error::BlankFrame);
    }
    let two = T::lit(2.0);
    let (lo, hi) = (T::lit(ALPHA_MIN), T::lit(ALPHA_MAX));
    let alpha = if g_otsu >= T::lit(0.5) {
        hi
    } else {
        (T::one() / (T::one() - two * g_otsu)).max(lo).min(hi)
    };
    Ok(StretchParams {
        g_otsu,
        alpha,
        g_ns: (alpha - T::one()) / (two * alpha),
        lambda: (alpha + T::one()) / two,
    })
}

/// Applies the linear stretch, zeroing every pixel whose stretched value is
/// not positive, and divides by the maximum stretched value.
pub fn contrast_stretch<T: Scalar>(gmap: &GradientMap<T>, p: &StretchParams<T>) -> StretchedMap<T> {
    let half = T::lit(0.5);
    let mut val: Vec<T> = gmap
        .normalized()
        .into_iter()
        .map(|x| {
            let raw = p.alpha * (x - half) + half;
            if raw > T::zero() {
                raw
            } else {
                T::zero()
            }
        })
        .collect();
    let lambda = val.iter().copied().fold(T::zero(), T::max);
    if lambda > T::zero() {
        let inv = T::one() / lambda;
        val.iter_mut().for_each(|v| *v *= inv);
    }
    StretchedMap {
        width: gmap.width,
        height: gmap.height,
        val,
        lambda,
    }
}

/// 256-level CDF equalization over the nonzero pixels. Zero stays zero.
pub fn histogram_equalize<T: Scalar>(map: &StretchedMap<T>) -> EnhancedEdgeMap<T> {
    let levels = T::lit(255.0);
    let level_of = |v: T| -> usize {
        (v * levels).round().to_usize().unwrap_or(0).clamp(1, 255)
    };
    let mut counts = [0u64; 256];
    let mut nonzero = 0u64;
    for &v in &map.val {
        if v > T::zero() {
            counts[level_of(v)] += 1;
            nonzero += 1;
        }
    }
    if nonzero == 0 {
        return EnhancedEdgeMap::zeros(map.width, map.height);
    }
    let mut lut = [T::zero(); 256];
    let mut acc = 0u64;
    for (level, &c) in counts.iter().enumerate() {
        acc += c;
        lut[level] = T::lit(acc as f64 / nonzero as f64);
    }
    let val = map
        .val
        .iter()
        .map(|&v| if v > T::zero() { lut[level_of(v)] } else { T::zero() })
        .collect();
    EnhancedEdgeMap {
        width: map.width,
        height: map.height,
        val,
    }
}

/// Every intermediate of [`enhance`], for debugging and ablations.
#[derive(Debug, Clone)]
pub struct EnhanceStages<T> {
    pub gradient: GradientMap<T>,
    pub params: StretchParams<T>,
    pub stretched: StretchedMap<T>,
    pub enhanced: EnhancedEdgeMap<T>,
}

pub fn enhance_stages<T: Scalar>(frame: &GrayFrame<T>) -> Result<EnhanceStages<T>> {
    let gradient = scharr_gradient(frame);
    if !(gradient.g_max > T::zero()) {
        return Err(Error::BlankFrame);
    }
    let g_otsu = otsu_threshold(&gradient.histogram())?;
    let params = compute_stretch_params(g_otsu, gradient.g_max)?;
    let stretched = contrast_stretch(&gradient, &params);
    let enhanced = histogram_equalize(&stretched);
    Ok(EnhanceStages {
        gradient,
        params,
        stretched,
        enhanced,
    })
}

/// Gradient → Otsu → stretch → equalize. Fails with [`Error::BlankFrame`]
/// on frames without any gradient.
pub fn enhance<T: Scalar>(frame: &GrayFrame<T>) -> Result<EnhancedEdgeMap<T>> {
    enhance_stages(frame).map(|s| s.enhanced)
}

/// Edge map without contrast enhancement: gradient magnitude over `g_max`.
pub fn normalized_gradient<T: Scalar>(frame: &GrayFrame<T>) -> EnhancedEdgeMap<T> {
    let g = scharr_gradient(frame);
    EnhancedEdgeMap {
        width: g.width,
        height: g.height,
        val: g.normalized(),
    }
}
