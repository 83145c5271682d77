use super::BinaryBandImage;
use crate::{Error, Result, Scalar};

/// Per-pixel vote over the binarizations of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatedBand<T> {
    pub width: u32,
    pub height: u32,
    pub votes: Vec<T>,
    pub n: usize,
    pub final_image: BinaryBandImage,
}

/// Median of the sizes; the lower median for an even count.
fn median(mut v: Vec<u32>) -> u32 {
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

/// Resamples every binarization to the median size and takes the majority,
/// ties counted as foreground.
pub fn accumulate<T: Scalar>(frames: &[BinaryBandImage]) -> Result<AccumulatedBand<T>> {
    if frames.is_empty() {
        return Err(Error::InvalidParameter("nothing to accumulate".into()));
    }
    let width = median(frames.iter().map(|b| b.width).collect());
    let height = median(frames.iter().map(|b| b.height).collect());
    let mut counts = vec![0usize; width as usize * height as usize];
    for b in frames {
        let r = b.resample(width, height);
        for (c, &bit) in counts.iter_mut().zip(&r.bits) {
            *c += bit as usize;
        }
    }
    let n = frames.len();
    let votes = counts.iter().map(|&c| T::from_count(c) / T::from_count(n)).collect();
    let bits = counts.iter().map(|&c| u8::from(2 * c >= n)).collect();
    Ok(AccumulatedBand {
        width,
        height,
        votes,
        n,
        final_image: BinaryBandImage { width, height, bits },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let b = BinaryBandImage::new(3, 2, vec![1, 0, 1, 0, 0, 1]).unwrap();
        let acc = accumulate::<f64>(&vec![b.clone(); 4]).unwrap();
        assert_eq!(acc.final_image, b);
        assert_eq!(acc.n, 4);
    }

    #[test]
    fn majority_votes() {
        let on = BinaryBandImage::new(1, 1, vec![1]).unwrap();
        let off = BinaryBandImage::new(1, 1, vec![0]).unwrap();
        let two_of_five = [on.clone(), on.clone(), off.clone(), off.clone(), off.clone()];
        let acc = accumulate::<f64>(&two_of_five).unwrap();
        assert!((acc.votes[0] - 0.4).abs() < 1e-12);
        assert_eq!(acc.final_image.bits, vec![0]);

        let three_of_five = [on.clone(), on.clone(), on.clone(), off.clone(), off.clone()];
        let acc = accumulate::<f64>(&three_of_five).unwrap();
        assert!((acc.votes[0] - 0.6).abs() < 1e-12);
        assert_eq!(acc.final_image.bits, vec![1]);

        let tie = [on, off];
        assert_eq!(accumulate::<f64>(&tie).unwrap().final_image.bits, vec![1]);
    }

    #[test]
    fn canonical_size_is_median() {
        let sizes = [(10, 4), (12, 4), (11, 5), (11, 4), (30, 9)];
        let frames: Vec<_> = sizes.iter().map(|&(w, h)| BinaryBandImage::zeros(w, h)).collect();
        let acc = accumulate::<f32>(&frames).unwrap();
        assert_eq!((acc.width, acc.height), (11, 4));
    }

    #[test]
    fn empty_input_errors() {
        assert!(accumulate::<f32>(&[]).is_err());
    }
}
