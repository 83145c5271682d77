use serde::{Deserialize, Serialize};

use crate::{Error, Rect, Result, Scalar};

/// RCC-5 relation of `a` to `b` under a fractional-overlap tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rcc5Relation {
    /// Disconnected.
    DC,
    /// Equal.
    EQ,
    /// Partial overlap.
    PO,
    /// `a` is a proper part of `b`.
    PP,
    /// `b` is a proper part of `a`.
    PPi,
}

impl Rcc5Relation {
    /// The relation of `b` to `a`.
    pub fn converse(self) -> Self {
        match self {
            Rcc5Relation::PP => Rcc5Relation::PPi,
            Rcc5Relation::PPi => Rcc5Relation::PP,
            r => r,
        }
    }
}

/// `|a ∩ b| / |a|`.
pub fn fractional_overlap<T: Scalar>(a: &Rect, b: &Rect) -> Result<T> {
    if a.area() == 0 {
        return Err(Error::ZeroArea);
    }
    Ok(T::lit(a.intersection_area(b) as f64 / a.area() as f64))
}

/// Classifies the pair from the two fractional overlaps:
///
/// | γ(a,b) \ γ(b,a) | ≤ η | (η, 1−η) | ≥ 1−η |
/// |-----------------|-----|----------|-------|
/// | ≤ η             | DC  | PO       | PPi   |
/// | (η, 1−η)        | PO  | PO       | PPi   |
/// | ≥ 1−η           | PP  | PP       | EQ    |
pub fn rcc5_classify<T: Scalar>(a: &Rect, b: &Rect, eta_fo: T) -> Result<Rcc5Relation> {
    if !(eta_fo > T::zero() && eta_fo < T::lit(0.5)) {
        return Err(Error::InvalidParameter(format!(
            "fractional overlap tolerance must lie in (0, 0.5), got {eta_fo}"
        )));
    }
    let ab: T = fractional_overlap(a, b)?;
    let ba: T = fractional_overlap(b, a)?;
    Ok(classify_overlaps(ab, ba, eta_fo))
}

pub(crate) fn classify_overlaps<T: Scalar>(ab: T, ba: T, eta: T) -> Rcc5Relation {
    let hi = T::one() - eta;
    match (ab >= hi, ba >= hi) {
        (true, true) => Rcc5Relation::EQ,
        (true, false) => Rcc5Relation::PP,
        (false, true) => Rcc5Relation::PPi,
        (false, false) if ab <= eta && ba <= eta => Rcc5Relation::DC,
        (false, false) => Rcc5Relation::PO,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_examples() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(0, 0, 20, 20);
        assert_eq!(fractional_overlap::<f64>(&a, &a).unwrap(), 1.0);
        assert_eq!(fractional_overlap::<f64>(&a, &Rect::new(50, 50, 3, 3)).unwrap(), 0.0);
        assert_eq!(fractional_overlap::<f64>(&a, &b).unwrap(), 1.0);
        assert_eq!(fractional_overlap::<f64>(&b, &a).unwrap(), 0.25);
        assert!(matches!(
            fractional_overlap::<f64>(&Rect::new(1, 1, 0, 5), &a),
            Err(Error::ZeroArea)
        ));
    }

    #[test]
    fn relation_examples() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(rcc5_classify(&a, &a, 0.1).unwrap(), Rcc5Relation::EQ);
        let big = Rect::new(0, 0, 20, 20);
        assert_eq!(rcc5_classify(&a, &big, 0.1).unwrap(), Rcc5Relation::PP);
        assert_eq!(rcc5_classify(&big, &a, 0.1).unwrap(), Rcc5Relation::PPi);
        let shifted = Rect::new(5, 0, 10, 10);
        assert_eq!(rcc5_classify(&a, &shifted, 0.1).unwrap(), Rcc5Relation::PO);
        assert_eq!(
            rcc5_classify(&a, &Rect::new(30, 0, 5, 5), 0.1).unwrap(),
            Rcc5Relation::DC
        );
        // A sliver of overlap below the tolerance is still disconnected.
        let sliver = Rect::new(9, 0, 10, 10);
        assert_eq!(rcc5_classify(&a, &sliver, 0.1).unwrap(), Rcc5Relation::DC);
        assert!(rcc5_classify(&a, &a, 0.5f64).is_err());
        assert!(rcc5_classify(&a, &a, 0.0f64).is_err());
    }
}
