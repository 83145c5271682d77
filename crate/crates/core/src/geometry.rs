use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Axis-aligned pixel rectangle. `x`/`y` is the top-left corner, the
/// rectangle covers columns `x..x + w` and rows `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        self.intersection(other).map_or(0, |r| r.area())
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &Rect) -> Rect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// Intersection over union; 0 when both are empty.
    pub fn iou<T: Scalar>(&self, other: &Rect) -> T {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            T::zero()
        } else {
            T::lit(inter as f64 / union as f64)
        }
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Option<Rect> {
        let x = i64::from(self.x) + dx;
        let y = i64::from(self.y) + dy;
        (x >= 0 && y >= 0).then(|| Rect::new(x as u32, y as u32, self.w, self.h))
    }
}

/// Bounding box of a non-empty set of rectangles.
pub fn bounding_union<'a>(rects: impl IntoIterator<Item = &'a Rect>) -> Option<Rect> {
    rects.into_iter().copied().reduce(|a, b| a.union(&b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersection_and_union() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(5, 0, 10, 10);
        assert_eq!(a.intersection(&b), Some(Rect::new(5, 0, 5, 10)));
        assert_eq!(a.union(&b), Rect::new(0, 0, 15, 10));
        assert_eq!(a.intersection(&Rect::new(10, 0, 3, 3)), None);
        assert!((a.iou::<f64>(&b) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn translate_rejects_negative() {
        let a = Rect::new(2, 2, 4, 4);
        assert_eq!(a.translate(-3, 0), None);
        assert_eq!(a.translate(1, 5), Some(Rect::new(3, 7, 4, 4)));
    }
}
