//! Axis-aligned bounding boxes and the dual-IoU geometric score.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Axis-aligned box in pixel units, `(x_min, y_min, x_max, y_max)`.
///
/// Zero-area (degenerate) boxes are allowed; they intersect nothing,
/// including themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<T> {
    pub x_min: T,
    pub y_min: T,
    pub x_max: T,
    pub y_max: T,
}

/// Why a box was rejected by [`BoundingBox::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum BoxError {
    #[error("x_min > x_max")]
    InvertedX,
    #[error("y_min > y_max")]
    InvertedY,
    #[error("non-finite coordinate")]
    NonFinite,
}

impl<T: Real> BoundingBox<T> {
    /// Validated constructor: coordinates must be finite and ordered.
    pub fn new(x_min: T, y_min: T, x_max: T, y_max: T) -> Result<Self, BoxError> {
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(BoxError::NonFinite);
        }
        if x_min > x_max {
            return Err(BoxError::InvertedX);
        }
        if y_min > y_max {
            return Err(BoxError::InvertedY);
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn area(&self) -> T {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    /// Intersection area with `other` (zero when disjoint).
    pub fn intersection_area(&self, other: &Self) -> T {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= T::zero() || h <= T::zero() {
            T::zero()
        } else {
            w * h
        }
    }
}

/// Intersection-over-union of two boxes, in `[0, 1]`.
///
/// A union of zero area scores 0, so degenerate boxes never match.
pub fn iou<T: Real>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        T::zero()
    } else {
        inter / union
    }
}

/// Dual-IoU score balancing recall and precision:
/// the mean of (a) every ground-truth box's best match among predictions
/// and (b) every predicted box's best match among ground truths, halved.
///
/// Conventions for empty inputs: both empty scores 1, exactly one empty
/// scores 0.
pub fn geo_reward<T: Real>(pred: &[BoundingBox<T>], gt: &[BoundingBox<T>]) -> T {
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return T::one(),
        (true, false) | (false, true) => return T::zero(),
        (false, false) => {}
    }
    let best = |xs: &[BoundingBox<T>], ys: &[BoundingBox<T>]| -> T {
        let mut acc = T::zero();
        for x in xs {
            let mut hi = T::zero();
            for y in ys {
                hi = hi.max(iou(x, y));
            }
            acc = acc + hi;
        }
        acc / T::from_usize(xs.len()).expect("box count fits scalar")
    };
    let recall = best(gt, pred);
    let precision = best(pred, gt);
    (recall + precision) / T::of(2.0)
}
