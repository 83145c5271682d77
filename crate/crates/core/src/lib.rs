//! Overlay text band extraction for broadcast-style video frames.
//!
//! The pipeline turns a frame into a contrast-enhanced edge map
//! ([`preprocess`]), cuts it into text bands from projection-profile
//! derivatives ([`band_detect`]), follows bands across frames with RCC-5
//! overlap reasoning ([`tracker`]) and finally binarizes, accumulates and
//! hands each track to an external OCR command ([`extract`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the command-line tool.

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band_detect;
pub mod error;
pub mod eval;
pub mod extract;
pub mod geometry;
pub mod pgm;
pub mod pipeline;
pub mod preprocess;
pub mod records;
pub mod scalar;
pub mod synth;
pub mod tracker;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use geometry::Rect;
pub use scalar::Scalar;

pub type EdgeMap = preprocess::EnhancedEdgeMap<f32>;
pub type Band = band_detect::TextBand<f32>;
pub type DefaultTracker = tracker::Tracker<f32>;
pub type DefaultTrack = tracker::Track<f32>;

pub type EdgeMap64 = preprocess::EnhancedEdgeMap<f64>;
pub type Band64 = band_detect::TextBand<f64>;
pub type Tracker64 = tracker::Tracker<f64>;
