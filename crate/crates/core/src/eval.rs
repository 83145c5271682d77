//! Detection, tracking and timing metrics against ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::records::FrameRecord;
use crate::{Error, Rect, Result};

/// Fraction of a system track's frames that must match its ground-truth
/// track for the track to count as pure.
pub const PURITY_FRAME_FRACTION: f64 = 0.8;
/// Per-frame overlap score counted as a match.
pub const PURITY_MIN_SCORE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl DetectionMetrics {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        DetectionMetrics {
            precision,
            recall,
            f_measure,
        }
    }
}

/// Best overlap of `r` with any rectangle of `set`, as intersection over union.
pub fn match_score(r: &Rect, set: &[Rect]) -> f64 {
    set.iter().map(|s| r.iou::<f64>(s)).fold(0.0, f64::max)
}

/// Soft precision/recall: precision is the mean best-match score of the
/// detections, recall that of the ground-truth rectangles, each pooled over
/// all frames. With nothing on either side the result is (1, 1, 1); an empty
/// side otherwise scores 0.
pub fn epshtein_prf(detections: &[Vec<Rect>], gts: &[Vec<Rect>]) -> Result<DetectionMetrics> {
    if detections.len() != gts.len() {
        return Err(Error::InvalidParameter(format!(
            "{} detection frames vs {} ground-truth frames",
            detections.len(),
            gts.len()
        )));
    }
    let (mut p_sum, mut p_n, mut r_sum, mut r_n) = (0.0, 0usize, 0.0, 0usize);
    for (det, gt) in detections.iter().zip(gts) {
        for d in det {
            p_sum += match_score(d, gt);
            p_n += 1;
        }
        for g in gt {
            r_sum += match_score(g, det);
            r_n += 1;
        }
    }
    if p_n == 0 && r_n == 0 {
        return Ok(DetectionMetrics {
            precision: 1.0,
            recall: 1.0,
            f_measure: 1.0,
        });
    }
    let precision = if p_n > 0 { p_sum / p_n as f64 } else { 0.0 };
    let recall = if r_n > 0 { r_sum / r_n as f64 } else { 0.0 };
    Ok(DetectionMetrics::from_pr(precision, recall))
}

/// A track as a frame-indexed rectangle sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqTrack {
    pub id: u64,
    pub rects: BTreeMap<u64, Rect>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrackMetrics {
    pub total: usize,
    pub pure: usize,
    pub switches: usize,
}

impl TrackMetrics {
    pub fn purity(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.pure as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackAssignment {
    pub track_id: u64,
    pub gt_track: Option<u64>,
    pub pure: bool,
    pub matched_frames: usize,
    pub frames: usize,
}

/// Assigns every system track to the ground-truth track with the largest
/// summed per-frame overlap score and judges its purity.
pub fn track_assignments(tracks: &[SeqTrack], gt_tracks: &[SeqTrack]) -> Vec<TrackAssignment> {
    let score = |a: &Rect, b: &Rect| a.iou::<f64>(b);
    tracks
        .iter()
        .map(|t| {
            let mut best: Option<(u64, f64)> = None;
            for g in gt_tracks {
                let total: f64 = t
                    .rects
                    .iter()
                    .filter_map(|(f, r)| g.rects.get(f).map(|gr| score(r, gr)))
                    .sum();
                if total > 0.0 && best.is_none_or(|(_, b)| total > b) {
                    best = Some((g.id, total));
                }
            }
            let gt_track = best.map(|(id, _)| id);
            let matched_frames = match gt_track {
                None => 0,
                Some(gid) => t
                    .rects
                    .iter()
                    .filter(|(f, r)| {
                        gt_tracks.iter().all(|g| {
                            let s = g.rects.get(f).map_or(0.0, |gr| score(r, gr));
                            if g.id == gid {
                                s >= PURITY_MIN_SCORE
                            } else {
                                s < PURITY_MIN_SCORE
                            }
                        })
                    })
                    .count(),
            };
            let frames = t.rects.len();
            TrackAssignment {
                track_id: t.id,
                gt_track,
                pure: frames > 0 && matched_frames as f64 >= PURITY_FRAME_FRACTION * frames as f64,
                matched_frames,
                frames,
            }
        })
        .collect()
}

/// Pure-track count and track switches (extra system tracks per ground-truth
/// track).
pub fn track_purity_switches(tracks: &[SeqTrack], gt_tracks: &[SeqTrack]) -> TrackMetrics {
    let assignments = track_assignments(tracks, gt_tracks);
    let mut per_gt: BTreeMap<u64, usize> = BTreeMap::new();
    for a in &assignments {
        if let Some(g) = a.gt_track {
            *per_gt.entry(g).or_default() += 1;
        }
    }
    TrackMetrics {
        total: assignments.len(),
        pure: assignments.iter().filter(|a| a.pure).count(),
        switches: per_gt.values().map(|&n| n.saturating_sub(1)).sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingSummary {
    pub n: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

/// Mean, nearest-rank 95th percentile and maximum of per-frame times.
pub fn timing_report(samples_ms: &[f64]) -> Result<TimingSummary> {
    if samples_ms.is_empty() {
        return Err(Error::InvalidParameter("no timing samples".into()));
    }
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok(TimingSummary {
        n,
        mean_ms: sorted.iter().sum::<f64>() / n as f64,
        p95_ms: sorted[rank - 1],
        max_ms: sorted[n - 1],
    })
}

/// Ground truth assembled from frame records.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub frames: BTreeMap<u64, Vec<Rect>>,
    pub tracks: Vec<SeqTrack>,
    pub texts: BTreeMap<u64, String>,
}

impl GroundTruth {
    pub fn from_records(records: &[FrameRecord]) -> Self {
        let mut gt = GroundTruth::default();
        let mut tracks: BTreeMap<u64, BTreeMap<u64, Rect>> = BTreeMap::new();
        for rec in records {
            let rects = gt.frames.entry(rec.frame).or_default();
            for b in &rec.bands {
                rects.push(b.rect());
                if let Some(id) = b.track_id {
                    tracks.entry(id).or_default().insert(rec.frame, b.rect());
                    if let Some(t) = &b.text {
                        gt.texts.entry(id).or_insert_with(|| t.clone());
                    }
                }
            }
        }
        gt.tracks = tracks
            .into_iter()
            .map(|(id, rects)| SeqTrack { id, rects })
            .collect();
        gt
    }
}

/// Per-frame rectangle lists over the union of frame indices of both sides.
pub fn align_frames(
    pred: &BTreeMap<u64, Vec<Rect>>,
    gt: &BTreeMap<u64, Vec<Rect>>,
) -> (Vec<Vec<Rect>>, Vec<Vec<Rect>>) {
    let frames: BTreeSet<u64> = pred.keys().chain(gt.keys()).copied().collect();
    frames
        .into_iter()
        .map(|f| {
            (
                pred.get(&f).cloned().unwrap_or_default(),
                gt.get(&f).cloned().unwrap_or_default(),
            )
        })
        .unzip()
}

pub fn frame_rects(records: &[FrameRecord]) -> BTreeMap<u64, Vec<Rect>> {
    let mut out: BTreeMap<u64, Vec<Rect>> = BTreeMap::new();
    for r in records {
        out.entry(r.frame).or_default().extend(r.bands.iter().map(|b| b.rect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_detections_score_one() {
        let f = vec![vec![Rect::new(0, 0, 10, 10), Rect::new(20, 20, 5, 5)]];
        let m = epshtein_prf(&f, &f).unwrap();
        assert_eq!((m.precision, m.recall, m.f_measure), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_cases() {
        let none: Vec<Vec<Rect>> = vec![vec![]];
        let gt = vec![vec![Rect::new(0, 0, 4, 4)]];
        let m = epshtein_prf(&none, &gt).unwrap();
        assert_eq!((m.precision, m.recall, m.f_measure), (0.0, 0.0, 0.0));
        let m = epshtein_prf(&none, &none).unwrap();
        assert_eq!((m.precision, m.recall, m.f_measure), (1.0, 1.0, 1.0));
        assert!(epshtein_prf(&none, &[]).is_err());
    }

    #[test]
    fn half_cover() {
        let det = vec![vec![Rect::new(0, 0, 10, 10)]];
        let gt = vec![vec![Rect::new(0, 0, 20, 10)]];
        let m = epshtein_prf(&det, &gt).unwrap();
        assert_eq!((m.precision, m.recall, m.f_measure), (0.5, 0.5, 0.5));
    }

    fn seq(id: u64, frames: impl IntoIterator<Item = (u64, Rect)>) -> SeqTrack {
        SeqTrack {
            id,
            rects: frames.into_iter().collect(),
        }
    }

    #[test]
    fn perfect_tracking() {
        let a = Rect::new(0, 0, 50, 10);
        let b = Rect::new(0, 40, 50, 10);
        let gt = vec![seq(1, (0..10).map(|f| (f, a))), seq(2, (0..10).map(|f| (f, b)))];
        let m = track_purity_switches(&gt, &gt);
        assert_eq!(m, TrackMetrics { total: 2, pure: 2, switches: 0 });
    }

    #[test]
    fn consecutive_tracks_on_one_band_switch() {
        let a = Rect::new(0, 0, 50, 10);
        let gt = vec![seq(1, (0..10).map(|f| (f, a)))];
        let sys = vec![seq(7, (0..5).map(|f| (f, a))), seq(8, (5..10).map(|f| (f, a)))];
        let m = track_purity_switches(&sys, &gt);
        assert_eq!(m, TrackMetrics { total: 2, pure: 2, switches: 1 });
    }

    #[test]
    fn alternating_track_is_impure() {
        let a = Rect::new(0, 0, 50, 10);
        let b = Rect::new(0, 40, 50, 10);
        let gt = vec![seq(1, (0..10).map(|f| (f, a))), seq(2, (0..10).map(|f| (f, b)))];
        let sys = vec![seq(3, (0..10).map(|f| (f, if f % 2 == 0 { a } else { b })))];
        let m = track_purity_switches(&sys, &gt);
        assert_eq!(m.pure, 0);
        assert_eq!(m.total, 1);
    }

    #[test]
    fn timing_examples() {
        assert_eq!(timing_report(&[10.0, 10.0, 10.0]).unwrap().mean_ms, 10.0);
        let t = timing_report(&[5.0, 15.0]).unwrap();
        assert_eq!((t.mean_ms, t.p95_ms, t.max_ms), (10.0, 15.0, 15.0));
        assert!(timing_report(&[]).is_err());
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(timing_report(&xs).unwrap().p95_ms, 95.0);
    }
}
