//! Text band localization from projection-profile derivatives.
//!
//! Band boundaries show up as abrupt changes of the row (or column) sums of
//! the edge map. The first difference of the profile is grouped into
//! boundary clusters with a gap-tolerant 1-D connected component pass; within
//! each cluster the second difference is filtered by its local mean and the
//! most negative survivor marks the boundary line. Consecutive horizontal
//! lines bound candidate strips; the same machinery on the column profile of
//! each strip yields the band's horizontal extent.

use serde::Serialize;

use crate::preprocess::EnhancedEdgeMap;
use crate::{Error, Rect, Result, Scalar};

pub const DEFAULT_EPSILON: usize = 2;
pub const MIN_BAND_H: u32 = 8;
pub const MIN_BAND_W: u32 = 16;
/// Accepted bands must be this many times denser than the whole frame.
pub const DENSITY_FACTOR: f64 = 2.0;

/// Fraction of the largest first difference below which an index is never
/// prominent.
const PROMINENCE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionProfile<T> {
    pub values: Vec<T>,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceProfile<T> {
    /// `d1[i] = p[i] - p[i-1]`, `d1[0] = 0`.
    pub d1: Vec<T>,
    /// `d2[i] = d1[i] - d1[i-1]`, `d2[0] = d2[1] = 0`.
    pub d2: Vec<T>,
}

/// Result of the 1-D grouping. `labels[i] == 0` means unlabeled; groups are
/// numbered `1..=num_labels` in index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelArray {
    pub labels: Vec<u32>,
    pub num_labels: usize,
}

impl LabelArray {
    /// Indices carrying label `l`.
    pub fn members(&self, l: u32) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &v)| v == l)
            .map(|(i, _)| i)
    }
}

/// How to decide that a first-difference value is a boundary candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prominence<T> {
    /// `|d1| > max(0.05 * max|d1|, mean|d1|)`.
    DataDerived,
    /// `|d1| > t`.
    Above(T),
}

impl<T: Scalar> Prominence<T> {
    fn threshold(&self, d1: &[T]) -> T {
        match *self {
            Prominence::Above(t) => t,
            Prominence::DataDerived => {
                if d1.is_empty() {
                    return T::zero();
                }
                let max = d1.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                let mean = d1.iter().map(|v| v.abs()).sum::<T>() / T::from_count(d1.len());
                (T::lit(PROMINENCE_FRACTION) * max).max(mean)
            }
        }
    }
}

/// A detected text band and its mean edge-map value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TextBand<T> {
    pub rect: Rect,
    pub density: T,
}

pub fn horizontal_profile<T: Scalar>(edge: &EnhancedEdgeMap<T>) -> ProjectionProfile<T> {
    let values = (0..edge.height)
        .map(|y| edge.row(y).iter().copied().sum())
        .collect();
    ProjectionProfile {
        values,
        axis: Axis::Horizontal,
    }
}

/// Column sums over rows `y0..y1`.
pub fn vertical_profile<T: Scalar>(edge: &EnhancedEdgeMap<T>, y0: usize, y1: usize) -> ProjectionProfile<T> {
    let mut values = vec![T::zero(); edge.width];
    for y in y0..y1.min(edge.height) {
        for (acc, &v) in values.iter_mut().zip(edge.row(y)) {
            *acc += v;
        }
    }
    ProjectionProfile {
        values,
        axis: Axis::Vertical,
    }
}

pub fn differences<T: Scalar>(p: &ProjectionProfile<T>) -> Result<DifferenceProfile<T>> {
    let v = &p.values;
    let n = v.len();
    if n < 3 {
        return Err(Error::ProfileTooShort(n));
    }
    let mut d1 = vec![T::zero(); n];
    for i in 1..n {
        d1[i] = v[i] - v[i - 1];
    }
    let mut d2 = vec![T::zero(); n];
    for i in 2..n {
        d2[i] = d1[i] - d1[i - 1];
    }
    Ok(DifferenceProfile { d1, d2 })
}

/// Groups prominent indices of `d1`: two consecutive prominent indices share a
/// label when they are at most `epsilon` apart.
pub fn epsilon_cca<T: Scalar>(d1: &[T], epsilon: usize, prominence: Prominence<T>) -> LabelArray {
    let thr = prominence.threshold(d1);
    let mut labels = vec![0u32; d1.len()];
    let mut num_labels = 0usize;
    let mut last: Option<usize> = None;
    for (i, v) in d1.iter().enumerate() {
        if !(v.abs() > thr) {
            continue;
        }
        match last {
            Some(prev) if i - prev <= epsilon => {}
            _ => num_labels += 1,
        }
        labels[i] = num_labels as u32;
        last = Some(i);
    }
    LabelArray { labels, num_labels }
}

/// Keeps `d2[i]` only where `|d2[i]|` strictly exceeds the mean `|d2|` of
/// its label; unlabeled indices become zero.
pub fn local_mean_filter<T: Scalar>(d2: &[T], labels: &LabelArray) -> Vec<T> {
    let mut sums = vec![T::zero(); labels.num_labels + 1];
    let mut counts = vec![0usize; labels.num_labels + 1];
    for (&v, &l) in d2.iter().zip(&labels.labels) {
        if l > 0 {
            sums[l as usize] += v.abs();
            counts[l as usize] += 1;
        }
    }
    d2.iter()
        .zip(&labels.labels)
        .map(|(&v, &l)| {
            if l == 0 {
                return T::zero();
            }
            let mu = sums[l as usize] / T::from_count(counts[l as usize]);
            if v.abs() > mu {
                v
            } else {
                T::zero()
            }
        })
        .collect()
}

/// One boundary per label: the index of the smallest filtered second
/// difference within the label (ties to the smaller index). A label in which
/// nothing survived the local-mean filter falls back to the smallest
/// unfiltered value.
pub fn locate_lines<T: Scalar>(filtered: &[T], unfiltered: &[T], labels: &LabelArray) -> Vec<usize> {
    let mut best: Vec<Option<(usize, T)>> = vec![None; labels.num_labels + 1];
    let mut survived = vec![false; labels.num_labels + 1];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let l = l as usize;
        survived[l] |= filtered[i] != T::zero();
        if best[l].is_none_or(|(_, v)| filtered[i] < v) {
            best[l] = Some((i, filtered[i]));
        }
    }
    for l in 1..=labels.num_labels {
        if !survived[l] {
            best[l] = labels
                .members(l as u32)
                .fold(None, |acc: Option<(usize, T)>, i| match acc {
                    Some((_, v)) if unfiltered[i] >= v => acc,
                    _ => Some((i, unfiltered[i])),
                });
        }
    }
    best.into_iter().skip(1).flatten().map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectParams {
    pub epsilon: usize,
    pub min_band_w: u32,
    pub min_band_h: u32,
    pub density_factor: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            epsilon: DEFAULT_EPSILON,
            min_band_w: MIN_BAND_W,
            min_band_h: MIN_BAND_H,
            density_factor: DENSITY_FACTOR,
        }
    }
}

/// Boundary analysis of one profile.
#[derive(Debug, Clone, Serialize)]
pub struct AxisTrace<T> {
    pub profile: ProjectionProfile<T>,
    pub diff: DifferenceProfile<T>,
    pub labels: LabelArray,
    /// Located lines, before the frame borders are added.
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StripTrace<T> {
    pub y0: usize,
    pub y1: usize,
    pub vertical: AxisTrace<T>,
    /// Dense column runs of the strip.
    pub candidates: Vec<TextBand<T>>,
}

/// Everything the detector looked at, for the debug dump.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionTrace<T> {
    pub global_mean: T,
    pub horizontal: Option<AxisTrace<T>>,
    pub strips: Vec<StripTrace<T>>,
    /// Bounding boxes of vertically connected strip candidates.
    pub groups: Vec<Rect>,
    pub accepted: Vec<TextBand<T>>,
}

fn analyze_axis<T: Scalar>(profile: ProjectionProfile<T>, epsilon: usize) -> Result<AxisTrace<T>> {
    let diff = differences(&profile)?;
    let labels = epsilon_cca(&diff.d1, epsilon, Prominence::DataDerived);
    let filtered = local_mean_filter(&diff.d2, &labels);
    let lines = locate_lines(&filtered, &diff.d2, &labels);
    Ok(AxisTrace {
        profile,
        diff,
        labels,
        lines,
    })
}

/// Half-open intervals between consecutive lines, with the virtual borders
/// `0` and `len - 1` added. The last interval includes the final index.
fn intervals(lines: &[usize], len: usize) -> Vec<(usize, usize)> {
    let mut all = Vec::with_capacity(lines.len() + 2);
    all.push(0);
    all.extend_from_slice(lines);
    all.push(len - 1);
    all.sort_unstable();
    all.dedup();
    let n = all.len();
    all.windows(2)
        .enumerate()
        .map(|(i, w)| (w[0], if i + 2 == n { len } else { w[1] }))
        .collect()
}

fn rect_density<T: Scalar>(edge: &EnhancedEdgeMap<T>, r: &Rect) -> T {
    let mut sum = T::zero();
    for y in r.y as usize..r.bottom() as usize {
        sum += edge.row(y)[r.x as usize..r.right() as usize].iter().copied().sum();
    }
    sum / T::lit(r.area() as f64)
}

pub fn detect_bands<T: Scalar>(edge: &EnhancedEdgeMap<T>) -> Vec<TextBand<T>> {
    BandDetector::default().detect(edge)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BandDetector {
    pub params: DetectParams,
}

impl BandDetector {
    pub fn new(params: DetectParams) -> Self {
        BandDetector { params }
    }

    pub fn detect<T: Scalar>(&self, edge: &EnhancedEdgeMap<T>) -> Vec<TextBand<T>> {
        self.detect_traced(edge).accepted
    }

    /// Runs detection and keeps every intermediate.
    pub fn detect_traced<T: Scalar>(&self, edge: &EnhancedEdgeMap<T>) -> DetectionTrace<T> {
        let global_mean = edge.mean();
        let mut trace = DetectionTrace {
            global_mean,
            horizontal: None,
            strips: Vec::new(),
            groups: Vec::new(),
            accepted: Vec::new(),
        };
        if edge.width < 3 || edge.height < 3 || !(global_mean > T::zero()) {
            return trace;
        }
        let eps = self.params.epsilon;
        let horizontal = analyze_axis(horizontal_profile(edge), eps).expect("height checked above");
        let rows = intervals(&horizontal.lines, edge.height);
        trace.horizontal = Some(horizontal);

        for (y0, y1) in rows {
            let vertical = analyze_axis(vertical_profile(edge, y0, y1), eps).expect("width checked above");
            let segments: Vec<TextBand<T>> = intervals(&vertical.lines, edge.width)
                .into_iter()
                .map(|(x0, x1)| {
                    let rect = Rect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32);
                    TextBand {
                        rect,
                        density: rect_density(edge, &rect),
                    }
                })
                .collect();
            let candidates = join_segments(edge, &segments, global_mean);
            trace.strips.push(StripTrace {
                y0,
                y1,
                vertical,
                candidates,
            });
        }

        let cands: Vec<Rect> = trace
            .strips
            .iter()
            .flat_map(|s| s.candidates.iter().map(|c| c.rect))
            .collect();
        trace.groups = group_candidates(&cands);
        let refined: Vec<Rect> = trace
            .groups
            .iter()
            .flat_map(|g| refine(edge, g, global_mean, eps))
            .collect();
        let floor = global_mean * T::lit(self.params.density_factor);
        for rect in merge_neighbours(refined) {
            let density = rect_density(edge, &rect);
            if density > floor && rect.w >= self.params.min_band_w && rect.h >= self.params.min_band_h {
                trace.accepted.push(TextBand { rect, density });
            }
        }
        trace.accepted.sort_by_key(|b| (b.rect.y, b.rect.x));
        trace
    }
}

fn rows_touch(a: &Rect, b: &Rect) -> bool {
    a.y <= b.bottom() && b.y <= a.bottom()
}

fn cols_overlap(a: &Rect, b: &Rect) -> bool {
    a.x < b.right() && b.x < a.right()
}

/// Bounding boxes of candidates connected through touching rows and
/// overlapping columns. A band cut by interior lines into several strips
/// comes back together here.
fn group_candidates(cands: &[Rect]) -> Vec<Rect> {
    let mut parent: Vec<usize> = (0..cands.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            if rows_touch(&cands[i], &cands[j]) && cols_overlap(&cands[i], &cands[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<(usize, Rect)> = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => *g = g.union(c),
            None => groups.push((root, *c)),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

fn row_mean<T: Scalar>(edge: &EnhancedEdgeMap<T>, y: u32, x0: u32, x1: u32) -> T {
    let s: T = edge.row(y as usize)[x0 as usize..x1 as usize].iter().copied().sum();
    s / T::from_count((x1 - x0) as usize)
}

fn col_mean<T: Scalar>(edge: &EnhancedEdgeMap<T>, x: u32, y0: u32, y1: u32) -> T {
    let s: T = (y0..y1).map(|y| edge.get(x as usize, y as usize)).sum();
    s / T::from_count((y1 - y0) as usize)
}

/// Snaps a group to the rows and columns that are denser than the frame.
///
/// The group grows over dense rows/columns just outside it (text cut off by
/// a line placed inside the band), is split at runs of more than `eps` sparse
/// rows (stacked bands joined through a shared strip) and each part loses its
/// sparse leading and trailing columns.
fn refine<T: Scalar>(edge: &EnhancedEdgeMap<T>, g: &Rect, mean: T, eps: usize) -> Vec<Rect> {
    let (w, h) = (edge.width as u32, edge.height as u32);
    let (mut x0, mut x1, mut y0, mut y1) = (g.x, g.right(), g.y, g.bottom());
    loop {
        let before = (x0, x1, y0, y1);
        while y0 > 0 && row_mean(edge, y0 - 1, x0, x1) > mean {
            y0 -= 1;
        }
        while y1 < h && row_mean(edge, y1, x0, x1) > mean {
            y1 += 1;
        }
        while x0 > 0 && col_mean(edge, x0 - 1, y0, y1) > mean {
            x0 -= 1;
        }
        while x1 < w && col_mean(edge, x1, y0, y1) > mean {
            x1 += 1;
        }
        if before == (x0, x1, y0, y1) {
            break;
        }
    }

    let dense: Vec<bool> = (y0..y1).map(|y| row_mean(edge, y, x0, x1) > mean).collect();
    let mut runs: Vec<(u32, u32)> = Vec::new();
    let mut gap = 0usize;
    for (i, &d) in dense.iter().enumerate() {
        let y = y0 + i as u32;
        if d {
            match runs.last_mut() {
                Some(last) if gap <= eps && last.1 + gap as u32 == y => last.1 = y + 1,
                _ => runs.push((y, y + 1)),
            }
            gap = 0;
        } else {
            gap += 1;
        }
    }

    runs.into_iter()
        .filter_map(|(ry0, ry1)| {
            let first = (x0..x1).find(|&x| col_mean(edge, x, ry0, ry1) > mean)?;
            let last = (x0..x1).rev().find(|&x| col_mean(edge, x, ry0, ry1) > mean)?;
            Some(Rect::new(first, ry0, last + 1 - first, ry1 - ry0))
        })
        .collect()
}

/// Merges overlapping rectangles and side-by-side pieces of one band: rows
/// overlapping by at least half the lower piece and a column gap narrower
/// than twice that piece's height (a word space next to a missing glyph).
fn merge_neighbours(mut rects: Vec<Rect>) -> Vec<Rect> {
    loop {
        let mut merged = None;
        'outer: for i in 0..rects.len() {
            for j in i + 1..rects.len() {
                let (a, b) = (rects[i], rects[j]);
                let min_h = a.h.min(b.h);
                let row_overlap = a.bottom().min(b.bottom()).saturating_sub(a.y.max(b.y));
                let col_gap = a.x.max(b.x).saturating_sub(a.right().min(b.right()));
                if a.intersection_area(&b) > 0 || (2 * row_overlap >= min_h && col_gap < 2 * min_h) {
                    merged = Some((i, j));
                    break 'outer;
                }
            }
        }
        match merged {
            Some((i, j)) => {
                let u = rects[i].union(&rects[j]);
                rects.swap_remove(j);
                rects[i] = u;
            }
            None => return rects,
        }
    }
}

/// Joins runs of dense column segments of one strip into band candidates.
///
/// Glyph strokes put boundary lines between nearly every pair of letters, so
/// the segments between consecutive vertical lines are letter-sized. A run of
/// dense segments is kept together across sparse gaps that are narrower than
/// the strip is tall (inter-word spacing); wider sparse gaps end the band.
fn join_segments<T: Scalar>(edge: &EnhancedEdgeMap<T>, segments: &[TextBand<T>], global_mean: T) -> Vec<TextBand<T>> {
    let mut out = Vec::new();
    let mut run: Option<(u32, u32)> = None;
    let mut gap = 0u32;
    let flush = |run: &mut Option<(u32, u32)>, out: &mut Vec<TextBand<T>>, strip: &Rect| {
        if let Some((x0, x1)) = run.take() {
            let rect = Rect::new(x0, strip.y, x1 - x0, strip.h);
            out.push(TextBand {
                rect,
                density: rect_density(edge, &rect),
            });
        }
    };
    for seg in segments {
        let r = seg.rect;
        if seg.density > global_mean {
            run = Some(match run {
                Some((x0, _)) => (x0, r.right()),
                None => (r.x, r.right()),
            });
            gap = 0;
        } else if run.is_some() {
            gap += r.w;
            if gap >= r.h {
                flush(&mut run, &mut out, &r);
                gap = 0;
            }
        }
    }
    if let Some(seg) = segments.last() {
        flush(&mut run, &mut out, &seg.rect);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> EnhancedEdgeMap<f64> {
        let mut val = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                val.push(f(x, y));
            }
        }
        EnhancedEdgeMap::new(w, h, val).unwrap()
    }

    #[test]
    fn horizontal_profile_sums_rows() {
        let zero = map(4, 5, |_, _| 0.0);
        assert!(horizontal_profile(&zero).values.iter().all(|&v| v == 0.0));
        let line = map(10, 4, |_, y| if y == 2 { 1.0 } else { 0.0 });
        assert_eq!(horizontal_profile(&line).values, vec![0.0, 0.0, 10.0, 0.0]);
    }

    #[test]
    fn horizontal_profile_matches_naive_sum() {
        let vals = [
            0.1, 0.7, 0.3, 0.0, 0.9, 0.5, 0.5, 0.2, 0.8, 0.4, 0.6, 0.0, 0.0, 1.0, 0.3, 0.25, 0.75,
            0.9, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 0.05,
        ];
        let m = EnhancedEdgeMap::new(5, 5, vals.to_vec()).unwrap();
        let p = horizontal_profile(&m);
        for y in 0..5 {
            let mut s = 0.0f64;
            for x in 0..5 {
                s += vals[y * 5 + x];
            }
            assert!((p.values[y] - s).abs() < 1e-12);
        }
    }

    fn prof(v: &[f64]) -> ProjectionProfile<f64> {
        ProjectionProfile {
            values: v.to_vec(),
            axis: Axis::Horizontal,
        }
    }

    #[test]
    fn difference_examples() {
        let d = differences(&prof(&[3.0; 6])).unwrap();
        assert!(d.d1.iter().chain(&d.d2).all(|&v| v == 0.0));

        let d = differences(&prof(&[0.0, 0.0, 5.0, 5.0, 0.0])).unwrap();
        assert_eq!(d.d1, vec![0.0, 0.0, 5.0, 0.0, -5.0]);
        assert_eq!(d.d2, vec![0.0, 0.0, 5.0, -5.0, -5.0]);
        assert_eq!(d.d1.iter().sum::<f64>(), 0.0 - 0.0);

        // Step: paired extrema of the second difference around the jump.
        let d = differences(&prof(&[0.0, 0.0, 0.0, 4.0, 4.0, 4.0])).unwrap();
        assert_eq!(d.d2, vec![0.0, 0.0, 0.0, 4.0, -4.0, 0.0]);

        assert!(matches!(differences(&prof(&[1.0, 2.0])), Err(Error::ProfileTooShort(2))));
    }

    #[test]
    fn epsilon_grouping() {
        let d1 = vec![0.0; 20];
        assert_eq!(epsilon_cca(&d1, 2, Prominence::DataDerived).num_labels, 0);

        let mut d1 = vec![0.0; 60];
        for i in [10, 11, 12, 40, 41] {
            d1[i] = 1.0;
        }
        let l = epsilon_cca(&d1, 2, Prominence::Above(0.5));
        assert_eq!(l.num_labels, 2);
        assert_eq!(l.labels[10], 1);
        assert_eq!(l.labels[12], 1);
        assert_eq!(l.labels[41], 2);
        assert_eq!(l.labels[20], 0);

        let mut d1 = vec![0.0; 20];
        d1[10] = -3.0;
        d1[13] = 3.0;
        assert_eq!(epsilon_cca(&d1, 2, Prominence::Above(0.5)).num_labels, 2);
        d1[13] = 0.0;
        d1[12] = 3.0;
        assert_eq!(epsilon_cca(&d1, 2, Prominence::Above(0.5)).num_labels, 1);
    }

    #[test]
    fn data_derived_prominence() {
        // sum|d1| = 16 over 12 entries, 5% of max = 0.5 -> threshold 4/3.
        // Prominent: 2, 5, 10; gaps of 3 and 5 exceed epsilon.
        let d1 = [0.0, 1.0, 10.0, -1.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 1.5, -0.5];
        let l = epsilon_cca(&d1, 2, Prominence::DataDerived);
        assert_eq!(l.num_labels, 3);
        assert_eq!((l.labels[2], l.labels[5], l.labels[10]), (1, 2, 3));
        assert_eq!((l.labels[1], l.labels[3], l.labels[11]), (0, 0, 0));
    }

    fn labels_from(v: &[u32]) -> LabelArray {
        LabelArray {
            labels: v.to_vec(),
            num_labels: v.iter().copied().max().unwrap_or(0) as usize,
        }
    }

    #[test]
    fn local_mean_examples() {
        let l = labels_from(&[0, 1, 1, 1, 0]);
        let f = local_mean_filter(&[9.0, 2.0, -2.0, 8.0, 7.0], &l);
        assert_eq!(f, vec![0.0, 0.0, 0.0, 8.0, 0.0]);

        let f = local_mean_filter(&[3.0, -3.0, 3.0], &labels_from(&[1, 1, 1]));
        assert!(f.iter().all(|&v| v == 0.0));

        let f = local_mean_filter(&[3.0, -3.0, 3.0], &labels_from(&[0, 0, 0]));
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn locate_examples() {
        let mut d2 = vec![0.0; 30];
        d2[20] = 0.0;
        d2[21] = -9.0;
        d2[22] = -3.0;
        let mut lab = vec![0u32; 30];
        lab[20..23].fill(1);
        let l = labels_from(&lab);
        let f = local_mean_filter(&d2, &l);
        assert_eq!(locate_lines(&f, &d2, &l), vec![21]);

        // Tied |d2| within a label: fallback to the unfiltered minimum.
        let d2 = [0.0, 4.0, -4.0, 4.0, 0.0];
        let l = labels_from(&[0, 1, 1, 1, 0]);
        let f = local_mean_filter(&d2, &l);
        assert!(f.iter().all(|&v| v == 0.0));
        assert_eq!(locate_lines(&f, &d2, &l), vec![2]);

        // Two labels: two increasing lines.
        let p = prof(&[0.0, 0.0, 0.0, 6.0, 6.0, 6.0, 6.0, 6.0, 0.0, 0.0, 0.0]);
        let d = differences(&p).unwrap();
        let l = epsilon_cca(&d.d1, 2, Prominence::DataDerived);
        assert_eq!(l.num_labels, 2);
        let lines = locate_lines(&local_mean_filter(&d.d2, &l), &d.d2, &l);
        assert_eq!(lines.len(), 2);
        assert!(lines[0] < lines[1]);
        assert_eq!(lines, vec![3, 8]);

        let empty = labels_from(&[0, 0, 0]);
        assert!(locate_lines(&[0.0; 3], &[0.0; 3], &empty).is_empty());
    }

    #[test]
    fn blank_map_gives_nothing() {
        assert!(detect_bands(&map(40, 30, |_, _| 0.0)).is_empty());
    }

    /// Dense stroke pattern inside `r`, zero elsewhere.
    fn striped(w: usize, h: usize, rects: &[Rect]) -> EnhancedEdgeMap<f64> {
        map(w, h, |x, y| {
            let inside = rects.iter().any(|r| {
                x >= r.x as usize && x < r.right() as usize && y >= r.y as usize && y < r.bottom() as usize
            });
            if inside && x % 3 != 2 {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn single_band_is_localized() {
        let gt = Rect::new(20, 30, 100, 16);
        let bands = detect_bands(&striped(160, 90, &[gt]));
        assert_eq!(bands.len(), 1, "{bands:?}");
        let r = bands[0].rect;
        assert!(r.x.abs_diff(gt.x) <= 2 && r.y.abs_diff(gt.y) <= 2, "{r:?}");
        assert!(r.right().abs_diff(gt.right()) <= 2 && r.bottom().abs_diff(gt.bottom()) <= 2, "{r:?}");
    }

    #[test]
    fn stacked_bands_are_separate() {
        let a = Rect::new(10, 10, 120, 14);
        let b = Rect::new(30, 34, 80, 12);
        let bands = detect_bands(&striped(160, 70, &[a, b]));
        assert_eq!(bands.len(), 2, "{bands:?}");
        assert!(bands[0].rect.intersection(&bands[1].rect).is_none());
    }
}
