//! Multi-band tracking over RCC-5 relations between tracked and detected
//! rectangles.
//!
//! Each frame, tracked and detected rectangles that are not disconnected are
//! linked; the connected components of that bipartite graph decide the case:
//! unique correspondence, several tracks on one detection (merge), one track
//! over several detections (split or fragmentation), many-to-many, a track
//! with no detection (disappearance) and a detection with no track (new
//! entry).

mod histogram;
mod rcc;

use image::RgbImage;
use serde::{Deserialize, Serialize};

pub use histogram::{color_bin, histogram_of_region, histogram_similarity, ColorHistogram, COLOR_BINS};
pub use rcc::{fractional_overlap, rcc5_classify, Rcc5Relation};

use crate::band_detect::TextBand;
use crate::geometry::bounding_union;
use crate::{Error, Rect, Result, Scalar};

pub const DEFAULT_ETA_FO: f64 = 0.1;
pub const DEFAULT_HIST_MATCH: f64 = 0.8;
pub const DEFAULT_MAX_MISSES: u32 = 5;
pub const DEFAULT_HIST_BLEND: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig<T> {
    pub eta_fo: T,
    pub hist_match: T,
    pub max_misses: u32,
    /// Weight of the new observation when updating a track's histogram.
    pub hist_blend: T,
}

impl<T: Scalar> Default for TrackerConfig<T> {
    fn default() -> Self {
        TrackerConfig {
            eta_fo: T::lit(DEFAULT_ETA_FO),
            hist_match: T::lit(DEFAULT_HIST_MATCH),
            max_misses: DEFAULT_MAX_MISSES,
            hist_blend: T::lit(DEFAULT_HIST_BLEND),
        }
    }
}

impl<T: Scalar> TrackerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_fo > T::zero() && self.eta_fo < T::lit(0.5)) {
            return Err(Error::InvalidParameter(format!("eta_fo must lie in (0, 0.5), got {}", self.eta_fo)));
        }
        if !(self.hist_match >= T::zero() && self.hist_match <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "hist_match must lie in [0, 1], got {}",
                self.hist_match
            )));
        }
        if !(self.hist_blend >= T::zero() && self.hist_blend <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "hist_blend must lie in [0, 1], got {}",
                self.hist_blend
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackState {
    Active,
    Terminated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track<T> {
    pub id: u64,
    pub rect: Rect,
    pub hist: ColorHistogram<T>,
    /// Frames the track has been alive, including the current one.
    pub age: u32,
    /// Consecutive frames without a detection.
    pub misses: u32,
    pub history: Vec<(u64, Rect)>,
    pub state: TrackState,
}

impl<T> Track<T> {
    pub fn start_frame(&self) -> u64 {
        self.history.first().map_or(0, |h| h.0)
    }

    pub fn end_frame(&self) -> u64 {
        self.history.last().map_or(0, |h| h.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    New,
    Updated,
    Merged,
    Split,
    Restored,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackEvent {
    pub frame: u64,
    pub kind: EventKind,
    pub track_ids: Vec<u64>,
    pub rects: Vec<Rect>,
}

/// Which association case a detection was handled under in the last step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionCase {
    Rejected,
    NewEntry,
    Unique,
    ManyTracks,
    ManyDetections,
    ManyToMany,
}

/// `ts[i]`: detections overlapping track `i`; `ds[j]`: tracks overlapping
/// detection `j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssociationSets {
    pub ts: Vec<Vec<usize>>,
    pub ds: Vec<Vec<usize>>,
}

/// Links every track/detection pair that is not disconnected under `eta_fo`.
pub fn build_association_sets<T: Scalar>(tracks: &[Rect], detections: &[Rect], eta_fo: T) -> Result<AssociationSets> {
    let mut sets = AssociationSets {
        ts: vec![Vec::new(); tracks.len()],
        ds: vec![Vec::new(); detections.len()],
    };
    for (i, t) in tracks.iter().enumerate() {
        for (j, d) in detections.iter().enumerate() {
            if t.intersection_area(d) == 0 {
                continue;
            }
            if rcc5_classify(t, d, eta_fo)? != Rcc5Relation::DC {
                sets.ts[i].push(j);
                sets.ds[j].push(i);
            }
        }
    }
    Ok(sets)
}

/// Disjoint-set forest with path halving.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

struct Detection<T> {
    rect: Rect,
    hist: ColorHistogram<T>,
}

/// Sequential tracker state. Frames must be fed in temporal order.
#[derive(Debug, Clone)]
pub struct Tracker<T> {
    config: TrackerConfig<T>,
    active: Vec<Track<T>>,
    finished: Vec<Track<T>>,
    next_id: u64,
    last_frame: Option<u64>,
    last_cases: Vec<DetectionCase>,
}

impl<T: Scalar> Default for Tracker<T> {
    fn default() -> Self {
        Self::new(TrackerConfig::default()).expect("default config is valid")
    }
}

impl<T: Scalar> Tracker<T> {
    pub fn new(config: TrackerConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            config,
            active: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
            last_frame: None,
            last_cases: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig<T> {
        &self.config
    }

    /// Active tracks, ordered by id.
    pub fn active(&self) -> &[Track<T>] {
        &self.active
    }

    /// Terminated tracks not yet collected.
    pub fn finished(&self) -> &[Track<T>] {
        &self.finished
    }

    pub fn take_finished(&mut self) -> Vec<Track<T>> {
        std::mem::take(&mut self.finished)
    }

    /// Case assigned to each detection passed to the last [`Tracker::step`].
    pub fn last_detection_cases(&self) -> &[DetectionCase] {
        &self.last_cases
    }

    /// Terminates every active track.
    pub fn finish(&mut self) -> Vec<TrackEvent> {
        let frame = self.last_frame.unwrap_or(0);
        let mut events = Vec::new();
        for mut t in self.active.drain(..) {
            t.state = TrackState::Terminated;
            events.push(TrackEvent {
                frame,
                kind: EventKind::Terminated,
                track_ids: vec![t.id],
                rects: vec![t.rect],
            });
            self.finished.push(t);
        }
        events
    }

    /// Associates this frame's detections with the active tracks.
    pub fn step(&mut self, frame_index: u64, detections: &[TextBand<T>], frame: &RgbImage) -> Result<Vec<TrackEvent>> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(Error::InvalidParameter(format!(
                    "frame {frame_index} does not follow frame {last}"
                )));
            }
        }
        self.last_frame = Some(frame_index);

        let (fw, fh) = (frame.width(), frame.height());
        let mut cases = vec![DetectionCase::Rejected; detections.len()];
        let mut valid_index = Vec::new();
        let mut dets = Vec::new();
        for (j, d) in detections.iter().enumerate() {
            if d.rect.is_empty() || !d.rect.fits_in(fw, fh) {
                log::warn!("frame {frame_index}: rejecting malformed detection {:?}", d.rect);
                continue;
            }
            valid_index.push(j);
            dets.push(Detection {
                rect: d.rect,
                hist: histogram_of_region(frame, &d.rect)?,
            });
        }

        let track_rects: Vec<Rect> = self.active.iter().map(|t| t.rect).collect();
        let det_rects: Vec<Rect> = dets.iter().map(|d| d.rect).collect();
        let sets = build_association_sets(&track_rects, &det_rects, self.config.eta_fo)?;

        let (m, n) = (track_rects.len(), det_rects.len());
        let mut uf = UnionFind::new(m + n);
        for (i, js) in sets.ts.iter().enumerate() {
            for &j in js {
                uf.union(i, m + j);
            }
        }
        let mut components: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut slot_of_root = vec![usize::MAX; m + n];
        for node in 0..m + n {
            let root = uf.find(node);
            if slot_of_root[root] == usize::MAX {
                slot_of_root[root] = components.len();
                components.push((Vec::new(), Vec::new()));
            }
            let comp = &mut components[slot_of_root[root]];
            if node < m {
                comp.0.push(node);
            } else {
                comp.1.push(node - m);
            }
        }

        let mut ctx = StepCtx {
            config: &self.config,
            frame,
            frame_index,
            tracks: std::mem::take(&mut self.active).into_iter().map(Some).collect(),
            dets: &dets,
            next: Vec::new(),
            finished: &mut self.finished,
            next_id: &mut self.next_id,
            events: Vec::new(),
        };
        for (ts, ds) in components {
            let case = match (ts.len(), ds.len()) {
                (0, _) => {
                    ctx.new_entry(ds[0]);
                    DetectionCase::NewEntry
                }
                (_, 0) => {
                    ctx.disappear(ts[0])?;
                    continue;
                }
                (1, 1) => {
                    ctx.unique(ts[0], ds[0])?;
                    DetectionCase::Unique
                }
                (_, 1) => {
                    ctx.many_tracks(&ts, ds[0])?;
                    DetectionCase::ManyTracks
                }
                (1, _) => {
                    ctx.many_detections(ts[0], &ds)?;
                    DetectionCase::ManyDetections
                }
                _ => {
                    ctx.many_to_many(&ts, &ds, &sets)?;
                    DetectionCase::ManyToMany
                }
            };
            for &j in &ds {
                cases[valid_index[j]] = case;
            }
        }
        let events = ctx.events;
        let mut next = ctx.next;
        next.sort_by_key(|t| t.id);
        self.active = next;
        self.last_cases = cases;
        Ok(events)
    }
}

struct StepCtx<'a, T> {
    config: &'a TrackerConfig<T>,
    frame: &'a RgbImage,
    frame_index: u64,
    tracks: Vec<Option<Track<T>>>,
    dets: &'a [Detection<T>],
    next: Vec<Track<T>>,
    finished: &'a mut Vec<Track<T>>,
    next_id: &'a mut u64,
    events: Vec<TrackEvent>,
}

impl<T: Scalar> StepCtx<'_, T> {
    fn take(&mut self, i: usize) -> Track<T> {
        self.tracks[i].take().expect("each track is handled once per step")
    }

    fn emit(&mut self, kind: EventKind, track_ids: Vec<u64>, rects: Vec<Rect>) {
        self.events.push(TrackEvent {
            frame: self.frame_index,
            kind,
            track_ids,
            rects,
        });
    }

    fn spawn(&mut self, rect: Rect, hist: ColorHistogram<T>) -> Track<T> {
        let id = *self.next_id;
        *self.next_id += 1;
        Track {
            id,
            rect,
            hist,
            age: 1,
            misses: 0,
            history: vec![(self.frame_index, rect)],
            state: TrackState::Active,
        }
    }

    fn new_entry(&mut self, j: usize) {
        let d = &self.dets[j];
        let t = self.spawn(d.rect, d.hist.clone());
        self.emit(EventKind::New, vec![t.id], vec![t.rect]);
        self.next.push(t);
    }

    fn matches(&self, a: &ColorHistogram<T>, b: &ColorHistogram<T>) -> bool {
        histogram_similarity(a, b) >= self.config.hist_match
    }

    /// Records an observation: new rectangle, blended histogram, reset misses.
    fn observe(&self, t: &mut Track<T>, rect: Rect, hist: &ColorHistogram<T>) {
        t.rect = rect;
        t.hist = t.hist.blend(hist, self.config.hist_blend);
        t.misses = 0;
        t.age += 1;
        t.history.push((self.frame_index, rect));
    }

    /// Rectangle update for a unique correspondence, by relation of the
    /// tracked rectangle to the detected one.
    fn updated_rect(&self, t: &Track<T>, rect: Rect, hist: &ColorHistogram<T>) -> Result<Rect> {
        Ok(match rcc5_classify(&t.rect, &rect, self.config.eta_fo)? {
            Rcc5Relation::EQ | Rcc5Relation::PP => rect,
            Rcc5Relation::PPi if self.matches(hist, &t.hist) => t.rect,
            Rcc5Relation::PO if self.matches(hist, &t.hist) => t.rect.union(&rect),
            Rcc5Relation::PPi | Rcc5Relation::PO => rect,
            Rcc5Relation::DC => unreachable!("disconnected pairs are never associated"),
        })
    }

    fn unique(&mut self, i: usize, j: usize) -> Result<()> {
        let mut t = self.take(i);
        self.update_with(&mut t, self.dets[j].rect, &self.dets[j].hist.clone())?;
        self.emit(EventKind::Updated, vec![t.id], vec![t.rect]);
        self.next.push(t);
        Ok(())
    }

    fn update_with(&self, t: &mut Track<T>, rect: Rect, hist: &ColorHistogram<T>) -> Result<()> {
        let new_rect = self.updated_rect(t, rect, hist)?;
        self.observe(t, new_rect, hist);
        Ok(())
    }

    fn disappear(&mut self, i: usize) -> Result<()> {
        let mut t = self.take(i);
        let restore = t.misses < self.config.max_misses && {
            let now = histogram_of_region(self.frame, &t.rect)?;
            self.matches(&now, &t.hist)
        };
        if restore {
            t.misses += 1;
            t.age += 1;
            t.history.push((self.frame_index, t.rect));
            self.emit(EventKind::Restored, vec![t.id], vec![t.rect]);
            self.next.push(t);
        } else {
            self.terminate(t);
        }
        Ok(())
    }

    fn terminate(&mut self, mut t: Track<T>) {
        t.state = TrackState::Terminated;
        self.emit(EventKind::Terminated, vec![t.id], vec![t.rect]);
        self.finished.push(t);
    }

    /// Several tracks on one detection: merge when the detection covers the
    /// tracks' union, otherwise each track follows its share of it.
    fn many_tracks(&mut self, ts: &[usize], j: usize) -> Result<()> {
        let mut tracks: Vec<Track<T>> = ts.iter().map(|&i| self.take(i)).collect();
        let det_rect = self.dets[j].rect;
        let det_hist = self.dets[j].hist.clone();
        let union = bounding_union(tracks.iter().map(|t| &t.rect)).expect("non-empty");
        let rel = rcc5_classify(&union, &det_rect, self.config.eta_fo)?;
        if matches!(rel, Rcc5Relation::EQ | Rcc5Relation::PP) {
            tracks.sort_by_key(|t| t.id);
            let mut survivor = tracks.remove(0);
            self.observe(&mut survivor, det_rect, &det_hist);
            let mut ids = vec![survivor.id];
            ids.extend(tracks.iter().map(|t| t.id));
            self.emit(EventKind::Merged, ids, vec![det_rect]);
            self.next.push(survivor);
            for mut t in tracks {
                t.state = TrackState::Terminated;
                self.finished.push(t);
            }
        } else {
            for mut t in tracks {
                let share = t.rect.intersection(&det_rect).expect("associated pairs overlap");
                let share_hist = histogram_of_region(self.frame, &share)?;
                self.update_with(&mut t, share, &share_hist)?;
                self.emit(EventKind::Updated, vec![t.id], vec![t.rect]);
                self.next.push(t);
            }
        }
        Ok(())
    }

    /// One track over several detections. If the tracked region still looks
    /// like the track, the detector fragmented a band that is still there and
    /// the track is kept whole; otherwise the track splits and the detection
    /// with the largest overlap keeps its id.
    fn many_detections(&mut self, i: usize, ds: &[usize]) -> Result<()> {
        let t = self.take(i);
        self.split_or_heal(t, ds)
    }

    fn split_or_heal(&mut self, mut t: Track<T>, ds: &[usize]) -> Result<()> {
        let now = histogram_of_region(self.frame, &t.rect)?;
        if self.matches(&now, &t.hist) {
            let rect = t.rect;
            self.observe(&mut t, rect, &now);
            self.emit(EventKind::Updated, vec![t.id], vec![t.rect]);
            self.next.push(t);
            return Ok(());
        }
        let keep = *ds
            .iter()
            .max_by(|&&a, &&b| {
                let oa = t.rect.intersection_area(&self.dets[a].rect);
                let ob = t.rect.intersection_area(&self.dets[b].rect);
                oa.cmp(&ob).then(b.cmp(&a))
            })
            .expect("non-empty");
        let mut ids = vec![t.id];
        let mut rects = vec![self.dets[keep].rect];
        let keep_hist = self.dets[keep].hist.clone();
        t.hist = keep_hist.clone();
        self.observe(&mut t, self.dets[keep].rect, &keep_hist);
        self.next.push(t);
        for &j in ds.iter().filter(|&&j| j != keep) {
            let d = &self.dets[j];
            let nt = self.spawn(d.rect, d.hist.clone());
            ids.push(nt.id);
            rects.push(nt.rect);
            self.next.push(nt);
        }
        self.emit(EventKind::Split, ids, rects);
        Ok(())
    }

    /// Merge check per detection, then every detection goes to the surviving
    /// track it overlaps most and each track is handled by its share count.
    fn many_to_many(&mut self, ts: &[usize], ds: &[usize], sets: &AssociationSets) -> Result<()> {
        // Pairs of (index into the step's track list, track).
        let mut alive: Vec<(usize, Track<T>)> = ts.iter().map(|&i| (i, self.take(i))).collect();
        let mut gone = vec![false; alive.len()];

        for &j in ds {
            let members: Vec<usize> = sets.ds[j]
                .iter()
                .filter_map(|&i| alive.iter().position(|(orig, _)| *orig == i))
                .filter(|&p| !gone[p])
                .collect();
            if members.len() < 2 {
                continue;
            }
            let union = bounding_union(members.iter().map(|&p| &alive[p].1.rect)).expect("non-empty");
            let rel = rcc5_classify(&union, &self.dets[j].rect, self.config.eta_fo)?;
            if !matches!(rel, Rcc5Relation::EQ | Rcc5Relation::PP) {
                continue;
            }
            let survivor = *members.iter().min_by_key(|&&p| alive[p].1.id).expect("non-empty");
            let mut ids = vec![alive[survivor].1.id];
            for &p in &members {
                if p != survivor {
                    gone[p] = true;
                    ids.push(alive[p].1.id);
                }
            }
            alive[survivor].1.rect = union;
            self.emit(EventKind::Merged, ids, vec![self.dets[j].rect]);
        }

        let mut survivors = Vec::new();
        for ((_, mut t), g) in alive.into_iter().zip(gone) {
            if g {
                t.state = TrackState::Terminated;
                self.finished.push(t);
            } else {
                survivors.push(t);
            }
        }
        survivors.sort_by_key(|t| t.id);

        let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); survivors.len()];
        for &j in ds {
            let r = self.dets[j].rect;
            let best = survivors
                .iter()
                .enumerate()
                .map(|(p, t)| (p, t.rect.intersection_area(&r)))
                .filter(|&(_, a)| a > 0)
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((p, _)) => assigned[p].push(j),
                None => self.new_entry(j),
            }
        }
        for (mut t, mine) in survivors.into_iter().zip(assigned) {
            match mine.len() {
                0 => {
                    let slot = self.tracks.len();
                    self.tracks.push(Some(t));
                    self.disappear(slot)?;
                }
                1 => {
                    let d = &self.dets[mine[0]];
                    let (rect, hist) = (d.rect, d.hist.clone());
                    self.update_with(&mut t, rect, &hist)?;
                    self.emit(EventKind::Updated, vec![t.id], vec![t.rect]);
                    self.next.push(t);
                }
                _ => self.split_or_heal(t, &mine)?,
            }
        }
        Ok(())
    }
}
