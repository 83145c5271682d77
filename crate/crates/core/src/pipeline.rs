//! Frame ingestion and the detect → track → accumulate pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::RgbImage;
use rayon::prelude::*;
use serde::Serialize;

use crate::band_detect::{BandDetector, DetectParams, DetectionTrace, TextBand};
use crate::extract::{accumulate, binarize_band, AccumulatedBand, BinaryBandImage};
use crate::pgm::{unit_to_bytes, write_pgm};
use crate::preprocess::{enhance_stages, normalized_gradient, to_luminance, EnhancedEdgeMap};
use crate::records::{BandRecord, FrameRecord, FrameRect, TrackRecord};
use crate::tracker::{EventKind, Track, TrackEvent, Tracker, TrackerConfig};
use crate::{Error, Result, Scalar};

/// Extensions accepted when scanning a frame directory.
pub const FRAME_EXTENSIONS: [&str; 5] = ["png", "ppm", "pgm", "pnm", "pbm"];

/// Which edge map detection runs on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Contrast-enhanced, equalized gradient.
    #[default]
    Enhanced,
    /// Gradient magnitude over its maximum, no enhancement.
    GradientOnly,
}

/// Edge map of a colour frame. Frames without any gradient give an all-zero
/// map.
pub fn edge_map<T: Scalar>(img: &RgbImage, mode: EdgeMode) -> Result<EnhancedEdgeMap<T>> {
    let gray = to_luminance::<T>(img)?;
    match mode {
        EdgeMode::GradientOnly => Ok(normalized_gradient(&gray)),
        EdgeMode::Enhanced => match enhance_stages(&gray) {
            Ok(s) => Ok(s.enhanced),
            Err(Error::BlankFrame) => Ok(EnhancedEdgeMap::zeros(gray.width(), gray.height())),
            Err(e) => Err(e),
        },
    }
}

pub fn detect_frame<T: Scalar>(img: &RgbImage, params: &DetectParams, mode: EdgeMode) -> Result<Vec<TextBand<T>>> {
    Ok(BandDetector::new(*params).detect(&edge_map::<T>(img, mode)?))
}

/// Detection that also writes `<stem>_{grad,stretch,eq}.pgm` and
/// `<stem>_bands.json` into `dir`.
pub fn detect_frame_debug<T: Scalar>(
    img: &RgbImage,
    params: &DetectParams,
    mode: EdgeMode,
    dir: &Path,
    stem: &str,
) -> Result<Vec<TextBand<T>>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let gray = to_luminance::<T>(img)?;
    let (w, h) = (gray.width() as u32, gray.height() as u32);
    let edge = match (mode, enhance_stages(&gray)) {
        (_, Err(Error::BlankFrame)) => EnhancedEdgeMap::zeros(gray.width(), gray.height()),
        (_, Err(e)) => return Err(e),
        (m, Ok(s)) => {
            write_pgm(&dir.join(format!("{stem}_grad.pgm")), w, h, &unit_to_bytes(&s.gradient.normalized()))?;
            write_pgm(&dir.join(format!("{stem}_stretch.pgm")), w, h, &unit_to_bytes(&s.stretched.val))?;
            write_pgm(&dir.join(format!("{stem}_eq.pgm")), w, h, &unit_to_bytes(&s.enhanced.val))?;
            match m {
                EdgeMode::Enhanced => s.enhanced,
                EdgeMode::GradientOnly => normalized_gradient(&gray),
            }
        }
    };
    let trace: DetectionTrace<T> = BandDetector::new(*params).detect_traced(&edge);
    let path = dir.join(format!("{stem}_bands.json"));
    let json = serde_json::to_vec(&trace).map_err(|e| Error::Config(format!("debug dump: {e}")))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(trace.accepted)
}

/// Image files of `dir` in lexicographic file-name order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if ok && path.is_file() {
            out.push(path);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}

pub fn load_frame(path: &Path) -> Result<RgbImage> {
    image::open(path)
        .map(|i| i.into_rgb8())
        .map_err(|source| Error::Image {
            path: path.to_owned(),
            source,
        })
}

/// A frame waiting for detection.
pub struct InputFrame {
    pub index: u64,
    pub name: Option<String>,
    pub image: RgbImage,
}

/// Reads frames of a directory. The frame index is the position in the
/// sorted file list; unreadable files and frames whose size differs from the
/// first readable one are logged and skipped.
pub struct DirFrames {
    paths: std::vec::IntoIter<PathBuf>,
    index: u64,
    size: Option<(u32, u32)>,
    pub errors: Vec<Error>,
}

impl DirFrames {
    pub fn open(dir: &Path) -> Result<Self> {
        Ok(DirFrames {
            paths: list_frames(dir)?.into_iter(),
            index: 0,
            size: None,
            errors: Vec::new(),
        })
    }
}

impl Iterator for DirFrames {
    type Item = InputFrame;

    fn next(&mut self) -> Option<InputFrame> {
        for path in self.paths.by_ref() {
            let index = self.index;
            self.index += 1;
            let image = match load_frame(&path) {
                Ok(i) => i,
                Err(e) => {
                    log::error!("{e}");
                    self.errors.push(e);
                    continue;
                }
            };
            let dims = image.dimensions();
            if *self.size.get_or_insert(dims) != dims {
                let (w, h) = self.size.unwrap();
                let e = Error::InvalidParameter(format!(
                    "{}: frame is {}x{}, expected {w}x{h}",
                    path.display(),
                    dims.0,
                    dims.1
                ));
                log::error!("{e}");
                self.errors.push(e);
                continue;
            }
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned());
            return Some(InputFrame { index, name, image });
        }
        None
    }
}

/// Raw interleaved RGB24 frames of a fixed size read back to back.
pub struct RawFrames<R> {
    reader: R,
    width: u32,
    height: u32,
    index: u64,
}

impl<R: Read> RawFrames<R> {
    pub fn new(reader: R, width: u32, height: u32) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::FrameTooSmall {
                width: width as usize,
                height: height as usize,
            });
        }
        Ok(RawFrames {
            reader,
            width,
            height,
            index: 0,
        })
    }

    /// Next frame; `Ok(None)` at a clean end of stream.
    pub fn read_frame(&mut self) -> Result<Option<InputFrame>> {
        let len = self.width as usize * self.height as usize * 3;
        let mut buf = vec![0u8; len];
        let mut got = 0;
        while got < len {
            match self.reader.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(Error::io("<stream>", e)),
            }
        }
        if got == 0 {
            return Ok(None);
        }
        if got < len {
            return Err(Error::BadDimensions {
                width: self.width as usize,
                height: self.height as usize,
                got,
            });
        }
        let image = RgbImage::from_raw(self.width, self.height, buf).expect("buffer length checked");
        let index = self.index;
        self.index += 1;
        Ok(Some(InputFrame {
            index,
            name: None,
            image,
        }))
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    pub detect: DetectParams,
    pub edge_mode: EdgeMode,
    pub tracker: TrackerConfig<f32>,
    /// Detection worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub debug_dir: Option<PathBuf>,
}

/// Detection result of one frame.
pub struct Detected {
    pub frame: InputFrame,
    pub bands: Vec<TextBand<f32>>,
    pub millis: f64,
}

impl Detected {
    pub fn record(&self) -> FrameRecord {
        FrameRecord {
            frame: self.frame.index,
            file: self.frame.name.clone(),
            bands: self
                .bands
                .iter()
                .map(|b| BandRecord {
                    density: Some(b.density as f64),
                    ..BandRecord::from_rect(b.rect)
                })
                .collect(),
        }
    }
}

fn detect_one(cfg: &PipelineConfig, frame: InputFrame) -> Result<Detected> {
    let start = Instant::now();
    let bands = match &cfg.debug_dir {
        Some(dir) => {
            let stem = frame
                .name
                .as_deref()
                .and_then(|n| Path::new(n).file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("{:05}", frame.index));
            detect_frame_debug(&frame.image, &cfg.detect, cfg.edge_mode, dir, &stem)?
        }
        None => detect_frame(&frame.image, &cfg.detect, cfg.edge_mode)?,
    };
    Ok(Detected {
        frame,
        bands,
        millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs detection over `frames` on a worker pool and hands results to
/// `sink` strictly in input order.
pub fn detect_stream<I, F>(cfg: &PipelineConfig, frames: I, mut sink: F) -> Result<()>
where
    I: IntoIterator<Item = InputFrame>,
    F: FnMut(Detected) -> Result<()>,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let batch = pool.current_num_threads() * 2;
    let mut frames = frames.into_iter().peekable();
    while frames.peek().is_some() {
        let chunk: Vec<InputFrame> = frames.by_ref().take(batch).collect();
        let results: Vec<Result<Detected>> =
            pool.install(|| chunk.into_par_iter().map(|f| detect_one(cfg, f)).collect());
        for r in results {
            sink(r?)?;
        }
    }
    Ok(())
}

/// A terminated track with its accumulated binarization.
#[derive(Debug, Clone)]
pub struct FinishedTrack {
    pub record: TrackRecord,
    pub accumulated: Option<AccumulatedBand<f32>>,
}

/// Tracker plus per-track binarization bookkeeping.
pub struct TrackingSession {
    tracker: Tracker<f32>,
    binarized: BTreeMap<u64, Vec<BinaryBandImage>>,
    detected: BTreeMap<u64, usize>,
    finished: Vec<FinishedTrack>,
}

impl TrackingSession {
    pub fn new(config: TrackerConfig<f32>) -> Result<Self> {
        Ok(TrackingSession {
            tracker: Tracker::new(config)?,
            binarized: BTreeMap::new(),
            detected: BTreeMap::new(),
            finished: Vec::new(),
        })
    }

    pub fn tracker(&self) -> &Tracker<f32> {
        &self.tracker
    }

    pub fn push(&mut self, frame: u64, bands: &[TextBand<f32>], img: &RgbImage) -> Result<Vec<TrackEvent>> {
        let events = self.tracker.step(frame, bands, img)?;
        let mut seen = BTreeSet::new();
        for e in &events {
            match e.kind {
                EventKind::New | EventKind::Updated | EventKind::Split => seen.extend(&e.track_ids),
                EventKind::Merged => seen.extend(e.track_ids.first()),
                EventKind::Restored | EventKind::Terminated => {}
            }
        }
        for id in seen {
            *self.detected.entry(id).or_default() += 1;
        }
        for t in self.tracker.active() {
            let b = binarize_band(img, &t.rect)?;
            self.binarized.entry(t.id).or_default().push(b);
        }
        self.collect()?;
        Ok(events)
    }

    fn collect(&mut self) -> Result<()> {
        for t in self.tracker.take_finished() {
            let bins = self.binarized.remove(&t.id).unwrap_or_default();
            let accumulated = if bins.is_empty() {
                None
            } else {
                Some(accumulate(&bins)?)
            };
            let record = track_record(&t, self.detected.remove(&t.id).unwrap_or(0));
            self.finished.push(FinishedTrack { record, accumulated });
        }
        Ok(())
    }

    /// Terminates the remaining tracks; returns the final events and every
    /// finished track ordered by id.
    pub fn finish(mut self) -> Result<(Vec<TrackEvent>, Vec<FinishedTrack>)> {
        let events = self.tracker.finish();
        self.collect()?;
        self.finished.sort_by_key(|t| t.record.id);
        Ok((events, self.finished))
    }
}

pub fn track_record<T>(t: &Track<T>, detected_frames: usize) -> TrackRecord {
    TrackRecord {
        id: t.id,
        start_frame: t.start_frame(),
        end_frame: t.end_frame(),
        rects: t
            .history
            .iter()
            .map(|&(frame, r)| FrameRect {
                frame,
                x: r.x,
                y: r.y,
                w: r.w,
                h: r.h,
            })
            .collect(),
        detected_frames,
        image: None,
    }
}

pub fn track_image_name(id: u64) -> String {
    format!("track_{id:05}.pgm")
}

/// Writes the accumulated image of each track as a PGM (black text on white)
/// into `dir` and records its file name.
pub fn write_track_images(dir: &Path, tracks: &mut [FinishedTrack]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in tracks {
        if let Some(acc) = &t.accumulated {
            let name = track_image_name(t.record.id);
            let img = &acc.final_image;
            write_pgm(&dir.join(&name), img.width, img.height, &img.to_gray_bytes())?;
            t.record.image = Some(name);
        }
    }
    Ok(())
}

/// Reads an accumulated track image back: dark pixels are text.
pub fn read_track_image(path: &Path) -> Result<BinaryBandImage> {
    let g = crate::pgm::read_gray(path)?;
    let bits = g.pixels().map(|p| u8::from(p[0] < 128)).collect();
    BinaryBandImage::new(g.width(), g.height(), bits)
}

/// Everything a full run produces, serialized deterministically.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub detections: Vec<FrameRecord>,
    pub events: Vec<TrackEvent>,
    pub tracks: Vec<FinishedTrack>,
    pub millis: Vec<f64>,
}

/// Detects and tracks every frame in order.
pub fn run<I: IntoIterator<Item = InputFrame>>(cfg: &PipelineConfig, frames: I) -> Result<RunOutput> {
    let mut session = TrackingSession::new(cfg.tracker)?;
    let mut out = RunOutput::default();
    detect_stream(cfg, frames, |d| {
        out.events.extend(session.push(d.frame.index, &d.bands, &d.frame.image)?);
        out.detections.push(d.record());
        out.millis.push(d.millis);
        Ok(())
    })?;
    let (events, tracks) = session.finish()?;
    out.events.extend(events);
    out.tracks = tracks;
    Ok(out)
}

/// Tracking only, on detections computed elsewhere.
pub fn track_detections<I>(cfg: &TrackerConfig<f32>, frames: I) -> Result<(Vec<TrackEvent>, Vec<FinishedTrack>)>
where
    I: IntoIterator<Item = (FrameRecord, RgbImage)>,
{
    let mut session = TrackingSession::new(*cfg)?;
    let mut events = Vec::new();
    for (rec, img) in frames {
        let bands: Vec<TextBand<f32>> = rec
            .bands
            .iter()
            .map(|b| TextBand {
                rect: b.rect(),
                density: b.density.unwrap_or(0.0) as f32,
            })
            .collect();
        events.extend(session.push(rec.frame, &bands, &img)?);
    }
    let (last, tracks) = session.finish()?;
    events.extend(last);
    Ok((events, tracks))
}
