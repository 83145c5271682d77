//! JSONL records shared by ground truth, detector output and tracks.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Rect, Result};

/// One band in a frame record. Ground truth carries `track_id` and
/// optionally `text`; detector output carries `density`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

impl BandRecord {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }

    pub fn from_rect(r: Rect) -> Self {
        BandRecord {
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            track_id: None,
            text: None,
            density: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub bands: Vec<BandRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRect {
    pub frame: u64,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl FrameRect {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

/// A finished track as written by the tracking stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub id: u64,
    pub start_frame: u64,
    pub end_frame: u64,
    pub rects: Vec<FrameRect>,
    /// Frames in which the track had a detection (the rest were restored).
    pub detected_frames: usize,
    /// Accumulated image relative to the track directory, when written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

impl TrackRecord {
    pub fn rect_map(&self) -> BTreeMap<u64, Rect> {
        self.rects.iter().map(|r| (r.frame, r.rect())).collect()
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_owned(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

pub fn to_jsonl<T: Serialize>(values: &[T]) -> String {
    let mut buf = Vec::new();
    for v in values {
        write_jsonl_line(&mut buf, v).expect("writing to memory");
    }
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
