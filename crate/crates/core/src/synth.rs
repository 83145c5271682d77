//! Synthetic news-style frames with known band ground truth.
//!
//! Text is drawn with a glyph proxy (stems, bars and boxes with 2-4 px
//! strokes) rather than real fonts; the detector only sees edge statistics.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::records::{write_jsonl_line, BandRecord, FrameRecord};
use crate::{Error, Rect, Result};

/// Minimum luminance difference between a band's text and its background.
pub const MIN_CONTRAST: f64 = 0.3;
pub const MAX_NOISE: f64 = 0.2;
/// Blank pixels between text and the band border. With a 1 px margin the
/// stroke edges reach the border, so the band rect is the text extent.
pub const TEXT_MARGIN: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    Flat { color: [u8; 3] },
    /// Low-amplitude sinusoid over a base colour.
    Textured {
        color: [u8; 3],
        amplitude: f64,
        period: f64,
        angle: f64,
    },
    /// Soft and hard edged colour blobs over a vertical gradient.
    PhotoLike { blobs: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub rect: Rect,
    pub fg: [u8; 3],
    pub bg: [u8; 3],
    /// Probability that a glyph slot is inked rather than left blank.
    #[serde(default = "default_glyph_density")]
    pub glyph_density: f64,
    /// First frame the band is visible.
    #[serde(default)]
    pub start: u64,
    /// Last frame the band is visible (inclusive).
    #[serde(default = "never")]
    pub end: u64,
    #[serde(default)]
    pub text: Option<String>,
}

fn default_glyph_density() -> f64 {
    0.9
}

fn never() -> u64 {
    u64::MAX
}

impl BandSpec {
    pub fn active_at(&self, frame: u64) -> bool {
        self.start <= frame && frame <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    #[serde(default = "one")]
    pub frames: u64,
    pub seed: u64,
    /// Gaussian noise standard deviation in luminance units.
    #[serde(default)]
    pub noise: f64,
    pub background: Background,
    #[serde(default)]
    pub bands: Vec<BandSpec>,
}

fn one() -> u64 {
    1
}

pub fn luminance(c: [u8; 3]) -> f64 {
    (0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64) / 255.0
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.width < 3 || self.height < 3 {
            return Err(Error::FrameTooSmall {
                width: self.width as usize,
                height: self.height as usize,
            });
        }
        if !(0.0..=MAX_NOISE).contains(&self.noise) {
            return bad(format!("noise {} outside [0, {MAX_NOISE}]", self.noise));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if b.rect.is_empty() || !b.rect.fits_in(self.width, self.height) {
                return bad(format!("band {i} rect {:?} outside frame", b.rect));
            }
            if (luminance(b.fg) - luminance(b.bg)).abs() < MIN_CONTRAST {
                return bad(format!("band {i} contrast below {MIN_CONTRAST}"));
            }
            if !(b.glyph_density > 0.0 && b.glyph_density <= 1.0) {
                return bad(format!("band {i} glyph density {}", b.glyph_density));
            }
            if b.start > b.end {
                return bad(format!("band {i} ends before it starts"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SynthSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Entries of the per-renderer Gaussian noise table (16-bit index).
const NOISE_TABLE: usize = 1 << 16;

/// Precomputed static content of a spec: background, per-band glyph masks
/// and a table of Gaussian noise samples.
pub struct Renderer {
    spec: SynthSpec,
    background: Vec<[f32; 3]>,
    masks: Vec<Vec<bool>>,
    noise: Vec<f32>,
}

impl Renderer {
    pub fn new(spec: SynthSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let background = render_background(&spec, &mut rng)
            .into_iter()
            .map(|c| c.map(|v| v as f32))
            .collect();
        let masks = spec
            .bands
            .iter()
            .map(|b| glyph_mask(b.rect.w, b.rect.h, b.glyph_density, &mut rng))
            .collect();
        let noise = if spec.noise > 0.0 {
            let d = Normal::new(0.0, spec.noise * 255.0).expect("noise validated");
            (0..NOISE_TABLE).map(|_| d.sample(&mut rng) as f32).collect()
        } else {
            Vec::new()
        };
        Ok(Renderer {
            spec,
            background,
            masks,
            noise,
        })
    }

    pub fn spec(&self) -> &SynthSpec {
        &self.spec
    }

    /// Colour plus one noise draw, rounded to 8 bits.
    #[inline]
    fn shade(&self, px: &mut [u8], c: [f32; 3], rng: &mut ChaCha8Rng) {
        if self.noise.is_empty() {
            for ch in 0..3 {
                px[ch] = (c[ch] + 0.5) as u8;
            }
        } else {
            let bits = rng.next_u64();
            for ch in 0..3 {
                let n = self.noise[((bits >> (16 * ch)) & 0xffff) as usize];
                // saturating cast: clamps to 0..=255
                px[ch] = (c[ch] + n + 0.5) as u8;
            }
        }
    }

    /// Renders one frame and its ground-truth record. Band `i` carries
    /// track id `i + 1`.
    pub fn render(&self, frame: u64) -> (RgbImage, FrameRecord) {
        let (w, h) = (self.spec.width, self.spec.height);
        let mut bands = Vec::new();
        let mut img = RgbImage::new(w, h);
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(frame.wrapping_add(1));
        let raw: &mut [u8] = &mut img;
        for (px, c) in raw.chunks_exact_mut(3).zip(&self.background) {
            self.shade(px, *c, &mut rng);
        }
        for (i, (b, mask)) in self.spec.bands.iter().zip(&self.masks).enumerate() {
            if !b.active_at(frame) {
                continue;
            }
            let r = b.rect;
            let (fg, bg) = (b.fg.map(f32::from), b.bg.map(f32::from));
            for dy in 0..r.h {
                let row = (((r.y + dy) * w + r.x) * 3) as usize;
                let line = &mut raw[row..row + 3 * r.w as usize];
                for (dx, px) in line.chunks_exact_mut(3).enumerate() {
                    let c = if mask[(dy * r.w) as usize + dx] { fg } else { bg };
                    self.shade(px, c, &mut rng);
                }
            }
            bands.push(BandRecord {
                track_id: Some(i as u64 + 1),
                text: b.text.clone(),
                ..BandRecord::from_rect(r)
            });
        }
        (img, FrameRecord { frame, file: None, bands })
    }
}

pub fn render_frame(spec: &SynthSpec, frame: u64) -> Result<(RgbImage, FrameRecord)> {
    Ok(Renderer::new(spec.clone())?.render(frame))
}

pub fn frame_file_name(frame: u64) -> String {
    format!("frame_{frame:05}.png")
}

/// Writes `frame_NNNNN.png` for every frame plus `gt.jsonl` into `dir`.
pub fn render_sequence(spec: &SynthSpec, dir: &Path) -> Result<Vec<FrameRecord>> {
    let renderer = Renderer::new(spec.clone())?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let gt_path = dir.join("gt.jsonl");
    let mut gt = Vec::new();
    let mut out = Vec::new();
    for f in 0..spec.frames {
        let (img, mut rec) = renderer.render(f);
        let name = frame_file_name(f);
        let path = dir.join(&name);
        img.save(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        rec.file = Some(name);
        write_jsonl_line(&mut gt, &rec).map_err(|e| Error::io(&gt_path, e))?;
        out.push(rec);
    }
    fs::File::create(&gt_path)
        .and_then(|mut f| f.write_all(&gt))
        .map_err(|e| Error::io(&gt_path, e))?;
    Ok(out)
}

fn render_background(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let (w, h) = (spec.width as usize, spec.height as usize);
    match spec.background {
        Background::Flat { color } => vec![color.map(f64::from); w * h],
        Background::Textured {
            color,
            amplitude,
            period,
            angle,
        } => {
            let (s, c) = angle.sin_cos();
            let k = std::f64::consts::TAU / period.max(1.0);
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let v = amplitude * 255.0 * ((x as f64 * c + y as f64 * s) * k).sin();
                    out.push(color.map(|ch| ch as f64 + v));
                }
            }
            out
        }
        Background::PhotoLike { blobs } => {
            let top: [f64; 3] = std::array::from_fn(|_| rng.random_range(40.0..200.0));
            let bottom: [f64; 3] = std::array::from_fn(|_| rng.random_range(40.0..200.0));
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                let t = y as f64 / (h - 1).max(1) as f64;
                let row: [f64; 3] = std::array::from_fn(|i| top[i] * (1.0 - t) + bottom[i] * t);
                out.extend(std::iter::repeat_n(row, w));
            }
            for _ in 0..blobs {
                let cx = rng.random_range(0.0..w as f64);
                let cy = rng.random_range(0.0..h as f64);
                let rx = rng.random_range(15.0..120.0);
                let ry = rng.random_range(15.0..120.0);
                // soft = width of the edge ramp as a fraction of the radius
                let soft: f64 = if rng.random_bool(0.3) {
                    0.05
                } else {
                    rng.random_range(0.3..1.0)
                };
                let color: [f64; 3] = std::array::from_fn(|_| rng.random_range(20.0..235.0));
                let opacity = rng.random_range(0.4..0.9);
                let x0 = (cx - rx).max(0.0) as usize;
                let x1 = ((cx + rx).ceil() as usize).min(w);
                let y0 = (cy - ry).max(0.0) as usize;
                let y1 = ((cy + ry).ceil() as usize).min(h);
                for y in y0..y1 {
                    for x in x0..x1 {
                        let dx = (x as f64 - cx) / rx;
                        let dy = (y as f64 - cy) / ry;
                        let d = (dx * dx + dy * dy).sqrt();
                        let a = ((1.0 - d) / soft).clamp(0.0, 1.0) * opacity;
                        if a > 0.0 {
                            let p = &mut out[y * w + x];
                            for i in 0..3 {
                                p[i] = p[i] * (1.0 - a) + color[i] * a;
                            }
                        }
                    }
                }
            }
            out
        }
    }
}

/// Glyph proxy for a `w`×`h` band: words of stroke glyphs inside a
/// [`TEXT_MARGIN`] border.
pub fn glyph_mask(w: u32, h: u32, density: f64, rng: &mut impl Rng) -> Vec<bool> {
    let (w, h) = (w as usize, h as usize);
    let m = TEXT_MARGIN as usize;
    let mut mask = vec![false; w * h];
    if w <= 2 * m + 2 || h <= 2 * m + 2 {
        return mask;
    }
    let (top, bottom) = (m, h - m);
    let th = bottom - top;
    let mut fill = |x0: usize, x1: usize, y0: usize, y1: usize| {
        for y in y0..y1.min(bottom) {
            for x in x0..x1.min(w - m) {
                mask[y * w + x] = true;
            }
        }
    };
    let mut x = m;
    let mut in_word = 0u32;
    let mut word_len = rng.random_range(3..9u32);
    let mut first = true;
    while x < w - m {
        let stroke = rng.random_range(2..=3usize);
        let bar = 2usize.min(th / 3).max(1);
        let cell = rng.random_range(6..=9usize).max(2 * stroke + 2);
        if x + cell > w - m {
            // close the line with a stem flush against the right margin
            let right = w - m;
            if right >= x + stroke {
                fill(right - stroke, right, top, bottom);
            }
            break;
        }
        if first || rng.random_bool(density) {
            let mid = top + th / 2 - bar / 2;
            let stems = |fill: &mut dyn FnMut(usize, usize, usize, usize)| {
                fill(x, x + stroke, top, bottom);
                fill(x + cell - stroke, x + cell, top, bottom);
            };
            match rng.random_range(0..6u8) {
                // H
                0 => {
                    stems(&mut fill);
                    fill(x, x + cell, mid, mid + bar);
                }
                // E
                1 => {
                    fill(x, x + stroke, top, bottom);
                    fill(x, x + cell, top, top + bar);
                    fill(x, x + cell - 1, mid, mid + bar);
                    fill(x, x + cell, bottom - bar, bottom);
                }
                // O
                2 => {
                    stems(&mut fill);
                    fill(x, x + cell, top, top + bar);
                    fill(x, x + cell, bottom - bar, bottom);
                }
                // m
                3 => {
                    stems(&mut fill);
                    let c = x + cell / 2 - stroke / 2;
                    fill(c, c + stroke, top, bottom);
                    fill(x, x + cell, top, top + bar);
                }
                // B-like: box with a middle bar
                4 => {
                    stems(&mut fill);
                    fill(x, x + cell, top, top + bar);
                    fill(x, x + cell, mid, mid + bar);
                    fill(x, x + cell, bottom - bar, bottom);
                }
                // F
                _ => {
                    fill(x, x + stroke, top, bottom);
                    fill(x, x + cell, top, top + bar);
                    fill(x, x + cell - 1, mid, mid + bar);
                }
            }
        }
        first = false;
        x += cell + rng.random_range(1..=2usize);
        in_word += 1;
        if in_word == word_len {
            x += rng.random_range(4..=7usize);
            in_word = 0;
            word_len = rng.random_range(3..9u32);
        }
    }
    mask
}

/// Knobs for randomly generated corpora and sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub width: u32,
    pub height: u32,
    pub noise: f64,
    pub background: BackgroundKind,
    pub min_bands: usize,
    pub max_bands: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    Flat,
    Textured,
    PhotoLike,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            width: 720,
            height: 576,
            noise: 0.05,
            background: BackgroundKind::Textured,
            min_bands: 1,
            max_bands: 4,
        }
    }
}

fn random_background(kind: BackgroundKind, rng: &mut impl Rng) -> Background {
    match kind {
        BackgroundKind::Flat => Background::Flat {
            color: std::array::from_fn(|_| rng.random_range(60..190)),
        },
        BackgroundKind::Textured => Background::Textured {
            color: std::array::from_fn(|_| rng.random_range(70..180)),
            amplitude: rng.random_range(0.03..0.08),
            period: rng.random_range(30.0..90.0),
            angle: rng.random_range(0.0..std::f64::consts::PI),
        },
        BackgroundKind::PhotoLike => Background::PhotoLike {
            blobs: rng.random_range(25..45),
        },
    }
}

fn random_colors(rng: &mut impl Rng) -> ([u8; 3], [u8; 3]) {
    loop {
        let bg: [u8; 3] = std::array::from_fn(|_| rng.random_range(0..=255));
        let fg: [u8; 3] = match rng.random_range(0..3u8) {
            0 => [255, 255, 255],
            1 => [250, 220, 40],
            _ => [10, 10, 10],
        };
        if (luminance(fg) - luminance(bg)).abs() >= MIN_CONTRAST + 0.1 {
            return (bg, fg);
        }
    }
}

/// Band rectangles stacked at distinct rows with at least `gap` blank rows
/// between them.
fn random_layout(n: usize, width: u32, height: u32, gap: u32, rng: &mut impl Rng) -> Vec<Rect> {
    let heights: Vec<u32> = (0..n).map(|_| rng.random_range(18..=36)).collect();
    let used: u32 = heights.iter().sum::<u32>() + gap * (n as u32 + 1);
    let mut slack = height.saturating_sub(used);
    let mut y = gap;
    let mut out = Vec::with_capacity(n);
    for (i, &h) in heights.iter().enumerate() {
        let remaining = (n - i) as u32;
        let jump = rng.random_range(0..=slack / remaining);
        slack -= jump;
        y += jump;
        let w = rng.random_range((width / 4).max(40)..=(width * 4 / 5).max(41));
        let x = rng.random_range(4..=(width - w - 4).max(4));
        out.push(Rect::new(x, y, w, h));
        y += h + gap;
    }
    out
}

/// Single-frame spec number `index` of a corpus.
pub fn corpus_frame_spec(seed: u64, index: u64, p: &CorpusParams) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    let n = rng.random_range(p.min_bands..=p.max_bands);
    let bands = random_layout(n, p.width, p.height, 12, &mut rng)
        .into_iter()
        .map(|rect| {
            let (bg, fg) = random_colors(&mut rng);
            BandSpec {
                rect,
                fg,
                bg,
                glyph_density: default_glyph_density(),
                start: 0,
                end: never(),
                text: None,
            }
        })
        .collect();
    SynthSpec {
        width: p.width,
        height: p.height,
        frames: 1,
        seed: rng.random(),
        noise: p.noise,
        background: random_background(p.background, &mut rng),
        bands,
    }
}

/// Renders a corpus of independent frames; frame `i` comes from
/// [`corpus_frame_spec`]`(seed, i, p)`.
pub fn render_corpus(seed: u64, frames: u64, p: &CorpusParams) -> Result<Vec<(RgbImage, FrameRecord)>> {
    (0..frames)
        .map(|i| {
            let (img, mut rec) = render_frame(&corpus_frame_spec(seed, i, p), 0)?;
            rec.frame = i;
            Ok((img, rec))
        })
        .collect()
}

/// Writes a corpus in the same layout as [`render_sequence`].
pub fn write_corpus(seed: u64, frames: u64, p: &CorpusParams, dir: &Path) -> Result<Vec<FrameRecord>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let gt_path = dir.join("gt.jsonl");
    let mut gt = Vec::new();
    let mut out = Vec::new();
    for (img, mut rec) in render_corpus(seed, frames, p)? {
        let name = frame_file_name(rec.frame);
        let path: PathBuf = dir.join(&name);
        img.save(&path).map_err(|source| Error::Image { path, source })?;
        rec.file = Some(name);
        write_jsonl_line(&mut gt, &rec).map_err(|e| Error::io(&gt_path, e))?;
        out.push(rec);
    }
    fs::write(&gt_path, gt).map_err(|e| Error::io(&gt_path, e))?;
    Ok(out)
}

/// A sequence whose bands enter and leave on a schedule. Bands sharing a
/// row never overlap in time.
pub fn sequence_spec(seed: u64, frames: u64, p: &CorpusParams) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = random_layout(p.max_bands.max(1), p.width, p.height, 12, &mut rng);
    let mut bands = Vec::new();
    for rect in rows {
        // one or two appearances per row
        let cuts = if frames >= 40 && rng.random_bool(0.5) { 2 } else { 1 };
        let span = frames / cuts;
        for c in 0..cuts {
            let lo = c * span;
            let hi = if c + 1 == cuts { frames - 1 } else { lo + span - 1 };
            let len = hi - lo + 1;
            let start = lo + rng.random_range(0..=len / 4);
            let end = hi - rng.random_range(0..=len / 4);
            let (bg, fg) = random_colors(&mut rng);
            let w = rng.random_range((rect.w / 2).max(40)..=rect.w);
            bands.push(BandSpec {
                rect: Rect::new(rect.x, rect.y, w, rect.h),
                fg,
                bg,
                glyph_density: default_glyph_density(),
                start,
                end: end.max(start),
                text: None,
            });
        }
    }
    SynthSpec {
        width: p.width,
        height: p.height,
        frames,
        seed: rng.random(),
        noise: p.noise,
        background: random_background(p.background, &mut rng),
        bands,
    }
}

/// Removes the detection that best overlaps `target`. Returns whether one
/// was removed.
pub fn drop_detection(detections: &mut Vec<Rect>, target: &Rect) -> bool {
    match best_match(detections, target) {
        Some(i) => {
            detections.remove(i);
            true
        }
        None => false,
    }
}

/// Replaces the detection that best overlaps `target` with its left and
/// right halves, separated by a 2 px gap.
pub fn fragment_detection(detections: &mut Vec<Rect>, target: &Rect) -> bool {
    let Some(i) = best_match(detections, target) else {
        return false;
    };
    let r = detections[i];
    if r.w < 8 {
        return false;
    }
    let half = (r.w - 2) / 2;
    detections.splice(
        i..=i,
        [
            Rect::new(r.x, r.y, half, r.h),
            Rect::new(r.x + half + 2, r.y, r.w - half - 2, r.h),
        ],
    );
    true
}

fn best_match(detections: &[Rect], target: &Rect) -> Option<usize> {
    detections
        .iter()
        .enumerate()
        .map(|(i, d)| (i, d.iou::<f64>(target)))
        .filter(|&(_, s)| s > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}
