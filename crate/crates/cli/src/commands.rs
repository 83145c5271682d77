use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use ovtext::eval::{
    align_frames, epshtein_prf, frame_rects, timing_report, track_assignments, track_purity_switches,
    DetectionMetrics, GroundTruth, SeqTrack, TimingSummary, TrackAssignment, TrackMetrics,
};
use ovtext::extract::{error_rates, recognize_track, Dictionary, ErrorRates, OcrCommand, RecognizedText};
use ovtext::pipeline::{
    detect_stream, read_track_image, write_track_images, DirFrames, InputFrame, RawFrames, TrackingSession,
};
use ovtext::records::{read_jsonl, write_jsonl_line, FrameRecord, TrackRecord};
use ovtext::synth::{render_sequence, sequence_spec, write_corpus, CorpusParams, SynthSpec};
use ovtext::Band;

use crate::config::Tunables;
use crate::error::{io_err, CliError};
use crate::FrameSource;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Serialization failures inside pipeline callbacks surface as I/O errors.
fn line<W: Write, T: Serialize>(out: &mut W, value: &T, what: &Path) -> ovtext::Result<()> {
    write_jsonl_line(out, value).map_err(|source| ovtext::Error::Io {
        path: what.to_owned(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

/// Feeds the frames of `src` to `f`. Unreadable or mismatched directory
/// entries are logged and skipped; a truncated raw stream is an error.
fn with_frames<R>(
    src: &FrameSource,
    f: impl FnOnce(&mut dyn Iterator<Item = InputFrame>) -> ovtext::Result<R>,
) -> Result<R, CliError> {
    if let Some(size) = src.raw {
        let mut raw = RawFrames::new(std::io::stdin().lock(), size.width, size.height)?;
        let mut failure = None;
        let r = {
            let mut frames = std::iter::from_fn(|| match raw.read_frame() {
                Ok(frame) => frame,
                Err(e) => {
                    failure = Some(e);
                    None
                }
            });
            f(&mut frames)?
        };
        return match failure {
            Some(e) => Err(e.into()),
            None => Ok(r),
        };
    }
    let dir = src.input.as_deref().expect("clap requires an input");
    let mut frames = DirFrames::open(dir)?;
    let r = f(&mut frames)?;
    if !frames.errors.is_empty() {
        log::warn!("skipped {} unusable frame files", frames.errors.len());
    }
    Ok(r)
}

#[derive(Serialize)]
struct Timing {
    summary: Option<TimingSummary>,
    frame_ms: Vec<f64>,
}

fn timing(frame_ms: Vec<f64>) -> Timing {
    Timing {
        summary: timing_report(&frame_ms).ok(),
        frame_ms,
    }
}

pub fn detect(t: &Tunables, src: &FrameSource, out: Option<&Path>, timing_path: Option<&Path>) -> Result<(), CliError> {
    let cfg = t.pipeline()?;
    let mut w = output(out)?;
    let label = out.unwrap_or(Path::new("<stdout>"));
    let mut ms = Vec::new();
    with_frames(src, |frames| {
        detect_stream(&cfg, frames, |d| {
            ms.push(d.millis);
            line(&mut w, &d.record(), label)
        })
    })?;
    w.flush().map_err(|e| io_err(label, e))?;
    log::info!("{} frames", ms.len());
    if let Some(p) = timing_path {
        write_json(p, &timing(ms))?;
    }
    Ok(())
}

fn bands_of(rec: &FrameRecord) -> Vec<Band> {
    rec.bands
        .iter()
        .map(|b| Band {
            rect: b.rect(),
            density: b.density.unwrap_or(0.0) as f32,
        })
        .collect()
}

pub fn track(t: &Tunables, src: &FrameSource, detections: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = t.pipeline()?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let events_path = out.join("events.jsonl");
    let mut events = create(&events_path)?;
    let mut session = TrackingSession::new(cfg.tracker)?;
    let mut ms = Vec::new();

    match detections {
        Some(path) => {
            let mut by_frame: BTreeMap<u64, FrameRecord> =
                read_jsonl::<FrameRecord>(path)?.into_iter().map(|r| (r.frame, r)).collect();
            with_frames(src, |frames| {
                for frame in frames {
                    let start = Instant::now();
                    let bands = by_frame.remove(&frame.index).map(|r| bands_of(&r)).unwrap_or_default();
                    for e in session.push(frame.index, &bands, &frame.image)? {
                        line(&mut events, &e, &events_path)?;
                    }
                    ms.push(start.elapsed().as_secs_f64() * 1e3);
                }
                Ok(())
            })?;
            if !by_frame.is_empty() {
                log::warn!("{} detection records had no matching frame", by_frame.len());
            }
        }
        None => {
            with_frames(src, |frames| {
                detect_stream(&cfg, frames, |d| {
                    let start = Instant::now();
                    for e in session.push(d.frame.index, &d.bands, &d.frame.image)? {
                        line(&mut events, &e, &events_path)?;
                    }
                    ms.push(d.millis + start.elapsed().as_secs_f64() * 1e3);
                    Ok(())
                })
            })?;
        }
    }

    let (last, mut tracks) = session.finish()?;
    for e in &last {
        line(&mut events, e, &events_path)?;
    }
    events.flush().map_err(|e| io_err(&events_path, e))?;
    write_track_images(out, &mut tracks)?;
    let tracks_path = out.join("tracks.jsonl");
    let mut w = create(&tracks_path)?;
    for t in &tracks {
        line(&mut w, &t.record, &tracks_path)?;
    }
    w.flush().map_err(|e| io_err(&tracks_path, e))?;
    log::info!("{} frames, {} tracks", ms.len(), tracks.len());
    write_json(&out.join("timing.json"), &timing(ms))
}

pub fn extract(t: &Tunables, tracks_dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let template = t
        .ocr_cmd
        .as_deref()
        .ok_or_else(|| CliError::Config("extract needs an OCR command (--ocr-cmd)".into()))?;
    let cmd = OcrCommand::parse(template)?;
    let max_d = t.max_d()?;
    let dict = match &t.wordlist {
        Some(p) => Some(Dictionary::load(p).map_err(|e| CliError::Config(format!("wordlist: {e}")))?),
        None => None,
    };
    let records: Vec<TrackRecord> = read_jsonl(&tracks_dir.join("tracks.jsonl"))?;
    let jobs: Vec<(u64, PathBuf)> = records
        .iter()
        .filter_map(|r| r.image.as_ref().map(|name| (r.id, tracks_dir.join(name))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(t.ocr_procs()?)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let results: Vec<ovtext::Result<RecognizedText>> = pool.install(|| {
        jobs.par_iter()
            .map(|(id, path)| recognize_track(*id, &read_track_image(path)?, &cmd, dict.as_ref(), max_d))
            .collect()
    });
    let mut w = output(out)?;
    let label = out.unwrap_or(Path::new("<stdout>"));
    for r in results {
        line(&mut w, &r?, label)?;
    }
    w.flush().map_err(|e| io_err(label, e))
}

#[derive(Serialize)]
struct TrackingReport {
    #[serde(flatten)]
    metrics: TrackMetrics,
    purity: f64,
    assignments: Vec<TrackAssignment>,
}

#[derive(Serialize)]
struct TextReport {
    tracks: usize,
    raw: ErrorRates,
    corrected: ErrorRates,
}

#[derive(Serialize)]
struct Report {
    frames: usize,
    detection: DetectionMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    tracking: Option<TrackingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<TextReport>,
}

fn mean_rates(rates: &[ErrorRates]) -> ErrorRates {
    let n = rates.len().max(1) as f64;
    ErrorRates {
        cer: rates.iter().map(|r| r.cer).sum::<f64>() / n,
        wer: rates.iter().map(|r| r.wer).sum::<f64>() / n,
    }
}

pub fn eval(pred: &Path, gt: &Path, tracks: Option<&Path>, text: Option<&Path>, json: bool) -> Result<(), CliError> {
    if text.is_some() && tracks.is_none() {
        return Err(CliError::Config("--text needs --tracks to pair tracks with ground truth".into()));
    }
    let pred: Vec<FrameRecord> = read_jsonl(pred)?;
    let gt = GroundTruth::from_records(&read_jsonl::<FrameRecord>(gt)?);
    let (p, g) = align_frames(&frame_rects(&pred), &gt.frames);
    let mut report = Report {
        frames: p.len(),
        detection: epshtein_prf(&p, &g)?,
        tracking: None,
        text: None,
    };
    if let Some(path) = tracks {
        let sys: Vec<SeqTrack> = read_jsonl::<TrackRecord>(path)?
            .iter()
            .map(|t| SeqTrack {
                id: t.id,
                rects: t.rect_map(),
            })
            .collect();
        let metrics = track_purity_switches(&sys, &gt.tracks);
        let assignments = track_assignments(&sys, &gt.tracks);
        if let Some(path) = text {
            let gt_of: BTreeMap<u64, u64> = assignments
                .iter()
                .filter_map(|a| a.gt_track.map(|g| (a.track_id, g)))
                .collect();
            let (mut raw, mut corrected) = (Vec::new(), Vec::new());
            for r in read_jsonl::<RecognizedText>(path)? {
                let Some(reference) = gt_of.get(&r.track_id).and_then(|g| gt.texts.get(g)) else {
                    continue;
                };
                raw.push(error_rates(&r.raw, reference)?);
                corrected.push(error_rates(&r.corrected, reference)?);
            }
            report.text = Some(TextReport {
                tracks: raw.len(),
                raw: mean_rates(&raw),
                corrected: mean_rates(&corrected),
            });
        }
        report.tracking = Some(TrackingReport {
            purity: metrics.purity(),
            metrics,
            assignments,
        });
    }
    let mut out = std::io::stdout().lock();
    let stdout = Path::new("<stdout>");
    if json {
        serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out).map_err(|e| io_err(stdout, e))?;
    } else {
        write_table(&mut out, &report).map_err(|e| io_err(stdout, e))?;
    }
    Ok(())
}

fn write_table(out: &mut impl Write, r: &Report) -> std::io::Result<()> {
    let d = &r.detection;
    writeln!(out, "frames      {}", r.frames)?;
    writeln!(out, "precision   {:.4}", d.precision)?;
    writeln!(out, "recall      {:.4}", d.recall)?;
    writeln!(out, "f-measure   {:.4}", d.f_measure)?;
    if let Some(t) = &r.tracking {
        writeln!(out, "tracks      {}", t.metrics.total)?;
        writeln!(out, "pure        {} ({:.2}%)", t.metrics.pure, 100.0 * t.purity)?;
        writeln!(out, "switches    {}", t.metrics.switches)?;
    }
    if let Some(t) = &r.text {
        writeln!(out, "text tracks {}", t.tracks)?;
        writeln!(out, "raw         CER {:.4}  WER {:.4}", t.raw.cer, t.raw.wer)?;
        writeln!(out, "corrected   CER {:.4}  WER {:.4}", t.corrected.cer, t.corrected.wer)?;
    }
    Ok(())
}

pub enum SynthWhat {
    Spec(PathBuf),
    Corpus(u64),
    Sequence(u64),
}

pub fn synth(t: &Tunables, what: SynthWhat, params: &CorpusParams, out: &Path) -> Result<(), CliError> {
    let seed = t.seed.unwrap_or(0);
    let frames = match what {
        SynthWhat::Spec(path) => {
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            let mut spec = SynthSpec::from_json(&text)?;
            if let Some(s) = t.seed {
                spec.seed = s;
            }
            render_sequence(&spec, out)?.len()
        }
        SynthWhat::Corpus(n) => write_corpus(seed, n, params, out)?.len(),
        SynthWhat::Sequence(n) => {
            let spec = sequence_spec(seed, n, params);
            spec.validate()?;
            let n = render_sequence(&spec, out)?.len();
            write_json(&out.join("spec.json"), &spec)?;
            n
        }
    };
    log::info!("wrote {frames} frames to {}", out.display());
    Ok(())
}
