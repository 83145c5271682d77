mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::Tunables;
use error::CliError;

/// Detect, track and read overlay text bands in video frames.
///
/// Frames are read from a directory (PNG, PPM, PGM; processed in file-name
/// order, so use zero-padded indices) or as raw RGB24 from standard input.
/// All record outputs are JSON Lines.
#[derive(Debug, Parser)]
#[command(name = "ovtext", version)]
struct Cli {
    /// TOML file with default tunables; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More logging (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    tunables: Tunables,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
pub struct RawSize {
    pub width: u32,
    pub height: u32,
}

fn parse_size(s: &str) -> Result<RawSize, String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let n = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
    Ok(RawSize {
        width: n(w)?,
        height: n(h)?,
    })
}

#[derive(Debug, clap::Args)]
struct FrameSource {
    /// Directory of frame images.
    #[arg(required_unless_present = "raw", conflicts_with = "raw")]
    input: Option<PathBuf>,
    /// Read raw RGB24 frames of this size (e.g. 720x576) from standard input.
    #[arg(long, value_parser = parse_size)]
    raw: Option<RawSize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackgroundArg {
    Flat,
    Textured,
    PhotoLike,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect text bands in every frame; one JSON line per frame.
    Detect {
        #[command(flatten)]
        source: FrameSource,
        /// Output file (default: standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write per-frame detection times and a summary as JSON here.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Detect and track bands; writes tracks.jsonl, events.jsonl,
    /// timing.json and one accumulated image per track.
    Track {
        #[command(flatten)]
        source: FrameSource,
        /// Use these detections (output of `detect`) instead of detecting.
        #[arg(long)]
        detections: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run OCR on the accumulated track images of a `track` output
    /// directory; one JSON line per track.
    Extract {
        tracks_dir: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score detections, tracks and recognized text against ground truth.
    Eval {
        /// Detections from `detect`.
        #[arg(long)]
        pred: PathBuf,
        /// Ground truth frame records (as written by `synth`).
        #[arg(long)]
        gt: PathBuf,
        /// tracks.jsonl from `track`, for purity and switch counts.
        #[arg(long)]
        tracks: Option<PathBuf>,
        /// Output of `extract`, for error rates against the ground-truth text.
        #[arg(long)]
        text: Option<PathBuf>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Render synthetic frames with ground truth.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        /// Scene description (JSON).
        #[arg(long, conflicts_with_all = ["corpus", "sequence"])]
        spec: Option<PathBuf>,
        /// Number of independent random frames.
        #[arg(long, conflicts_with = "sequence")]
        corpus: Option<u64>,
        /// Length of a random sequence with scheduled band entries and exits.
        #[arg(long)]
        sequence: Option<u64>,
        #[arg(long, value_enum, default_value = "textured")]
        background: BackgroundArg,
        #[arg(long, default_value_t = 720)]
        width: u32,
        #[arg(long, default_value_t = 576)]
        height: u32,
        /// Noise standard deviation as a fraction of full scale.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 4)]
        max_bands: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => Tunables::load(p)?,
        None => Tunables::default(),
    };
    let t = cli.tunables.over(file);
    match cli.command {
        Command::Detect { source, output, timing } => commands::detect(&t, &source, output.as_deref(), timing.as_deref()),
        Command::Track { source, detections, out } => commands::track(&t, &source, detections.as_deref(), &out),
        Command::Extract { tracks_dir, output } => commands::extract(&t, &tracks_dir, output.as_deref()),
        Command::Eval {
            pred,
            gt,
            tracks,
            text,
            json,
        } => commands::eval(&pred, &gt, tracks.as_deref(), text.as_deref(), json),
        Command::Synth {
            out,
            spec,
            corpus,
            sequence,
            background,
            width,
            height,
            noise,
            max_bands,
        } => {
            let params = ovtext::synth::CorpusParams {
                width,
                height,
                noise,
                background: match background {
                    BackgroundArg::Flat => ovtext::synth::BackgroundKind::Flat,
                    BackgroundArg::Textured => ovtext::synth::BackgroundKind::Textured,
                    BackgroundArg::PhotoLike => ovtext::synth::BackgroundKind::PhotoLike,
                },
                max_bands,
                ..Default::default()
            };
            let what = match (spec, corpus, sequence) {
                (Some(p), _, _) => commands::SynthWhat::Spec(p),
                (_, Some(n), _) => commands::SynthWhat::Corpus(n),
                (_, _, Some(n)) => commands::SynthWhat::Sequence(n),
                _ => return Err(CliError::Config("synth needs --spec, --corpus or --sequence".into())),
            };
            commands::synth(&t, what, &params, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
