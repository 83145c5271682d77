//! Settings from an optional TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use ovtext::band_detect::DetectParams;
use ovtext::pipeline::{EdgeMode, PipelineConfig};
use ovtext::tracker::TrackerConfig;

use crate::error::CliError;

pub const DEFAULT_MAX_D: usize = 1;
pub const DEFAULT_OCR_PROCS: usize = 4;

/// Tunables shared by every subcommand. Each one can also be set in the
/// config file under the same name with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tunables {
    /// Fractional-overlap tolerance of the spatial relations, in (0, 0.5).
    #[arg(long, global = true)]
    pub eta_fo: Option<f64>,
    /// Gap (in rows or columns) bridged when grouping profile indices.
    #[arg(long, global = true)]
    pub epsilon: Option<usize>,
    /// Histogram similarity needed to keep a track alive without a detection.
    #[arg(long, global = true)]
    pub hist_match: Option<f64>,
    /// Consecutive missed frames a track survives.
    #[arg(long, global = true)]
    pub max_misses: Option<u32>,
    /// Smallest band width in pixels.
    #[arg(long, global = true)]
    pub min_band_w: Option<u32>,
    /// Smallest band height in pixels.
    #[arg(long, global = true)]
    pub min_band_h: Option<u32>,
    /// Bands must exceed this multiple of the frame's mean edge density.
    #[arg(long, global = true)]
    pub density_factor: Option<f64>,
    /// Detect on the plain normalized gradient instead of the enhanced map.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub gradient_only: Option<bool>,
    /// OCR command template; `{img}` is replaced by the band image path.
    #[arg(long, global = true)]
    pub ocr_cmd: Option<String>,
    /// Wordlist (one word per line) for correcting OCR output.
    #[arg(long, global = true)]
    pub wordlist: Option<PathBuf>,
    /// Maximum edit distance of a correction (1 or 2).
    #[arg(long, global = true)]
    pub max_d: Option<usize>,
    /// Concurrent OCR processes.
    #[arg(long, global = true)]
    pub ocr_procs: Option<usize>,
    /// Directory for intermediate edge maps and band traces.
    #[arg(long, global = true)]
    pub debug_dir: Option<PathBuf>,
    /// Detection worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($f:ident),*) => {
        Tunables { $($f: $flags.$f.or($file.$f),)* }
    };
}

impl Tunables {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Flags win over the file.
    pub fn over(self, file: Tunables) -> Tunables {
        overlay!(
            self, file, eta_fo, epsilon, hist_match, max_misses, min_band_w, min_band_h, density_factor,
            gradient_only, ocr_cmd, wordlist, max_d, ocr_procs, debug_dir, threads, seed
        )
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        let d = DetectParams::default();
        let detect = DetectParams {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            min_band_w: self.min_band_w.unwrap_or(d.min_band_w),
            min_band_h: self.min_band_h.unwrap_or(d.min_band_h),
            density_factor: self.density_factor.unwrap_or(d.density_factor),
        };
        if detect.epsilon == 0 || detect.min_band_w == 0 || detect.min_band_h == 0 {
            return Err(CliError::Config("epsilon and minimum band sizes must be positive".into()));
        }
        if !(detect.density_factor.is_finite() && detect.density_factor > 0.0) {
            return Err(CliError::Config(format!("density factor must be positive, got {}", detect.density_factor)));
        }
        let t = TrackerConfig::<f32>::default();
        let tracker = TrackerConfig {
            eta_fo: self.eta_fo.map_or(t.eta_fo, |v| v as f32),
            hist_match: self.hist_match.map_or(t.hist_match, |v| v as f32),
            max_misses: self.max_misses.unwrap_or(t.max_misses),
            ..t
        };
        tracker.validate()?;
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        Ok(PipelineConfig {
            detect,
            edge_mode: if self.gradient_only.unwrap_or(false) {
                EdgeMode::GradientOnly
            } else {
                EdgeMode::Enhanced
            },
            tracker,
            threads: self.threads,
            debug_dir: self.debug_dir.clone(),
        })
    }

    pub fn max_d(&self) -> Result<usize, CliError> {
        match self.max_d.unwrap_or(DEFAULT_MAX_D) {
            d @ (1 | 2) => Ok(d),
            d => Err(CliError::Config(format!("max-d must be 1 or 2, got {d}"))),
        }
    }

    pub fn ocr_procs(&self) -> Result<usize, CliError> {
        match self.ocr_procs.unwrap_or(DEFAULT_OCR_PROCS) {
            0 => Err(CliError::Config("ocr-procs must be at least 1".into())),
            n => Ok(n),
        }
    }
}
