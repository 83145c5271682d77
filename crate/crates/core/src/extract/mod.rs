//! Band binarization, accumulation over a track, OCR hand-off and
//! dictionary correction.

mod accumulate;
mod binarize;
mod dictionary;
mod levenshtein;
mod metrics;
mod ocr;

use serde::{Deserialize, Serialize};

pub use accumulate::{accumulate, AccumulatedBand};
pub use binarize::{binarize_band, BinaryBandImage};
pub use dictionary::{correct_tokens, dictionary_correct, Dictionary, TokenCorrection};
pub use levenshtein::{levenshtein, levenshtein_within};
pub use metrics::{error_rates, ErrorRates};
pub use ocr::{OcrCommand, DEFAULT_OCR_TIMEOUT, IMAGE_PLACEHOLDER};

use crate::{Result, Scalar};

/// Recognized text of one track.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecognizedText {
    pub track_id: u64,
    pub raw: String,
    pub corrected: String,
    /// Edit distance of each word's correction, 0 for kept words.
    pub edits: Vec<usize>,
}

/// Runs the OCR command on the accumulated image.
pub fn run_ocr<T: Scalar>(acc: &AccumulatedBand<T>, cmd: &OcrCommand) -> Result<String> {
    cmd.recognize(&acc.final_image)
}

/// Recognizes one track and corrects the output when a dictionary is given.
pub fn recognize_track(
    track_id: u64,
    image: &BinaryBandImage,
    cmd: &OcrCommand,
    dict: Option<&Dictionary>,
    max_d: usize,
) -> Result<RecognizedText> {
    let raw = cmd.recognize(image)?;
    if raw.is_empty() {
        log::warn!("track {track_id}: OCR returned no text");
    }
    let (corrected, edits) = match dict {
        Some(d) => {
            let toks = correct_tokens(&raw, d, max_d);
            (dictionary_correct(&raw, d, max_d), toks.iter().map(|t| t.distance).collect())
        }
        None => (raw.clone(), vec![0; raw.split_whitespace().count()]),
    };
    Ok(RecognizedText {
        track_id,
        raw,
        corrected,
        edits,
    })
}
