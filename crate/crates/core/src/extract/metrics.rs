use serde::Serialize;

use super::levenshtein::levenshtein;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRates {
    pub cer: f64,
    pub wer: f64,
}

/// Character and word error rates: edit distance normalized by the
/// reference length, over characters and whitespace tokens respectively.
pub fn error_rates(hypothesis: &str, reference: &str) -> Result<ErrorRates> {
    let ref_chars: Vec<char> = reference.chars().collect();
    let ref_words: Vec<&str> = reference.split_whitespace().collect();
    if ref_chars.is_empty() || ref_words.is_empty() {
        return Err(Error::EmptyReference);
    }
    let hyp_chars: Vec<char> = hypothesis.chars().collect();
    let hyp_words: Vec<&str> = hypothesis.split_whitespace().collect();
    Ok(ErrorRates {
        cer: levenshtein(&hyp_chars, &ref_chars) as f64 / ref_chars.len() as f64,
        wer: levenshtein(&hyp_words, &ref_words) as f64 / ref_words.len() as f64,
    })
}
