use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use super::levenshtein::levenshtein_within;
use crate::{Error, Result};

/// Lowercase wordlist used for post-OCR correction.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: BTreeSet<String>,
    /// Words grouped by character count, each group in lexicographic order.
    by_len: BTreeMap<usize, Vec<Vec<char>>>,
    source: Option<PathBuf>,
}

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        let mut by_len: BTreeMap<usize, Vec<Vec<char>>> = BTreeMap::new();
        for w in &words {
            let chars: Vec<char> = w.chars().collect();
            by_len.entry(chars.len()).or_default().push(chars);
        }
        Dictionary {
            words,
            by_len,
            source: None,
        }
    }

    /// One token per line, UTF-8. An empty list is a configuration error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut dict = Self::from_words(text.lines());
        if dict.is_empty() {
            return Err(Error::Config(format!("wordlist {} is empty", path.display())));
        }
        dict.source = Some(path.to_owned());
        Ok(dict)
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// Closest word within `max_d` edits; ties go to the lexicographically
    /// smallest word.
    pub fn nearest(&self, word: &str, max_d: usize) -> Option<(String, usize)> {
        let target: Vec<char> = word.to_lowercase().chars().collect();
        let lo = target.len().saturating_sub(max_d);
        let mut best: Option<(usize, &Vec<char>)> = None;
        for (_, group) in self.by_len.range(lo..=target.len() + max_d) {
            for cand in group {
                let limit = best.map_or(max_d, |(d, _)| d);
                if let Some(d) = levenshtein_within(&target, cand, limit) {
                    let better = match best {
                        None => true,
                        Some((bd, bw)) => d < bd || (d == bd && cand < bw),
                    };
                    if better {
                        best = Some((d, cand));
                    }
                }
            }
        }
        best.map(|(d, w)| (w.iter().collect(), d))
    }
}

/// Applies the case pattern of `original` to the lowercase `word`.
fn match_case(original: &str, word: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return word.to_uppercase();
    }
    if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut chars = word.chars();
        return match chars.next() {
            Some(f) => f.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
    }
    word.to_owned()
}

/// Result of correcting one whitespace-separated token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenCorrection {
    pub raw: String,
    pub corrected: String,
    /// Edit distance of the replacement; 0 when the token was kept.
    pub distance: usize,
}

fn correct_token(token: &str, dict: &Dictionary, max_d: usize) -> TokenCorrection {
    let keep = || TokenCorrection {
        raw: token.to_owned(),
        corrected: token.to_owned(),
        distance: 0,
    };
    let start = token.find(|c: char| c.is_alphanumeric());
    let Some(start) = start else { return keep() };
    let end = token
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(token.len());
    let core = &token[start..end];
    if !core.chars().all(char::is_alphabetic) || dict.contains(core) || max_d == 0 {
        return keep();
    }
    match dict.nearest(core, max_d) {
        Some((word, d)) => TokenCorrection {
            raw: token.to_owned(),
            corrected: format!("{}{}{}", &token[..start], match_case(core, &word), &token[end..]),
            distance: d,
        },
        None => keep(),
    }
}

/// Per-token corrections of `raw`, in order.
pub fn correct_tokens(raw: &str, dict: &Dictionary, max_d: usize) -> Vec<TokenCorrection> {
    raw.split_whitespace().map(|t| correct_token(t, dict, max_d)).collect()
}

/// Replaces each unknown alphabetic token with its nearest dictionary word
/// within `max_d` edits. Known words, tokens with digits, punctuation and
/// whitespace pass through unchanged.
pub fn dictionary_correct(raw: &str, dict: &Dictionary, max_d: usize) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while !rest.is_empty() {
        let ws = rest.len() - rest.trim_start().len();
        out.push_str(&rest[..ws]);
        rest = &rest[ws..];
        let tok_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if tok_len > 0 {
            out.push_str(&correct_token(&rest[..tok_len], dict, max_d).corrected);
        }
        rest = &rest[tok_len..];
    }
    out
}
