use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::EvalError;
use crate::text::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeOptions {
    pub strip_symbols: bool,
    pub lemmatize: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            strip_symbols: true,
            lemmatize: true,
        }
    }
}

/// Bumped whenever a stemming rule changes.
const STEMMER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    pub tokens: BTreeSet<String>,
    pub normalization_id: String,
}

impl TokenSet {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn normalization_id(language: LanguageTag, options: NormalizeOptions) -> String {
    let mut id = String::from("uax29-words+casefold");
    if options.strip_symbols {
        id.push_str("+strip-symbols");
    }
    if options.lemmatize {
        id.push_str(&format!("+stem-{}-v{STEMMER_VERSION}", language.code()));
    }
    id
}

/// Word segmentation, case folding, optional stripping of leading and
/// trailing non-alphanumerics, optional suffix stemming, then set semantics.
pub fn normalize_tokens(text: &str, language: LanguageTag, options: NormalizeOptions) -> TokenSet {
    let mut tokens = BTreeSet::new();
    for segment in text.split_word_bounds() {
        // A combining mark after a space segments together with the space.
        let segment = segment.trim();
        if segment.is_empty() {
            continue;
        }
        let folded = segment.to_lowercase();
        let trimmed = if options.strip_symbols {
            folded.trim_matches(|c: char| !c.is_alphanumeric())
        } else {
            folded.as_str()
        };
        if trimmed.is_empty() {
            continue;
        }
        let token = if options.lemmatize {
            stem(trimmed, language)
        } else {
            trimmed.to_string()
        };
        tokens.insert(token);
    }
    TokenSet {
        tokens,
        normalization_id: normalization_id(language, options),
    }
}

/// |a ∩ b| / |a ∪ b|, with two empty sets counting as identical.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> Result<f64, EvalError> {
    if a.normalization_id != b.normalization_id {
        return Err(EvalError::NormalizationMismatch(
            a.normalization_id.clone(),
            b.normalization_id.clone(),
        ));
    }
    let union = a.tokens.union(&b.tokens).count();
    if union == 0 {
        return Ok(1.0);
    }
    let inter = a.tokens.intersection(&b.tokens).count();
    Ok(inter as f64 / union as f64)
}

fn undouble(word: &mut String) {
    let b = word.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && b"bdfgklmnprtz".contains(&b[n - 1]) {
        word.pop();
    }
}

fn strip(word: &str, suffix: &str, min_stem: usize) -> Option<String> {
    let stem = word.strip_suffix(suffix)?;
    (stem.chars().count() >= min_stem).then(|| stem.to_string())
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| "aeiouy".contains(c))
}

fn stem_once_en(w: &str) -> Option<String> {
    if let Some(s) = strip(w, "ies", 2) {
        return Some(s + "y");
    }
    if let Some(s) = strip(w, "sses", 2) {
        return Some(s + "ss");
    }
    for tail in ["ches", "shes", "xes", "zes"] {
        if w.ends_with(tail) && w.len() > tail.len() + 1 {
            return Some(w[..w.len() - 2].to_string());
        }
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        if let Some(s) = strip(w, "s", 3) {
            return Some(s);
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(mut s) = strip(w, suffix, 3) {
            if has_vowel(&s) {
                undouble(&mut s);
                return Some(s);
            }
        }
    }
    None
}

fn stem_once_nl(w: &str) -> Option<String> {
    for suffix in ["tjes", "tje", "jes", "je"] {
        if let Some(s) = strip(w, suffix, 3) {
            return Some(s);
        }
    }
    if let Some(mut s) = strip(w, "en", 3) {
        if has_vowel(&s) {
            undouble(&mut s);
            return Some(s);
        }
    }
    // Plural -s only after the endings that take it: tafels, kamers, bezems.
    if ["els", "ers", "ems"].iter().any(|t| w.ends_with(t)) {
        return strip(w, "s", 3);
    }
    None
}

/// Rule-based suffix stripping, repeated until nothing applies so that
/// stemming a stem is a no-op. Tokens with non-letters are left alone.
///
/// English: `ies→y`, `sses→ss`, `-es` after sibilants, plural `-s`, `-ing`,
/// `-ed` (with consonant undoubling). Dutch: diminutives `-(t)je(s)`, `-en`
/// (with undoubling) and `-s` after `el`/`er`/`em`. Stems keep at least three characters.
pub fn stem(word: &str, language: LanguageTag) -> String {
    if !word.chars().all(|c| c.is_alphabetic()) {
        return word.to_string();
    }
    let mut w = word.to_string();
    loop {
        let next = match language {
            LanguageTag::En => stem_once_en(&w),
            LanguageTag::Nl => stem_once_nl(&w),
        };
        match next {
            Some(n) if n != w => w = n,
            _ => return w,
        }
    }
}
