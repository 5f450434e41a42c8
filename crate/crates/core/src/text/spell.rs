//! Frequency-dictionary spell correction.
//!
//! Candidates are found through a symmetric-delete index: every dictionary
//! word is indexed under all strings reachable by deleting up to two
//! characters. Two words within Levenshtein distance 2 always share such a
//! delete variant, so the index returns a superset of the true candidates,
//! which are then checked with an exact Levenshtein computation.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use super::{LanguageTag, TextError};

pub(crate) const EN_DICTIONARY: &str = include_str!("../../data/dict/en.txt");
pub(crate) const NL_DICTIONARY: &str = include_str!("../../data/dict/nl.txt");

pub const MAX_EDIT_DISTANCE: usize = 2;

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

// FNV-1a over the UTF-8 bytes; collisions only add candidates.
fn key_hash(chars: &[char]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut buf = [0u8; 4];
    for c in chars {
        for &b in c.encode_utf8(&mut buf).as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn delete_variants(word: &[char], max: usize, out: &mut HashSet<u64>) {
    fn rec(current: &mut Vec<char>, depth: usize, max: usize, out: &mut HashSet<u64>) {
        if !out.insert(key_hash(current)) && depth > 0 {
            return;
        }
        if depth == max || current.is_empty() {
            return;
        }
        for i in 0..current.len() {
            let removed = current.remove(i);
            rec(current, depth + 1, max, out);
            current.insert(i, removed);
        }
    }
    let mut buf = word.to_vec();
    rec(&mut buf, 0, max, out);
}

/// Word-frequency list for one language.
#[derive(Debug)]
pub struct SpellDictionary {
    language: LanguageTag,
    words: Vec<(String, u64)>,
    lookup: HashMap<String, u32>,
    deletes: HashMap<u64, Vec<u32>>,
}

impl SpellDictionary {
    pub fn from_entries(
        language: LanguageTag,
        entries: impl IntoIterator<Item = (String, u64)>,
    ) -> Result<Self, TextError> {
        let mut lookup = HashMap::new();
        let mut words: Vec<(String, u64)> = Vec::new();
        for (word, count) in entries {
            if word.is_empty() || word != word.to_lowercase() {
                return Err(TextError::InvalidDictionary(format!(
                    "entry {word:?} is not a lowercase word"
                )));
            }
            if count == 0 {
                return Err(TextError::InvalidDictionary(format!(
                    "entry {word:?} has count 0"
                )));
            }
            match lookup.get(&word) {
                Some(&idx) => {
                    let slot: &mut (String, u64) = &mut words[idx as usize];
                    slot.1 = slot.1.saturating_add(count);
                }
                None => {
                    lookup.insert(word.clone(), words.len() as u32);
                    words.push((word, count));
                }
            }
        }
        if words.is_empty() {
            return Err(TextError::InvalidDictionary("dictionary is empty".into()));
        }

        let mut deletes: HashMap<u64, Vec<u32>> = HashMap::new();
        let mut variants = HashSet::new();
        for (idx, (word, _)) in words.iter().enumerate() {
            variants.clear();
            let chars: Vec<char> = word.chars().collect();
            delete_variants(&chars, MAX_EDIT_DISTANCE, &mut variants);
            for &v in &variants {
                deletes.entry(v).or_default().push(idx as u32);
            }
        }
        Ok(Self {
            language,
            words,
            lookup,
            deletes,
        })
    }

    /// Parses `word count` lines.
    pub fn parse(language: LanguageTag, data: &str) -> Result<Self, TextError> {
        let mut entries = Vec::new();
        for (lineno, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(TextError::InvalidDictionary(format!(
                    "line {}: expected \"word count\"",
                    lineno + 1
                )));
            };
            let count: u64 = count.trim().parse().map_err(|_| {
                TextError::InvalidDictionary(format!("line {}: bad count {count:?}", lineno + 1))
            })?;
            entries.push((word.to_string(), count));
        }
        Self::from_entries(language, entries)
    }

    pub fn load(language: LanguageTag, path: &Path) -> Result<Self, TextError> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| TextError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(language, &data)
    }

    /// The bundled dictionary, built once per process.
    pub fn builtin(language: LanguageTag) -> Arc<SpellDictionary> {
        static EN: OnceLock<Arc<SpellDictionary>> = OnceLock::new();
        static NL: OnceLock<Arc<SpellDictionary>> = OnceLock::new();
        let (cell, data) = match language {
            LanguageTag::En => (&EN, EN_DICTIONARY),
            LanguageTag::Nl => (&NL, NL_DICTIONARY),
        };
        cell.get_or_init(|| {
            Arc::new(Self::parse(language, data).expect("bundled dictionary is valid"))
        })
        .clone()
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains_key(word)
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.lookup.get(word).map(|&i| self.words[i as usize].1)
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// Dictionary words within `MAX_EDIT_DISTANCE` of `word`, with distances.
    pub fn candidates(&self, word: &str) -> Vec<(&str, usize, u64)> {
        let chars: Vec<char> = word.chars().collect();
        let mut variants = HashSet::new();
        delete_variants(&chars, MAX_EDIT_DISTANCE, &mut variants);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for v in variants {
            let Some(ids) = self.deletes.get(&v) else { continue };
            for &id in ids {
                if !seen.insert(id) {
                    continue;
                }
                let (cand, count) = &self.words[id as usize];
                let d = levenshtein(word, cand);
                if d <= MAX_EDIT_DISTANCE {
                    out.push((cand.as_str(), d, *count));
                }
            }
        }
        out
    }

    /// Correction for a single word; see [`suggest`].
    pub fn suggest(&self, word: &str) -> String {
        suggest(word, self)
    }
}

/// Whether a token is exempt from correction: capitalised, carrying an
/// uppercase letter anywhere (`iPhone`, `eBay`), or digit-bearing.
pub fn is_protected(word: &str) -> bool {
    word.is_empty() || word.chars().any(|c| c.is_uppercase() || c.is_numeric())
}

/// Returns the most frequent dictionary word at the smallest edit distance
/// (1, then 2), or the word itself when it is known, protected, or has no
/// candidate.
pub fn suggest(word: &str, dictionary: &SpellDictionary) -> String {
    if word.is_empty() || is_protected(word) {
        return word.to_string();
    }
    let lower = word.to_lowercase();
    if dictionary.contains(&lower) {
        return word.to_string();
    }
    dictionary
        .candidates(&lower)
        .into_iter()
        .filter(|&(_, d, _)| d >= 1)
        .min_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(b.0)))
        .map(|(w, _, _)| w.to_string())
        .unwrap_or_else(|| word.to_string())
}

/// Applies [`suggest`] to every purely alphabetic word, leaving whitespace,
/// surrounding punctuation, and mixed tokens (e-mail addresses, amounts,
/// hyphenated words) untouched.
pub fn correct_spelling(text: &str, dictionary: &SpellDictionary) -> String {
    let mut out = String::with_capacity(text.len());
    for (is_space, run) in split_runs(text, char::is_whitespace) {
        if is_space {
            out.push_str(run);
            continue;
        }
        let start = run
            .char_indices()
            .find(|(_, c)| c.is_alphanumeric())
            .map(|(i, _)| i);
        let Some(start) = start else {
            out.push_str(run);
            continue;
        };
        let end = run
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_alphanumeric())
            .map(|(i, c)| i + c.len_utf8())
            .unwrap();
        let core = &run[start..end];
        out.push_str(&run[..start]);
        if core.chars().all(char::is_alphabetic) {
            out.push_str(&suggest(core, dictionary));
        } else {
            out.push_str(core);
        }
        out.push_str(&run[end..]);
    }
    out
}

// Splits text into maximal runs where `pred` is uniformly true or false.
pub(crate) fn split_runs(text: &str, pred: impl Fn(char) -> bool) -> Vec<(bool, &str)> {
    let mut runs = Vec::new();
    let mut start = 0;
    let mut state = None;
    for (i, c) in text.char_indices() {
        let p = pred(c);
        match state {
            Some(s) if s == p => {}
            Some(s) => {
                runs.push((s, &text[start..i]));
                start = i;
                state = Some(p);
            }
            None => state = Some(p),
        }
    }
    if let Some(s) = state {
        runs.push((s, &text[start..]));
    }
    runs
}
