use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::TextError;

/// Document languages the pipeline handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    Nl,
    En,
}

impl LanguageTag {
    pub const ALL: [LanguageTag; 2] = [LanguageTag::Nl, LanguageTag::En];

    pub fn code(self) -> &'static str {
        match self {
            LanguageTag::Nl => "nl",
            LanguageTag::En => "en",
        }
    }
}

impl std::fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for LanguageTag {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nl" => Ok(LanguageTag::Nl),
            "en" => Ok(LanguageTag::En),
            other => Err(TextError::UnknownLanguage(other.to_string())),
        }
    }
}

const EN_STOPWORDS: &str = include_str!("../../data/stopwords/en.txt");
const NL_STOPWORDS: &str = include_str!("../../data/stopwords/nl.txt");

// Character trigram model over word types, padded with spaces.
#[derive(Debug, Default)]
struct TrigramModel {
    counts: HashMap<[char; 3], u32>,
    total: u64,
}

impl TrigramModel {
    fn train<'a>(words: impl Iterator<Item = &'a str>) -> Self {
        let mut model = Self::default();
        for word in words {
            for tri in trigrams(word) {
                *model.counts.entry(tri).or_default() += 1;
                model.total += 1;
            }
        }
        model
    }

    fn log_likelihood(&self, word: &str) -> f64 {
        let vocab = self.counts.len() as f64 + 1.0;
        trigrams(word)
            .map(|tri| {
                let c = self.counts.get(&tri).copied().unwrap_or(0) as f64;
                ((c + 1.0) / (self.total as f64 + vocab)).ln()
            })
            .sum()
    }
}

fn trigrams(word: &str) -> impl Iterator<Item = [char; 3]> {
    let padded: Vec<char> = std::iter::once(' ')
        .chain(word.chars())
        .chain(std::iter::once(' '))
        .collect();
    (0..padded.len().saturating_sub(2))
        .map(move |i| [padded[i], padded[i + 1], padded[i + 2]])
}

/// Lowercased maximal runs of alphabetic characters.
pub(crate) fn alphabetic_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageScores {
    pub stopword_hits: [(LanguageTag, usize); 2],
    pub trigram_log_likelihood: [(LanguageTag, f64); 2],
}

/// Stopword-count language identification with a trigram tiebreak.
#[derive(Debug)]
pub struct LanguageDetector {
    stopwords: HashMap<LanguageTag, HashSet<String>>,
    trigrams: HashMap<LanguageTag, TrigramModel>,
}

const TRIGRAM_TRAINING_WORDS: usize = 10_000;

impl LanguageDetector {
    /// Detector trained on the bundled stopword lists and dictionaries.
    pub fn builtin() -> &'static LanguageDetector {
        static DETECTOR: OnceLock<LanguageDetector> = OnceLock::new();
        DETECTOR.get_or_init(|| {
            let sample = |data: &'static str| {
                data.lines()
                    .take(TRIGRAM_TRAINING_WORDS)
                    .filter_map(|l| l.split_whitespace().next())
            };
            let mut stopwords = HashMap::new();
            stopwords.insert(LanguageTag::En, lines(EN_STOPWORDS));
            stopwords.insert(LanguageTag::Nl, lines(NL_STOPWORDS));
            let mut trigrams = HashMap::new();
            trigrams.insert(
                LanguageTag::En,
                TrigramModel::train(sample(super::spell::EN_DICTIONARY)),
            );
            trigrams.insert(
                LanguageTag::Nl,
                TrigramModel::train(sample(super::spell::NL_DICTIONARY)),
            );
            LanguageDetector {
                stopwords,
                trigrams,
            }
        })
    }

    pub fn stopwords(&self, language: LanguageTag) -> &HashSet<String> {
        &self.stopwords[&language]
    }

    pub fn scores(&self, text: &str) -> Option<LanguageScores> {
        let tokens: Vec<String> = alphabetic_tokens(text).collect();
        if tokens.is_empty() {
            return None;
        }
        let hits = |lang: LanguageTag| {
            let list = &self.stopwords[&lang];
            tokens.iter().filter(|t| list.contains(t.as_str())).count()
        };
        let loglik = |lang: LanguageTag| {
            let model = &self.trigrams[&lang];
            tokens.iter().map(|t| model.log_likelihood(t)).sum::<f64>()
        };
        Some(LanguageScores {
            stopword_hits: [
                (LanguageTag::Nl, hits(LanguageTag::Nl)),
                (LanguageTag::En, hits(LanguageTag::En)),
            ],
            trigram_log_likelihood: [
                (LanguageTag::Nl, loglik(LanguageTag::Nl)),
                (LanguageTag::En, loglik(LanguageTag::En)),
            ],
        })
    }

    pub fn detect(&self, text: &str) -> Result<LanguageTag, TextError> {
        let scores = self.scores(text).ok_or(TextError::NoAlphabeticContent)?;
        let [(_, nl_hits), (_, en_hits)] = scores.stopword_hits;
        if nl_hits != en_hits {
            return Ok(if nl_hits > en_hits {
                LanguageTag::Nl
            } else {
                LanguageTag::En
            });
        }
        let [(_, nl_ll), (_, en_ll)] = scores.trigram_log_likelihood;
        Ok(if nl_ll > en_ll {
            LanguageTag::Nl
        } else {
            LanguageTag::En
        })
    }
}

fn lines(data: &str) -> HashSet<String> {
    data.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn detect_language(text: &str) -> Result<LanguageTag, TextError> {
    LanguageDetector::builtin().detect(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Stopword oracle: count hits per list by hand-rolled membership test.
    fn oracle_hits(text: &str, list: &str) -> usize {
        let words: Vec<&str> = list.lines().collect();
        text.split_whitespace()
            .filter(|w| words.contains(&w.to_lowercase().as_str()))
            .count()
    }

    #[test]
    fn stopword_lists_are_large_enough() {
        let d = LanguageDetector::builtin();
        assert!(d.stopwords(LanguageTag::En).len() >= 100);
        assert!(d.stopwords(LanguageTag::Nl).len() >= 100);
    }

    #[test]
    fn dutch_sentence() {
        let text = "De factuur is nog niet betaald";
        assert_eq!(oracle_hits(text, NL_STOPWORDS), 4);
        assert!(oracle_hits(text, EN_STOPWORDS) < 4);
        assert_eq!(detect_language(text).unwrap(), LanguageTag::Nl);
    }

    #[test]
    fn english_sentence() {
        let text = "The invoice has been paid in full";
        assert!(oracle_hits(text, EN_STOPWORDS) > oracle_hits(text, NL_STOPWORDS));
        assert_eq!(detect_language(text).unwrap(), LanguageTag::En);
    }

    #[test]
    fn no_letters() {
        assert!(matches!(
            detect_language("12345 €"),
            Err(TextError::NoAlphabeticContent)
        ));
    }

    #[test]
    fn trigram_tiebreak() {
        // No stopwords on either side; trigram model decides.
        assert_eq!(detect_language("factuurnummer betalingstermijn").unwrap(), LanguageTag::Nl);
        assert_eq!(detect_language("shipping warehouse").unwrap(), LanguageTag::En);
    }

    #[test]
    fn deterministic() {
        let text = "Kerkstraat Amsterdam software";
        let a = detect_language(text).unwrap();
        for _ in 0..5 {
            assert_eq!(detect_language(text).unwrap(), a);
        }
    }
}
