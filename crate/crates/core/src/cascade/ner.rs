use std::collections::HashSet;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::catalog::CharOffsets;
use super::{CascadeError, Category, Match, Span, Stage};
use crate::imaging::expand_template;
use crate::text::LanguageTag;

const FIRST_NAMES: &str = include_str!("../../data/gazetteer/first_names.txt");
const SURNAMES: &str = include_str!("../../data/gazetteer/surnames.txt");
const CITIES: &str = include_str!("../../data/gazetteer/cities.txt");
const LANGUAGES: &str = include_str!("../../data/gazetteer/languages.txt");

const PARTICLES: &[&str] = &[
    "van", "de", "der", "den", "het", "ten", "ter", "te", "in", "'t", "op", "von", "du", "la", "le",
];
const ORG_PATTERN: &str = r"\b(?:[\p{Lu}0-9][\p{L}0-9&'-]*,? ){1,4}(?:B\.V\.|N\.V\.|V\.O\.F\.|BV|NV|GmbH|Inc\.|Inc|Ltd\.|Ltd|LLC|AG)";

/// Named-entity backend for the four entity categories.
pub trait NerEngine: Send + Sync {
    fn id(&self) -> &str;
    fn entities(
        &self,
        text: &str,
        category: Category,
        language: LanguageTag,
    ) -> Result<Vec<Match>, CascadeError>;
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    start: usize,
    end: usize,
    text: &'a str,
}

fn tokens(text: &str) -> Vec<Token<'_>> {
    static WORD: OnceLock<Regex> = OnceLock::new();
    WORD.get_or_init(|| Regex::new(r"'?[\p{L}\p{N}]+(?:['’-][\p{L}\p{N}]+)*").unwrap())
        .find_iter(text)
        .map(|m| Token {
            start: m.start(),
            end: m.end(),
            text: m.as_str(),
        })
        .collect()
}

fn is_capitalized(word: &str) -> bool {
    let mut chars = word.chars();
    chars.next().is_some_and(char::is_uppercase) && chars.any(char::is_lowercase)
}

/// A set of multi-word phrases matched on token boundaries, case-sensitive.
#[derive(Debug, Clone, Default)]
pub struct PhraseSet {
    phrases: HashSet<String>,
    max_tokens: usize,
}

impl PhraseSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> Self {
        let mut set = Self::default();
        for p in items {
            set.insert(p.into());
        }
        set
    }

    pub fn insert(&mut self, phrase: String) {
        let phrase = phrase.split_whitespace().collect::<Vec<_>>().join(" ");
        if phrase.is_empty() {
            return;
        }
        self.max_tokens = self.max_tokens.max(tokens(&phrase).len());
        self.phrases.insert(phrase);
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.phrases.contains(phrase)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Longest phrase starting at each token, left to right, non-overlapping.
    /// Returns byte ranges.
    fn find(&self, text: &str, toks: &[Token<'_>]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < toks.len() {
            let longest = (1..=self.max_tokens.min(toks.len() - i))
                .rev()
                .find(|&n| self.phrases.contains(&text[toks[i].start..toks[i + n - 1].end]));
            match longest {
                Some(n) => {
                    out.push((toks[i].start, toks[i + n - 1].end));
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }
}

fn parse_list(data: &str) -> impl Iterator<Item = &str> {
    data.lines().map(str::trim).filter(|l| !l.is_empty())
}

/// Rule and lexicon based recognizer: first-name lists with Dutch surname
/// particles for persons, legal-form suffixes for organizations, and city
/// and language-name lexicons.
#[derive(Debug, Clone)]
pub struct GazetteerNer {
    first_names: HashSet<String>,
    surnames: HashSet<String>,
    persons: PhraseSet,
    organizations: PhraseSet,
    locations: PhraseSet,
    languages: PhraseSet,
}

impl GazetteerNer {
    pub fn builtin() -> Self {
        Self {
            first_names: parse_list(FIRST_NAMES).map(String::from).collect(),
            surnames: parse_list(SURNAMES).map(String::from).collect(),
            persons: PhraseSet::default(),
            organizations: PhraseSet::default(),
            locations: PhraseSet::new(parse_list(CITIES)),
            languages: PhraseSet::new(parse_list(LANGUAGES)),
        }
    }

    /// Adds exact entries for a category. Pattern categories are ignored.
    pub fn with_entries<I: IntoIterator<Item = S>, S: Into<String>>(
        mut self,
        category: Category,
        entries: I,
    ) -> Self {
        let set = match category {
            Category::Person => &mut self.persons,
            Category::Organization => &mut self.organizations,
            Category::Location => &mut self.locations,
            Category::Language => &mut self.languages,
            _ => return self,
        };
        for e in entries {
            set.insert(e.into());
        }
        self
    }

    fn is_particle(word: &str) -> bool {
        PARTICLES.contains(&word.to_lowercase().as_str())
    }

    /// Given tokens joined by single spaces starting at a first name, returns
    /// the token count of the name and whether the surname is a known one.
    fn person_at(&self, toks: &[Token<'_>]) -> Option<(usize, bool)> {
        let mut firsts = 0;
        while firsts < toks.len().min(3) && self.first_names.contains(toks[firsts].text) {
            firsts += 1;
        }
        if firsts == 0 {
            return None;
        }
        let mut i = firsts;
        while i < toks.len() && i - firsts < 3 && Self::is_particle(toks[i].text) {
            i += 1;
        }
        if i < toks.len() && is_capitalized(toks[i].text) && !Self::is_particle(toks[i].text) {
            return Some((i + 1, self.surnames.contains(toks[i].text)));
        }
        // The last first name doubles as the surname: "Emma Roos".
        if i == firsts && firsts >= 2 {
            return Some((firsts, self.surnames.contains(toks[firsts - 1].text)));
        }
        None
    }

    fn find_persons(&self, text: &str, toks: &[Token<'_>]) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<(usize, usize, f64)> = self
            .persons
            .find(text, toks)
            .into_iter()
            .map(|(s, e)| (s, e, 1.0))
            .collect();
        let mut i = 0;
        while i < toks.len() {
            // Tokens joined to toks[i] by exactly one space.
            let mut run = 1;
            while i + run < toks.len()
                && run < 8
                && &text[toks[i + run - 1].end..toks[i + run].start] == " "
            {
                run += 1;
            }
            match self.person_at(&toks[i..i + run]) {
                Some((n, known)) => {
                    let (s, e) = (toks[i].start, toks[i + n - 1].end);
                    if !out.iter().any(|&(os, oe, _)| s < oe && os < e) {
                        out.push((s, e, if known { 0.9 } else { 0.7 }));
                    }
                    i += n;
                }
                None => i += 1,
            }
        }
        out.sort_by_key(|&(s, _, _)| s);
        out
    }

    fn find_organizations(&self, text: &str, toks: &[Token<'_>]) -> Vec<(usize, usize, f64)> {
        static ORG: OnceLock<Regex> = OnceLock::new();
        let re = ORG.get_or_init(|| Regex::new(ORG_PATTERN).unwrap());
        let mut out: Vec<(usize, usize, f64)> = self
            .organizations
            .find(text, toks)
            .into_iter()
            .map(|(s, e)| (s, e, 1.0))
            .collect();
        for m in re.find_iter(text) {
            let next = text[m.end()..].chars().next();
            if next.is_some_and(char::is_alphanumeric) {
                continue;
            }
            let (s, e) = (m.start(), m.end());
            if !out.iter().any(|&(os, oe, _)| s < oe && os < e) {
                out.push((s, e, 0.8));
            }
        }
        out.sort_by_key(|&(s, _, _)| s);
        out
    }
}

impl NerEngine for GazetteerNer {
    fn id(&self) -> &str {
        "gazetteer"
    }

    fn entities(
        &self,
        text: &str,
        category: Category,
        _language: LanguageTag,
    ) -> Result<Vec<Match>, CascadeError> {
        let toks = tokens(text);
        let found: Vec<(usize, usize, f64)> = match category {
            Category::Person => self.find_persons(text, &toks),
            Category::Organization => self.find_organizations(text, &toks),
            Category::Location => with_confidence(self.locations.find(text, &toks), 1.0),
            Category::Language => with_confidence(self.languages.find(text, &toks), 1.0),
            other => return Err(CascadeError::NotAnEntity(other)),
        };
        let offsets = CharOffsets::new(text);
        Ok(found
            .into_iter()
            .map(|(s, e, confidence)| Match {
                value: text[s..e].to_string(),
                span: Some(Span {
                    start: offsets.char_index(s),
                    end: offsets.char_index(e),
                }),
                stage: Stage::Ner,
                confidence,
            })
            .collect())
    }
}

fn with_confidence(ranges: Vec<(usize, usize)>, c: f64) -> Vec<(usize, usize, f64)> {
    ranges.into_iter().map(|(s, e)| (s, e, c)).collect()
}

#[derive(Debug, Deserialize)]
struct ExternalEntity {
    value: String,
    #[serde(rename = "type")]
    kind: String,
    start: usize,
    end: usize,
    #[serde(default)]
    confidence: Option<f64>,
}

fn entity_category(kind: &str) -> Option<Category> {
    match kind.to_ascii_uppercase().as_str() {
        "PER" | "PERSON" => Some(Category::Person),
        "ORG" | "ORGANIZATION" | "ORGANISATION" => Some(Category::Organization),
        "LOC" | "GPE" | "LOCATION" | "FAC" => Some(Category::Location),
        "LANGUAGE" | "LANG" => Some(Category::Language),
        _ => None,
    }
}

/// External recognizer: the template is split on whitespace with `{lang}`
/// substituted, the text is written to stdin, and entities are read as JSON
/// lines `{value, type, start, end}` with character offsets.
#[derive(Debug, Clone)]
pub struct CommandNer {
    template: String,
}

impl CommandNer {
    pub fn new(template: impl Into<String>) -> Result<Self, CascadeError> {
        let template = template.into();
        if template.split_whitespace().next().is_none() {
            return Err(CascadeError::Backend("empty NER command".into()));
        }
        Ok(Self { template })
    }
}

impl NerEngine for CommandNer {
    fn id(&self) -> &str {
        &self.template
    }

    fn entities(
        &self,
        text: &str,
        category: Category,
        language: LanguageTag,
    ) -> Result<Vec<Match>, CascadeError> {
        let backend = |m: String| CascadeError::Backend(m);
        let args = expand_template(&self.template, &[("lang", language.code())]);
        let mut child = Command::new(&args[0])
            .args(&args[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| backend(format!("{}: {e}", args[0])))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = text.to_string();
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let output = child.wait_with_output().map_err(|e| backend(e.to_string()))?;
        // A child that exits without reading stdin breaks the pipe; its exit
        // status is what matters.
        let _ = writer.join();
        if !output.status.success() {
            return Err(backend(format!("NER command exited with {}", output.status)));
        }
        let stdout =
            String::from_utf8(output.stdout).map_err(|_| backend("NER output is not UTF-8".into()))?;
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        for line in stdout.lines().filter(|l| !l.trim().is_empty()) {
            let e: ExternalEntity =
                serde_json::from_str(line).map_err(|e| backend(format!("bad entity line: {e}")))?;
            if entity_category(&e.kind) != Some(category) {
                continue;
            }
            if e.start > e.end || e.end > chars.len() {
                return Err(backend(format!("entity span {}..{} out of range", e.start, e.end)));
            }
            let slice: String = chars[e.start..e.end].iter().collect();
            if slice != e.value {
                return Err(backend(format!(
                    "entity {:?} does not match text at {}..{}",
                    e.value, e.start, e.end
                )));
            }
            out.push(Match {
                value: e.value,
                span: Some(Span {
                    start: e.start,
                    end: e.end,
                }),
                stage: Stage::Ner,
                confidence: e.confidence.unwrap_or(1.0).clamp(0.0, 1.0),
            });
        }
        out.sort_by_key(|m| m.span.map(|s| s.start));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(ner: &GazetteerNer, text: &str, c: Category) -> Vec<String> {
        ner.entities(text, c, LanguageTag::Nl)
            .unwrap()
            .into_iter()
            .map(|m| m.value)
            .collect()
    }

    #[test]
    fn person_from_full_name_entry() {
        let ner = GazetteerNer::builtin().with_entries(Category::Person, ["Pieter de Groot"]);
        assert_eq!(values(&ner, "Naam: Pieter de Groot", Category::Person), ["Pieter de Groot"]);
    }

    #[test]
    fn person_rules() {
        let ner = GazetteerNer::builtin();
        assert_eq!(
            values(&ner, "Naam: Pieter de Groot\nWoonplaats: Utrecht", Category::Person),
            ["Pieter de Groot"]
        );
        assert_eq!(
            values(&ner, "Name: Emily van der Berg. Contact Sarah Jones-Smith today", Category::Person),
            ["Emily van der Berg", "Sarah Jones-Smith"]
        );
        assert_eq!(values(&ner, "Jan Willem Bakker", Category::Person), ["Jan Willem Bakker"]);
        assert!(values(&ner, "Pieter\nGroot", Category::Person).is_empty());
        assert!(values(&ner, "pieter de groot", Category::Person).is_empty());
    }

    #[test]
    fn languages() {
        let ner = GazetteerNer::builtin();
        assert_eq!(
            values(&ner, "Talen: Nederlands, Engels", Category::Language),
            ["Nederlands", "Engels"]
        );
        assert!(values(&ner, "Geen talen vermeld", Category::Language).is_empty());
    }

    #[test]
    fn locations_prefer_longest() {
        let ner = GazetteerNer::builtin();
        assert_eq!(
            values(&ner, "Kantoor in Bergen op Zoom en Den Haag", Category::Location),
            ["Bergen op Zoom", "Den Haag"]
        );
    }

    #[test]
    fn organizations() {
        let ner = GazetteerNer::builtin();
        assert_eq!(
            values(&ner, "Leverancier: Acme Holding B.V.\nKvK 1234", Category::Organization),
            ["Acme Holding B.V."]
        );
        assert_eq!(
            values(&ner, "Worked at Globex, Inc. and Initech GmbH.", Category::Organization),
            ["Globex, Inc.", "Initech GmbH"]
        );
        assert!(values(&ner, "the BVBA form", Category::Organization).is_empty());
    }

    #[test]
    fn spans_slice_to_values() {
        let ner = GazetteerNer::builtin();
        let text = "€ Naam: Sanne Visser — Talen: Engels";
        for c in [Category::Person, Category::Language] {
            for m in ner.entities(text, c, LanguageTag::Nl).unwrap() {
                let s = m.span.unwrap();
                let slice: String = text.chars().skip(s.start).take(s.end - s.start).collect();
                assert_eq!(slice, m.value);
            }
        }
    }

    #[test]
    fn rejects_pattern_category() {
        assert!(GazetteerNer::builtin()
            .entities("x", Category::Email, LanguageTag::En)
            .is_err());
    }

    #[test]
    fn command_backend() {
        let script = r#"cat >/dev/null; echo '{"value":"Engels","type":"LANGUAGE","start":7,"end":13}'; echo '{"value":"Talen","type":"ORG","start":0,"end":5}'"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ner.sh");
        std::fs::write(&path, script).unwrap();
        let ner = CommandNer::new(format!("sh {} {{lang}}", path.display())).unwrap();
        let ms = ner
            .entities("Talen: Engels", Category::Language, LanguageTag::Nl)
            .unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].value, "Engels");

        let bad = r#"echo '{"value":"Xx","type":"LANGUAGE","start":0,"end":2}'"#;
        std::fs::write(&path, bad).unwrap();
        assert!(ner.entities("Talen", Category::Language, LanguageTag::Nl).is_err());
    }
}
