use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CascadeError, Category, Match, Span, Stage};

/// The e-mail expression from the original system, with the stray `|` in
/// the top-level-domain class removed (`[A-Z|a-z]` became `[A-Za-z]`).
pub const EMAIL_PATTERN: &str = r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b";

const PHONE_PATTERN: &str = r"(?:\+31|\b0031|\b0)[ -]?(?:\(0\))?[1-9](?:[ -]?\d){8}\b";
const WEBSITE_PATTERN: &str =
    r"\b(?:https?://|www\.)[A-Za-z0-9.-]+\.[A-Za-z]{2,}(?:/[A-Za-z0-9._~%/?#=&+-]*[A-Za-z0-9/_~%#=&+-])?";
const IBAN_PATTERN: &str = r"\b[A-Z]{2}\d{2}(?: ?[A-Z0-9]){11,30}\b";
const MONTHS: &str = "jan(?:uari|uary)?|feb(?:ruari|ruary)?|m(?:aart|arch|rt|ar)|apr(?:il)?|m(?:ei|ay)|jun[ei]?|jul(?:i|y)?|aug(?:ustus|ust)?|sep(?:t(?:ember)?)?|o[ck]t(?:ober)?|nov(?:ember)?|dec(?:ember)?";
const AMOUNT_PATTERN: &str =
    r"(?:€|\bEUR)[ ]?-?(?:\d{1,3}(?:[.,]\d{3})+|\d+)(?:[.,]\d{2})?\b";
const ADDRESS_PATTERN: &str = r"\b\p{Lu}[\p{L}'.-]*(?: [\p{L}'.-]+){0,3} \d{1,5}(?:[ -]?[A-Za-z]\b)?(?:[ -]\d{1,4})?,? \d{4} ?[A-Z]{2}\b(?: \p{Lu}[\p{L}'-]*(?:[ -]\p{Lu}[\p{L}'-]*)*)?";
const POSTAL_CODE_PATTERN: &str = r"\b[1-9]\d{3} ?[A-Z]{2}\b";
const VAT_PATTERN: &str = r"\b(?:NL ?\d{9} ?B ?\d{2}|BE ?0?\d{9}|DE ?\d{9})\b";

fn date_pattern() -> String {
    let day = r"(?:0?[1-9]|[12]\d|3[01])";
    let month = r"(?:0?[1-9]|1[0-2])";
    let year = r"(?:19|20)\d{2}";
    format!(
        r"\b(?:{day}[-/.]{month}[-/.]{year}|{year}-{month}-{day}|(?i:{day} (?:{MONTHS})\.? {year}))\b"
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostFilter {
    /// ISO 13616 mod-97 checksum after trimming to the country length.
    IbanMod97,
    /// Rejects dates whose day does not exist in the month.
    DatePlausible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_filter: Option<PostFilter>,
}

#[derive(Debug, Clone)]
struct Entry {
    spec: PatternSpec,
    regex: Regex,
}

/// The nine fuzzy expressions, compiled.
#[derive(Debug, Clone)]
pub struct PatternCatalog {
    entries: BTreeMap<Category, Entry>,
}

impl PatternCatalog {
    pub fn builtin() -> Self {
        let mut specs = BTreeMap::new();
        let mut add = |c, p: &str, f| {
            specs.insert(
                c,
                PatternSpec {
                    pattern: p.to_string(),
                    post_filter: f,
                },
            );
        };
        add(Category::Email, EMAIL_PATTERN, None);
        add(Category::Phone, PHONE_PATTERN, None);
        add(Category::Website, WEBSITE_PATTERN, None);
        add(Category::Iban, IBAN_PATTERN, Some(PostFilter::IbanMod97));
        add(Category::Date, &date_pattern(), Some(PostFilter::DatePlausible));
        add(Category::Amount, AMOUNT_PATTERN, None);
        add(Category::Address, ADDRESS_PATTERN, None);
        add(Category::PostalCode, POSTAL_CODE_PATTERN, None);
        add(Category::VatNumber, VAT_PATTERN, None);
        Self::from_specs(specs).expect("built-in patterns compile")
    }

    fn from_specs(specs: BTreeMap<Category, PatternSpec>) -> Result<Self, CascadeError> {
        let mut entries = BTreeMap::new();
        for (category, spec) in specs {
            if !Category::PATTERN.contains(&category) {
                return Err(CascadeError::InvalidCatalog(format!(
                    "{category} is not a pattern category"
                )));
            }
            let regex = Regex::new(&spec.pattern)
                .map_err(|e| CascadeError::InvalidCatalog(format!("{category}: {e}")))?;
            entries.insert(category, Entry { spec, regex });
        }
        Ok(Self { entries })
    }

    /// Built-in catalog with entries replaced from a JSON object mapping
    /// category to `{pattern, post_filter}`.
    pub fn with_overrides_json(json: &str) -> Result<Self, CascadeError> {
        let overrides: BTreeMap<Category, PatternSpec> =
            serde_json::from_str(json).map_err(|e| CascadeError::InvalidCatalog(e.to_string()))?;
        let mut specs: BTreeMap<Category, PatternSpec> = Self::builtin()
            .entries
            .into_iter()
            .map(|(c, e)| (c, e.spec))
            .collect();
        specs.extend(overrides);
        Self::from_specs(specs)
    }

    pub fn load_overrides(path: &Path) -> Result<Self, CascadeError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| CascadeError::InvalidCatalog(format!("{}: {e}", path.display())))?;
        Self::with_overrides_json(&json)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, category: Category) -> bool {
        self.entries.contains_key(&category)
    }

    pub fn spec(&self, category: Category) -> Option<&PatternSpec> {
        self.entries.get(&category).map(|e| &e.spec)
    }

    /// All non-overlapping matches in document order that pass the post filter.
    pub fn find(&self, text: &str, category: Category) -> Result<Vec<Match>, CascadeError> {
        let entry = self
            .entries
            .get(&category)
            .ok_or(CascadeError::NoCatalogEntry(category))?;
        let offsets = CharOffsets::new(text);
        let mut out = Vec::new();
        for m in entry.regex.find_iter(text) {
            let (start, mut end) = (m.start(), m.end());
            match entry.spec.post_filter {
                None => {}
                Some(PostFilter::IbanMod97) => match iban_prefix_len(m.as_str()) {
                    Some(len) => end = start + len,
                    None => continue,
                },
                Some(PostFilter::DatePlausible) if !date_is_plausible(m.as_str()) => continue,
                Some(PostFilter::DatePlausible) => {}
            }
            out.push(Match {
                value: text[start..end].to_string(),
                span: Some(Span {
                    start: offsets.char_index(start),
                    end: offsets.char_index(end),
                }),
                stage: Stage::FuzzyRegex,
                confidence: 1.0,
            });
        }
        Ok(out)
    }
}

/// Byte offset to character offset conversion.
pub(crate) struct CharOffsets<'a> {
    text: &'a str,
}

impl<'a> CharOffsets<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { text }
    }

    pub(crate) fn char_index(&self, byte: usize) -> usize {
        self.text[..byte].chars().count()
    }
}

#[rustfmt::skip]
const IBAN_LENGTHS: &[(&str, usize)] = &[
    ("AD", 24), ("AE", 23), ("AL", 28), ("AT", 20), ("AZ", 28), ("BA", 20), ("BE", 16),
    ("BG", 22), ("BH", 22), ("BR", 29), ("BY", 28), ("CH", 21), ("CR", 22), ("CY", 28),
    ("CZ", 24), ("DE", 22), ("DK", 18), ("DO", 28), ("EE", 20), ("EG", 29), ("ES", 24),
    ("FI", 18), ("FO", 18), ("FR", 27), ("GB", 22), ("GE", 22), ("GI", 23), ("GL", 18),
    ("GR", 27), ("GT", 28), ("HR", 21), ("HU", 28), ("IE", 22), ("IL", 23), ("IQ", 23),
    ("IS", 26), ("IT", 27), ("JO", 30), ("KW", 30), ("KZ", 20), ("LB", 28), ("LC", 32),
    ("LI", 21), ("LT", 20), ("LU", 20), ("LV", 21), ("MC", 27), ("MD", 24), ("ME", 22),
    ("MK", 19), ("MR", 27), ("MT", 31), ("MU", 30), ("NL", 18), ("NO", 15), ("PK", 24),
    ("PL", 28), ("PS", 29), ("PT", 25), ("QA", 29), ("RO", 24), ("RS", 22), ("SA", 24),
    ("SC", 31), ("SE", 24), ("SI", 19), ("SK", 24), ("SM", 27), ("ST", 25), ("SV", 28),
    ("TL", 23), ("TN", 24), ("TR", 26), ("UA", 29), ("VA", 22), ("VG", 24), ("XK", 20),
];

pub fn iban_length(country: &str) -> Option<usize> {
    IBAN_LENGTHS
        .binary_search_by(|(c, _)| c.cmp(&country))
        .ok()
        .map(|i| IBAN_LENGTHS[i].1)
}

/// ISO 13616 check on a compact (space-free) IBAN of the right length.
pub fn iban_is_valid(iban: &str) -> bool {
    let bytes = iban.as_bytes();
    if bytes.len() < 5
        || !bytes.iter().all(u8::is_ascii_alphanumeric)
        || !bytes[..2].iter().all(u8::is_ascii_uppercase)
        || !bytes[2..4].iter().all(u8::is_ascii_digit)
        || iban_length(&iban[..2]) != Some(bytes.len())
    {
        return false;
    }
    let rearranged = bytes[4..].iter().chain(&bytes[..4]);
    let mut rem: u32 = 0;
    for &b in rearranged {
        let v = match b {
            b'0'..=b'9' => (b - b'0') as u32,
            b'A'..=b'Z' => (b - b'A') as u32 + 10,
            _ => return false,
        };
        rem = if v >= 10 { (rem * 100 + v) % 97 } else { (rem * 10 + v) % 97 };
    }
    rem == 1
}

/// Byte length of the leading IBAN in a greedy candidate, or None when the
/// country is unknown, the candidate is too short or the checksum fails.
fn iban_prefix_len(candidate: &str) -> Option<usize> {
    let want = iban_length(candidate.get(..2)?)?;
    let mut compact = String::with_capacity(want);
    let mut end = 0;
    for (i, c) in candidate.char_indices() {
        if c == ' ' {
            continue;
        }
        compact.push(c);
        if compact.len() == want {
            end = i + c.len_utf8();
            break;
        }
    }
    (compact.len() == want && iban_is_valid(&compact)).then_some(end)
}

fn month_number(word: &str) -> Option<u32> {
    let w = word.to_lowercase();
    Some(match w.get(..3)? {
        "jan" => 1,
        "feb" => 2,
        "maa" | "mar" | "mrt" => 3,
        "apr" => 4,
        "mei" | "may" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "okt" | "oct" => 10,
        "nov" => 11,
        "dec" => 12,
        _ => return None,
    })
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

fn date_is_plausible(s: &str) -> bool {
    let parts: Vec<&str> = s.split(['-', '/', '.', ' ']).filter(|p| !p.is_empty()).collect();
    let [a, b, c] = parts[..] else {
        return false;
    };
    let num = |p: &str| p.parse::<u32>().ok();
    let (year, month, day) = if a.len() == 4 {
        (num(a), num(b), num(c))
    } else {
        (num(c), num(b).or_else(|| month_number(b)), num(a))
    };
    match (year, month, day) {
        (Some(y), Some(m), Some(d)) => (1..=12).contains(&m) && d >= 1 && d <= days_in_month(y, m),
        _ => false,
    }
}
