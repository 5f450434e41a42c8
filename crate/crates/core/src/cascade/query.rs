use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::CascadeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Email,
    Phone,
    Website,
    Iban,
    Date,
    Amount,
    Address,
    PostalCode,
    VatNumber,
    Person,
    Organization,
    Location,
    Language,
    Freeform,
}

impl Category {
    pub const ALL: [Category; 14] = [
        Category::Email,
        Category::Phone,
        Category::Website,
        Category::Iban,
        Category::Date,
        Category::Amount,
        Category::Address,
        Category::PostalCode,
        Category::VatNumber,
        Category::Person,
        Category::Organization,
        Category::Location,
        Category::Language,
        Category::Freeform,
    ];

    /// Categories with a fuzzy pattern in the built-in catalog.
    pub const PATTERN: [Category; 9] = [
        Category::Email,
        Category::Phone,
        Category::Website,
        Category::Iban,
        Category::Date,
        Category::Amount,
        Category::Address,
        Category::PostalCode,
        Category::VatNumber,
    ];

    pub const ENTITY: [Category; 4] = [
        Category::Person,
        Category::Organization,
        Category::Location,
        Category::Language,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Email => "email",
            Category::Phone => "phone",
            Category::Website => "website",
            Category::Iban => "iban",
            Category::Date => "date",
            Category::Amount => "amount",
            Category::Address => "address",
            Category::PostalCode => "postal_code",
            Category::VatNumber => "vat_number",
            Category::Person => "person",
            Category::Organization => "organization",
            Category::Location => "location",
            Category::Language => "language",
            Category::Freeform => "freeform",
        }
    }

    pub fn is_entity(self) -> bool {
        Self::ENTITY.contains(&self)
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CascadeError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldQuery {
    pub raw: String,
    pub key: String,
    pub category: Category,
}

const SYNONYMS: &[(&str, Category)] = &[
    ("email", Category::Email),
    ("e mail", Category::Email),
    ("mail", Category::Email),
    ("email address", Category::Email),
    ("e mail address", Category::Email),
    ("mail address", Category::Email),
    ("emailadres", Category::Email),
    ("e mailadres", Category::Email),
    ("phone", Category::Phone),
    ("phone number", Category::Phone),
    ("telephone", Category::Phone),
    ("telephone number", Category::Phone),
    ("tel", Category::Phone),
    ("mobile", Category::Phone),
    ("mobile number", Category::Phone),
    ("telefoon", Category::Phone),
    ("telefoonnummer", Category::Phone),
    ("website", Category::Website),
    ("web site", Category::Website),
    ("web address", Category::Website),
    ("url", Category::Website),
    ("homepage", Category::Website),
    ("iban", Category::Iban),
    ("iban number", Category::Iban),
    ("bank account", Category::Iban),
    ("bank account number", Category::Iban),
    ("rekeningnummer", Category::Iban),
    ("date", Category::Date),
    ("invoice date", Category::Date),
    ("issue date", Category::Date),
    ("datum", Category::Date),
    ("factuurdatum", Category::Date),
    ("amount", Category::Amount),
    ("total", Category::Amount),
    ("total amount", Category::Amount),
    ("amount due", Category::Amount),
    ("grand total", Category::Amount),
    ("totaal", Category::Amount),
    ("totaalbedrag", Category::Amount),
    ("bedrag", Category::Amount),
    ("address", Category::Address),
    ("home address", Category::Address),
    ("street address", Category::Address),
    ("postal address", Category::Address),
    ("adres", Category::Address),
    ("postal code", Category::PostalCode),
    ("postcode", Category::PostalCode),
    ("zip", Category::PostalCode),
    ("zip code", Category::PostalCode),
    ("vat", Category::VatNumber),
    ("vat number", Category::VatNumber),
    ("vat id", Category::VatNumber),
    ("btw", Category::VatNumber),
    ("btw nummer", Category::VatNumber),
    ("btw nr", Category::VatNumber),
    ("name", Category::Person),
    ("full name", Category::Person),
    ("candidate", Category::Person),
    ("candidate name", Category::Person),
    ("person", Category::Person),
    ("contact person", Category::Person),
    ("naam", Category::Person),
    ("organization", Category::Organization),
    ("organisation", Category::Organization),
    ("company", Category::Organization),
    ("company name", Category::Organization),
    ("seller", Category::Organization),
    ("vendor", Category::Organization),
    ("supplier", Category::Organization),
    ("bedrijf", Category::Organization),
    ("leverancier", Category::Organization),
    ("location", Category::Location),
    ("city", Category::Location),
    ("place", Category::Location),
    ("town", Category::Location),
    ("plaats", Category::Location),
    ("woonplaats", Category::Location),
    ("language", Category::Language),
    ("languages", Category::Language),
    ("spoken languages", Category::Language),
    ("taal", Category::Language),
    ("talen", Category::Language),
];

/// Case-fold, strip diacritics, collapse runs of `-`, `_` and whitespace
/// into one space, and trim surrounding punctuation.
pub fn normalize_key(raw: &str) -> String {
    let folded: String = raw
        .nfd()
        .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect();
    let mut key = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.chars() {
        if c == '-' || c == '_' || c.is_whitespace() {
            pending_space = true;
        } else {
            if pending_space && !key.is_empty() {
                key.push(' ');
            }
            pending_space = false;
            key.push(c);
        }
    }
    key.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
}

/// Maps normalized keys to categories: the built-in synonyms plus overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymTable {
    entries: BTreeMap<String, Category>,
}

impl SynonymTable {
    pub fn builtin() -> Self {
        Self::with_overrides(&BTreeMap::new())
    }

    /// Override keys are normalized like queries; they win over built-ins.
    pub fn with_overrides(overrides: &BTreeMap<String, Category>) -> Self {
        let mut entries: BTreeMap<String, Category> = SYNONYMS
            .iter()
            .map(|&(k, c)| (k.to_string(), c))
            .collect();
        for c in Category::ALL {
            if c != Category::Freeform {
                entries.insert(normalize_key(c.as_str()), c);
            }
        }
        for (k, &c) in overrides {
            entries.insert(normalize_key(k), c);
        }
        Self { entries }
    }

    pub fn lookup(&self, key: &str) -> Option<Category> {
        self.entries.get(key).copied()
    }

    pub fn normalize(&self, raw: &str) -> Result<FieldQuery, CascadeError> {
        let key = normalize_key(raw);
        if key.is_empty() {
            return Err(CascadeError::EmptyQuery);
        }
        let category = self.lookup(&key).unwrap_or(Category::Freeform);
        Ok(FieldQuery {
            raw: raw.trim().to_string(),
            key,
            category,
        })
    }
}

pub fn normalize_query(raw: &str) -> Result<FieldQuery, CascadeError> {
    static TABLE: std::sync::OnceLock<SynonymTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(SynonymTable::builtin).normalize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cat(raw: &str) -> Category {
        normalize_query(raw).unwrap().category
    }

    #[test]
    fn examples() {
        assert_eq!(cat("E-Mail"), Category::Email);
        assert_eq!(cat("Invoice date"), Category::Date);
        assert_eq!(cat("education"), Category::Freeform);
        assert_eq!(cat("Phone number"), Category::Phone);
        assert_eq!(cat("phone_number"), Category::Phone);
        assert_eq!(cat("Seller"), Category::Organization);
        assert_eq!(cat("Candidate  Name"), Category::Person);
        assert_eq!(cat("postal_code"), Category::PostalCode);
        assert_eq!(cat("Invoice number"), Category::Freeform);
        assert_eq!(cat("Hard skills"), Category::Freeform);
    }

    #[test]
    fn key_normalization() {
        assert_eq!(normalize_key("  E--MAIL__adres "), "e mail adres");
        assert_eq!(normalize_key("Télé-phone:"), "tele phone");
        assert_eq!(normalize_key("Straße"), "straße");
    }

    #[test]
    fn empty_query() {
        assert!(matches!(normalize_query("   "), Err(CascadeError::EmptyQuery)));
        assert!(matches!(normalize_query("--"), Err(CascadeError::EmptyQuery)));
    }

    #[test]
    fn overrides_win() {
        let mut o = BTreeMap::new();
        o.insert("Invoice Number".to_string(), Category::Date);
        let t = SynonymTable::with_overrides(&o);
        assert_eq!(t.normalize("invoice-number").unwrap().category, Category::Date);
    }

    proptest! {
        #[test]
        fn key_is_idempotent(raw in "\\PC{0,24}") {
            let k = normalize_key(&raw);
            prop_assert_eq!(normalize_key(&k), k);
        }

        #[test]
        fn freeform_iff_unmapped(raw in "[a-zA-Z _-]{1,16}") {
            if let Ok(q) = normalize_query(&raw) {
                let mapped = SynonymTable::builtin().lookup(&q.key).is_some();
                prop_assert_eq!(q.category == Category::Freeform, !mapped);
            }
        }
    }
}
