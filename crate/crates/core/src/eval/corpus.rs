use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::text::{Document, TextError};

/// Where a document's content comes from. Paths are relative to the corpus
/// file unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Text(String),
    Path(PathBuf),
}

/// A ground-truth value: one string or several. List truth is compared as
/// its members joined with ", ".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthValue {
    One(String),
    Many(Vec<String>),
}

impl TruthValue {
    pub fn joined(&self) -> String {
        match self {
            TruthValue::One(s) => s.clone(),
            TruthValue::Many(v) => v.join(LIST_SEPARATOR),
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self, TruthValue::Many(_))
    }
}

pub const LIST_SEPARATOR: &str = ", ";

/// One corpus line. A `null` truth means the field is absent from the
/// document, so anything retrieved for it is a false positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub doc_id: String,
    pub source: Source,
    pub truth: BTreeMap<String, Option<TruthValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_text: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    pub base_dir: PathBuf,
}

impl Corpus {
    /// Parses JSONL; blank lines are skipped and doc ids must be unique.
    pub fn parse_jsonl(data: &str, base_dir: impl Into<PathBuf>) -> Result<Self, EvalError> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CorpusEntry = serde_json::from_str(line).map_err(|e| EvalError::Corpus {
                line: i + 1,
                message: e.to_string(),
            })?;
            if entry.doc_id.is_empty() {
                return Err(EvalError::Corpus {
                    line: i + 1,
                    message: "empty doc_id".into(),
                });
            }
            if !seen.insert(entry.doc_id.clone()) {
                return Err(EvalError::Corpus {
                    line: i + 1,
                    message: format!("duplicate doc_id {:?}", entry.doc_id),
                });
            }
            entries.push(entry);
        }
        Ok(Self {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_jsonl(&data, base)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every field named in any truth map.
    pub fn fields(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .flat_map(|e| e.truth.keys().cloned())
            .collect()
    }

    pub fn document(&self, entry: &CorpusEntry) -> Result<Document, TextError> {
        match &entry.source {
            Source::Text(t) => Ok(Document::plain_text(t.clone())),
            Source::Path(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    self.base_dir.join(p)
                };
                let bytes = std::fs::read(&path)
                    .map_err(|e| TextError::Io(format!("{}: {e}", path.display())))?;
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Document::from_bytes(name, bytes)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_shapes() {
        let c = Corpus::parse_jsonl(
            concat!(
                r#"{"doc_id":"a","source":{"text":"x"},"truth":{"email":"a@b.nl","skills":["Python","SQL"],"iban":null}}"#,
                "\n\n",
                r#"{"doc_id":"b","source":{"path":"b.png"},"truth":{},"reference_text":"y"}"#,
                "\n"
            ),
            "/data",
        )
        .unwrap();
        assert_eq!(c.len(), 2);
        let a = &c.entries[0];
        assert_eq!(a.truth["skills"].as_ref().unwrap().joined(), "Python, SQL");
        assert_eq!(a.truth["iban"], None);
        assert_eq!(c.fields().into_iter().collect::<Vec<_>>(), ["email", "iban", "skills"]);
        let back = Corpus::parse_jsonl(&c.to_jsonl(), "/data").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_lines() {
        let dup = "{\"doc_id\":\"a\",\"source\":{\"text\":\"x\"},\"truth\":{}}\n".repeat(2);
        assert!(matches!(
            Corpus::parse_jsonl(&dup, ""),
            Err(EvalError::Corpus { line: 2, .. })
        ));
        let extra = r#"{"doc_id":"a","source":{"text":"x"},"truth":{},"label":1}"#;
        assert!(Corpus::parse_jsonl(extra, "").is_err());
        let both = r#"{"doc_id":"a","source":{"text":"x","path":"y"},"truth":{}}"#;
        assert!(Corpus::parse_jsonl(both, "").is_err());
    }
}
