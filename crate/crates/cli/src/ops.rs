//! Operations shared by the command line and the HTTP service, so both
//! produce the same JSON for the same input.

use std::path::Path;

use docsift::cascade::{CascadeError, RetrievalResult};
use docsift::config::{ConfigError, Pipeline, RunConfig};
use docsift::dataset::DatasetError;
use docsift::eval::EvalError;
use docsift::imaging::ImagingError;
use docsift::text::{Document, ExtractedText, TextError};
use serde::{Deserialize, Serialize};

/// Stable process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const ADAPTER: i32 = 3;
    pub const STRICT: i32 = 4;
    pub const ASSERTION: i32 = 5;
    pub const OUTPUT_NOT_EMPTY: i32 = 6;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// `{"error": {"code": ..., "message": ...}}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

/// A failure with its machine code, exit code and HTTP status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpError {
    pub code: String,
    pub message: String,
    pub exit: i32,
    pub status: u16,
}

impl OpError {
    pub fn new(code: &str, message: impl Into<String>, exit: i32, status: u16) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            exit,
            status,
        }
    }

    pub fn input(code: &str, message: impl Into<String>) -> Self {
        Self::new(code, message, exit::INPUT, 400)
    }

    pub fn envelope(&self) -> ErrorEnvelope {
        ErrorEnvelope {
            error: ErrorBody {
                code: self.code.clone(),
                message: self.message.clone(),
            },
        }
    }
}

impl std::fmt::Display for OpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<TextError> for OpError {
    fn from(e: TextError) -> Self {
        let message = e.to_string();
        if e.is_adapter_failure() {
            return Self::new(e.code(), message, exit::ADAPTER, 502);
        }
        let status = match &e {
            TextError::Imaging(ImagingError::UnsupportedFormat(_)) => 415,
            TextError::NoAlphabeticContent | TextError::UnknownLanguage(_) => 422,
            _ => 400,
        };
        Self::new(e.code(), message, exit::INPUT, status)
    }
}

impl From<ConfigError> for OpError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Text(t) => t.into(),
            ConfigError::Llm(l) => Self::new("gateway_error", l.to_string(), exit::ADAPTER, 502),
            other => Self::input("invalid_config", other.to_string()),
        }
    }
}

impl From<EvalError> for OpError {
    fn from(e: EvalError) -> Self {
        let exit = match e {
            EvalError::Io(_) => exit::ADAPTER,
            _ => exit::INPUT,
        };
        Self::new(e.code(), e.to_string(), exit, 400)
    }
}

impl From<DatasetError> for OpError {
    fn from(e: DatasetError) -> Self {
        let (code, exit) = match e {
            DatasetError::OutputNotEmpty(_) => ("output_not_empty", exit::OUTPUT_NOT_EMPTY),
            DatasetError::EmptyCorpus => ("usage", exit::USAGE),
            DatasetError::Pool { .. } => ("invalid_pools", exit::INPUT),
            DatasetError::Io(_) | DatasetError::TextTooLarge(_) => ("io_error", exit::ADAPTER),
        };
        Self::new(code, e.to_string(), exit, 400)
    }
}

/// One entry of a retrieve response: a result or an embedded per-field error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RetrieveItem {
    Result(RetrievalResult),
    Error { field: String, error: ErrorBody },
}

impl RetrieveItem {
    /// A per-field error, or a stage that failed along the way.
    pub fn has_failure(&self) -> bool {
        match self {
            RetrieveItem::Result(r) => !r.failed_stages.is_empty(),
            RetrieveItem::Error { .. } => true,
        }
    }
}

fn item(field: &str, result: Result<RetrievalResult, CascadeError>) -> RetrieveItem {
    match result {
        Ok(r) => RetrieveItem::Result(r),
        Err(e) => RetrieveItem::Error {
            field: field.to_string(),
            error: ErrorBody {
                code: e.code().into(),
                message: e.to_string(),
            },
        },
    }
}

pub fn read_document(path: &Path) -> Result<Document, OpError> {
    let bytes = std::fs::read(path).map_err(|e| {
        OpError::input("input_not_found", format!("{}: {e}", path.display()))
    })?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Document::from_bytes(name, bytes)?)
}

pub fn extract(pipeline: &Pipeline, doc: &Document) -> Result<ExtractedText, OpError> {
    Ok(pipeline.extract(doc)?)
}

/// Extracts text, then runs every field through the cascade in the
/// detected language.
pub fn retrieve(
    pipeline: &Pipeline,
    doc: &Document,
    fields: &[String],
) -> Result<Vec<RetrieveItem>, OpError> {
    if fields.is_empty() {
        return Err(OpError::new("usage", "at least one field is required", exit::USAGE, 400));
    }
    let extracted = extract(pipeline, doc)?;
    Ok(fields
        .iter()
        .zip(pipeline.retrieve(&extracted.text, fields, extracted.language))
        .map(|(f, r)| item(f, r))
        .collect())
}

/// Applies a JSON merge patch to the config and re-validates it.
pub fn with_overrides(base: &RunConfig, patch: &serde_json::Value) -> Result<RunConfig, OpError> {
    fn merge(target: &mut serde_json::Value, patch: &serde_json::Value) {
        match (target, patch) {
            (serde_json::Value::Object(t), serde_json::Value::Object(p)) => {
                for (k, v) in p {
                    if v.is_null() {
                        t.remove(k);
                    } else {
                        merge(t.entry(k.clone()).or_insert(serde_json::Value::Null), v);
                    }
                }
            }
            (t, p) => *t = p.clone(),
        }
    }
    let mut value = serde_json::to_value(base).expect("config serializes");
    merge(&mut value, patch);
    RunConfig::from_json(&value.to_string()).map_err(OpError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_merge_and_reject_unknown() {
        let base = RunConfig::default();
        let c = with_overrides(&base, &serde_json::json!({"stages": {"spell_check": false}})).unwrap();
        assert!(!c.stages.spell_check);
        assert!(c.stages.language_detection);
        let e = with_overrides(&base, &serde_json::json!({"stages": {"bogus": true}})).unwrap_err();
        assert_eq!(e.code, "invalid_config");
    }

    #[test]
    fn error_classes() {
        let e: OpError = TextError::AdapterUnavailable("ocr").into();
        assert_eq!((e.exit, e.status), (exit::ADAPTER, 502));
        let e: OpError = TextError::Imaging(ImagingError::UnsupportedFormat("x".into())).into();
        assert_eq!((e.exit, e.status), (exit::INPUT, 415));
    }
}
