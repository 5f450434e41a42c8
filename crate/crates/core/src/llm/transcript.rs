use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// Lowercase hex SHA-256 of the exact prompt bytes.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub digest: String,
    pub prompt: String,
    pub response: String,
}

/// Raised when `record` overwrites an existing, different response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplacedResponse {
    pub digest: String,
    pub previous: String,
}

/// Recorded prompt/response pairs keyed by prompt digest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: BTreeMap<String, TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.values()
    }

    /// Exact lookup. A miss is `None`; an empty recorded response is `Some("")`.
    pub fn get(&self, prompt: &str) -> Option<&str> {
        self.get_by_digest(&prompt_digest(prompt))
    }

    pub fn get_by_digest(&self, digest: &str) -> Option<&str> {
        self.entries.get(digest).map(|e| e.response.as_str())
    }

    /// Upserts an entry. Last write wins.
    pub fn record(&mut self, prompt: &str, response: &str) -> Option<ReplacedResponse> {
        let digest = prompt_digest(prompt);
        let entry = TranscriptEntry {
            digest: digest.clone(),
            prompt: prompt.to_string(),
            response: response.to_string(),
        };
        let previous = self.entries.insert(digest.clone(), entry)?;
        if previous.response == response {
            return None;
        }
        log::warn!("transcript entry {digest} overwritten with a different response");
        Some(ReplacedResponse {
            digest,
            previous: previous.response,
        })
    }

    pub fn parse_jsonl(data: &str) -> Result<Self, LlmError> {
        let mut transcript = Self::new();
        for (lineno, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line).map_err(|e| {
                LlmError::InvalidTranscript(format!("line {}: {e}", lineno + 1))
            })?;
            if prompt_digest(&entry.prompt) != entry.digest {
                return Err(LlmError::InvalidTranscript(format!(
                    "line {}: digest does not match prompt",
                    lineno + 1
                )));
            }
            transcript.entries.insert(entry.digest.clone(), entry);
        }
        Ok(transcript)
    }

    /// One JSON object per line, ordered by digest.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in self.entries.values() {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_jsonl(&data)
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        std::fs::write(path, self.to_jsonl())
            .map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))
    }
}
