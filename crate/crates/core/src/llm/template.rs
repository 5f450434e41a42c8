use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    CorrectAndFormat,
    CorrectOnly,
    CorrectNoFormat,
    RetrieveField,
}

/// A prompt body with `{text}` / `{user_input}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: String,
}

const CORRECT_AND_FORMAT: &str =
    "Correct spelling mistakes and format the following text below. Text: \"{text}\"";
const CORRECT_ONLY: &str =
    "Correct spelling mistakes in the following text if there are any. Text: \"{text}\"";
const CORRECT_NO_FORMAT: &str = "Correct spelling mistakes in the following text if there are any, do NOT format the text. Text: \"{text}\"";
const RETRIEVE_FIELD: &str =
    "Extract {user_input} from the following text below.\nText: \"{text}\" {user_input}:";

impl PromptTemplate {
    pub fn builtin(id: TemplateId) -> Self {
        let body = match id {
            TemplateId::CorrectAndFormat => CORRECT_AND_FORMAT,
            TemplateId::CorrectOnly => CORRECT_ONLY,
            TemplateId::CorrectNoFormat => CORRECT_NO_FORMAT,
            TemplateId::RetrieveField => RETRIEVE_FIELD,
        };
        Self {
            id,
            body: body.to_string(),
        }
    }

    /// Placeholder names in order of appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        parse(&self.body)
            .into_iter()
            .filter_map(|piece| match piece {
                Piece::Hole(name) => Some(name),
                Piece::Literal(_) => None,
            })
            .collect()
    }

    /// Substitutes every placeholder in a single left-to-right pass. Bound
    /// values are inserted verbatim and never rescanned.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, LlmError> {
        let mut out = String::with_capacity(self.body.len());
        for piece in parse(&self.body) {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Hole(name) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| LlmError::UnboundPlaceholder(name.to_string()))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Hole(&'a str),
}

fn is_placeholder_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse(body: &str) -> Vec<Piece<'_>> {
    let mut pieces = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_placeholder_name(&after[..close]) => {
                if open > 0 {
                    pieces.push(Piece::Literal(&rest[..open]));
                }
                pieces.push(Piece::Hole(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                pieces.push(Piece::Literal(&rest[..=open]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest));
    }
    pieces
}
