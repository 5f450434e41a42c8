use super::{CascadeError, FieldQuery, Match, Stage};
use crate::llm::{LlmGateway, PromptTemplate, TemplateId};

pub const LLM_CONFIDENCE: f64 = 0.5;

/// Replies that mean "nothing found", compared case-insensitively after
/// trimming and dropping a trailing period.
const EMPTY_REPLIES: &[&str] = &[
    "", "n/a", "na", "none", "null", "nil", "-", "unknown", "not found", "not available",
    "not mentioned", "not specified", "no information", "geen", "onbekend", "niet gevonden",
];

fn is_empty_reply(value: &str) -> bool {
    let v = value.trim().trim_end_matches('.').trim().to_lowercase();
    EMPTY_REPLIES.contains(&v.as_str())
}

/// Splits a completion into values on newlines and semicolons.
pub fn parse_llm_values(response: &str) -> Vec<String> {
    response
        .split(['\n', ';'])
        .map(str::trim)
        .filter(|v| !is_empty_reply(v))
        .map(String::from)
        .collect()
}

/// Asks the gateway for the raw query text.
pub fn llm_retrieve(
    text: &str,
    query: &FieldQuery,
    gateway: &LlmGateway,
) -> Result<Vec<Match>, CascadeError> {
    let template = PromptTemplate::builtin(TemplateId::RetrieveField);
    let response = gateway
        .complete_template(&template, &[("user_input", &query.raw), ("text", text)])
        .map_err(CascadeError::Gateway)?;
    Ok(parse_llm_values(&response)
        .into_iter()
        .map(|value| Match {
            value,
            span: None,
            stage: Stage::Llm,
            confidence: LLM_CONFIDENCE,
        })
        .collect())
}
