//! Chat-completion gateway shared by text correction and field retrieval,
//! with a replay backend for offline, deterministic runs.

mod gateway;
mod template;
mod transcript;

pub use gateway::{
    CompletionBackend, CompletionParams, CountingBackend, GatewayConfig, GatewayMode, LiveBackend,
    LlmGateway, ReplayBackend, RetryPolicy,
};
pub use template::{PromptTemplate, TemplateId};
pub use transcript::{prompt_digest, ReplacedResponse, Transcript, TranscriptEntry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("no binding for placeholder {{{0}}}")]
    UnboundPlaceholder(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no transcript entry for prompt digest {0}")]
    TranscriptMiss(String),
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed completion response: {0}")]
    InvalidResponse(String),
    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),
    #[error("I/O error: {0}")]
    Io(String),
}
