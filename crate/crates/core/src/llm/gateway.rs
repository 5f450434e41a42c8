use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{prompt_digest, LlmError, PromptTemplate, Transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            model_id: "gpt-3.5-turbo-1106".into(),
            temperature: 0.1,
            max_tokens: 2048,
        }
    }
}

/// Anything that can answer a single-message chat completion.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, LlmError>;
}

/// Answers from a recorded transcript; a miss is an error.
#[derive(Debug, Default)]
pub struct ReplayBackend {
    transcript: RwLock<Transcript>,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        Self {
            transcript: RwLock::new(transcript),
        }
    }

    pub fn record(&self, prompt: &str, response: &str) {
        self.transcript
            .write()
            .expect("transcript lock")
            .record(prompt, response);
    }

    pub fn snapshot(&self) -> Transcript {
        self.transcript.read().expect("transcript lock").clone()
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, prompt: &str, _params: &CompletionParams) -> Result<String, LlmError> {
        let transcript = self.transcript.read().expect("transcript lock");
        transcript
            .get(prompt)
            .map(str::to_owned)
            .ok_or_else(|| LlmError::TranscriptMiss(prompt_digest(prompt)))
    }
}

/// Wraps a backend and counts calls.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }
}

impl<B: CompletionBackend> CompletionBackend for CountingBackend<B> {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(prompt, params)
    }
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for Arc<T> {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, LlmError> {
        (**self).complete(prompt, params)
    }
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

struct InFlightLimit {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut n = self.available.lock().expect("limit lock");
        while *n == 0 {
            n = self.freed.wait(n).expect("limit lock");
        }
        *n -= 1;
        InFlightPermit(self)
    }
}

struct InFlightPermit<'a>(&'a InFlightLimit);

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("limit lock") += 1;
        self.0.freed.notify_one();
    }
}

/// Posts chat-completion requests to an HTTP endpoint.
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    limit: InFlightLimit,
}

impl LiveBackend {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        max_in_flight: usize,
    ) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            api_key,
            retry: RetryPolicy::default(),
            limit: InFlightLimit::new(max_in_flight),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn send_once(
        &self,
        body: &serde_json::Value,
    ) -> Result<Result<String, (u16, Option<Duration>, String)>, LlmError> {
        let mut request = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = response.text().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        if !status.is_success() {
            return Ok(Err((status.as_u16(), retry_after, text)));
        }
        Ok(Ok(text))
    }
}

fn first_choice_content(body: &str) -> Result<String, LlmError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| LlmError::InvalidResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_owned)
        .ok_or_else(|| LlmError::InvalidResponse("missing choices[0].message.content".into()))
}

fn excerpt(s: &str) -> String {
    s.chars().take(200).collect()
}

impl CompletionBackend for LiveBackend {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, LlmError> {
        let _permit = self.limit.acquire();
        let body = serde_json::json!({
            "model": params.model_id,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut attempt = 0;
        loop {
            match self.send_once(&body)? {
                Ok(text) => return first_choice_content(&text),
                Err((status, retry_after, text)) => {
                    let retryable = status == 429 || (500..600).contains(&status);
                    if !retryable || attempt >= self.retry.max_retries {
                        return Err(LlmError::Http {
                            status,
                            body: excerpt(&text),
                        });
                    }
                    let backoff = self.retry.base_delay * 2u32.pow(attempt);
                    std::thread::sleep(retry_after.unwrap_or(backoff));
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub mode: GatewayMode,
    pub endpoint: String,
    pub params: CompletionParams,
    pub transcript: Option<PathBuf>,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            mode: GatewayMode::Replay,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            params: CompletionParams::default(),
            transcript: None,
            api_key_env: "LLM_API_KEY".into(),
            timeout_secs: 60,
            max_in_flight: 4,
        }
    }
}

/// Shared completion client used by text correction and field retrieval.
#[derive(Clone)]
pub struct LlmGateway {
    backend: Arc<dyn CompletionBackend>,
    params: CompletionParams,
}

impl std::fmt::Debug for LlmGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmGateway")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl LlmGateway {
    pub fn new(backend: Arc<dyn CompletionBackend>, params: CompletionParams) -> Self {
        Self { backend, params }
    }

    pub fn replay(transcript: Transcript) -> Self {
        Self::new(
            Arc::new(ReplayBackend::new(transcript)),
            CompletionParams::default(),
        )
    }

    pub fn from_config(config: &GatewayConfig) -> Result<Self, LlmError> {
        let backend: Arc<dyn CompletionBackend> = match config.mode {
            GatewayMode::Replay => {
                let transcript = match &config.transcript {
                    Some(path) => Transcript::load(path)?,
                    None => Transcript::new(),
                };
                Arc::new(ReplayBackend::new(transcript))
            }
            GatewayMode::Live => {
                let api_key = std::env::var(&config.api_key_env).ok();
                Arc::new(LiveBackend::new(
                    config.endpoint.clone(),
                    api_key,
                    Duration::from_secs(config.timeout_secs),
                    config.max_in_flight,
                )?)
            }
        };
        Ok(Self::new(backend, config.params.clone()))
    }

    pub fn params(&self) -> &CompletionParams {
        &self.params
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.backend.complete(prompt, &self.params)
    }

    pub fn complete_template(
        &self,
        template: &PromptTemplate,
        bindings: &[(&str, &str)],
    ) -> Result<String, LlmError> {
        self.complete(&template.render(bindings)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    #[test]
    fn replay_hit_and_miss() {
        let mut t = Transcript::new();
        t.record("hello", "world");
        let g = LlmGateway::replay(t);
        assert_eq!(g.complete("hello").unwrap(), "world");
        assert_eq!(g.complete("hello").unwrap(), "world");
        match g.complete("other") {
            Err(LlmError::TranscriptMiss(d)) => assert_eq!(d, prompt_digest("other")),
            other => panic!("expected miss, got {other:?}"),
        }
    }

    #[test]
    fn record_then_replay() {
        let backend = Arc::new(ReplayBackend::default());
        backend.record("p", "r");
        let g = LlmGateway::new(backend.clone(), CompletionParams::default());
        assert_eq!(g.complete("p").unwrap(), "r");
        assert_eq!(backend.snapshot().len(), 1);
    }

    #[test]
    fn counting_backend_counts() {
        let counting = Arc::new(CountingBackend::new(ReplayBackend::default()));
        let g = LlmGateway::new(counting.clone(), CompletionParams::default());
        let _ = g.complete("a");
        let _ = g.complete("b");
        assert_eq!(counting.calls(), 2);
    }

    #[test]
    fn default_params() {
        let p = CompletionParams::default();
        assert_eq!(p.temperature, 0.1);
        assert_eq!(p.max_tokens, 2048);
    }

    // Minimal HTTP/1.1 server answering each connection with the next canned
    // response and capturing request bodies.
    fn serve(responses: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for response in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                bodies.push(format!("{auth}\n{}", String::from_utf8(body).unwrap()));
                let mut stream = stream;
                stream.write_all(response.as_bytes()).unwrap();
            }
            bodies
        });
        (url, handle)
    }

    fn http(status: &str, extra: &str, body: &str) -> String {
        format!(
            "HTTP/1.1 {status}\r\ncontent-type: application/json\r\n{extra}content-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        )
    }

    const OK_BODY: &str = r#"{"choices":[{"message":{"role":"assistant","content":"MSc Physics"}}]}"#;

    #[test]
    fn live_posts_chat_body_with_bearer() {
        let (url, server) = serve(vec![http("200 OK", "", OK_BODY)]);
        let backend =
            LiveBackend::new(url, Some("sk-test".into()), Duration::from_secs(5), 2).unwrap();
        let out = backend
            .complete("Extract x", &CompletionParams::default())
            .unwrap();
        assert_eq!(out, "MSc Physics");
        let bodies = server.join().unwrap();
        let (auth, body) = bodies[0].split_once('\n').unwrap();
        assert_eq!(auth, "authorization: Bearer sk-test");
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["temperature"], 0.1);
        assert_eq!(v["max_tokens"], 2048);
        assert_eq!(v["messages"][0]["role"], "user");
        assert_eq!(v["messages"][0]["content"], "Extract x");
    }

    #[test]
    fn live_retries_429_then_succeeds() {
        let (url, server) = serve(vec![
            http("429 Too Many Requests", "retry-after: 0\r\n", "{}"),
            http("503 Service Unavailable", "", "{}"),
            http("200 OK", "", OK_BODY),
        ]);
        let backend = LiveBackend::new(url, None, Duration::from_secs(5), 1)
            .unwrap()
            .with_retry(RetryPolicy {
                max_retries: 3,
                base_delay: Duration::from_millis(5),
            });
        assert_eq!(
            backend.complete("p", &CompletionParams::default()).unwrap(),
            "MSc Physics"
        );
        assert_eq!(server.join().unwrap().len(), 3);
    }

    #[test]
    fn live_gives_up_after_three_retries() {
        let busy = http("429 Too Many Requests", "retry-after: 0\r\n", "slow down");
        let (url, server) = serve(vec![busy; 4]);
        let backend = LiveBackend::new(url, None, Duration::from_secs(5), 1)
            .unwrap()
            .with_retry(RetryPolicy {
                max_retries: 3,
                base_delay: Duration::from_millis(1),
            });
        match backend.complete("p", &CompletionParams::default()) {
            Err(LlmError::Http { status, body }) => {
                assert_eq!(status, 429);
                assert_eq!(body, "slow down");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(server.join().unwrap().len(), 4);
    }

    #[test]
    fn live_client_error_is_not_retried() {
        let (url, server) = serve(vec![http("401 Unauthorized", "", "bad key")]);
        let backend = LiveBackend::new(url, None, Duration::from_secs(5), 1).unwrap();
        assert!(matches!(
            backend.complete("p", &CompletionParams::default()),
            Err(LlmError::Http { status: 401, .. })
        ));
        server.join().unwrap();
    }

    #[test]
    fn live_timeout() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        let hold = std::thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            std::thread::sleep(Duration::from_millis(1500));
            drop(s);
        });
        let backend = LiveBackend::new(url, None, Duration::from_millis(300), 1).unwrap();
        assert!(matches!(
            backend.complete("p", &CompletionParams::default()),
            Err(LlmError::Timeout)
        ));
        hold.join().unwrap();
    }
}
