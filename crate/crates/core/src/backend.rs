//! Completion backends: an HTTP chat-completion client and a fixture map for
//! offline runs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::chunker::normalize_sentence;
use crate::prompting::PromptPair;

pub const DEFAULT_API_KEY_ENV: &str = "EAS_API_KEY";
pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_secs(1);
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("authentication rejected (HTTP {status})")]
    AuthError { status: u16 },
    #[error("gave up after {attempts} attempts: {last}")]
    TransientExhausted { attempts: u32, last: String },
    #[error("environment variable {var} is not set")]
    MissingApiKey { var: String },
    #[error("no fixture response for {sentence:?}")]
    FixtureMiss { sentence: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("response has no message text: {0}")]
    BadResponse(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot read fixture file {path}: {source}")]
    FixtureUnreadable { path: PathBuf, source: std::io::Error },
    #[error("malformed fixture file: {0}")]
    FixtureParse(String),
    #[error("duplicate fixture entry for {0:?}")]
    DuplicateFixtureKey(String),
}

impl BackendError {
    /// Errors that no retry can fix and that should stop a run.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            BackendError::AuthError { .. }
                | BackendError::MissingApiKey { .. }
                | BackendError::InvalidConfig(_)
                | BackendError::FixtureUnreadable { .. }
                | BackendError::FixtureParse(_)
                | BackendError::DuplicateFixtureKey(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Http,
    Fixture,
}

#[derive(Debug, Clone)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Full endpoint URL the request is POSTed to.
    pub base_url: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub fixture_path: Option<PathBuf>,
}

impl BackendConfig {
    pub fn http(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::Http,
            base_url: Some(base_url.into()),
            model: Some(model.into()),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff_base: DEFAULT_BACKOFF_BASE,
            fixture_path: None,
        }
    }

    pub fn fixture(path: impl Into<PathBuf>) -> Self {
        BackendConfig {
            kind: BackendKind::Fixture,
            base_url: None,
            model: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff_base: DEFAULT_BACKOFF_BASE,
            fixture_path: Some(path.into()),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let missing = |what: &str| Err(BackendError::InvalidConfig(format!("{what} is required")));
        match self.kind {
            BackendKind::Http => {
                if self.base_url.as_deref().map_or(true, str::is_empty) {
                    return missing("base_url");
                }
                if self.model.as_deref().map_or(true, str::is_empty) {
                    return missing("model");
                }
                if self.api_key_env.is_empty() {
                    return missing("api_key_env");
                }
            }
            BackendKind::Fixture => {
                if self.fixture_path.is_none() {
                    return missing("fixture_path");
                }
            }
        }
        if self.max_attempts == 0 {
            return Err(BackendError::InvalidConfig("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt: PromptPair,
    pub chunk_index: usize,
    /// The sentence being analyzed; the fixture backend keys on it.
    pub chunk_text: String,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    /// Verbatim, untrimmed.
    pub raw_text: String,
    pub backend_id: String,
    pub attempt_count: u32,
}

pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;
}

/// Build the backend described by `config`.
pub fn open_backend(config: &BackendConfig) -> Result<Box<dyn CompletionBackend>, BackendError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Http => Box::new(HttpBackend::new(config)?),
        BackendKind::Fixture => Box::new(FixtureBackend::open(config.fixture_path.as_ref().unwrap())?),
    })
}

pub fn complete(config: &BackendConfig, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
    open_backend(config)?.complete(request)
}

#[derive(Deserialize)]
struct FixtureEntry {
    ot: String,
    response: String,
}

/// Read a fixture file into a map from normalized sentence to response block.
pub fn load_fixtures(path: &Path) -> Result<HashMap<String, String>, BackendError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| BackendError::FixtureUnreadable { path: path.to_path_buf(), source })?;
    parse_fixtures(&text)
}

pub fn parse_fixtures(text: &str) -> Result<HashMap<String, String>, BackendError> {
    if text.trim().is_empty() {
        return Ok(HashMap::new());
    }
    let entries: Vec<FixtureEntry> =
        serde_json::from_str(text).map_err(|e| BackendError::FixtureParse(e.to_string()))?;
    let mut map = HashMap::with_capacity(entries.len());
    for entry in entries {
        let key = normalize_sentence(&entry.ot);
        if map.contains_key(&key) {
            return Err(BackendError::DuplicateFixtureKey(key));
        }
        map.insert(key, entry.response);
    }
    Ok(map)
}

pub struct FixtureBackend {
    responses: HashMap<String, String>,
}

impl FixtureBackend {
    pub fn new(responses: HashMap<String, String>) -> Self {
        FixtureBackend { responses }
    }

    pub fn open(path: &Path) -> Result<Self, BackendError> {
        load_fixtures(path).map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl CompletionBackend for FixtureBackend {
    fn id(&self) -> &str {
        "fixture"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let key = normalize_sentence(&request.chunk_text);
        match self.responses.get(&key) {
            Some(raw) => Ok(CompletionResult { raw_text: raw.clone(), backend_id: self.id().to_string(), attempt_count: 1 }),
            None => Err(BackendError::FixtureMiss { sentence: key }),
        }
    }
}

pub struct HttpBackend {
    url: String,
    model: String,
    api_key: String,
    max_attempts: u32,
    backoff_base: Duration,
    id: String,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("url", &self.url).field("model", &self.model).finish_non_exhaustive()
    }
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(BackendError),
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::MissingApiKey { var: config.api_key_env.clone() })?;
        let model = config.model.clone().unwrap();
        Ok(HttpBackend {
            url: config.base_url.clone().unwrap(),
            id: format!("http:{model}"),
            model,
            api_key,
            max_attempts: config.max_attempts,
            backoff_base: config.backoff_base,
        })
    }

    /// Delay before attempt `attempt + 1`, after `attempt` failed.
    pub fn backoff_delay(base: Duration, attempt: u32) -> Duration {
        base.saturating_mul(1u32 << (attempt - 1).min(16))
    }

    fn request_body(&self, prompt: &PromptPair) -> Value {
        json!({
            "model": self.model,
            "temperature": prompt.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        })
    }

    fn attempt(&self, agent: &ureq::Agent, body: &Value) -> Attempt {
        let response = agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(e @ (ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed)) => {
                return Attempt::Retry(e.to_string())
            }
            Err(e) => return Attempt::Fail(BackendError::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e @ (ureq::Error::Timeout(_) | ureq::Error::Io(_))) => return Attempt::Retry(e.to_string()),
            Err(e) => return Attempt::Fail(BackendError::Transport(e.to_string())),
        };
        match status {
            200..=299 => match extract_message_text(&text) {
                Some(raw) => Attempt::Done(raw),
                None => Attempt::Fail(BackendError::BadResponse(truncate(&text))),
            },
            401 | 403 => Attempt::Fail(BackendError::AuthError { status }),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fail(BackendError::Rejected { status, body: truncate(&text) }),
        }
    }
}

impl CompletionBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(request.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let body = self.request_body(&request.prompt);
        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            if attempt > 1 {
                thread::sleep(Self::backoff_delay(self.backoff_base, attempt - 1));
            }
            match self.attempt(&agent, &body) {
                Attempt::Done(raw_text) => {
                    return Ok(CompletionResult { raw_text, backend_id: self.id.clone(), attempt_count: attempt })
                }
                Attempt::Retry(reason) => last = reason,
                Attempt::Fail(e) => return Err(e),
            }
        }
        Err(BackendError::TransientExhausted { attempts: self.max_attempts, last })
    }
}

/// First message text of a chat-completion response. Accepts the
/// `choices[0].message.content` shape and the `content[0].text` shape.
pub fn extract_message_text(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")
        .or_else(|| v.pointer("/content/0/text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

fn truncate(text: &str) -> String {
    text.chars().take(200).collect()
}
