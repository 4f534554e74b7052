//! Chat-completion back-ends: live HTTP, replay from fixtures, and a
//! recording wrapper.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::{prompt_hash, Outcome, Prompt};
use super::LlmError;

/// Sampling temperature for live requests: near-deterministic replies.
pub const TEMPERATURE: f64 = 0.01;

/// Environment variable holding the API key for live requests.
pub const API_KEY_VAR: &str = "AQUAFORTE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LlmConfig {
    Live(LiveConfig),
    Replay { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    pub max_retries: u32,
    /// First backoff delay; doubles after every failed attempt.
    pub backoff_ms: u64,
    pub request_timeout_s: f64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4.1".into(),
            max_retries: 3,
            backoff_ms: 500,
            request_timeout_s: 120.0,
        }
    }
}

/// A model reply with the metadata needed for a transcript entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub model: String,
}

/// Something that answers prompts. Implementations are shared between
/// threads that query distinct components concurrently.
pub trait Completer: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError>;
}

impl<C: Completer + ?Sized> Completer for &C {
    fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError> {
        (**self).complete(prompt)
    }
}

impl<C: Completer + ?Sized> Completer for Box<C> {
    fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError> {
        (**self).complete(prompt)
    }
}

/// Builds the completer named by `config`. Live mode reads the API key
/// from [`API_KEY_VAR`].
pub fn completer_from_config(config: &LlmConfig) -> Result<Box<dyn Completer>, LlmError> {
    Ok(match config {
        LlmConfig::Live(live) => {
            let key = std::env::var(API_KEY_VAR).map_err(|_| LlmError::MissingKey(API_KEY_VAR))?;
            Box::new(LiveClient::new(live.clone(), key))
        }
        LlmConfig::Replay { path } => Box::new(ReplayStore::load(path)?),
    })
}

/// Fixture-backed completer: a JSON map from prompt sha256 to reply text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayStore {
    responses: BTreeMap<String, String>,
}

impl ReplayStore {
    pub fn new(responses: BTreeMap<String, String>) -> Self {
        ReplayStore { responses }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        let responses = serde_json::from_str(&text)
            .map_err(|e| LlmError::Io(format!("{}: not a fixture map: {e}", path.display())))?;
        Ok(ReplayStore { responses })
    }

    pub fn insert(&mut self, prompt: &Prompt, response: impl Into<String>) {
        self.responses.insert(prompt.hash(), response.into());
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn responses(&self) -> &BTreeMap<String, String> {
        &self.responses
    }

    /// Writes the store as pretty JSON (sorted keys, so diffs stay small).
    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let text = serde_json::to_string_pretty(&self.responses).expect("string map serializes");
        std::fs::write(path, text + "\n").map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))
    }
}

impl Completer for ReplayStore {
    fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError> {
        let hash = prompt.hash();
        match self.responses.get(&hash) {
            Some(text) => Ok(Completion { text: text.clone(), model: "replay".into() }),
            None => Err(LlmError::FixtureMissing(hash)),
        }
    }
}

/// Wraps another completer and remembers every reply under its prompt hash.
pub struct Recorder<C> {
    inner: C,
    store: Mutex<ReplayStore>,
}

impl<C: Completer> Recorder<C> {
    pub fn new(inner: C) -> Self {
        Recorder { inner, store: Mutex::new(ReplayStore::default()) }
    }

    /// Starts from an existing store, e.g. to extend a fixture file.
    pub fn extending(inner: C, store: ReplayStore) -> Self {
        Recorder { inner, store: Mutex::new(store) }
    }

    pub fn store(&self) -> ReplayStore {
        self.store.lock().expect("recorder lock").clone()
    }
}

impl<C: Completer> Completer for Recorder<C> {
    fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError> {
        let out = self.inner.complete(prompt)?;
        self.store.lock().expect("recorder lock").insert(prompt, out.text.clone());
        Ok(out)
    }
}

/// OpenAI-compatible chat-completions client.
pub struct LiveClient {
    config: LiveConfig,
    key: String,
    agent: ureq::Agent,
}

enum Attempt {
    Done(Completion),
    Retry(String),
    Fail(LlmError),
}

impl LiveClient {
    pub fn new(config: LiveConfig, key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.request_timeout_s.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        LiveClient { config, key, agent }
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(body);
        let mut resp = match resp {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if status != 200 {
            return Attempt::Fail(LlmError::Http { status, body: text });
        }
        let v: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Retry(format!("invalid JSON from endpoint: {e}")),
        };
        let choice = &v["choices"][0];
        let finish = choice["finish_reason"].as_str().unwrap_or("stop");
        if finish != "stop" {
            return Attempt::Retry(format!("truncated reply (finish_reason {finish})"));
        }
        match choice["message"]["content"].as_str() {
            Some(content) => Attempt::Done(Completion {
                text: content.to_string(),
                model: v["model"].as_str().unwrap_or(&self.config.model).to_string(),
            }),
            None => Attempt::Retry("reply has no message content".into()),
        }
    }
}

impl Completer for LiveClient {
    fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError> {
        let body = json!({
            "model": self.config.model,
            "temperature": TEMPERATURE,
            "messages": [{"role": "user", "content": prompt.render()}],
        });
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                tracing::warn!(attempt, error = %last, "retrying chat completion");
                thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(msg) => last = msg,
            }
        }
        Err(LlmError::Exhausted { attempts: self.config.max_retries + 1, last })
    }
}

/// One query and its reply, tagged with what became of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt_hash: String,
    pub request: String,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub model: String,
    pub outcome: Outcome,
}

impl TranscriptEntry {
    pub fn new(prompt: &Prompt, completion: &Completion, outcome: Outcome) -> Self {
        let request = prompt.render();
        TranscriptEntry {
            prompt_hash: prompt_hash(&request),
            request,
            response: completion.text.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            model: completion.model.clone(),
            outcome,
        }
    }
}

/// Append-only JSON-lines transcript.
pub struct Transcript {
    out: Mutex<BufWriter<File>>,
}

impl Transcript {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        Ok(Transcript { out: Mutex::new(BufWriter::new(f)) })
    }

    pub fn append(&self, entry: &TranscriptEntry) -> Result<(), LlmError> {
        let line = serde_json::to_string(entry).expect("entry serializes");
        let mut out = self.out.lock().expect("transcript lock");
        writeln!(out, "{line}").and_then(|_| out.flush()).map_err(|e| LlmError::Io(e.to_string()))
    }
}
