//! Chat-completion providers, cassettes, code extraction and cost accounting.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::{Message, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<Message>,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("no messages".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Milliseconds spent waiting on the provider.
    #[serde(default)]
    pub latency_ms: u64,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cassette exhausted after {0} entries")]
    Exhausted(usize),
    #[error("cassette entry {index} was recorded for request {expected}, got {found}")]
    Mismatch { index: usize, expected: String, found: String },
    #[error("provider failed after {attempts} attempts: {message}")]
    Provider { attempts: u32, message: String },
    #[error("cassette {path}:{line}: {message}")]
    Cassette { path: PathBuf, line: usize, message: String },
    #[error("no price for model `{0}`")]
    Pricing(String),
}

/// Identity of a request: model, temperature and message contents.
pub fn fingerprint(request: &ChatRequest) -> String {
    let mut h = Sha256::new();
    h.update(request.model_id.as_bytes());
    h.update([0]);
    h.update(format!("{:.4}", request.temperature).as_bytes());
    for m in &request.messages {
        h.update([0]);
        h.update(serde_json::to_vec(&m.role).expect("role serializes"));
        h.update([0]);
        h.update(m.content.as_bytes());
    }
    hex::encode(h.finalize())
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

/// One cassette line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub model_id: String,
    pub response: ChatResponse,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let err = |line: usize, message: String| LlmError::Cassette { path: path.to_path_buf(), line, message };
        let file = File::open(path).map_err(|e| err(0, e.to_string()))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| err(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| err(i + 1, e.to_string()))?);
        }
        Ok(Self { entries })
    }

    pub fn to_jsonl(&self) -> String {
        self.entries.iter().map(|e| serde_json::to_string(e).expect("entry serializes") + "\n").collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| LlmError::Cassette {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }
}

/// Replays a cassette in order, checking every request fingerprint.
pub struct ReplayProvider {
    entries: Vec<CassetteEntry>,
    next: Mutex<usize>,
}

impl ReplayProvider {
    pub fn new(cassette: Cassette) -> Self {
        Self { entries: cassette.entries, next: Mutex::new(0) }
    }

    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Cassette::load(path).map(Self::new)
    }

    pub fn consumed(&self) -> usize {
        *self.next.lock().unwrap()
    }

    pub fn is_exhausted(&self) -> bool {
        self.consumed() == self.entries.len()
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let mut next = self.next.lock().unwrap();
        let entry = self.entries.get(*next).ok_or(LlmError::Exhausted(self.entries.len()))?;
        let found = fingerprint(request);
        if entry.fingerprint != found {
            return Err(LlmError::Mismatch { index: *next, expected: entry.fingerprint.clone(), found });
        }
        *next += 1;
        Ok(entry.response.clone())
    }
}

/// Answers with canned texts in order, whatever the request.
pub struct ScriptedProvider {
    replies: Vec<String>,
    next: Mutex<usize>,
}

impl ScriptedProvider {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self { replies: replies.into_iter().map(Into::into).collect(), next: Mutex::new(0) }
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let mut next = self.next.lock().unwrap();
        let text = self.replies.get(*next).ok_or(LlmError::Exhausted(self.replies.len()))?.clone();
        *next += 1;
        let prompt_chars: usize = request.messages.iter().map(|m| m.content.chars().count()).sum();
        Ok(ChatResponse {
            prompt_tokens: prompt_chars.div_ceil(4) as u64,
            completion_tokens: text.chars().count().div_ceil(4) as u64,
            text,
            latency_ms: 0,
        })
    }
}

/// Forwards to an inner provider and appends every exchange to a cassette.
pub struct RecordingProvider<P> {
    inner: P,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    pub fn to_file(inner: P, path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)
            .map_err(|e| LlmError::Cassette { path: path.to_path_buf(), line: 0, message: e.to_string() })?;
        Ok(Self::to_writer(inner, Box::new(file)))
    }

    pub fn to_writer(inner: P, sink: Box<dyn Write + Send>) -> Self {
        Self { inner, sink: Mutex::new(sink) }
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut sink = self.sink.lock().unwrap();
        let response = self.inner.complete(request)?;
        let entry = CassetteEntry {
            fingerprint: fingerprint(request),
            model_id: request.model_id.clone(),
            response: ChatResponse { latency_ms: 0, ..response.clone() },
        };
        let line = serde_json::to_string(&entry).expect("entry serializes");
        writeln!(sink, "{line}").and_then(|_| sink.flush()).map_err(|e| LlmError::Cassette {
            path: PathBuf::new(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(response)
    }
}

/// Counts calls made through it.
pub struct CountingProvider<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P: ChatProvider> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: ChatProvider> ChatProvider for CountingProvider<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

/// Requests-per-minute limiter.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_sec: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(requests_per_minute: u32, now: Instant) -> Self {
        let capacity = requests_per_minute.max(1) as f64;
        Self { capacity, per_sec: capacity / 60.0, tokens: capacity, last: now }
    }

    /// Takes a token at `now`, or returns how long to wait for one.
    pub fn try_take(&mut self, now: Instant) -> Result<(), Duration> {
        let elapsed = now.saturating_duration_since(self.last).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.per_sec).min(self.capacity);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - self.tokens) / self.per_sec))
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Base URL up to, not including, `/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub requests_per_minute: u32,
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            requests_per_minute: 60,
            max_attempts: 5,
            initial_backoff: Duration::from_secs(1),
            max_backoff: Duration::from_secs(30),
            timeout: Duration::from_secs(300),
        }
    }
}

/// OpenAI-style chat-completions endpoint.
pub struct LiveProvider {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    bucket: Mutex<TokenBucket>,
}

enum Attempt {
    Transient(String),
    Fatal(String),
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Provider { attempts: 0, message: e.to_string() })?;
        let bucket = Mutex::new(TokenBucket::new(config.requests_per_minute, Instant::now()));
        Ok(Self { config, client, bucket })
    }

    fn wait_for_slot(&self) {
        let mut bucket = self.bucket.lock().unwrap();
        while let Err(wait) = bucket.try_take(Instant::now()) {
            thread::sleep(wait);
        }
    }

    fn attempt(&self, request: &ChatRequest) -> Result<ChatResponse, Attempt> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": request.messages,
        });
        let mut call = self.client.post(url).json(&body);
        if let Some(key) = &self.config.api_key {
            call = call.bearer_auth(key);
        }
        let started = Instant::now();
        let resp = call.send().map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Transient(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Attempt::Transient(format!("HTTP {status}: {text}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!("HTTP {status}: {text}")));
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Attempt::Fatal(e.to_string()))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Attempt::Fatal(format!("response has no message content: {text}")))?;
        Ok(ChatResponse {
            text: content.to_string(),
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

impl ChatProvider for LiveProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let mut backoff = self.config.initial_backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            self.wait_for_slot();
            match self.attempt(request) {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(message)) => return Err(LlmError::Provider { attempts, message }),
                Err(Attempt::Transient(message)) => {
                    if attempts >= self.config.max_attempts {
                        return Err(LlmError::Provider { attempts, message });
                    }
                    tracing::warn!(attempts, %message, "retrying chat request");
                    thread::sleep(backoff);
                    backoff = (backoff * 2).min(self.config.max_backoff);
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no {tag} code found in response")]
pub struct ExtractionError {
    pub tag: String,
}

fn tag_matches(found: &str, wanted: &str) -> bool {
    let norm = |t: &str| match t.to_ascii_lowercase().as_str() {
        "py" | "python" | "python3" => "python".to_string(),
        "smt" | "smt2" | "smtlib" | "smt-lib" | "smtlib2" | "smt-lib2" | "lisp" | "scheme" => "smt2".to_string(),
        other => other.to_string(),
    };
    norm(found) == norm(wanted)
}

/// Fenced blocks as (tag, body).
fn fences(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut open: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match open.take() {
            None => {
                if let Some(tag) = trimmed.strip_prefix("```") {
                    open = Some((tag.trim().to_string(), Vec::new()));
                }
            }
            Some((tag, mut body)) => {
                if trimmed.trim_end() == "```" {
                    out.push((tag, body.join("\n") + "\n"));
                } else {
                    body.push(line);
                    open = Some((tag, body));
                }
            }
        }
    }
    // An unterminated fence runs to the end of the text.
    if let Some((tag, body)) = open {
        out.push((tag, body.join("\n") + "\n"));
    }
    out
}

fn starts_like_code(line: &str, tag: &str) -> bool {
    let l = line.trim_start();
    if tag_matches(tag, "smt2") {
        return l.starts_with('(') || l.starts_with(';');
    }
    const KEYWORDS: [&str; 9] = ["import ", "from ", "def ", "class ", "#", "with ", "if __name__", "for ", "print("];
    KEYWORDS.iter().any(|k| l.starts_with(k))
}

/// The first fenced block tagged `tag` (or untagged). Without fences, the
/// whole text if it starts like code.
pub fn extract_code(text: &str, tag: &str) -> Result<String, ExtractionError> {
    let blocks = fences(text);
    let chosen = blocks.iter().find(|(t, _)| tag_matches(t, tag)).or_else(|| blocks.iter().find(|(t, _)| t.is_empty()));
    if let Some((_, body)) = chosen {
        if !body.trim().is_empty() {
            return Ok(body.clone());
        }
    }
    if blocks.is_empty() {
        let trimmed = text.trim_matches('\n');
        if let Some(first) = trimmed.lines().find(|l| !l.trim().is_empty()) {
            if starts_like_code(first, tag) {
                return Ok(trimmed.trim_end().to_string() + "\n");
            }
        }
    }
    Err(ExtractionError { tag: tag.to_string() })
}

/// Plain-text answer: the first fence body if any, else the whole reply.
pub fn extract_plain(text: &str) -> String {
    match fences(text).into_iter().next() {
        Some((_, body)) => body,
        None => text.trim_matches('\n').to_string() + "\n",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub problem_id: String,
    pub method: Method,
    pub phase: Phase,
    pub model_id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Append-only call ledger.
#[derive(Debug, Default)]
pub struct Ledger {
    records: Mutex<Vec<CallRecord>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, record: CallRecord) {
        self.records.lock().unwrap().push(record);
    }

    pub fn records(&self) -> Vec<CallRecord> {
        self.records.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Price per 1K input and output tokens, by model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTable(pub BTreeMap<String, (f64, f64)>);

impl PriceTable {
    pub fn with(mut self, model: &str, input_per_1k: f64, output_per_1k: f64) -> Self {
        self.0.insert(model.to_string(), (input_per_1k, output_per_1k));
        self
    }

    pub fn call_cost(&self, record: &CallRecord) -> Result<f64, LlmError> {
        let (pin, pout) = self.0.get(&record.model_id).ok_or_else(|| LlmError::Pricing(record.model_id.clone()))?;
        Ok(record.prompt_tokens as f64 / 1000.0 * pin + record.completion_tokens as f64 / 1000.0 * pout)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub total: f64,
    pub per_problem: BTreeMap<String, f64>,
    pub per_method: BTreeMap<Method, f64>,
    /// Spend during test evaluation, by method.
    pub test_phase: BTreeMap<Method, f64>,
}

pub fn cost(records: &[CallRecord], prices: &PriceTable) -> Result<CostSummary, LlmError> {
    let mut s = CostSummary::default();
    for r in records {
        let c = prices.call_cost(r)?;
        s.total += c;
        *s.per_problem.entry(r.problem_id.clone()).or_default() += c;
        *s.per_method.entry(r.method).or_default() += c;
        if r.phase == Phase::Test {
            *s.test_phase.entry(r.method).or_default() += c;
        }
    }
    Ok(s)
}
