//! Prompt templates and their rendering.
//!
//! Template bodies are plain text files with `{NAME}` placeholders. The
//! shipped set is compiled in; [`TemplateSet::from_dir`] overrides any of
//! them from disk.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::ProblemSpec;

/// Every placeholder a template may use.
pub const PLACEHOLDERS: [&str; 11] = [
    "RULES",
    "INPUT_FORMAT",
    "OUTPUT_FORMAT",
    "SAMPLE_INPUT",
    "SAMPLE_OUTPUT",
    "INPUT",
    "OUTPUT_GENERATED",
    "GOLD_OUTPUT",
    "RUNTIME_ERROR",
    "TIME_LIMIT",
    "SOLVER_INFO",
];

/// Solving strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fewshot")]
    FewShot,
    #[serde(rename = "pal")]
    Pal,
    #[serde(rename = "logiclm")]
    LogicLm,
    #[serde(rename = "symprolm")]
    SymProLm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::FewShot, Method::Pal, Method::LogicLm, Method::SymProLm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FewShot => "fewshot",
            Method::Pal => "pal",
            Method::LogicLm => "logiclm",
            Method::SymProLm => "symprolm",
        }
    }

    /// Column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Method::FewShot => "Few-Shot",
            Method::Pal => "PAL",
            Method::LogicLm => "Logic-LM",
            Method::SymProLm => "SymPro-LM",
        }
    }

    /// Sampling temperature used for this method's calls.
    pub fn default_temperature(self) -> f64 {
        match self {
            Method::Pal | Method::SymProLm => 0.7,
            Method::FewShot | Method::LogicLm => 0.0,
        }
    }

    /// Methods that synthesize one program per problem.
    pub fn is_program(self) -> bool {
        matches!(self, Method::Pal | Method::SymProLm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.as_str() == s.trim()).ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateKind {
    FewShot,
    Pal,
    SymProLm,
    LogicLmTranslate,
    LogicLmFormat,
    FeedbackRuntime,
    FeedbackWrongOutput,
    FeedbackTimeout,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 8] = [
        TemplateKind::FewShot,
        TemplateKind::Pal,
        TemplateKind::SymProLm,
        TemplateKind::LogicLmTranslate,
        TemplateKind::LogicLmFormat,
        TemplateKind::FeedbackRuntime,
        TemplateKind::FeedbackWrongOutput,
        TemplateKind::FeedbackTimeout,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateKind::FewShot => "fewshot.txt",
            TemplateKind::Pal => "pal.txt",
            TemplateKind::SymProLm => "symprolm.txt",
            TemplateKind::LogicLmTranslate => "logiclm_translate.txt",
            TemplateKind::LogicLmFormat => "logiclm_format.txt",
            TemplateKind::FeedbackRuntime => "feedback_runtime.txt",
            TemplateKind::FeedbackWrongOutput => "feedback_wrong_output.txt",
            TemplateKind::FeedbackTimeout => "feedback_timeout.txt",
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            TemplateKind::FewShot => include_str!("../templates/fewshot.txt"),
            TemplateKind::Pal => include_str!("../templates/pal.txt"),
            TemplateKind::SymProLm => include_str!("../templates/symprolm.txt"),
            TemplateKind::LogicLmTranslate => include_str!("../templates/logiclm_translate.txt"),
            TemplateKind::LogicLmFormat => include_str!("../templates/logiclm_format.txt"),
            TemplateKind::FeedbackRuntime => include_str!("../templates/feedback_runtime.txt"),
            TemplateKind::FeedbackWrongOutput => include_str!("../templates/feedback_wrong_output.txt"),
            TemplateKind::FeedbackTimeout => include_str!("../templates/feedback_timeout.txt"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {template:?} uses unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: TemplateKind, name: String },
    #[error("placeholder {{{0}}} is not bound")]
    Unbound(String),
    #[error("placeholder {{{0}}} is bound to empty text")]
    Empty(String),
    #[error("{0:?} needs at least one sample input/output pair")]
    NoSamples(TemplateKind),
    #[error("rendered prompt mentions the problem name `{0}`")]
    NameLeak(String),
    #[error("template file {path}: {message}")]
    Io { path: String, message: String },
}

/// `{NAME}` occurrences in `body`, as (start, end, name) byte spans.
fn placeholders(body: &str) -> Vec<(usize, usize, &str)> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let end = bytes[i + 1..].iter().position(|b| !(b.is_ascii_uppercase() || *b == b'_')).map(|p| i + 1 + p);
            if let Some(end) = end {
                if bytes[end] == b'}' && end > i + 1 {
                    out.push((i, end + 1, &body[i + 1..end]));
                    i = end + 1;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(kind: TemplateKind, body: impl Into<String>) -> Result<Self, PromptError> {
        let body = body.into();
        if let Some((_, _, name)) = placeholders(&body).into_iter().find(|(_, _, n)| !PLACEHOLDERS.contains(n)) {
            return Err(PromptError::UnknownPlaceholder { template: kind, name: name.to_string() });
        }
        Ok(Self { kind, body })
    }

    /// Placeholder names in order of first use.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for (_, _, n) in placeholders(&self.body) {
            if !names.contains(&n) {
                names.push(n);
            }
        }
        names
    }

    /// Substitute every placeholder. Bound values are inserted verbatim and
    /// never rescanned.
    pub fn render(&self, bindings: &Bindings) -> Result<String, PromptError> {
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut last = 0;
        for (start, end, name) in placeholders(&self.body) {
            let value = bindings.0.get(name).ok_or_else(|| PromptError::Unbound(name.to_string()))?;
            if value.trim().is_empty() {
                return Err(PromptError::Empty(name.to_string()));
            }
            out.push_str(&self.body[last..start]);
            out.push_str(value.trim_end_matches('\n'));
            last = end;
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

/// Placeholder values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, name: &str, value: impl Into<String>) -> Self {
        self.0.insert(name.to_string(), value.into());
        self
    }

    fn spec(spec: &ProblemSpec) -> Self {
        Self::new()
            .set("RULES", spec.rules_text.clone())
            .set("INPUT_FORMAT", spec.input_format_text.clone())
            .set("OUTPUT_FORMAT", spec.output_format_text.clone())
    }
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateKind, PromptTemplate>,
}

impl TemplateSet {
    /// The compiled-in templates.
    pub fn builtin() -> Self {
        let templates = TemplateKind::ALL
            .into_iter()
            .map(|k| (k, PromptTemplate::new(k, k.builtin_body()).expect("shipped templates are valid")))
            .collect();
        Self { templates }
    }

    /// Builtin set with any `<kind>.txt` files in `dir` taking precedence.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        for kind in TemplateKind::ALL {
            let path = dir.join(kind.file_name());
            if path.exists() {
                let body = std::fs::read_to_string(&path)
                    .map_err(|e| PromptError::Io { path: path.display().to_string(), message: e.to_string() })?;
                set.templates.insert(kind, PromptTemplate::new(kind, body)?);
            }
        }
        Ok(set)
    }

    pub fn get(&self, kind: TemplateKind) -> &PromptTemplate {
        &self.templates[&kind]
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub messages: Vec<Message>,
    pub token_estimate: usize,
}

impl RenderedPrompt {
    fn user(text: String) -> Self {
        let token_estimate = estimate_tokens(&text);
        Self { messages: vec![Message::user(text)], token_estimate }
    }

    pub fn text(&self) -> &str {
        &self.messages.last().expect("rendered prompts are non-empty").content
    }
}

/// Rough token count: four characters per token.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

fn check_name(spec: &ProblemSpec, text: &str) -> Result<(), PromptError> {
    let lower = text.to_lowercase();
    let id = spec.id.to_lowercase();
    if lower.contains(&id) || lower.contains(&id.replace('-', " ")) {
        return Err(PromptError::NameLeak(spec.id.clone()));
    }
    Ok(())
}

/// Base prompt of `method`. `test_input` is required by the few-shot and
/// Logic-LM templates and ignored by the program methods.
pub fn render_base(
    set: &TemplateSet,
    method: Method,
    spec: &ProblemSpec,
    samples: &[(String, String)],
    test_input: Option<&str>,
) -> Result<RenderedPrompt, PromptError> {
    let kind = match method {
        Method::FewShot => TemplateKind::FewShot,
        Method::Pal => TemplateKind::Pal,
        Method::SymProLm => TemplateKind::SymProLm,
        Method::LogicLm => TemplateKind::LogicLmTranslate,
    };
    if samples.is_empty() {
        return Err(PromptError::NoSamples(kind));
    }
    let join = |pick: fn(&(String, String)) -> &String| -> String {
        samples.iter().map(|p| pick(p).trim_end_matches('\n')).collect::<Vec<_>>().join("\n\n")
    };
    let mut bindings = Bindings::spec(spec).set("SAMPLE_INPUT", join(|p| &p.0)).set("SAMPLE_OUTPUT", join(|p| &p.1));
    if let Some(input) = test_input {
        bindings = bindings.set("INPUT", input);
    }
    let text = set.get(kind).render(&bindings)?;
    check_name(spec, &text)?;
    Ok(RenderedPrompt::user(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackKind {
    Runtime,
    WrongOutput,
    Timeout,
}

impl FeedbackKind {
    fn template(self) -> TemplateKind {
        match self {
            FeedbackKind::Runtime => TemplateKind::FeedbackRuntime,
            FeedbackKind::WrongOutput => TemplateKind::FeedbackWrongOutput,
            FeedbackKind::Timeout => TemplateKind::FeedbackTimeout,
        }
    }
}

/// Feedback message of `kind`. The payload must bind every placeholder the
/// template uses.
pub fn render_feedback(
    set: &TemplateSet,
    kind: FeedbackKind,
    payload: &Bindings,
) -> Result<RenderedPrompt, PromptError> {
    set.get(kind.template()).render(payload).map(RenderedPrompt::user)
}

pub fn runtime_payload(error: &str, input: &str) -> Bindings {
    Bindings::new().set("RUNTIME_ERROR", error).set("INPUT", input)
}

pub fn wrong_output_payload(input: &str, generated: &str, gold: &str) -> Bindings {
    Bindings::new().set("INPUT", input).set("OUTPUT_GENERATED", generated).set("GOLD_OUTPUT", gold)
}

pub fn timeout_payload(limit_secs: f64, input: &str) -> Bindings {
    Bindings::new().set("TIME_LIMIT", format!("{limit_secs}")).set("INPUT", input)
}

/// First Logic-LM call: translate one instance to SMT2.
pub fn render_logiclm(
    set: &TemplateSet,
    spec: &ProblemSpec,
    samples: &[(String, String)],
    instance: &str,
) -> Result<RenderedPrompt, PromptError> {
    render_base(set, Method::LogicLm, spec, samples, Some(instance))
}

/// Second Logic-LM call: turn the solver's answer into the output format.
pub fn render_logiclm_format(
    set: &TemplateSet,
    spec: &ProblemSpec,
    solver_info: &str,
) -> Result<RenderedPrompt, PromptError> {
    let bindings = Bindings::spec(spec).set("SOLVER_INFO", solver_info);
    set.get(TemplateKind::LogicLmFormat).render(&bindings).map(RenderedPrompt::user)
}
