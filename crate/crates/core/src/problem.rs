//! Problem, instance and registry types shared by every other module.
//!
//! A problem is described by natural-language rules plus input/output format
//! texts ([`ProblemSpec`]) and is made operational by a [`ProblemAdapter`]
//! that parses, generates, verifies and solves its instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Random source handed to generators. Fixed to ChaCha8 so seeds reproduce
/// across platforms.
pub type ProblemRng = ChaCha8Rng;

/// Natural-language description of one first-order problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Registry slug. Never rendered into prompts.
    pub id: String,
    pub rules_text: String,
    pub input_format_text: String,
    pub output_format_text: String,
    /// Output is a single YES/NO word rather than a structure.
    pub decision_problem: bool,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.id.trim().is_empty() {
            return Err(ProblemError::InvalidSpec("empty id".into()));
        }
        for (name, text) in [
            ("rules_text", &self.rules_text),
            ("input_format_text", &self.input_format_text),
            ("output_format_text", &self.output_format_text),
        ] {
            if text.trim().is_empty() {
                return Err(ProblemError::InvalidSpec(format!("{}: {name} is empty", self.id)));
            }
        }
        Ok(())
    }
}

/// Named integer dimensions of an instance, e.g. `grid_n=9` or
/// `nodes=6,edges=13`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SizeDescriptor(BTreeMap<String, u32>);

impl SizeDescriptor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: u32) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.0.get(name).copied()
    }

    /// Dimension `name`, or a size error naming the problem.
    pub fn require(&self, problem: &str, name: &str) -> Result<u32, ProblemError> {
        self.get(name).ok_or_else(|| ProblemError::InvalidSize {
            problem: problem.to_string(),
            size: self.clone(),
            reason: format!("missing dimension `{name}`"),
        })
    }

    pub fn dims(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.0.iter().find(|(_, v)| **v == 0) {
            Some((k, _)) => Err(format!("dimension `{k}` must be >= 1")),
            None => Ok(()),
        }
    }
}

impl fmt::Display for SizeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for SizeDescriptor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut size = SizeDescriptor::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("size component `{part}` is not name=value"))?;
            let v: u32 = v.trim().parse().map_err(|_| format!("size component `{part}` has a non-integer value"))?;
            size.0.insert(k.trim().to_string(), v);
        }
        size.validate()?;
        Ok(size)
    }
}

/// One serialized problem instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub problem_id: String,
    pub text: String,
    pub size: SizeDescriptor,
    pub seed: Option<u64>,
}

/// Every accepted output for a training instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSolutionSet {
    pub outputs: BTreeSet<String>,
    /// True when `outputs` provably holds every solution.
    pub complete: bool,
}

impl GoldSolutionSet {
    /// Lexicographically first member; the one shown in feedback prompts.
    pub fn first(&self) -> Option<&str> {
        self.outputs.iter().next().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Correct,
    Incorrect,
    Malformed,
}

/// Result of checking a candidate output against an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub reason: String,
}

impl Verdict {
    pub fn correct() -> Self {
        Self { kind: VerdictKind::Correct, reason: String::new() }
    }

    pub fn incorrect(reason: impl Into<String>) -> Self {
        Self { kind: VerdictKind::Incorrect, reason: reason.into() }
    }

    pub fn malformed(reason: impl Into<String>) -> Self {
        Self { kind: VerdictKind::Malformed, reason: reason.into() }
    }

    pub fn is_correct(&self) -> bool {
        self.kind == VerdictKind::Correct
    }
}

/// Output of the reference oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Found(String),
    Infeasible,
}

/// Possibly truncated set of all solutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub solutions: BTreeSet<String>,
    pub truncated: bool,
}

/// A text did not follow the problem's format. `line` is 1-based when known.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct FormatError {
    pub line: Option<usize>,
    pub message: String,
}

impl FormatError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }

    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown problem `{0}`")]
    Unknown(String),
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),
    #[error("invalid size {size} for {problem}: {reason}")]
    InvalidSize { problem: String, size: SizeDescriptor, reason: String },
    #[error("could not generate a feasible {problem} instance of size {size} after {attempts} attempts")]
    Generation { problem: String, size: SizeDescriptor, attempts: usize },
    #[error("solver budget of {budget} search nodes exceeded on {problem} instance")]
    Budget { problem: String, budget: u64 },
    #[error("malformed {problem} instance: {source}")]
    Format {
        problem: String,
        #[source]
        source: FormatError,
    },
}

/// Operations every problem provides, over serialized texts.
pub trait ProblemAdapter: Send + Sync {
    fn spec(&self) -> ProblemSpec;

    /// Desk-scale (train, test) sizes.
    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor);

    /// Parse and re-serialize an input text into canonical form.
    fn canonicalize(&self, text: &str) -> Result<String, FormatError>;

    fn size_of(&self, text: &str) -> Result<SizeDescriptor, FormatError>;

    /// A feasible instance of the requested size.
    fn generate(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Instance, ProblemError>;

    fn verify(&self, instance: &Instance, candidate: &str) -> Verdict;

    fn solve(&self, instance: &Instance) -> Result<Solution, ProblemError>;

    /// Up to `cap` solutions; `truncated` when more exist.
    fn enumerate(&self, instance: &Instance, cap: usize) -> Result<Enumeration, ProblemError>;

    /// Build an [`Instance`] from externally supplied text.
    fn instance_from_text(&self, text: &str) -> Result<Instance, FormatError> {
        let canonical = self.canonicalize(text)?;
        let size = self.size_of(&canonical)?;
        Ok(Instance { problem_id: self.spec().id, text: canonical, size, seed: None })
    }
}

/// A registered problem: its spec and adapter.
#[derive(Clone)]
pub struct ProblemHandle {
    pub spec: Arc<ProblemSpec>,
    pub adapter: Arc<dyn ProblemAdapter>,
}

impl fmt::Debug for ProblemHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemHandle").field("id", &self.spec.id).finish()
    }
}

/// Problems addressable by id. Built once at startup, then shared read-only.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    problems: BTreeMap<String, ProblemHandle>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the twelve shipped problems.
    pub fn builtin() -> Self {
        let mut registry = Self::new();
        for adapter in crate::problems::all() {
            let spec = adapter.spec();
            registry.register_problem(spec, adapter).expect("shipped problem ids are unique");
        }
        registry
    }

    pub fn register_problem(
        &mut self,
        spec: ProblemSpec,
        adapter: Arc<dyn ProblemAdapter>,
    ) -> Result<ProblemHandle, ProblemError> {
        spec.validate()?;
        if self.problems.contains_key(&spec.id) {
            return Err(ProblemError::Duplicate(spec.id));
        }
        let handle = ProblemHandle { spec: Arc::new(spec), adapter };
        self.problems.insert(handle.spec.id.clone(), handle.clone());
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Result<&ProblemHandle, ProblemError> {
        self.problems.get(id).ok_or_else(|| ProblemError::Unknown(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.problems.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }
}
