//! Experiment configuration: flat `key = value` text.
//!
//! ```text
//! # comment
//! methods = symprolm, pal
//! model = gpt-4-turbo
//! problems = sudoku, latin-square
//! runs = 5
//! feedback_rounds = 4
//! solved_examples = 10
//! test_count = 20
//! test_size.sudoku = grid_n=4; grid_n=9
//! cassette = cassettes/run.jsonl
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::problem::SizeDescriptor;
use crate::prompt::Method;
use crate::sandbox::Interpreter;
use crate::smt::SolverConfig;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderKind {
    /// Replay a cassette.
    Replay(PathBuf),
    /// OpenAI-style endpoint; the key is read from `api_key_env`.
    Live { base_url: String, api_key_env: String, requests_per_minute: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub model: String,
    pub problems: Vec<String>,
    pub num_runs: usize,
    pub feedback_rounds: usize,
    pub solved_examples: usize,
    pub sample_pairs: usize,
    pub test_count: usize,
    pub train_sizes: BTreeMap<String, SizeDescriptor>,
    pub test_sizes: BTreeMap<String, Vec<SizeDescriptor>>,
    pub temperatures: BTreeMap<Method, f64>,
    pub max_tokens: u32,
    pub time_limit: Duration,
    pub solver_time_limit: Duration,
    pub parallelism: usize,
    pub seed: u64,
    pub provider: ProviderKind,
    pub interpreter: Interpreter,
    pub solver: SolverConfig,
    pub templates_dir: Option<PathBuf>,
    pub dataset_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub prices: BTreeMap<String, (f64, f64)>,
    /// Normalized `key=value` lines the config was built from.
    pub normalized: Vec<String>,
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, message: "expected `key = value`".into() });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, message: "empty key".into() });
        }
        if out.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
            return Err(ConfigError::Syntax { line: i + 1, message: format!("duplicate key `{key}`") });
        }
    }
    Ok(out)
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

struct Keys {
    map: BTreeMap<String, (usize, String)>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), message: e.to_string() }),
        }
    }

    fn prefixed(&mut self, prefix: &str) -> Vec<(String, String)> {
        let keys: Vec<String> = self.map.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        keys.into_iter().map(|k| (k[prefix.len()..].to_string(), self.take(&k).expect("key present"))).collect()
    }
}

fn seconds(key: &str, v: f64) -> Result<Duration, ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(ConfigError::Value { key: key.into(), message: "must be a positive number of seconds".into() });
    }
    Ok(Duration::from_secs_f64(v))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let map = parse_lines(text)?;
        let normalized = map.iter().map(|(k, (_, v))| format!("{k}={v}")).collect();
        let mut keys = Keys { map };
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let methods = list(&keys.take("methods").ok_or(ConfigError::Missing("methods".into()))?)
            .iter()
            .map(|m| m.parse::<Method>().map_err(|e| ConfigError::Value { key: "methods".into(), message: e }))
            .collect::<Result<Vec<_>, _>>()?;
        if methods.is_empty() {
            return Err(ConfigError::Value { key: "methods".into(), message: "no methods listed".into() });
        }
        let model = keys.take("model").ok_or(ConfigError::Missing("model".into()))?;
        let problems = list(&keys.take("problems").ok_or(ConfigError::Missing("problems".into()))?);
        if problems.is_empty() {
            return Err(ConfigError::Value { key: "problems".into(), message: "no problems listed".into() });
        }
        let num_runs = keys.parse("runs", 5usize)?;
        let feedback_rounds = keys.parse("feedback_rounds", 4usize)?;
        let solved_examples = keys.parse("solved_examples", 10usize)?;
        if num_runs < 1 {
            return Err(ConfigError::Value { key: "runs".into(), message: "must be at least 1".into() });
        }
        if solved_examples < 1 {
            return Err(ConfigError::Value { key: "solved_examples".into(), message: "must be at least 1".into() });
        }
        let sample_pairs = keys.parse("sample_pairs", 1usize)?;
        if sample_pairs < 1 || sample_pairs > solved_examples {
            return Err(ConfigError::Value {
                key: "sample_pairs".into(),
                message: "must be between 1 and solved_examples".into(),
            });
        }
        let test_count = keys.parse("test_count", 20usize)?;

        let mut train_sizes = BTreeMap::new();
        for (problem, v) in keys.prefixed("train_size.") {
            let size = v
                .parse()
                .map_err(|e: String| ConfigError::Value { key: format!("train_size.{problem}"), message: e })?;
            train_sizes.insert(problem, size);
        }
        let mut test_sizes = BTreeMap::new();
        for (problem, v) in keys.prefixed("test_size.") {
            let sizes = v
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<SizeDescriptor>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ConfigError::Value { key: format!("test_size.{problem}"), message: e })?;
            test_sizes.insert(problem, sizes);
        }
        let mut temperatures: BTreeMap<Method, f64> = methods.iter().map(|m| (*m, m.default_temperature())).collect();
        for (m, v) in keys.prefixed("temperature.") {
            let key = format!("temperature.{m}");
            let method = m.parse::<Method>().map_err(|e| ConfigError::Value { key: key.clone(), message: e })?;
            let t: f64 =
                v.parse().map_err(|_| ConfigError::Value { key: key.clone(), message: "not a number".into() })?;
            if !(0.0..=2.0).contains(&t) {
                return Err(ConfigError::Value { key, message: "must lie in [0, 2]".into() });
            }
            temperatures.insert(method, t);
        }
        let max_tokens = keys.parse("max_tokens", 4096u32)?;
        let time_limit = seconds("time_limit", keys.parse("time_limit", 60.0)?)?;
        let solver_time_limit = seconds("solver_time_limit", keys.parse("solver_time_limit", 60.0)?)?;
        let parallelism = match keys.parse("parallelism", 0usize)? {
            0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            n => n,
        };
        let seed = keys.parse("seed", 0u64)?;

        let provider = match (keys.take("cassette"), keys.take("provider").as_deref()) {
            (Some(path), None | Some("replay")) => ProviderKind::Replay(resolve(path)),
            (None, Some("live")) => ProviderKind::Live {
                base_url: keys.take("base_url").unwrap_or_else(|| "https://api.openai.com/v1".into()),
                api_key_env: keys.take("api_key_env").unwrap_or_else(|| "OPENAI_API_KEY".into()),
                requests_per_minute: keys.parse("requests_per_minute", 60u32)?,
            },
            (None, None | Some("replay")) => return Err(ConfigError::Missing("cassette".into())),
            (_, Some(other)) => {
                return Err(ConfigError::Value {
                    key: "provider".into(),
                    message: format!("`{other}` is not replay or live, or conflicts with `cassette`"),
                })
            }
        };
        let interpreter = match keys.take("interpreter") {
            Some(cmd) => {
                Interpreter::parse(&cmd).map_err(|e| ConfigError::Value { key: "interpreter".into(), message: e })?
            }
            None => Interpreter::python(),
        };
        let solver = match keys.take("solver") {
            Some(cmd) => {
                let mut words = cmd.split_whitespace().map(str::to_string);
                let program = words
                    .next()
                    .ok_or_else(|| ConfigError::Value { key: "solver".into(), message: "empty command".into() })?;
                SolverConfig { program, args: words.collect() }
            }
            None => SolverConfig::default(),
        };
        let templates_dir = keys.take("templates_dir").map(resolve);
        let dataset_dir = keys.take("dataset_dir").map(resolve);
        let output_dir = resolve(keys.take("output_dir").unwrap_or_else(|| "results".into()));
        let mut prices = BTreeMap::new();
        for (model, v) in keys.prefixed("price.") {
            let key = format!("price.{model}");
            let nums: Vec<f64> = list(&v)
                .iter()
                .map(|x| x.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| ConfigError::Value { key: key.clone(), message: "expected `input, output`".into() })?;
            let [pin, pout] = nums[..] else {
                return Err(ConfigError::Value { key, message: "expected `input, output`".into() });
            };
            prices.insert(model, (pin, pout));
        }

        if let Some(key) = keys.map.keys().next() {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        Ok(Self {
            methods,
            model,
            problems,
            num_runs,
            feedback_rounds,
            solved_examples,
            sample_pairs,
            test_count,
            train_sizes,
            test_sizes,
            temperatures,
            max_tokens,
            time_limit,
            solver_time_limit,
            parallelism,
            seed,
            provider,
            interpreter,
            solver,
            templates_dir,
            dataset_dir,
            output_dir,
            prices,
            normalized,
        })
    }

    /// Short digest of the normalized settings.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.normalized.join("\n").as_bytes());
        hex::encode(&digest[..6])
    }

    pub fn temperature(&self, method: Method) -> f64 {
        self.temperatures.get(&method).copied().unwrap_or(method.default_temperature())
    }
}
