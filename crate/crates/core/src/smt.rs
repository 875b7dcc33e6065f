//! SMT-LIB2 scripts through an external solver process.

use std::fmt;
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sandbox::{run_limited, GRACE};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("solver `{0}` could not be started: {1}")]
    Environment(String, String),
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("time limit must be positive")]
    BadLimit,
    #[error("model parse error at offset {offset}: {message}")]
    ModelParse { offset: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub text: String,
    pub expects_model: bool,
}

impl SmtScript {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let expects_model = text.contains("(get-model)");
        Self { text, expects_model }
    }

    /// Same script with `(get-model)` appended when it lacks one.
    pub fn with_model(mut self) -> Self {
        if !self.expects_model {
            if !self.text.ends_with('\n') {
                self.text.push('\n');
            }
            self.text.push_str("(get-model)\n");
            self.expects_model = true;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    SyntaxError,
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverStatus::Sat => "sat",
            SolverStatus::Unsat => "unsat",
            SolverStatus::Unknown => "unknown",
            SolverStatus::Timeout => "timeout",
            SolverStatus::SyntaxError => "syntax error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Any other value, as solver text.
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub symbol: String,
    pub sort: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverVerdict {
    pub status: SolverStatus,
    pub model: Option<Vec<Assignment>>,
    /// Solver diagnostic for SYNTAX_ERROR.
    pub diagnostic: Option<String>,
    pub raw_output: String,
}

impl SolverVerdict {
    fn bare(status: SolverStatus, raw_output: String) -> Self {
        Self { status, model: None, diagnostic: None, raw_output }
    }

    pub fn value(&self, symbol: &str) -> Option<&Value> {
        self.model.as_ref()?.iter().find(|a| a.symbol == symbol).map(|a| &a.value)
    }
}

/// Solver command. `{timeout}` in the arguments becomes whole seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub program: String,
    pub args: Vec<String>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { program: "z3".into(), args: vec!["-in".into(), "-T:{timeout}".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open(usize),
    Close(usize),
    Atom(usize, String),
}

/// Tokens of an s-expression text, skipping comments. Fails on an
/// unterminated string or quoted symbol.
fn tokenize(text: &str) -> Result<Vec<Token>, (usize, String)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                out.push(Token::Open(i));
                i += 1;
            }
            b')' => {
                out.push(Token::Close(i));
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'"' | b'|' => {
                let start = i;
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err((start, "unterminated literal".into()));
                    }
                    if bytes[i] == c {
                        // "" escapes a quote inside strings.
                        if c == b'"' && bytes.get(i + 1) == Some(&b'"') {
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    i += 1;
                }
                out.push(Token::Atom(start, text[start..i].to_string()));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !b"();\"|".contains(&bytes[i]) {
                    i += 1;
                }
                out.push(Token::Atom(start, text[start..i].to_string()));
            }
        }
    }
    Ok(out)
}

/// First parenthesis problem in `text`, if any.
pub fn paren_error(text: &str) -> Option<String> {
    let tokens = match tokenize(text) {
        Ok(t) => t,
        Err((offset, message)) => return Some(format!("offset {offset}: {message}")),
    };
    let mut depth: usize = 0;
    for t in &tokens {
        match t {
            Token::Open(_) => depth += 1,
            Token::Close(at) => {
                if depth == 0 {
                    let line = text[..*at].matches('\n').count() + 1;
                    return Some(format!("line {line}: unexpected ')'"));
                }
                depth -= 1;
            }
            Token::Atom(..) => {}
        }
    }
    (depth > 0).then(|| format!("{depth} unclosed '('"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>, usize),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SmtError> {
    let err = |offset: usize, message: &str| SmtError::ModelParse { offset, message: message.into() };
    let tokens = tokenize(text).map_err(|(o, m)| err(o, &m))?;
    let mut stack: Vec<(Vec<Sexp>, usize)> = vec![(Vec::new(), 0)];
    for t in tokens {
        match t {
            Token::Open(at) => stack.push((Vec::new(), at)),
            Token::Close(at) => {
                if stack.len() == 1 {
                    return Err(err(at, "unexpected ')'"));
                }
                let (items, start) = stack.pop().expect("non-empty");
                stack.last_mut().expect("root").0.push(Sexp::List(items, start));
            }
            Token::Atom(_, a) => stack.last_mut().expect("root").0.push(Sexp::Atom(a)),
        }
    }
    if stack.len() > 1 {
        return Err(err(stack.last().expect("open").1, "unclosed '('"));
    }
    Ok(stack.pop().expect("root").0)
}

fn render(s: &Sexp) -> String {
    match s {
        Sexp::Atom(a) => a.clone(),
        Sexp::List(items, _) => format!("({})", items.iter().map(render).collect::<Vec<_>>().join(" ")),
    }
}

fn decode_value(sort: &str, v: &Sexp) -> Value {
    match (sort, v) {
        ("Int", Sexp::Atom(a)) => a.parse().map(Value::Int).unwrap_or_else(|_| Value::Other(a.clone())),
        ("Int", Sexp::List(items, _)) => match items.as_slice() {
            [Sexp::Atom(minus), Sexp::Atom(n)] if minus == "-" => {
                n.parse::<i64>().map(|n| Value::Int(-n)).unwrap_or_else(|_| Value::Other(render(v)))
            }
            _ => Value::Other(render(v)),
        },
        ("Bool", Sexp::Atom(a)) if a == "true" => Value::Bool(true),
        ("Bool", Sexp::Atom(a)) if a == "false" => Value::Bool(false),
        _ => Value::Other(render(v)),
    }
}

fn collect(s: &Sexp, out: &mut Vec<Assignment>) {
    let Sexp::List(items, _) = s else { return };
    if let [Sexp::Atom(head), Sexp::Atom(name), Sexp::List(params, _), sort, value] = items.as_slice() {
        if head == "define-fun" && params.is_empty() {
            let sort = render(sort);
            out.push(Assignment {
                symbol: name.trim_matches('|').to_string(),
                value: decode_value(&sort, value),
                sort,
            });
            return;
        }
    }
    for item in items {
        collect(item, out);
    }
}

/// Constant definitions in solver model output.
pub fn parse_model(raw: &str) -> Result<Vec<Assignment>, SmtError> {
    let mut out = Vec::new();
    for s in parse_sexps(raw)? {
        collect(&s, &mut out);
    }
    Ok(out)
}

/// `(error "...")` messages in solver output, excluding the complaint about
/// a missing model after unsat/unknown.
fn solver_errors(output: &str) -> Vec<String> {
    output
        .lines()
        .map(str::trim)
        .filter(|l| l.starts_with("(error"))
        .filter(|l| !l.contains("model is not available"))
        .map(|l| l.trim_start_matches("(error").trim_end_matches(')').trim().trim_matches('"').to_string())
        .collect()
}

pub fn check(config: &SolverConfig, script: &SmtScript, time_limit: Duration) -> Result<SolverVerdict, SmtError> {
    if time_limit.is_zero() {
        return Err(SmtError::BadLimit);
    }
    if script.text.trim().is_empty() {
        return Ok(SolverVerdict {
            diagnostic: Some("empty script".into()),
            ..SolverVerdict::bare(SolverStatus::SyntaxError, String::new())
        });
    }
    if let Some(problem) = paren_error(&script.text) {
        return Ok(SolverVerdict {
            diagnostic: Some(format!("unbalanced parentheses: {problem}")),
            ..SolverVerdict::bare(SolverStatus::SyntaxError, String::new())
        });
    }
    let secs = time_limit.as_secs_f64().ceil().max(1.0) as u64;
    let mut command = Command::new(&config.program);
    command.args(config.args.iter().map(|a| a.replace("{timeout}", &secs.to_string())));
    let captured =
        run_limited(command, Some(script.text.clone().into_bytes()), time_limit + GRACE).map_err(|e| {
            match e.kind() {
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                    SmtError::Environment(config.program.clone(), e.to_string())
                }
                _ => SmtError::Io(e),
            }
        })?;
    let raw = captured.stdout;
    if captured.killed {
        return Ok(SolverVerdict::bare(SolverStatus::Timeout, raw));
    }
    let errors = solver_errors(&raw);
    if !errors.is_empty() {
        return Ok(SolverVerdict {
            diagnostic: Some(errors.join("\n")),
            ..SolverVerdict::bare(SolverStatus::SyntaxError, raw)
        });
    }
    let status_line = raw.lines().map(str::trim).find(|l| matches!(*l, "sat" | "unsat" | "unknown" | "timeout"));
    let status = match status_line {
        Some("sat") => SolverStatus::Sat,
        Some("unsat") => SolverStatus::Unsat,
        Some("timeout") => SolverStatus::Timeout,
        Some(_) => SolverStatus::Unknown,
        None if !captured.stderr.trim().is_empty() => {
            let diagnostic = Some(captured.stderr.trim().to_string());
            return Ok(SolverVerdict { diagnostic, ..SolverVerdict::bare(SolverStatus::SyntaxError, raw) });
        }
        None => SolverStatus::Unknown,
    };
    let model = if status == SolverStatus::Sat && script.expects_model {
        let after = raw.find("sat").map(|i| &raw[i + 3..]).unwrap_or("");
        Some(parse_model(after)?)
    } else {
        None
    };
    Ok(SolverVerdict { status, model, diagnostic: None, raw_output: raw })
}

/// Text handed back to the model after a solver run.
pub fn solver_info(verdict: &SolverVerdict) -> String {
    match verdict.status {
        SolverStatus::Sat => format!("sat\n{}", verdict.raw_output.trim().trim_start_matches("sat").trim()),
        SolverStatus::Unsat => "unsat\nThe solver found no satisfying assignment for these constraints.".into(),
        SolverStatus::Unknown => "unknown\nThe solver could not decide these constraints.".into(),
        SolverStatus::Timeout => "timeout\nThe solver did not finish within the time limit.".into(),
        SolverStatus::SyntaxError => {
            format!("error\n{}", verdict.diagnostic.as_deref().unwrap_or("the script could not be parsed"))
        }
    }
}
