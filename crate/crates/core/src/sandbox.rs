//! Running candidate programs on one instance and classifying the result.
//!
//! A program runs in a fresh directory holding only `input.txt` and is
//! expected to leave its answer in `output.txt`. The whole process group is
//! killed at the time limit. There is no further isolation: programs can
//! touch the network and the rest of the filesystem.

use std::fmt;
use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{Instance, ProblemAdapter, Verdict, VerdictKind};

pub const INPUT_FILE: &str = "input.txt";
pub const OUTPUT_FILE: &str = "output.txt";

/// Time allowed past the limit for teardown.
pub const GRACE: Duration = Duration::from_secs(2);

/// Captured stream bytes kept per execution.
const STREAM_CAP: usize = 256 * 1024;

/// Lines of stderr quoted in a RuntimeError.
const EXCERPT_LINES: usize = 30;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("interpreter `{0}` could not be started: {1}")]
    Environment(String, String),
    #[error("sandbox i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("time limit must be positive")]
    BadLimit,
}

/// Command used to run a program file; `{file}` in the arguments is
/// replaced by the script path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interpreter {
    pub program: String,
    pub args: Vec<String>,
}

impl Interpreter {
    pub fn python() -> Self {
        Self { program: "python3".into(), args: vec!["{file}".into()] }
    }

    /// Whitespace-separated command line. A missing `{file}` is appended.
    pub fn parse(command: &str) -> Result<Self, String> {
        let mut words = command.split_whitespace().map(str::to_string);
        let program = words.next().ok_or("empty interpreter command")?;
        let mut args: Vec<String> = words.collect();
        if !args.iter().any(|a| a.contains("{file}")) {
            args.push("{file}".into());
        }
        Ok(Self { program, args })
    }
}

impl Default for Interpreter {
    fn default() -> Self {
        Self::python()
    }
}

impl fmt::Display for Interpreter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.program, self.args.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateProgram {
    pub source: String,
    /// 0-based run and feedback round that produced it.
    pub run: usize,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    /// `None` when the process ended by a signal.
    pub exit_code: Option<i32>,
    /// Killed at the time limit.
    pub killed: bool,
    pub stdout: String,
    pub stderr: String,
    pub wall_time: f64,
    pub output_text: Option<String>,
}

fn drain(mut stream: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            match stream.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = STREAM_CAP.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
            }
        }
        String::from_utf8_lossy(&kept).into_owned()
    })
}

fn kill_group(child: &Child) {
    // The child leads its own process group.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
}

/// What a time-limited child process left behind.
pub(crate) struct Captured {
    pub exit_code: Option<i32>,
    pub killed: bool,
    pub stdout: String,
    pub stderr: String,
    pub wall_time: f64,
}

/// Spawn `command` in its own process group, feed it `stdin`, and kill the
/// group at `limit`.
pub(crate) fn run_limited(mut command: Command, stdin: Option<Vec<u8>>, limit: Duration) -> std::io::Result<Captured> {
    let started = Instant::now();
    let mut child = command
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn()?;
    if let (Some(bytes), Some(mut pipe)) = (stdin, child.stdin.take()) {
        thread::spawn(move || {
            let _ = pipe.write_all(&bytes);
        });
    }
    let out = drain(child.stdout.take().expect("stdout piped"));
    let err = drain(child.stderr.take().expect("stderr piped"));

    let deadline = started + limit;
    let mut killed = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        let now = Instant::now();
        if now >= deadline {
            kill_group(&child);
            killed = true;
            break child.wait()?;
        }
        thread::sleep((deadline - now).min(Duration::from_millis(5)));
    };
    let wall_time = started.elapsed().as_secs_f64();
    // Reap anything left running in the group.
    kill_group(&child);
    Ok(Captured {
        exit_code: status.code(),
        killed,
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
        wall_time,
    })
}

/// Run `source` with `input` as `input.txt`.
pub fn execute(
    interpreter: &Interpreter,
    source: &str,
    input: &str,
    time_limit: Duration,
) -> Result<ExecutionResult, SandboxError> {
    if time_limit.is_zero() {
        return Err(SandboxError::BadLimit);
    }
    let root = tempfile::Builder::new().prefix("fcore-run-").tempdir()?;
    let script: PathBuf = root.path().join("program.py");
    let work = root.path().join("work");
    std::fs::create_dir(&work)?;
    std::fs::write(&script, source)?;
    std::fs::write(work.join(INPUT_FILE), input)?;

    let script_arg = script.to_string_lossy();
    let mut command = Command::new(&interpreter.program);
    command
        .args(interpreter.args.iter().map(|a| a.replace("{file}", &script_arg)))
        .current_dir(&work)
        .env("PYTHONHASHSEED", "0");
    let c = run_limited(command, None, time_limit).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
            SandboxError::Environment(interpreter.program.clone(), e.to_string())
        }
        _ => SandboxError::Io(e),
    })?;
    let output_text = if c.killed { None } else { std::fs::read(work.join(OUTPUT_FILE)).ok() }
        .map(|b| String::from_utf8_lossy(&b).into_owned());
    // Tracebacks name the temporary paths; keep them stable across runs.
    let root_path = root.path().to_string_lossy().into_owned();
    let scrub = |s: String| s.replace(script_arg.as_ref(), "program.py").replace(&root_path, ".");
    Ok(ExecutionResult {
        exit_code: c.exit_code,
        killed: c.killed,
        stdout: scrub(c.stdout),
        stderr: scrub(c.stderr),
        wall_time: c.wall_time,
        output_text,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeKind {
    RuntimeError,
    Timeout,
    WrongOutput,
    Correct,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 4] =
        [OutcomeKind::RuntimeError, OutcomeKind::Timeout, OutcomeKind::WrongOutput, OutcomeKind::Correct];
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    /// Stderr excerpt, verdict reason or time limit.
    pub detail: String,
    /// Text of `output.txt`, when one was written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Outcome {
    pub fn new(kind: OutcomeKind, detail: impl Into<String>) -> Self {
        Self { kind, detail: detail.into(), output: None }
    }

    pub fn is_correct(&self) -> bool {
        self.kind == OutcomeKind::Correct
    }
}

/// Last lines of `stderr`.
pub fn excerpt(stderr: &str) -> String {
    let lines: Vec<&str> = stderr.trim_end().lines().collect();
    lines[lines.len().saturating_sub(EXCERPT_LINES)..].join("\n")
}

/// Classification given the observable facts of one execution. The
/// verifier is only consulted for a clean exit with an output file.
pub fn classify_parts(
    exit_code: Option<i32>,
    killed: bool,
    output: Option<&str>,
    stderr: &str,
    time_limit: Duration,
    verify: impl FnOnce(&str) -> Verdict,
) -> Outcome {
    if killed {
        return Outcome::new(OutcomeKind::Timeout, format!("{}", time_limit.as_secs_f64()));
    }
    if exit_code != Some(0) {
        let status = match exit_code {
            Some(c) => format!("exit status {c}"),
            None => "terminated by a signal".to_string(),
        };
        let text = excerpt(stderr);
        let detail = if text.is_empty() { status } else { text };
        return Outcome::new(OutcomeKind::RuntimeError, detail);
    }
    let Some(text) = output else {
        return Outcome::new(OutcomeKind::WrongOutput, format!("no {OUTPUT_FILE} was written"));
    };
    let verdict = verify(text);
    let kind = match verdict.kind {
        VerdictKind::Correct => OutcomeKind::Correct,
        VerdictKind::Incorrect | VerdictKind::Malformed => OutcomeKind::WrongOutput,
    };
    Outcome { kind, detail: verdict.reason, output: Some(text.to_string()) }
}

pub fn classify(
    execution: &ExecutionResult,
    instance: &Instance,
    adapter: &dyn ProblemAdapter,
    time_limit: Duration,
) -> Outcome {
    classify_parts(
        execution.exit_code,
        execution.killed,
        execution.output_text.as_deref(),
        &execution.stderr,
        time_limit,
        |text| adapter.verify(instance, text),
    )
}

/// Executor with fixed interpreter, limit and parallelism.
#[derive(Debug, Clone)]
pub struct Sandbox {
    pub interpreter: Interpreter,
    pub time_limit: Duration,
    pub parallelism: usize,
}

impl Sandbox {
    pub fn new(interpreter: Interpreter, time_limit: Duration, parallelism: usize) -> Self {
        Self { interpreter, time_limit, parallelism: parallelism.max(1) }
    }

    pub fn execute(&self, source: &str, input: &str) -> Result<ExecutionResult, SandboxError> {
        execute(&self.interpreter, source, input, self.time_limit)
    }

    pub fn run(
        &self,
        source: &str,
        instance: &Instance,
        adapter: &dyn ProblemAdapter,
    ) -> Result<(Outcome, f64), SandboxError> {
        let exec = self.execute(source, &instance.text)?;
        Ok((classify(&exec, instance, adapter, self.time_limit), exec.wall_time))
    }

    /// Run `source` on every instance, at most `parallelism` at a time.
    /// Results keep the order of `instances`.
    pub fn run_all(
        &self,
        source: &str,
        instances: &[Instance],
        adapter: &dyn ProblemAdapter,
    ) -> Result<Vec<(Outcome, f64)>, SandboxError> {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| SandboxError::Io(std::io::Error::other(e)))?;
        pool.install(|| instances.par_iter().map(|i| self.run(source, i, adapter)).collect())
    }
}
