//! The four solving methods and the experiment driver.
//!
//! LLM calls are issued one at a time in a fixed order (problems, then
//! methods, as listed in the config), so a replayed cassette is consumed
//! exactly as it was recorded. Program executions run in parallel.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::dataset::{
    add_test_instances, build_dataset, load_dataset, Dataset, DatasetError, DatasetRequest, TrainExample,
};
use crate::llm::{
    cost, extract_code, extract_plain, CallRecord, ChatProvider, ChatRequest, ChatResponse, Ledger, LlmError, Phase,
    PriceTable,
};
use crate::problem::{Instance, ProblemAdapter, ProblemError, ProblemSpec, Registry};
use crate::prompt::{
    render_base, render_feedback, render_logiclm, render_logiclm_format, runtime_payload, timeout_payload,
    wrong_output_payload, FeedbackKind, Message, Method, PromptError, TemplateSet,
};
use crate::report::{ExperimentReport, InstanceResult, ReportError, ResultKind};
use crate::sandbox::{Outcome, OutcomeKind, Sandbox, SandboxError};
use crate::smt::{check, solver_info, SmtError, SmtScript, SolverConfig, SolverStatus};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Settings of one method on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub model_id: String,
    pub num_runs: usize,
    pub feedback_rounds: usize,
    pub solved_examples: usize,
    pub sample_pairs: usize,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl RunConfig {
    pub fn new(method: Method, model_id: &str) -> Self {
        Self {
            method,
            model_id: model_id.into(),
            num_runs: 5,
            feedback_rounds: 4,
            solved_examples: 10,
            sample_pairs: 1,
            temperature: method.default_temperature(),
            max_tokens: 4096,
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: &str| Err(OrchestratorError::Invalid(m.into()));
        if self.num_runs < 1 {
            return bad("runs must be at least 1");
        }
        if self.solved_examples < 1 {
            return bad("solved_examples must be at least 1");
        }
        if self.sample_pairs < 1 || self.sample_pairs > self.solved_examples {
            return bad("sample_pairs must be between 1 and solved_examples");
        }
        Ok(())
    }
}

/// Shared services for one experiment.
pub struct Context<'a> {
    pub provider: &'a dyn ChatProvider,
    pub templates: &'a TemplateSet,
    pub sandbox: &'a Sandbox,
    pub solver: &'a SolverConfig,
    pub solver_time_limit: Duration,
    pub ledger: &'a Ledger,
}

/// Replay and request errors abort the experiment; provider failures are
/// absorbed by the caller.
fn is_fatal(e: &LlmError) -> bool {
    !matches!(e, LlmError::Provider { .. })
}

fn chat(
    ctx: &Context,
    cfg: &RunConfig,
    problem_id: &str,
    phase: Phase,
    messages: &[Message],
) -> Result<Result<ChatResponse, String>, OrchestratorError> {
    let request = ChatRequest {
        model_id: cfg.model_id.clone(),
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
        messages: messages.to_vec(),
    };
    match ctx.provider.complete(&request) {
        Ok(r) => {
            ctx.ledger.push(CallRecord {
                problem_id: problem_id.into(),
                method: cfg.method,
                phase,
                model_id: cfg.model_id.clone(),
                prompt_tokens: r.prompt_tokens,
                completion_tokens: r.completion_tokens,
            });
            Ok(Ok(r))
        }
        Err(e) if is_fatal(&e) => Err(e.into()),
        Err(e) => Ok(Err(e.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    AllCorrect,
    RoundsExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// User message sent this round.
    pub prompt: String,
    pub response: String,
    pub program: Option<String>,
    pub outcomes: Vec<Outcome>,
    pub correct: usize,
    /// Feedback sent after this round.
    pub feedback: Option<FeedbackKind>,
}

impl RoundRecord {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.outcomes.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub run: usize,
    pub rounds: Vec<RoundRecord>,
    pub stop: StopReason,
}

impl RefinementTrace {
    pub fn feedback_kinds(&self) -> Vec<FeedbackKind> {
        self.rounds.iter().filter_map(|r| r.feedback).collect()
    }

    /// Best round among the first `max_round + 1`: highest accuracy, later
    /// rounds winning ties. Rounds without a program never win.
    pub fn best_within(&self, max_round: usize) -> Option<&RoundRecord> {
        self.rounds.iter().take(max_round + 1).filter(|r| r.program.is_some()).fold(
            None,
            |best: Option<&RoundRecord>, r| match best {
                Some(b) if b.correct > r.correct => Some(b),
                _ => Some(r),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestProgram {
    pub source: String,
    pub training_accuracy: f64,
    pub run: usize,
    pub round: usize,
    pub tie_note: Option<String>,
}

/// Best program across runs using at most `max_round` feedback rounds.
/// Equal accuracies go to the lowest run index.
pub fn select_best(traces: &[RefinementTrace], max_round: usize) -> Option<BestProgram> {
    let candidates: Vec<(usize, &RoundRecord)> =
        traces.iter().filter_map(|t| t.best_within(max_round).map(|r| (t.run, r))).collect();
    let top = candidates.iter().map(|(_, r)| r.correct).max()?;
    let tied: Vec<usize> = candidates.iter().filter(|(_, r)| r.correct == top).map(|(run, _)| *run).collect();
    let (run, round) = candidates.iter().find(|(_, r)| r.correct == top).expect("top exists");
    Some(BestProgram {
        source: round.program.clone().expect("candidates have programs"),
        training_accuracy: round.accuracy(),
        run: *run,
        round: round.round,
        tie_note: (tied.len() > 1).then(|| {
            let runs: Vec<String> = tied.iter().map(|r| (r + 1).to_string()).collect();
            format!("runs {} tied; run {} kept", runs.join(", "), run + 1)
        }),
    })
}

fn samples(examples: &[TrainExample], count: usize) -> Vec<(String, String)> {
    examples
        .iter()
        .take(count)
        .map(|e| (e.instance.text.clone(), e.gold.first().unwrap_or_default().to_string()))
        .collect()
}

fn feedback_for(
    ctx: &Context,
    example: &TrainExample,
    outcome: &Outcome,
) -> Result<(FeedbackKind, String), OrchestratorError> {
    let input = &example.instance.text;
    let (kind, payload) = match outcome.kind {
        OutcomeKind::RuntimeError => (FeedbackKind::Runtime, runtime_payload(&outcome.detail, input)),
        OutcomeKind::Timeout => (FeedbackKind::Timeout, timeout_payload(ctx.sandbox.time_limit.as_secs_f64(), input)),
        OutcomeKind::WrongOutput => {
            let generated = match outcome.output.as_deref() {
                Some(t) if !t.trim().is_empty() => t.to_string(),
                Some(_) => "(empty output.txt)".to_string(),
                None => "(no output.txt was written)".to_string(),
            };
            let gold = example.gold.first().unwrap_or_default();
            (FeedbackKind::WrongOutput, wrong_output_payload(input, &generated, gold))
        }
        OutcomeKind::Correct => unreachable!("feedback is only built for failures"),
    };
    let text = render_feedback(ctx.templates, kind, &payload)?.text().to_string();
    Ok((kind, text))
}

/// One run of generate, evaluate and feedback on the solved examples.
pub fn refine_once(
    ctx: &Context,
    cfg: &RunConfig,
    spec: &ProblemSpec,
    adapter: &dyn ProblemAdapter,
    examples: &[TrainExample],
    run: usize,
) -> Result<RefinementTrace, OrchestratorError> {
    if !cfg.method.is_program() {
        return Err(OrchestratorError::Invalid(format!("{} does not synthesize programs", cfg.method)));
    }
    if examples.is_empty() {
        return Err(OrchestratorError::Invalid("no solved examples".into()));
    }
    let base = render_base(ctx.templates, cfg.method, spec, &samples(examples, cfg.sample_pairs), None)?;
    let instances: Vec<Instance> = examples.iter().map(|e| e.instance.clone()).collect();
    let mut messages = base.messages;
    let mut rounds = Vec::new();
    for round in 0..=cfg.feedback_rounds {
        let prompt = messages.last().expect("conversation is non-empty").content.clone();
        let (response, program, failure) = match chat(ctx, cfg, &spec.id, Phase::Train, &messages)? {
            Ok(r) => match extract_code(&r.text, "python") {
                Ok(code) => (r.text, Some(code), None),
                Err(e) => (r.text, None, Some(format!("{e}; write the complete Python program"))),
            },
            Err(e) => (String::new(), None, Some(e)),
        };
        let outcomes: Vec<Outcome> = match (&program, failure) {
            (Some(src), _) => ctx.sandbox.run_all(src, &instances, adapter)?.into_iter().map(|(o, _)| o).collect(),
            (None, failure) => {
                let detail = failure.unwrap_or_default();
                vec![Outcome::new(OutcomeKind::RuntimeError, detail); instances.len()]
            }
        };
        let correct = outcomes.iter().filter(|o| o.is_correct()).count();
        let mut record = RoundRecord { round, prompt, response, program, outcomes, correct, feedback: None };
        if correct == instances.len() {
            rounds.push(record);
            return Ok(RefinementTrace { run, rounds, stop: StopReason::AllCorrect });
        }
        if round == cfg.feedback_rounds {
            rounds.push(record);
            break;
        }
        let failing = record.outcomes.iter().position(|o| !o.is_correct()).expect("some example failed");
        let (kind, text) = feedback_for(ctx, &examples[failing], &record.outcomes[failing])?;
        record.feedback = Some(kind);
        messages.push(Message::assistant(record.response.clone()));
        messages.push(Message::user(text));
        rounds.push(record);
    }
    Ok(RefinementTrace { run, rounds, stop: StopReason::RoundsExhausted })
}

/// Run `source` on every test instance.
pub fn evaluate_program(
    sandbox: &Sandbox,
    adapter: &dyn ProblemAdapter,
    source: &str,
    test: &[Instance],
) -> Result<Vec<(Outcome, f64)>, SandboxError> {
    sandbox.run_all(source, test, adapter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramMethodOutput {
    pub traces: Vec<RefinementTrace>,
    /// Selected program allowing 0, 1, ... feedback rounds.
    pub selected: Vec<Option<BestProgram>>,
    pub results: Vec<InstanceResult>,
}

fn examples_for<'d>(cfg: &RunConfig, dataset: &'d Dataset) -> Result<&'d [TrainExample], OrchestratorError> {
    if dataset.train.len() < cfg.solved_examples {
        return Err(OrchestratorError::Invalid(format!(
            "{} has {} solved examples, {} requested",
            dataset.problem_id,
            dataset.train.len(),
            cfg.solved_examples
        )));
    }
    Ok(&dataset.train[..cfg.solved_examples])
}

/// SymPro-LM or PAL: R refinement runs, selection, then test evaluation of
/// the selected programs without further LLM calls.
pub fn run_program_method(
    ctx: &Context,
    cfg: &RunConfig,
    spec: &ProblemSpec,
    adapter: &dyn ProblemAdapter,
    dataset: &Dataset,
) -> Result<ProgramMethodOutput, OrchestratorError> {
    cfg.validate()?;
    let examples = examples_for(cfg, dataset)?;
    let mut traces = Vec::with_capacity(cfg.num_runs);
    for run in 0..cfg.num_runs {
        traces.push(refine_once(ctx, cfg, spec, adapter, examples, run)?);
    }
    let selected: Vec<Option<BestProgram>> = (0..=cfg.feedback_rounds).map(|f| select_best(&traces, f)).collect();

    let mut cache: BTreeMap<String, Vec<(Outcome, f64)>> = BTreeMap::new();
    let mut results = Vec::new();
    for (rounds, best) in selected.iter().enumerate() {
        let scored: Vec<(Outcome, f64)> = match best {
            Some(b) => {
                if !cache.contains_key(&b.source) {
                    let r = evaluate_program(ctx.sandbox, adapter, &b.source, &dataset.test)?;
                    cache.insert(b.source.clone(), r);
                }
                cache[&b.source].clone()
            }
            None => {
                let o = Outcome::new(OutcomeKind::RuntimeError, "no program was produced in any run");
                vec![(o, 0.0); dataset.test.len()]
            }
        };
        for (i, ((outcome, wall), inst)) in scored.into_iter().zip(&dataset.test).enumerate() {
            results.push(InstanceResult {
                problem_id: spec.id.clone(),
                instance: i,
                method: cfg.method,
                feedback_rounds: rounds,
                kind: outcome.kind.into(),
                detail: outcome.detail,
                size: inst.size.clone(),
                wall_time: wall,
            });
        }
    }
    Ok(ProgramMethodOutput { traces, selected, results })
}

/// Conversation and verdict for one test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTranscript {
    pub instance: usize,
    pub messages: Vec<Message>,
    pub kind: ResultKind,
    pub detail: String,
    /// Logic-LM only: the first translation failed to parse.
    #[serde(default)]
    pub first_round_syntactic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_status: Option<SolverStatus>,
}

/// Prompt once with the test instance and verify the reply.
pub fn run_fewshot(
    ctx: &Context,
    cfg: &RunConfig,
    spec: &ProblemSpec,
    adapter: &dyn ProblemAdapter,
    sample_pairs: &[(String, String)],
    instance: &Instance,
    index: usize,
) -> Result<InstanceTranscript, OrchestratorError> {
    let prompt = render_base(ctx.templates, Method::FewShot, spec, sample_pairs, Some(&instance.text))?;
    let mut messages = prompt.messages;
    let (kind, detail) = match chat(ctx, cfg, &spec.id, Phase::Test, &messages)? {
        Err(e) => (ResultKind::WrongOutput, e),
        Ok(r) => {
            messages.push(Message::assistant(r.text.clone()));
            if r.text.trim().is_empty() {
                (ResultKind::WrongOutput, "empty response".to_string())
            } else {
                let verdict = adapter.verify(instance, &extract_plain(&r.text));
                let kind = if verdict.is_correct() { ResultKind::Correct } else { ResultKind::WrongOutput };
                (kind, verdict.reason)
            }
        }
    };
    Ok(InstanceTranscript {
        instance: index,
        messages,
        kind,
        detail,
        first_round_syntactic: false,
        solver_status: None,
    })
}

/// Translate to SMT2, repair syntax errors with up to F feedback rounds,
/// solve, then have the model write the answer from the solver result.
pub fn run_logiclm(
    ctx: &Context,
    cfg: &RunConfig,
    spec: &ProblemSpec,
    adapter: &dyn ProblemAdapter,
    sample_pairs: &[(String, String)],
    instance: &Instance,
    index: usize,
) -> Result<InstanceTranscript, OrchestratorError> {
    let mut messages = render_logiclm(ctx.templates, spec, sample_pairs, &instance.text)?.messages;
    let mut first_round_syntactic = false;
    let done = |messages: Vec<Message>, kind, detail: String, first: bool, status| InstanceTranscript {
        instance: index,
        messages,
        kind,
        detail,
        first_round_syntactic: first,
        solver_status: status,
    };
    for round in 0..=cfg.feedback_rounds {
        let (response, verdict) = match chat(ctx, cfg, &spec.id, Phase::Test, &messages)? {
            Err(e) => (String::new(), Err(e)),
            Ok(r) => {
                let verdict = match extract_code(&r.text, "smt2") {
                    Err(e) => Err(e.to_string()),
                    Ok(code) => {
                        let v = check(ctx.solver, &SmtScript::new(code).with_model(), ctx.solver_time_limit)?;
                        if v.status == SolverStatus::SyntaxError {
                            Err(v.diagnostic.clone().unwrap_or_else(|| "syntax error".into()))
                        } else {
                            Ok(v)
                        }
                    }
                };
                (r.text, verdict)
            }
        };
        messages.push(Message::assistant(response));
        let verdict = match verdict {
            Ok(v) => v,
            Err(diagnostic) => {
                if round == 0 {
                    first_round_syntactic = true;
                }
                if round == cfg.feedback_rounds {
                    let status = Some(SolverStatus::SyntaxError);
                    return Ok(done(messages, ResultKind::Syntactic, diagnostic, first_round_syntactic, status));
                }
                let feedback = render_feedback(
                    ctx.templates,
                    FeedbackKind::Runtime,
                    &runtime_payload(&diagnostic, &instance.text),
                )?;
                messages.push(Message::user(feedback.text()));
                continue;
            }
        };
        if verdict.status == SolverStatus::Timeout {
            let detail = format!("solver exceeded {} s", ctx.solver_time_limit.as_secs_f64());
            return Ok(done(messages, ResultKind::Timeout, detail, first_round_syntactic, Some(verdict.status)));
        }
        let format_prompt = render_logiclm_format(ctx.templates, spec, &solver_info(&verdict))?;
        messages.push(Message::user(format_prompt.text()));
        let (kind, detail) = match chat(ctx, cfg, &spec.id, Phase::Test, &messages)? {
            Err(e) => (ResultKind::WrongOutput, e),
            Ok(r) => {
                messages.push(Message::assistant(r.text.clone()));
                let v = adapter.verify(instance, &extract_plain(&r.text));
                (if v.is_correct() { ResultKind::Correct } else { ResultKind::WrongOutput }, v.reason)
            }
        };
        return Ok(done(messages, kind, detail, first_round_syntactic, Some(verdict.status)));
    }
    unreachable!("the last round always returns")
}

/// Per-instance methods over a test set. Logic-LM yields results for 0 and
/// F feedback rounds.
fn run_per_instance(
    ctx: &Context,
    cfg: &RunConfig,
    spec: &ProblemSpec,
    adapter: &dyn ProblemAdapter,
    dataset: &Dataset,
) -> Result<(Vec<InstanceTranscript>, Vec<InstanceResult>), OrchestratorError> {
    cfg.validate()?;
    let pairs = samples(&dataset.train, cfg.sample_pairs);
    let mut transcripts = Vec::new();
    let mut results = Vec::new();
    for (i, inst) in dataset.test.iter().enumerate() {
        let t = match cfg.method {
            Method::FewShot => run_fewshot(ctx, cfg, spec, adapter, &pairs, inst, i)?,
            Method::LogicLm => run_logiclm(ctx, cfg, spec, adapter, &pairs, inst, i)?,
            m => return Err(OrchestratorError::Invalid(format!("{m} is not a per-instance method"))),
        };
        let result = |rounds: usize, kind: ResultKind, detail: &str| InstanceResult {
            problem_id: spec.id.clone(),
            instance: i,
            method: cfg.method,
            feedback_rounds: rounds,
            kind,
            detail: detail.to_string(),
            size: inst.size.clone(),
            wall_time: 0.0,
        };
        if cfg.method == Method::LogicLm && cfg.feedback_rounds > 0 {
            let (kind, detail) = if t.first_round_syntactic {
                (ResultKind::Syntactic, "syntax error in the first translation")
            } else {
                (t.kind, t.detail.as_str())
            };
            results.push(result(0, kind, detail));
            results.push(result(cfg.feedback_rounds, t.kind, &t.detail));
        } else {
            results.push(result(0, t.kind, &t.detail));
        }
        transcripts.push(t);
    }
    results.sort_by_key(|r| (r.feedback_rounds, r.instance));
    Ok((transcripts, results))
}

/// Everything one experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<InstanceResult>,
    pub traces: BTreeMap<(String, Method), Vec<RefinementTrace>>,
    pub selected: BTreeMap<(String, Method), Vec<Option<BestProgram>>>,
    pub transcripts: BTreeMap<(String, Method), Vec<InstanceTranscript>>,
    pub calls: Vec<CallRecord>,
    pub notes: Vec<String>,
}

impl ExperimentConfig {
    pub fn run_config(&self, method: Method) -> RunConfig {
        RunConfig {
            method,
            model_id: self.model.clone(),
            num_runs: self.num_runs,
            feedback_rounds: self.feedback_rounds,
            solved_examples: self.solved_examples,
            sample_pairs: self.sample_pairs,
            temperature: self.temperature(method),
            max_tokens: self.max_tokens,
        }
    }

    pub fn sandbox(&self) -> Sandbox {
        Sandbox::new(self.interpreter.clone(), self.time_limit, self.parallelism)
    }

    pub fn templates(&self) -> Result<TemplateSet, PromptError> {
        match &self.templates_dir {
            Some(dir) => TemplateSet::from_dir(dir),
            None => Ok(TemplateSet::builtin()),
        }
    }
}

/// Datasets for every configured problem: loaded from `dataset_dir` when
/// set, generated otherwise.
pub fn prepare_datasets(cfg: &ExperimentConfig, registry: &Registry) -> Result<Vec<Dataset>, OrchestratorError> {
    let mut out = Vec::new();
    for problem in &cfg.problems {
        let handle = registry.get(problem)?;
        if let Some(dir) = &cfg.dataset_dir {
            out.push(load_dataset(registry, &dir.join(problem))?);
            continue;
        }
        let (train_default, test_default) = handle.adapter.default_sizes();
        let train_size = cfg.train_sizes.get(problem).cloned().unwrap_or(train_default);
        let test_sizes = cfg.test_sizes.get(problem).cloned().unwrap_or_else(|| vec![test_default]);
        let (first, rest) = test_sizes
            .split_first()
            .ok_or_else(|| OrchestratorError::Invalid(format!("no test sizes for {problem}")))?;
        let mut dataset = build_dataset(
            registry,
            &DatasetRequest {
                problem_id: problem.clone(),
                train_count: cfg.solved_examples,
                test_count: cfg.test_count,
                train_size,
                test_size: first.clone(),
                seed: cfg.seed,
            },
        )?;
        for size in rest {
            add_test_instances(registry, &mut dataset, size, cfg.test_count)?;
        }
        out.push(dataset);
    }
    Ok(out)
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    registry: &Registry,
    datasets: &[Dataset],
    provider: &dyn ChatProvider,
) -> Result<ExperimentOutput, OrchestratorError> {
    let templates = cfg.templates()?;
    let sandbox = cfg.sandbox();
    let ledger = Ledger::new();
    let ctx = Context {
        provider,
        templates: &templates,
        sandbox: &sandbox,
        solver: &cfg.solver,
        solver_time_limit: cfg.solver_time_limit,
        ledger: &ledger,
    };
    let mut out = ExperimentOutput {
        results: Vec::new(),
        traces: BTreeMap::new(),
        selected: BTreeMap::new(),
        transcripts: BTreeMap::new(),
        calls: Vec::new(),
        notes: Vec::new(),
    };
    for problem in &cfg.problems {
        let handle = registry.get(problem)?;
        let dataset = datasets
            .iter()
            .find(|d| &d.problem_id == problem)
            .ok_or_else(|| OrchestratorError::Invalid(format!("no dataset for {problem}")))?;
        for &method in &cfg.methods {
            let run_cfg = cfg.run_config(method);
            let key = (problem.clone(), method);
            tracing::info!(problem = %problem, method = %method, "running");
            if method.is_program() {
                let o = run_program_method(&ctx, &run_cfg, &handle.spec, handle.adapter.as_ref(), dataset)?;
                for (f, best) in o.selected.iter().enumerate() {
                    if let Some(note) = best.as_ref().and_then(|b| b.tie_note.clone()) {
                        out.notes.push(format!("{problem} / {} with {f} feedback rounds: {note}", method.label()));
                    }
                }
                out.results.extend(o.results);
                out.traces.insert(key.clone(), o.traces);
                out.selected.insert(key, o.selected);
            } else {
                let (transcripts, results) =
                    run_per_instance(&ctx, &run_cfg, &handle.spec, handle.adapter.as_ref(), dataset)?;
                for t in &transcripts {
                    if let Some(s @ (SolverStatus::Unsat | SolverStatus::Unknown)) = t.solver_status {
                        out.notes.push(format!(
                            "{problem} / {} test {}: solver answered {s}; verdict {:?}",
                            method.label(),
                            t.instance,
                            t.kind
                        ));
                    }
                }
                out.results.extend(results);
                out.transcripts.insert(key, transcripts);
            }
        }
    }
    out.calls = ledger.records();
    Ok(out)
}

impl ExperimentOutput {
    pub fn report(&self, cfg: &ExperimentConfig) -> Result<ExperimentReport, OrchestratorError> {
        let prices = PriceTable(cfg.prices.clone());
        let cost = if prices.0.contains_key(&cfg.model) { Some(cost(&self.calls, &prices)?) } else { None };
        Ok(ExperimentReport::build(&cfg.model, &cfg.hash(), &self.results, &self.calls, cost, self.notes.clone())?)
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OrchestratorError + '_ {
    move |e| OrchestratorError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Fresh `<hash>-<unix seconds>` directory under the configured output dir.
pub fn output_dir(cfg: &ExperimentConfig) -> Result<PathBuf, OrchestratorError> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    std::fs::create_dir_all(&cfg.output_dir).map_err(io(&cfg.output_dir))?;
    for n in 0.. {
        let name = if n == 0 { format!("{}-{secs}", cfg.hash()) } else { format!("{}-{secs}.{n}", cfg.hash()) };
        let dir = cfg.output_dir.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io(&dir)(e)),
        }
    }
    unreachable!()
}

/// Write reports, timings and transcripts into `dir`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    output: &ExperimentOutput,
    dir: &Path,
) -> Result<ExperimentReport, OrchestratorError> {
    let report = output.report(cfg)?;
    for format in ["json", "csv", "markdown"] {
        report.emit(format, dir)?;
    }
    let config_copy = dir.join("config.txt");
    std::fs::write(&config_copy, output_config_text(cfg)).map_err(io(&config_copy))?;
    let timings = dir.join("timings.json");
    let body = serde_json::to_string_pretty(&crate::report::mean_times(&output.results)).expect("timings serialize");
    std::fs::write(&timings, body + "\n").map_err(io(&timings))?;

    let tdir = dir.join("transcripts");
    std::fs::create_dir_all(&tdir).map_err(io(&tdir))?;
    let mut files: BTreeMap<String, String> = BTreeMap::new();
    for ((problem, method), traces) in &output.traces {
        let body = files.entry(format!("{problem}.{method}.jsonl")).or_default();
        for t in traces {
            body.push_str(&serde_json::to_string(t).expect("trace serializes"));
            body.push('\n');
        }
    }
    for ((problem, method), ts) in &output.transcripts {
        let body = files.entry(format!("{problem}.{method}.jsonl")).or_default();
        for t in ts {
            body.push_str(&serde_json::to_string(t).expect("transcript serializes"));
            body.push('\n');
        }
    }
    for (name, body) in files {
        let path = tdir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(report)
}

fn output_config_text(cfg: &ExperimentConfig) -> String {
    cfg.normalized.iter().map(|l| format!("{l}\n")).collect()
}
