//! Scoring, aggregation and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{CallRecord, CostSummary, Phase};
use crate::problem::SizeDescriptor;
use crate::prompt::Method;
use crate::sandbox::OutcomeKind;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no results to score")]
    Empty,
    #[error("result for {0} lacks size dimension `{1}`")]
    MissingDimension(String, String),
    #[error("unknown report format `{0}`")]
    Format(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Scored outcome of one test instance. Program methods use the first four
/// kinds; Logic-LM adds `Syntactic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResultKind {
    Correct,
    WrongOutput,
    RuntimeError,
    Timeout,
    Syntactic,
}

impl ResultKind {
    pub const ALL: [ResultKind; 5] = [
        ResultKind::Correct,
        ResultKind::WrongOutput,
        ResultKind::RuntimeError,
        ResultKind::Timeout,
        ResultKind::Syntactic,
    ];

    /// Kinds `method` can produce.
    pub fn taxonomy(method: Method) -> &'static [ResultKind] {
        match method {
            Method::FewShot => &[ResultKind::Correct, ResultKind::WrongOutput],
            Method::LogicLm => {
                &[ResultKind::Correct, ResultKind::WrongOutput, ResultKind::Timeout, ResultKind::Syntactic]
            }
            Method::Pal | Method::SymProLm => {
                &[ResultKind::Correct, ResultKind::WrongOutput, ResultKind::RuntimeError, ResultKind::Timeout]
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ResultKind::Correct => "Correct",
            ResultKind::WrongOutput => "Wrong Output",
            ResultKind::RuntimeError => "Runtime Error",
            ResultKind::Timeout => "Timeout",
            ResultKind::Syntactic => "Syntactic Error",
        }
    }
}

impl From<OutcomeKind> for ResultKind {
    fn from(k: OutcomeKind) -> Self {
        match k {
            OutcomeKind::Correct => ResultKind::Correct,
            OutcomeKind::WrongOutput => ResultKind::WrongOutput,
            OutcomeKind::RuntimeError => ResultKind::RuntimeError,
            OutcomeKind::Timeout => ResultKind::Timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub problem_id: String,
    /// Position in the test set.
    pub instance: usize,
    pub method: Method,
    /// Feedback rounds available when the scored answer was produced.
    pub feedback_rounds: usize,
    pub kind: ResultKind,
    pub detail: String,
    pub size: SizeDescriptor,
    pub wall_time: f64,
}

/// Fraction of results that are correct.
pub fn score(results: &[&InstanceResult]) -> Result<f64, ReportError> {
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    let correct = results.iter().filter(|r| r.kind == ResultKind::Correct).count();
    Ok(correct as f64 / results.len() as f64)
}

/// Unweighted mean of per-problem accuracies.
pub fn macro_average(accuracies: &[f64]) -> Result<f64, ReportError> {
    if accuracies.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(accuracies.iter().sum::<f64>() / accuracies.len() as f64)
}

pub fn histogram(results: &[&InstanceResult]) -> BTreeMap<ResultKind, usize> {
    let mut h = BTreeMap::new();
    for r in results {
        *h.entry(r.kind).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub bucket: String,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Accuracy per value of `dimension`, or per whole size descriptor when
/// `dimension` is `None`. Buckets are ordered by dimension value.
pub fn size_breakdown(results: &[&InstanceResult], dimension: Option<&str>) -> Result<Vec<SizePoint>, ReportError> {
    let mut buckets: BTreeMap<(u32, String), (usize, usize)> = BTreeMap::new();
    for r in results {
        let key = match dimension {
            Some(d) => {
                let v = r.size.get(d).ok_or_else(|| ReportError::MissingDimension(r.problem_id.clone(), d.into()))?;
                (v, format!("{d}={v}"))
            }
            None => (r.size.dims().map(|(_, v)| v).sum(), r.size.to_string()),
        };
        let e = buckets.entry(key).or_insert((0, 0));
        e.0 += 1;
        if r.kind == ResultKind::Correct {
            e.1 += 1;
        }
    }
    Ok(buckets
        .into_iter()
        .map(|((_, bucket), (total, correct))| SizePoint {
            bucket,
            total,
            correct,
            accuracy: correct as f64 / total as f64,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub problem_id: String,
    pub method: Method,
    pub feedback_rounds: usize,
    pub total: usize,
    pub accuracy: f64,
    pub histogram: BTreeMap<ResultKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub feedback_rounds: usize,
    pub macro_average: f64,
    /// Outcome counts over all problems.
    pub histogram: BTreeMap<ResultKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeCurve {
    pub problem_id: String,
    pub method: Method,
    pub points: Vec<SizePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundCurve {
    pub method: Method,
    /// Macro-average with 0, 1, ... feedback rounds.
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallCount {
    pub problem_id: String,
    pub method: Method,
    pub phase: Phase,
    pub calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: String,
    pub config_hash: String,
    pub problems: Vec<String>,
    pub cells: Vec<Cell>,
    pub summaries: Vec<MethodSummary>,
    pub size_curves: Vec<SizeCurve>,
    pub round_curves: Vec<RoundCurve>,
    pub calls: Vec<CallCount>,
    pub cost: Option<CostSummary>,
    /// Free-form notes, e.g. unsat answers handed to the formatter.
    pub notes: Vec<String>,
}

fn max_rounds(results: &[InstanceResult], method: Method) -> usize {
    results.iter().filter(|r| r.method == method).map(|r| r.feedback_rounds).max().unwrap_or(0)
}

impl ExperimentReport {
    pub fn build(
        model: &str,
        config_hash: &str,
        results: &[InstanceResult],
        calls: &[CallRecord],
        cost: Option<CostSummary>,
        notes: Vec<String>,
    ) -> Result<Self, ReportError> {
        let mut groups: BTreeMap<(Method, usize, String), Vec<&InstanceResult>> = BTreeMap::new();
        for r in results {
            groups.entry((r.method, r.feedback_rounds, r.problem_id.clone())).or_default().push(r);
        }
        let mut problems: Vec<String> = results.iter().map(|r| r.problem_id.clone()).collect();
        problems.sort();
        problems.dedup();

        let mut cells = Vec::new();
        for ((method, rounds, problem_id), rs) in &groups {
            cells.push(Cell {
                problem_id: problem_id.clone(),
                method: *method,
                feedback_rounds: *rounds,
                total: rs.len(),
                accuracy: score(rs)?,
                histogram: histogram(rs),
            });
        }

        let mut per_setting: BTreeMap<(Method, usize), Vec<&Cell>> = BTreeMap::new();
        for c in &cells {
            per_setting.entry((c.method, c.feedback_rounds)).or_default().push(c);
        }
        let mut summaries = Vec::new();
        for ((method, rounds), cs) in &per_setting {
            let mut hist = BTreeMap::new();
            for c in cs {
                for (k, n) in &c.histogram {
                    *hist.entry(*k).or_insert(0) += n;
                }
            }
            let accs: Vec<f64> = cs.iter().map(|c| c.accuracy).collect();
            summaries.push(MethodSummary {
                method: *method,
                feedback_rounds: *rounds,
                macro_average: macro_average(&accs)?,
                histogram: hist,
            });
        }

        let mut round_curves = Vec::new();
        for method in Method::ALL.into_iter().filter(|m| m.is_program()) {
            let accuracies: Vec<f64> =
                summaries.iter().filter(|s| s.method == method).map(|s| s.macro_average).collect();
            if !accuracies.is_empty() {
                round_curves.push(RoundCurve { method, accuracies });
            }
        }

        let mut size_curves = Vec::new();
        for ((method, rounds, problem_id), rs) in &groups {
            if *rounds == max_rounds(results, *method) {
                size_curves.push(SizeCurve {
                    problem_id: problem_id.clone(),
                    method: *method,
                    points: size_breakdown(rs, None)?,
                });
            }
        }

        let mut counts: BTreeMap<(String, Method, Phase), usize> = BTreeMap::new();
        for c in calls {
            *counts.entry((c.problem_id.clone(), c.method, c.phase)).or_insert(0) += 1;
        }
        let calls = counts
            .into_iter()
            .map(|((problem_id, method, phase), calls)| CallCount { problem_id, method, phase, calls })
            .collect();

        Ok(Self {
            model: model.into(),
            config_hash: config_hash.into(),
            problems,
            cells,
            summaries,
            size_curves,
            round_curves,
            calls,
            cost,
            notes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    fn cell(&self, problem: &str, method: Method, refined: bool) -> Option<&Cell> {
        let rounds = self.cells.iter().filter(|c| c.method == method).map(|c| c.feedback_rounds);
        let target = if refined { rounds.max()? } else { rounds.min()? };
        self.cells.iter().find(|c| c.problem_id == problem && c.method == method && c.feedback_rounds == target)
    }

    fn summary(&self, method: Method, refined: bool) -> Option<&MethodSummary> {
        let rounds = self.summaries.iter().filter(|s| s.method == method).map(|s| s.feedback_rounds);
        let target = if refined { rounds.max()? } else { rounds.min()? };
        self.summaries.iter().find(|s| s.method == method && s.feedback_rounds == target)
    }

    /// Main-table columns: few-shot, then each other method before and after
    /// feedback.
    fn columns() -> Vec<(Method, bool, &'static str)> {
        vec![
            (Method::FewShot, false, "Few-Shot"),
            (Method::Pal, false, "PAL (-)"),
            (Method::Pal, true, "PAL (+)"),
            (Method::LogicLm, false, "Logic-LM (-)"),
            (Method::LogicLm, true, "Logic-LM (+)"),
            (Method::SymProLm, false, "SymPro-LM (-)"),
            (Method::SymProLm, true, "SymPro-LM (+)"),
        ]
    }

    pub fn to_markdown(&self) -> String {
        let pct = |v: Option<f64>| v.map(|a| format!("{:.2}", a * 100.0)).unwrap_or_else(|| "-".into());
        let cols = Self::columns();
        let header = |first: &str| {
            let mut s = format!("| {first} |");
            for (_, _, label) in &cols {
                let _ = write!(s, " {label} |");
            }
            s.push('\n');
            s.push('|');
            s.push_str(&"---|".repeat(cols.len() + 1));
            s.push('\n');
            s
        };

        let mut out = String::new();
        let _ = writeln!(out, "# Results\n\nConfig `{}`.\n\n## Macro-average accuracy (%)\n", self.config_hash);
        out.push_str(&header("Model"));
        let _ = write!(out, "| {} |", self.model);
        for (m, refined, _) in &cols {
            let _ = write!(out, " {} |", pct(self.summary(*m, *refined).map(|s| s.macro_average)));
        }
        out.push_str("\n\n## Per-problem accuracy (%)\n\n");
        out.push_str(&header("Problem"));
        for p in &self.problems {
            let _ = write!(out, "| {p} |");
            for (m, refined, _) in &cols {
                let _ = write!(out, " {} |", pct(self.cell(p, *m, *refined).map(|c| c.accuracy)));
            }
            out.push('\n');
        }

        out.push_str("\n## Outcomes after feedback (%)\n\n| Outcome |");
        let methods: Vec<Method> =
            Method::ALL.into_iter().filter(|m| self.summaries.iter().any(|s| s.method == *m)).collect();
        for m in &methods {
            let _ = write!(out, " {} |", m.label());
        }
        out.push_str("\n|");
        out.push_str(&"---|".repeat(methods.len() + 1));
        out.push('\n');
        for kind in ResultKind::ALL {
            let _ = write!(out, "| {} |", kind.label());
            for m in &methods {
                let s = self.summary(*m, true).expect("method has a summary");
                let total: usize = s.histogram.values().sum();
                let cell = if ResultKind::taxonomy(*m).contains(&kind) {
                    pct(Some(s.histogram.get(&kind).copied().unwrap_or(0) as f64 / total.max(1) as f64))
                } else {
                    "-".into()
                };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }

        if !self.round_curves.is_empty() {
            out.push_str("\n## Accuracy by feedback rounds (%)\n\n");
            for c in &self.round_curves {
                let pts: Vec<String> = c.accuracies.iter().map(|a| pct(Some(*a))).collect();
                let _ = writeln!(out, "- {}: {}", c.method.label(), pts.join(", "));
            }
        }
        if !self.size_curves.is_empty() {
            out.push_str("\n## Accuracy by instance size (%)\n\n");
            for c in &self.size_curves {
                let pts: Vec<String> =
                    c.points.iter().map(|p| format!("{}: {}", p.bucket, pct(Some(p.accuracy)))).collect();
                let _ = writeln!(out, "- {} / {}: {}", c.problem_id, c.method.label(), pts.join("; "));
            }
        }
        if let Some(cost) = &self.cost {
            let _ = writeln!(out, "\n## Cost\n\nTotal: {:.4}", cost.total);
        }
        if !self.notes.is_empty() {
            out.push_str("\n## Notes\n\n");
            for n in &self.notes {
                let _ = writeln!(out, "- {n}");
            }
        }
        out
    }

    /// One row per problem.
    pub fn to_csv(&self) -> String {
        let cols = Self::columns();
        let mut out = String::from("problem");
        for (_, _, label) in &cols {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
        for p in &self.problems {
            out.push_str(p);
            for (m, refined, _) in &cols {
                match self.cell(p, *m, *refined) {
                    Some(c) => {
                        let _ = write!(out, ",{}", c.accuracy);
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Write `report.<ext>` under `dir`.
    pub fn emit(&self, format: &str, dir: &Path) -> Result<std::path::PathBuf, ReportError> {
        let (name, body) = match format {
            "json" => ("report.json", self.to_json()),
            "csv" => ("report.csv", self.to_csv()),
            "markdown" | "md" => ("report.md", self.to_markdown()),
            other => return Err(ReportError::Format(other.into())),
        };
        let path = dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| ReportError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Ok(path)
    }
}

/// Mean wall time per (problem, method) over the most-refined results.
pub fn mean_times(results: &[InstanceResult]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in results {
        if r.feedback_rounds == max_rounds(results, r.method) {
            let e = acc.entry(format!("{}/{}", r.problem_id, r.method)).or_insert((0.0, 0));
            e.0 += r.wall_time;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (t, n))| (k, t / n as f64)).collect()
}
