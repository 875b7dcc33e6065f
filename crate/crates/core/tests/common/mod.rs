//! Independent reference checkers and brute-force enumerators, written
//! straight from the problem rules without touching the adapters.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn rows(text: &str) -> Option<Vec<Vec<i64>>> {
    let mut lines: Vec<&str> = text.split('\n').map(str::trim).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
        .iter()
        .map(|l| {
            if l.is_empty() {
                return None;
            }
            l.split_whitespace().map(|t| t.parse::<i64>().ok()).collect()
        })
        .collect()
}

fn word(text: &str) -> Option<String> {
    let mut lines: Vec<&str> = text.split('\n').map(str::trim).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    match lines.as_slice() {
        [one] => Some(one.to_string()),
        _ => None,
    }
}

fn square(grid: &[Vec<i64>], n: usize) -> bool {
    grid.len() == n && grid.iter().all(|r| r.len() == n)
}

fn givens_kept(input: &[Vec<i64>], out: &[Vec<i64>]) -> bool {
    input.iter().zip(out).all(|(a, b)| a.iter().zip(b).all(|(x, y)| *x == 0 || x == y))
}

fn all_distinct(values: impl IntoIterator<Item = i64>) -> bool {
    let mut seen = BTreeSet::new();
    values.into_iter().all(|v| seen.insert(v))
}

fn is_latin(out: &[Vec<i64>], n: usize) -> bool {
    (0..n).all(|i| all_distinct(out[i].iter().copied()) && all_distinct(out.iter().map(|r| r[i])))
}

fn in_range(out: &[Vec<i64>], lo: i64, hi: i64) -> bool {
    out.iter().flatten().all(|v| (lo..=hi).contains(v))
}

fn edges_of(lines: &[Vec<i64>]) -> Vec<(usize, usize)> {
    lines.iter().map(|l| (l[0] as usize, l[1] as usize)).collect()
}

fn ham_path_exists(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![vec![false; n]; n];
    for (a, b) in edges {
        adj[*a][*b] = true;
        adj[*b][*a] = true;
    }
    fn extend(v: usize, seen: &mut Vec<bool>, count: usize, adj: &[Vec<bool>]) -> bool {
        if count == adj.len() {
            return true;
        }
        for u in 0..adj.len() {
            if adj[v][u] && !seen[u] {
                seen[u] = true;
                if extend(u, seen, count + 1, adj) {
                    return true;
                }
                seen[u] = false;
            }
        }
        false
    }
    (0..n).any(|s| {
        let mut seen = vec![false; n];
        seen[s] = true;
        extend(s, &mut seen, 1, &adj)
    })
}

fn min_cover(n: usize, edges: &[(usize, usize)]) -> usize {
    (0u64..1 << n)
        .filter(|s| edges.iter().all(|(a, b)| s >> a & 1 == 1 || s >> b & 1 == 1))
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

fn subset_reachable(values: &[i64], target: i64) -> bool {
    (1u64..1 << values.len())
        .any(|s| (0..values.len()).filter(|i| s >> i & 1 == 1).map(|i| values[i]).sum::<i64>() == target)
}

/// Does `output` solve `input` under the rules of `problem`?
pub fn brute_check(problem: &str, input: &str, output: &str) -> bool {
    let Some(inp) = rows(input) else { return false };
    match problem {
        "vertex-cover" => {
            let (n, k) = (inp[0][0] as usize, inp[0][1] as usize);
            let truth = min_cover(n, &edges_of(&inp[1..])) <= k;
            return word(output).as_deref() == Some(if truth { "YES" } else { "NO" });
        }
        "hamiltonian-path" => {
            let truth = ham_path_exists(inp[0][0] as usize, &edges_of(&inp[1..]));
            return word(output).as_deref() == Some(if truth { "YES" } else { "NO" });
        }
        "subset-sum" => {
            let (values, target) = (&inp[0], inp[1][0]);
            if word(output).as_deref() == Some("None") {
                return !subset_reachable(values, target);
            }
            let Some(out) = rows(output) else { return false };
            if out.len() != 1 || out[0].is_empty() {
                return false;
            }
            let mut pool = values.clone();
            for p in &out[0] {
                match pool.iter().position(|v| v == p) {
                    Some(i) => {
                        pool.remove(i);
                    }
                    None => return false,
                }
            }
            return out[0].iter().sum::<i64>() == target;
        }
        _ => {}
    }
    let Some(out) = rows(output) else { return false };
    match problem {
        "sudoku" | "latin-square" => {
            let n = inp.len();
            if !square(&out, n) || !in_range(&out, 1, n as i64) || !givens_kept(&inp, &out) || !is_latin(&out, n) {
                return false;
            }
            if problem == "sudoku" {
                let k = (1..=n).find(|k| k * k == n).unwrap();
                for br in 0..k {
                    for bc in 0..k {
                        let cells = (0..n).map(|i| out[br * k + i / k][bc * k + i % k]);
                        if !all_distinct(cells) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        "magic-square" => {
            let n = inp.len();
            let m = (n * (n * n + 1) / 2) as i64;
            square(&out, n)
                && in_range(&out, 1, (n * n) as i64)
                && givens_kept(&inp, &out)
                && all_distinct(out.iter().flatten().copied())
                && (0..n).all(|i| out[i].iter().sum::<i64>() == m && out.iter().map(|r| r[i]).sum::<i64>() == m)
                && (0..n).map(|i| out[i][i]).sum::<i64>() == m
                && (0..n).map(|i| out[i][n - 1 - i]).sum::<i64>() == m
        }
        "sujiko" => {
            let n = inp[0].len();
            let (board, sums) = inp.split_at(n);
            square(&out, n)
                && in_range(&out, 1, (n * n) as i64)
                && givens_kept(board, &out)
                && all_distinct(out.iter().flatten().copied())
                && (0..n - 1).all(|r| {
                    (0..n - 1).all(|c| out[r][c] + out[r][c + 1] + out[r + 1][c] + out[r + 1][c + 1] == sums[r][c])
                })
        }
        "futoshiki" => {
            let n = inp[0].len();
            let (board, pairs) = inp.split_at(n);
            let cell = |i: i64| out[i as usize / n][i as usize % n];
            square(&out, n)
                && in_range(&out, 1, n as i64)
                && givens_kept(board, &out)
                && is_latin(&out, n)
                && pairs.iter().all(|p| cell(p[0]) < cell(p[1]))
        }
        "survo" => {
            let m = inp.len() - 1;
            let n = inp[m].len();
            let board: Vec<Vec<i64>> = inp[..m].iter().map(|r| r[..n].to_vec()).collect();
            out.len() == m
                && out.iter().all(|r| r.len() == n)
                && in_range(&out, 1, (m * n) as i64)
                && givens_kept(&board, &out)
                && all_distinct(out.iter().flatten().copied())
                && (0..m).all(|r| out[r].iter().sum::<i64>() == inp[r][n])
                && (0..n).all(|c| out.iter().map(|r| r[c]).sum::<i64>() == inp[m][c])
        }
        "binairo" => {
            let n = inp.len();
            if !square(&out, n) || !in_range(&out, 1, 2) || !givens_kept(&inp, &out) {
                return false;
            }
            let cols: Vec<Vec<i64>> = (0..n).map(|c| out.iter().map(|r| r[c]).collect()).collect();
            [&out, &cols].iter().all(|lines| {
                lines.iter().all(|l| {
                    l.iter().filter(|v| **v == 1).count() * 2 == n
                        && l.windows(3).all(|w| !(w[0] == w[1] && w[1] == w[2]))
                }) && (0..n).all(|i| (i + 1..n).all(|j| lines[i] != lines[j]))
            })
        }
        "n-queens" => {
            let n = inp.len();
            if !square(&out, n) || !in_range(&out, 0, 1) || !givens_kept(&inp, &out) {
                return false;
            }
            let q: Vec<(i64, i64)> = (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .filter(|(r, c)| out[*r][*c] == 1)
                .map(|(r, c)| (r as i64, c as i64))
                .collect();
            q.len() == n
                && q.iter().enumerate().all(|(i, a)| {
                    q[i + 1..].iter().all(|b| a.0 != b.0 && a.1 != b.1 && (a.0 - b.0).abs() != (a.1 - b.1).abs())
                })
        }
        "graph-coloring" => {
            let (n, k) = (inp[0][0] as usize, inp[0][1]);
            out.len() == 1
                && out[0].len() == n
                && out[0].iter().all(|c| (0..k).contains(c))
                && edges_of(&inp[1..]).iter().all(|(a, b)| out[0][*a] != out[0][*b])
        }
        other => panic!("no brute checker for {other}"),
    }
}

fn write(grid: &[Vec<i64>]) -> String {
    grid.iter().map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(" ") + "\n").collect()
}

/// Fill the zero cells of `board` with every combination from `domain`
/// (or every arrangement of `domain` when `permute`), keeping those that
/// pass `brute_check`.
fn fill_all(problem: &str, input: &str, board: &[Vec<i64>], domain: &[i64], permute: bool) -> BTreeSet<String> {
    let blanks: Vec<(usize, usize)> = board
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().filter(|(_, v)| **v == 0).map(move |(c, _)| (r, c)))
        .collect();
    let mut out = BTreeSet::new();
    let mut g = board.to_vec();
    fn rec(
        i: usize,
        blanks: &[(usize, usize)],
        g: &mut Vec<Vec<i64>>,
        pool: &mut Vec<i64>,
        permute: bool,
        accept: &mut dyn FnMut(&[Vec<i64>]),
    ) {
        if i == blanks.len() {
            accept(g);
            return;
        }
        let (r, c) = blanks[i];
        for j in 0..pool.len() {
            let v = pool[j];
            g[r][c] = v;
            if permute {
                pool.remove(j);
                rec(i + 1, blanks, g, pool, permute, accept);
                pool.insert(j, v);
            } else {
                rec(i + 1, blanks, g, pool, permute, accept);
            }
        }
        g[r][c] = 0;
    }
    let mut pool: Vec<i64> = if permute {
        let used: BTreeSet<i64> = board.iter().flatten().copied().collect();
        domain.iter().copied().filter(|v| !used.contains(v)).collect()
    } else {
        domain.to_vec()
    };
    if permute && pool.len() != blanks.len() {
        return out;
    }
    rec(0, &blanks, &mut g, &mut pool, permute, &mut |grid| {
        let text = write(grid);
        if brute_check(problem, input, &text) {
            out.insert(text);
        }
    });
    out
}

/// Every solution of a small instance, by exhaustive enumeration. Subset
/// answers are written with their elements sorted.
pub fn brute_solutions(problem: &str, input: &str) -> BTreeSet<String> {
    let inp = rows(input).expect("instance parses");
    match problem {
        "sudoku" | "latin-square" => {
            let n = inp.len() as i64;
            fill_all(problem, input, &inp, &(1..=n).collect::<Vec<_>>(), false)
        }
        "futoshiki" => {
            let n = inp[0].len();
            fill_all(problem, input, &inp[..n], &(1..=n as i64).collect::<Vec<_>>(), false)
        }
        "binairo" => fill_all(problem, input, &inp, &[1, 2], false),
        "magic-square" => {
            let n = inp.len() as i64;
            fill_all(problem, input, &inp, &(1..=n * n).collect::<Vec<_>>(), true)
        }
        "sujiko" => {
            let n = inp[0].len();
            fill_all(problem, input, &inp[..n], &(1..=(n * n) as i64).collect::<Vec<_>>(), true)
        }
        "survo" => {
            let m = inp.len() - 1;
            let n = inp[m].len();
            let board: Vec<Vec<i64>> = inp[..m].iter().map(|r| r[..n].to_vec()).collect();
            fill_all(problem, input, &board, &(1..=(m * n) as i64).collect::<Vec<_>>(), true)
        }
        "n-queens" => {
            let n = inp.len();
            let mut out = BTreeSet::new();
            let mut cols: Vec<usize> = (0..n).collect();
            permutations(&mut cols, 0, &mut |perm| {
                let g: Vec<Vec<i64>> = perm.iter().map(|c| (0..n).map(|j| i64::from(j == *c)).collect()).collect();
                let text = write(&g);
                if brute_check(problem, input, &text) {
                    out.insert(text);
                }
            });
            out
        }
        "graph-coloring" => {
            let (n, k) = (inp[0][0] as u32, inp[0][1] as u64);
            (0..k.pow(n))
                .map(|code| {
                    let colors: Vec<i64> = (0..n).map(|i| (code / k.pow(i) % k) as i64).collect();
                    write(&[colors])
                })
                .filter(|t| brute_check(problem, input, t))
                .collect()
        }
        "vertex-cover" | "hamiltonian-path" => {
            ["YES\n", "NO\n"].into_iter().filter(|t| brute_check(problem, input, t)).map(String::from).collect()
        }
        "subset-sum" => {
            let (values, target) = (&inp[0], inp[1][0]);
            let mut out: BTreeSet<String> = (1u64..1 << values.len())
                .filter_map(|s| {
                    let mut picked: Vec<i64> =
                        (0..values.len()).filter(|i| s >> i & 1 == 1).map(|i| values[i]).collect();
                    picked.sort_unstable();
                    (picked.iter().sum::<i64>() == target).then(|| write(&[picked]))
                })
                .collect();
            if out.is_empty() {
                out.insert("None\n".into());
            }
            out
        }
        other => panic!("no brute enumerator for {other}"),
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Sort the elements of a one-line subset answer.
pub fn sorted_subset(text: &str) -> String {
    if text.trim() == "None" {
        return "None\n".into();
    }
    let mut v: Vec<i64> = text.split_whitespace().map(|t| t.parse().unwrap()).collect();
    v.sort_unstable();
    write(&[v])
}

/// Small perturbations of a candidate output, some of which stay correct.
pub fn mutants(output: &str, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::new();
    let trimmed = output.trim_end();
    match trimmed {
        "YES" => out.push("NO\n".into()),
        "NO" => out.push("YES\n".into()),
        "None" => out.push("1\n".into()),
        _ => {}
    }
    let lines: Vec<Vec<String>> = trimmed.lines().map(|l| l.split_whitespace().map(String::from).collect()).collect();
    let join = |ls: &[Vec<String>]| -> String { ls.iter().map(|l| l.join(" ") + "\n").collect() };
    let positions: Vec<(usize, usize)> =
        lines.iter().enumerate().flat_map(|(r, l)| (0..l.len()).map(move |c| (r, c))).collect();
    if let Some(&(r, c)) = positions.choose(rng) {
        let mut m = lines.clone();
        let old: i64 = m[r][c].parse().unwrap_or(0);
        m[r][c] = (old + rng.gen_range(1..4)).to_string();
        out.push(join(&m));
    }
    if positions.len() >= 2 {
        let a = *positions.choose(rng).unwrap();
        let b = *positions.choose(rng).unwrap();
        let mut m = lines.clone();
        let tmp = m[a.0][a.1].clone();
        m[a.0][a.1] = m[b.0][b.1].clone();
        m[b.0][b.1] = tmp;
        out.push(join(&m));
    }
    if lines.len() > 1 {
        out.push(join(&lines[..lines.len() - 1]));
    }
    out.push(format!("{trimmed}\nDone.\n"));
    out.push(format!("{trimmed}\n\n"));
    out.push(String::new());
    out
}

/// Source of a fixture program under `tests/fixtures/<problem>/<variant>.py`.
pub fn fixture(problem: &str, variant: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(problem)
        .join(format!("{variant}.py"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Contents of `tests/fixtures/smt/<name>`.
pub fn smt_fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/smt").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Integer model values `<prefix>0 .. <prefix>{n-1}` as one output line.
pub fn model_line(verdict: &fcore::smt::SolverVerdict, names: &[String]) -> String {
    let vals: Vec<String> = names
        .iter()
        .map(|n| match verdict.value(n) {
            Some(fcore::smt::Value::Int(v)) => v.to_string(),
            other => panic!("{n}: {other:?}"),
        })
        .collect();
    vals.join(" ") + "\n"
}

/// Fenced Python reply around a fixture program.
pub fn python_reply(problem: &str, variant: &str) -> String {
    format!("```python\n{}```\n", fixture(problem, variant))
}

/// Test double that answers every prompt correctly: golden fixture programs
/// for the program methods and reference-solver outputs for the rest.
pub struct FixtureProvider {
    registry: fcore::problem::Registry,
}

impl FixtureProvider {
    pub fn new() -> Self {
        Self { registry: fcore::problem::Registry::builtin() }
    }

    fn problem(&self, prompt: &str) -> &fcore::problem::ProblemHandle {
        self.registry
            .ids()
            .map(|id| self.registry.get(id).unwrap())
            .find(|h| prompt.contains(h.spec.rules_text.trim_end()))
            .expect("prompt carries a shipped rules text")
    }

    fn solve(&self, handle: &fcore::problem::ProblemHandle, text: &str) -> String {
        let inst = handle.adapter.instance_from_text(text).unwrap();
        match handle.adapter.solve(&inst).unwrap() {
            fcore::problem::Solution::Found(s) => s,
            fcore::problem::Solution::Infeasible => "None\n".into(),
        }
    }
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> &'a str {
    let from = text.find(start).expect("start marker") + start.len();
    let rest = &text[from..];
    &rest[..rest.find(end).unwrap_or(rest.len())]
}

impl fcore::llm::ChatProvider for FixtureProvider {
    fn complete(&self, request: &fcore::llm::ChatRequest) -> Result<fcore::llm::ChatResponse, fcore::llm::LlmError> {
        let first = &request.messages[0].content;
        let last = &request.messages.last().unwrap().content;
        let handle = self.problem(first);
        let id = handle.spec.id.as_str();
        let text = if first.contains("pass to the Z3 solver") {
            python_reply(id, if id == "binairo" { "symprolm_fixed" } else { "symprolm" })
        } else if first.contains("must only use standard Python libraries") {
            let pal = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/{id}/pal.py"));
            python_reply(
                id,
                if pal.exists() {
                    "pal"
                } else if id == "binairo" {
                    "symprolm_fixed"
                } else {
                    "symprolm"
                },
            )
        } else if first.contains("Enclose SMT2 code in") {
            if request.messages.len() == 1 {
                "```smt2\n(declare-const x Int)\n(assert (> x 0))\n(check-sat)\n```\n".to_string()
            } else {
                assert!(last.contains("run through the solver"));
                self.solve(handle, between(first, "Input problem to be solved:\n", "\n\nThe task is"))
            }
        } else {
            self.solve(handle, between(first, "Input problem instance to be solved:\n", "\u{0}"))
        };
        let prompt_chars: usize = request.messages.iter().map(|m| m.content.len()).sum();
        Ok(fcore::llm::ChatResponse {
            prompt_tokens: (prompt_chars / 4) as u64,
            completion_tokens: (text.len() / 4) as u64,
            text,
            latency_ms: 0,
        })
    }
}

/// Record a cassette of `provider`'s replies while running `body`.
pub fn record<P: fcore::llm::ChatProvider, T>(
    provider: P,
    path: &std::path::Path,
    body: impl FnOnce(&dyn fcore::llm::ChatProvider) -> T,
) -> T {
    let recorder = fcore::llm::RecordingProvider::to_file(provider, path).unwrap();
    let out = body(&recorder);
    drop(recorder);
    out
}

/// Random result ledger drawing each kind from its method's taxonomy.
pub fn random_results(rng: &mut ChaCha8Rng, n: usize) -> Vec<fcore::report::InstanceResult> {
    use fcore::prompt::Method;
    use fcore::report::ResultKind;
    let problems = ["sudoku", "survo", "subset-sum"];
    (0..n)
        .map(|i| {
            let method = Method::ALL[rng.gen_range(0..4)];
            let kinds = ResultKind::taxonomy(method);
            fcore::report::InstanceResult {
                problem_id: problems[rng.gen_range(0..problems.len())].to_string(),
                instance: i,
                method,
                feedback_rounds: if method == Method::FewShot { 0 } else { rng.gen_range(0..3) },
                kind: kinds[rng.gen_range(0..kinds.len())],
                detail: String::new(),
                size: fcore::problem::SizeDescriptor::new().with("grid_n", [4, 9, 16][rng.gen_range(0..3)]),
                wall_time: 0.0,
            }
        })
        .collect()
}

/// Checks that every report cell and summary histogram partitions its
/// results into the method's taxonomy. Returns a description of the first
/// violation.
pub fn partition_violation(results: &[fcore::report::InstanceResult]) -> Option<String> {
    use fcore::report::{ExperimentReport, ResultKind};
    let report = ExperimentReport::build("m", "h", results, &[], None, vec![]).ok()?;
    for c in &report.cells {
        let n: usize = c.histogram.values().sum();
        if n != c.total {
            return Some(format!("{c:?}: histogram sums to {n}"));
        }
        if c.histogram.keys().any(|k| !ResultKind::taxonomy(c.method).contains(k)) {
            return Some(format!("{c:?}: kind outside taxonomy"));
        }
        let correct = c.histogram.get(&ResultKind::Correct).copied().unwrap_or(0);
        if (c.accuracy - correct as f64 / c.total as f64).abs() > 1e-12 {
            return Some(format!("{c:?}: accuracy disagrees with histogram"));
        }
    }
    let total: usize = report.summaries.iter().flat_map(|s| s.histogram.values()).sum();
    (total != results.len()).then(|| format!("summaries cover {total} of {} results", results.len()))
}
