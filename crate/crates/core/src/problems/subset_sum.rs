use std::collections::BTreeSet;

use rand::Rng;

use super::{budget_error, size_error, text, Puzzle, GENERATION_ATTEMPTS, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "subset-sum";

/// Largest element drawn by the generator.
const MAX_ELEMENT: u64 = 30;

pub struct SubsetSum;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetInput {
    pub values: Vec<u64>,
    pub target: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetAnswer {
    None,
    /// Chosen elements, in input order.
    Picks(Vec<u64>),
}

/// Distinct multisets summing to the target, each written in input order,
/// up to `limit`.
fn subsets(input: &SubsetInput, limit: usize) -> Result<Vec<Vec<u64>>, ProblemError> {
    let n = input.values.len();
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + input.values[i];
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut picked = Vec::new();
    let mut nodes = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn walk(
        i: usize,
        remaining: u64,
        values: &[u64],
        suffix: &[u64],
        picked: &mut Vec<u64>,
        seen: &mut BTreeSet<Vec<u64>>,
        out: &mut Vec<Vec<u64>>,
        limit: usize,
        nodes: &mut u64,
    ) -> Result<(), ()> {
        *nodes += 1;
        if *nodes > SEARCH_BUDGET {
            return Err(());
        }
        if out.len() >= limit {
            return Ok(());
        }
        if remaining == 0 {
            let mut key = picked.clone();
            key.sort_unstable();
            if !picked.is_empty() && seen.insert(key) {
                out.push(picked.clone());
            }
            return Ok(());
        }
        if i == values.len() || suffix[i] < remaining {
            return Ok(());
        }
        if values[i] <= remaining {
            picked.push(values[i]);
            walk(i + 1, remaining - values[i], values, suffix, picked, seen, out, limit, nodes)?;
            picked.pop();
        }
        walk(i + 1, remaining, values, suffix, picked, seen, out, limit, nodes)
    }

    walk(0, input.target, &input.values, &suffix, &mut picked, &mut seen, &mut out, limit, &mut nodes)
        .map_err(|_| budget_error(ID))?;
    Ok(out)
}

fn reachable(values: &[u64], target: u64) -> bool {
    let t = target as usize;
    let mut can = vec![false; t + 1];
    can[0] = true;
    for v in values {
        let v = *v as usize;
        for s in (v..=t).rev() {
            can[s] |= can[s - v];
        }
    }
    target > 0 && can[t]
}

impl Puzzle for SubsetSum {
    type Input = SubsetInput;
    type Output = SubsetAnswer;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a list of positive integers and a target value.\n\
                - We have to choose a non-empty selection of elements of the list whose sum equals the target\n\
                - Each element of the list can be chosen at most once\n\
                - If no such selection exists, this must be reported instead"
                .into(),
            input_format_text: "- The input has two lines\n\
                - The first line has the space-separated positive integers of the list\n\
                - The second line has a single positive integer, the target value"
                .into(),
            output_format_text: "- The output is a single line\n\
                - If a selection exists, the line has the chosen elements as space-separated integers\n\
                - If no selection exists, the line has the single word None"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("array_len", 4), SizeDescriptor::new().with("array_len", 12))
    }

    fn parse_input(&self, input: &str) -> Result<SubsetInput, FormatError> {
        let lines = text::content_lines(input)?;
        if lines.len() != 2 {
            return Err(FormatError::new(format!("expected 2 lines, found {}", lines.len())));
        }
        let values = text::ints(lines[0].0, lines[0].1, None)?;
        if values.is_empty() || values.iter().any(|v| *v < 1) {
            return Err(FormatError::at(lines[0].0, "list must hold positive integers"));
        }
        let target = text::ints(lines[1].0, lines[1].1, Some(1))?[0];
        if target < 1 {
            return Err(FormatError::at(lines[1].0, "target must be positive"));
        }
        Ok(SubsetInput { values: values.into_iter().map(|v| v as u64).collect(), target: target as u64 })
    }

    fn write_input(&self, input: &SubsetInput) -> String {
        text::write_rows([&input.values]) + &text::write_rows([[input.target]])
    }

    fn parse_output(&self, _input: &SubsetInput, output: &str) -> Result<SubsetAnswer, FormatError> {
        let lines = text::content_lines(output)?;
        let [(n, line)] = lines.as_slice() else {
            return Err(FormatError::new("expected a single line"));
        };
        if *line == "None" {
            return Ok(SubsetAnswer::None);
        }
        let picks = text::ints(*n, line, None)?;
        if picks.iter().any(|v| *v < 1) {
            return Err(FormatError::at(*n, "chosen elements must be positive"));
        }
        Ok(SubsetAnswer::Picks(picks.into_iter().map(|v| v as u64).collect()))
    }

    fn write_output(&self, output: &SubsetAnswer) -> String {
        match output {
            SubsetAnswer::None => "None\n".into(),
            SubsetAnswer::Picks(p) => text::write_rows([p]),
        }
    }

    fn check(&self, input: &SubsetInput, output: &SubsetAnswer) -> Result<(), String> {
        match output {
            SubsetAnswer::None => {
                if reachable(&input.values, input.target) {
                    Err(format!("a selection summing to {} exists", input.target))
                } else {
                    Ok(())
                }
            }
            SubsetAnswer::Picks(picks) => {
                let mut pool = input.values.clone();
                for p in picks {
                    match pool.iter().position(|v| v == p) {
                        Some(i) => {
                            pool.swap_remove(i);
                        }
                        None => return Err(format!("{p} is not available in the list")),
                    }
                }
                let sum: u64 = picks.iter().sum();
                if sum != input.target {
                    return Err(format!("chosen elements sum to {sum}, expected {}", input.target));
                }
                Ok(())
            }
        }
    }

    fn size(&self, input: &SubsetInput) -> SizeDescriptor {
        SizeDescriptor::new().with("array_len", input.values.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<SubsetInput, ProblemError> {
        let n = size.require(ID, "array_len")? as usize;
        if n > 40 {
            return Err(size_error(ID, size, "array_len must be at most 40"));
        }
        let values: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=MAX_ELEMENT)).collect();
        let total: u64 = values.iter().sum();
        if rng.gen_bool(0.5) {
            for _ in 0..GENERATION_ATTEMPTS {
                let target = rng.gen_range(1..=total + MAX_ELEMENT);
                if !reachable(&values, target) {
                    return Ok(SubsetInput { values, target });
                }
            }
        }
        let mut target = 0;
        while target == 0 {
            target = values.iter().filter(|_| rng.gen_bool(0.5)).sum();
        }
        Ok(SubsetInput { values, target })
    }

    fn search(&self, input: &SubsetInput, limit: usize) -> Result<Vec<SubsetAnswer>, ProblemError> {
        let found = subsets(input, limit)?;
        if found.is_empty() {
            return Ok(vec![SubsetAnswer::None]);
        }
        Ok(found.into_iter().map(SubsetAnswer::Picks).collect())
    }
}
