use rand::seq::SliceRandom;
use rand::Rng;

use super::{budget_error, size_error, text, Puzzle, GENERATION_ATTEMPTS};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "hamiltonian-path";

/// Largest graph the subset DP will take on.
pub const MAX_NODES: usize = 22;

pub struct HamiltonianPath;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathInput {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Subset DP over (visited set, endpoint).
pub(crate) fn has_path(nodes: usize, edges: &[(usize, usize)]) -> Result<bool, ProblemError> {
    if nodes > MAX_NODES {
        return Err(budget_error(ID));
    }
    let mut adj = vec![0u32; nodes];
    for (a, b) in edges {
        adj[*a] |= 1 << b;
        adj[*b] |= 1 << a;
    }
    let full = (1usize << nodes) - 1;
    let mut ends = vec![0u32; full + 1];
    for v in 0..nodes {
        ends[1 << v] = 1 << v;
    }
    for mask in 1..=full {
        let mut here = ends[mask];
        while here != 0 {
            let v = here.trailing_zeros() as usize;
            here &= here - 1;
            let mut next = adj[v] & !(mask as u32);
            while next != 0 {
                let u = next.trailing_zeros() as usize;
                next &= next - 1;
                ends[mask | 1 << u] |= 1 << u;
            }
        }
    }
    Ok(ends[full] != 0)
}

fn random_edges(nodes: usize, count: usize, forced: &[(usize, usize)], rng: &mut ProblemRng) -> Vec<(usize, usize)> {
    let key = |(a, b): (usize, usize)| (a.min(b), a.max(b));
    let mut chosen: Vec<(usize, usize)> = forced.iter().map(|e| key(*e)).collect();
    let mut rest: Vec<(usize, usize)> =
        (0..nodes).flat_map(|a| (a + 1..nodes).map(move |b| (a, b))).filter(|e| !chosen.contains(e)).collect();
    rest.shuffle(rng);
    chosen.extend(rest.into_iter().take(count.saturating_sub(chosen.len())));
    chosen.shuffle(rng);
    chosen.into_iter().map(|(a, b)| if rng.gen() { (a, b) } else { (b, a) }).collect()
}

impl Puzzle for HamiltonianPath {
    type Input = PathInput;
    type Output = bool;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given an undirected, unweighted graph.\n\
                - We have to decide whether there is a path in the graph that passes through every vertex exactly once"
                .into(),
            input_format_text: "- The first line has a single integer N, the number of vertices\n\
                - Vertices are numbered from 0 to N-1\n\
                - Each of the following lines has two space-separated integers, the endpoints of one edge"
                .into(),
            output_format_text: "- The output is a single line with a single word\n\
                - The word is YES if such a path exists in the input graph and NO otherwise"
                .into(),
            decision_problem: true,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (
            SizeDescriptor::new().with("nodes", 6).with("edges", 9),
            SizeDescriptor::new().with("nodes", 13).with("edges", 20),
        )
    }

    fn parse_input(&self, input: &str) -> Result<PathInput, FormatError> {
        let lines = text::content_lines(input)?;
        let (n, header) = lines.first().ok_or_else(|| FormatError::new("empty text"))?;
        let head = text::ints(*n, header, Some(1))?;
        if !(1..=32).contains(&head[0]) {
            return Err(FormatError::at(*n, "N must be in 1..=32"));
        }
        let nodes = head[0] as usize;
        let edges = text::edges(&lines[1..], nodes)?;
        Ok(PathInput { nodes, edges })
    }

    fn write_input(&self, input: &PathInput) -> String {
        text::write_rows([[input.nodes]]) + &text::write_rows(input.edges.iter().map(|(a, b)| [a, b]))
    }

    fn parse_output(&self, _input: &PathInput, output: &str) -> Result<bool, FormatError> {
        text::yes_no(output)
    }

    fn write_output(&self, output: &bool) -> String {
        text::write_yes_no(*output)
    }

    fn check(&self, input: &PathInput, output: &bool) -> Result<(), String> {
        let truth = has_path(input.nodes, &input.edges).map_err(|e| e.to_string())?;
        if truth == *output {
            Ok(())
        } else {
            Err(format!("expected {}", if truth { "YES" } else { "NO" }))
        }
    }

    fn size(&self, input: &PathInput) -> SizeDescriptor {
        let size = SizeDescriptor::new().with("nodes", input.nodes as u32);
        if input.edges.is_empty() {
            size
        } else {
            size.with("edges", input.edges.len() as u32)
        }
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<PathInput, ProblemError> {
        let nodes = size.require(ID, "nodes")? as usize;
        let edge_count = size.require(ID, "edges")? as usize;
        if nodes > MAX_NODES || edge_count > nodes * (nodes - 1) / 2 {
            return Err(size_error(ID, size, format!("at most {MAX_NODES} nodes and N*(N-1)/2 edges")));
        }
        let want_yes = edge_count + 1 >= nodes && rng.gen_bool(0.5);
        if !want_yes {
            for _ in 0..GENERATION_ATTEMPTS {
                let edges = random_edges(nodes, edge_count, &[], rng);
                if !has_path(nodes, &edges)? {
                    return Ok(PathInput { nodes, edges });
                }
            }
        }
        let mut order: Vec<usize> = (0..nodes).collect();
        order.shuffle(rng);
        let path: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
        let edges = random_edges(nodes, edge_count, &path, rng);
        Ok(PathInput { nodes, edges })
    }

    fn search(&self, input: &PathInput, _limit: usize) -> Result<Vec<bool>, ProblemError> {
        Ok(vec![has_path(input.nodes, &input.edges)?])
    }
}
