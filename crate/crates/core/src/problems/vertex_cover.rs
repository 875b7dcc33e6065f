use rand::seq::SliceRandom;
use rand::Rng;

use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "vertex-cover";

pub struct VertexCover;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverInput {
    pub nodes: usize,
    pub k: usize,
    pub edges: Vec<(usize, usize)>,
}

fn adjacency(nodes: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    let mut adj = vec![0u64; nodes];
    for (a, b) in edges {
        adj[*a] |= 1 << b;
        adj[*b] |= 1 << a;
    }
    adj
}

fn remove(adj: &mut [u64], v: usize) {
    let mut nbrs = adj[v];
    while nbrs != 0 {
        let u = nbrs.trailing_zeros() as usize;
        adj[u] &= !(1u64 << v);
        nbrs &= nbrs - 1;
    }
    adj[v] = 0;
}

/// Branch on a maximum-degree vertex: either it joins the cover or all of
/// its neighbours do.
fn has_cover(adj: &[u64], k: usize, nodes_used: &mut u64) -> Result<bool, ()> {
    *nodes_used += 1;
    if *nodes_used > SEARCH_BUDGET {
        return Err(());
    }
    let (v, deg) = adj
        .iter()
        .enumerate()
        .map(|(i, a)| (i, a.count_ones() as usize))
        .max_by_key(|(i, d)| (*d, std::cmp::Reverse(*i)))
        .unwrap_or((0, 0));
    if deg == 0 {
        return Ok(true);
    }
    if k == 0 {
        return Ok(false);
    }
    let mut with_v = adj.to_vec();
    remove(&mut with_v, v);
    if has_cover(&with_v, k - 1, nodes_used)? {
        return Ok(true);
    }
    if deg > k {
        return Ok(false);
    }
    let mut with_nbrs = adj.to_vec();
    let mut nbrs = adj[v];
    while nbrs != 0 {
        remove(&mut with_nbrs, nbrs.trailing_zeros() as usize);
        nbrs &= nbrs - 1;
    }
    has_cover(&with_nbrs, k - deg, nodes_used)
}

/// Size of a minimum vertex cover.
pub(crate) fn min_cover(nodes: usize, edges: &[(usize, usize)]) -> Result<usize, ProblemError> {
    let adj = adjacency(nodes, edges);
    let mut used = 0;
    for k in 0..=nodes {
        if has_cover(&adj, k, &mut used).map_err(|_| budget_error(ID))? {
            return Ok(k);
        }
    }
    Ok(nodes)
}

impl Puzzle for VertexCover {
    type Input = CoverInput;
    type Output = bool;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given an undirected graph and an integer K.\n\
                - A set of vertices covers the graph if every edge has at least one endpoint in the set\n\
                - We have to decide whether some set of at most K vertices covers the graph"
                .into(),
            input_format_text: "- The first line has two space-separated integers N and K: the number of vertices and the bound on the set size\n\
                - Vertices are numbered from 0 to N-1\n\
                - Each of the following lines has two space-separated integers, the endpoints of one edge"
                .into(),
            output_format_text: "- The output is a single line with a single word\n\
                - The word is YES if a covering set of at most K vertices exists and NO otherwise"
                .into(),
            decision_problem: true,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (
            SizeDescriptor::new().with("nodes", 6).with("edges", 13),
            SizeDescriptor::new().with("nodes", 12).with("edges", 40),
        )
    }

    fn parse_input(&self, input: &str) -> Result<CoverInput, FormatError> {
        let lines = text::content_lines(input)?;
        let (n, header) = lines.first().ok_or_else(|| FormatError::new("empty text"))?;
        let head = text::ints(*n, header, Some(2))?;
        if !(1..=64).contains(&head[0]) || head[1] < 0 {
            return Err(FormatError::at(*n, "N must be in 1..=64 and K non-negative"));
        }
        let nodes = head[0] as usize;
        let edges = text::edges(&lines[1..], nodes)?;
        Ok(CoverInput { nodes, k: head[1] as usize, edges })
    }

    fn write_input(&self, input: &CoverInput) -> String {
        text::write_rows([[input.nodes, input.k]]) + &text::write_rows(input.edges.iter().map(|(a, b)| [a, b]))
    }

    fn parse_output(&self, _input: &CoverInput, output: &str) -> Result<bool, FormatError> {
        text::yes_no(output)
    }

    fn write_output(&self, output: &bool) -> String {
        text::write_yes_no(*output)
    }

    fn check(&self, input: &CoverInput, output: &bool) -> Result<(), String> {
        let truth = min_cover(input.nodes, &input.edges).map_err(|e| e.to_string())? <= input.k;
        if truth == *output {
            Ok(())
        } else {
            Err(format!("expected {}", if truth { "YES" } else { "NO" }))
        }
    }

    fn size(&self, input: &CoverInput) -> SizeDescriptor {
        let size = SizeDescriptor::new().with("nodes", input.nodes as u32);
        if input.edges.is_empty() {
            size
        } else {
            size.with("edges", input.edges.len() as u32)
        }
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<CoverInput, ProblemError> {
        let nodes = size.require(ID, "nodes")? as usize;
        let edge_count = size.require(ID, "edges")? as usize;
        if nodes > 64 || edge_count > nodes * (nodes - 1) / 2 {
            return Err(size_error(ID, size, "at most 64 nodes and N*(N-1)/2 edges"));
        }
        let mut pairs: Vec<(usize, usize)> = (0..nodes).flat_map(|a| (a + 1..nodes).map(move |b| (a, b))).collect();
        pairs.shuffle(rng);
        pairs.truncate(edge_count);
        pairs.sort_unstable();
        let edges: Vec<(usize, usize)> =
            pairs.into_iter().map(|(a, b)| if rng.gen() { (a, b) } else { (b, a) }).collect();
        let best = min_cover(nodes, &edges)?;
        let k = if best > 1 && rng.gen() { best - 1 } else { best.max(1) };
        Ok(CoverInput { nodes, k, edges })
    }

    fn search(&self, input: &CoverInput, _limit: usize) -> Result<Vec<bool>, ProblemError> {
        Ok(vec![min_cover(input.nodes, &input.edges)? <= input.k])
    }
}
