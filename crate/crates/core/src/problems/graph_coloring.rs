use rand::seq::SliceRandom;
use rand::Rng;

use super::csp::{range, Model};
use super::{budget_error, size_error, text, Puzzle, GENERATION_ATTEMPTS, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "graph-coloring";

const DEFAULT_COLORS: u32 = 3;

pub struct GraphColoring;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringInput {
    pub nodes: usize,
    pub colors: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Puzzle for GraphColoring {
    type Input = ColoringInput;
    type Output = Vec<u32>;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given an undirected graph and a number of colors K.\n\
                - Every vertex must be assigned exactly one of the K colors\n\
                - Two vertices joined by an edge must not be assigned the same color"
                .into(),
            input_format_text: "- The first line has two space-separated integers N and K: the number of vertices and the number of colors\n\
                - Vertices are numbered from 0 to N-1 and colors from 0 to K-1\n\
                - Each of the following lines has two space-separated integers, the endpoints of one edge"
                .into(),
            output_format_text: "- The output is a single line with N space-separated integers\n\
                - The i-th integer is the color, from 0 to K-1, assigned to vertex i-1 (the first integer belongs to vertex 0)"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (
            SizeDescriptor::new().with("nodes", 5).with("edges", 7),
            SizeDescriptor::new().with("nodes", 9).with("edges", 21),
        )
    }

    fn parse_input(&self, input: &str) -> Result<ColoringInput, FormatError> {
        let lines = text::content_lines(input)?;
        let (n, header) = lines.first().ok_or_else(|| FormatError::new("empty text"))?;
        let head = text::ints(*n, header, Some(2))?;
        if head[0] < 1 || head[1] < 1 || head[1] > 64 {
            return Err(FormatError::at(*n, "N must be positive and K in 1..=64"));
        }
        let nodes = head[0] as usize;
        let edges = text::edges(&lines[1..], nodes)?;
        Ok(ColoringInput { nodes, colors: head[1] as usize, edges })
    }

    fn write_input(&self, input: &ColoringInput) -> String {
        text::write_rows([[input.nodes, input.colors]]) + &text::write_rows(input.edges.iter().map(|(a, b)| [a, b]))
    }

    fn parse_output(&self, input: &ColoringInput, output: &str) -> Result<Vec<u32>, FormatError> {
        let lines = text::content_lines(output)?;
        let [(n, line)] = lines.as_slice() else {
            return Err(FormatError::new("expected a single line"));
        };
        let colors = text::ints(*n, line, Some(input.nodes))?;
        text::check_range(std::slice::from_ref(&colors), 0, input.colors as i64 - 1, *n)?;
        Ok(colors.into_iter().map(|c| c as u32).collect())
    }

    fn write_output(&self, output: &Vec<u32>) -> String {
        text::write_rows([output])
    }

    fn check(&self, input: &ColoringInput, output: &Vec<u32>) -> Result<(), String> {
        match input.edges.iter().find(|(a, b)| output[*a] == output[*b]) {
            Some((a, b)) => Err(format!("adjacent vertices {a} and {b} share color {}", output[*a])),
            None => Ok(()),
        }
    }

    fn size(&self, input: &ColoringInput) -> SizeDescriptor {
        let size = SizeDescriptor::new().with("nodes", input.nodes as u32);
        if input.edges.is_empty() {
            size
        } else {
            size.with("edges", input.edges.len() as u32)
        }
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<ColoringInput, ProblemError> {
        let nodes = size.require(ID, "nodes")? as usize;
        let edge_count = size.require(ID, "edges")? as usize;
        let colors = size.get("colors").unwrap_or(DEFAULT_COLORS) as usize;
        if colors > 64 || edge_count > nodes * (nodes - 1) / 2 {
            return Err(size_error(ID, size, "too many edges for the node count, or more than 64 colors"));
        }
        for _ in 0..GENERATION_ATTEMPTS {
            let planted: Vec<usize> = (0..nodes).map(|_| rng.gen_range(0..colors)).collect();
            let mut candidates: Vec<(usize, usize)> = (0..nodes)
                .flat_map(|a| (a + 1..nodes).map(move |b| (a, b)))
                .filter(|(a, b)| planted[*a] != planted[*b])
                .collect();
            if candidates.len() < edge_count {
                continue;
            }
            candidates.shuffle(rng);
            candidates.truncate(edge_count);
            candidates.sort_unstable();
            let edges = candidates.into_iter().map(|(a, b)| if rng.gen() { (a, b) } else { (b, a) }).collect();
            return Ok(ColoringInput { nodes, colors, edges });
        }
        Err(ProblemError::Generation { problem: ID.into(), size: size.clone(), attempts: GENERATION_ATTEMPTS })
    }

    fn search(&self, input: &ColoringInput, limit: usize) -> Result<Vec<Vec<u32>>, ProblemError> {
        let mut m = Model::new();
        let vars = m.add_vars(input.nodes, range(0, input.colors as u32 - 1));
        for (a, b) in &input.edges {
            m.binary(vars[*a], vars[*b], |x, y| x != y);
        }
        m.solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))
    }
}
