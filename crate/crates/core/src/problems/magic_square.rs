use rand::Rng;

use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "magic-square";

/// Node budget for the randomized full-square search before falling back
/// to a construction.
const FILL_BUDGET: u64 = 200_000;

pub struct MagicSquare;

fn magic_constant(n: usize) -> u32 {
    (n * (n * n + 1) / 2) as u32
}

fn model(input: &Grid) -> Model {
    let n = input.len();
    let target = magic_constant(n) as i64;
    let mut m = Model::new();
    let cells = m.add_vars(n * n, range(1, (n * n) as u32));
    for (i, v) in grid::flatten(input).into_iter().enumerate() {
        if v != 0 {
            m.fix(cells[i], v);
        }
    }
    m.all_different(cells.clone());
    for i in 0..n {
        m.sum_eq((0..n).map(|j| cells[i * n + j]).collect(), target);
        m.sum_eq((0..n).map(|j| cells[j * n + i]).collect(), target);
    }
    m.sum_eq((0..n).map(|i| cells[i * n + i]).collect(), target);
    m.sum_eq((0..n).map(|i| cells[i * n + n - 1 - i]).collect(), target);
    m
}

/// Siamese method for odd n, complement method for n divisible by 4.
#[allow(clippy::needless_range_loop)]
fn construct(n: usize) -> Option<Grid> {
    let mut g = vec![vec![0u32; n]; n];
    if n % 2 == 1 {
        let (mut r, mut c) = (0, n / 2);
        for v in 1..=(n * n) as u32 {
            g[r][c] = v;
            let (nr, nc) = ((r + n - 1) % n, (c + 1) % n);
            if g[nr][nc] != 0 {
                r = (r + 1) % n;
            } else {
                (r, c) = (nr, nc);
            }
        }
        Some(g)
    } else if n.is_multiple_of(4) {
        for r in 0..n {
            for c in 0..n {
                let v = (r * n + c + 1) as u32;
                let keep = (r % 4 == c % 4) || ((r % 4) + (c % 4) == 3);
                g[r][c] = if keep { (n * n + 1) as u32 - v } else { v };
            }
        }
        Some(g)
    } else {
        None
    }
}

/// One of the eight rotations and reflections.
#[allow(clippy::needless_range_loop)]
fn transform(g: &Grid, which: u8) -> Grid {
    let n = g.len();
    let mut out = g.clone();
    for r in 0..n {
        for c in 0..n {
            let (sr, sc) = match which % 8 {
                0 => (r, c),
                1 => (c, n - 1 - r),
                2 => (n - 1 - r, n - 1 - c),
                3 => (n - 1 - c, r),
                4 => (r, n - 1 - c),
                5 => (n - 1 - r, c),
                6 => (c, r),
                _ => (n - 1 - c, n - 1 - r),
            };
            out[r][c] = g[sr][sc];
        }
    }
    out
}

impl Puzzle for MagicSquare {
    type Input = Grid;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled n x n board.\n\
                - Every empty cell must be filled with a number from 1 to n*n\n\
                - Numbers already present on the input board must stay where they are\n\
                - Each number from 1 to n*n must appear exactly once on the solved board\n\
                - Every row, every column and both main diagonals of the solved board must add up to the same value, n*(n*n+1)/2"
                .into(),
            input_format_text: "- The input has n lines\n\
                - Each line has n space-separated integers and describes one row of the board\n\
                - 0 marks an empty cell, any other integer is a pre-filled number from 1 to n*n"
                .into(),
            output_format_text: "- The output has n lines, one per row of the solved board\n\
                - Each line has n space-separated integers from 1 to n*n"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("grid_n", 3), SizeDescriptor::new().with("grid_n", 4))
    }

    fn parse_input(&self, input: &str) -> Result<Grid, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |n| (n * n) as i64)?;
        grid::no_trailing(rest)?;
        if board.len() > 7 {
            return Err(FormatError::new("board side above 7"));
        }
        Ok(board)
    }

    fn write_input(&self, input: &Grid) -> String {
        text::write_rows(input)
    }

    fn parse_output(&self, input: &Grid, output: &str) -> Result<Grid, FormatError> {
        let n = input.len();
        grid::parse_exact(output, n, n, 1, (n * n) as i64)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &Grid, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(input, output)?;
        if let Some(v) = grid::duplicate(grid::flatten(output)) {
            return Err(format!("value {v} appears more than once"));
        }
        let n = input.len();
        let target = magic_constant(n);
        for i in 0..n {
            let row: u32 = output[i].iter().sum();
            if row != target {
                return Err(format!("row {} sums to {row}, expected {target}", i + 1));
            }
            let col: u32 = output.iter().map(|r| r[i]).sum();
            if col != target {
                return Err(format!("column {} sums to {col}, expected {target}", i + 1));
            }
        }
        let diag: u32 = (0..n).map(|i| output[i][i]).sum();
        if diag != target {
            return Err(format!("main diagonal sums to {diag}, expected {target}"));
        }
        let anti: u32 = (0..n).map(|i| output[i][n - 1 - i]).sum();
        if anti != target {
            return Err(format!("anti-diagonal sums to {anti}, expected {target}"));
        }
        Ok(())
    }

    fn size(&self, input: &Grid) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Grid, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        if !(3..=7).contains(&n) {
            return Err(size_error(ID, size, "grid_n must be in 3..=7"));
        }
        let empty = vec![vec![0; n]; n];
        let full = match model(&empty).solve(1, FILL_BUDGET, Some(rng)) {
            Ok(found) if !found.is_empty() => grid::unflatten(&found[0], n),
            _ => match construct(n) {
                Some(g) => transform(&g, rng.gen_range(0..8)),
                None => return Err(ProblemError::Generation { problem: ID.into(), size: size.clone(), attempts: 1 }),
            },
        };
        Ok(grid::blank_out(&full, n * n / 2, rng))
    }

    fn search(&self, input: &Grid, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let n = input.len();
        let found = model(input).solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}
