use rand::seq::SliceRandom;

use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "sudoku";

/// n×n sudoku with √n×√n boxes.
pub struct Sudoku;

fn box_side(n: usize) -> Option<usize> {
    let k = (n as f64).sqrt().round() as usize;
    (k >= 1 && k * k == n).then_some(k)
}

impl Puzzle for Sudoku {
    type Input = Grid;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled n x n board, where n is a perfect square.\n\
                - Every empty cell must be filled with a number from 1 to n\n\
                - Numbers already present on the input board must stay where they are\n\
                - Every row of the solved board must contain each number from 1 to n exactly once\n\
                - Every column of the solved board must contain each number from 1 to n exactly once\n\
                - The board splits into n non-overlapping blocks of size sqrt(n) x sqrt(n); every block must contain each number from 1 to n exactly once"
                .into(),
            input_format_text: "- The input has n lines\n\
                - Each line has n space-separated integers and describes one row of the board\n\
                - 0 marks an empty cell, any other integer is a pre-filled number from 1 to n"
                .into(),
            output_format_text: "- The output has n lines, one per row of the solved board\n\
                - Each line has n space-separated integers from 1 to n"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("grid_n", 4), SizeDescriptor::new().with("grid_n", 9))
    }

    fn parse_input(&self, input: &str) -> Result<Grid, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |n| n as i64)?;
        grid::no_trailing(rest)?;
        if box_side(board.len()).is_none() {
            return Err(FormatError::new(format!("board side {} is not a perfect square", board.len())));
        }
        Ok(board)
    }

    fn write_input(&self, input: &Grid) -> String {
        text::write_rows(input)
    }

    fn parse_output(&self, input: &Grid, output: &str) -> Result<Grid, FormatError> {
        let n = input.len();
        grid::parse_exact(output, n, n, 1, n as i64)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &Grid, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(input, output)?;
        grid::rows_cols_distinct(output)?;
        let n = input.len();
        let k = box_side(n).unwrap_or(1);
        for b in 0..n {
            let (r0, c0) = (b / k * k, b % k * k);
            let cells = (0..n).map(|i| output[r0 + i / k][c0 + i % k]);
            if let Some(v) = grid::duplicate(cells) {
                return Err(format!("block {} duplicates value {v}", b + 1));
            }
        }
        Ok(())
    }

    fn size(&self, input: &Grid) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Grid, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        let k = match box_side(n) {
            Some(k) if (2..=6).contains(&k) => k,
            _ => return Err(size_error(ID, size, "grid_n must be a square of 2..=6")),
        };
        let full = random_full(n, k, rng);
        Ok(grid::blank_out(&full, n * n / 2, rng))
    }

    fn search(&self, input: &Grid, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let n = input.len();
        let k = box_side(n).unwrap_or(1);
        let mut m = Model::new();
        let cells = m.add_vars(n * n, range(1, n as u32));
        for (i, v) in grid::flatten(input).into_iter().enumerate() {
            if v != 0 {
                m.fix(cells[i], v);
            }
        }
        for i in 0..n {
            m.all_different((0..n).map(|j| cells[i * n + j]).collect());
            m.all_different((0..n).map(|j| cells[j * n + i]).collect());
            let (r0, c0) = (i / k * k, i % k * k);
            m.all_different((0..n).map(|j| cells[(r0 + j / k) * n + c0 + j % k]).collect());
        }
        let found = m.solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}

/// Pattern-based full board with bands, stacks, rows within bands, columns
/// within stacks and symbols shuffled.
fn random_full(n: usize, k: usize, rng: &mut ProblemRng) -> Grid {
    let order = |rng: &mut ProblemRng| -> Vec<usize> {
        let mut bands: Vec<usize> = (0..k).collect();
        bands.shuffle(rng);
        let mut out = Vec::with_capacity(n);
        for b in bands {
            let mut inner: Vec<usize> = (0..k).collect();
            inner.shuffle(rng);
            out.extend(inner.into_iter().map(|i| b * k + i));
        }
        out
    };
    let rows = order(rng);
    let cols = order(rng);
    let mut symbols: Vec<u32> = (1..=n as u32).collect();
    symbols.shuffle(rng);
    rows.iter().map(|&r| cols.iter().map(|&c| symbols[(k * (r % k) + r / k + c) % n]).collect()).collect()
}
