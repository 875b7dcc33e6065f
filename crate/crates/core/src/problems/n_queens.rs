use rand::Rng;

use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "n-queens";

pub struct NQueens;

/// One variable per row holding the queen's column.
fn model(input: &Grid) -> Model {
    let n = input.len();
    let mut m = Model::new();
    let rows = m.add_vars(n, range(0, n as u32 - 1));
    for (r, row) in input.iter().enumerate() {
        if let Some(c) = row.iter().position(|v| *v == 1) {
            m.fix(rows[r], c as u32);
        }
    }
    m.all_different(rows.clone());
    for i in 0..n {
        for j in i + 1..n {
            let gap = (j - i) as i64;
            m.binary(rows[i], rows[j], move |a, b| (a as i64 - b as i64).abs() != gap);
        }
    }
    m
}

fn board(cols: &[u32]) -> Grid {
    let n = cols.len();
    cols.iter().map(|c| (0..n).map(|j| u32::from(j as u32 == *c)).collect()).collect()
}

impl Puzzle for NQueens {
    type Input = Grid;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given an n x n chess board on which some queens may already be placed.\n\
                - The solved board must hold n pieces in total, all of them queens\n\
                - Queens already placed on the input board must stay where they are\n\
                - No two queens may share a row\n\
                - No two queens may share a column\n\
                - No two queens may share a diagonal"
                .into(),
            input_format_text: "- The input has n lines\n\
                - Each line has n space-separated integers and describes one row of the board\n\
                - 1 marks a cell holding a queen, 0 marks an empty cell"
                .into(),
            output_format_text: "- The output has n lines, one per row of the solved board\n\
                - Each line has n space-separated integers, 1 for a queen and 0 for an empty cell"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("grid_n", 4), SizeDescriptor::new().with("grid_n", 6))
    }

    fn parse_input(&self, input: &str) -> Result<Grid, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |_| 1)?;
        grid::no_trailing(rest)?;
        if board.len() > 63 {
            return Err(FormatError::new("board side above 63"));
        }
        Ok(board)
    }

    fn write_input(&self, input: &Grid) -> String {
        text::write_rows(input)
    }

    fn parse_output(&self, input: &Grid, output: &str) -> Result<Grid, FormatError> {
        let n = input.len();
        grid::parse_exact(output, n, n, 0, 1)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &Grid, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(input, output)?;
        let n = input.len();
        let queens: Vec<(usize, usize)> =
            (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).filter(|(r, c)| output[*r][*c] == 1).collect();
        if queens.len() != n {
            return Err(format!("board holds {} queens, expected {n}", queens.len()));
        }
        for (i, a) in queens.iter().enumerate() {
            for b in &queens[i + 1..] {
                let clash = if a.0 == b.0 {
                    "row"
                } else if a.1 == b.1 {
                    "column"
                } else if a.0.abs_diff(b.0) == a.1.abs_diff(b.1) {
                    "diagonal"
                } else {
                    continue;
                };
                return Err(format!(
                    "queens at ({}, {}) and ({}, {}) share a {clash}",
                    a.0 + 1,
                    a.1 + 1,
                    b.0 + 1,
                    b.1 + 1
                ));
            }
        }
        Ok(())
    }

    fn size(&self, input: &Grid) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Grid, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        if n > 40 {
            return Err(size_error(ID, size, "grid_n must be at most 40"));
        }
        let empty = vec![vec![0; n]; n];
        let found = model(&empty).solve(1, SEARCH_BUDGET, Some(rng)).map_err(|_| budget_error(ID))?;
        let Some(cols) = found.first() else {
            return Err(ProblemError::Generation { problem: ID.into(), size: size.clone(), attempts: 1 });
        };
        let keep = rng.gen_range(0..=n / 3);
        let full = board(cols);
        let queens: Vec<usize> = (0..n).collect();
        let kept: Vec<usize> = rand::seq::index::sample(rng, n, keep).into_vec();
        Ok(queens.iter().map(|r| if kept.contains(r) { full[*r].clone() } else { vec![0; n] }).collect())
    }

    fn search(&self, input: &Grid, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        if input.iter().any(|row| row.iter().filter(|v| **v == 1).count() > 1) {
            return Ok(Vec::new());
        }
        let found = model(input).solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|cols| board(cols)).collect())
    }
}
