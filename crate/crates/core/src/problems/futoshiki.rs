use rand::seq::SliceRandom;

use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "futoshiki";

pub struct Futoshiki;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FutoshikiInput {
    pub board: Grid,
    /// `(a, b)`: cell `a` holds a smaller value than cell `b` (row-major
    /// indices from 0).
    pub less: Vec<(usize, usize)>,
}

impl Puzzle for Futoshiki {
    type Input = FutoshikiInput;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled n x n board and a list of inequalities between pairs of cells.\n\
                - Every empty cell must be filled with a number from 1 to n\n\
                - Numbers already present on the input board must stay where they are\n\
                - Every row of the solved board must contain each number from 1 to n exactly once\n\
                - Every column of the solved board must contain each number from 1 to n exactly once\n\
                - For every listed inequality, the number in the first cell must be smaller than the number in the second cell"
                .into(),
            input_format_text: "- The first n lines have n space-separated integers each and describe the rows of the board\n\
                - 0 marks an empty cell, any other integer is a pre-filled number from 1 to n\n\
                - Each of the following lines has two space-separated integers a and b, meaning the number in cell a must be smaller than the number in cell b\n\
                - Cells are numbered in row-major order starting from 0"
                .into(),
            output_format_text: "- The output has n lines, one per row of the solved board\n\
                - Each line has n space-separated integers from 1 to n"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("grid_n", 5), SizeDescriptor::new().with("grid_n", 7))
    }

    fn parse_input(&self, input: &str) -> Result<FutoshikiInput, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |n| n as i64)?;
        let cells = board.len() * board.len();
        if board.len() > 63 {
            return Err(FormatError::new("board side above 63"));
        }
        let mut less = Vec::with_capacity(rest.len());
        for (n, line) in rest {
            let v = text::ints(*n, line, Some(2))?;
            if v.iter().any(|x| *x < 0 || *x as usize >= cells) {
                return Err(FormatError::at(*n, format!("cell index outside 0..{cells}")));
            }
            if v[0] == v[1] {
                return Err(FormatError::at(*n, "inequality relates a cell to itself"));
            }
            less.push((v[0] as usize, v[1] as usize));
        }
        Ok(FutoshikiInput { board, less })
    }

    fn write_input(&self, input: &FutoshikiInput) -> String {
        text::write_rows(&input.board) + &text::write_rows(input.less.iter().map(|(a, b)| [a, b]))
    }

    fn parse_output(&self, input: &FutoshikiInput, output: &str) -> Result<Grid, FormatError> {
        let n = input.board.len();
        grid::parse_exact(output, n, n, 1, n as i64)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &FutoshikiInput, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(&input.board, output)?;
        grid::rows_cols_distinct(output)?;
        let n = input.board.len();
        for (a, b) in &input.less {
            let (va, vb) = (output[a / n][a % n], output[b / n][b % n]);
            if va >= vb {
                return Err(format!("cell {a} holds {va}, which is not smaller than {vb} in cell {b}"));
            }
        }
        Ok(())
    }

    fn size(&self, input: &FutoshikiInput) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.board.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<FutoshikiInput, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        if !(2..=20).contains(&n) {
            return Err(size_error(ID, size, "grid_n must be in 2..=20"));
        }
        let full = grid::random_latin(n, rng);
        let mut adjacent = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if c + 1 < n {
                    adjacent.push((r * n + c, r * n + c + 1));
                }
                if r + 1 < n {
                    adjacent.push((r * n + c, (r + 1) * n + c));
                }
            }
        }
        adjacent.shuffle(rng);
        let value = |i: usize| full[i / n][i % n];
        let less = adjacent
            .into_iter()
            .take(n + n / 2)
            .map(|(a, b)| if value(a) < value(b) { (a, b) } else { (b, a) })
            .collect();
        let board = grid::blank_out(&full, n * n - n / 2 - 1, rng);
        Ok(FutoshikiInput { board, less })
    }

    fn search(&self, input: &FutoshikiInput, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let n = input.board.len();
        let mut m = Model::new();
        let cells = m.add_vars(n * n, range(1, n as u32));
        for (i, v) in grid::flatten(&input.board).into_iter().enumerate() {
            if v != 0 {
                m.fix(cells[i], v);
            }
        }
        for i in 0..n {
            m.all_different((0..n).map(|j| cells[i * n + j]).collect());
            m.all_different((0..n).map(|j| cells[j * n + i]).collect());
        }
        for (a, b) in &input.less {
            m.binary(cells[*a], cells[*b], |x, y| x < y);
        }
        let found = m.solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}
