use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "latin-square";

pub struct LatinSquare;

impl Puzzle for LatinSquare {
    type Input = Grid;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled n x n board.\n\
                - Every empty cell must be filled with a number from 1 to n\n\
                - Numbers already present on the input board must stay where they are\n\
                - Every row of the solved board must contain each number from 1 to n exactly once\n\
                - Every column of the solved board must contain each number from 1 to n exactly once"
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
        (SizeDescriptor::new().with("grid_n", 6), SizeDescriptor::new().with("grid_n", 9))
    }

    fn parse_input(&self, input: &str) -> Result<Grid, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |n| n as i64)?;
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
        grid::parse_exact(output, n, n, 1, n as i64)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &Grid, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(input, output)?;
        grid::rows_cols_distinct(output)
    }

    fn size(&self, input: &Grid) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Grid, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        if n > 40 {
            return Err(size_error(ID, size, "grid_n must be at most 40"));
        }
        let full = grid::random_latin(n, rng);
        Ok(grid::blank_out(&full, n * n / 2, rng))
    }

    fn search(&self, input: &Grid, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let n = input.len();
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
        }
        let found = m.solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}
