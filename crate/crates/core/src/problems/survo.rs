use rand::seq::SliceRandom;

use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "survo";

pub struct Survo;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvoInput {
    /// m rows of n cells, 0 for empty.
    pub board: Grid,
    pub row_sums: Vec<u32>,
    pub col_sums: Vec<u32>,
}

impl SurvoInput {
    fn dims(&self) -> (usize, usize) {
        (self.board.len(), self.col_sums.len())
    }
}

impl Puzzle for Survo {
    type Input = SurvoInput;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled m x n rectangular board together with a target sum for every row and every column.\n\
                - Every empty cell must be filled with a number from 1 to m*n\n\
                - Numbers already present on the input board must stay where they are\n\
                - Each number from 1 to m*n must appear exactly once on the solved board\n\
                - Every row and every column of the solved board must add up to its target sum"
                .into(),
            input_format_text: "- The input has m+1 lines\n\
                - Each of the first m lines has n+1 space-separated integers: the n cells of one board row followed by that row's target sum\n\
                - 0 marks an empty cell, any other cell value is a pre-filled number from 1 to m*n\n\
                - The last line has n space-separated integers, the target sums of the columns from left to right"
                .into(),
            output_format_text: "- The output has m lines, one per row of the solved board\n\
                - Each line has n space-separated integers from 1 to m*n"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("rows", 3).with("cols", 4), SizeDescriptor::new().with("rows", 4).with("cols", 5))
    }

    fn parse_input(&self, input: &str) -> Result<SurvoInput, FormatError> {
        let lines = text::content_lines(input)?;
        if lines.len() < 2 {
            return Err(FormatError::new("expected at least two lines"));
        }
        let m = lines.len() - 1;
        let (first_no, first) = lines[0];
        let width = first.split_whitespace().count();
        if width < 2 {
            return Err(FormatError::at(first_no, "a board row needs at least one cell and a row sum"));
        }
        let n = width - 1;
        if m * n > 63 {
            return Err(FormatError::new("board area above 63"));
        }
        let rows = text::grid(&lines[..m], m, width)?;
        let (last_no, last) = lines[m];
        let col_sums = text::ints(last_no, last, Some(n))?;
        let mut board = Vec::with_capacity(m);
        let mut row_sums = Vec::with_capacity(m);
        for (i, row) in rows.into_iter().enumerate() {
            let line_no = lines[i].0;
            if let Some(v) = row[..n].iter().find(|v| **v < 0 || **v > (m * n) as i64) {
                return Err(FormatError::at(line_no, format!("cell value {v} outside 0..={}", m * n)));
            }
            if row[n] < 1 {
                return Err(FormatError::at(line_no, "row sum must be positive"));
            }
            row_sums.push(row[n] as u32);
            board.push(row[..n].iter().map(|v| *v as u32).collect());
        }
        if col_sums.iter().any(|v| *v < 1) {
            return Err(FormatError::at(last_no, "column sum must be positive"));
        }
        Ok(SurvoInput { board, row_sums, col_sums: col_sums.into_iter().map(|v| v as u32).collect() })
    }

    fn write_input(&self, input: &SurvoInput) -> String {
        let rows = input
            .board
            .iter()
            .zip(&input.row_sums)
            .map(|(row, sum)| row.iter().chain(std::iter::once(sum)).copied().collect::<Vec<u32>>());
        text::write_rows(rows) + &text::write_rows([&input.col_sums])
    }

    fn parse_output(&self, input: &SurvoInput, output: &str) -> Result<Grid, FormatError> {
        let (m, n) = input.dims();
        grid::parse_exact(output, m, n, 1, (m * n) as i64)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &SurvoInput, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(&input.board, output)?;
        if let Some(v) = grid::duplicate(grid::flatten(output)) {
            return Err(format!("value {v} appears more than once"));
        }
        for (r, target) in input.row_sums.iter().enumerate() {
            let got: u32 = output[r].iter().sum();
            if got != *target {
                return Err(format!("row {} sums to {got}, expected {target}", r + 1));
            }
        }
        for (c, target) in input.col_sums.iter().enumerate() {
            let got: u32 = output.iter().map(|row| row[c]).sum();
            if got != *target {
                return Err(format!("column {} sums to {got}, expected {target}", c + 1));
            }
        }
        Ok(())
    }

    fn size(&self, input: &SurvoInput) -> SizeDescriptor {
        let (m, n) = input.dims();
        SizeDescriptor::new().with("rows", m as u32).with("cols", n as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<SurvoInput, ProblemError> {
        let m = size.require(ID, "rows")? as usize;
        let n = size.require(ID, "cols")? as usize;
        if m * n > 63 {
            return Err(size_error(ID, size, "rows*cols must be at most 63"));
        }
        let mut values: Vec<u32> = (1..=(m * n) as u32).collect();
        values.shuffle(rng);
        let full = grid::unflatten(&values, n);
        let row_sums = full.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..n).map(|c| full.iter().map(|r| r[c]).sum()).collect();
        let board = grid::blank_out(&full, m * n - (m * n) / 3, rng);
        Ok(SurvoInput { board, row_sums, col_sums })
    }

    fn search(&self, input: &SurvoInput, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let (m, n) = input.dims();
        let mut model = Model::new();
        let cells = model.add_vars(m * n, range(1, (m * n) as u32));
        for (i, v) in grid::flatten(&input.board).into_iter().enumerate() {
            if v != 0 {
                model.fix(cells[i], v);
            }
        }
        model.all_different(cells.clone());
        for (r, target) in input.row_sums.iter().enumerate() {
            model.sum_eq((0..n).map(|c| cells[r * n + c]).collect(), *target as i64);
        }
        for (c, target) in input.col_sums.iter().enumerate() {
            model.sum_eq((0..m).map(|r| cells[r * n + c]).collect(), *target as i64);
        }
        let found = model.solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "0 6 0 0 30\n8 1 0 0 18\n0 9 3 0 30\n27 16 10 25\n";

    #[test]
    fn consistent_sample_verifies() {
        let input = Survo.parse_input(SAMPLE).unwrap();
        assert_eq!(input.dims(), (3, 4));
        assert_eq!(Survo.write_input(&input), SAMPLE);
        let out = Survo.parse_output(&input, "12 6 2 10\n8 1 5 4\n7 9 3 11\n").unwrap();
        assert_eq!(Survo.check(&input, &out), Ok(()));
    }

    #[test]
    fn wrong_row_width_is_malformed() {
        assert!(Survo.parse_input("0 6 0 0 0 30\n8 1 0 0 18\n27 16 10 25\n").is_err());
    }
}
