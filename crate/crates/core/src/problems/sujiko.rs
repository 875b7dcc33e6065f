use rand::seq::SliceRandom;

use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "sujiko";

pub struct Sujiko;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SujikoInput {
    pub board: Grid,
    /// `sums[r][c]` covers cells (r, c), (r, c+1), (r+1, c), (r+1, c+1).
    pub sums: Vec<Vec<u32>>,
}

fn block(g: &Grid, r: usize, c: usize) -> u32 {
    g[r][c] + g[r][c + 1] + g[r + 1][c] + g[r + 1][c + 1]
}

impl Puzzle for Sujiko {
    type Input = SujikoInput;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled n x n board and a target sum for every 2 x 2 block of adjacent cells.\n\
                - Every empty cell must be filled with a number from 1 to n*n\n\
                - Numbers already present on the input board must stay where they are\n\
                - Each number from 1 to n*n must appear exactly once on the solved board\n\
                - For every 2 x 2 block, the four numbers in it must add up to the target given for that block"
                .into(),
            input_format_text: "- The input has 2n-1 lines\n\
                - The first n lines have n space-separated integers each and describe the rows of the board\n\
                - 0 marks an empty cell, any other integer is a pre-filled number from 1 to n*n\n\
                - The remaining n-1 lines have n-1 space-separated integers each\n\
                - The j-th integer on the i-th of these lines is the target sum of the 2 x 2 block whose top-left cell is in row i and column j of the board"
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

    fn parse_input(&self, input: &str) -> Result<SujikoInput, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |n| (n * n) as i64)?;
        let n = board.len();
        if !(2..=7).contains(&n) {
            return Err(FormatError::new("board side must be in 2..=7"));
        }
        let sums = text::grid(rest, n - 1, n - 1)?;
        grid::no_trailing(&rest[n - 1..])?;
        text::check_range(&sums, 1, 4 * (n * n) as i64, rest[0].0)?;
        Ok(SujikoInput { board, sums: grid::from_rows(sums) })
    }

    fn write_input(&self, input: &SujikoInput) -> String {
        text::write_rows(&input.board) + &text::write_rows(&input.sums)
    }

    fn parse_output(&self, input: &SujikoInput, output: &str) -> Result<Grid, FormatError> {
        let n = input.board.len();
        grid::parse_exact(output, n, n, 1, (n * n) as i64)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &SujikoInput, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(&input.board, output)?;
        if let Some(v) = grid::duplicate(grid::flatten(output)) {
            return Err(format!("value {v} appears more than once"));
        }
        for (r, row) in input.sums.iter().enumerate() {
            for (c, target) in row.iter().enumerate() {
                let got = block(output, r, c);
                if got != *target {
                    return Err(format!("block at ({}, {}) sums to {got}, expected {target}", r + 1, c + 1));
                }
            }
        }
        Ok(())
    }

    fn size(&self, input: &SujikoInput) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.board.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<SujikoInput, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        if !(2..=7).contains(&n) {
            return Err(size_error(ID, size, "grid_n must be in 2..=7"));
        }
        let mut values: Vec<u32> = (1..=(n * n) as u32).collect();
        values.shuffle(rng);
        let full = grid::unflatten(&values, n);
        let sums = (0..n - 1).map(|r| (0..n - 1).map(|c| block(&full, r, c)).collect()).collect();
        let board = grid::blank_out(&full, n * n - n.min(n * n - 1), rng);
        Ok(SujikoInput { board, sums })
    }

    fn search(&self, input: &SujikoInput, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let n = input.board.len();
        let mut m = Model::new();
        let cells = m.add_vars(n * n, range(1, (n * n) as u32));
        for (i, v) in grid::flatten(&input.board).into_iter().enumerate() {
            if v != 0 {
                m.fix(cells[i], v);
            }
        }
        m.all_different(cells.clone());
        for (r, row) in input.sums.iter().enumerate() {
            for (c, target) in row.iter().enumerate() {
                let at = |dr: usize, dc: usize| cells[(r + dr) * n + c + dc];
                m.sum_eq(vec![at(0, 0), at(0, 1), at(1, 0), at(1, 1)], *target as i64);
            }
        }
        let found = m.solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_round_trips() {
        let t = "0 0 0\n0 5 0\n0 0 0\n12 14\n20 18\n";
        assert_eq!(Sujiko.write_input(&Sujiko.parse_input(t).unwrap()), t);
    }

    #[test]
    fn block_sum_mismatch_is_incorrect() {
        let input = Sujiko.parse_input("0 0 0\n0 0 0\n0 0 0\n12 16\n24 28\n").unwrap();
        let out = Sujiko.parse_output(&input, "1 2 3\n4 5 6\n7 8 9\n").unwrap();
        assert_eq!(Sujiko.check(&input, &out), Ok(()));
        let bad = SujikoInput { sums: vec![vec![13, 16], vec![24, 28]], ..input };
        assert!(Sujiko.check(&bad, &out).unwrap_err().contains("(1, 1)"));
    }
}
