use super::csp::{range, Model};
use super::grid::{self, Grid};
use super::{budget_error, size_error, text, Puzzle, SEARCH_BUDGET};
use crate::problem::{FormatError, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor};

const ID: &str = "binairo";

/// Node budget for drawing a random full board.
const FILL_BUDGET: u64 = 2_000_000;

pub struct Binairo;

fn model(input: &Grid) -> Model {
    let n = input.len();
    let mut m = Model::new();
    let cells = m.add_vars(n * n, range(1, 2));
    for (i, v) in grid::flatten(input).into_iter().enumerate() {
        if v != 0 {
            m.fix(cells[i], v);
        }
    }
    let row = |r: usize| -> Vec<usize> { (0..n).map(|c| cells[r * n + c]).collect() };
    let col = |c: usize| -> Vec<usize> { (0..n).map(|r| cells[r * n + c]).collect() };
    let lines: Vec<Vec<usize>> = (0..n).map(row).chain((0..n).map(col)).collect();
    for line in &lines {
        m.sum_eq(line.clone(), (3 * n / 2) as i64);
        for w in line.windows(3) {
            m.predicate(w.to_vec(), |v| !(v[0] == v[1] && v[1] == v[2]));
        }
    }
    for group in [&lines[..n], &lines[n..]] {
        for i in 0..n {
            for j in i + 1..n {
                let pair: Vec<usize> = group[i].iter().chain(&group[j]).copied().collect();
                m.predicate(pair, move |v| v[..n] != v[n..]);
            }
        }
    }
    m
}

impl Puzzle for Binairo {
    type Input = Grid;
    type Output = Grid;

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            id: ID.into(),
            rules_text: "We are given a partially filled n x n board, where n is even. Each cell must hold one of two symbols, written 1 and 2.\n\
                - Every empty cell must be filled with 1 or 2\n\
                - Symbols already present on the input board must stay where they are\n\
                - Every row and every column must contain as many 1s as 2s\n\
                - No row or column may contain three identical symbols in consecutive cells\n\
                - No two rows may be identical and no two columns may be identical"
                .into(),
            input_format_text: "- The input has n lines\n\
                - Each line has n space-separated integers and describes one row of the board\n\
                - 0 marks an empty cell, 1 and 2 are the pre-filled symbols"
                .into(),
            output_format_text: "- The output has n lines, one per row of the solved board\n\
                - Each line has n space-separated integers, each either 1 or 2"
                .into(),
            decision_problem: false,
        }
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        (SizeDescriptor::new().with("grid_n", 4), SizeDescriptor::new().with("grid_n", 6))
    }

    fn parse_input(&self, input: &str) -> Result<Grid, FormatError> {
        let lines = text::content_lines(input)?;
        let (board, rest) = grid::parse_square(&lines, 0, |_| 2)?;
        grid::no_trailing(rest)?;
        if board.len() % 2 != 0 {
            return Err(FormatError::new(format!("board side {} is odd", board.len())));
        }
        Ok(board)
    }

    fn write_input(&self, input: &Grid) -> String {
        text::write_rows(input)
    }

    fn parse_output(&self, input: &Grid, output: &str) -> Result<Grid, FormatError> {
        let n = input.len();
        grid::parse_exact(output, n, n, 1, 2)
    }

    fn write_output(&self, output: &Grid) -> String {
        text::write_rows(output)
    }

    fn check(&self, input: &Grid, output: &Grid) -> Result<(), String> {
        grid::keeps_givens(input, output)?;
        let n = input.len();
        let columns: Grid = (0..n).map(|c| output.iter().map(|r| r[c]).collect()).collect();
        for (kind, lines) in [("row", output), ("column", &columns)] {
            for (i, line) in lines.iter().enumerate() {
                let ones = line.iter().filter(|v| **v == 1).count();
                if ones * 2 != n {
                    return Err(format!("{kind} {} has {ones} ones and {} twos", i + 1, n - ones));
                }
                if let Some(w) = line.windows(3).position(|w| w[0] == w[1] && w[1] == w[2]) {
                    return Err(format!("{kind} {} has three equal symbols from position {}", i + 1, w + 1));
                }
                if let Some(j) = lines[..i].iter().position(|other| other == line) {
                    return Err(format!("{kind}s {} and {} are identical", j + 1, i + 1));
                }
            }
        }
        Ok(())
    }

    fn size(&self, input: &Grid) -> SizeDescriptor {
        SizeDescriptor::new().with("grid_n", input.len() as u32)
    }

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Grid, ProblemError> {
        let n = size.require(ID, "grid_n")? as usize;
        if !n.is_multiple_of(2) || n > 20 {
            return Err(size_error(ID, size, "grid_n must be even and at most 20"));
        }
        let empty = vec![vec![0; n]; n];
        let full = match model(&empty).solve(1, FILL_BUDGET, Some(rng)) {
            Ok(found) if !found.is_empty() => grid::unflatten(&found[0], n),
            _ => return Err(ProblemError::Generation { problem: ID.into(), size: size.clone(), attempts: 1 }),
        };
        Ok(grid::blank_out(&full, n * n * 3 / 5, rng))
    }

    fn search(&self, input: &Grid, limit: usize) -> Result<Vec<Grid>, ProblemError> {
        let n = input.len();
        let found = model(input).solve(limit, SEARCH_BUDGET, None).map_err(|_| budget_error(ID))?;
        Ok(found.iter().map(|s| grid::unflatten(s, n)).collect())
    }
}
