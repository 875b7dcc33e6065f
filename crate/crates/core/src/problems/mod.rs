//! The shipped problem adapters and the typed [`Puzzle`] trait behind them.
//!
//! Each adapter implements [`Puzzle`] over structured values; a blanket impl
//! lifts that into the text-level [`ProblemAdapter`] used everywhere else.
//! Reference solving is plain backtracking with forward checking
//! ([`csp`]), independent of any external SMT solver.

pub mod csp;
mod grid;
mod text;

mod binairo;
mod futoshiki;
mod graph_coloring;
mod hamiltonian_path;
mod latin_square;
mod magic_square;
mod n_queens;
mod subset_sum;
mod sudoku;
mod sujiko;
mod survo;
mod vertex_cover;

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::problem::{
    Enumeration, FormatError, Instance, ProblemAdapter, ProblemError, ProblemRng, ProblemSpec, SizeDescriptor,
    Solution, Verdict,
};

pub use binairo::Binairo;
pub use futoshiki::Futoshiki;
pub use graph_coloring::GraphColoring;
pub use hamiltonian_path::HamiltonianPath;
pub use latin_square::LatinSquare;
pub use magic_square::MagicSquare;
pub use n_queens::NQueens;
pub use subset_sum::SubsetSum;
pub use sudoku::Sudoku;
pub use sujiko::Sujiko;
pub use survo::Survo;
pub use vertex_cover::VertexCover;

/// Generation attempts before giving up on a size.
pub const GENERATION_ATTEMPTS: usize = 50;

/// Search nodes the reference oracle may expand per call.
pub const SEARCH_BUDGET: u64 = 20_000_000;

/// All twelve adapters, in registry order.
pub fn all() -> Vec<Arc<dyn ProblemAdapter>> {
    vec![
        Arc::new(Binairo),
        Arc::new(Futoshiki),
        Arc::new(GraphColoring),
        Arc::new(HamiltonianPath),
        Arc::new(LatinSquare),
        Arc::new(MagicSquare),
        Arc::new(NQueens),
        Arc::new(SubsetSum),
        Arc::new(Sudoku),
        Arc::new(Sujiko),
        Arc::new(Survo),
        Arc::new(VertexCover),
    ]
}

/// Typed view of a problem. Implementors get [`ProblemAdapter`] for free.
pub trait Puzzle: Send + Sync {
    type Input: Clone;
    type Output;

    fn spec(&self) -> ProblemSpec;

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor);

    fn parse_input(&self, text: &str) -> Result<Self::Input, FormatError>;

    fn write_input(&self, input: &Self::Input) -> String;

    /// Parse a candidate output. Any failure here is a Malformed verdict.
    fn parse_output(&self, input: &Self::Input, text: &str) -> Result<Self::Output, FormatError>;

    fn write_output(&self, output: &Self::Output) -> String;

    /// `Err(reason)` names the first violated constraint.
    fn check(&self, input: &Self::Input, output: &Self::Output) -> Result<(), String>;

    fn size(&self, input: &Self::Input) -> SizeDescriptor;

    fn generate_input(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Self::Input, ProblemError>;

    /// Up to `limit` distinct solutions. An empty result proves infeasibility.
    fn search(&self, input: &Self::Input, limit: usize) -> Result<Vec<Self::Output>, ProblemError>;
}

impl<P: Puzzle> ProblemAdapter for P {
    fn spec(&self) -> ProblemSpec {
        Puzzle::spec(self)
    }

    fn default_sizes(&self) -> (SizeDescriptor, SizeDescriptor) {
        Puzzle::default_sizes(self)
    }

    fn canonicalize(&self, text: &str) -> Result<String, FormatError> {
        let input = self.parse_input(text)?;
        Ok(self.write_input(&input))
    }

    fn size_of(&self, text: &str) -> Result<SizeDescriptor, FormatError> {
        Ok(self.size(&self.parse_input(text)?))
    }

    fn generate(&self, size: &SizeDescriptor, rng: &mut ProblemRng) -> Result<Instance, ProblemError> {
        let id = Puzzle::spec(self).id;
        if let Err(reason) = size.validate() {
            return Err(ProblemError::InvalidSize { problem: id, size: size.clone(), reason });
        }
        for _ in 0..GENERATION_ATTEMPTS {
            let input = self.generate_input(size, rng)?;
            if !self.search(&input, 1)?.is_empty() {
                return Ok(Instance {
                    problem_id: id,
                    text: self.write_input(&input),
                    size: self.size(&input),
                    seed: None,
                });
            }
        }
        Err(ProblemError::Generation { problem: id, size: size.clone(), attempts: GENERATION_ATTEMPTS })
    }

    fn verify(&self, instance: &Instance, candidate: &str) -> Verdict {
        let input = match self.parse_input(&instance.text) {
            Ok(input) => input,
            Err(e) => return Verdict::malformed(format!("instance does not parse: {e}")),
        };
        let output = match self.parse_output(&input, candidate) {
            Ok(output) => output,
            Err(e) => return Verdict::malformed(e.to_string()),
        };
        match self.check(&input, &output) {
            Ok(()) => Verdict::correct(),
            Err(reason) => Verdict::incorrect(reason),
        }
    }

    fn solve(&self, instance: &Instance) -> Result<Solution, ProblemError> {
        let input = self
            .parse_input(&instance.text)
            .map_err(|source| ProblemError::Format { problem: Puzzle::spec(self).id, source })?;
        Ok(match self.search(&input, 1)?.first() {
            Some(output) => Solution::Found(self.write_output(output)),
            None => Solution::Infeasible,
        })
    }

    fn enumerate(&self, instance: &Instance, cap: usize) -> Result<Enumeration, ProblemError> {
        let cap = cap.max(1);
        let input = self
            .parse_input(&instance.text)
            .map_err(|source| ProblemError::Format { problem: Puzzle::spec(self).id, source })?;
        let found = self.search(&input, cap + 1)?;
        let truncated = found.len() > cap;
        let solutions: BTreeSet<String> = found.iter().take(cap).map(|o| self.write_output(o)).collect();
        Ok(Enumeration { solutions, truncated })
    }
}

pub(crate) fn size_error(problem: &str, size: &SizeDescriptor, reason: impl Into<String>) -> ProblemError {
    ProblemError::InvalidSize { problem: problem.to_string(), size: size.clone(), reason: reason.into() }
}

pub(crate) fn budget_error(problem: &str) -> ProblemError {
    ProblemError::Budget { problem: problem.to_string(), budget: SEARCH_BUDGET }
}
