//! Problem suite, prompting, execution and evaluation for instance-agnostic
//! solver programs over first-order combinatorial problems.

pub mod config;
pub mod dataset;
pub mod llm;
pub mod orchestrator;
pub mod problem;
pub mod problems;
pub mod prompt;
pub mod report;
pub mod sandbox;
pub mod smt;
