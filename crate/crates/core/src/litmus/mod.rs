//! Litmus tests: parsing, printing, event-graph elaboration and projection.

mod ast;
mod elab;
mod parse;

pub use ast::*;
pub use elab::{compute_dependencies, elaborate, prepare, project, Dependencies, EventStructure, Program, RegProgram, Val, FLAG_REG};
pub use parse::parse_litmus;

/// Parse and prepare in one step.
pub fn load_program(text: &str) -> Result<Program, crate::error::LitmusError> {
    prepare(&parse_litmus(text)?)
}
