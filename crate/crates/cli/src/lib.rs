//! Text front end for `diffspace`: a small statement language for defining
//! spaces, elements and assignments, and running checks against them.

pub mod ast;
pub mod diagnostic;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod report;
pub mod runner;

pub use diagnostic::Diagnostic;
pub use parser::parse_program;
pub use printer::print_program;
pub use report::{FloatFormat, Record, Report};
pub use runner::run;

/// Parses and runs `src` under `seed`.
pub fn run_source(src: &str, seed: u64) -> Result<Report, Diagnostic> {
    Ok(run(&parse_program(src)?, seed))
}
