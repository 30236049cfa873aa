//! A grounder for logic programs with recursive aggregates.
//!
//! Grounding turns a program with variables into an equivalent finite
//! propositional program. The pipeline evaluates strongly connected
//! components of the rule dependency graph in order, tracks certain and
//! possible atoms as a four-valued interpretation, and instantiates rules
//! bottom-up against the possible atoms, so that the output is the
//! simplification of the full instantiation with the same stable and
//! well-founded models.
//!
//! ```
//! use mground::{grounder::GroundOptions, parse_and_ground};
//!
//! let out = parse_and_ground("u(1). u(2). p(X) :- not q(X), u(X).",
//!                            &GroundOptions::default()).unwrap();
//! assert_eq!(out.text(), "u(1).\nu(2).\np(1) :- not q(1), u(1).\np(2) :- not q(2), u(2).\n");
//! ```
//!
//! The `book/` directory of this repository walks through the concepts in
//! detail; its code snippets are compiled as doc-tests.

pub mod aggregates;
pub mod analysis;
#[cfg(doctest)]
mod book;
pub mod ground;
pub mod grounder;
pub mod instantiate;
pub mod ops;
pub mod oracle;
pub mod parser;
pub mod syntax;

pub use ground::{AtomId, AtomTable, GroundRule, Interp4};
pub use grounder::{ground_program, GroundError, GroundOptions, GroundProgramOut};
pub use parser::{parse_program, ParseError};
pub use syntax::{eval_comparison, term_compare, Program};

/// Parses, checks safety, and grounds a program in one step.
pub fn parse_and_ground(
    text: &str,
    options: &GroundOptions,
) -> Result<GroundProgramOut, GroundError> {
    let program = parse_program(text)?;
    ground_program(&program, options)
}
