//! Concrete and abstract syntax: terms, goals, graded rules, programs.
//!
//! The surface syntax follows Prolog conventions: `:-` for rule necks,
//! `,`/`;` for conjunction and disjunction, `=>` for embedded implication
//! (binding tighter than `,`, associating to the right), `with D` for rule
//! grades, `a ~ b = 0.7.` for proximity equations and the directives
//! `:- lambda_cut(L).`, `:- t_norm(min|product|luka).`,
//! `:- transitivity(yes|no).`

mod ast;
mod lexer;
mod parser;
mod pretty;

pub use ast::*;
pub use parser::{parse_goal, parse_program, ParseError};
pub use pretty::{
    atom_to_string, clause_to_string, goal_to_string, program_to_string, term_to_string,
};
