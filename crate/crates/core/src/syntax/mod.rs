//! Concrete and abstract syntax of the language: lexing, parsing, printing,
//! substitution, and statement-to-expression normalization.

pub mod ast;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod printer;
pub mod subst;

pub use ast::*;
pub use normalize::{normalize_to_expression, normalize_with, to_lambda, NormalizeError};
pub use parser::{parse_expr, parse_program, parse_type};
pub use printer::{print_expr, print_layout};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported construct at {line}:{col}: {message}")]
    Grammar {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Grammar { line, .. } => *line,
        }
    }
}
