//! Concrete syntax: lexer, parsers, and the pretty-printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pluscal;
pub mod printer;

use thiserror::Error;

pub use ast::*;
pub use parser::{parse_expr, parse_module, parse_proof};
pub use pluscal::{parse_pluscal, PlusCalAlgorithm};
pub use printer::{print_expr, print_module, print_proof};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    Scope { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` is used before its definition")]
    Order { line: usize, col: usize, name: String },
    #[error("{line}:{col}: step list does not end with QED")]
    MissingQed { line: usize, col: usize },
    #[error("{line}:{col}: step {label} is not visible here")]
    DanglingStepReference { line: usize, col: usize, label: String },
    #[error("{line}:{col}: statement must be labeled")]
    UnlabeledStatement { line: usize, col: usize },
    #[error("{line}:{col}: unknown goto target `{label}`")]
    UnknownGotoTarget { line: usize, col: usize, label: String },
}

impl ParseError {
    pub(crate) fn syntax(line: usize, col: usize, msg: &str) -> ParseError {
        ParseError::Syntax {
            line,
            col,
            msg: msg.to_string(),
        }
    }

    /// 1-based line and column of the error.
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Scope { line, col, .. }
            | ParseError::Order { line, col, .. }
            | ParseError::MissingQed { line, col }
            | ParseError::DanglingStepReference { line, col, .. }
            | ParseError::UnlabeledStatement { line, col }
            | ParseError::UnknownGotoTarget { line, col, .. } => (*line, *col),
        }
    }
}
