//! Concrete syntax: lexer, parser, printer, and declaration files.

pub mod files;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod span;

pub use files::{Decl, SdlFile};
pub use parser::{
    parse_formula, parse_prob_formula, parse_program, parse_substitution, parse_term, ScriptCursor,
};
pub use printer::{print_formula, print_program, print_term};
pub use span::SourceSpan;

/// A syntax or parse-time well-formedness error with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}
