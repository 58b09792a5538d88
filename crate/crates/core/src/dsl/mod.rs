//! The `.svsp` specification language: lexer, parser and canonical printer.

mod format;
mod lexer;
mod parser;

pub use format::{format_decl, format_spec, format_statement, restriction_clauses};
pub use parser::{parse_literal, parse_spec, parse_spec_bytes, ParseOutcome, RESERVED};

pub(crate) use lexer::{lex, syntax as syntax_error};
pub(crate) use parser::Parser;

use crate::diag::Diagnostic;
use crate::model::Decl;

/// Parses text holding exactly one declaration (used for editor changes).
pub fn parse_declaration(text: &str) -> Result<Decl, Vec<Diagnostic>> {
    let mut spec = parse_spec(text)?;
    if spec.decls.len() != 1 {
        let d = Diagnostic::new(
            crate::diag::Code::E000,
            "syntax",
            format!(
                "expected exactly one declaration, found {}",
                spec.decls.len()
            ),
        )
        .at(crate::model::Loc::new(1, 1));
        return Err(vec![d]);
    }
    Ok(spec.decls.remove(0))
}
