//! The textual model language: lexer, parser, type checker and printer.

pub mod diag;
pub mod lexer;
pub mod literal;
pub mod parser;
pub mod pretty;
pub mod typecheck;

use crate::kernel::system::AbstractSystem;

pub use diag::Diagnostic;
pub use parser::{parse_expr, parse_pred, parse_subst, parse_system};
pub use pretty::system_to_string;
pub use typecheck::typecheck;

/// A parsed model together with its source.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub file: String,
    pub text: String,
    pub system: AbstractSystem,
}

impl SourceSpec {
    pub fn parse(file: &str, text: &str) -> Result<SourceSpec, Vec<Diagnostic>> {
        let system = parse_system(text).map_err(|d| vec![d])?;
        Ok(SourceSpec {
            file: file.to_string(),
            text: text.to_string(),
            system,
        })
    }

    pub fn typecheck(&self) -> Result<AbstractSystem, Vec<Diagnostic>> {
        typecheck(self.system.clone())
    }

    pub fn render_diagnostics(&self, diags: &[Diagnostic]) -> String {
        render_all(diags, &self.file, &self.text)
    }
}

pub fn render_all(diags: &[Diagnostic], file: &str, text: &str) -> String {
    diags
        .iter()
        .map(|d| d.render(file, text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses and type checks in one go.
pub fn load(text: &str) -> Result<AbstractSystem, Vec<Diagnostic>> {
    typecheck(parse_system(text).map_err(|d| vec![d])?)
}

/// The comment block before `SYSTEM`, kept verbatim by the formatter.
pub fn leading_comments(text: &str) -> &str {
    let mut rest = text;
    loop {
        let trimmed = rest.trim_start();
        if trimmed.starts_with("//") {
            rest = trimmed.find('\n').map_or("", |i| &trimmed[i + 1..]);
        } else if trimmed.starts_with("/*") {
            match trimmed.find("*/") {
                Some(i) => rest = &trimmed[i + 2..],
                None => return "",
            }
        } else {
            let consumed = text.len() - trimmed.len();
            return text[..consumed].trim();
        }
    }
}

/// Canonical layout of a model source: its header comment followed by the
/// pretty-printed system.
pub fn format_source(text: &str) -> Result<String, Diagnostic> {
    let system = parse_system(text)?;
    let header = leading_comments(text);
    let body = system_to_string(&system);
    Ok(if header.is_empty() {
        body
    } else {
        format!("{header}\n{body}")
    })
}
