//! Diagnostics with source positions.

use std::fmt;

use serde::Serialize;

use crate::kernel::ast::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Diagnostic codes.
pub mod code {
    pub const LEX: &str = "E001";
    pub const SYNTAX: &str = "E002";
    pub const DUPLICATE_SECTION: &str = "E003";
    pub const UNKNOWN_IDENT: &str = "E004";
    pub const TYPE_MISMATCH: &str = "E005";
    pub const UNTYPED: &str = "E006";
    pub const INITIALISATION: &str = "E007";
    pub const DOUBLE_ASSIGN: &str = "E008";
    pub const DUPLICATE_DECL: &str = "E009";
    pub const ILL_FORMED: &str = "E010";
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    /// 1-based line and column of the span start.
    pub fn line_col(&self, text: &str) -> (usize, usize) {
        line_col(text, self.span.start as usize)
    }

    pub fn render(&self, file: &str, text: &str) -> String {
        let (line, col) = self.line_col(text);
        format!(
            "{file}:{line}:{col}: error[{}]: {}",
            self.code, self.message
        )
    }

    pub fn to_json(&self, file: &str, text: &str) -> serde_json::Value {
        let (line, col) = self.line_col(text);
        serde_json::json!({
            "file": file,
            "line": line,
            "col": col,
            "code": self.code,
            "message": self.message,
        })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let start = before
        .iter()
        .rposition(|b| *b == b'\n')
        .map_or(0, |p| p + 1);
    let col = String::from_utf8_lossy(&before[start..]).chars().count() + 1;
    (line, col)
}

/// Diagnostics of a whole file, as a JSON array.
pub fn diagnostics_json(diags: &[Diagnostic], file: &str, text: &str) -> serde_json::Value {
    serde_json::Value::Array(diags.iter().map(|d| d.to_json(file, text)).collect())
}
