//! Tokens of the model language.

use crate::kernel::ast::Span;

use super::diag::{code, Diagnostic};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Longest symbols first so that prefix matching picks the right one.
const SYMBOLS: &[&str] = &[
    "<<|", "|>>", "<->", "+->", "-->", "|->", "/<:", "<+", "<|", "|>", "<:", "<=", ">=", "/=",
    "/:", ":=", "=>", "\\/", "/\\", "..", "||", "~", ":", "=", "<", ">", "+", "-", "*", "(", ")",
    "{", "}", "[", "]", ",", ";", "|", "&", "#", "!", ".",
];

pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if text[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if text[i..].starts_with("/*") {
            let Some(end) = text[i + 2..].find("*/") else {
                return Err(Diagnostic::error(
                    code::LEX,
                    Span::new(i, text.len()),
                    "unterminated comment",
                ));
            };
            i += end + 4;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                span: Span::new(start, i),
            });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let value = text[start..i].parse::<i64>().map_err(|_| {
                Diagnostic::error(code::LEX, Span::new(start, i), "integer literal too large")
            })?;
            out.push(Token {
                tok: Tok::Int(value),
                span: Span::new(start, i),
            });
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                out.push(Token {
                    tok: Tok::Sym(sym),
                    span: Span::new(start, i),
                });
            }
            None => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(Diagnostic::error(
                    code::LEX,
                    Span::new(i, i + ch.len_utf8()),
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(text.len(), text.len()),
    });
    Ok(out)
}
