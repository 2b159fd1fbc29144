//! DOT text emission for propagation trees, plus the small grammar validator
//! the tests use to check that emitted output is a well-formed digraph.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::PropagationTree;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders a tree as a DOT digraph, one edge statement per propagation edge,
/// in file order. Drawing is left to external tooling.
pub fn tree_to_dot(tree: &PropagationTree, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    for (p, c) in tree.edges() {
        writeln!(out, "  {} -> {};", quote(&p.user_id), quote(&c.user_id)).unwrap();
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, PartialEq)]
enum Tok {
    Ident(String),
    Arrow,
    Semi,
    LBrace,
    RBrace,
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' => {
                chars.next();
                toks.push(Tok::LBrace);
            }
            '}' => {
                chars.next();
                toks.push(Tok::RBrace);
            }
            ';' => {
                chars.next();
                toks.push(Tok::Semi);
            }
            '-' => {
                chars.next();
                if chars.next() != Some('>') {
                    return Err(Error::Graph("dot: stray '-' (expected '->')".into()));
                }
                toks.push(Tok::Arrow);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('\\') => match chars.next() {
                            Some(e) => s.push(e),
                            None => return Err(Error::Graph("dot: unterminated escape".into())),
                        },
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(Error::Graph("dot: unterminated string".into())),
                    }
                }
                toks.push(Tok::Ident(s));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        s.push(ch);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Ident(s));
            }
            other => return Err(Error::Graph(format!("dot: unexpected character {other:?}"))),
        }
    }
    Ok(toks)
}

/// Validates the digraph subset this crate emits: a `digraph` header, an
/// optional name, and a braced list of `a -> b;` edge statements.
pub fn validate_dot(text: &str) -> Result<()> {
    let toks = lex(text)?;
    let mut it = toks.into_iter().peekable();
    match it.next() {
        Some(Tok::Ident(kw)) if kw == "digraph" => {}
        _ => return Err(Error::Graph("dot: expected `digraph` keyword".into())),
    }
    if matches!(it.peek(), Some(Tok::Ident(_))) {
        it.next();
    }
    if it.next() != Some(Tok::LBrace) {
        return Err(Error::Graph("dot: expected '{'".into()));
    }
    loop {
        match it.next() {
            Some(Tok::RBrace) => break,
            Some(Tok::Ident(_)) => {
                if it.next() != Some(Tok::Arrow) {
                    return Err(Error::Graph("dot: expected '->' in edge statement".into()));
                }
                match it.next() {
                    Some(Tok::Ident(_)) => {}
                    _ => return Err(Error::Graph("dot: expected edge target".into())),
                }
                if it.next() != Some(Tok::Semi) {
                    return Err(Error::Graph("dot: expected ';' after edge".into()));
                }
            }
            other => return Err(Error::Graph(format!("dot: unexpected token {other:?}"))),
        }
    }
    if it.next().is_some() {
        return Err(Error::Graph("dot: trailing content after '}'".into()));
    }
    Ok(())
}
