//! Expression grammar.
//!
//! Strict form: `Expr := Ident | "(" Expr Op Expr ")"`, `Op := "&" | "|"`.
//! Tolerant form additionally allows omitted parentheses, resolved
//! left-associatively with `&` binding tighter than `|`. `∧` and `∨` are
//! accepted as aliases. Identifiers match `[A-Za-z0-9_]+`.

use std::collections::{BTreeSet, HashMap};

use super::tree::{ExprTree, Op};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Op(Op),
    Open,
    Close,
}

fn err(position: usize, message: impl Into<String>) -> Error {
    Error::Expr {
        position,
        message: message.into(),
    }
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::Open, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::Close, i));
                i += 1;
            }
            '&' | '∧' => {
                out.push((Tok::Op(Op::And), i));
                i += 1;
            }
            '|' | '∨' => {
                out.push((Tok::Op(Op::Or), i));
                i += 1;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), start));
            }
            other => return Err(err(i, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

/// Configurable expression parser.
#[derive(Debug, Clone, Default)]
pub struct ExprParser {
    strict: bool,
    known: Option<BTreeSet<String>>,
}

impl ExprParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// Require the fully parenthesised binary form.
    pub fn strict(mut self, yes: bool) -> Self {
        self.strict = yes;
        self
    }

    /// Reject identifiers outside `sources`.
    pub fn known_sources<I, S>(mut self, sources: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.known = Some(sources.into_iter().map(Into::into).collect());
        self
    }

    pub fn parse(&self, input: &str) -> Result<ExprTree> {
        let toks = lex(input)?;
        let end = input.chars().count();
        if toks.is_empty() {
            return Err(err(0, "empty expression"));
        }
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            end,
            seen: HashMap::new(),
            known: self.known.as_ref(),
        };
        let tree = if self.strict { p.strict_expr()? } else { p.or_expr()? };
        if let Some((t, at)) = toks.get(p.pos) {
            let what = if *t == Tok::Close {
                "unbalanced ')'"
            } else {
                "unexpected trailing input"
            };
            return Err(err(*at, what));
        }
        Ok(tree)
    }
}

/// Tolerant parse with no source restriction.
pub fn parse(input: &str) -> Result<ExprTree> {
    ExprParser::new().parse(input)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
    seen: HashMap<String, usize>,
    known: Option<&'a BTreeSet<String>>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn ident(&mut self, name: &str, at: usize) -> Result<ExprTree> {
        if let Some(known) = self.known {
            if !known.contains(name) {
                return Err(err(at, format!("unknown source {name:?}")));
            }
        }
        if let Some(first) = self.seen.insert(name.to_string(), at) {
            return Err(err(
                at,
                format!("source {name:?} repeated (first used at {first})"),
            ));
        }
        Ok(ExprTree::leaf(name))
    }

    fn expect_close(&mut self, open_at: usize) -> Result<()> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(err(self.here(), "expected ')'")),
            None => Err(err(open_at, "unbalanced '('")),
        }
    }

    fn strict_expr(&mut self) -> Result<ExprTree> {
        let at = self.here();
        match self.toks.get(self.pos).cloned() {
            Some((Tok::Ident(name), p)) => {
                self.pos += 1;
                self.ident(&name, p)
            }
            Some((Tok::Open, _)) => {
                self.pos += 1;
                let l = self.strict_expr()?;
                let op = match self.peek() {
                    Some(Tok::Op(op)) => *op,
                    Some(Tok::Close) => return Err(err(self.here(), "expected operator before ')'")),
                    _ => return Err(err(self.here(), "expected operator")),
                };
                self.pos += 1;
                let r = self.strict_expr()?;
                self.expect_close(at)?;
                Ok(ExprTree::binary(op, l, r))
            }
            Some((Tok::Close, p)) => Err(err(p, "unbalanced ')'")),
            Some((Tok::Op(_), p)) => Err(err(p, "expected operand")),
            None => Err(err(at, "expected operand")),
        }
    }

    fn or_expr(&mut self) -> Result<ExprTree> {
        let mut acc = self.and_expr()?;
        while self.peek() == Some(&Tok::Op(Op::Or)) {
            self.pos += 1;
            let r = self.and_expr()?;
            acc = ExprTree::or(acc, r);
        }
        Ok(acc)
    }

    fn and_expr(&mut self) -> Result<ExprTree> {
        let mut acc = self.atom()?;
        while self.peek() == Some(&Tok::Op(Op::And)) {
            self.pos += 1;
            let r = self.atom()?;
            acc = ExprTree::and(acc, r);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<ExprTree> {
        let at = self.here();
        match self.toks.get(self.pos).cloned() {
            Some((Tok::Ident(name), p)) => {
                self.pos += 1;
                self.ident(&name, p)
            }
            Some((Tok::Open, _)) => {
                self.pos += 1;
                let e = self.or_expr()?;
                self.expect_close(at)?;
                Ok(e)
            }
            Some((Tok::Close, p)) => Err(err(p, "unbalanced ')'")),
            Some((Tok::Op(_), p)) => Err(err(p, "expected operand")),
            None => Err(err(at, "expected operand")),
        }
    }
}
