//! The algebra spec file format: a plain-text description of a finite
//! algebra with optional named relations and named terms.
//!
//! ```text
//! # comment until end of line
//! size 3
//!
//! op m 3 {
//!   0 0 0   # size^arity entries, row-major; line breaks are free, the
//!   0 1 0   # serializer emits one row per argument prefix
//!   ...
//! }
//!
//! rel tau { (0,0) (0,1) (1,1) }
//!
//! term d (m x0 x0 x1)
//! ```
//!
//! Operation tables may be written flat or broken into rows; only the entry
//! count matters. Terms use prefix notation with variables `x0, x1, ..`.

use std::fmt::Write as _;

use thiserror::Error;
use tolim_core::algebra::{Algebra, FiniteAlgebra, Operation, Term};
use tolim_core::BinRel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
}

/// A parsed spec: the validated algebra plus named relations and terms.
#[derive(Debug, Clone)]
pub struct AlgebraSpec {
    pub algebra: FiniteAlgebra,
    pub relations: Vec<(String, BinRel)>,
    pub terms: Vec<(String, Term)>,
}

impl AlgebraSpec {
    pub fn relation(&self, name: &str) -> Option<&BinRel> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r)
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
                line += 1;
                col = 1;
            }
            '(' | ')' | '{' | '}' | ',' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    _ => Tok::Comma,
                };
                out.push(Spanned { tok, line, col });
                chars.next();
                col += 1;
            }
            c if c.is_alphanumeric() || c == '_' || c == '-' => {
                let start_col = col;
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '-' {
                        word.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Spanned {
                    tok: Tok::Word(word),
                    line,
                    col: start_col,
                });
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => self
                .toks
                .last()
                .map(|s| (s.line, s.col + 1))
                .unwrap_or((1, 1)),
        }
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn semantic(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Semantic {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect_word(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some(Spanned {
                tok: Tok::Word(w), ..
            }) => Ok(w),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.syntax(format!("expected {what}")))
            }
        }
    }

    fn expect_number(&mut self, what: &str) -> Result<usize, ParseError> {
        let (line, col) = self.here();
        let word = self.expect_word(what)?;
        word.parse().map_err(|_| ParseError::Syntax {
            line,
            col,
            msg: format!("expected {what}, found `{word}`"),
        })
    }

    fn expect_tok(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(s) if s.tok == tok => Ok(()),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.syntax(format!("expected {what}")))
            }
        }
    }
}

/// Parses a spec document: full parse or first-error report with line and
/// column.
pub fn parse_algebra_spec(text: &str) -> Result<AlgebraSpec, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };

    let keyword = p.expect_word("`size`")?;
    if keyword != "size" {
        p.pos -= 1;
        return Err(p.syntax("a spec starts with `size <n>`"));
    }
    let size = p.expect_number("universe size")?;
    if size == 0 {
        return Err(p.semantic("universe must not be empty"));
    }

    // declarations carry their source position for semantic errors
    type RelDecl = (String, Vec<(usize, usize)>, usize, usize);
    let mut ops: Vec<(Operation, usize, usize)> = Vec::new();
    let mut rel_decls: Vec<RelDecl> = Vec::new();
    let mut term_decls: Vec<(String, RawTerm, usize, usize)> = Vec::new();

    while let Some(s) = p.peek() {
        let (line, col) = (s.line, s.col);
        let keyword = p.expect_word("`op`, `rel` or `term`")?;
        match keyword.as_str() {
            "op" => {
                let name = p.expect_word("operation name")?;
                let arity = p.expect_number("arity")?;
                p.expect_tok(Tok::LBrace, "`{`")?;
                let mut table = Vec::new();
                loop {
                    match p.peek() {
                        Some(Spanned {
                            tok: Tok::RBrace, ..
                        }) => {
                            p.next();
                            break;
                        }
                        Some(Spanned {
                            tok: Tok::Word(_), ..
                        }) => {
                            table.push(p.expect_number("table entry")? as u32);
                        }
                        _ => return Err(p.syntax("expected table entry or `}`")),
                    }
                }
                ops.push((Operation::new(name, arity, table), line, col));
            }
            "rel" => {
                let name = p.expect_word("relation name")?;
                p.expect_tok(Tok::LBrace, "`{`")?;
                let mut pairs = Vec::new();
                loop {
                    match p.peek() {
                        Some(Spanned {
                            tok: Tok::RBrace, ..
                        }) => {
                            p.next();
                            break;
                        }
                        Some(Spanned {
                            tok: Tok::LParen, ..
                        }) => {
                            p.next();
                            let a = p.expect_number("element")?;
                            p.expect_tok(Tok::Comma, "`,`")?;
                            let b = p.expect_number("element")?;
                            p.expect_tok(Tok::RParen, "`)`")?;
                            pairs.push((a, b));
                        }
                        _ => return Err(p.syntax("expected `(a,b)` or `}`")),
                    }
                }
                rel_decls.push((name, pairs, line, col));
            }
            "term" => {
                let name = p.expect_word("term name")?;
                let term = parse_raw_term(&mut p)?;
                term_decls.push((name, term, line, col));
            }
            other => {
                p.pos -= 1;
                return Err(p.syntax(format!(
                    "expected `op`, `rel` or `term`, found `{other}`"
                )));
            }
        }
    }

    let op_list: Vec<Operation> = ops.iter().map(|(op, _, _)| op.clone()).collect();
    let algebra = FiniteAlgebra::new(size, op_list).map_err(|e| ParseError::Semantic {
        line: 1,
        col: 1,
        msg: e.to_string(),
    })?;

    let mut relations = Vec::new();
    for (name, pairs, line, col) in rel_decls {
        if relations.iter().any(|(n, _)| *n == name) {
            return Err(ParseError::Semantic {
                line,
                col,
                msg: format!("duplicate relation name `{name}`"),
            });
        }
        let rel = BinRel::from_pairs(size, pairs).map_err(|e| ParseError::Semantic {
            line,
            col,
            msg: format!("relation `{name}`: {e}"),
        })?;
        relations.push((name, rel));
    }

    let mut terms = Vec::new();
    for (name, raw, line, col) in term_decls {
        if terms.iter().any(|(n, _)| *n == name) {
            return Err(ParseError::Semantic {
                line,
                col,
                msg: format!("duplicate term name `{name}`"),
            });
        }
        let term = resolve_term(&raw, &algebra).map_err(|msg| ParseError::Semantic {
            line,
            col,
            msg: format!("term `{name}`: {msg}"),
        })?;
        terms.push((name, term));
    }

    Ok(AlgebraSpec {
        algebra,
        relations,
        terms,
    })
}

/// Prefix-notation term with unresolved operation names.
enum RawTerm {
    Var(usize),
    App(String, Vec<RawTerm>),
}

fn parse_raw_term(p: &mut Parser) -> Result<RawTerm, ParseError> {
    match p.next() {
        Some(Spanned {
            tok: Tok::Word(w), ..
        }) => parse_var(p, &w),
        Some(Spanned {
            tok: Tok::LParen, ..
        }) => {
            let op = p.expect_word("operation name")?;
            let mut args = Vec::new();
            loop {
                match p.peek() {
                    Some(Spanned {
                        tok: Tok::RParen, ..
                    }) => {
                        p.next();
                        break;
                    }
                    Some(_) => args.push(parse_raw_term(p)?),
                    None => return Err(p.syntax("unclosed `(`")),
                }
            }
            Ok(RawTerm::App(op, args))
        }
        _ => {
            p.pos = p.pos.saturating_sub(1);
            Err(p.syntax("expected a term"))
        }
    }
}

fn parse_var(p: &Parser, word: &str) -> Result<RawTerm, ParseError> {
    let idx = word
        .strip_prefix('x')
        .and_then(|rest| rest.parse::<usize>().ok());
    match idx {
        Some(i) => Ok(RawTerm::Var(i)),
        None => Err(p.syntax(format!("expected a variable like `x0`, found `{word}`"))),
    }
}

fn resolve_term(raw: &RawTerm, alg: &FiniteAlgebra) -> Result<Term, String> {
    match raw {
        RawTerm::Var(i) => Ok(Term::var(*i)),
        RawTerm::App(name, args) => {
            let op = alg
                .op_index(name)
                .ok_or_else(|| format!("unknown operation `{name}`"))?;
            if args.len() != alg.op_arity(op) {
                return Err(format!(
                    "operation `{name}` expects {} arguments, got {}",
                    alg.op_arity(op),
                    args.len()
                ));
            }
            let children = args
                .iter()
                .map(|a| resolve_term(a, alg))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::app(op, children))
        }
    }
}

/// Serializes a spec with one table row per argument prefix; the output
/// parses back to an identical spec.
pub fn serialize_algebra_spec(spec: &AlgebraSpec) -> String {
    let mut out = String::new();
    let size = spec.algebra.size();
    let _ = writeln!(out, "size {size}");
    for op in spec.algebra.ops() {
        let _ = writeln!(out);
        let _ = writeln!(out, "op {} {} {{", op.name(), op.arity());
        if op.arity() == 0 {
            let _ = writeln!(out, "  {}", op.table()[0]);
        } else {
            for row in op.table().chunks(size) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "  {}", cells.join(" "));
            }
        }
        let _ = writeln!(out, "}}");
    }
    for (name, rel) in &spec.relations {
        let _ = writeln!(out);
        let _ = writeln!(out, "rel {name} {{");
        let pairs: Vec<(usize, usize)> = rel.iter().collect();
        for chunk in pairs.chunks(8) {
            let cells: Vec<String> = chunk.iter().map(|(a, b)| format!("({a},{b})")).collect();
            let _ = writeln!(out, "  {}", cells.join(" "));
        }
        let _ = writeln!(out, "}}");
    }
    if !spec.terms.is_empty() {
        let _ = writeln!(out);
    }
    for (name, term) in &spec.terms {
        let _ = writeln!(out, "term {name} {}", term.display(&spec.algebra));
    }
    out
}
