//! Textual syntax for activity diagrams (`.ad` files).
//!
//! ```text
//! activity controlledLoop {
//!   input project : {long, short};
//!   local iterations : 0 .. 4;
//!   initial start;
//!   action receive "receive project" { iterations := 0; };
//!   decision d;
//!   edge d -> report [(project = short) | (iterations = 3)];
//! }
//! ```
//!
//! Statements end with `;` and `#` starts a comment. Declaration order is
//! preserved in the resulting diagram.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::expr::{ArithOp, CmpOp, Expr};
use crate::model::{ActivityDiagram, Assignment, Domain, Node, NodeKind, Transition, Value, VarKind, VariableDecl};
use crate::validate::Location;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub begin: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

/// Spans of declarations, for attaching positions to validation results.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub nodes: HashMap<String, SourceSpan>,
    pub vars: HashMap<String, SourceSpan>,
    pub edges: Vec<SourceSpan>,
    pub header: Option<SourceSpan>,
}

impl SourceMap {
    /// Where a validation finding points in the source, if it was parsed.
    pub fn span_of(&self, location: &Location) -> Option<SourceSpan> {
        match location {
            Location::Diagram => self.header,
            Location::Node { id } => self.nodes.get(id).copied(),
            Location::Edge { index, .. } => self.edges.get(*index).copied(),
            Location::Var { name } => self.vars.get(name).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const PUNCTS: [&str; 23] = [
    "..", "->", ":=", "!=", "<=", ">=", "{", "}", ";", ":", ",", "(", ")", "[", "]", "&", "|", "!", "=", "<", ">", "+",
    "-",
];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn span_from(&self, begin: usize, line: usize, column: usize) -> SourceSpan {
        SourceSpan { begin, end: self.pos, line, column }
    }

    fn bump(&mut self, c: char) {
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump(c);
                } else if c == '#' {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump(c);
                    }
                } else {
                    break;
                }
            }
            let (begin, line, column) = (self.pos, self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, self.span_from(begin, line, column)));
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    self.bump(c);
                }
                Tok::Ident(self.src[begin..self.pos].to_string())
            } else if c.is_ascii_digit() {
                while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                    self.bump(c);
                }
                let text = &self.src[begin..self.pos];
                let value = text.parse().map_err(|_| ParseError {
                    span: self.span_from(begin, line, column),
                    message: format!("integer literal `{text}` is out of range"),
                })?;
                Tok::Int(value)
            } else if c == '"' {
                self.bump(c);
                let mut s = String::new();
                loop {
                    match self.peek() {
                        None | Some('\n') => {
                            return Err(ParseError {
                                span: self.span_from(begin, line, column),
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            self.bump('"');
                            break;
                        }
                        Some('\\') => {
                            self.bump('\\');
                            match self.peek() {
                                Some(e @ ('"' | '\\')) => {
                                    self.bump(e);
                                    s.push(e);
                                }
                                _ => {
                                    return Err(ParseError {
                                        span: self.span_from(begin, line, column),
                                        message: "unsupported escape in string".into(),
                                    })
                                }
                            }
                        }
                        Some(c) => {
                            self.bump(c);
                            s.push(c);
                        }
                    }
                }
                Tok::Str(s)
            } else if let Some(p) = PUNCTS.iter().find(|p| self.src[self.pos..].starts_with(**p)) {
                for ch in p.chars() {
                    self.bump(ch);
                }
                Tok::Punct(p)
            } else {
                self.bump(c);
                return Err(ParseError {
                    span: self.span_from(begin, line, column),
                    message: format!("unexpected character `{c}`"),
                });
            };
            out.push((tok, self.span_from(begin, line, column)));
        }
    }
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.idx].1
    }

    fn advance(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { span: self.span(), message: message.into() })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<SourceSpan> {
        if self.is_punct(p) {
            Ok(self.advance().1)
        } else {
            self.error(format!("expected `{p}`, found {}", self.peek()))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> PResult<SourceSpan> {
        if self.is_keyword(k) {
            Ok(self.advance().1)
        } else {
            self.error(format!("expected `{k}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                let span = self.advance().1;
                Ok((s, span))
            }
            other => self.error(format!("expected an identifier, found {other}")),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let negative = self.eat_punct("-");
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(if negative { -i } else { i })
            }
            other => self.error(format!("expected an integer, found {other}")),
        }
    }

    /// Skips to just past the next `;` at the current brace depth, or stops
    /// before a closing brace of the enclosing block.
    fn recover(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") if depth == 0 => return,
                Tok::Punct("}") => depth -= 1,
                Tok::Punct(";") if depth == 0 => {
                    self.advance();
                    return;
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn domain(&mut self) -> PResult<Domain> {
        if self.eat_punct("{") {
            let mut members = Vec::new();
            loop {
                members.push(self.ident()?.0);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("}")?;
            Ok(Domain::Enumeration(members))
        } else {
            let lo = self.int()?;
            self.expect_punct("..")?;
            let hi = self.int()?;
            Ok(Domain::Range { lo, hi })
        }
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek() {
            Tok::Ident(_) => Ok(Value::Sym(self.ident()?.0)),
            _ => Ok(Value::Int(self.int()?)),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.conj()?;
        while self.eat_punct("|") {
            lhs = Expr::or(lhs, self.conj()?);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Expr> {
        let mut lhs = self.comparison()?;
        while self.eat_punct("&") {
            lhs = Expr::and(lhs, self.comparison()?);
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        Ok(Expr::cmp(op, lhs, self.sum()?))
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => ArithOp::Add,
                Tok::Punct("-") => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            lhs = Expr::arith(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("!") {
            return Ok(Expr::not(self.unary()?));
        }
        match self.peek().clone() {
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("-") | Tok::Int(_) => Ok(Expr::Int(self.int()?)),
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?.0)),
            other => self.error(format!("expected an expression, found {other}")),
        }
    }
}

const RESERVED: [&str; 14] = [
    "activity", "input", "local", "init", "initial", "final", "action", "decision", "merge", "fork", "join", "edge",
    "true", "false",
];

fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}

struct Builder {
    ad: ActivityDiagram,
    map: SourceMap,
    errors: Vec<ParseError>,
}

impl Builder {
    fn statement(&mut self, p: &mut Parser) -> PResult<()> {
        let start = p.span();
        let Tok::Ident(kw) = p.peek().clone() else {
            return p.error(format!("expected a declaration, found {}", p.peek()));
        };
        p.advance();
        match kw.as_str() {
            "input" | "local" => {
                let (name, span) = p.ident()?;
                p.expect_punct(":")?;
                let domain = p.domain()?;
                let kind = if kw == "input" { VarKind::Input } else { VarKind::Local };
                let init = if kind == VarKind::Local && p.is_keyword("init") {
                    p.advance();
                    Some(p.value()?)
                } else {
                    None
                };
                p.expect_punct(";")?;
                if self.ad.var(&name).is_some() {
                    return Err(ParseError { span, message: format!("variable `{name}` declared twice") });
                }
                self.map.vars.insert(name.clone(), span);
                self.ad.vars.push(VariableDecl { name, domain, kind, init });
            }
            "initial" | "final" | "decision" | "merge" | "fork" | "join" | "action" => {
                let (id, span) = p.ident()?;
                let kind = match kw.as_str() {
                    "initial" => NodeKind::Initial,
                    "final" => NodeKind::Final,
                    "decision" => NodeKind::Decision,
                    "merge" => NodeKind::Merge,
                    "fork" => NodeKind::Fork,
                    "join" => NodeKind::Join,
                    _ => NodeKind::Action,
                };
                let mut node = Node::new(id.clone(), kind);
                if kind == NodeKind::Action {
                    let Tok::Str(name) = p.peek().clone() else {
                        return p.error(format!("expected a quoted action name, found {}", p.peek()));
                    };
                    p.advance();
                    node.action_name = Some(name);
                    if p.eat_punct("{") {
                        while !p.is_punct("}") {
                            let (target, _) = p.ident()?;
                            p.expect_punct(":=")?;
                            let value = p.expr()?;
                            p.expect_punct(";")?;
                            node.assignments.push(Assignment { target, value });
                        }
                        p.expect_punct("}")?;
                    }
                }
                p.expect_punct(";")?;
                if self.ad.node(&id).is_some() {
                    return Err(ParseError { span, message: format!("node `{id}` declared twice") });
                }
                self.map.nodes.insert(id, span);
                self.ad.nodes.push(node);
            }
            "edge" => {
                let (src, _) = p.ident()?;
                p.expect_punct("->")?;
                let (tgt, _) = p.ident()?;
                let guard = if p.eat_punct("[") {
                    let g = p.expr()?;
                    p.expect_punct("]")?;
                    g
                } else {
                    Expr::Bool(true)
                };
                let end = p.expect_punct(";")?;
                let span = SourceSpan { end: end.end, ..start };
                self.map.edges.push(span);
                self.ad.transitions.push(Transition { src, tgt, guard });
            }
            other => return Err(ParseError { span: start, message: format!("unknown declaration keyword `{other}`") }),
        }
        Ok(())
    }

    /// Splits identifiers in expressions into variable references and
    /// enumeration symbols, and checks that edges name declared nodes.
    fn resolve(&mut self) {
        let vars: HashSet<String> = self.ad.vars.iter().map(|v| v.name.clone()).collect();
        let fix = |e: &mut Expr| resolve_idents(e, &vars);
        for t in &mut self.ad.transitions {
            fix(&mut t.guard);
        }
        for n in &mut self.ad.nodes {
            for a in &mut n.assignments {
                fix(&mut a.value);
            }
        }
        for (t, tr) in self.ad.transitions.iter().enumerate() {
            for end in [&tr.src, &tr.tgt] {
                if self.ad.node(end).is_none() {
                    self.errors.push(ParseError {
                        span: self.map.edges[t],
                        message: format!("edge refers to unknown node `{end}`"),
                    });
                }
            }
        }
    }
}

fn resolve_idents(e: &mut Expr, vars: &HashSet<String>) {
    match e {
        Expr::Var(name) if !vars.contains(name) => *e = Expr::Sym(std::mem::take(name)),
        Expr::Not(inner) => resolve_idents(inner, vars),
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
            resolve_idents(a, vars);
            resolve_idents(b, vars);
        }
        _ => {}
    }
}

/// Parses a diagram and returns declaration spans alongside it.
pub fn parse_ad_with_spans(text: &str) -> Result<(ActivityDiagram, SourceMap), Vec<ParseError>> {
    let toks = Lexer { src: text, pos: 0, line: 1, col: 1 }.tokens().map_err(|e| vec![e])?;
    let mut p = Parser { toks, idx: 0 };
    let header = p.span();
    if let Err(e) = p.expect_keyword("activity") {
        return Err(vec![ParseError { span: e.span, message: "expected an `activity NAME { ... }` header".into() }]);
    }
    let name = p.ident().map_err(|e| vec![e])?.0;
    p.expect_punct("{").map_err(|e| vec![e])?;
    let mut b = Builder {
        ad: ActivityDiagram::new(name),
        map: SourceMap { header: Some(header), ..SourceMap::default() },
        errors: Vec::new(),
    };
    while !p.is_punct("}") && *p.peek() != Tok::Eof {
        if let Err(e) = b.statement(&mut p) {
            b.errors.push(e);
            p.recover();
        }
    }
    if let Err(e) = p.expect_punct("}") {
        b.errors.push(e);
    } else if *p.peek() != Tok::Eof {
        b.errors.push(ParseError { span: p.span(), message: format!("unexpected {} after the activity", p.peek()) });
    }
    b.resolve();
    if b.errors.is_empty() {
        Ok((b.ad, b.map))
    } else {
        Err(b.errors)
    }
}

pub fn parse_ad(text: &str) -> Result<ActivityDiagram, Vec<ParseError>> {
    parse_ad_with_spans(text).map(|(ad, _)| ad)
}

fn print_domain(d: &Domain) -> String {
    match d {
        Domain::Enumeration(m) => format!("{{{}}}", m.join(", ")),
        Domain::Range { lo, hi } => format!("{lo} .. {hi}"),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Prints a diagram in the textual syntax; `parse_ad` reads it back.
pub fn print_ad(ad: &ActivityDiagram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "activity {} {{", ad.name);
    for v in &ad.vars {
        let kw = match v.kind {
            VarKind::Input => "input",
            VarKind::Local => "local",
        };
        let _ = write!(out, "  {kw} {} : {}", v.name, print_domain(&v.domain));
        if let Some(init) = &v.init {
            let _ = write!(out, " init {init}");
        }
        out.push_str(";\n");
    }
    if !ad.vars.is_empty() {
        out.push('\n');
    }
    for n in &ad.nodes {
        let _ = write!(out, "  {} {}", n.kind.keyword(), n.id);
        if let Some(name) = &n.action_name {
            let _ = write!(out, " {}", quote(name));
            if !n.assignments.is_empty() {
                out.push_str(" {");
                for a in &n.assignments {
                    let _ = write!(out, " {} := {};", a.target, a.value);
                }
                out.push_str(" }");
            }
        }
        out.push_str(";\n");
    }
    if !ad.transitions.is_empty() {
        out.push('\n');
    }
    for t in &ad.transitions {
        let _ = write!(out, "  edge {} -> {}", t.src, t.tgt);
        if t.has_guard() {
            let _ = write!(out, " [{}]", t.guard);
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    out
}
