use crate::expr::{ArithOp, CmpOp};
use crate::text::SourceSpan;

use super::{Define, Literal, SmvExpr, SmvModule, SmvType, SmvVarDecl, Trans};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct SmvParseError {
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

const PUNCTS: [&str; 22] = [
    "<->", ":=", "->", "!=", "<=", ">=", "..", "{", "}", "(", ")", ";", ":", ",", "&", "|", "!", "=", "<", ">", "+",
    "-",
];

/// Section keywords of full SMV that the subset does not accept.
const UNSUPPORTED: [&str; 17] = [
    "ASSIGN",
    "SPEC",
    "CTLSPEC",
    "LTLSPEC",
    "INVARSPEC",
    "PSLSPEC",
    "COMPUTE",
    "FAIRNESS",
    "JUSTICE",
    "COMPASSION",
    "INVAR",
    "IVAR",
    "FROZENVAR",
    "CONSTANTS",
    "ISA",
    "case",
    "process",
];

const SECTIONS: [&str; 5] = ["VAR", "INIT", "DEFINE", "TRANS", "MODULE"];

fn lex(src: &str) -> Result<Vec<(Tok, SourceSpan)>, SmvParseError> {
    let bytes = src.as_bytes();
    let (mut pos, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut out = Vec::new();
    let advance = |pos: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for &b in &bytes[*pos..*pos + n] {
            if b == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *pos += n;
    };
    loop {
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                advance(&mut pos, &mut line, &mut col, 1);
            } else if src[pos..].starts_with("--") {
                let len = src[pos..].find('\n').unwrap_or(src.len() - pos);
                advance(&mut pos, &mut line, &mut col, len);
            } else {
                break;
            }
        }
        let (begin, l0, c0) = (pos, line, col);
        let span = |end: usize| SourceSpan { begin, end, line: l0, column: c0 };
        if pos >= bytes.len() {
            out.push((Tok::Eof, span(pos)));
            return Ok(out);
        }
        let c = bytes[pos];
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            let len = src[pos..].find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(src.len() - pos);
            let word = src[pos..pos + len].to_string();
            advance(&mut pos, &mut line, &mut col, len);
            Tok::Ident(word)
        } else if c.is_ascii_digit() {
            let len = src[pos..].find(|ch: char| !ch.is_ascii_digit()).unwrap_or(src.len() - pos);
            let text = &src[pos..pos + len];
            advance(&mut pos, &mut line, &mut col, len);
            Tok::Int(
                text.parse().map_err(|_| SmvParseError {
                    span: span(pos),
                    message: format!("integer `{text}` out of range"),
                })?,
            )
        } else if let Some(p) = PUNCTS.iter().find(|p| src[pos..].starts_with(**p)) {
            advance(&mut pos, &mut line, &mut col, p.len());
            Tok::Punct(p)
        } else {
            let ch = src[pos..].chars().next().unwrap();
            return Err(SmvParseError {
                span: SourceSpan { begin, end: pos + ch.len_utf8(), line: l0, column: c0 },
                message: format!("unexpected character `{ch}`"),
            });
        };
        out.push((tok, span(pos)));
    }
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    idx: usize,
}

type PResult<T> = Result<T, SmvParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.idx + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.idx].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SmvParseError { span: self.span(), message: message.into() })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.advance();
        }
        hit
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", describe(self.peek())))
        }
    }

    fn section_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if SECTIONS.contains(&s.as_str()) || UNSUPPORTED.contains(&s.as_str()))
            || *self.peek() == Tok::Eof
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !SECTIONS.contains(&s.as_str()) && !UNSUPPORTED.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            other => self.error(format!("expected an identifier, found {}", describe(&other))),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat("-");
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(if neg { -i } else { i })
            }
            other => self.error(format!("expected an integer, found {}", describe(&other))),
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek() {
            Tok::Ident(_) => Ok(Literal::Sym(self.ident()?)),
            _ => Ok(Literal::Int(self.int()?)),
        }
    }

    fn var_type(&mut self) -> PResult<SmvType> {
        if matches!(self.peek(), Tok::Ident(s) if s == "boolean") {
            self.advance();
            return Ok(SmvType::Boolean);
        }
        if self.eat("{") {
            let mut lits = vec![self.literal()?];
            while self.eat(",") {
                lits.push(self.literal()?);
            }
            self.expect("}")?;
            return Ok(SmvType::Enum(lits));
        }
        let lo = self.int()?;
        self.expect("..")?;
        let hi = self.int()?;
        if lo > hi {
            return self.error(format!("empty range {lo}..{hi}"));
        }
        Ok(SmvType::Enum((lo..=hi).map(Literal::Int).collect()))
    }

    fn expr(&mut self) -> PResult<SmvExpr> {
        let lhs = self.iff()?;
        if self.eat("->") {
            return Ok(SmvExpr::imp(lhs, self.expr()?));
        }
        Ok(lhs)
    }

    fn iff(&mut self) -> PResult<SmvExpr> {
        let mut lhs = self.disj()?;
        while self.eat("<->") {
            lhs = SmvExpr::iff(lhs, self.disj()?);
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<SmvExpr> {
        let mut parts = vec![self.conj()?];
        while self.eat("|") {
            parts.push(self.conj()?);
        }
        Ok(SmvExpr::or(parts))
    }

    fn conj(&mut self) -> PResult<SmvExpr> {
        let mut parts = vec![self.comparison()?];
        while self.eat("&") {
            parts.push(self.comparison()?);
        }
        Ok(SmvExpr::and(parts))
    }

    fn comparison(&mut self) -> PResult<SmvExpr> {
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
        Ok(SmvExpr::cmp(op, lhs, self.sum()?))
    }

    fn sum(&mut self) -> PResult<SmvExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => ArithOp::Add,
                Tok::Punct("-") => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            lhs = SmvExpr::arith(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult<SmvExpr> {
        if self.eat("!") {
            return Ok(SmvExpr::not(self.unary()?));
        }
        match self.peek().clone() {
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Punct("-") | Tok::Int(_) => Ok(SmvExpr::Int(self.int()?)),
            Tok::Ident(s) if s == "TRUE" || s == "FALSE" => {
                self.advance();
                Ok(SmvExpr::Int(i64::from(s == "TRUE")))
            }
            Tok::Ident(s) if s == "next" && *self.peek_at(1) == Tok::Punct("(") => {
                self.advance();
                self.advance();
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(SmvExpr::next(inner))
            }
            Tok::Ident(_) => Ok(SmvExpr::Ref(self.ident()?)),
            other => self.error(format!("expected an expression, found {}", describe(&other))),
        }
    }

    fn module_header(&mut self) -> PResult<()> {
        self.advance();
        let name = self.ident()?;
        if self.is_punct("(") {
            return self.error(format!("module `{name}` has parameters; only a parameterless module is supported"));
        }
        Ok(())
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses the subset printed by [`print_smv`](super::print_smv). Comments
/// are dropped; identifiers are resolved against declared variables and
/// DEFINEs.
pub fn parse_smv_subset(text: &str) -> Result<SmvModule, SmvParseError> {
    let mut p = Parser { toks: lex(text)?, idx: 0 };
    let mut m = SmvModule::default();
    let mut seen_module = false;
    while *p.peek() != Tok::Eof {
        let Tok::Ident(kw) = p.peek().clone() else {
            return p.error(format!("expected a section keyword, found {}", describe(p.peek())));
        };
        match kw.as_str() {
            "MODULE" => {
                if seen_module || p.idx != 0 {
                    return p.error("only a single leading MODULE declaration is supported");
                }
                seen_module = true;
                p.module_header()?;
            }
            "VAR" => {
                p.advance();
                while !p.section_start() {
                    let name = p.ident()?;
                    p.expect(":")?;
                    let ty = p.var_type()?;
                    p.expect(";")?;
                    m.vars.push(SmvVarDecl { name, ty });
                }
            }
            "INIT" => {
                p.advance();
                let e = p.expr()?;
                p.eat(";");
                m.inits.extend(e.conjuncts().iter().cloned());
            }
            "DEFINE" => {
                p.advance();
                while !p.section_start() {
                    let name = p.ident()?;
                    p.expect(":=")?;
                    let expr = p.expr()?;
                    p.expect(";")?;
                    m.defines.push(Define::new(name, expr));
                }
            }
            "TRANS" => {
                p.advance();
                let e = p.expr()?;
                p.eat(";");
                m.trans.push(Trans::new(e));
            }
            other if UNSUPPORTED.contains(&other) => {
                return p.error(format!("`{other}` is outside the supported SMV subset"));
            }
            other => return p.error(format!("unknown section `{other}`")),
        }
    }
    m.resolve_identifiers();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_assign() {
        let err = parse_smv_subset("VAR\n  x : boolean;\nASSIGN\n  init(x) := 1;\n").unwrap_err();
        assert!(err.message.contains("ASSIGN"));
        assert_eq!(err.span.line, 3);
        assert_eq!(err.span.column, 1);
    }

    #[test]
    fn rejects_parameterised_module() {
        let err = parse_smv_subset("MODULE user(a, b)\nVAR x : boolean;").unwrap_err();
        assert!(err.message.contains("parameters"));
        assert!(parse_smv_subset("MODULE main\nVAR x : boolean;").is_ok());
    }

    #[test]
    fn parses_listing_style() {
        let src = "VAR\n  acnode : {n0_initial, n1, nop};\n  in_n1 : boolean;\n  it : {0,1,2};\n\
                   INIT in_n1 = 0 & it = ( 0 ) & acnode = n0_initial;\n\
                   DEFINE\n  e_enabled := in_n1 ;\n  e_taken := e_enabled & -- note\n    next (it) = it +1 & next(acnode = n1);\n\
                   TRANS\n  ( (next(acnode=nop) <-> in_n1 ) ) & ( in_n1 | ( (e_taken) ) ) ;\n\
                   TRANS (next(acnode) = n1 -> next(in_n1) = 1 )&\n (next(acnode) = nop -> in_n1 = next(in_n1));";
        let m = parse_smv_subset(src).unwrap();
        assert_eq!(m.vars.len(), 3);
        assert_eq!(m.inits.len(), 3);
        assert_eq!(m.inits[1], SmvExpr::eq(SmvExpr::r("it"), SmvExpr::Int(0)));
        assert_eq!(m.inits[2], SmvExpr::eq(SmvExpr::r("acnode"), SmvExpr::sym("n0_initial")));
        assert_eq!(
            m.defines[1].expr,
            SmvExpr::and([
                SmvExpr::r("e_enabled"),
                SmvExpr::eq(SmvExpr::next_ref("it"), SmvExpr::arith(ArithOp::Add, SmvExpr::r("it"), SmvExpr::Int(1))),
                SmvExpr::next(SmvExpr::eq(SmvExpr::r("acnode"), SmvExpr::sym("n1"))),
            ])
        );
        assert_eq!(
            m.trans[0].expr,
            SmvExpr::and([
                SmvExpr::iff(
                    SmvExpr::next(SmvExpr::eq(SmvExpr::r("acnode"), SmvExpr::sym("nop"))),
                    SmvExpr::r("in_n1")
                ),
                SmvExpr::or([SmvExpr::r("in_n1"), SmvExpr::r("e_taken")]),
            ])
        );
        assert!(m.check().is_ok(), "{:?}", m.check());
    }

    #[test]
    fn reports_position_of_garbage() {
        let err = parse_smv_subset("VAR\n  x : boolean;\nINIT x = @;").unwrap_err();
        assert_eq!(err.span.line, 3);
        assert_eq!(err.span.column, 10);
    }
}
