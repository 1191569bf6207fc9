//! Guard and assignment expressions over finite-domain variables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Domain, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn apply_int(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
        }
    }
}

/// Expression tree. Identifiers are split into variable references and
/// enumeration symbols when a diagram is parsed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    Sym(String),
    Var(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn sym(name: impl Into<String>) -> Self {
        Expr::Sym(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Self {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Self {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Self {
        Self::cmp(CmpOp::Eq, a, b)
    }

    pub fn arith(op: ArithOp, a: Expr, b: Expr) -> Self {
        Expr::Arith(op, Box::new(a), Box::new(b))
    }

    /// Variables referenced, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Expr::Bool(_) | Expr::Int(_) | Expr::Sym(_) => {}
            Expr::Not(e) => e.collect_vars(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Symbols mentioned as literals.
    pub fn symbols(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Sym(s) = e {
                out.push(s.as_str());
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Not(e) => e.walk(f),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }

    /// Value of a closed expression, if it has one.
    pub fn constant_value(&self) -> Option<Value> {
        if !self.variables().is_empty() {
            return None;
        }
        eval(self, &|_: &str| None).ok()
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 5,
            Expr::Cmp(..) => 3,
            Expr::Arith(..) => 4,
            _ => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
}

/// Evaluates `e` under `env`. Arithmetic results are not checked against
/// any domain.
pub fn eval(e: &Expr, env: &dyn Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
    match e {
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Int(i) => Ok(Value::Int(*i)),
        Expr::Sym(s) => Ok(Value::Sym(s.clone())),
        Expr::Var(v) => env(v).ok_or_else(|| EvalError::Unbound(v.clone())),
        Expr::Not(inner) => Ok(Value::Bool(!eval_bool(inner, env)?)),
        Expr::And(a, b) => Ok(Value::Bool(eval_bool(a, env)? && eval_bool(b, env)?)),
        Expr::Or(a, b) => Ok(Value::Bool(eval_bool(a, env)? || eval_bool(b, env)?)),
        Expr::Cmp(op, a, b) => {
            let (x, y) = (eval(a, env)?, eval(b, env)?);
            match (&x, &y) {
                (Value::Int(i), Value::Int(j)) => Ok(Value::Bool(op.apply_int(*i, *j))),
                (Value::Sym(_), Value::Sym(_)) | (Value::Bool(_), Value::Bool(_)) if !op.is_ordering() => {
                    Ok(Value::Bool((x == y) == (*op == CmpOp::Eq)))
                }
                _ => Err(EvalError::Type(format!("cannot compare {x} {} {y}", op.symbol()))),
            }
        }
        Expr::Arith(op, a, b) => {
            let (x, y) = (eval(a, env)?, eval(b, env)?);
            match (x, y) {
                (Value::Int(i), Value::Int(j)) => op.apply(i, j).map(Value::Int).ok_or(EvalError::Overflow),
                (x, y) => Err(EvalError::Type(format!("arithmetic on {x} {} {y}", op.symbol()))),
            }
        }
    }
}

pub fn eval_bool(e: &Expr, env: &dyn Fn(&str) -> Option<Value>) -> Result<bool, EvalError> {
    match eval(e, env)? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Type(format!("expected a boolean, found {other}"))),
    }
}

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    /// Enumeration value; `None` for a bare symbol literal.
    Enum(Option<Vec<String>>),
}

impl Ty {
    fn describe(&self) -> &'static str {
        match self {
            Ty::Bool => "boolean",
            Ty::Int => "integer",
            Ty::Enum(_) => "enumeration",
        }
    }
}

/// Computes the type of `e`, looking variables up through `lookup`.
pub fn type_of(e: &Expr, lookup: &dyn Fn(&str) -> Option<Domain>) -> Result<Ty, String> {
    match e {
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::Int(_) => Ok(Ty::Int),
        Expr::Sym(_) => Ok(Ty::Enum(None)),
        Expr::Var(v) => match lookup(v) {
            Some(Domain::Range { .. }) => Ok(Ty::Int),
            Some(Domain::Enumeration(m)) => Ok(Ty::Enum(Some(m))),
            None => Err(format!("undeclared variable `{v}`")),
        },
        Expr::Not(inner) => expect_bool(inner, lookup).map(|_| Ty::Bool),
        Expr::And(a, b) | Expr::Or(a, b) => {
            expect_bool(a, lookup)?;
            expect_bool(b, lookup)?;
            Ok(Ty::Bool)
        }
        Expr::Arith(op, a, b) => {
            for side in [a, b] {
                let t = type_of(side, lookup)?;
                if t != Ty::Int {
                    return Err(format!("operand of `{}` must be an integer, found {}", op.symbol(), t.describe()));
                }
            }
            Ok(Ty::Int)
        }
        Expr::Cmp(op, a, b) => {
            let (ta, tb) = (type_of(a, lookup)?, type_of(b, lookup)?);
            match (&ta, &tb) {
                (Ty::Int, Ty::Int) => Ok(Ty::Bool),
                (Ty::Enum(x), Ty::Enum(y)) if !op.is_ordering() => {
                    check_symbol_membership(a, x.as_deref(), b, y.as_deref())?;
                    Ok(Ty::Bool)
                }
                (Ty::Bool, Ty::Bool) if !op.is_ordering() => Ok(Ty::Bool),
                _ => Err(format!("cannot compare {} with {} using `{}`", ta.describe(), tb.describe(), op.symbol())),
            }
        }
    }
}

fn expect_bool(e: &Expr, lookup: &dyn Fn(&str) -> Option<Domain>) -> Result<(), String> {
    match type_of(e, lookup)? {
        Ty::Bool => Ok(()),
        t => Err(format!("expected a boolean, found {} `{e}`", t.describe())),
    }
}

fn check_symbol_membership(a: &Expr, da: Option<&[String]>, b: &Expr, db: Option<&[String]>) -> Result<(), String> {
    for (sym, dom) in [(b, da), (a, db)] {
        if let (Expr::Sym(s), Some(members)) = (sym, dom) {
            if !members.iter().any(|m| m == s) {
                return Err(format!("`{s}` is not a member of {{{}}}", members.join(", ")));
            }
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Sym(s) | Expr::Var(s) => f.write_str(s),
            Expr::Not(inner) => {
                f.write_str("!")?;
                write_operand(f, inner, inner.precedence() < self.precedence())
            }
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Arith(_, a, b) => {
                let op = match self {
                    Expr::And(..) => "&",
                    Expr::Or(..) => "|",
                    Expr::Arith(op, ..) => op.symbol(),
                    _ => unreachable!(),
                };
                let p = self.precedence();
                write_operand(f, a, a.precedence() < p)?;
                write!(f, " {op} ")?;
                write_operand(f, b, b.precedence() <= p)
            }
            Expr::Cmp(op, a, b) => {
                let p = self.precedence();
                write_operand(f, a, a.precedence() <= p)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b, b.precedence() <= p)
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: Vec<(&'static str, Value)>) -> impl Fn(&str) -> Option<Value> {
        move |name| pairs.iter().find(|(n, _)| *n == name).map(|(_, v)| v.clone())
    }

    #[test]
    fn loop_guard() {
        let e = Expr::cmp(CmpOp::Lt, Expr::var("iterations"), Expr::Int(3));
        let env = env(vec![("iterations", Value::Int(2))]);
        assert_eq!(eval(&e, &env), Ok(Value::Bool(true)));
    }

    #[test]
    fn exit_guard() {
        let e = Expr::or(
            Expr::eq(Expr::var("project"), Expr::sym("short")),
            Expr::eq(Expr::var("iterations"), Expr::Int(3)),
        );
        let env = env(vec![("project", Value::sym("long")), ("iterations", Value::Int(3))]);
        assert_eq!(eval(&e, &env), Ok(Value::Bool(true)));
    }

    #[test]
    fn arithmetic_is_unchecked() {
        let e = Expr::arith(ArithOp::Add, Expr::var("iterations"), Expr::Int(1));
        let env = env(vec![("iterations", Value::Int(4))]);
        assert_eq!(eval(&e, &env), Ok(Value::Int(5)));
    }

    #[test]
    fn ordering_on_symbols_is_a_type_error() {
        let e = Expr::cmp(CmpOp::Lt, Expr::sym("a"), Expr::sym("b"));
        assert!(matches!(eval(&e, &|_: &str| None), Err(EvalError::Type(_))));
    }

    #[test]
    fn unbound_variable() {
        let e = Expr::var("x");
        assert_eq!(eval(&e, &|_: &str| None), Err(EvalError::Unbound("x".into())));
    }

    #[test]
    fn typing() {
        let lookup = |n: &str| match n {
            "p" => Some(Domain::enumeration(["long", "short"])),
            "i" => Some(Domain::range(0, 4)),
            _ => None,
        };
        let ok =
            Expr::or(Expr::eq(Expr::var("p"), Expr::sym("short")), Expr::cmp(CmpOp::Lt, Expr::var("i"), Expr::Int(3)));
        assert_eq!(type_of(&ok, &lookup), Ok(Ty::Bool));
        let bad_member = Expr::eq(Expr::var("p"), Expr::sym("medium"));
        assert!(type_of(&bad_member, &lookup).is_err());
        let mixed = Expr::eq(Expr::var("p"), Expr::var("i"));
        assert!(type_of(&mixed, &lookup).is_err());
        let arith_enum = Expr::arith(ArithOp::Add, Expr::var("p"), Expr::Int(1));
        assert!(type_of(&arith_enum, &lookup).is_err());
        assert!(type_of(&Expr::var("zz"), &lookup).is_err());
    }

    #[test]
    fn display_parenthesises_minimally() {
        let e = Expr::and(Expr::var("a"), Expr::or(Expr::var("b"), Expr::not(Expr::eq(Expr::var("c"), Expr::Int(1)))));
        assert_eq!(e.to_string(), "a & (b | !(c = 1))");
        let s = Expr::arith(ArithOp::Sub, Expr::var("x"), Expr::arith(ArithOp::Sub, Expr::var("y"), Expr::Int(1)));
        assert_eq!(s.to_string(), "x - (y - 1)");
    }
}
