//! The SMV subset produced by the translator: `VAR`, `INIT`, `DEFINE` and
//! `TRANS` sections over boolean and enumerated variables.

mod parse;
mod print;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

pub use crate::expr::{ArithOp, CmpOp};
pub use parse::{parse_smv_subset, SmvParseError};
pub use print::{print_expr, print_smv};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Sym(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum SmvType {
    Boolean,
    Enum(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SmvVarDecl {
    pub name: String,
    pub ty: SmvType,
}

impl SmvVarDecl {
    pub fn boolean(name: impl Into<String>) -> Self {
        Self { name: name.into(), ty: SmvType::Boolean }
    }

    pub fn enumeration(name: impl Into<String>, literals: Vec<Literal>) -> Self {
        Self { name: name.into(), ty: SmvType::Enum(literals) }
    }
}

/// Expression tree. `And`/`Or` are n-ary and kept flat, so parenthesised
/// and unparenthesised spellings of the same conjunction compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum SmvExpr {
    Int(i64),
    Sym(String),
    /// Reference to a variable or a DEFINE.
    Ref(String),
    Not(Box<SmvExpr>),
    And(Vec<SmvExpr>),
    Or(Vec<SmvExpr>),
    Imp(Box<SmvExpr>, Box<SmvExpr>),
    Iff(Box<SmvExpr>, Box<SmvExpr>),
    Cmp(CmpOp, Box<SmvExpr>, Box<SmvExpr>),
    Arith(ArithOp, Box<SmvExpr>, Box<SmvExpr>),
    Next(Box<SmvExpr>),
}

impl SmvExpr {
    pub fn r(name: impl Into<String>) -> Self {
        SmvExpr::Ref(name.into())
    }

    pub fn sym(name: impl Into<String>) -> Self {
        SmvExpr::Sym(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: SmvExpr) -> Self {
        SmvExpr::Not(Box::new(e))
    }

    pub fn next(e: SmvExpr) -> Self {
        SmvExpr::Next(Box::new(e))
    }

    pub fn next_ref(name: impl Into<String>) -> Self {
        Self::next(Self::r(name))
    }

    pub fn cmp(op: CmpOp, a: SmvExpr, b: SmvExpr) -> Self {
        SmvExpr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: SmvExpr, b: SmvExpr) -> Self {
        Self::cmp(CmpOp::Eq, a, b)
    }

    pub fn arith(op: ArithOp, a: SmvExpr, b: SmvExpr) -> Self {
        SmvExpr::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn imp(a: SmvExpr, b: SmvExpr) -> Self {
        SmvExpr::Imp(Box::new(a), Box::new(b))
    }

    pub fn iff(a: SmvExpr, b: SmvExpr) -> Self {
        SmvExpr::Iff(Box::new(a), Box::new(b))
    }

    /// Flattening conjunction; an empty conjunction is `1`.
    pub fn and(parts: impl IntoIterator<Item = SmvExpr>) -> Self {
        Self::assoc(parts, true)
    }

    /// Flattening disjunction; an empty disjunction is `0`.
    pub fn or(parts: impl IntoIterator<Item = SmvExpr>) -> Self {
        Self::assoc(parts, false)
    }

    fn assoc(parts: impl IntoIterator<Item = SmvExpr>, conj: bool) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match (p, conj) {
                (SmvExpr::And(inner), true) | (SmvExpr::Or(inner), false) => flat.extend(inner),
                (p, _) => flat.push(p),
            }
        }
        match flat.len() {
            0 => SmvExpr::Int(i64::from(conj)),
            1 => flat.pop().unwrap(),
            _ if conj => SmvExpr::And(flat),
            _ => SmvExpr::Or(flat),
        }
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> &[SmvExpr] {
        match self {
            SmvExpr::And(parts) => parts,
            other => std::slice::from_ref(other),
        }
    }

    pub fn children(&self) -> Vec<&SmvExpr> {
        match self {
            SmvExpr::Int(_) | SmvExpr::Sym(_) | SmvExpr::Ref(_) => vec![],
            SmvExpr::Not(e) | SmvExpr::Next(e) => vec![e],
            SmvExpr::And(v) | SmvExpr::Or(v) => v.iter().collect(),
            SmvExpr::Imp(a, b) | SmvExpr::Iff(a, b) | SmvExpr::Cmp(_, a, b) | SmvExpr::Arith(_, a, b) => {
                vec![a, b]
            }
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a SmvExpr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Names referenced through `Ref`.
    pub fn refs(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let SmvExpr::Ref(n) = e {
                out.insert(n.as_str());
            }
        });
        out
    }

    pub fn contains_next(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, SmvExpr::Next(_)));
        found
    }

    fn nested_next(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let SmvExpr::Next(inner) = e {
                found |= inner.contains_next();
            }
        });
        found
    }

    fn resolve(&mut self, refs: &HashSet<String>) {
        match self {
            SmvExpr::Sym(s) if refs.contains(s.as_str()) => *self = SmvExpr::Ref(std::mem::take(s)),
            SmvExpr::Ref(s) if !refs.contains(s.as_str()) => *self = SmvExpr::Sym(std::mem::take(s)),
            SmvExpr::Not(e) | SmvExpr::Next(e) => e.resolve(refs),
            SmvExpr::And(v) | SmvExpr::Or(v) => v.iter_mut().for_each(|e| e.resolve(refs)),
            SmvExpr::Imp(a, b) | SmvExpr::Iff(a, b) | SmvExpr::Cmp(_, a, b) | SmvExpr::Arith(_, a, b) => {
                a.resolve(refs);
                b.resolve(refs);
            }
            _ => {}
        }
    }
}

/// A `--` comment printed before item `before` of the list it is attached to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Comment {
    pub before: usize,
    pub text: String,
}

impl Comment {
    pub fn new(before: usize, text: impl Into<String>) -> Self {
        Self { before, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Define {
    pub name: String,
    pub expr: SmvExpr,
    /// Positions index the top-level conjuncts of `expr`.
    pub comments: Vec<Comment>,
}

impl Define {
    pub fn new(name: impl Into<String>, expr: SmvExpr) -> Self {
        Self { name: name.into(), expr, comments: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Trans {
    pub expr: SmvExpr,
    /// Positions index the top-level conjuncts of `expr`.
    pub comments: Vec<Comment>,
}

impl Trans {
    pub fn new(expr: SmvExpr) -> Self {
        Self { expr, comments: Vec::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct SmvModule {
    pub vars: Vec<SmvVarDecl>,
    pub var_comments: Vec<Comment>,
    /// Conjoined initial-state constraints.
    pub inits: Vec<SmvExpr>,
    pub init_comments: Vec<Comment>,
    pub defines: Vec<Define>,
    pub define_comments: Vec<Comment>,
    pub trans: Vec<Trans>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WellFormedError {
    #[error("`{0}` is declared more than once")]
    Duplicate(String),
    #[error("variable `{0}` has an empty or duplicated literal list")]
    BadEnum(String),
    #[error("`{name}` references undeclared `{missing}`")]
    Undeclared { name: String, missing: String },
    #[error("symbol `{0}` is not a literal of any variable")]
    UnknownSymbol(String),
    #[error("DEFINE `{0}` depends on itself")]
    Cyclic(String),
    #[error("nested next() in {0}")]
    NestedNext(String),
}

impl SmvModule {
    pub fn var(&self, name: &str) -> Option<&SmvVarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn define(&self, name: &str) -> Option<&Define> {
        self.defines.iter().find(|d| d.name == name)
    }

    /// Every expression with a label for error messages.
    fn expressions(&self) -> Vec<(String, &SmvExpr)> {
        let mut out: Vec<(String, &SmvExpr)> = self.inits.iter().map(|e| ("INIT".to_string(), e)).collect();
        out.extend(self.defines.iter().map(|d| (d.name.clone(), &d.expr)));
        out.extend(self.trans.iter().enumerate().map(|(i, t)| (format!("TRANS #{i}"), &t.expr)));
        out
    }

    /// Checks declarations, references, symbol literals, `next` nesting and
    /// DEFINE acyclicity.
    pub fn check(&self) -> Result<(), Vec<WellFormedError>> {
        let mut errors = Vec::new();
        let mut names = HashSet::new();
        let mut literals = HashSet::new();
        for v in &self.vars {
            if !names.insert(v.name.as_str()) {
                errors.push(WellFormedError::Duplicate(v.name.clone()));
            }
            if let SmvType::Enum(lits) = &v.ty {
                let distinct: HashSet<&Literal> = lits.iter().collect();
                if lits.is_empty() || distinct.len() != lits.len() {
                    errors.push(WellFormedError::BadEnum(v.name.clone()));
                }
                for l in lits {
                    if let Literal::Sym(s) = l {
                        literals.insert(s.as_str());
                    }
                }
            }
        }
        for d in &self.defines {
            if !names.insert(d.name.as_str()) {
                errors.push(WellFormedError::Duplicate(d.name.clone()));
            }
        }
        for (label, e) in self.expressions() {
            for r in e.refs() {
                if !names.contains(r) {
                    errors.push(WellFormedError::Undeclared { name: label.clone(), missing: r.to_string() });
                }
            }
            e.visit(&mut |x| {
                if let SmvExpr::Sym(s) = x {
                    if !literals.contains(s.as_str()) {
                        errors.push(WellFormedError::UnknownSymbol(s.clone()));
                    }
                }
            });
            if e.nested_next() {
                errors.push(WellFormedError::NestedNext(label));
            }
        }
        if let Err(name) = self.define_order() {
            errors.push(WellFormedError::Cyclic(name));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// DEFINE indices in dependency order, or the name of a define on a cycle.
    pub fn define_order(&self) -> Result<Vec<usize>, String> {
        let index: HashMap<&str, usize> = self.defines.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.defines.len()];
        let mut order = Vec::with_capacity(self.defines.len());
        fn dfs(
            i: usize,
            m: &SmvModule,
            index: &HashMap<&str, usize>,
            state: &mut [u8],
            order: &mut Vec<usize>,
        ) -> Result<(), String> {
            match state[i] {
                1 => return Err(m.defines[i].name.clone()),
                2 => return Ok(()),
                _ => {}
            }
            state[i] = 1;
            for r in m.defines[i].expr.refs() {
                if let Some(&j) = index.get(r) {
                    dfs(j, m, index, state, order)?;
                }
            }
            state[i] = 2;
            order.push(i);
            Ok(())
        }
        for i in 0..self.defines.len() {
            dfs(i, self, &index, &mut state, &mut order)?;
        }
        Ok(order)
    }

    /// Turns identifiers into `Ref` when they name a variable or a DEFINE
    /// and into `Sym` otherwise.
    pub fn resolve_identifiers(&mut self) {
        let refs: HashSet<String> =
            self.vars.iter().map(|v| v.name.clone()).chain(self.defines.iter().map(|d| d.name.clone())).collect();
        for e in &mut self.inits {
            e.resolve(&refs);
        }
        for d in &mut self.defines {
            d.expr.resolve(&refs);
        }
        for t in &mut self.trans {
            t.expr.resolve(&refs);
        }
    }

    pub fn without_comments(&self) -> SmvModule {
        let mut m = self.clone();
        m.var_comments.clear();
        m.init_comments.clear();
        m.define_comments.clear();
        for d in &mut m.defines {
            d.comments.clear();
        }
        for t in &mut m.trans {
            t.comments.clear();
        }
        m
    }
}

/// Canonical form for golden comparisons: comments dropped and enum
/// literal lists sorted (integers numerically, then symbols). Everything
/// else keeps its order.
pub fn normalize(m: &SmvModule) -> SmvModule {
    let mut out = m.without_comments();
    for v in &mut out.vars {
        if let SmvType::Enum(lits) = &mut v.ty {
            lits.sort();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_flattens() {
        let e = SmvExpr::and([SmvExpr::r("a"), SmvExpr::and([SmvExpr::r("b"), SmvExpr::r("c")])]);
        assert_eq!(e, SmvExpr::And(vec![SmvExpr::r("a"), SmvExpr::r("b"), SmvExpr::r("c")]));
        assert_eq!(SmvExpr::and([]), SmvExpr::Int(1));
        assert_eq!(SmvExpr::or([SmvExpr::r("x")]), SmvExpr::r("x"));
    }

    #[test]
    fn normalize_sorts_enums() {
        let mut m = SmvModule::default();
        m.vars.push(SmvVarDecl::enumeration("v", vec![Literal::Sym("b".into()), Literal::Sym("a".into())]));
        m.vars.push(SmvVarDecl::enumeration("w", vec![Literal::Int(10), Literal::Int(2)]));
        m.var_comments.push(Comment::new(0, "x"));
        let n = normalize(&m);
        assert_eq!(n.vars[0].ty, SmvType::Enum(vec![Literal::Sym("a".into()), Literal::Sym("b".into())]));
        assert_eq!(n.vars[1].ty, SmvType::Enum(vec![Literal::Int(2), Literal::Int(10)]));
        assert!(n.var_comments.is_empty());
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn check_detects_problems() {
        let mut m = SmvModule::default();
        m.vars.push(SmvVarDecl::boolean("a"));
        m.defines.push(Define::new("d1", SmvExpr::r("d2")));
        m.defines.push(Define::new("d2", SmvExpr::and([SmvExpr::r("d1"), SmvExpr::r("a")])));
        m.trans.push(Trans::new(SmvExpr::next(SmvExpr::next_ref("a"))));
        m.inits.push(SmvExpr::eq(SmvExpr::r("zz"), SmvExpr::sym("q")));
        let errs = m.check().unwrap_err();
        assert!(errs.contains(&WellFormedError::Cyclic("d1".into())));
        assert!(errs.contains(&WellFormedError::NestedNext("TRANS #0".into())));
        assert!(errs.contains(&WellFormedError::UnknownSymbol("q".into())));
        assert!(errs.iter().any(|e| matches!(e, WellFormedError::Undeclared { missing, .. } if missing == "zz")));
    }

    #[test]
    fn define_order_is_topological() {
        let mut m = SmvModule::default();
        m.vars.push(SmvVarDecl::boolean("a"));
        m.defines.push(Define::new("t", SmvExpr::r("e")));
        m.defines.push(Define::new("e", SmvExpr::r("a")));
        assert_eq!(m.define_order().unwrap(), vec![1, 0]);
        assert!(m.check().is_ok());
    }
}
