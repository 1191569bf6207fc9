//! Explicit-state execution of SMV modules.
//!
//! Expressions are compiled against variable indices and evaluated in
//! three-valued logic, so a partially built post-state can already falsify
//! a TRANS conjunct. Successors are found by a depth-first search over the
//! post-state variables in declaration order with values in domain order,
//! pruning as soon as some conjunct is definitely false. The result equals
//! exhaustive enumeration of the domain product, which is kept around as a
//! reference implementation.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::model::{ActivityDiagram, Value};
use crate::smv::{ArithOp, CmpOp, Literal, SmvExpr, SmvModule, SmvType};
use crate::trace::{enumerate_traces, ActionTrace, Budget, ExecError, LabelledSystem, Limits};
use crate::translate::{CanonicalNames, AC, ACNODE, NOP};

/// Runtime value. Symbols are interned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum V {
    B(bool),
    I(i64),
    S(u32),
}

/// A total valuation, stored as one domain index per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Vec<u32>);

/// Compiled expression.
#[derive(Debug, Clone)]
enum C {
    K(V),
    Cur(usize),
    Nxt(usize),
    Def(usize),
    Not(Box<C>),
    And(Vec<C>),
    Or(Vec<C>),
    Imp(Box<C>, Box<C>),
    Iff(Box<C>, Box<C>),
    Cmp(CmpOp, Box<C>, Box<C>),
    Arith(ArithOp, Box<C>, Box<C>),
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Unset,
    Unknown,
    Known(V),
}

/// One transition of the module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepWitness {
    pub pre: State,
    pub post: State,
    /// `_taken` defines that hold for the pair, in declaration order.
    pub taken: Vec<String>,
}

#[derive(Debug, Clone)]
struct Constraint {
    expr: C,
    /// Variables of the searched side the constraint depends on.
    deps: BTreeSet<usize>,
}

/// An executable SMV module.
#[derive(Debug, Clone)]
pub struct Machine {
    names: Vec<String>,
    domains: Vec<Vec<V>>,
    symbols: Vec<String>,
    define_names: Vec<String>,
    defines: Vec<C>,
    init: Vec<Constraint>,
    trans: Vec<Constraint>,
    acnode: Option<usize>,
    ac: Option<usize>,
    limits: Limits,
}

struct Compiler<'a> {
    module: &'a SmvModule,
    var_index: HashMap<&'a str, usize>,
    define_index: HashMap<&'a str, usize>,
    symbols: Vec<String>,
}

impl Compiler<'_> {
    fn intern(&mut self, s: &str) -> u32 {
        match self.symbols.iter().position(|x| x == s) {
            Some(i) => i as u32,
            None => {
                self.symbols.push(s.to_string());
                (self.symbols.len() - 1) as u32
            }
        }
    }

    fn literal(&mut self, l: &Literal) -> V {
        match l {
            Literal::Int(i) => V::I(*i),
            Literal::Sym(s) => V::S(self.intern(s)),
        }
    }

    fn compile(&mut self, e: &SmvExpr, next: bool) -> Result<C, ExecError> {
        let bin = |c: &mut Self, a: &SmvExpr, b: &SmvExpr| -> Result<(Box<C>, Box<C>), ExecError> {
            Ok((Box::new(c.compile(a, next)?), Box::new(c.compile(b, next)?)))
        };
        Ok(match e {
            SmvExpr::Int(i) => C::K(V::I(*i)),
            SmvExpr::Sym(s) => C::K(V::S(self.intern(s))),
            SmvExpr::Ref(name) => {
                if let Some(&i) = self.var_index.get(name.as_str()) {
                    if next {
                        C::Nxt(i)
                    } else {
                        C::Cur(i)
                    }
                } else if let Some(&d) = self.define_index.get(name.as_str()) {
                    if next {
                        // a define under next() is its body shifted by one step
                        let body = &self.module.defines[d].expr;
                        self.compile(body, true)?
                    } else {
                        C::Def(d)
                    }
                } else {
                    return Err(ExecError::Unsupported(format!("undeclared `{name}`")));
                }
            }
            SmvExpr::Next(inner) => {
                if next {
                    return Err(ExecError::Unsupported("nested next()".into()));
                }
                self.compile(inner, true)?
            }
            SmvExpr::Not(inner) => C::Not(Box::new(self.compile(inner, next)?)),
            SmvExpr::And(parts) => C::And(parts.iter().map(|p| self.compile(p, next)).collect::<Result<_, _>>()?),
            SmvExpr::Or(parts) => C::Or(parts.iter().map(|p| self.compile(p, next)).collect::<Result<_, _>>()?),
            SmvExpr::Imp(a, b) => {
                let (a, b) = bin(self, a, b)?;
                C::Imp(a, b)
            }
            SmvExpr::Iff(a, b) => {
                let (a, b) = bin(self, a, b)?;
                C::Iff(a, b)
            }
            SmvExpr::Cmp(op, a, b) => {
                let (a, b) = bin(self, a, b)?;
                C::Cmp(*op, a, b)
            }
            SmvExpr::Arith(op, a, b) => {
                let (a, b) = bin(self, a, b)?;
                C::Arith(*op, a, b)
            }
        })
    }
}

fn truth(v: V) -> Result<bool, ExecError> {
    match v {
        V::B(b) => Ok(b),
        V::I(0) => Ok(false),
        V::I(1) => Ok(true),
        other => Err(ExecError::Eval(format!("{other:?} is not a boolean"))),
    }
}

/// Partial valuations of the current and next state.
struct Env<'a> {
    cur: &'a [Option<u32>],
    nxt: &'a [Option<u32>],
    memo: &'a mut [Slot],
}

impl Machine {
    pub fn new(module: &SmvModule) -> Result<Self, ExecError> {
        Self::with_limits(module, Limits::default())
    }

    pub fn with_limits(module: &SmvModule, limits: Limits) -> Result<Self, ExecError> {
        let mut module = module.clone();
        module.resolve_identifiers();
        if let Err(errors) = module.check() {
            let text: Vec<String> = errors.iter().map(ToString::to_string).collect();
            return Err(ExecError::Unsupported(text.join("; ")));
        }
        let mut c = Compiler {
            module: &module,
            var_index: module.vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect(),
            define_index: module.defines.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect(),
            symbols: Vec::new(),
        };
        let mut domains = Vec::new();
        for v in &module.vars {
            domains.push(match &v.ty {
                SmvType::Boolean => vec![V::I(0), V::I(1)],
                SmvType::Enum(lits) => lits.iter().map(|l| c.literal(l)).collect(),
            });
        }
        let defines: Vec<C> = module.defines.iter().map(|d| c.compile(&d.expr, false)).collect::<Result<_, _>>()?;
        let init_exprs: Vec<C> = module.inits.iter().map(|e| c.compile(e, false)).collect::<Result<_, _>>()?;
        let mut trans_exprs = Vec::new();
        for t in &module.trans {
            for part in t.expr.conjuncts() {
                trans_exprs.push(c.compile(part, false)?);
            }
        }
        let symbols = c.symbols;
        let index_of = |name: &str| module.vars.iter().position(|v| v.name == name);
        let mut m = Machine {
            names: module.vars.iter().map(|v| v.name.clone()).collect(),
            domains,
            symbols,
            define_names: module.defines.iter().map(|d| d.name.clone()).collect(),
            defines,
            init: Vec::new(),
            trans: Vec::new(),
            acnode: index_of(ACNODE),
            ac: index_of(AC),
            limits,
        };
        m.init = init_exprs.into_iter().map(|e| m.constraint(e, false)).collect();
        m.trans = trans_exprs.into_iter().map(|e| m.constraint(e, true)).collect();
        Ok(m)
    }

    fn constraint(&self, expr: C, next_side: bool) -> Constraint {
        let mut deps = BTreeSet::new();
        self.collect_deps(&expr, next_side, &mut deps);
        Constraint { expr, deps }
    }

    fn collect_deps(&self, e: &C, next_side: bool, out: &mut BTreeSet<usize>) {
        match e {
            C::K(_) => {}
            C::Cur(i) => {
                if !next_side {
                    out.insert(*i);
                }
            }
            C::Nxt(i) => {
                if next_side {
                    out.insert(*i);
                }
            }
            C::Def(d) => self.collect_deps(&self.defines[*d], next_side, out),
            C::Not(a) => self.collect_deps(a, next_side, out),
            C::And(v) | C::Or(v) => v.iter().for_each(|x| self.collect_deps(x, next_side, out)),
            C::Imp(a, b) | C::Iff(a, b) | C::Cmp(_, a, b) | C::Arith(_, a, b) => {
                self.collect_deps(a, next_side, out);
                self.collect_deps(b, next_side, out);
            }
        }
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn decode(&self, v: V) -> Value {
        match v {
            V::B(b) => Value::Bool(b),
            V::I(i) => Value::Int(i),
            V::S(s) => Value::Sym(self.symbols[s as usize].clone()),
        }
    }

    pub fn value_at(&self, s: &State, var: usize) -> Value {
        self.decode(self.domains[var][s.0[var] as usize])
    }

    pub fn value(&self, s: &State, name: &str) -> Option<Value> {
        self.var_index(name).map(|i| self.value_at(s, i))
    }

    pub fn valuation(&self, s: &State) -> Vec<(String, Value)> {
        (0..self.names.len()).map(|i| (self.names[i].clone(), self.value_at(s, i))).collect()
    }

    /// The visible action of the step that produced `s`.
    pub fn action(&self, s: &State) -> Result<String, ExecError> {
        let ac = self.ac.ok_or_else(|| ExecError::Unsupported(format!("module has no `{AC}` variable")))?;
        Ok(self.value_at(s, ac).to_string())
    }

    /// Whether the step into `s` is the pseudo step after termination.
    pub fn is_nop_node(&self, s: &State) -> bool {
        self.acnode.is_some_and(|i| self.value_at(s, i) == Value::sym(NOP))
    }

    fn eval(&self, e: &C, env: &mut Env<'_>) -> Result<Option<V>, ExecError> {
        let lookup = |side: &[Option<u32>], i: usize| side[i].map(|k| self.domains[i][k as usize]);
        Ok(match e {
            C::K(v) => Some(*v),
            C::Cur(i) => lookup(env.cur, *i),
            C::Nxt(i) => lookup(env.nxt, *i),
            C::Def(d) => match env.memo[*d] {
                Slot::Known(v) => Some(v),
                Slot::Unknown => None,
                Slot::Unset => {
                    let v = self.eval(&self.defines[*d], env)?;
                    env.memo[*d] = v.map_or(Slot::Unknown, Slot::Known);
                    v
                }
            },
            C::Not(a) => match self.eval(a, env)? {
                Some(v) => Some(V::B(!truth(v)?)),
                None => None,
            },
            C::And(parts) | C::Or(parts) => {
                // the absorbing element decides regardless of unknowns
                let absorbing = matches!(e, C::Or(_));
                let mut unknown = false;
                for p in parts {
                    match self.eval(p, env)? {
                        Some(v) if truth(v)? == absorbing => return Ok(Some(V::B(absorbing))),
                        Some(_) => {}
                        None => unknown = true,
                    }
                }
                (!unknown).then_some(V::B(!absorbing))
            }
            C::Imp(a, b) => {
                let a = self.eval(a, env)?.map(truth).transpose()?;
                if a == Some(false) {
                    return Ok(Some(V::B(true)));
                }
                match (a, self.eval(b, env)?.map(truth).transpose()?) {
                    (_, Some(true)) => Some(V::B(true)),
                    (Some(true), Some(false)) => Some(V::B(false)),
                    _ => None,
                }
            }
            C::Iff(a, b) => {
                let a = self.eval(a, env)?.map(truth).transpose()?;
                let b = self.eval(b, env)?.map(truth).transpose()?;
                a.zip(b).map(|(x, y)| V::B(x == y))
            }
            C::Cmp(op, a, b) => {
                let (Some(x), Some(y)) = (self.eval(a, env)?, self.eval(b, env)?) else {
                    return Ok(None);
                };
                Some(V::B(self.compare(*op, x, y)?))
            }
            C::Arith(op, a, b) => {
                let (Some(x), Some(y)) = (self.eval(a, env)?, self.eval(b, env)?) else {
                    return Ok(None);
                };
                match (x, y) {
                    (V::I(i), V::I(j)) => {
                        Some(V::I(op.apply(i, j).ok_or_else(|| ExecError::Eval("integer overflow".into()))?))
                    }
                    _ => return Err(ExecError::Eval(format!("arithmetic on {x:?} and {y:?}"))),
                }
            }
        })
    }

    fn compare(&self, op: CmpOp, x: V, y: V) -> Result<bool, ExecError> {
        match (x, y) {
            (V::I(i), V::I(j)) => Ok(op.apply_int(i, j)),
            _ if op.is_ordering() => Err(ExecError::Eval(format!("ordering on {x:?} and {y:?}"))),
            (V::B(_), _) | (_, V::B(_)) => Ok((truth(x)? == truth(y)?) == (op == CmpOp::Eq)),
            _ => Ok((x == y) == (op == CmpOp::Eq)),
        }
    }

    fn holds(&self, c: &C, env: &mut Env<'_>) -> Result<Option<bool>, ExecError> {
        self.eval(c, env)?.map(truth).transpose()
    }

    /// Depth-first search over the free side. `fixed` is the known side,
    /// if any: the pre-state when stepping, nothing for initial states.
    fn search(
        &self,
        constraints: &[Constraint],
        fixed: Option<&State>,
        budget: &mut Budget,
    ) -> Result<Vec<State>, ExecError> {
        let n = self.names.len();
        let stepping = fixed.is_some();
        let fixed: Vec<Option<u32>> = match fixed {
            Some(s) => s.0.iter().map(|&k| Some(k)).collect(),
            None => vec![None; n],
        };
        // constraints to re-check once variable i is assigned
        let mut at_level: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut closed = Vec::new();
        for (ci, c) in constraints.iter().enumerate() {
            if c.deps.is_empty() {
                closed.push(ci);
            }
            for &d in &c.deps {
                at_level[d].push(ci);
            }
        }
        let mut free: Vec<Option<u32>> = vec![None; n];
        let mut memo = vec![Slot::Unset; self.defines.len()];
        let mut out = Vec::new();

        let check = |ids: &[usize], free: &[Option<u32>], memo: &mut [Slot]| -> Result<bool, ExecError> {
            memo.fill(Slot::Unset);
            let mut env =
                if stepping { Env { cur: &fixed, nxt: free, memo } } else { Env { cur: free, nxt: &fixed, memo } };
            for &ci in ids {
                if self.holds(&constraints[ci].expr, &mut env)? == Some(false) {
                    return Ok(false);
                }
            }
            Ok(true)
        };

        if !check(&closed, &free, &mut memo)? {
            return Ok(out);
        }
        // explicit stack of (variable, next domain index to try)
        let mut level = 0usize;
        let mut next_choice = vec![0u32; n];
        if n == 0 {
            out.push(State(Vec::new()));
            return Ok(out);
        }
        loop {
            if (next_choice[level] as usize) < self.domains[level].len() {
                free[level] = Some(next_choice[level]);
                next_choice[level] += 1;
                budget.spend(1)?;
                if check(&at_level[level], &free, &mut memo)? {
                    if level + 1 == n {
                        out.push(State(free.iter().map(|k| k.expect("all assigned")).collect()));
                    } else {
                        level += 1;
                        next_choice[level] = 0;
                    }
                }
            } else {
                free[level] = None;
                if level == 0 {
                    break;
                }
                level -= 1;
            }
        }
        Ok(out)
    }

    /// All valuations satisfying INIT.
    pub fn initial_states(&self) -> Result<Vec<State>, ExecError> {
        let mut budget = Budget::new(self.limits, "search nodes");
        self.search(&self.init, None, &mut budget)
    }

    /// Post-states of `s` without the taken-define bookkeeping.
    pub fn successor_states(&self, s: &State) -> Result<Vec<State>, ExecError> {
        let mut budget = Budget::new(self.limits, "search nodes");
        self.search(&self.trans, Some(s), &mut budget)
    }

    pub fn successors(&self, s: &State) -> Result<Vec<StepWitness>, ExecError> {
        self.successor_states(s)?
            .into_iter()
            .map(|post| {
                let taken = self.taken_defines(s, &post)?;
                Ok(StepWitness { pre: s.clone(), post, taken })
            })
            .collect()
    }

    /// Reference implementation: checks every point of the domain product.
    pub fn successors_exhaustive(&self, s: &State) -> Result<Vec<State>, ExecError> {
        let product = self.domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        match product {
            Some(p) if p <= self.limits.max_states => {}
            _ => return Err(ExecError::Resource { what: "domain product", limit: self.limits.max_states }),
        }
        let cur: Vec<Option<u32>> = s.0.iter().map(|&k| Some(k)).collect();
        let mut memo = vec![Slot::Unset; self.defines.len()];
        let mut point = vec![0u32; self.names.len()];
        let mut out = Vec::new();
        'outer: loop {
            let nxt: Vec<Option<u32>> = point.iter().map(|&k| Some(k)).collect();
            memo.fill(Slot::Unset);
            let mut env = Env { cur: &cur, nxt: &nxt, memo: &mut memo };
            let mut ok = true;
            for c in &self.trans {
                if self.holds(&c.expr, &mut env)? != Some(true) {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(State(point.clone()));
            }
            // odometer, last variable fastest to match search order
            for i in (0..point.len()).rev() {
                point[i] += 1;
                if (point[i] as usize) < self.domains[i].len() {
                    continue 'outer;
                }
                point[i] = 0;
            }
            break;
        }
        Ok(out)
    }

    /// `_taken` defines that hold for a step.
    pub fn taken_defines(&self, pre: &State, post: &State) -> Result<Vec<String>, ExecError> {
        let cur: Vec<Option<u32>> = pre.0.iter().map(|&k| Some(k)).collect();
        let nxt: Vec<Option<u32>> = post.0.iter().map(|&k| Some(k)).collect();
        let mut memo = vec![Slot::Unset; self.defines.len()];
        let mut env = Env { cur: &cur, nxt: &nxt, memo: &mut memo };
        let mut out = Vec::new();
        for (d, name) in self.define_names.iter().enumerate() {
            if name.ends_with("_taken") && self.holds(&C::Def(d), &mut env)? == Some(true) {
                out.push(name.clone());
            }
        }
        Ok(out)
    }

    /// Breadth-first exploration up to `depth` steps. Each state is listed
    /// once with its distance and the index of its BFS parent.
    fn explore(&self, depth: usize) -> Result<Vec<(State, usize, Option<usize>)>, ExecError> {
        let mut budget = Budget::new(self.limits, "states");
        let mut seen: HashMap<State, usize> = HashMap::new();
        let mut nodes: Vec<(State, usize, Option<usize>)> = Vec::new();
        let mut queue = VecDeque::new();
        for s in self.initial_states()? {
            if !seen.contains_key(&s) {
                budget.spend(1)?;
                seen.insert(s.clone(), nodes.len());
                queue.push_back(nodes.len());
                nodes.push((s, 0, None));
            }
        }
        while let Some(i) = queue.pop_front() {
            let (s, dist) = (nodes[i].0.clone(), nodes[i].1);
            if dist >= depth {
                continue;
            }
            for t in self.successor_states(&s)? {
                if !seen.contains_key(&t) {
                    budget.spend(1)?;
                    seen.insert(t.clone(), nodes.len());
                    queue.push_back(nodes.len());
                    nodes.push((t, dist + 1, Some(i)));
                }
            }
        }
        Ok(nodes)
    }

    /// Number of distinct states reachable within `depth` steps.
    pub fn reachable_count(&self, depth: usize) -> Result<usize, ExecError> {
        Ok(self.explore(depth)?.len())
    }

    pub fn action_traces(&self, depth: usize) -> Result<BTreeSet<ActionTrace>, ExecError> {
        enumerate_traces(self, depth, self.limits)
    }

    /// Reachable states within `depth` steps that have no successor, each
    /// with a shortest path from an initial state.
    pub fn find_deadlocks(&self, depth: usize) -> Result<Vec<Deadlock>, ExecError> {
        let nodes = self.explore(depth)?;
        let mut out = Vec::new();
        for (i, (s, _, _)) in nodes.iter().enumerate() {
            if !self.successor_states(s)?.is_empty() {
                continue;
            }
            let mut path = vec![s.clone()];
            let mut cur = i;
            while let Some(p) = nodes[cur].2 {
                path.push(nodes[p].0.clone());
                cur = p;
            }
            path.reverse();
            let actions = path[1..].iter().map(|s| self.action(s)).collect::<Result<_, _>>()?;
            out.push(Deadlock { state: s.clone(), path, actions });
        }
        Ok(out)
    }

    /// Every step from a state reached in fewer than `depth` steps takes
    /// exactly one `_taken` define, except the pseudo steps after
    /// termination.
    pub fn check_unique_taken(&self, depth: usize) -> Result<UniqueTaken, ExecError> {
        let mut steps = 0;
        for (s, dist, _) in self.explore(depth)? {
            if dist >= depth {
                continue;
            }
            for w in self.successors(&s)? {
                if self.is_nop_node(&w.post) {
                    continue;
                }
                steps += 1;
                if w.taken.len() != 1 {
                    return Ok(UniqueTaken::Counterexample(w));
                }
            }
        }
        Ok(UniqueTaken::Pass { steps })
    }

    /// Checks input constancy, nop absorption and the local-variable frame
    /// on every step of every path of at most `depth` steps.
    pub fn check_path_invariants(&self, depth: usize, inv: &PathInvariants) -> Result<PathReport, ExecError> {
        let index =
            |name: &str| self.var_index(name).ok_or_else(|| ExecError::Unsupported(format!("no variable `{name}`")));
        let inputs: Vec<usize> = inv.inputs.iter().map(|n| index(n)).collect::<Result<_, _>>()?;
        let mut locals = Vec::new();
        for (name, nodes) in &inv.locals {
            locals.push((index(name)?, nodes));
        }
        let acnode = self.acnode.ok_or_else(|| ExecError::Unsupported(format!("no `{ACNODE}` variable")))?;
        let ac = self.ac.ok_or_else(|| ExecError::Unsupported(format!("no `{AC}` variable")))?;
        let nop = Value::sym(NOP);

        let mut report = PathReport::default();
        let mut budget = Budget::new(self.limits, "states");
        // (state, whether nop has been observed on the way)
        let mut seen: HashMap<(State, bool), ()> = HashMap::new();
        let mut frontier: Vec<(State, bool)> = Vec::new();
        for s in self.initial_states()? {
            if seen.insert((s.clone(), false), ()).is_none() {
                frontier.push((s, false));
            }
        }
        for _ in 0..depth {
            let mut next = Vec::new();
            for (pre, nop_seen) in frontier {
                for post in self.successor_states(&pre)? {
                    report.steps += 1;
                    let mut fail =
                        |kind| report.violations.push(Violation { kind, pre: pre.clone(), post: post.clone() });
                    if inputs.iter().any(|&i| pre.0[i] != post.0[i]) {
                        fail(InvariantKind::InputConstancy);
                    }
                    let post_nop = self.value_at(&post, ac) == nop;
                    if nop_seen {
                        let changed = (0..self.names.len()).any(|i| i != acnode && pre.0[i] != post.0[i]);
                        if !post_nop || changed {
                            fail(InvariantKind::NopAbsorption);
                        }
                    }
                    let node = self.value_at(&post, acnode).to_string();
                    if locals.iter().any(|(i, nodes)| pre.0[*i] != post.0[*i] && !nodes.contains(&node)) {
                        fail(InvariantKind::LocalFrame);
                    }
                    let key = (post, nop_seen || post_nop);
                    if !seen.contains_key(&key) {
                        budget.spend(1)?;
                        seen.insert(key.clone(), ());
                        next.push(key);
                    }
                }
            }
            frontier = next;
        }
        Ok(report)
    }
}

impl LabelledSystem for Machine {
    type State = State;

    fn initial_states(&self) -> Result<Vec<State>, ExecError> {
        Machine::initial_states(self)
    }

    fn observe(&self, s: &State) -> Vec<(String, Value)> {
        self.valuation(s)
    }

    fn steps(&self, s: &State) -> Result<Vec<(String, State)>, ExecError> {
        self.successor_states(s)?.into_iter().map(|t| Ok((self.action(&t)?, t))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deadlock {
    pub state: State,
    /// From an initial state to `state`.
    pub path: Vec<State>,
    /// Visible actions along the path.
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UniqueTaken {
    Pass { steps: usize },
    Counterexample(StepWitness),
}

/// What the path checker needs to know about the source diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathInvariants {
    pub inputs: Vec<String>,
    /// Each local with the canonical ids of the nodes assigning it.
    pub locals: Vec<(String, Vec<String>)>,
}

impl PathInvariants {
    pub fn for_diagram(ad: &ActivityDiagram, names: &CanonicalNames) -> Self {
        let locals = ad
            .locals()
            .map(|v| {
                let nodes = (0..ad.nodes.len())
                    .filter(|&n| ad.nodes[n].assignments.iter().any(|a| a.target == v.name))
                    .map(|n| names.node(n).to_string())
                    .collect();
                (v.name.clone(), nodes)
            })
            .collect();
        Self { inputs: ad.inputs().map(|v| v.name.clone()).collect(), locals }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantKind {
    InputConstancy,
    NopAbsorption,
    LocalFrame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: InvariantKind,
    pub pre: State,
    pub post: State,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathReport {
    pub steps: usize,
    pub violations: Vec<Violation>,
}

impl PathReport {
    pub fn holds(&self, kind: InvariantKind) -> bool {
        !self.violations.iter().any(|v| v.kind == kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smv::parse_smv_subset;

    fn machine(text: &str) -> Machine {
        Machine::new(&parse_smv_subset(text).unwrap()).unwrap()
    }

    #[test]
    fn contradictory_init_has_no_states() {
        let m = machine("VAR\n v : boolean;\nINIT\n v = 1 & v = 0;\n");
        assert!(m.initial_states().unwrap().is_empty());
    }

    #[test]
    fn unconstrained_variables_enumerate_their_domain() {
        let m = machine("VAR\n v : boolean;\n w : {a, b, c};\nINIT\n v = 1;\n");
        let init = m.initial_states().unwrap();
        assert_eq!(init.len(), 3);
        assert_eq!(m.value(&init[0], "w"), Some(Value::sym("a")));
    }

    #[test]
    fn counter_steps() {
        let m = machine(
            "VAR\n k : {0, 1, 2};\nINIT\n k = 0;\nDEFINE\n inc := next(k) = k + 1;\nTRANS\n inc | (k = 2 & next(k) = 2);\n",
        );
        let s0 = m.initial_states().unwrap().remove(0);
        let succ = m.successors(&s0).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(m.value(&succ[0].post, "k"), Some(Value::Int(1)));
        assert!(succ[0].taken.is_empty());
        assert_eq!(m.successor_states(&s0).unwrap(), m.successors_exhaustive(&s0).unwrap());
        // the top value only loops
        let s2 = m.successor_states(&succ[0].post).unwrap().remove(0);
        assert_eq!(m.successor_states(&s2).unwrap(), vec![s2.clone()]);
    }

    #[test]
    fn define_under_next_is_shifted() {
        let m = machine("VAR\n a : boolean;\nINIT\n a = 0;\nDEFINE\n on := a;\nTRANS\n next(on) = 1;\n");
        let s0 = m.initial_states().unwrap().remove(0);
        let succ = m.successor_states(&s0).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(m.value(&succ[0], "a"), Some(Value::Int(1)));
    }

    #[test]
    fn two_takens_are_a_counterexample() {
        let m = machine(
            "VAR\n a : boolean;\n acnode : {x, nop};\nINIT\n a = 0 & acnode = x;\n\
             DEFINE\n e1_taken := next(a) = 1;\n e2_taken := next(a) = 1;\nTRANS\n e1_taken | e2_taken;\n",
        );
        match m.check_unique_taken(2).unwrap() {
            UniqueTaken::Counterexample(w) => assert_eq!(w.taken, ["e1_taken", "e2_taken"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn search_budget() {
        let m = Machine::with_limits(
            &parse_smv_subset("VAR\n a : boolean;\n b : boolean;\nINIT\n a = 0;\n").unwrap(),
            Limits { max_states: 2 },
        )
        .unwrap();
        assert!(matches!(m.initial_states(), Err(ExecError::Resource { .. })));
    }

    #[test]
    fn ill_formed_modules_are_rejected() {
        let module = parse_smv_subset("VAR\n a : boolean;\nINIT\n b = 0;\n").unwrap();
        assert!(matches!(Machine::new(&module), Err(ExecError::Unsupported(_))));
    }
}
