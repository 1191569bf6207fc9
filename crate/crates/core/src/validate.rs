//! Well-formedness rules for activity diagrams.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::expr::{type_of, ArithOp, Expr, Ty};
use crate::model::{ActivityDiagram, Domain, NodeKind, VarKind};

/// Identifies the rule a diagnostic is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    DuplicateId,
    UnknownNode,
    InitialCount,
    FinalCount,
    InitialIncoming,
    InitialOutgoing,
    FinalOutgoing,
    ActionFlow,
    MergeFlow,
    DecisionFlow,
    ForkFlow,
    JoinFlow,
    PseudoAdjacency,
    GuardPlacement,
    ExprType,
    AssignmentTarget,
    AssignmentForm,
    Domain,
    VariableInit,
    SymbolClash,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::DuplicateId => "duplicate-id",
            Rule::UnknownNode => "unknown-node",
            Rule::InitialCount => "initial-count",
            Rule::FinalCount => "final-count",
            Rule::InitialIncoming => "initial-incoming",
            Rule::InitialOutgoing => "initial-outgoing",
            Rule::FinalOutgoing => "final-outgoing",
            Rule::ActionFlow => "action-flow",
            Rule::MergeFlow => "merge-flow",
            Rule::DecisionFlow => "decision-flow",
            Rule::ForkFlow => "fork-flow",
            Rule::JoinFlow => "join-flow",
            Rule::PseudoAdjacency => "pseudo-adjacency",
            Rule::GuardPlacement => "guard-placement",
            Rule::ExprType => "expr-type",
            Rule::AssignmentTarget => "assignment-target",
            Rule::AssignmentForm => "assignment-form",
            Rule::Domain => "domain",
            Rule::VariableInit => "variable-init",
            Rule::SymbolClash => "symbol-clash",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Location {
    Diagram,
    Node { id: String },
    Edge { index: usize, src: String, tgt: String },
    Var { name: String },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Diagram => f.write_str("diagram"),
            Location::Node { id } => write!(f, "node `{id}`"),
            Location::Edge { index, src, tgt } => write!(f, "edge #{index} `{src} -> {tgt}`"),
            Location::Var { name } => write!(f, "variable `{name}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: Rule,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.location, self.message)
    }
}

struct Checker<'a> {
    ad: &'a ActivityDiagram,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, rule: Rule, location: Location, message: impl Into<String>) {
        self.out.push(Diagnostic { rule, location, message: message.into() });
    }

    fn node_loc(&self, i: usize) -> Location {
        Location::Node { id: self.ad.nodes[i].id.clone() }
    }

    fn edge_loc(&self, t: usize) -> Location {
        let tr = &self.ad.transitions[t];
        Location::Edge { index: t, src: tr.src.clone(), tgt: tr.tgt.clone() }
    }
}

/// Checks every structural and typing rule. An empty result means the
/// diagram can be translated and executed.
pub fn validate(ad: &ActivityDiagram) -> Vec<Diagnostic> {
    let mut c = Checker { ad, out: Vec::new() };
    check_ids(&mut c);
    check_domains(&mut c);
    check_counts(&mut c);
    let edges_ok = check_edge_refs(&mut c);
    if edges_ok {
        check_flow(&mut c);
        check_adjacency(&mut c);
    }
    check_guards(&mut c);
    check_assignments(&mut c);
    if edges_ok {
        check_inits(&mut c);
    }
    c.out
}

fn check_ids(c: &mut Checker) {
    let mut seen = HashSet::new();
    for (i, n) in c.ad.nodes.iter().enumerate() {
        if !seen.insert(n.id.as_str()) {
            c.push(Rule::DuplicateId, c.node_loc(i), format!("node id `{}` declared twice", n.id));
        }
    }
    let mut vars = HashSet::new();
    for v in &c.ad.vars {
        if !vars.insert(v.name.as_str()) {
            c.push(
                Rule::DuplicateId,
                Location::Var { name: v.name.clone() },
                format!("variable `{}` declared twice", v.name),
            );
        }
    }
}

fn check_domains(c: &mut Checker) {
    let var_names: HashSet<&str> = c.ad.vars.iter().map(|v| v.name.as_str()).collect();
    for v in &c.ad.vars {
        let loc = Location::Var { name: v.name.clone() };
        match &v.domain {
            Domain::Enumeration(members) => {
                let distinct: BTreeSet<&String> = members.iter().collect();
                if members.is_empty() {
                    c.push(Rule::Domain, loc.clone(), "enumeration has no members");
                } else if distinct.len() != members.len() {
                    c.push(Rule::Domain, loc.clone(), "enumeration members are not distinct");
                }
                for m in members {
                    if var_names.contains(m.as_str()) {
                        c.push(Rule::SymbolClash, loc.clone(), format!("member `{m}` has the same name as a variable"));
                    }
                }
            }
            Domain::Range { lo, hi } => {
                if lo > hi {
                    c.push(Rule::Domain, loc.clone(), format!("empty range {lo} .. {hi}"));
                }
            }
        }
        match (&v.kind, &v.init) {
            (VarKind::Input, Some(_)) => {
                c.push(Rule::VariableInit, loc, "input variables cannot have an initial value")
            }
            (VarKind::Local, Some(init)) if !v.domain.contains(init) => {
                c.push(Rule::VariableInit, loc, format!("initial value {init} is outside the domain"))
            }
            _ => {}
        }
    }
}

fn check_counts(c: &mut Checker) {
    let count = |k: NodeKind| c.ad.nodes.iter().filter(|n| n.kind == k).count();
    let initials = count(NodeKind::Initial);
    if initials != 1 {
        c.push(Rule::InitialCount, Location::Diagram, format!("expected exactly one initial node, found {initials}"));
    }
    if count(NodeKind::Final) == 0 {
        c.push(Rule::FinalCount, Location::Diagram, "expected at least one final node");
    }
}

fn check_edge_refs(c: &mut Checker) -> bool {
    let mut ok = true;
    for (t, tr) in c.ad.transitions.iter().enumerate() {
        for end in [&tr.src, &tr.tgt] {
            if c.ad.node(end).is_none() {
                ok = false;
                c.push(Rule::UnknownNode, c.edge_loc(t), format!("unknown node `{end}`"));
            }
        }
    }
    ok
}

fn check_flow(c: &mut Checker) {
    for i in 0..c.ad.nodes.len() {
        let node = &c.ad.nodes[i];
        let (ins, outs) = (c.ad.incoming(i).len(), c.ad.outgoing(i).len());
        let (rule, problem) = match node.kind {
            NodeKind::Initial => {
                if ins > 0 {
                    c.push(Rule::InitialIncoming, c.node_loc(i), "initial node has incoming transitions");
                }
                if outs != 1 {
                    c.push(
                        Rule::InitialOutgoing,
                        c.node_loc(i),
                        format!("initial node needs exactly one outgoing transition, has {outs}"),
                    );
                }
                continue;
            }
            NodeKind::Final => {
                if outs > 0 {
                    c.push(Rule::FinalOutgoing, c.node_loc(i), "final node has outgoing transitions");
                }
                continue;
            }
            NodeKind::Action => (Rule::ActionFlow, ins == 0 || outs != 1),
            NodeKind::Merge => (Rule::MergeFlow, ins == 0 || outs != 1),
            NodeKind::Decision => (Rule::DecisionFlow, ins != 1 || outs == 0),
            NodeKind::Fork => (Rule::ForkFlow, ins != 1 || outs < 2),
            NodeKind::Join => (Rule::JoinFlow, ins < 2 || outs != 1),
        };
        if problem {
            let expected = match node.kind {
                NodeKind::Action | NodeKind::Merge => "at least one incoming and exactly one outgoing",
                NodeKind::Decision => "exactly one incoming and at least one outgoing",
                NodeKind::Fork => "exactly one incoming and at least two outgoing",
                NodeKind::Join => "at least two incoming and exactly one outgoing",
                _ => unreachable!(),
            };
            c.push(
                rule,
                c.node_loc(i),
                format!("{} node needs {expected} transitions, has {ins} in / {outs} out", node.kind.keyword()),
            );
        }
    }
}

fn check_adjacency(c: &mut Checker) {
    for (t, tr) in c.ad.transitions.iter().enumerate() {
        let (Some(src), Some(tgt)) = (c.ad.node(&tr.src), c.ad.node(&tr.tgt)) else {
            continue;
        };
        let allowed = src.kind == NodeKind::Decision && tgt.kind == NodeKind::Merge;
        if src.kind.is_routing() && tgt.kind.is_routing() && !allowed {
            c.push(
                Rule::PseudoAdjacency,
                c.edge_loc(t),
                format!(
                    "{} node `{}` is connected directly to {} node `{}`",
                    src.kind.keyword(),
                    src.id,
                    tgt.kind.keyword(),
                    tgt.id
                ),
            );
        }
    }
}

fn domain_lookup(ad: &ActivityDiagram) -> impl Fn(&str) -> Option<Domain> + '_ {
    move |name| ad.var(name).map(|v| v.domain.clone())
}

fn check_guards(c: &mut Checker) {
    let lookup = domain_lookup(c.ad);
    for (t, tr) in c.ad.transitions.iter().enumerate() {
        let from_decision = c.ad.node(&tr.src).is_some_and(|n| n.kind == NodeKind::Decision);
        if tr.has_guard() && !from_decision {
            c.push(Rule::GuardPlacement, c.edge_loc(t), "only transitions leaving a decision may carry a guard");
        }
        match type_of(&tr.guard, &lookup) {
            Ok(Ty::Bool) => {}
            Ok(_) => c.push(Rule::ExprType, c.edge_loc(t), format!("guard `{}` is not boolean", tr.guard)),
            Err(msg) => c.push(Rule::ExprType, c.edge_loc(t), msg),
        }
    }
}

/// Integer assignments are sums and differences of integer variables and
/// literals; enumeration assignments are literals or plain copies.
fn assignment_shape_ok(e: &Expr, integer: bool) -> bool {
    match e {
        Expr::Int(_) | Expr::Var(_) => integer || matches!(e, Expr::Var(_)),
        Expr::Sym(_) => !integer,
        Expr::Arith(ArithOp::Add | ArithOp::Sub, a, b) => {
            integer && assignment_shape_ok(a, true) && assignment_shape_ok(b, true)
        }
        _ => false,
    }
}

fn check_assignments(c: &mut Checker) {
    let lookup = domain_lookup(c.ad);
    for (i, node) in c.ad.nodes.iter().enumerate() {
        if node.kind != NodeKind::Action {
            if node.action_name.is_some() || !node.assignments.is_empty() {
                c.push(Rule::AssignmentTarget, c.node_loc(i), "only action nodes carry names and assignments");
            }
            continue;
        }
        let mut targets = HashSet::new();
        for asg in &node.assignments {
            let Some(var) = c.ad.var(&asg.target) else {
                c.push(Rule::AssignmentTarget, c.node_loc(i), format!("undeclared variable `{}`", asg.target));
                continue;
            };
            if var.kind != VarKind::Local {
                c.push(
                    Rule::AssignmentTarget,
                    c.node_loc(i),
                    format!("`{}` is an input and cannot be assigned", asg.target),
                );
                continue;
            }
            if !targets.insert(asg.target.as_str()) {
                c.push(Rule::AssignmentTarget, c.node_loc(i), format!("`{}` is assigned twice", asg.target));
            }
            let integer = var.domain.is_integer();
            match type_of(&asg.value, &lookup) {
                Ok(ty) => {
                    let matches = match (&ty, &var.domain) {
                        (Ty::Int, Domain::Range { .. }) => true,
                        (Ty::Enum(None), Domain::Enumeration(_)) => true,
                        (Ty::Enum(Some(m)), Domain::Enumeration(d)) => m == d,
                        _ => false,
                    };
                    if !matches {
                        c.push(
                            Rule::ExprType,
                            c.node_loc(i),
                            format!("`{} := {}` does not fit the variable's domain", asg.target, asg.value),
                        );
                    } else if let Expr::Sym(s) = &asg.value {
                        if !var.domain.contains(&crate::model::Value::Sym(s.clone())) {
                            c.push(
                                Rule::ExprType,
                                c.node_loc(i),
                                format!("`{s}` is not a member of the domain of `{}`", asg.target),
                            );
                        }
                    }
                }
                Err(msg) => c.push(Rule::ExprType, c.node_loc(i), msg),
            }
            if !assignment_shape_ok(&asg.value, integer) {
                c.push(
                    Rule::AssignmentForm,
                    c.node_loc(i),
                    format!("unsupported assignment form `{} := {}`", asg.target, asg.value),
                );
            }
        }
    }
}

fn check_inits(c: &mut Checker) {
    for v in c.ad.locals() {
        if v.init.is_some() {
            continue;
        }
        match c.ad.local_initial_value(v) {
            Some(value) if v.domain.contains(&value) => {}
            Some(value) => c.push(
                Rule::VariableInit,
                Location::Var { name: v.name.clone() },
                format!("first assignment gives {value}, outside the domain"),
            ),
            None => c.push(
                Rule::VariableInit,
                Location::Var { name: v.name.clone() },
                "local variable has no init and no constant assignment in the first action",
            ),
        }
    }
}
