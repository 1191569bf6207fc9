//! Activity diagram to SMV module translation.
//!
//! Control is tracked by one boolean per initial, action and final node,
//! plus one per pending fork branch and one per arrived join input. Every
//! edge that constitutes an observable step gets an `_enabled`/`_taken`
//! define pair; the TRANS blocks then frame the control variables, force
//! one step per transition, keep inputs constant, frame the locals and name
//! the visible action.

use std::collections::{BTreeMap, BTreeSet};

use crate::expr::Expr;
use crate::model::{ActivityDiagram, Domain, EffectiveSource, NodeKind, StructureError, Value};
use crate::smv::{Comment, Define, Literal, SmvExpr, SmvModule, SmvVarDecl, Trans};
use crate::validate::{validate, Diagnostic};

/// Variable holding the canonical id of the node entered by the last step.
pub const ACNODE: &str = "acnode";
/// Variable holding the visible action of the last step.
pub const AC: &str = "ac";
/// Pseudo action and pseudo node used once the diagram has terminated.
pub const NOP: &str = "nop";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("diagram is not well formed ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("generated name `{0}` is not unique")]
    NameCollision(String),
    #[error("local variable `{0}` has no initial value")]
    MissingInit(String),
}

/// Names given to nodes, fork branches, join inputs and edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalNames {
    /// Canonical id per node index; `None` for routing nodes.
    pub node_id: Vec<Option<String>>,
    /// Fork out-edge index to `in_F<tgt>`.
    pub fork_var: BTreeMap<usize, String>,
    /// Join in-edge index to `in_J<src>`.
    pub join_var: BTreeMap<usize, String>,
    /// Step edge index to define base name.
    pub edge_name: BTreeMap<usize, String>,
}

impl CanonicalNames {
    /// Canonical id of a place node. Panics on routing nodes.
    pub fn node(&self, node: usize) -> &str {
        self.node_id[node].as_deref().expect("routing nodes have no canonical id")
    }

    pub fn in_var(&self, node: usize) -> String {
        format!("in_{}", self.node(node))
    }
}

pub fn canonical_names(ad: &ActivityDiagram) -> Result<CanonicalNames, TranslateError> {
    let mut node_id = Vec::with_capacity(ad.nodes.len());
    let mut k = 0;
    for n in &ad.nodes {
        let id = match n.kind {
            NodeKind::Initial => Some(format!("n{k}_initial")),
            NodeKind::Final => Some(format!("n{k}_final")),
            NodeKind::Action => Some(format!("n{k}")),
            _ => None,
        };
        if id.is_some() {
            k += 1;
        }
        node_id.push(id);
    }
    let mut names =
        CanonicalNames { node_id, fork_var: BTreeMap::new(), join_var: BTreeMap::new(), edge_name: BTreeMap::new() };

    for (t, tr) in ad.transitions.iter().enumerate() {
        let (src, tgt) = (ad.src_index(t)?, ad.tgt_index(t)?);
        if ad.nodes[src].kind == NodeKind::Fork {
            let eff = ad.effective_target(t)?;
            names.fork_var.insert(t, format!("in_F{}", names.node(eff)));
        }
        if ad.nodes[tgt].kind == NodeKind::Join {
            if !ad.nodes[src].kind.is_place() {
                return Err(StructureError::UnresolvableSource {
                    edge: t,
                    reason: format!("join input `{}` is not an action node", tr.src),
                }
                .into());
            }
            names.join_var.insert(t, format!("in_J{}", names.node(src)));
        }
    }

    for t in ad.step_edges() {
        let src_token = match ad.effective_source(t)? {
            EffectiveSource::Node(n) => names.node(n).to_string(),
            EffectiveSource::ForkBranch { edge, .. } => format!("F{}", names.node(ad.effective_target(edge)?)),
            EffectiveSource::Join(j) => {
                ad.incoming(j).iter().map(|&e| names.join_var[&e].trim_start_matches("in_").to_string()).collect()
            }
        };
        let tgt = ad.effective_target(t)?;
        names.edge_name.insert(t, format!("e{src_token}{}", names.node(tgt)));
    }
    Ok(names)
}

/// One step edge, fully resolved.
#[derive(Debug, Clone)]
struct StepPlan {
    name: String,
    enabled: SmvExpr,
    /// Control variables switched off by the step.
    clears: Vec<String>,
    /// Control variable of the node entered.
    arrive: String,
    /// Fork-branch or join-input variables switched on on arrival.
    hidden: Vec<String>,
    assigns: Vec<(String, SmvExpr)>,
    target: String,
}

impl StepPlan {
    fn sets(&self, var: &str) -> bool {
        self.arrive == var || self.hidden.iter().any(|h| h == var)
    }

    fn clears(&self, var: &str) -> bool {
        self.clears.iter().any(|c| c == var)
    }
}

pub fn expr_to_smv(e: &Expr) -> SmvExpr {
    match e {
        Expr::Bool(b) => SmvExpr::Int(i64::from(*b)),
        Expr::Int(i) => SmvExpr::Int(*i),
        Expr::Sym(s) => SmvExpr::sym(s.as_str()),
        Expr::Var(v) => SmvExpr::r(v.as_str()),
        Expr::Not(inner) => SmvExpr::not(expr_to_smv(inner)),
        Expr::And(a, b) => SmvExpr::and([expr_to_smv(a), expr_to_smv(b)]),
        Expr::Or(a, b) => SmvExpr::or([expr_to_smv(a), expr_to_smv(b)]),
        Expr::Cmp(op, a, b) => SmvExpr::cmp(*op, expr_to_smv(a), expr_to_smv(b)),
        Expr::Arith(op, a, b) => SmvExpr::arith(*op, expr_to_smv(a), expr_to_smv(b)),
    }
}

fn value_to_smv(v: &Value) -> SmvExpr {
    match v {
        Value::Bool(b) => SmvExpr::Int(i64::from(*b)),
        Value::Int(i) => SmvExpr::Int(*i),
        Value::Sym(s) => SmvExpr::sym(s.as_str()),
    }
}

fn domain_literals(d: &Domain) -> Vec<Literal> {
    match d {
        Domain::Enumeration(members) => members.iter().cloned().map(Literal::Sym).collect(),
        Domain::Range { lo, hi } => (*lo..=*hi).map(Literal::Int).collect(),
    }
}

/// Variables switched on when control arrives at `node`.
fn hidden_on_arrival(ad: &ActivityDiagram, names: &CanonicalNames, node: usize) -> Vec<String> {
    match ad.hidden_successor(node) {
        Some((_, fork)) if ad.nodes[fork].kind == NodeKind::Fork => {
            ad.outgoing(fork).iter().filter_map(|e| names.fork_var.get(e).cloned()).collect()
        }
        Some((edge, _)) => names.join_var.get(&edge).cloned().into_iter().collect(),
        None => Vec::new(),
    }
}

fn plan_steps(ad: &ActivityDiagram, names: &CanonicalNames) -> Result<Vec<StepPlan>, TranslateError> {
    let mut plans = Vec::new();
    for (&t, name) in &names.edge_name {
        let tgt = ad.effective_target(t)?;
        let (enabled, mut clears) = match ad.effective_source(t)? {
            EffectiveSource::Node(n) => {
                let guard = &ad.transitions[t].guard;
                let occupied = SmvExpr::r(names.in_var(n));
                let enabled =
                    if ad.transitions[t].has_guard() { SmvExpr::and([occupied, expr_to_smv(guard)]) } else { occupied };
                (enabled, vec![names.in_var(n)])
            }
            EffectiveSource::ForkBranch { fork, edge } => {
                let slot = names.fork_var[&edge].clone();
                let mut clears = vec![slot.clone()];
                for e in ad.incoming(fork) {
                    clears.push(names.in_var(ad.src_index(e)?));
                }
                (SmvExpr::r(slot), clears)
            }
            EffectiveSource::Join(j) => {
                let mut slots = Vec::new();
                let mut clears = Vec::new();
                for e in ad.incoming(j) {
                    let slot = names.join_var[&e].clone();
                    slots.push(SmvExpr::r(slot.as_str()));
                    clears.push(slot);
                    clears.push(names.in_var(ad.src_index(e)?));
                }
                (SmvExpr::and(slots), clears)
            }
        };
        let arrive = names.in_var(tgt);
        // a self loop re-enters its own node, so there is nothing to leave
        clears.retain(|c| *c != arrive);
        let assigns = ad.nodes[tgt].assignments.iter().map(|a| (a.target.clone(), expr_to_smv(&a.value))).collect();
        plans.push(StepPlan {
            name: name.clone(),
            enabled,
            clears,
            arrive,
            hidden: hidden_on_arrival(ad, names, tgt),
            assigns,
            target: names.node(tgt).to_string(),
        });
    }
    // BTreeMap order is edge order, which is the emission order
    Ok(plans)
}

/// Control variables in declaration order: node flags, fork-branch flags,
/// join-input flags.
fn control_vars(ad: &ActivityDiagram, names: &CanonicalNames) -> Vec<String> {
    let mut out: Vec<String> =
        (0..ad.nodes.len()).filter(|&n| names.node_id[n].is_some()).map(|n| names.in_var(n)).collect();
    for (f, node) in ad.nodes.iter().enumerate() {
        if node.kind == NodeKind::Fork {
            out.extend(ad.outgoing(f).iter().rev().filter_map(|e| names.fork_var.get(e).cloned()));
        }
    }
    for (j, node) in ad.nodes.iter().enumerate() {
        if node.kind == NodeKind::Join {
            out.extend(ad.incoming(j).iter().filter_map(|e| names.join_var.get(e).cloned()));
        }
    }
    out
}

fn acnode_literals(ad: &ActivityDiagram, names: &CanonicalNames) -> Vec<String> {
    (0..ad.nodes.len()).filter_map(|n| names.node_id[n].clone()).chain(std::iter::once(NOP.to_string())).collect()
}

fn action_of(ad: &ActivityDiagram, node: usize) -> String {
    ad.nodes[node].action_name.as_deref().map(crate::model::sanitize_action_name).unwrap_or_else(|| NOP.to_string())
}

/// The state space.
pub fn emit_vars(ad: &ActivityDiagram, names: &CanonicalNames) -> (Vec<SmvVarDecl>, Vec<Comment>) {
    let mut vars: Vec<SmvVarDecl> = control_vars(ad, names).into_iter().map(SmvVarDecl::boolean).collect();
    let mut comments = vec![Comment::new(0, "nodes and pseudo-nodes of ad")];

    comments.push(Comment::new(vars.len(), "visitable nodes"));
    let acnodes = acnode_literals(ad, names).into_iter().map(Literal::Sym).collect();
    vars.push(SmvVarDecl::enumeration(ACNODE, acnodes));

    comments.push(Comment::new(vars.len(), "the visible action of a step"));
    let actions: BTreeSet<String> = ad.action_symbols().into_values().collect();
    let mut acs: Vec<Literal> = actions.into_iter().map(Literal::Sym).collect();
    acs.push(Literal::Sym(NOP.into()));
    vars.push(SmvVarDecl::enumeration(AC, acs));

    comments.push(Comment::new(vars.len(), "input variables"));
    vars.extend(ad.inputs().map(|v| SmvVarDecl::enumeration(v.name.as_str(), domain_literals(&v.domain))));
    comments.push(Comment::new(vars.len(), "control variables"));
    vars.extend(ad.locals().map(|v| SmvVarDecl::enumeration(v.name.as_str(), domain_literals(&v.domain))));
    (vars, comments)
}

/// The initial states.
pub fn emit_init(ad: &ActivityDiagram, names: &CanonicalNames) -> Result<(Vec<SmvExpr>, Vec<Comment>), TranslateError> {
    let initial = ad.initial_node().ok_or_else(|| StructureError::UnknownNode("initial".into()))?;
    let init_var = names.in_var(initial);
    let mut on = vec![init_var];
    // slots that are already pending when the diagram starts
    on.extend(hidden_on_arrival(ad, names, initial));

    let mut inits = Vec::new();
    let mut comments = vec![Comment::new(0, "init all nodes")];
    for v in control_vars(ad, names) {
        let bit = i64::from(on.contains(&v));
        inits.push(SmvExpr::eq(SmvExpr::r(v), SmvExpr::Int(bit)));
    }
    comments.push(Comment::new(inits.len(), "init control variables as assigned in first node"));
    for v in ad.locals() {
        let value = ad.local_initial_value(v).ok_or_else(|| TranslateError::MissingInit(v.name.clone()))?;
        inits.push(SmvExpr::eq(SmvExpr::r(v.name.as_str()), value_to_smv(&value)));
    }
    comments.push(Comment::new(inits.len(), "set initial action node and visible action"));
    inits.push(SmvExpr::eq(SmvExpr::r(ACNODE), SmvExpr::sym(names.node(initial))));
    inits.push(SmvExpr::eq(SmvExpr::r(AC), SmvExpr::sym(NOP)));
    Ok((inits, comments))
}

fn taken_define(p: &StepPlan) -> Define {
    let enabled = format!("{}_enabled", p.name);
    let mut parts = vec![SmvExpr::r(enabled.as_str())];
    let mut comments = vec![Comment::new(parts.len(), "not in previous nodes anymore")];
    parts.extend(p.clears.iter().map(|c| SmvExpr::not(SmvExpr::next_ref(c.as_str()))));
    comments.push(Comment::new(parts.len(), "arrive in target node"));
    parts.push(SmvExpr::next_ref(p.arrive.as_str()));
    comments.push(Comment::new(parts.len(), "possibly taking hidden edges"));
    parts.extend(p.hidden.iter().map(|h| SmvExpr::next_ref(h.as_str())));
    comments.push(Comment::new(parts.len(), "doing assignments"));
    parts.extend(p.assigns.iter().map(|(v, e)| SmvExpr::eq(SmvExpr::next_ref(v.as_str()), e.clone())));
    comments.push(Comment::new(parts.len(), "set next node"));
    parts.push(SmvExpr::next(SmvExpr::eq(SmvExpr::r(ACNODE), SmvExpr::sym(p.target.as_str()))));
    Define { name: format!("{}_taken", p.name), expr: SmvExpr::And(parts), comments }
}

/// One `_taken` define per step edge, with fork/join bookkeeping folded in.
pub fn emit_taken_defines(ad: &ActivityDiagram, names: &CanonicalNames) -> Result<Vec<Define>, TranslateError> {
    let mut out = Vec::new();
    for p in plan_steps(ad, names)? {
        out.push(Define::new(format!("{}_enabled", p.name), p.enabled.clone()));
        out.push(taken_define(&p));
    }
    Ok(out)
}

fn taken_ref(p: &StepPlan) -> SmvExpr {
    SmvExpr::r(format!("{}_taken", p.name))
}

fn frame(var: &str) -> SmvExpr {
    SmvExpr::eq(SmvExpr::r(var), SmvExpr::next_ref(var))
}

/// A control variable only changes when a step sets or clears it.
pub fn emit_frame_control(ad: &ActivityDiagram, names: &CanonicalNames) -> Result<SmvExpr, TranslateError> {
    let plans = plan_steps(ad, names)?;
    let clauses = control_vars(ad, names).into_iter().map(|v| {
        let setters = plans.iter().filter(|p| p.sets(&v));
        let clearers = plans.iter().filter(|p| p.clears(&v) && !p.sets(&v));
        SmvExpr::Or(std::iter::once(frame(&v)).chain(setters.chain(clearers).map(taken_ref)).collect())
    });
    Ok(SmvExpr::and(clauses))
}

/// Outside a final node some step is taken; inside one the next
/// node is `nop`.
pub fn emit_step_obligation(ad: &ActivityDiagram, names: &CanonicalNames) -> Result<SmvExpr, TranslateError> {
    let plans = plan_steps(ad, names)?;
    let finals: Vec<SmvExpr> = (0..ad.nodes.len())
        .filter(|&n| ad.nodes[n].kind == NodeKind::Final)
        .map(|n| SmvExpr::r(names.in_var(n)))
        .collect();
    let done = SmvExpr::next(SmvExpr::eq(SmvExpr::r(ACNODE), SmvExpr::sym(NOP)));
    Ok(SmvExpr::and([
        SmvExpr::iff(done, SmvExpr::or(finals.clone())),
        SmvExpr::or(finals.into_iter().chain(plans.iter().map(taken_ref))),
    ]))
}

/// Inputs never change. `None` without inputs.
pub fn emit_input_frame(ad: &ActivityDiagram) -> Option<SmvExpr> {
    let parts: Vec<SmvExpr> = ad.inputs().map(|v| frame(&v.name)).collect();
    (!parts.is_empty()).then(|| SmvExpr::and(parts))
}

/// A local only changes when entering a node that assigns it.
/// `None` without locals.
pub fn emit_local_frame(ad: &ActivityDiagram, names: &CanonicalNames) -> Option<SmvExpr> {
    let parts: Vec<SmvExpr> = ad
        .locals()
        .map(|v| {
            let assigning = (0..ad.nodes.len())
                .filter(|&n| ad.nodes[n].assignments.iter().any(|a| a.target == v.name))
                .map(|n| SmvExpr::eq(SmvExpr::next_ref(ACNODE), SmvExpr::sym(names.node(n))));
            SmvExpr::or(std::iter::once(frame(&v.name)).chain(assigning))
        })
        .collect();
    (!parts.is_empty()).then(|| SmvExpr::and(parts))
}

/// The visible action follows from the node entered.
pub fn emit_action_naming(ad: &ActivityDiagram, names: &CanonicalNames) -> SmvExpr {
    let mut parts = Vec::new();
    for n in 0..ad.nodes.len() {
        if let Some(id) = &names.node_id[n] {
            parts.push((id.clone(), action_of(ad, n)));
        }
    }
    parts.push((NOP.to_string(), NOP.to_string()));
    SmvExpr::and(parts.into_iter().map(|(node, action)| {
        SmvExpr::imp(
            SmvExpr::eq(SmvExpr::next_ref(ACNODE), SmvExpr::sym(node)),
            SmvExpr::eq(SmvExpr::next_ref(AC), SmvExpr::sym(action)),
        )
    }))
}

/// The five TRANS blocks, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransRule {
    /// Control variables change only when a step sets or clears them.
    FrameControl,
    /// Some step is taken unless a final node was reached.
    StepObligation,
    /// Inputs keep their value.
    InputFrame,
    /// Locals change only on assignment.
    LocalFrame,
    /// `ac` names the action of the node entered.
    ActionNaming,
}

impl TransRule {
    pub const ALL: [TransRule; 5] = [
        TransRule::FrameControl,
        TransRule::StepObligation,
        TransRule::InputFrame,
        TransRule::LocalFrame,
        TransRule::ActionNaming,
    ];
}

/// Translation switches. Omitting blocks produces deliberately broken
/// modules for mutation testing.
#[derive(Debug, Clone, Default)]
pub struct TranslateOptions {
    pub omit: BTreeSet<TransRule>,
}

impl TranslateOptions {
    pub fn omitting(rule: TransRule) -> Self {
        Self { omit: BTreeSet::from([rule]) }
    }
}

pub fn translate(ad: &ActivityDiagram) -> Result<SmvModule, TranslateError> {
    translate_with(ad, &TranslateOptions::default())
}

pub fn translate_with(ad: &ActivityDiagram, opts: &TranslateOptions) -> Result<SmvModule, TranslateError> {
    let diagnostics = validate(ad);
    if !diagnostics.is_empty() {
        return Err(TranslateError::Invalid(diagnostics));
    }
    let names = canonical_names(ad)?;
    let (vars, var_comments) = emit_vars(ad, &names);
    let (inits, init_comments) = emit_init(ad, &names)?;
    let defines = emit_taken_defines(ad, &names)?;

    let mut trans = Vec::new();
    let keep = |r: TransRule| !opts.omit.contains(&r);
    if keep(TransRule::FrameControl) {
        trans.push(Trans::new(emit_frame_control(ad, &names)?));
    }
    if keep(TransRule::StepObligation) {
        trans.push(Trans::new(emit_step_obligation(ad, &names)?));
    }
    if let Some(e) = emit_input_frame(ad).filter(|_| keep(TransRule::InputFrame)) {
        trans.push(Trans { expr: e, comments: vec![Comment::new(0, "input variables do not change")] });
    }
    if let Some(e) = emit_local_frame(ad, &names).filter(|_| keep(TransRule::LocalFrame)) {
        trans.push(Trans { expr: e, comments: vec![Comment::new(0, "local variables change only on assignments")] });
    }
    if keep(TransRule::ActionNaming) {
        trans.push(Trans::new(emit_action_naming(ad, &names)));
    }

    let module = SmvModule {
        vars,
        var_comments,
        inits,
        init_comments,
        defines,
        define_comments: vec![Comment::new(0, "shortcut to what happens when an edge is taken")],
        trans,
    };
    check_names(&module)?;
    Ok(module)
}

/// Rejects modules where a generated or user name is declared twice or is
/// also used as an enumeration literal.
fn check_names(m: &SmvModule) -> Result<(), TranslateError> {
    let mut declared = BTreeSet::new();
    for name in m.vars.iter().map(|v| &v.name).chain(m.defines.iter().map(|d| &d.name)) {
        if !declared.insert(name.as_str()) {
            return Err(TranslateError::NameCollision(name.clone()));
        }
    }
    for v in &m.vars {
        if let crate::smv::SmvType::Enum(lits) = &v.ty {
            for l in lits {
                if let Literal::Sym(s) = l {
                    if declared.contains(s.as_str()) {
                        return Err(TranslateError::NameCollision(s.clone()));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Node, Transition};

    fn single_action() -> ActivityDiagram {
        let mut ad = ActivityDiagram::new("single");
        ad.nodes = vec![Node::new("i", NodeKind::Initial), Node::action("a", "do it"), Node::new("f", NodeKind::Final)];
        ad.transitions = vec![Transition::new("i", "a"), Transition::new("a", "f")];
        ad
    }

    #[test]
    fn single_action_names() {
        let ad = single_action();
        let names = canonical_names(&ad).unwrap();
        assert_eq!(names.node(0), "n0_initial");
        assert_eq!(names.node(1), "n1");
        assert_eq!(names.node(2), "n2_final");
        assert_eq!(names.edge_name.values().collect::<Vec<_>>(), ["en0_initialn1", "en1n2_final"]);
    }

    #[test]
    fn single_action_module_shape() {
        let m = translate(&single_action()).unwrap();
        assert!(m.check().is_ok());
        assert_eq!(m.vars.len(), 5);
        // three control flags plus acnode and ac
        assert_eq!(m.inits.len(), 5);
        assert_eq!(m.trans.len(), 3);
        assert_eq!(m.trans[2].expr.conjuncts().len(), 4);
        assert_eq!(m.defines.len(), 4);
    }

    #[test]
    fn omitted_rules_are_dropped() {
        let ad = single_action();
        for rule in TransRule::ALL {
            let m = translate_with(&ad, &TranslateOptions::omitting(rule)).unwrap();
            let expected = match rule {
                TransRule::InputFrame | TransRule::LocalFrame => 3,
                _ => 2,
            };
            assert_eq!(m.trans.len(), expected, "{rule:?}");
        }
    }

    #[test]
    fn self_loop_does_not_clear_its_target() {
        let mut ad = single_action();
        ad.nodes.push(Node::new("d", NodeKind::Decision));
        ad.nodes.push(Node::new("m", NodeKind::Merge));
        ad.transitions = vec![
            Transition::new("i", "m"),
            Transition::new("m", "a"),
            Transition::new("a", "d"),
            Transition::guarded("d", "m", Expr::Bool(false)),
            Transition::new("d", "f"),
        ];
        assert!(validate(&ad).is_empty(), "{:?}", validate(&ad));
        let m = translate(&ad).unwrap();
        let taken = m.define("en1n1_taken").unwrap();
        assert!(!taken.expr.conjuncts().contains(&SmvExpr::not(SmvExpr::next_ref("in_n1"))));
    }

    #[test]
    fn action_name_collision_with_variable() {
        let mut ad = single_action();
        ad.nodes[1].action_name = Some("acnode".into());
        assert_eq!(translate(&ad), Err(TranslateError::NameCollision("acnode".into())));
    }
}
