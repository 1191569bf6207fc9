//! Abstract syntax of activity diagrams.
//!
//! A diagram is an ordered collection of variables, nodes and transitions.
//! Declaration order is significant: canonical SMV names and the order of
//! generated definitions are derived from it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;

/// A runtime value. Diagram variables only ever hold `Int` or `Sym`;
/// `Bool` shows up for guards and for SMV boolean variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Self {
        Value::Sym(s.into())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Int(0) => Some(false),
            Value::Int(1) => Some(true),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", u8::from(*b)),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

/// Finite domain of a diagram variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    Enumeration(Vec<String>),
    Range { lo: i64, hi: i64 },
}

impl Domain {
    pub fn enumeration<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Domain::Enumeration(members.into_iter().map(Into::into).collect())
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        Domain::Range { lo, hi }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Enumeration(members), Value::Sym(s)) => members.iter().any(|m| m == s),
            (Domain::Range { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            _ => false,
        }
    }

    /// All values in domain order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Enumeration(members) => members.iter().cloned().map(Value::Sym).collect(),
            Domain::Range { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Domain::Enumeration(members) => members.len() as u64,
            Domain::Range { lo, hi } if lo <= hi => (*hi as i128 - *lo as i128 + 1) as u64,
            Domain::Range { .. } => 0,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Domain::Range { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Input,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub domain: Domain,
    pub kind: VarKind,
    pub init: Option<Value>,
}

impl VariableDecl {
    pub fn input(name: impl Into<String>, domain: Domain) -> Self {
        Self { name: name.into(), domain, kind: VarKind::Input, init: None }
    }

    pub fn local(name: impl Into<String>, domain: Domain, init: Option<Value>) -> Self {
        Self { name: name.into(), domain, kind: VarKind::Local, init }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Initial,
    Final,
    Action,
    Decision,
    Merge,
    Fork,
    Join,
}

impl NodeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Initial => "initial",
            NodeKind::Final => "final",
            NodeKind::Action => "action",
            NodeKind::Decision => "decision",
            NodeKind::Merge => "merge",
            NodeKind::Fork => "fork",
            NodeKind::Join => "join",
        }
    }

    /// Routing nodes that never hold control themselves.
    pub fn is_routing(self) -> bool {
        matches!(self, NodeKind::Decision | NodeKind::Merge | NodeKind::Fork | NodeKind::Join)
    }

    /// Nodes that own an occupancy flag: action, initial and final nodes.
    pub fn is_place(self) -> bool {
        !self.is_routing()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub target: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// Only set on action nodes.
    pub action_name: Option<String>,
    pub assignments: Vec<Assignment>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self { id: id.into(), kind, action_name: None, assignments: Vec::new() }
    }

    pub fn action(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self { id: id.into(), kind: NodeKind::Action, action_name: Some(name.into()), assignments: Vec::new() }
    }

    pub fn with_assignment(mut self, target: impl Into<String>, value: Expr) -> Self {
        self.assignments.push(Assignment { target: target.into(), value });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub src: String,
    pub tgt: String,
    pub guard: Expr,
}

impl Transition {
    pub fn new(src: impl Into<String>, tgt: impl Into<String>) -> Self {
        Self { src: src.into(), tgt: tgt.into(), guard: Expr::Bool(true) }
    }

    pub fn guarded(src: impl Into<String>, tgt: impl Into<String>, guard: Expr) -> Self {
        Self { src: src.into(), tgt: tgt.into(), guard }
    }

    pub fn has_guard(&self) -> bool {
        self.guard != Expr::Bool(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityDiagram {
    pub name: String,
    pub vars: Vec<VariableDecl>,
    pub nodes: Vec<Node>,
    pub transitions: Vec<Transition>,
}

/// Where control comes from when an edge fires, after skipping routing
/// nodes on the source side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffectiveSource {
    /// An action or initial node (possibly reached through a decision).
    Node(usize),
    /// The pending branch of a fork, identified by the fork's outgoing edge.
    ForkBranch { fork: usize, edge: usize },
    /// The synchronisation of all incoming edges of a join.
    Join(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("transition {edge} has no resolvable source: {reason}")]
    UnresolvableSource { edge: usize, reason: String },
    #[error("merge chain starting at transition {edge} does not reach a non-merge node")]
    MergeCycle { edge: usize },
    #[error("merge `{0}` does not have exactly one outgoing transition")]
    MergeFanOut(String),
}

impl ActivityDiagram {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), vars: Vec::new(), nodes: Vec::new(), transitions: Vec::new() }
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn var(&self, name: &str) -> Option<&VariableDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &VariableDecl> {
        self.vars.iter().filter(|v| v.kind == VarKind::Input)
    }

    pub fn locals(&self) -> impl Iterator<Item = &VariableDecl> {
        self.vars.iter().filter(|v| v.kind == VarKind::Local)
    }

    pub fn initial_node(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == NodeKind::Initial)
    }

    /// Indices of transitions leaving `node`, in declaration order.
    pub fn outgoing(&self, node: usize) -> Vec<usize> {
        let id = &self.nodes[node].id;
        (0..self.transitions.len()).filter(|&t| &self.transitions[t].src == id).collect()
    }

    /// Indices of transitions entering `node`, in declaration order.
    pub fn incoming(&self, node: usize) -> Vec<usize> {
        let id = &self.nodes[node].id;
        (0..self.transitions.len()).filter(|&t| &self.transitions[t].tgt == id).collect()
    }

    fn endpoint(&self, id: &str) -> Result<usize, StructureError> {
        self.node_index(id).ok_or_else(|| StructureError::UnknownNode(id.to_string()))
    }

    pub fn src_index(&self, edge: usize) -> Result<usize, StructureError> {
        self.endpoint(&self.transitions[edge].src)
    }

    pub fn tgt_index(&self, edge: usize) -> Result<usize, StructureError> {
        self.endpoint(&self.transitions[edge].tgt)
    }

    /// Resolves the node that actually holds control before `edge` fires.
    pub fn effective_source(&self, edge: usize) -> Result<EffectiveSource, StructureError> {
        let src = self.src_index(edge)?;
        match self.nodes[src].kind {
            NodeKind::Initial | NodeKind::Action => Ok(EffectiveSource::Node(src)),
            NodeKind::Fork => Ok(EffectiveSource::ForkBranch { fork: src, edge }),
            NodeKind::Join => Ok(EffectiveSource::Join(src)),
            NodeKind::Decision => {
                let incoming = self.incoming(src);
                let [feed] = incoming.as_slice() else {
                    return Err(StructureError::UnresolvableSource {
                        edge,
                        reason: format!(
                            "decision `{}` has {} incoming transitions",
                            self.nodes[src].id,
                            incoming.len()
                        ),
                    });
                };
                let pred = self.src_index(*feed)?;
                match self.nodes[pred].kind {
                    NodeKind::Initial | NodeKind::Action => Ok(EffectiveSource::Node(pred)),
                    other => Err(StructureError::UnresolvableSource {
                        edge,
                        reason: format!(
                            "decision `{}` is fed by {} node `{}`",
                            self.nodes[src].id,
                            other.keyword(),
                            self.nodes[pred].id
                        ),
                    }),
                }
            }
            NodeKind::Merge | NodeKind::Final => Err(StructureError::UnresolvableSource {
                edge,
                reason: format!(
                    "{} node `{}` does not hold control",
                    self.nodes[src].kind.keyword(),
                    self.nodes[src].id
                ),
            }),
        }
    }

    /// Resolves the target of `edge`, skipping through merges.
    pub fn effective_target(&self, edge: usize) -> Result<usize, StructureError> {
        let mut current = edge;
        for _ in 0..=self.nodes.len() {
            let tgt = self.tgt_index(current)?;
            if self.nodes[tgt].kind != NodeKind::Merge {
                return Ok(tgt);
            }
            let out = self.outgoing(tgt);
            let [next] = out.as_slice() else {
                return Err(StructureError::MergeFanOut(self.nodes[tgt].id.clone()));
            };
            current = *next;
        }
        Err(StructureError::MergeCycle { edge })
    }

    /// Edges that become a step of their own. Edges into decisions, forks
    /// and joins are hidden (their effect is folded into the step that
    /// reaches their source), as are edges leaving a merge.
    pub fn is_step_edge(&self, edge: usize) -> bool {
        let (Ok(src), Ok(tgt)) = (self.src_index(edge), self.tgt_index(edge)) else {
            return false;
        };
        self.nodes[src].kind != NodeKind::Merge
            && !matches!(self.nodes[tgt].kind, NodeKind::Decision | NodeKind::Fork | NodeKind::Join)
    }

    pub fn step_edges(&self) -> Vec<usize> {
        (0..self.transitions.len()).filter(|&t| self.is_step_edge(t)).collect()
    }

    /// The single edge leaving a place node, if it leads into a fork or a
    /// join. Arrival at such a node also marks the fork branches or the
    /// join input as pending.
    pub fn hidden_successor(&self, node: usize) -> Option<(usize, usize)> {
        let out = self.outgoing(node);
        let [edge] = out.as_slice() else { return None };
        let tgt = self.tgt_index(*edge).ok()?;
        matches!(self.nodes[tgt].kind, NodeKind::Fork | NodeKind::Join).then_some((*edge, tgt))
    }

    /// The action node whose assignments provide the initial values of
    /// locals without a declared init: the target of the initial edge.
    pub fn first_action(&self) -> Option<usize> {
        let init = self.initial_node()?;
        let out = self.outgoing(init);
        let [edge] = out.as_slice() else { return None };
        if !self.is_step_edge(*edge) {
            return None;
        }
        let tgt = self.effective_target(*edge).ok()?;
        (self.nodes[tgt].kind == NodeKind::Action).then_some(tgt)
    }

    /// Initial value of a local variable, either declared or taken from a
    /// constant assignment in the first action.
    pub fn local_initial_value(&self, var: &VariableDecl) -> Option<Value> {
        if var.kind != VarKind::Local {
            return None;
        }
        if let Some(v) = &var.init {
            return Some(v.clone());
        }
        let first = self.first_action()?;
        let asg = self.nodes[first].assignments.iter().find(|a| a.target == var.name)?;
        asg.value.constant_value()
    }

    /// Distinct action names after sanitisation, keyed by node id.
    pub fn action_symbols(&self) -> BTreeMap<String, String> {
        self.nodes
            .iter()
            .filter_map(|n| n.action_name.as_ref().map(|a| (n.id.clone(), sanitize_action_name(a))))
            .collect()
    }
}

/// Turns an action name such as `define work` into an SMV symbol.
pub fn sanitize_action_name(name: &str) -> String {
    let mut out: String =
        name.trim().chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_fixture() -> ActivityDiagram {
        let mut ad = ActivityDiagram::new("loop");
        ad.nodes = vec![
            Node::new("i", NodeKind::Initial),
            Node::action("a", "A"),
            Node::action("b", "B"),
            Node::new("f", NodeKind::Final),
            Node::new("d", NodeKind::Decision),
            Node::new("m", NodeKind::Merge),
        ];
        ad.transitions = vec![
            Transition::new("i", "a"),
            Transition::new("a", "m"),
            Transition::new("m", "b"),
            Transition::new("b", "d"),
            Transition::guarded("d", "m", Expr::Bool(true)),
            Transition::new("d", "f"),
        ];
        ad
    }

    #[test]
    fn effective_source_skips_decision() {
        let ad = loop_fixture();
        assert_eq!(ad.effective_source(4).unwrap(), EffectiveSource::Node(2));
        assert_eq!(ad.effective_source(1).unwrap(), EffectiveSource::Node(1));
        assert!(ad.effective_source(2).is_err());
    }

    #[test]
    fn effective_target_skips_merge() {
        let ad = loop_fixture();
        assert_eq!(ad.effective_target(1).unwrap(), 2);
        assert_eq!(ad.effective_target(4).unwrap(), 2);
        assert_eq!(ad.effective_target(5).unwrap(), 3);
    }

    #[test]
    fn merge_chain_resolves_recursively() {
        let mut ad = ActivityDiagram::new("chain");
        ad.nodes = vec![
            Node::action("a", "A"),
            Node::new("m1", NodeKind::Merge),
            Node::new("m2", NodeKind::Merge),
            Node::action("n2", "B"),
        ];
        ad.transitions = vec![Transition::new("a", "m1"), Transition::new("m1", "m2"), Transition::new("m2", "n2")];
        assert_eq!(ad.effective_target(0).unwrap(), 3);
        // idempotent on a non-merge result
        assert_eq!(ad.effective_target(2).unwrap(), 3);
    }

    #[test]
    fn merge_cycle_is_an_error() {
        let mut ad = ActivityDiagram::new("cycle");
        ad.nodes = vec![Node::action("a", "A"), Node::new("m1", NodeKind::Merge), Node::new("m2", NodeKind::Merge)];
        ad.transitions = vec![Transition::new("a", "m1"), Transition::new("m1", "m2"), Transition::new("m2", "m1")];
        assert_eq!(ad.effective_target(0), Err(StructureError::MergeCycle { edge: 0 }));
    }

    #[test]
    fn step_edges_hide_routing_entries() {
        let ad = loop_fixture();
        assert_eq!(ad.step_edges(), vec![0, 1, 4, 5]);
    }

    #[test]
    fn sanitize() {
        assert_eq!(sanitize_action_name("define work"), "define_work");
        assert_eq!(sanitize_action_name("a-b c"), "a_b_c");
        assert_eq!(sanitize_action_name("1st"), "_1st");
    }

    #[test]
    fn domain_membership() {
        let d = Domain::range(0, 4);
        assert!(d.contains(&Value::Int(4)));
        assert!(!d.contains(&Value::Int(5)));
        assert!(!d.contains(&Value::sym("x")));
        assert_eq!(d.size(), 5);
        let e = Domain::enumeration(["long", "short"]);
        assert!(e.contains(&Value::sym("short")));
        assert_eq!(e.values(), vec![Value::sym("long"), Value::sym("short")]);
    }
}
