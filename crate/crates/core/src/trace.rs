//! Observable action traces and bounded exploration of labelled systems.
//!
//! Both semantics expose the same interface: a set of initial states and a
//! labelled step relation, where the label is the visible action of the
//! step. Traces are enumerated on the determinized system (prefix, set of
//! states), so two runs with the same actions are one trace no matter how
//! many internal interleavings produce them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;

use serde::Serialize;

use crate::model::Value;
use crate::translate::NOP;

/// Exploration bound shared by every enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of search nodes, distinct states or trace prefixes
    /// a single operation may visit.
    pub max_states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_states: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("exploration bound of {limit} {what} exceeded")]
    Resource { what: &'static str, limit: usize },
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("module cannot be executed: {0}")]
    Unsupported(String),
}

/// Counts work against a limit.
#[derive(Debug)]
pub(crate) struct Budget {
    used: usize,
    limit: usize,
    what: &'static str,
}

impl Budget {
    pub(crate) fn new(limits: Limits, what: &'static str) -> Self {
        Self { used: 0, limit: limits.max_states, what }
    }

    pub(crate) fn spend(&mut self, n: usize) -> Result<(), ExecError> {
        self.used += n;
        if self.used > self.limit {
            Err(ExecError::Resource { what: self.what, limit: self.limit })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceEnd {
    /// The pseudo action `nop` was observed: the diagram finished.
    Terminated,
    /// The depth bound was reached.
    Cut,
    /// Some run with these actions has no successor.
    Deadlock,
}

impl TraceEnd {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEnd::Terminated => "terminated",
            TraceEnd::Cut => "cut",
            TraceEnd::Deadlock => "deadlock",
        }
    }
}

/// A finite action sequence for one valuation of the varying initial
/// variables (in practice the inputs).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionTrace {
    pub inputs: Vec<(String, Value)>,
    pub actions: Vec<String>,
    pub end: TraceEnd,
}

impl ActionTrace {
    pub fn is_terminated(&self) -> bool {
        self.end == TraceEnd::Terminated
    }

    /// The trace as the depth-`depth` enumeration would report it.
    pub fn truncate(&self, depth: usize) -> ActionTrace {
        let mut t = self.clone();
        if t.actions.len() >= depth && !(t.actions.len() == depth && t.end == TraceEnd::Cut) {
            t.actions.truncate(depth);
            t.end = TraceEnd::Cut;
        }
        t
    }

    pub fn record(&self) -> TraceRecord<'_> {
        TraceRecord {
            inputs: self.inputs.iter().map(|(k, v)| (k.as_str(), v)).collect(),
            actions: &self.actions,
            terminated: self.is_terminated(),
            end: self.end,
            length: self.actions.len(),
        }
    }
}

impl Serialize for ActionTrace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.record().serialize(serializer)
    }
}

/// `[project=long] receive_project·define_work|cut`
impl fmt::Display for ActionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.inputs.is_empty() {
            let inputs: Vec<String> = self.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "[{}] ", inputs.join(", "))?;
        }
        write!(f, "{}|{}", self.actions.join("·"), self.end.as_str())
    }
}

/// Machine-readable form of a trace.
#[derive(Debug, Serialize)]
pub struct TraceRecord<'a> {
    pub inputs: BTreeMap<&'a str, &'a Value>,
    pub actions: &'a [String],
    pub terminated: bool,
    pub end: TraceEnd,
    pub length: usize,
}

/// A system whose steps are labelled with the visible action.
pub trait LabelledSystem {
    type State: Clone + Ord + Hash;

    fn initial_states(&self) -> Result<Vec<Self::State>, ExecError>;

    /// Named values of a state; the ones that differ between initial
    /// states key the traces.
    fn observe(&self, state: &Self::State) -> Vec<(String, Value)>;

    fn steps(&self, state: &Self::State) -> Result<Vec<(String, Self::State)>, ExecError>;
}

/// Successor sets keyed by action label.
type ByLabel<S> = BTreeMap<String, BTreeSet<S>>;

/// Initial state sets keyed by input valuation.
type Groups<S> = BTreeMap<Vec<(String, Value)>, BTreeSet<S>>;

/// Memoized successor function with a state budget.
pub(crate) struct Stepper<'a, S: LabelledSystem> {
    sys: &'a S,
    cache: HashMap<S::State, Vec<(String, S::State)>>,
    budget: Budget,
}

impl<'a, S: LabelledSystem> Stepper<'a, S> {
    pub(crate) fn new(sys: &'a S, limits: Limits) -> Self {
        Self { sys, cache: HashMap::new(), budget: Budget::new(limits, "states and transitions") }
    }

    fn steps(&mut self, s: &S::State) -> Result<&[(String, S::State)], ExecError> {
        if !self.cache.contains_key(s) {
            self.budget.spend(1)?;
            let succ = self.sys.steps(s)?;
            self.budget.spend(succ.len())?;
            self.cache.insert(s.clone(), succ);
        }
        Ok(&self.cache[s])
    }

    pub(crate) fn states_seen(&self) -> usize {
        self.cache.len()
    }

    /// Successor sets by label, and whether some state is stuck.
    fn expand(&mut self, states: &BTreeSet<S::State>) -> Result<(ByLabel<S::State>, bool), ExecError> {
        let mut by_label: ByLabel<S::State> = BTreeMap::new();
        let mut stuck = false;
        for s in states {
            let succ = self.steps(s)?;
            stuck |= succ.is_empty();
            for (label, t) in succ {
                by_label.entry(label.clone()).or_default().insert(t.clone());
            }
        }
        Ok((by_label, stuck))
    }

    /// Follows the smallest label until the trace ends.
    fn greedy(
        &mut self,
        inputs: &[(String, Value)],
        mut prefix: Vec<String>,
        mut states: BTreeSet<S::State>,
        depth: usize,
    ) -> Result<ActionTrace, ExecError> {
        loop {
            let end = |actions, end| ActionTrace { inputs: inputs.to_vec(), actions, end };
            if prefix.len() >= depth {
                return Ok(end(prefix, TraceEnd::Cut));
            }
            let (by_label, stuck) = self.expand(&states)?;
            if stuck {
                return Ok(end(prefix, TraceEnd::Deadlock));
            }
            let Some((label, next)) = by_label.into_iter().next() else {
                return Ok(end(prefix, TraceEnd::Deadlock));
            };
            if label == NOP {
                return Ok(end(prefix, TraceEnd::Terminated));
            }
            prefix.push(label);
            states = next;
        }
    }
}

/// Initial states grouped by the values of the variables that vary among
/// them.
pub(crate) fn initial_groups<S: LabelledSystem>(sys: &S) -> Result<Groups<S::State>, ExecError> {
    let init = sys.initial_states()?;
    let observed: Vec<Vec<(String, Value)>> = init.iter().map(|s| sys.observe(s)).collect();
    let varying: BTreeSet<&str> = match observed.first() {
        Some(first) => first
            .iter()
            .filter(|(name, v)| observed.iter().any(|o| o.iter().find(|(n, _)| n == name).map(|(_, w)| w) != Some(v)))
            .map(|(name, _)| name.as_str())
            .collect(),
        None => BTreeSet::new(),
    };
    let mut groups: Groups<S::State> = BTreeMap::new();
    for (s, o) in init.iter().zip(&observed) {
        // sorted so that both semantics agree on the key whatever their variable order
        let mut key: Vec<(String, Value)> = o.iter().filter(|(n, _)| varying.contains(n.as_str())).cloned().collect();
        key.sort();
        groups.entry(key).or_default().insert(s.clone());
    }
    Ok(groups)
}

/// Every trace of at most `depth` steps.
pub fn enumerate_traces<S: LabelledSystem>(
    sys: &S,
    depth: usize,
    limits: Limits,
) -> Result<BTreeSet<ActionTrace>, ExecError> {
    let mut stepper = Stepper::new(sys, limits);
    let mut prefixes = Budget::new(limits, "trace prefixes");
    let mut out = BTreeSet::new();
    for (inputs, init) in initial_groups(sys)? {
        let mut stack = vec![(Vec::new(), init)];
        while let Some((prefix, states)) = stack.pop() {
            prefixes.spend(1)?;
            let trace =
                |actions: &Vec<String>, end| ActionTrace { inputs: inputs.clone(), actions: actions.clone(), end };
            if prefix.len() >= depth {
                out.insert(trace(&prefix, TraceEnd::Cut));
                continue;
            }
            let (by_label, stuck) = stepper.expand(&states)?;
            if stuck {
                out.insert(trace(&prefix, TraceEnd::Deadlock));
            }
            for (label, next) in by_label {
                if label == NOP {
                    out.insert(trace(&prefix, TraceEnd::Terminated));
                } else {
                    let mut p = prefix.clone();
                    p.push(label);
                    stack.push((p, next));
                }
            }
        }
    }
    Ok(out)
}

/// Outcome of comparing the trace sets of two systems.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceComparison {
    pub common: BTreeSet<ActionTrace>,
    /// Traces of the left system missing on the right. Where the two part
    /// ways only one witness is followed to its end.
    pub only_left: BTreeSet<ActionTrace>,
    pub only_right: BTreeSet<ActionTrace>,
    pub left_states: usize,
    pub right_states: usize,
}

/// Explores both systems in lockstep over common action prefixes.
pub fn compare_traces<L: LabelledSystem, R: LabelledSystem>(
    left: &L,
    right: &R,
    depth: usize,
    limits: Limits,
) -> Result<TraceComparison, ExecError> {
    let mut ls = Stepper::new(left, limits);
    let mut rs = Stepper::new(right, limits);
    let mut prefixes = Budget::new(limits, "trace prefixes");
    let mut cmp = TraceComparison::default();
    let lg = initial_groups(left)?;
    let mut rg = initial_groups(right)?;

    for (inputs, linit) in lg {
        let Some(rinit) = rg.remove(&inputs) else {
            cmp.only_left.insert(ls.greedy(&inputs, Vec::new(), linit, depth)?);
            continue;
        };
        let mut stack = vec![(Vec::new(), linit, rinit)];
        while let Some((prefix, lset, rset)) = stack.pop() {
            prefixes.spend(1)?;
            let trace = |end| ActionTrace { inputs: inputs.clone(), actions: prefix.clone(), end };
            if prefix.len() >= depth {
                cmp.common.insert(trace(TraceEnd::Cut));
                continue;
            }
            let (mut lnext, lstuck) = ls.expand(&lset)?;
            let (mut rnext, rstuck) = rs.expand(&rset)?;
            match (lstuck, rstuck) {
                (true, true) => cmp.common.insert(trace(TraceEnd::Deadlock)),
                (true, false) => cmp.only_left.insert(trace(TraceEnd::Deadlock)),
                (false, true) => cmp.only_right.insert(trace(TraceEnd::Deadlock)),
                (false, false) => false,
            };
            let labels: BTreeSet<String> = lnext.keys().chain(rnext.keys()).cloned().collect();
            for label in labels {
                let extended = || {
                    let mut p = prefix.clone();
                    p.push(label.clone());
                    p
                };
                match (lnext.remove(&label), rnext.remove(&label)) {
                    (Some(_), Some(_)) if label == NOP => {
                        cmp.common.insert(trace(TraceEnd::Terminated));
                    }
                    (Some(l), Some(r)) => stack.push((extended(), l, r)),
                    (Some(_), None) if label == NOP => {
                        cmp.only_left.insert(trace(TraceEnd::Terminated));
                    }
                    (None, Some(_)) if label == NOP => {
                        cmp.only_right.insert(trace(TraceEnd::Terminated));
                    }
                    (Some(l), None) => {
                        cmp.only_left.insert(ls.greedy(&inputs, extended(), l, depth)?);
                    }
                    (None, Some(r)) => {
                        cmp.only_right.insert(rs.greedy(&inputs, extended(), r, depth)?);
                    }
                    (None, None) => unreachable!("label comes from one of the maps"),
                }
            }
        }
    }
    for (inputs, rinit) in rg {
        cmp.only_right.insert(rs.greedy(&inputs, Vec::new(), rinit, depth)?);
    }
    cmp.left_states = ls.states_seen();
    cmp.right_states = rs.states_seen();
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A toy system given by an explicit edge list over integer states.
    struct Graph {
        init: Vec<u8>,
        edges: Vec<(u8, &'static str, u8)>,
    }

    impl LabelledSystem for Graph {
        type State = u8;

        fn initial_states(&self) -> Result<Vec<u8>, ExecError> {
            Ok(self.init.clone())
        }

        fn observe(&self, s: &u8) -> Vec<(String, Value)> {
            vec![("x".into(), Value::Int(i64::from(*s)))]
        }

        fn steps(&self, s: &u8) -> Result<Vec<(String, u8)>, ExecError> {
            Ok(self.edges.iter().filter(|e| e.0 == *s).map(|e| (e.1.to_string(), e.2)).collect())
        }
    }

    fn diamond() -> Graph {
        // two internal paths with the same labels, one dead end
        Graph {
            init: vec![0],
            edges: vec![(0, "a", 1), (0, "a", 2), (1, "b", 3), (2, "b", 3), (2, "c", 4), (3, "nop", 3)],
        }
    }

    fn t(actions: &[&str], end: TraceEnd) -> ActionTrace {
        ActionTrace { inputs: vec![], actions: actions.iter().map(|s| s.to_string()).collect(), end }
    }

    #[test]
    fn determinized_enumeration() {
        let traces = enumerate_traces(&diamond(), 5, Limits::default()).unwrap();
        let expected = BTreeSet::from([t(&["a", "b"], TraceEnd::Terminated), t(&["a", "c"], TraceEnd::Deadlock)]);
        assert_eq!(traces, expected);
    }

    #[test]
    fn depth_cuts() {
        let traces = enumerate_traces(&diamond(), 1, Limits::default()).unwrap();
        assert_eq!(traces, BTreeSet::from([t(&["a"], TraceEnd::Cut)]));
        let traces = enumerate_traces(&diamond(), 2, Limits::default()).unwrap();
        assert_eq!(traces, BTreeSet::from([t(&["a", "b"], TraceEnd::Cut), t(&["a", "c"], TraceEnd::Cut)]));
    }

    #[test]
    fn varying_initial_values_key_traces() {
        let g = Graph { init: vec![0, 5], edges: vec![(0, "a", 1), (5, "a", 1), (1, "nop", 1)] };
        let traces = enumerate_traces(&g, 3, Limits::default()).unwrap();
        assert_eq!(traces.len(), 2);
        assert!(traces.iter().all(|t| t.inputs.len() == 1 && t.is_terminated()));
    }

    #[test]
    fn comparison_reports_one_witness_per_divergence() {
        let left = diamond();
        let right =
            Graph { init: vec![0], edges: vec![(0, "a", 1), (1, "b", 3), (1, "d", 5), (5, "d", 5), (3, "nop", 3)] };
        let cmp = compare_traces(&left, &right, 6, Limits::default()).unwrap();
        assert_eq!(cmp.common, BTreeSet::from([t(&["a", "b"], TraceEnd::Terminated)]));
        assert_eq!(cmp.only_left, BTreeSet::from([t(&["a", "c"], TraceEnd::Deadlock)]));
        assert_eq!(cmp.only_right, BTreeSet::from([t(&["a", "d", "d", "d", "d", "d"], TraceEnd::Cut)]));
    }

    #[test]
    fn budget_is_enforced() {
        let g = Graph { init: vec![0], edges: vec![(0, "a", 0), (0, "b", 0)] };
        let err = enumerate_traces(&g, 20, Limits { max_states: 100 }).unwrap_err();
        assert!(matches!(err, ExecError::Resource { .. }));
    }

    #[test]
    fn truncation() {
        let full = t(&["a", "b"], TraceEnd::Terminated);
        assert_eq!(full.truncate(3), full);
        assert_eq!(full.truncate(2), t(&["a", "b"], TraceEnd::Cut));
        assert_eq!(full.truncate(1), t(&["a"], TraceEnd::Cut));
        assert_eq!(full.to_string(), "a·b|terminated");
    }
}
