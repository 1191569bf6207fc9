//! Direct interpreter for activity diagrams.
//!
//! Tokens sit on places: an action, initial or final node, a pending fork
//! branch, or an arrived join input. This deliberately works on the diagram
//! graph and never looks at the generated SMV, so that comparing the two
//! semantics actually tests the translator.

use std::collections::{BTreeMap, BTreeSet};

use crate::expr::{eval, eval_bool};
use crate::model::{sanitize_action_name, ActivityDiagram, EffectiveSource, NodeKind, Value};
use crate::trace::{enumerate_traces, ActionTrace, ExecError, LabelledSystem, Limits};
use crate::translate::NOP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    /// Control is at an initial, action or final node.
    At(usize),
    /// A fork branch (identified by the fork's outgoing edge) is pending.
    ForkSlot(usize),
    /// Control has arrived on this incoming edge of a join.
    JoinSlot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdConfig {
    pub occupied: BTreeSet<Place>,
    pub valuation: BTreeMap<String, Value>,
    pub last_action: String,
    /// Set once a final node has been reached.
    pub terminated: bool,
}

impl AdConfig {
    pub fn at(&self, node: usize) -> bool {
        self.occupied.contains(&Place::At(node))
    }
}

/// Places filled when control arrives at `node`: the node itself plus the
/// slots of a fork or join right behind it.
fn arrival(ad: &ActivityDiagram, node: usize) -> Vec<Place> {
    let mut out = vec![Place::At(node)];
    if let Some((edge, next)) = ad.hidden_successor(node) {
        if ad.nodes[next].kind == NodeKind::Fork {
            out.extend(ad.outgoing(next).into_iter().map(Place::ForkSlot));
        } else {
            out.push(Place::JoinSlot(edge));
        }
    }
    out
}

/// One configuration per input valuation.
pub fn ad_initial_configs(ad: &ActivityDiagram) -> Result<Vec<AdConfig>, ExecError> {
    let initial = ad.initial_node().ok_or_else(|| ExecError::Unsupported("no initial node".into()))?;
    let mut base = BTreeMap::new();
    for v in ad.locals() {
        let value = ad
            .local_initial_value(v)
            .ok_or_else(|| ExecError::Unsupported(format!("local `{}` has no initial value", v.name)))?;
        base.insert(v.name.clone(), value);
    }
    let mut valuations = vec![base];
    for v in ad.inputs() {
        valuations = valuations
            .into_iter()
            .flat_map(|val| {
                v.domain.values().into_iter().map(move |x| {
                    let mut val = val.clone();
                    val.insert(v.name.clone(), x);
                    val
                })
            })
            .collect();
    }
    let occupied: BTreeSet<Place> = arrival(ad, initial).into_iter().collect();
    Ok(valuations
        .into_iter()
        .map(|valuation| AdConfig {
            occupied: occupied.clone(),
            valuation,
            last_action: NOP.to_string(),
            terminated: false,
        })
        .collect())
}

/// Successors of `c`, each with the edge that fired. A terminated
/// configuration repeats itself with the pseudo action.
pub fn ad_fire(ad: &ActivityDiagram, c: &AdConfig) -> Result<Vec<(Option<usize>, AdConfig)>, ExecError> {
    if c.terminated {
        let mut same = c.clone();
        same.last_action = NOP.to_string();
        return Ok(vec![(None, same)]);
    }
    let structural = |e: crate::model::StructureError| ExecError::Unsupported(e.to_string());
    let lookup = |name: &str| c.valuation.get(name).cloned();
    let mut out = Vec::new();
    for t in ad.step_edges() {
        let (needed, freed): (Vec<Place>, Vec<Place>) = match ad.effective_source(t).map_err(structural)? {
            EffectiveSource::Node(n) => {
                let guard = &ad.transitions[t].guard;
                if !c.at(n) || !eval_bool(guard, &lookup).map_err(|e| ExecError::Eval(e.to_string()))? {
                    continue;
                }
                (vec![Place::At(n)], vec![Place::At(n)])
            }
            EffectiveSource::ForkBranch { fork, edge } => {
                let mut freed = vec![Place::ForkSlot(edge)];
                for e in ad.incoming(fork) {
                    freed.push(Place::At(ad.src_index(e).map_err(structural)?));
                }
                (vec![Place::ForkSlot(edge)], freed)
            }
            EffectiveSource::Join(j) => {
                let mut needed = Vec::new();
                let mut freed = Vec::new();
                for e in ad.incoming(j) {
                    needed.push(Place::JoinSlot(e));
                    freed.push(Place::JoinSlot(e));
                    freed.push(Place::At(ad.src_index(e).map_err(structural)?));
                }
                (needed, freed)
            }
        };
        if !needed.iter().all(|p| c.occupied.contains(p)) {
            continue;
        }
        let tgt = ad.effective_target(t).map_err(structural)?;
        let node = &ad.nodes[tgt];

        // simultaneous assignments against the pre-valuation
        let mut valuation = c.valuation.clone();
        let mut blocked = false;
        for a in &node.assignments {
            let v = eval(&a.value, &lookup).map_err(|e| ExecError::Eval(e.to_string()))?;
            let in_domain = ad.var(&a.target).is_some_and(|d| d.domain.contains(&v));
            if !in_domain {
                blocked = true;
                break;
            }
            valuation.insert(a.target.clone(), v);
        }
        if blocked {
            continue;
        }

        let mut occupied = c.occupied.clone();
        for p in &freed {
            occupied.remove(p);
        }
        occupied.extend(arrival(ad, tgt));
        let last_action = node.action_name.as_deref().map_or_else(|| NOP.to_string(), sanitize_action_name);
        out.push((Some(t), AdConfig { occupied, valuation, last_action, terminated: node.kind == NodeKind::Final }));
    }
    Ok(out)
}

pub fn ad_step(ad: &ActivityDiagram, c: &AdConfig) -> Result<Vec<AdConfig>, ExecError> {
    Ok(ad_fire(ad, c)?.into_iter().map(|(_, next)| next).collect())
}

/// Number of concurrent threads of control: tokens on nodes that are not
/// directly followed by a fork or join, plus pending fork branches and
/// arrived join inputs. A node in front of a fork or join hands its token
/// over to the slots on arrival.
pub fn thread_count(ad: &ActivityDiagram, c: &AdConfig) -> usize {
    c.occupied
        .iter()
        .filter(|p| match p {
            Place::At(n) => ad.hidden_successor(*n).is_none(),
            Place::ForkSlot(_) | Place::JoinSlot(_) => true,
        })
        .count()
}

/// Change of [`thread_count`] when `edge` fires: forks add `branches - 1`
/// threads, joins remove `inputs - 1`.
pub fn thread_delta(ad: &ActivityDiagram, edge: usize) -> Result<isize, ExecError> {
    let structural = |e: crate::model::StructureError| ExecError::Unsupported(e.to_string());
    let consumed = match ad.effective_source(edge).map_err(structural)? {
        EffectiveSource::Node(_) | EffectiveSource::ForkBranch { .. } => 1,
        EffectiveSource::Join(j) => ad.incoming(j).len() as isize,
    };
    let tgt = ad.effective_target(edge).map_err(structural)?;
    let produced = match ad.hidden_successor(tgt) {
        Some((_, next)) if ad.nodes[next].kind == NodeKind::Fork => ad.outgoing(next).len() as isize,
        _ => 1,
    };
    Ok(produced - consumed)
}

/// The diagram as a labelled system for trace enumeration.
pub struct AdSystem<'a> {
    pub ad: &'a ActivityDiagram,
}

impl LabelledSystem for AdSystem<'_> {
    type State = AdConfig;

    fn initial_states(&self) -> Result<Vec<AdConfig>, ExecError> {
        ad_initial_configs(self.ad)
    }

    fn observe(&self, c: &AdConfig) -> Vec<(String, Value)> {
        c.valuation.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    fn steps(&self, c: &AdConfig) -> Result<Vec<(String, AdConfig)>, ExecError> {
        Ok(ad_step(self.ad, c)?.into_iter().map(|n| (n.last_action.clone(), n)).collect())
    }
}

pub fn ad_action_traces(
    ad: &ActivityDiagram,
    depth: usize,
    limits: Limits,
) -> Result<BTreeSet<ActionTrace>, ExecError> {
    enumerate_traces(&AdSystem { ad }, depth, limits)
}
