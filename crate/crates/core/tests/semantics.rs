mod common;

use std::collections::BTreeSet;

use adsmv_core::conformance::{check_equivalence, check_equivalence_with};
use adsmv_core::fsm::{InvariantKind, Machine, PathInvariants, UniqueTaken};
use adsmv_core::interp::{ad_action_traces, ad_fire, ad_initial_configs, thread_count, thread_delta, AdConfig};
use adsmv_core::model::{ActivityDiagram, Value, VarKind};
use adsmv_core::trace::{ActionTrace, Limits, TraceEnd};
use adsmv_core::translate::{canonical_names, translate, translate_with, TransRule, TranslateOptions, NOP};
use adsmv_core::validate::validate;

fn machine(ad: &ActivityDiagram) -> Machine {
    Machine::new(&translate(ad).unwrap()).unwrap()
}

fn input_key(ad: &ActivityDiagram, lookup: impl Fn(&str) -> Value) -> Vec<(String, Value)> {
    let mut key: Vec<(String, Value)> = ad
        .vars
        .iter()
        .filter(|v| v.kind == VarKind::Input && v.domain.size() > 1)
        .map(|v| (v.name.clone(), lookup(&v.name)))
        .collect();
    key.sort();
    key
}

/// Walks every individual run up to `depth` steps, without merging runs
/// that share a prefix.
fn all_runs<S: Clone>(
    init: Vec<S>,
    key: impl Fn(&S) -> Vec<(String, Value)>,
    step: impl Fn(&S) -> Vec<(String, S)>,
    depth: usize,
) -> BTreeSet<ActionTrace> {
    fn walk<S: Clone>(
        s: &S,
        inputs: &[(String, Value)],
        prefix: &mut Vec<String>,
        step: &dyn Fn(&S) -> Vec<(String, S)>,
        depth: usize,
        out: &mut BTreeSet<ActionTrace>,
    ) {
        let mut end = |end| {
            out.insert(ActionTrace { inputs: inputs.to_vec(), actions: prefix.clone(), end });
        };
        if prefix.len() == depth {
            return end(TraceEnd::Cut);
        }
        let succ = step(s);
        if succ.is_empty() {
            end(TraceEnd::Deadlock);
        }
        for (label, t) in succ {
            if label == NOP {
                out.insert(ActionTrace { inputs: inputs.to_vec(), actions: prefix.clone(), end: TraceEnd::Terminated });
            } else {
                prefix.push(label);
                walk(&t, inputs, prefix, step, depth, out);
                prefix.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    for s in &init {
        walk(s, &key(s), &mut Vec::new(), &step, depth, &mut out);
    }
    out
}

fn ad_runs(ad: &ActivityDiagram, depth: usize) -> BTreeSet<ActionTrace> {
    all_runs(
        ad_initial_configs(ad).unwrap(),
        |c: &AdConfig| input_key(ad, |n| c.valuation[n].clone()),
        |c| ad_fire(ad, c).unwrap().into_iter().map(|(_, n)| (n.last_action.clone(), n)).collect(),
        depth,
    )
}

fn fsm_runs(ad: &ActivityDiagram, m: &Machine, depth: usize) -> BTreeSet<ActionTrace> {
    all_runs(
        m.initial_states().unwrap(),
        |s| input_key(ad, |n| m.value(s, n).unwrap()),
        |s| m.successors_exhaustive(s).unwrap().into_iter().map(|t| (m.action(&t).unwrap(), t)).collect(),
        depth,
    )
}

/// Diagrams small enough for the exhaustive successor oracle. Both
/// fixtures must be among them.
fn oracle_sized() -> Vec<(String, ActivityDiagram, Machine)> {
    let out: Vec<_> = common::corpus()
        .into_iter()
        .map(|(name, ad)| {
            let m = machine(&ad);
            (name, ad, m)
        })
        .filter(|(_, _, m)| m.successors_exhaustive(&m.initial_states().unwrap()[0]).is_ok())
        .collect();
    for name in ["controlledLoop", "hireEmployeeSimplified"] {
        assert!(out.iter().any(|(n, _, _)| n == name), "{name} too large for the oracle");
    }
    out
}

fn terminated(traces: &BTreeSet<ActionTrace>) -> Vec<Vec<String>> {
    traces.iter().filter(|t| t.is_terminated()).map(|t| t.actions.clone()).collect()
}

fn names(actions: &[&str]) -> Vec<String> {
    actions.iter().map(|s| s.to_string()).collect()
}

#[test]
fn controlled_loop_has_one_long_and_three_short_runs() {
    let ad = common::load("controlledLoop");
    let report = check_equivalence(&ad, 12, Limits::default()).unwrap();
    assert!(report.is_equal(), "{report:?}");
    assert_eq!(report.stats.terminated_traces, 4);

    let round = ["define_work", "work"];
    let run = |rounds: usize| {
        let mut r = vec!["receive_project"];
        for _ in 0..rounds {
            r.extend(round);
        }
        r.push("final_report");
        names(&r)
    };
    let by_project = |p: &str| -> BTreeSet<Vec<String>> {
        report
            .common
            .iter()
            .filter(|t| t.is_terminated() && t.inputs == vec![("project".to_string(), Value::sym(p))])
            .map(|t| t.actions.clone())
            .collect()
    };
    assert_eq!(by_project("long"), BTreeSet::from([run(3)]));
    assert_eq!(by_project("short"), BTreeSet::from([run(1), run(2), run(3)]));
}

#[test]
fn hire_employee_has_two_interleavings() {
    let ad = common::load("hireEmployeeSimplified");
    let report = check_equivalence(&ad, 12, Limits::default()).unwrap();
    assert!(report.is_equal(), "{report:?}");
    let runs: BTreeSet<Vec<String>> = terminated(&report.common.iter().cloned().collect()).into_iter().collect();
    assert_eq!(
        runs,
        BTreeSet::from([
            names(&["register", "assign_to_project", "add_to_website", "authorize_payment"]),
            names(&["register", "add_to_website", "assign_to_project", "authorize_payment"]),
        ])
    );
}

#[test]
fn initial_states_per_fixture() {
    assert_eq!(machine(&common::load("controlledLoop")).initial_states().unwrap().len(), 2);
    assert_eq!(machine(&common::load("hireEmployeeSimplified")).initial_states().unwrap().len(), 1);
}

#[test]
fn corpus_is_valid_and_equivalent() {
    for (name, ad) in common::corpus() {
        assert!(validate(&ad).is_empty(), "{name}: {:?}", validate(&ad));
        let report = check_equivalence(&ad, 12, Limits::default()).unwrap();
        assert!(report.is_equal(), "{name}: fsm {:?} ad {:?}", report.only_in_fsm, report.only_in_ad);
    }
}

#[test]
fn enumeration_agrees_with_individual_runs() {
    for (name, ad) in common::corpus() {
        for depth in [1, 5, 9] {
            assert_eq!(ad_action_traces(&ad, depth, Limits::default()).unwrap(), ad_runs(&ad, depth), "{name} {depth}");
        }
    }
    for (name, ad, m) in oracle_sized() {
        for depth in [1, 5, 9] {
            assert_eq!(m.action_traces(depth).unwrap(), fsm_runs(&ad, &m, depth), "{name} {depth}");
        }
    }
}

#[test]
fn shorter_bounds_see_truncated_traces() {
    for (name, ad) in common::corpus() {
        let deep = ad_action_traces(&ad, 10, Limits::default()).unwrap();
        for depth in [0, 1, 3, 6] {
            let cut: BTreeSet<ActionTrace> = deep.iter().map(|t| t.truncate(depth)).collect();
            assert_eq!(cut, ad_action_traces(&ad, depth, Limits::default()).unwrap(), "{name} at {depth}");
        }
    }
}

#[test]
fn pruned_search_matches_exhaustive_successors() {
    for (name, _, m) in oracle_sized() {
        let mut seen = BTreeSet::new();
        let mut frontier = m.initial_states().unwrap();
        for _ in 0..15 {
            let mut next = Vec::new();
            for s in frontier {
                if !seen.insert(s.clone()) {
                    continue;
                }
                let mut fast = m.successor_states(&s).unwrap();
                let mut slow = m.successors_exhaustive(&s).unwrap();
                fast.sort();
                slow.sort();
                assert_eq!(fast, slow, "{name}");
                next.extend(fast);
            }
            frontier = next;
        }
    }
}

#[test]
fn exactly_one_edge_is_taken_per_step() {
    for (name, ad) in common::corpus() {
        match machine(&ad).check_unique_taken(15).unwrap() {
            UniqueTaken::Pass { steps } => assert!(steps > 0, "{name}"),
            UniqueTaken::Counterexample(w) => panic!("{name}: {:?}", w.taken),
        }
    }
}

#[test]
fn inputs_stay_fixed_and_nop_absorbs() {
    for (name, ad) in common::corpus() {
        let m = machine(&ad);
        let inv = PathInvariants::for_diagram(&ad, &canonical_names(&ad).unwrap());
        let report = m.check_path_invariants(15, &inv).unwrap();
        for kind in [InvariantKind::InputConstancy, InvariantKind::NopAbsorption, InvariantKind::LocalFrame] {
            assert!(report.holds(kind), "{name}: {kind:?} {:?}", report.violations);
        }
    }
}

#[test]
fn dropping_the_input_frame_lets_inputs_drift() {
    let ad = common::load("controlledLoop");
    let m = Machine::new(&translate_with(&ad, &TranslateOptions::omitting(TransRule::InputFrame)).unwrap()).unwrap();
    let inv = PathInvariants::for_diagram(&ad, &canonical_names(&ad).unwrap());
    assert!(!m.check_path_invariants(15, &inv).unwrap().holds(InvariantKind::InputConstancy));
}

#[test]
fn deadlocks_are_found_only_where_expected() {
    for name in ["controlledLoop", "hireEmployeeSimplified"] {
        assert!(machine(&common::load(name)).find_deadlocks(15).unwrap().is_empty(), "{name}");
    }
    let ad = common::load("guardIncomplete");
    let found = machine(&ad).find_deadlocks(15).unwrap();
    assert_eq!(found.len(), 1);
    let m = machine(&ad);
    assert_eq!(m.value(&found[0].state, "project"), Some(Value::sym("long")));
    assert_eq!(m.value(&found[0].state, "iterations"), Some(Value::Int(3)));
    assert!(!machine(&common::load("overflow")).find_deadlocks(15).unwrap().is_empty());
}

#[test]
fn each_rule_is_needed_on_some_fixture() {
    let fixtures = [common::load("controlledLoop"), common::load("hireEmployeeSimplified")];
    for rule in TransRule::ALL {
        let opts = TranslateOptions::omitting(rule);
        let broken = fixtures.iter().any(|ad| {
            let equal = check_equivalence_with(ad, 12, Limits::default(), &opts).map(|r| r.is_equal());
            let unique = Machine::new(&translate_with(ad, &opts).unwrap())
                .and_then(|m| m.check_unique_taken(15))
                .map(|u| matches!(u, UniqueTaken::Pass { .. }));
            equal != Ok(true) || unique != Ok(true)
        });
        assert!(broken, "omitting {rule:?} goes unnoticed");
    }
}

#[test]
fn forks_and_joins_change_the_thread_count_by_their_width() {
    for (name, ad) in common::corpus() {
        let mut frontier = ad_initial_configs(&ad).unwrap();
        let mut seen = BTreeSet::new();
        while let Some(c) = frontier.pop() {
            if !seen.insert(c.clone()) {
                continue;
            }
            for (edge, next) in ad_fire(&ad, &c).unwrap() {
                if let Some(edge) = edge {
                    let delta = thread_count(&ad, &next) as isize - thread_count(&ad, &c) as isize;
                    assert_eq!(delta, thread_delta(&ad, edge).unwrap(), "{name} edge {edge}");
                }
                frontier.push(next);
            }
        }
    }
}

#[test]
fn resource_bound_is_reported() {
    let ad = common::load("controlledLoop");
    let err = check_equivalence(&ad, 12, Limits { max_states: 5 }).unwrap_err();
    assert!(err.to_string().contains("exceeded"), "{err}");
}
