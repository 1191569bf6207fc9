//! Bounded trace equivalence between the generated module and the diagram.

use serde::Serialize;

use crate::fsm::Machine;
use crate::interp::AdSystem;
use crate::model::ActivityDiagram;
use crate::trace::{compare_traces, ActionTrace, ExecError, Limits};
use crate::translate::{translate_with, TranslateError, TranslateOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Equal,
    Differ,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivStats {
    pub common_traces: usize,
    pub terminated_traces: usize,
    pub fsm_states: usize,
    pub ad_configs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivReport {
    pub verdict: Verdict,
    pub depth: usize,
    /// Witnesses of behaviour the module has and the diagram lacks.
    pub only_in_fsm: Vec<ActionTrace>,
    pub only_in_ad: Vec<ActionTrace>,
    pub common: Vec<ActionTrace>,
    pub stats: EquivStats,
}

impl EquivReport {
    pub fn is_equal(&self) -> bool {
        self.verdict == Verdict::Equal
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConformanceError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

pub fn check_equivalence(ad: &ActivityDiagram, depth: usize, limits: Limits) -> Result<EquivReport, ConformanceError> {
    check_equivalence_with(ad, depth, limits, &TranslateOptions::default())
}

/// As [`check_equivalence`], translating with `opts`.
pub fn check_equivalence_with(
    ad: &ActivityDiagram,
    depth: usize,
    limits: Limits,
    opts: &TranslateOptions,
) -> Result<EquivReport, ConformanceError> {
    let machine = Machine::with_limits(&translate_with(ad, opts)?, limits)?;
    let cmp = compare_traces(&machine, &AdSystem { ad }, depth, limits)?;
    let equal = cmp.only_left.is_empty() && cmp.only_right.is_empty();
    Ok(EquivReport {
        verdict: if equal { Verdict::Equal } else { Verdict::Differ },
        depth,
        stats: EquivStats {
            common_traces: cmp.common.len(),
            terminated_traces: cmp.common.iter().filter(|t| t.is_terminated()).count(),
            fsm_states: cmp.left_states,
            ad_configs: cmp.right_states,
        },
        only_in_fsm: cmp.only_left.into_iter().collect(),
        only_in_ad: cmp.only_right.into_iter().collect(),
        common: cmp.common.into_iter().collect(),
    })
}
