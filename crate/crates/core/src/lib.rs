//! Compiler from a textual activity-diagram language to SMV modules, with
//! two executable semantics for cross-checking the translation.

pub mod conformance;
pub mod expr;
pub mod fsm;
pub mod interp;
pub mod model;
pub mod smv;
pub mod text;
pub mod trace;
pub mod translate;
pub mod validate;
