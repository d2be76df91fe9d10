//! The constraint and action language: AST, evaluator, printer.

pub mod ast;
mod builtins;
mod eval;
pub mod format;
pub mod print;
mod quote;

pub use quote::lift_value;
pub(crate) use quote::map_children;

use crate::value::{ObjId, Value};

/// Evaluation context beyond the environment: the receiver and the package
/// used for name lookup.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub self_val: Value,
    pub ns: Option<ObjId>,
}

impl Ctx {
    pub fn new(self_val: Value, ns: Option<ObjId>) -> Ctx {
        Ctx { self_val, ns }
    }

    pub fn top() -> Ctx {
        Ctx { self_val: Value::Null, ns: None }
    }
}
