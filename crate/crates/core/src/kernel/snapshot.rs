use indexmap::IndexMap;

use super::Registry;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::value::{ObjId, Value};
use crate::xocl::ast::Expr;
use crate::xocl::Ctx;

/// Labelled objects created by one `@Snapshot`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub labels: IndexMap<String, ObjId>,
}

/// One `label = Class[slot = expr, ...]` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotEntry {
    pub label: String,
    pub class: Expr,
    pub fields: Vec<(String, Expr)>,
}

impl Registry {
    /// Builds the objects first, then fills slots, so entries may refer to
    /// any label including their own.
    pub fn load_snapshot(&mut self, name: &str, entries: &[SnapshotEntry], ns: Option<ObjId>) -> Result<Snapshot> {
        let ctx = Ctx::new(Value::Null, ns);
        let mut env = Env::new();
        let mut snap = Snapshot::default();
        for e in entries {
            let class = match self.eval(&e.class, &Env::new(), &ctx)? {
                Value::Obj(c) if self.is_class(c) => c,
                _ => return Err(Error::ty(format!("snapshot entry {} does not name a class", e.label))),
            };
            let id = self.instantiate(class, vec![])?.as_obj().ok_or_else(|| Error::ty("snapshot entry"))?;
            if snap.labels.insert(e.label.clone(), id).is_some() {
                return Err(Error::User(format!("duplicate snapshot label {}", e.label)));
            }
            env = env.bind(&e.label, Value::Obj(id));
        }
        for e in entries {
            let id = snap.labels[&e.label];
            for (slot, x) in &e.fields {
                let v = self.eval(x, &env, &ctx)?;
                self.set_slot(id, slot, v)?;
            }
        }
        self.snapshots.insert(name.to_string(), snap.clone());
        Ok(snap)
    }

    /// Latest snapshot binding for a label.
    pub fn snapshot_label(&self, label: &str) -> Option<ObjId> {
        self.snapshots.values().rev().find_map(|s| s.labels.get(label).copied())
    }
}
