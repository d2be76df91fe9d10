use std::collections::HashSet;
use std::rc::Rc;

use super::{AttributeDesc, ClassDesc, Meta, OperationDesc, Registry, TypeRef};
use crate::error::{Error, Result};
use crate::value::{ObjId, Value};
use crate::xocl::ast::{Expr, Param};

/// A rename request for [`Registry::replace_named`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sub {
    pub from: String,
    pub to: String,
}

impl Sub {
    pub fn new(from: &str, to: &str) -> Sub {
        Sub { from: from.into(), to: to.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    Boolean,
    Integer,
    Null,
    Seq,
    Set,
    String,
    Table,
    Object,
    Default,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkStats {
    /// Distinct objects visited.
    pub visited: usize,
    /// Encounters of an already visited object.
    pub references: usize,
    /// Values dispatched to the visitor.
    pub calls: usize,
}

impl Registry {
    fn element_name(&self, v: &Value) -> Option<String> {
        let id = v.as_obj()?;
        match self.get_slot(id, "name") {
            Ok(Value::Str(s)) => Some(s.to_string()),
            _ => None,
        }
    }

    fn mergeable(&self, a: &Value, b: &Value) -> bool {
        match (a, b) {
            (Value::Obj(x), Value::Obj(y)) => {
                self.cell(*x).of == self.cell(*y).of
                    && self.element_name(a).is_some()
                    && self.element_name(a) == self.element_name(b)
            }
            _ => false,
        }
    }

    fn merge_elements(&mut self, a: &Value, b: &Value) -> Value {
        let (Value::Obj(x), Value::Obj(y)) = (a, b) else { return a.clone() };
        if let (Some(p), Some(q)) = (self.package(*x), self.package(*y)) {
            let _ = (p, q);
            return Value::Obj(self.merge_packages(*x, *y));
        }
        let (Some(ca), Some(cb)) = (self.class(*x).cloned(), self.class(*y).cloned()) else {
            return a.clone();
        };
        let mut d: ClassDesc = ca.clone();
        for at in cb.attributes {
            if !d.attributes.iter().any(|z| z.name == at.name) {
                d.attributes.push(at);
            }
        }
        for op in cb.operations {
            if !d.operations.iter().any(|z| z.name == op.name && z.params.len() == op.params.len()) {
                d.operations.push(op);
            }
        }
        for c in cb.constraints {
            if !d.constraints.iter().any(|z| z.name == c.name) {
                d.constraints.push(c);
            }
        }
        for p in cb.parents {
            if !d.parents.contains(&p) {
                d.parents.push(p);
            }
        }
        if d.parents.len() > 1 {
            let object = self.k.object;
            d.parents.retain(|p| *p != object);
        }
        let of = self.cell(*x).of;
        Value::Obj(self.alloc(of, Meta::Class(Box::new(d))))
    }

    /// Merges two packages into a fresh one; on name clashes `p` wins.
    pub fn merge_packages(&mut self, p: ObjId, q: ObjId) -> ObjId {
        let pd = self.package(p).cloned().expect("merge_packages: p is a package");
        let qd = self.package(q).cloned().expect("merge_packages: q is a package");
        let out = self.new_package(&pd.name, None);
        let mut used = vec![false; qd.contents.len()];
        for (name, v) in &pd.contents {
            let partner = qd.contents.values().enumerate().find(|(_, w)| self.mergeable(v, w));
            let merged = match partner {
                Some((i, w)) => {
                    used[i] = true;
                    let w = w.clone();
                    self.merge_elements(v, &w)
                }
                None => v.clone(),
            };
            self.package_mut(out).unwrap().contents.insert(name.clone(), merged);
        }
        for (i, (name, w)) in qd.contents.iter().enumerate() {
            if !used[i] && !self.package(out).unwrap().contents.contains_key(name) {
                self.package_mut(out).unwrap().contents.insert(name.clone(), w.clone());
            }
        }
        let mut imports = pd.imports.clone();
        for i in qd.imports {
            if !imports.contains(&i) {
                imports.push(i);
            }
        }
        self.package_mut(out).unwrap().imports = imports;
        out
    }

    fn direct_contents(&self, ns: ObjId) -> Vec<Value> {
        if let Some(p) = self.package(ns) {
            return p.contents.values().cloned().collect();
        }
        let mut out = Vec::new();
        for v in self.cell(ns).slots.values() {
            match v.members() {
                Some(ms) => out.extend(ms),
                None => out.push(v.clone()),
            }
        }
        out
    }

    /// Renames the named elements directly contained by `ns`.
    pub fn replace_named(&mut self, ns: ObjId, subs: &[Sub]) -> Result<()> {
        for v in self.direct_contents(ns) {
            let Value::Obj(id) = v else { continue };
            if !self.is_kind_of(&v, self.k.named_element) {
                continue;
            }
            let Some(name) = self.element_name(&v) else { continue };
            if let Some(s) = subs.iter().find(|s| s.from == name) {
                self.set_slot(id, "name", Value::str(&s.to))?;
                if let Some(p) = self.package_mut(ns) {
                    if let Some(i) = p.contents.get_index_of(&name) {
                        let (_, val) = p.contents.shift_remove_index(i).unwrap();
                        p.contents.shift_insert(i, s.to.clone(), val);
                    }
                }
            }
        }
        Ok(())
    }

    /// Depth-first walk; every object is dispatched once however often it
    /// is reachable, so cyclic graphs terminate.
    pub fn walk(&self, root: &Value, mut visit: impl FnMut(WalkKind, &Value)) -> WalkStats {
        let mut stats = WalkStats::default();
        let mut seen: HashSet<ObjId> = HashSet::new();
        let mut seen_seqs: HashSet<usize> = HashSet::new();
        let mut stack = vec![root.clone()];
        while let Some(v) = stack.pop() {
            let kind = match &v {
                Value::Bool(_) => WalkKind::Boolean,
                Value::Int(_) => WalkKind::Integer,
                Value::Null => WalkKind::Null,
                Value::Str(_) => WalkKind::String,
                Value::Seq(s) => {
                    if !seen_seqs.insert(Rc::as_ptr(s) as usize) {
                        stats.references += 1;
                        continue;
                    }
                    stack.extend(s.borrow().iter().rev().cloned());
                    WalkKind::Seq
                }
                Value::Set(s) => {
                    stack.extend(s.iter().rev().cloned());
                    WalkKind::Set
                }
                Value::Table(t) => {
                    for (k, x) in t.borrow().iter().rev() {
                        stack.push(x.clone());
                        stack.push(k.clone());
                    }
                    WalkKind::Table
                }
                Value::Obj(id) => {
                    if !seen.insert(*id) {
                        stats.references += 1;
                        continue;
                    }
                    stats.visited += 1;
                    let names = self.feature_names(*id);
                    for n in names.iter().rev() {
                        if let Ok(x) = self.get_slot(*id, n) {
                            stack.push(x);
                        }
                    }
                    WalkKind::Object
                }
                _ => WalkKind::Default,
            };
            stats.calls += 1;
            visit(kind, &v);
        }
        stats
    }

    /// Adds the containership pattern: a `Set(c2)` attribute named after `c2`
    /// and an `add<c2>` operation on `c1`.
    pub fn stamp_contains(&mut self, c1: ObjId, c2: ObjId) -> Result<()> {
        let name = self.class_name(c2);
        if self.all_attributes(c1)?.iter().any(|a| a.name == name) {
            return Err(Error::PatternCollision(name));
        }
        self.add_attribute(
            c1,
            AttributeDesc {
                name: name.clone(),
                ty: TypeRef::Set(Box::new(TypeRef::Class(c2))),
                init: Some(Rc::new(Expr::SetLit(vec![]))),
            },
        )?;
        let slot = Expr::dot(Expr::SelfRef, &name);
        let body = Expr::if_(
            Expr::bin(crate::xocl::ast::BinOp::Eq, slot.clone(), Expr::Null),
            Expr::assign(slot.clone(), Expr::SetLit(vec![Expr::var("x")])),
            Some(Expr::assign(slot.clone(), Expr::arrow(slot, "including", vec![Expr::var("x")]))),
        );
        self.add_operation(
            c1,
            OperationDesc {
                name: format!("add{name}"),
                params: vec![Param { name: "x".into(), ty: None }],
                body: Rc::new(body),
                is_abstract: false,
            },
        );
        Ok(())
    }
}
