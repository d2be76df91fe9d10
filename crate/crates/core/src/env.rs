use std::cell::RefCell;
use std::rc::Rc;

use crate::value::Value;

/// Chain of mutable binding cells; extending never touches existing cells.
#[derive(Clone, Default)]
pub struct Env(Option<Rc<Frame>>);

struct Frame {
    name: Rc<str>,
    cell: RefCell<Value>,
    next: Env,
}

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn bind(&self, name: &str, v: Value) -> Env {
        Env(Some(Rc::new(Frame { name: Rc::from(name), cell: RefCell::new(v), next: self.clone() })))
    }

    fn find(&self, name: &str) -> Option<&Frame> {
        let mut cur = self.0.as_deref();
        while let Some(f) = cur {
            if &*f.name == name {
                return Some(f);
            }
            cur = f.next.0.as_deref();
        }
        None
    }

    pub fn lookup(&self, name: &str) -> Option<Value> {
        self.find(name).map(|f| f.cell.borrow().clone())
    }

    pub fn binds(&self, name: &str) -> bool {
        self.find(name).is_some()
    }

    /// Mutates the nearest cell; false when the name is unbound.
    pub fn update(&self, name: &str, v: Value) -> bool {
        match self.find(name) {
            Some(f) => {
                *f.cell.borrow_mut() = v;
                true
            }
            None => false,
        }
    }

    /// Visible bindings, nearest first, shadowed ones omitted.
    pub fn bindings(&self) -> Vec<(String, Value)> {
        let mut out: Vec<(String, Value)> = Vec::new();
        let mut cur = self.0.as_deref();
        while let Some(f) = cur {
            if !out.iter().any(|(n, _)| n == &*f.name) {
                out.push((f.name.to_string(), f.cell.borrow().clone()));
            }
            cur = f.next.0.as_deref();
        }
        out
    }

    pub fn same(&self, other: &Env) -> bool {
        match (&self.0, &other.0) {
            (None, None) => true,
            (Some(a), Some(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }
}
