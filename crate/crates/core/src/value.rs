use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::env::Env;
use crate::xocl::ast::Expr;
use crate::xsync::SyncModel;

/// Heap identity of an object cell (plain objects, classes and packages alike).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjId(pub usize);

pub type SeqRef = Rc<RefCell<Vec<Value>>>;
pub type TableRef = Rc<RefCell<Vec<(Value, Value)>>>;

#[derive(Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    /// Sequences are shared and mutable in place (`setAt`, a-list `update`).
    Seq(SeqRef),
    /// Sets keep insertion order and never hold two equal members.
    Set(Rc<Vec<Value>>),
    Table(TableRef),
    Obj(ObjId),
    Op(Rc<Closure>),
    Expr(Rc<Expr>),
    Sync(Rc<SyncModel>),
}

/// An operation value: parameters, body and the captured evaluation context.
pub struct Closure {
    pub name: RefCell<String>,
    pub params: Vec<String>,
    pub body: Rc<Expr>,
    pub env: Env,
    pub self_val: Value,
    pub ns: Option<ObjId>,
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<Operation {}>", self.name.borrow())
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => write!(f, "null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Seq(s) => f.debug_list().entries(s.borrow().iter()).finish().map(|_| ()),
            Value::Set(s) => {
                write!(f, "Set")?;
                f.debug_set().entries(s.iter()).finish()
            }
            Value::Table(t) => write!(f, "Table({} entries)", t.borrow().len()),
            Value::Obj(id) => write!(f, "#{}", id.0),
            Value::Op(c) => write!(f, "{c:?}"),
            Value::Expr(e) => write!(f, "[| {e:?} |]"),
            Value::Sync(_) => write!(f, "<XSync>"),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Seq(a), Value::Seq(b)) => Rc::ptr_eq(a, b) || *a.borrow() == *b.borrow(),
            (Value::Set(a), Value::Set(b)) => {
                Rc::ptr_eq(a, b) || (a.len() == b.len() && a.iter().all(|x| b.contains(x)))
            }
            (Value::Table(a), Value::Table(b)) => Rc::ptr_eq(a, b),
            (Value::Obj(a), Value::Obj(b)) => a == b,
            (Value::Op(a), Value::Op(b)) => Rc::ptr_eq(a, b),
            (Value::Expr(a), Value::Expr(b)) => a == b,
            (Value::Sync(a), Value::Sync(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(Rc::from(s))
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(Rc::from(s))
    }
}

impl From<ObjId> for Value {
    fn from(id: ObjId) -> Self {
        Value::Obj(id)
    }
}

impl Value {
    pub fn str(s: impl AsRef<str>) -> Value {
        Value::Str(Rc::from(s.as_ref()))
    }

    pub fn seq(items: Vec<Value>) -> Value {
        Value::Seq(Rc::new(RefCell::new(items)))
    }

    /// Builds a set, dropping later duplicates.
    pub fn set(items: impl IntoIterator<Item = Value>) -> Value {
        let mut out: Vec<Value> = Vec::new();
        for v in items {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        Value::Set(Rc::new(out))
    }

    pub fn empty_table() -> Value {
        Value::Table(Rc::new(RefCell::new(Vec::new())))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_obj(&self) -> Option<ObjId> {
        match self {
            Value::Obj(id) => Some(*id),
            _ => None,
        }
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, Value::Seq(_) | Value::Set(_))
    }

    /// Members of a set or sequence in canonical order.
    pub fn members(&self) -> Option<Vec<Value>> {
        match self {
            Value::Seq(s) => Some(s.borrow().clone()),
            Value::Set(s) => Some(s.as_ref().clone()),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Null => "Null",
            Value::Bool(_) => "Boolean",
            Value::Int(_) => "Integer",
            Value::Str(_) => "String",
            Value::Seq(_) => "Seq",
            Value::Set(_) => "Set",
            Value::Table(_) => "Table",
            Value::Obj(_) => "Object",
            Value::Op(_) => "Operation",
            Value::Expr(_) => "Exp",
            Value::Sync(_) => "XSync",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sets_drop_duplicates_and_compare_unordered() {
        let a = Value::set(vec![1.into(), 2.into(), 1.into()]);
        let b = Value::set(vec![2.into(), 1.into()]);
        assert_eq!(a.members().unwrap().len(), 2);
        assert_eq!(a, b);
    }

    #[test]
    fn seqs_compare_structurally_and_tables_by_identity() {
        assert_eq!(Value::seq(vec!["a".into()]), Value::seq(vec!["a".into()]));
        assert_ne!(Value::seq(vec![1.into()]), Value::seq(vec![1.into(), 2.into()]));
        let t = Value::empty_table();
        assert_eq!(t, t.clone());
        assert_ne!(t, Value::empty_table());
    }
}
