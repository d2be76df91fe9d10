//! Direct interpreter over the XAction AST.

use std::cell::{Cell, RefCell};
use std::fmt;
use std::rc::Rc;

use super::ast::{Atom, XaExp, XaOp, XaStmt};
use crate::error::{Error, Result};

pub type AListRef = Rc<RefCell<Vec<(String, XaValue)>>>;

#[derive(Debug)]
pub struct RecordV {
    pub ty: Rc<Vec<String>>,
    pub fields: RefCell<Vec<XaValue>>,
}

/// Run-time values. `Str` and `AList` only occur on the VM.
#[derive(Clone)]
pub enum XaValue {
    Null,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    Type(Rc<Vec<String>>),
    Record(Rc<RecordV>),
    AList(AListRef),
}

impl fmt::Debug for XaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XaValue::Null => write!(f, "null"),
            XaValue::Bool(b) => write!(f, "{b}"),
            XaValue::Int(n) => write!(f, "{n}"),
            XaValue::Str(s) => write!(f, "{s:?}"),
            XaValue::Type(ns) => write!(f, "type{{{}}}", ns.join(",")),
            XaValue::Record(r) => write!(f, "record{{{}}}", r.ty.join(",")),
            XaValue::AList(l) => write!(f, "alist({})", l.borrow().len()),
        }
    }
}

impl XaValue {
    pub fn kind(&self) -> &'static str {
        match self {
            XaValue::Null => "null",
            XaValue::Bool(_) => "boolean",
            XaValue::Int(_) => "integer",
            XaValue::Str(_) => "string",
            XaValue::Type(_) => "type",
            XaValue::Record(_) => "record",
            XaValue::AList(_) => "a-list",
        }
    }

    pub fn new_record(ty: Rc<Vec<String>>) -> XaValue {
        let fields = RefCell::new(vec![XaValue::Null; ty.len()]);
        XaValue::Record(Rc::new(RecordV { ty, fields }))
    }

    /// Field read on a record or a-list.
    pub fn lookup(&self, name: &str) -> Result<XaValue> {
        match self {
            XaValue::Record(r) => {
                let i = r.ty.iter().position(|n| n == name).ok_or_else(|| no_field(name))?;
                Ok(r.fields.borrow()[i].clone())
            }
            XaValue::AList(l) => {
                l.borrow().iter().find(|(k, _)| k == name).map(|(_, v)| v.clone()).ok_or_else(|| no_field(name))
            }
            v => Err(Error::ty(format!("field {name} of a {}", v.kind()))),
        }
    }

    /// In-place field write on a record or a-list.
    pub fn update(&self, name: &str, v: XaValue) -> Result<()> {
        match self {
            XaValue::Record(r) => {
                let i = r.ty.iter().position(|n| n == name).ok_or_else(|| no_field(name))?;
                r.fields.borrow_mut()[i] = v;
                Ok(())
            }
            XaValue::AList(l) => {
                let mut l = l.borrow_mut();
                let e = l.iter_mut().find(|(k, _)| k == name).ok_or_else(|| no_field(name))?;
                e.1 = v;
                Ok(())
            }
            r => Err(Error::ty(format!("field {name} of a {}", r.kind()))),
        }
    }
}

fn no_field(name: &str) -> Error {
    Error::User(format!("no field {name}"))
}

/// Applies a binary operator to two atoms.
pub fn apply_op(op: XaOp, l: &XaValue, r: &XaValue) -> Result<XaValue> {
    use XaValue::{Bool, Int};
    let bad = || Error::ty(format!("{} not defined on {} and {}", op.symbol(), l.kind(), r.kind()));
    Ok(match (op, l, r) {
        (XaOp::And, Bool(a), Bool(b)) => Bool(*a && *b),
        (XaOp::Or, Bool(a), Bool(b)) => Bool(*a || *b),
        (XaOp::Eq, Bool(a), Bool(b)) => Bool(a == b),
        (XaOp::Eq, Int(a), Int(b)) => Bool(a == b),
        (XaOp::Eq, XaValue::Str(a), XaValue::Str(b)) => Bool(a == b),
        (XaOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (XaOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (XaOp::Add, Int(a), Int(b)) => Int(a.checked_add(*b).ok_or(Error::Overflow)?),
        (XaOp::Sub, Int(a), Int(b)) => Int(a.checked_sub(*b).ok_or(Error::Overflow)?),
        (XaOp::Mul, Int(a), Int(b)) => Int(a.checked_mul(*b).ok_or(Error::Overflow)?),
        (XaOp::Mod, Int(_), Int(0)) => return Err(Error::DivZero),
        (XaOp::Mod, Int(a), Int(b)) => Int(a.checked_rem(*b).ok_or(Error::Overflow)?),
        _ => return Err(bad()),
    })
}

struct Frame {
    name: String,
    cell: RefCell<XaValue>,
    next: XaEnv,
}

/// Value environment: a chain of mutable cells.
#[derive(Clone, Default)]
pub struct XaEnv(Option<Rc<Frame>>);

impl fmt::Debug for XaEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        let mut cur = self.0.as_deref();
        while let Some(fr) = cur {
            m.entry(&fr.name, &*fr.cell.borrow());
            cur = fr.next.0.as_deref();
        }
        m.finish()
    }
}

impl XaEnv {
    pub fn new() -> XaEnv {
        XaEnv(None)
    }

    pub fn bind(&self, name: &str, v: XaValue) -> XaEnv {
        XaEnv(Some(Rc::new(Frame { name: name.to_string(), cell: RefCell::new(v), next: self.clone() })))
    }

    fn find(&self, name: &str) -> Option<&Frame> {
        let mut cur = self.0.as_deref();
        while let Some(f) = cur {
            if f.name == name {
                return Some(f);
            }
            cur = f.next.0.as_deref();
        }
        None
    }

    pub fn lookup(&self, name: &str) -> Option<XaValue> {
        self.find(name).map(|f| f.cell.borrow().clone())
    }

    pub fn binds(&self, name: &str) -> bool {
        self.find(name).is_some()
    }

    pub fn update(&self, name: &str, v: XaValue) -> Result<()> {
        let f = self.find(name).ok_or_else(|| Error::UnboundVar(name.to_string()))?;
        *f.cell.borrow_mut() = v;
        Ok(())
    }
}

/// Type environment used by the type-erasing translations.
#[derive(Clone, Default, Debug)]
pub struct XaTypeEnv(Vec<(String, Rc<Vec<String>>)>);

impl XaTypeEnv {
    pub fn new() -> XaTypeEnv {
        XaTypeEnv::default()
    }

    pub fn bind(&self, name: &str, names: &[String]) -> XaTypeEnv {
        let mut v = self.0.clone();
        v.push((name.to_string(), Rc::new(names.to_vec())));
        XaTypeEnv(v)
    }

    pub fn lookup(&self, name: &str) -> Option<Rc<Vec<String>>> {
        self.0.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }
}

/// Loop iterations allowed by `eval_stmt`.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

pub fn eval_exp(e: &XaExp, env: &XaEnv) -> Result<XaValue> {
    match e {
        XaExp::Const(Atom::Int(n)) => Ok(XaValue::Int(*n)),
        XaExp::Const(Atom::Bool(b)) => Ok(XaValue::Bool(*b)),
        XaExp::Var(n) => env.lookup(n).ok_or_else(|| Error::UnboundVar(n.clone())),
        XaExp::BinExp(op, l, r) => {
            let l = eval_exp(l, env)?;
            let r = eval_exp(r, env)?;
            apply_op(*op, &l, &r)
        }
        XaExp::New(t) => match env.lookup(t) {
            Some(XaValue::Type(names)) => Ok(XaValue::new_record(names)),
            Some(v) => Err(Error::ty(format!("new on a {}", v.kind()))),
            None => Err(Error::UnboundVar(t.clone())),
        },
        XaExp::FieldRef(r, n) => eval_exp(r, env)?.lookup(n),
    }
}

fn test_value(e: &XaExp, env: &XaEnv) -> Result<bool> {
    match eval_exp(e, env)? {
        XaValue::Bool(b) => Ok(b),
        v => Err(Error::ty(format!("test is a {}", v.kind()))),
    }
}

pub fn eval_stmt(s: &XaStmt, env: &XaEnv) -> Result<XaEnv> {
    eval_stmt_limited(s, env, DEFAULT_MAX_STEPS)
}

pub fn eval_stmt_limited(s: &XaStmt, env: &XaEnv, max_steps: usize) -> Result<XaEnv> {
    let fuel = Cell::new(max_steps);
    exec(s, env, &fuel)
}

/// Runs `stmts` in sequence, returning the extended environment.
pub fn eval_stmts(stmts: &[XaStmt], env: &XaEnv, max_steps: usize) -> Result<XaEnv> {
    let fuel = Cell::new(max_steps);
    let mut env = env.clone();
    for s in stmts {
        env = exec(s, &env, &fuel)?;
    }
    Ok(env)
}

fn exec(s: &XaStmt, env: &XaEnv, fuel: &Cell<usize>) -> Result<XaEnv> {
    match s {
        XaStmt::Block(ss) => {
            let mut local = env.clone();
            for s in ss {
                local = exec(s, &local, fuel)?;
            }
            Ok(env.clone())
        }
        XaStmt::TypeDeclaration(n, names) => Ok(env.bind(n, XaValue::Type(Rc::new(names.clone())))),
        XaStmt::ValueDeclaration(n, e) => Ok(env.bind(n, eval_exp(e, env)?)),
        XaStmt::While(t, body) => {
            while test_value(t, env)? {
                if fuel.get() == 0 {
                    return Err(Error::Budget);
                }
                fuel.set(fuel.get() - 1);
                exec(body, env, fuel)?;
            }
            Ok(env.clone())
        }
        XaStmt::If(t, a, b) => {
            if test_value(t, env)? {
                exec(a, env, fuel)
            } else if let Some(b) = b {
                exec(b, env, fuel)
            } else {
                Ok(env.clone())
            }
        }
        XaStmt::Update(n, e) => {
            let v = eval_exp(e, env)?;
            env.update(n, v)?;
            Ok(env.clone())
        }
        XaStmt::FieldUpdate(r, n, e) => {
            let r = eval_exp(r, env)?;
            let v = eval_exp(e, env)?;
            r.update(n, v)?;
            Ok(env.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xaction::parser::parse_program;

    fn run(src: &str) -> XaEnv {
        let p = parse_program(src).unwrap();
        eval_stmts(p.top_level(), &XaEnv::new(), 1000).unwrap()
    }

    #[test]
    fn arithmetic() {
        let e = XaExp::bin(XaOp::Add, XaExp::int(2), XaExp::int(3));
        assert!(matches!(eval_exp(&e, &XaEnv::new()).unwrap(), XaValue::Int(5)));
        let e = XaExp::bin(XaOp::Add, XaExp::int(2), XaExp::Const(Atom::Bool(true)));
        assert!(eval_exp(&e, &XaEnv::new()).is_err());
        let e = XaExp::bin(XaOp::Mod, XaExp::int(2), XaExp::int(0));
        assert_eq!(eval_exp(&e, &XaEnv::new()).unwrap_err(), Error::DivZero);
    }

    #[test]
    fn new_and_field_update() {
        let env = run("begin type Pair is head, tail end value pair is new Pair end pair.head := 4; end");
        let p = env.lookup("pair").unwrap();
        assert!(matches!(p.lookup("head").unwrap(), XaValue::Int(4)));
        assert!(matches!(p.lookup("tail").unwrap(), XaValue::Null));
        assert!(p.lookup("nope").is_err());
    }

    #[test]
    fn block_bindings_are_local() {
        let env = run("begin value y is 0 end begin value x is 1 end y := 5; end end");
        assert!(!env.binds("x"));
        assert!(matches!(env.lookup("y"), Some(XaValue::Int(5))));
    }

    #[test]
    fn false_while_is_a_no_op() {
        let env = run("begin value x is 3 end while false do x := 4; end end");
        assert!(matches!(env.lookup("x"), Some(XaValue::Int(3))));
    }

    #[test]
    fn update_unbound_fails() {
        let p = parse_program("x := 1;").unwrap();
        assert_eq!(eval_stmt(&p, &XaEnv::new()).unwrap_err(), Error::UnboundVar("x".into()));
    }

    #[test]
    fn endless_loop_runs_out_of_budget() {
        let p = parse_program("while true do begin end end").unwrap();
        assert_eq!(eval_stmt_limited(&p, &XaEnv::new(), 50).unwrap_err(), Error::Budget);
    }
}
