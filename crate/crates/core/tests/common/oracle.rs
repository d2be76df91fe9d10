//! A second XAction interpreter, kept deliberately naive: one flat stack of
//! bindings that blocks truncate on exit.

use std::cell::RefCell;
use std::rc::Rc;

use mmk::xaction::ast::{declared_values, Atom, XaExp, XaOp, XaStmt};
use mmk::xaction::Canon;

#[derive(Clone)]
pub enum OV {
    Null,
    I(i64),
    B(bool),
    T(Vec<String>),
    R(Rc<RefCell<Vec<(String, OV)>>>),
}

type Cell = Rc<RefCell<OV>>;

pub struct Oracle {
    stack: Vec<(String, Cell)>,
    fuel: usize,
}

type R<T> = Result<T, String>;

impl Oracle {
    fn get(&self, n: &str) -> R<Cell> {
        self.stack.iter().rev().find(|(k, _)| k == n).map(|(_, c)| c.clone()).ok_or(format!("unbound {n}"))
    }

    fn exp(&self, e: &XaExp) -> R<OV> {
        Ok(match e {
            XaExp::Const(Atom::Int(n)) => OV::I(*n),
            XaExp::Const(Atom::Bool(b)) => OV::B(*b),
            XaExp::Var(n) => self.get(n)?.borrow().clone(),
            XaExp::New(t) => match &*self.get(t)?.borrow() {
                OV::T(ns) => OV::R(Rc::new(RefCell::new(ns.iter().map(|n| (n.clone(), OV::Null)).collect()))),
                _ => return Err("new on a non-type".into()),
            },
            XaExp::FieldRef(r, n) => match self.exp(r)? {
                OV::R(fs) => fs.borrow().iter().find(|(k, _)| k == n).map(|(_, v)| v.clone()).ok_or("no field")?,
                _ => return Err("field of a non-record".into()),
            },
            XaExp::BinExp(op, l, r) => {
                let (l, r) = (self.exp(l)?, self.exp(r)?);
                match (op, l, r) {
                    (XaOp::Add, OV::I(a), OV::I(b)) => OV::I(a.checked_add(b).ok_or("overflow")?),
                    (XaOp::Sub, OV::I(a), OV::I(b)) => OV::I(a.checked_sub(b).ok_or("overflow")?),
                    (XaOp::Mul, OV::I(a), OV::I(b)) => OV::I(a.checked_mul(b).ok_or("overflow")?),
                    (XaOp::Mod, OV::I(a), OV::I(b)) => OV::I(a.checked_rem(b).ok_or("mod by zero")?),
                    (XaOp::Gt, OV::I(a), OV::I(b)) => OV::B(a > b),
                    (XaOp::Lt, OV::I(a), OV::I(b)) => OV::B(a < b),
                    (XaOp::Eq, OV::I(a), OV::I(b)) => OV::B(a == b),
                    (XaOp::Eq, OV::B(a), OV::B(b)) => OV::B(a == b),
                    (XaOp::And, OV::B(a), OV::B(b)) => OV::B(a & b),
                    (XaOp::Or, OV::B(a), OV::B(b)) => OV::B(a | b),
                    _ => return Err("bad operands".into()),
                }
            }
        })
    }

    fn truth(&self, e: &XaExp) -> R<bool> {
        match self.exp(e)? {
            OV::B(b) => Ok(b),
            _ => Err("test not boolean".into()),
        }
    }

    fn stmt(&mut self, s: &XaStmt) -> R<()> {
        match s {
            XaStmt::TypeDeclaration(n, ns) => self.stack.push((n.clone(), Rc::new(RefCell::new(OV::T(ns.clone()))))),
            XaStmt::ValueDeclaration(n, e) => {
                let v = self.exp(e)?;
                self.stack.push((n.clone(), Rc::new(RefCell::new(v))));
            }
            XaStmt::Block(ss) => {
                let mark = self.stack.len();
                for s in ss {
                    self.stmt(s)?;
                }
                self.stack.truncate(mark);
            }
            XaStmt::While(t, b) => {
                while self.truth(t)? {
                    self.fuel = self.fuel.checked_sub(1).ok_or("out of fuel")?;
                    let mark = self.stack.len();
                    self.stmt(b)?;
                    self.stack.truncate(mark);
                }
            }
            XaStmt::If(t, a, b) => {
                if self.truth(t)? {
                    self.stmt(a)?;
                } else if let Some(b) = b {
                    self.stmt(b)?;
                }
            }
            XaStmt::Update(n, e) => {
                let v = self.exp(e)?;
                *self.get(n)?.borrow_mut() = v;
            }
            XaStmt::FieldUpdate(r, n, e) => {
                let OV::R(fs) = self.exp(r)? else { return Err("field of a non-record".into()) };
                let v = self.exp(e)?;
                let mut fs = fs.borrow_mut();
                fs.iter_mut().find(|(k, _)| k == n).ok_or("no field")?.1 = v;
            }
        }
        Ok(())
    }
}

fn canon(v: &OV, seen: &mut Vec<*const RefCell<Vec<(String, OV)>>>) -> Canon {
    match v {
        OV::Null => Canon::Null,
        OV::I(n) => Canon::Int(*n),
        OV::B(b) => Canon::Bool(*b),
        OV::T(ns) => Canon::Type(ns.clone()),
        OV::R(fs) => {
            let p = Rc::as_ptr(fs);
            if let Some(l) = seen.iter().position(|q| *q == p) {
                return Canon::Ref(l);
            }
            seen.push(p);
            let l = seen.len() - 1;
            let fields = fs.borrow().clone();
            Canon::Record(l, fields.iter().map(|(k, v)| (k.clone(), canon(v, seen))).collect())
        }
    }
}

/// Runs the program's top-level statements and reports the final values of
/// its top-level declarations.
pub fn run(p: &XaStmt, fuel: usize) -> R<Vec<(String, Canon)>> {
    let mut o = Oracle { stack: Vec::new(), fuel };
    for s in p.top_level() {
        o.stmt(s)?;
    }
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for n in declared_values(p.top_level()) {
        let v = o.get(&n)?.borrow().clone();
        out.push((n, canon(&v, &mut seen)));
    }
    Ok(out)
}
