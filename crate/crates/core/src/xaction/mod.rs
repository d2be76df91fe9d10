//! XAction: a small imperative language with records, run four ways: an
//! interpreter, two translations into XOCL and a compiler to a stack
//! machine. [`Canon`] puts the results of each in one comparable form.

pub mod ast;
pub mod compile;
pub mod desugar;
pub mod eval;
pub mod parser;
pub mod pprint;

use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::{ObjId, Value};
use crate::xocl::Ctx;
use crate::Env;
use ast::{declared_values, XaStmt};
use eval::{XaEnv, XaValue};

pub use ast::{XaExp, XaOp};
pub use compile::{compile_program, vm_run, Instr};
pub use desugar::{desugar1_program, desugar2_program};
pub use eval::{eval_exp, eval_stmt};
pub use parser::parse_program;
pub use pprint::stmt_to_string;

pub const VALUES: &str = include_str!("../../models/xaction.xmf");

/// A value with sharing made explicit. Records are numbered in depth-first
/// order of first visit; later visits become `Ref`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Canon {
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
    Type(Vec<String>),
    Record(usize, Vec<(String, Canon)>),
    Ref(usize),
}

impl fmt::Display for Canon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Canon::Null => write!(f, "null"),
            Canon::Bool(b) => write!(f, "{b}"),
            Canon::Int(n) => write!(f, "{n}"),
            Canon::Str(s) => write!(f, "{s:?}"),
            Canon::Type(ns) => write!(f, "type{{{}}}", ns.join(",")),
            Canon::Record(l, fs) => {
                write!(f, "#{l}{{")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{n} = {v}")?;
                }
                write!(f, "}}")
            }
            Canon::Ref(l) => write!(f, "#{l}"),
        }
    }
}

/// Final values of a program's top-level declarations, in declaration order.
pub type Observation = Vec<(String, Canon)>;

pub fn observation_text(obs: &Observation) -> String {
    obs.iter().map(|(n, v)| format!("{n} = {v}\n")).collect()
}

/// Assigns record labels by identity.
#[derive(Default)]
struct Labels(Vec<usize>);

impl Labels {
    /// `Err(label)` when already seen, otherwise the fresh label.
    fn visit(&mut self, id: usize) -> std::result::Result<usize, usize> {
        match self.0.iter().position(|x| *x == id) {
            Some(l) => Err(l),
            None => {
                self.0.push(id);
                Ok(self.0.len() - 1)
            }
        }
    }
}

fn canon_xa(v: &XaValue, labels: &mut Labels) -> Canon {
    match v {
        XaValue::Null => Canon::Null,
        XaValue::Bool(b) => Canon::Bool(*b),
        XaValue::Int(n) => Canon::Int(*n),
        XaValue::Str(s) => Canon::Str(s.to_string()),
        XaValue::Type(ns) => Canon::Type(ns.to_vec()),
        XaValue::Record(r) => match labels.visit(Rc::as_ptr(r) as usize) {
            Err(l) => Canon::Ref(l),
            Ok(l) => {
                let fields = r.fields.borrow().clone();
                let fs = r.ty.iter().zip(fields.iter()).map(|(n, v)| (n.clone(), canon_xa(v, labels))).collect();
                Canon::Record(l, fs)
            }
        },
        XaValue::AList(a) => match labels.visit(Rc::as_ptr(a) as *const u8 as usize) {
            Err(l) => Canon::Ref(l),
            Ok(l) => {
                let pairs = a.borrow().clone();
                Canon::Record(l, pairs.iter().map(|(n, v)| (n.clone(), canon_xa(v, labels))).collect())
            }
        },
    }
}

/// Canonical forms of interpreter or machine values, sharing labels.
pub fn canonical_xa(named: &[(String, XaValue)]) -> Observation {
    let mut labels = Labels::default();
    named.iter().map(|(n, v)| (n.clone(), canon_xa(v, &mut labels))).collect()
}

fn strings(reg: &Registry, v: &Value) -> Result<Vec<String>> {
    let ms = v.members().ok_or_else(|| Error::ty("expected a sequence of names"))?;
    ms.iter()
        .map(|m| match m {
            Value::Str(s) => Ok(s.to_string()),
            m => Err(Error::ty(format!("field name {}", reg.display(m)))),
        })
        .collect()
}

struct ValueClasses {
    int: ObjId,
    bool: ObjId,
    ty: ObjId,
    record: ObjId,
}

fn canon_xocl(reg: &Registry, cs: &ValueClasses, v: &Value, labels: &mut Labels) -> Result<Canon> {
    Ok(match v {
        Value::Null => Canon::Null,
        Value::Bool(b) => Canon::Bool(*b),
        Value::Int(n) => Canon::Int(*n),
        Value::Str(s) => Canon::Str(s.to_string()),
        Value::Obj(o) => {
            let of = reg.cell(*o).of;
            if of == cs.int || of == cs.bool {
                canon_xocl(reg, cs, &reg.get_slot(*o, "value")?, labels)?
            } else if of == cs.ty {
                Canon::Type(strings(reg, &reg.get_slot(*o, "names")?)?)
            } else if of == cs.record {
                match labels.visit(usize::MAX - o.0) {
                    Err(l) => Canon::Ref(l),
                    Ok(l) => {
                        let Value::Obj(t) = reg.get_slot(*o, "type")? else {
                            return Err(Error::ty("record without type"));
                        };
                        let names = strings(reg, &reg.get_slot(t, "names")?)?;
                        let fields = reg.get_slot(*o, "fields")?.members().unwrap_or_default();
                        let mut fs = Vec::new();
                        for (n, f) in names.into_iter().zip(fields.iter()) {
                            fs.push((n, canon_xocl(reg, cs, f, labels)?));
                        }
                        Canon::Record(l, fs)
                    }
                }
            } else {
                return Err(Error::ty(format!("not an XAction value: {}", reg.display(v))));
            }
        }
        Value::Seq(s) => match labels.visit(Rc::as_ptr(s) as *const u8 as usize) {
            Err(l) => Canon::Ref(l),
            Ok(l) => {
                let pairs = s.borrow().clone();
                let mut fs = Vec::new();
                for p in pairs {
                    match p.members().as_deref() {
                        Some([Value::Str(k), x]) => fs.push((k.to_string(), canon_xocl(reg, cs, x, labels)?)),
                        _ => return Err(Error::ty("a-list entry is not a pair")),
                    }
                }
                Canon::Record(l, fs)
            }
        },
        v => return Err(Error::ty(format!("not an XAction value: {}", reg.display(v)))),
    })
}

impl Registry {
    /// Loads the `XAction::Values` package unless already present.
    pub fn load_xaction_values(&mut self) -> Result<()> {
        if self.package(self.root).map(|p| p.contents.contains_key("XAction")).unwrap_or(false) {
            return Ok(());
        }
        self.load_str(VALUES)?;
        Ok(())
    }

    /// Canonical form of the `Seq{Seq{name, value}, ...}` produced by a
    /// translated program.
    pub fn canonical_xocl(&self, obs: &Value) -> Result<Observation> {
        let cs = ValueClasses {
            int: self.class_by_path("XAction::Values::Int")?,
            bool: self.class_by_path("XAction::Values::Bool")?,
            ty: self.class_by_path("XAction::Values::Type")?,
            record: self.class_by_path("XAction::Values::Record")?,
        };
        let mut labels = Labels::default();
        let mut out = Vec::new();
        for p in obs.members().ok_or_else(|| Error::ty("observation is not a sequence"))? {
            match p.members().as_deref() {
                Some([Value::Str(n), v]) => out.push((n.to_string(), canon_xocl(self, &cs, v, &mut labels)?)),
                _ => return Err(Error::ty("observation entry is not a pair")),
            }
        }
        Ok(out)
    }

    /// Evaluates translated XAction code and canonicalizes its observation.
    pub fn run_translated(&mut self, code: &crate::xocl::ast::Expr) -> Result<Observation> {
        self.load_xaction_values()?;
        let v = self.eval(code, &Env::new(), &Ctx::top())?;
        self.canonical_xocl(&v)
    }
}

/// The four ways of running a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    Eval,
    Desugar1,
    Desugar2,
    Compile,
}

impl Semantics {
    pub const ALL: [Semantics; 4] = [Semantics::Eval, Semantics::Desugar1, Semantics::Desugar2, Semantics::Compile];
}

/// Runs the top-level statements of `p` without discarding their
/// declarations and observes the final values.
pub fn observe(p: &XaStmt, how: Semantics, max_steps: usize) -> Result<Observation> {
    let top = p.top_level();
    let names = declared_values(top);
    match how {
        Semantics::Eval => {
            let env = eval::eval_stmts(top, &XaEnv::new(), max_steps)?;
            let named: Vec<_> = names.iter().map(|n| (n.clone(), env.lookup(n).unwrap_or(XaValue::Null))).collect();
            Ok(canonical_xa(&named))
        }
        Semantics::Desugar1 | Semantics::Desugar2 => {
            let code = if how == Semantics::Desugar1 { desugar1_program(p) } else { desugar2_program(p)? };
            let mut reg = Registry::bootstrap();
            reg.max_steps = max_steps;
            reg.run_translated(&code)
        }
        Semantics::Compile => {
            let c = compile_program(p)?;
            let r = vm_run(&c.code, max_steps)?;
            let named: Vec<_> = names
                .iter()
                .map(|n| {
                    let v = c.slot(n).and_then(|i| r.locals.get(i).cloned()).unwrap_or(XaValue::Null);
                    (n.clone(), v)
                })
                .collect();
            Ok(canonical_xa(&named))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = "begin
  type Pair is head, tail end
  value p is new Pair end
  value q is p end
  p.head := 4;
  p.tail := q;
end";

    #[test]
    fn sharing_is_labelled() {
        let p = parse_program(PAIR).unwrap();
        for how in Semantics::ALL {
            let obs = observe(&p, how, 10_000).unwrap();
            assert_eq!(observation_text(&obs), "p = #0{head = 4, tail = #0}\nq = #0\n", "{how:?}");
        }
    }

    #[test]
    fn type_values_survive_run_time_typing() {
        let p = parse_program("begin type T is a, b end value t is T end end").unwrap();
        let want = vec![("t".to_string(), Canon::Type(vec!["a".into(), "b".into()]))];
        assert_eq!(observe(&p, Semantics::Eval, 100).unwrap(), want);
        assert_eq!(observe(&p, Semantics::Desugar1, 100).unwrap(), want);
        assert!(observe(&p, Semantics::Desugar2, 100).is_err());
        assert!(observe(&p, Semantics::Compile, 100).is_err());
    }
}
