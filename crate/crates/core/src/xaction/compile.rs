//! Compilation of XAction to a small stack machine, and the machine.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use super::ast::{Atom, XaExp, XaOp, XaStmt};
use super::eval::{apply_op, XaTypeEnv, XaValue};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    PushTrue,
    PushFalse,
    PushInteger(i64),
    PushStr(String),
    PushNull,
    PushEmptySeq,
    LocalRef(usize),
    SetLocal(String, usize),
    Pop,
    And,
    Or,
    Add,
    Sub,
    Mul,
    Gt,
    Lt,
    Eq,
    Mod,
    StartCall,
    Send(String, usize),
    Noop(String),
    Skip(String),
    SkipFalse(String),
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::PushInteger(n) => write!(f, "PushInteger({n})"),
            Instr::PushStr(s) => write!(f, "PushStr({s:?})"),
            Instr::LocalRef(i) => write!(f, "LocalRef({i})"),
            Instr::SetLocal(n, i) => write!(f, "SetLocal({n:?}, {i})"),
            Instr::Send(n, a) => write!(f, "Send({n:?}, {a})"),
            Instr::Noop(l) => write!(f, "Noop({l:?})"),
            Instr::Skip(l) => write!(f, "Skip({l:?})"),
            Instr::SkipFalse(l) => write!(f, "SkipFalse({l:?})"),
            other => write!(f, "{other:?}()"),
        }
    }
}

fn op_instr(op: XaOp) -> Instr {
    match op {
        XaOp::Add => Instr::Add,
        XaOp::Sub => Instr::Sub,
        XaOp::Mul => Instr::Mul,
        XaOp::Gt => Instr::Gt,
        XaOp::Lt => Instr::Lt,
        XaOp::Eq => Instr::Eq,
        XaOp::Mod => Instr::Mod,
        XaOp::And => Instr::And,
        XaOp::Or => Instr::Or,
    }
}

pub type NextC<'a> = &'a dyn Fn(&XaTypeEnv, &[String]) -> Result<Vec<Instr>>;

/// Hands out distinct jump labels.
#[derive(Default)]
pub struct Compiler {
    labels: Cell<usize>,
}

impl Compiler {
    pub fn new() -> Compiler {
        Compiler::default()
    }

    fn label(&self, base: &str) -> String {
        let n = self.labels.get();
        self.labels.set(n + 1);
        format!("{base}{n}")
    }

    pub fn exp(&self, e: &XaExp, tenv: &XaTypeEnv, venv: &[String]) -> Result<Vec<Instr>> {
        Ok(match e {
            XaExp::Const(Atom::Bool(true)) => vec![Instr::PushTrue],
            XaExp::Const(Atom::Bool(false)) => vec![Instr::PushFalse],
            XaExp::Const(Atom::Int(n)) => vec![Instr::PushInteger(*n)],
            // The most recent declaration wins when a name is shadowed.
            XaExp::Var(n) => match venv.iter().rposition(|x| x == n) {
                Some(i) => vec![Instr::LocalRef(i)],
                None => return Err(Error::UnboundVar(n.clone())),
            },
            XaExp::BinExp(op, l, r) => {
                let mut code = self.exp(l, tenv, venv)?;
                code.extend(self.exp(r, tenv, venv)?);
                code.push(op_instr(*op));
                code
            }
            XaExp::New(t) => {
                let names = tenv.lookup(t).ok_or_else(|| Error::User(format!("Unknown type {t}")))?;
                names.iter().fold(vec![Instr::PushEmptySeq], |recv, f| {
                    let mut code = vec![Instr::StartCall, Instr::PushStr(f.clone()), Instr::PushNull];
                    code.extend(recv);
                    code.push(Instr::Send("bind".into(), 2));
                    code
                })
            }
            XaExp::FieldRef(r, n) => {
                let mut code = vec![Instr::StartCall, Instr::PushStr(n.clone())];
                code.extend(self.exp(r, tenv, venv)?);
                code.push(Instr::Send("lookup".into(), 1));
                code
            }
        })
    }

    pub fn stmt(&self, s: &XaStmt, tenv: &XaTypeEnv, venv: &[String], next: NextC) -> Result<Vec<Instr>> {
        let nothing = |_: &XaTypeEnv, _: &[String]| Ok(vec![]);
        let mut code = Vec::new();
        match s {
            XaStmt::TypeDeclaration(n, names) => return next(&tenv.bind(n, names), venv),
            XaStmt::ValueDeclaration(n, e) => {
                code.extend(self.exp(e, tenv, venv)?);
                code.push(Instr::SetLocal(n.clone(), venv.len()));
                code.push(Instr::Pop);
                let mut inner = venv.to_vec();
                inner.push(n.clone());
                code.extend(next(tenv, &inner)?);
            }
            XaStmt::Block(ss) => {
                code.extend(self.stmts(ss, tenv, venv, &nothing)?);
                code.extend(next(tenv, venv)?);
            }
            XaStmt::While(t, body) => {
                let (start, end) = (self.label("START"), self.label("END"));
                code.push(Instr::Noop(start.clone()));
                code.extend(self.exp(t, tenv, venv)?);
                code.push(Instr::SkipFalse(end.clone()));
                code.extend(self.stmt(body, tenv, venv, &nothing)?);
                code.push(Instr::Skip(start));
                code.push(Instr::Noop(end));
                code.extend(next(tenv, venv)?);
            }
            XaStmt::If(t, a, b) => {
                let (else_l, end) = (self.label("ELSE"), self.label("END"));
                let skip_end = |_: &XaTypeEnv, _: &[String]| Ok(vec![Instr::Skip(end.clone())]);
                code.extend(self.exp(t, tenv, venv)?);
                code.push(Instr::SkipFalse(else_l.clone()));
                code.extend(self.stmt(a, tenv, venv, &skip_end)?);
                code.push(Instr::Noop(else_l));
                if let Some(b) = b {
                    code.extend(self.stmt(b, tenv, venv, &skip_end)?);
                }
                code.push(Instr::Noop(end));
                code.extend(next(tenv, venv)?);
            }
            XaStmt::Update(n, e) => {
                let i = venv.iter().rposition(|x| x == n).ok_or_else(|| Error::UnboundVar(n.clone()))?;
                code.extend(self.exp(e, tenv, venv)?);
                code.push(Instr::SetLocal(n.clone(), i));
                code.push(Instr::Pop);
                code.extend(next(tenv, venv)?);
            }
            XaStmt::FieldUpdate(r, n, e) => {
                code.push(Instr::StartCall);
                code.push(Instr::PushStr(n.clone()));
                code.extend(self.exp(e, tenv, venv)?);
                code.extend(self.exp(r, tenv, venv)?);
                code.push(Instr::Send("update".into(), 2));
                code.push(Instr::Pop);
                code.extend(next(tenv, venv)?);
            }
        }
        Ok(code)
    }

    pub fn stmts(&self, ss: &[XaStmt], tenv: &XaTypeEnv, venv: &[String], next: NextC) -> Result<Vec<Instr>> {
        match ss.split_first() {
            None => next(tenv, venv),
            Some((s, rest)) => self.stmt(s, tenv, venv, &|t: &XaTypeEnv, v: &[String]| self.stmts(rest, t, v, next)),
        }
    }
}

/// Compiled top-level program and the local slot of each name in scope at
/// its end.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub code: Vec<Instr>,
    pub final_locals: Vec<String>,
}

impl CompiledProgram {
    pub fn slot(&self, name: &str) -> Option<usize> {
        self.final_locals.iter().rposition(|x| x == name)
    }
}

pub fn compile_program(p: &XaStmt) -> Result<CompiledProgram> {
    let c = Compiler::new();
    let finals = RefCell::new(Vec::new());
    let code = c.stmts(p.top_level(), &XaTypeEnv::new(), &[], &|_: &XaTypeEnv, v: &[String]| {
        *finals.borrow_mut() = v.to_vec();
        Ok(vec![])
    })?;
    Ok(CompiledProgram { code, final_locals: finals.into_inner() })
}

/// Maps each label to the index of its `Noop`, checking that labels are
/// unique and that every jump has a target.
pub fn assemble(code: &[Instr]) -> Result<HashMap<String, usize>> {
    let mut targets = HashMap::new();
    for (i, ins) in code.iter().enumerate() {
        if let Instr::Noop(l) = ins {
            if targets.insert(l.clone(), i).is_some() {
                return Err(Error::User(format!("duplicate label {l}")));
            }
        }
    }
    for ins in code {
        if let Instr::Skip(l) | Instr::SkipFalse(l) = ins {
            if !targets.contains_key(l) {
                return Err(Error::User(format!("missing label {l}")));
            }
        }
    }
    Ok(targets)
}

#[derive(Debug, Clone)]
pub struct VmResult {
    pub top: XaValue,
    pub locals: Vec<XaValue>,
}

fn pop(stack: &mut Vec<XaValue>) -> Result<XaValue> {
    stack.pop().ok_or(Error::StackUnderflow)
}

fn key(v: &XaValue) -> Result<String> {
    match v {
        XaValue::Str(s) => Ok(s.to_string()),
        v => Err(Error::ty(format!("field name is a {}", v.kind()))),
    }
}

fn send(name: &str, recv: XaValue, args: Vec<XaValue>) -> Result<XaValue> {
    match (name, args.as_slice()) {
        ("lookup" | "ref", [k]) => recv.lookup(&key(k)?),
        ("update" | "set", [k, v]) => {
            recv.update(&key(k)?, v.clone())?;
            Ok(recv)
        }
        ("bind", [k, v]) => {
            let XaValue::AList(l) = &recv else { return Err(Error::ty(format!("bind on a {}", recv.kind()))) };
            l.borrow_mut().push((key(k)?, v.clone()));
            Ok(recv)
        }
        _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
    }
}

pub fn vm_run(code: &[Instr], max_steps: usize) -> Result<VmResult> {
    let targets = assemble(code)?;
    let mut stack: Vec<XaValue> = Vec::new();
    let mut locals: Vec<XaValue> = Vec::new();
    let mut pc = 0;
    let mut steps = 0;
    while pc < code.len() {
        steps += 1;
        if steps > max_steps {
            return Err(Error::Budget);
        }
        let mut next = pc + 1;
        match &code[pc] {
            Instr::PushTrue => stack.push(XaValue::Bool(true)),
            Instr::PushFalse => stack.push(XaValue::Bool(false)),
            Instr::PushInteger(n) => stack.push(XaValue::Int(*n)),
            Instr::PushStr(s) => stack.push(XaValue::Str(Rc::from(s.as_str()))),
            Instr::PushNull => stack.push(XaValue::Null),
            Instr::PushEmptySeq => stack.push(XaValue::AList(Rc::new(RefCell::new(Vec::new())))),
            Instr::LocalRef(i) => {
                let v = locals.get(*i).cloned().ok_or_else(|| Error::User(format!("no local {i}")))?;
                stack.push(v);
            }
            Instr::SetLocal(_, i) => {
                let v = stack.last().cloned().ok_or(Error::StackUnderflow)?;
                if locals.len() <= *i {
                    locals.resize(*i + 1, XaValue::Null);
                }
                locals[*i] = v;
            }
            Instr::Pop => {
                pop(&mut stack)?;
            }
            Instr::And
            | Instr::Or
            | Instr::Add
            | Instr::Sub
            | Instr::Mul
            | Instr::Gt
            | Instr::Lt
            | Instr::Eq
            | Instr::Mod => {
                let op = match &code[pc] {
                    Instr::And => XaOp::And,
                    Instr::Or => XaOp::Or,
                    Instr::Add => XaOp::Add,
                    Instr::Sub => XaOp::Sub,
                    Instr::Mul => XaOp::Mul,
                    Instr::Gt => XaOp::Gt,
                    Instr::Lt => XaOp::Lt,
                    Instr::Eq => XaOp::Eq,
                    _ => XaOp::Mod,
                };
                let r = pop(&mut stack)?;
                let l = pop(&mut stack)?;
                stack.push(apply_op(op, &l, &r)?);
            }
            Instr::StartCall | Instr::Noop(_) => {}
            Instr::Send(name, argc) => {
                let recv = pop(&mut stack)?;
                let mut args = Vec::with_capacity(*argc);
                for _ in 0..*argc {
                    args.push(pop(&mut stack)?);
                }
                args.reverse();
                stack.push(send(name, recv, args)?);
            }
            Instr::Skip(l) => next = targets[l],
            Instr::SkipFalse(l) => match pop(&mut stack)? {
                XaValue::Bool(false) => next = targets[l],
                XaValue::Bool(true) => {}
                v => return Err(Error::ty(format!("test is a {}", v.kind()))),
            },
        }
        pc = next;
    }
    Ok(VmResult { top: stack.pop().unwrap_or(XaValue::Null), locals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xaction::parser::parse_program;

    #[test]
    fn constants_and_variables() {
        let c = Compiler::new();
        let t = XaTypeEnv::new();
        assert_eq!(c.exp(&XaExp::int(7), &t, &[]).unwrap(), vec![Instr::PushInteger(7)]);
        assert_eq!(c.exp(&XaExp::var("x"), &t, &["x".into()]).unwrap(), vec![Instr::LocalRef(0)]);
        assert_eq!(c.exp(&XaExp::var("x"), &t, &[]).unwrap_err(), Error::UnboundVar("x".into()));
        let shadowed = ["x".to_string(), "y".into(), "x".into()];
        assert_eq!(c.exp(&XaExp::var("x"), &t, &shadowed).unwrap(), vec![Instr::LocalRef(2)]);
    }

    #[test]
    fn add_on_the_machine() {
        let r = vm_run(&[Instr::PushInteger(2), Instr::PushInteger(3), Instr::Add], 10).unwrap();
        assert!(matches!(r.top, XaValue::Int(5)));
        assert_eq!(vm_run(&[Instr::Add], 10).unwrap_err(), Error::StackUnderflow);
    }

    #[test]
    fn field_ref_over_an_alist() {
        let alist = [
            Instr::StartCall,
            Instr::PushStr("head".into()),
            Instr::PushInteger(4),
            Instr::PushEmptySeq,
            Instr::Send("bind".into(), 2),
        ];
        let mut code = vec![Instr::StartCall, Instr::PushStr("head".into())];
        code.extend(alist);
        code.push(Instr::Send("lookup".into(), 1));
        assert!(matches!(vm_run(&code, 100).unwrap().top, XaValue::Int(4)));
    }

    #[test]
    fn skip_false_on_true_falls_through() {
        let code = [Instr::PushTrue, Instr::SkipFalse("L".into()), Instr::PushInteger(1), Instr::Noop("L".into())];
        assert!(matches!(vm_run(&code, 10).unwrap().top, XaValue::Int(1)));
    }

    #[test]
    fn false_while_falls_through() {
        let p = parse_program("begin value x is 3 end while false do x := 4; end end").unwrap();
        let c = compile_program(&p).unwrap();
        let r = vm_run(&c.code, 100).unwrap();
        assert!(matches!(r.locals[c.slot("x").unwrap()], XaValue::Int(3)));
    }

    #[test]
    fn labels_are_unique() {
        let p = parse_program("begin while true do begin end end while true do if false then begin end end end end")
            .unwrap();
        let c = compile_program(&p).unwrap();
        assert!(assemble(&c.code).is_ok());
        assert_eq!(vm_run(&c.code, 100).unwrap_err(), Error::Budget);
        let bad = [Instr::Noop("A".into()), Instr::Noop("A".into())];
        assert!(assemble(&bad).is_err());
        assert!(assemble(&[Instr::Skip("B".into())]).is_err());
    }

    #[test]
    fn instruction_text() {
        assert_eq!(Instr::PushInteger(100).to_string(), "PushInteger(100)");
        assert_eq!(Instr::Pop.to_string(), "Pop()");
        assert_eq!(Instr::Send("lookup".into(), 1).to_string(), "Send(\"lookup\", 1)");
    }
}
