use std::rc::Rc;

use super::ast::{Binder, CaseArm, Expr, OpDef};
use super::Ctx;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::Value;

/// An expression that evaluates back to `v`.
pub fn lift_value(v: &Value) -> Result<Expr> {
    Ok(match v {
        Value::Null => Expr::Null,
        Value::Bool(b) => Expr::Bool(*b),
        Value::Int(n) => Expr::Int(*n),
        Value::Str(s) => Expr::Str(s.to_string()),
        Value::Seq(s) => Expr::SeqLit(s.borrow().iter().map(lift_value).collect::<Result<_>>()?),
        Value::Set(s) => Expr::SetLit(s.iter().map(lift_value).collect::<Result<_>>()?),
        Value::Expr(_) => Expr::Lit(v.clone()),
        _ => return Err(Error::CannotLift),
    })
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

/// Rebuilds `e` with `f` applied to each direct sub-expression.
pub(crate) fn map_children(e: &Expr, f: &mut dyn FnMut(&Expr) -> Result<Expr>) -> Result<Expr> {
    let all = |xs: &[Expr], f: &mut dyn FnMut(&Expr) -> Result<Expr>| -> Result<Vec<Expr>> {
        xs.iter().map(&mut *f).collect()
    };
    Ok(match e {
        Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Null | Expr::SelfRef | Expr::Var(_) | Expr::Path(_) => {
            e.clone()
        }
        Expr::Lit(_) | Expr::Sync(_) => e.clone(),
        Expr::Dot(t, n) => Expr::Dot(bx(f(t)?), n.clone()),
        Expr::Bin(op, l, r) => Expr::Bin(*op, bx(f(l)?), bx(f(r)?)),
        Expr::Not(x) => Expr::Not(bx(f(x)?)),
        Expr::Neg(x) => Expr::Neg(bx(f(x)?)),
        Expr::If(c, t, x) => Expr::If(
            bx(f(c)?),
            bx(f(t)?),
            match x {
                Some(x) => Some(bx(f(x)?)),
                None => None,
            },
        ),
        Expr::Let(bs, body) => {
            let mut nb = Vec::new();
            for (b, x) in bs {
                let b = match b {
                    Binder::Name(n) => Binder::Name(n.clone()),
                    Binder::Drop(d) => Binder::Drop(bx(f(d)?)),
                };
                nb.push((b, f(x)?));
            }
            Expr::Let(nb, bx(f(body)?))
        }
        Expr::SetLit(xs) => Expr::SetLit(all(xs, f)?),
        Expr::SeqLit(xs) => Expr::SeqLit(all(xs, f)?),
        Expr::Cons(xs, r) => Expr::Cons(all(xs, f)?, bx(f(r)?)),
        Expr::Iter { recv, op, vars, acc, body } => Expr::Iter {
            recv: bx(f(recv)?),
            op: op.clone(),
            vars: vars.clone(),
            acc: match acc {
                Some((n, x)) => Some((n.clone(), bx(f(x)?))),
                None => None,
            },
            body: bx(f(body)?),
        },
        Expr::Arrow { recv, op, args } => Expr::Arrow { recv: bx(f(recv)?), op: op.clone(), args: all(args, f)? },
        Expr::Send { recv, name, args } => Expr::Send { recv: bx(f(recv)?), name: name.clone(), args: all(args, f)? },
        Expr::Call { callee, args } => Expr::Call { callee: bx(f(callee)?), args: all(args, f)? },
        Expr::Assign(p, v) => Expr::Assign(bx(f(p)?), bx(f(v)?)),
        Expr::Seq(a, b) => Expr::Seq(bx(f(a)?), bx(f(b)?)),
        Expr::While(c, b) => Expr::While(bx(f(c)?), bx(f(b)?)),
        Expr::For { var, coll, body } => Expr::For { var: var.clone(), coll: bx(f(coll)?), body: bx(f(body)?) },
        Expr::Find { var, coll, when, body, otherwise } => Expr::Find {
            var: var.clone(),
            coll: bx(f(coll)?),
            when: match when {
                Some(w) => Some(bx(f(w)?)),
                None => None,
            },
            body: bx(f(body)?),
            otherwise: match otherwise {
                Some(o) => Some(bx(f(o)?)),
                None => None,
            },
        },
        Expr::Case { scrutinee, arms, default } | Expr::TypeCase { scrutinee, arms, default } => {
            let s = bx(f(scrutinee)?);
            let mut na = Vec::new();
            for a in arms {
                na.push(CaseArm { test: f(&a.test)?, body: f(&a.body)? });
            }
            let d = match default {
                Some(d) => Some(bx(f(d)?)),
                None => None,
            };
            if matches!(e, Expr::Case { .. }) {
                Expr::Case { scrutinee: s, arms: na, default: d }
            } else {
                Expr::TypeCase { scrutinee: s, arms: na, default: d }
            }
        }
        Expr::Format { channel, control, args } => Expr::Format {
            channel: bx(f(channel)?),
            control: bx(f(control)?),
            args: match args {
                Some(a) => Some(bx(f(a)?)),
                None => None,
            },
        },
        Expr::ObjectLit { class, fields } => {
            let mut nf = Vec::new();
            for (n, x) in fields {
                nf.push((n.clone(), f(x)?));
            }
            Expr::ObjectLit { class: bx(f(class)?), fields: nf }
        }
        Expr::Op(def) => Expr::Op(Rc::new(OpDef {
            name: def.name.clone(),
            params: def.params.clone(),
            ret: def.ret.clone(),
            body: Rc::new(f(&def.body)?),
        })),
        Expr::Quote(x) => Expr::Quote(bx(f(x)?)),
        Expr::Drop(x) => Expr::Drop(bx(f(x)?)),
    })
}

fn splice(v: Value) -> Result<Expr> {
    match v {
        Value::Expr(e) => Ok((*e).clone()),
        Value::Seq(s) => {
            let items: Vec<Value> = s.borrow().clone();
            Ok(Expr::SeqLit(items.into_iter().map(splice).collect::<Result<_>>()?))
        }
        Value::Set(s) => Ok(Expr::SetLit(s.iter().cloned().map(splice).collect::<Result<_>>()?)),
        Value::Obj(_) | Value::Table(_) | Value::Op(_) | Value::Sync(_) => {
            Err(Error::CannotSplice(v.kind_name().to_string()))
        }
        other => lift_value(&other).map_err(|_| Error::CannotSplice(other.kind_name().to_string())),
    }
}

impl Registry {
    /// Replaces the drops of a quasi-quote template by the expressions they
    /// compute; atoms are lifted.
    pub fn expand_quote(&mut self, template: &Expr, env: &Env, ctx: &Ctx) -> Result<Expr> {
        self.expand_at(template, 0, env, ctx)
    }

    fn expand_at(&mut self, e: &Expr, depth: usize, env: &Env, ctx: &Ctx) -> Result<Expr> {
        match e {
            Expr::Drop(x) if depth == 0 => {
                let v = self.eval(x, env, ctx)?;
                splice(v)
            }
            Expr::Drop(x) => Ok(Expr::Drop(Box::new(self.expand_at(x, depth - 1, env, ctx)?))),
            Expr::Quote(x) => Ok(Expr::Quote(Box::new(self.expand_at(x, depth + 1, env, ctx)?))),
            Expr::Let(bs, body) if depth == 0 => {
                let mut nb = Vec::new();
                for (b, x) in bs {
                    let b = match b {
                        Binder::Drop(d) => match self.eval(d, env, ctx)? {
                            Value::Str(s) => Binder::Name(s.to_string()),
                            Value::Expr(v) => match v.as_ref() {
                                Expr::Var(n) => Binder::Name(n.clone()),
                                _ => return Err(Error::CannotSplice("binder".into())),
                            },
                            other => return Err(Error::CannotSplice(other.kind_name().to_string())),
                        },
                        other => other.clone(),
                    };
                    nb.push((b, self.expand_at(x, depth, env, ctx)?));
                }
                Ok(Expr::Let(nb, Box::new(self.expand_at(body, depth, env, ctx)?)))
            }
            other => map_children(other, &mut |c| self.expand_at(c, depth, env, ctx)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_round_trips() {
        let mut reg = Registry::new();
        let v = Value::seq(vec!["head".into(), "tail".into()]);
        let e = lift_value(&v).unwrap();
        assert_eq!(e, Expr::SeqLit(vec![Expr::str("head"), Expr::str("tail")]));
        assert_eq!(reg.eval_top(&e).unwrap(), v);
        let s = Value::set(vec![1.into(), 2.into()]);
        assert_eq!(reg.eval_top(&lift_value(&s).unwrap()).unwrap(), s);
        assert_eq!(lift_value(&Value::Obj(reg.k.object)), Err(Error::CannotLift));
    }

    #[test]
    fn drops_splice_and_lift() {
        let mut reg = Registry::new();
        let env = Env::new().bind("name", "On".into());
        let t = Expr::call(Expr::var("State"), vec![Expr::Drop(Box::new(Expr::var("name")))]);
        let e = reg.expand_quote(&t, &env, &Ctx::top()).unwrap();
        assert_eq!(e, Expr::call(Expr::var("State"), vec![Expr::str("On")]));
        let env = Env::new().bind("o", Value::Obj(reg.k.object));
        let t = Expr::Drop(Box::new(Expr::var("o")));
        assert!(matches!(reg.expand_quote(&t, &env, &Ctx::top()), Err(Error::CannotSplice(_))));
    }
}
