use std::rc::Rc;

use super::ast::{BinOp, Binder, CaseArm, Expr, OpDef};
use super::Ctx;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::kernel::{OperationDesc, Registry};
use crate::value::{Closure, ObjId, Value};

fn want_bool(v: Value, what: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| Error::ty(format!("{what} expects a boolean, got {v:?}")))
}

fn collect_into(src: &Value, items: Vec<Value>) -> Value {
    match src {
        Value::Set(_) => Value::set(items),
        _ => Value::seq(items),
    }
}

impl Registry {
    pub fn eval(&mut self, e: &Expr, env: &Env, ctx: &Ctx) -> Result<Value> {
        self.enter()?;
        let r = self.eval_inner(e, env, ctx);
        self.leave();
        r
    }

    /// Evaluates a top-level expression with no receiver.
    pub fn eval_top(&mut self, e: &Expr) -> Result<Value> {
        self.eval(e, &Env::new(), &Ctx::top())
    }

    fn eval_inner(&mut self, e: &Expr, env: &Env, ctx: &Ctx) -> Result<Value> {
        match e {
            Expr::Int(n) => Ok(Value::Int(*n)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Str(s) => Ok(Value::str(s)),
            Expr::Null => Ok(Value::Null),
            Expr::SelfRef => Ok(ctx.self_val.clone()),
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(n) => self.lookup_var(n, env, ctx),
            Expr::Path(p) => self.resolve_path(ctx.ns, p),
            Expr::Dot(t, n) => {
                let v = self.eval(t, env, ctx)?;
                self.navigate(&v, n)
            }
            Expr::Bin(op, l, r) => self.eval_bin(*op, l, r, env, ctx),
            Expr::Not(x) => Ok(Value::Bool(!want_bool(self.eval(x, env, ctx)?, "not")?)),
            Expr::Neg(x) => match self.eval(x, env, ctx)? {
                Value::Int(n) => n.checked_neg().map(Value::Int).ok_or(Error::Overflow),
                v => Err(Error::ty(format!("cannot negate {v:?}"))),
            },
            Expr::If(c, t, f) => {
                if want_bool(self.eval(c, env, ctx)?, "if")? {
                    self.eval(t, env, ctx)
                } else if let Some(f) = f {
                    self.eval(f, env, ctx)
                } else {
                    Ok(Value::Null)
                }
            }
            Expr::Let(bs, body) => {
                let mut inner = env.clone();
                for (b, x) in bs {
                    let v = self.eval(x, &inner, ctx)?;
                    match b {
                        Binder::Name(n) => inner = inner.bind(n, v),
                        Binder::Drop(_) => return Err(Error::ty("drop outside quote")),
                    }
                }
                self.eval(body, &inner, ctx)
            }
            Expr::SetLit(xs) => {
                let vs = self.eval_all(xs, env, ctx)?;
                Ok(Value::set(vs))
            }
            Expr::SeqLit(xs) => {
                let vs = self.eval_all(xs, env, ctx)?;
                Ok(Value::seq(vs))
            }
            Expr::Cons(xs, rest) => {
                let mut vs = self.eval_all(xs, env, ctx)?;
                let r = self.eval(rest, env, ctx)?;
                vs.extend(r.members().ok_or_else(|| Error::ty("Seq{x | r} needs a sequence tail"))?);
                Ok(Value::seq(vs))
            }
            Expr::Iter { recv, op, vars, acc, body } => {
                let r = self.eval(recv, env, ctx)?;
                self.eval_iter(&r, op, vars, acc.as_ref().map(|(n, x)| (n.as_str(), x.as_ref())), body, env, ctx)
            }
            Expr::Arrow { recv, op, args } => {
                let r = self.eval(recv, env, ctx)?;
                let a = self.eval_all(args, env, ctx)?;
                self.send(r, op, a)
            }
            Expr::Send { recv, name, args } => {
                let r = self.eval(recv, env, ctx)?;
                let a = self.eval_all(args, env, ctx)?;
                self.send(r, name, a)
            }
            Expr::Call { callee, args } => {
                if let Expr::Var(n) = callee.as_ref() {
                    if !env.binds(n) {
                        if let Value::Obj(o) = &ctx.self_val {
                            if !self.has_slot(*o, n) && self.lookup_operation_of(*o, n, args.len()).is_ok() {
                                let a = self.eval_all(args, env, ctx)?;
                                return self.invoke_operation(*o, n, a);
                            }
                        }
                    }
                }
                let f = self.eval(callee, env, ctx)?;
                let a = self.eval_all(args, env, ctx)?;
                self.apply_value(&f, a)
            }
            Expr::Assign(place, v) => {
                let v = self.eval(v, env, ctx)?;
                self.assign(place, v.clone(), env, ctx)?;
                Ok(v)
            }
            Expr::Seq(a, b) => {
                self.eval(a, env, ctx)?;
                self.eval(b, env, ctx)
            }
            Expr::While(c, body) => {
                let mut rounds = 0;
                while want_bool(self.eval(c, env, ctx)?, "while")? {
                    rounds += 1;
                    if rounds > self.max_steps {
                        return Err(Error::Budget);
                    }
                    self.eval(body, env, ctx)?;
                }
                Ok(Value::Null)
            }
            Expr::For { var, coll, body } => {
                let c = self.eval(coll, env, ctx)?;
                let ms = c.members().ok_or_else(|| Error::ty("@For needs a collection"))?;
                for m in ms {
                    self.eval(body, &env.bind(var, m), ctx)?;
                }
                Ok(Value::Null)
            }
            Expr::Find { var, coll, when, body, otherwise } => {
                let c = self.eval(coll, env, ctx)?;
                let ms = c.members().ok_or_else(|| Error::ty("@Find needs a collection"))?;
                for m in ms {
                    let inner = env.bind(var, m);
                    let hit = match when {
                        Some(w) => want_bool(self.eval(w, &inner, ctx)?, "@Find")?,
                        None => true,
                    };
                    if hit {
                        return self.eval(body, &inner, ctx);
                    }
                }
                match otherwise {
                    Some(o) => self.eval(o, env, ctx),
                    None => Ok(Value::Null),
                }
            }
            Expr::Case { scrutinee, arms, default } => {
                let s = self.eval(scrutinee, env, ctx)?;
                for CaseArm { test, body } in arms {
                    let t = self.eval(test, env, ctx)?;
                    if t == s || (t == Value::Bool(true) && s.as_bool().is_none()) {
                        return self.eval(body, env, ctx);
                    }
                }
                match default {
                    Some(d) => self.eval(d, env, ctx),
                    None => Ok(Value::Null),
                }
            }
            Expr::TypeCase { scrutinee, arms, default } => {
                let s = self.eval(scrutinee, env, ctx)?;
                for CaseArm { test, body } in arms {
                    let c = match self.eval(test, env, ctx)? {
                        Value::Obj(c) if self.is_class(c) => c,
                        _ => return Err(Error::ty("@TypeCase arm is not a classifier")),
                    };
                    if self.is_kind_of(&s, c) {
                        return self.eval(body, env, ctx);
                    }
                }
                match default {
                    Some(d) => self.eval(d, env, ctx),
                    None => Ok(Value::Null),
                }
            }
            // The channel only names a sink; all output goes to the registry buffer.
            Expr::Format { channel: _, control, args } => {
                let ctl = self.eval(control, env, ctx)?;
                let ctl = ctl.as_str().ok_or_else(|| Error::ty("format control must be a string"))?.to_string();
                let a = match args {
                    Some(a) => self.eval(a, env, ctx)?.members().ok_or_else(|| Error::ty("format args"))?,
                    None => vec![],
                };
                let s = super::format::format_values(self, &ctl, &a)?;
                self.write_out(&s);
                Ok(Value::Null)
            }
            Expr::ObjectLit { class, fields } => {
                let c = match self.eval(class, env, ctx)? {
                    Value::Obj(c) if self.is_class(c) => c,
                    v => return Err(Error::ty(format!("{v:?} is not a class"))),
                };
                let o = self.instantiate(c, vec![])?;
                let id = o.as_obj().ok_or_else(|| Error::ty("object literal of a datatype"))?;
                for (n, x) in fields {
                    let v = self.eval(x, env, ctx)?;
                    self.set_slot(id, n, v)?;
                }
                Ok(o)
            }
            Expr::Op(def) => Ok(self.make_closure(def, env, ctx)),
            Expr::Quote(t) => Ok(Value::Expr(Rc::new(self.expand_quote(t, env, ctx)?))),
            Expr::Drop(_) => Err(Error::ty("drop outside quote")),
            Expr::Sync(spec) => self.make_sync(spec, env, ctx),
        }
    }

    pub(crate) fn eval_all(&mut self, xs: &[Expr], env: &Env, ctx: &Ctx) -> Result<Vec<Value>> {
        xs.iter().map(|x| self.eval(x, env, ctx)).collect()
    }

    pub fn make_closure(&self, def: &OpDef, env: &Env, ctx: &Ctx) -> Value {
        Value::Op(Rc::new(Closure {
            name: std::cell::RefCell::new(def.name.clone()),
            params: def.params.iter().map(|p| p.name.clone()).collect(),
            body: def.body.clone(),
            env: env.clone(),
            self_val: ctx.self_val.clone(),
            ns: ctx.ns,
        }))
    }

    fn lookup_var(&mut self, n: &str, env: &Env, ctx: &Ctx) -> Result<Value> {
        if let Some(v) = env.lookup(n) {
            return Ok(v);
        }
        if let Value::Obj(o) = &ctx.self_val {
            if self.has_slot(*o, n) {
                return self.get_slot(*o, n);
            }
        }
        if let Some(v) = self.resolve_name(ctx.ns, n) {
            return Ok(v);
        }
        if let Some(id) = self.snapshot_label(n) {
            return Ok(Value::Obj(id));
        }
        Err(Error::UnboundVar(n.to_string()))
    }

    /// Slot navigation; over a collection it maps and flattens one level.
    pub fn navigate(&mut self, v: &Value, n: &str) -> Result<Value> {
        match v {
            Value::Obj(o) => self.get_slot(*o, n),
            Value::Seq(_) | Value::Set(_) => {
                let mut out = Vec::new();
                for m in v.members().unwrap() {
                    let x = self.navigate(&m, n)?;
                    match x.members() {
                        Some(xs) => out.extend(xs),
                        None => out.push(x),
                    }
                }
                Ok(collect_into(v, out))
            }
            Value::Op(c) if n == "name" => Ok(Value::str(&*c.name.borrow())),
            Value::Null => Err(Error::ty(format!("cannot navigate .{n} on null"))),
            other => Err(Error::ty(format!("cannot navigate .{n} on {}", other.kind_name()))),
        }
    }

    fn assign(&mut self, place: &Expr, v: Value, env: &Env, ctx: &Ctx) -> Result<()> {
        match place {
            Expr::Var(n) => {
                if env.update(n, v.clone()) {
                    return Ok(());
                }
                if let Value::Obj(o) = &ctx.self_val {
                    if self.has_slot(*o, n) {
                        return self.set_slot(*o, n, v);
                    }
                }
                Err(Error::UnboundVar(n.clone()))
            }
            Expr::Dot(t, n) => match self.eval(t, env, ctx)? {
                Value::Obj(o) => self.set_slot(o, n, v),
                other => Err(Error::ty(format!("cannot assign .{n} on {}", other.kind_name()))),
            },
            Expr::Path(p) if p.len() > 1 => {
                let (last, init) = p.split_last().unwrap();
                let pkg = self.resolve_path(ctx.ns, init)?.as_obj().ok_or_else(|| Error::UnboundPath(p.join("::")))?;
                let d = self.package_mut(pkg).ok_or_else(|| Error::UnboundPath(p.join("::")))?;
                d.contents.insert(last.clone(), v);
                Ok(())
            }
            _ => Err(Error::ty("invalid assignment target")),
        }
    }

    fn eval_bin(&mut self, op: BinOp, l: &Expr, r: &Expr, env: &Env, ctx: &Ctx) -> Result<Value> {
        match op {
            BinOp::And => {
                if !want_bool(self.eval(l, env, ctx)?, "and")? {
                    return Ok(Value::Bool(false));
                }
                return Ok(Value::Bool(want_bool(self.eval(r, env, ctx)?, "and")?));
            }
            BinOp::Or => {
                if want_bool(self.eval(l, env, ctx)?, "or")? {
                    return Ok(Value::Bool(true));
                }
                return Ok(Value::Bool(want_bool(self.eval(r, env, ctx)?, "or")?));
            }
            BinOp::Implies => {
                if !want_bool(self.eval(l, env, ctx)?, "implies")? {
                    return Ok(Value::Bool(true));
                }
                return Ok(Value::Bool(want_bool(self.eval(r, env, ctx)?, "implies")?));
            }
            _ => {}
        }
        let a = self.eval(l, env, ctx)?;
        let b = self.eval(r, env, ctx)?;
        self.binop(op, a, b)
    }

    pub fn binop(&mut self, op: BinOp, a: Value, b: Value) -> Result<Value> {
        use Value::*;
        let bad = |a: &Value, b: &Value| {
            Error::ty(format!("operator {} not defined on {} and {}", op.symbol(), a.kind_name(), b.kind_name()))
        };
        Ok(match op {
            BinOp::Eq => Bool(a == b),
            BinOp::Ne => Bool(a != b),
            BinOp::And | BinOp::Or | BinOp::Implies => {
                let (Bool(x), Bool(y)) = (&a, &b) else { return Err(bad(&a, &b)) };
                Bool(match op {
                    BinOp::And => *x && *y,
                    BinOp::Or => *x || *y,
                    _ => !*x || *y,
                })
            }
            BinOp::Add => match (&a, &b) {
                (Int(x), Int(y)) => Int(x.checked_add(*y).ok_or(Error::Overflow)?),
                (Str(_), _) | (_, Str(_)) => Value::str(format!("{}{}", self.display(&a), self.display(&b))),
                (Seq(x), Seq(y)) => {
                    let mut v = x.borrow().clone();
                    v.extend(y.borrow().iter().cloned());
                    Value::seq(v)
                }
                (Set(x), Set(y)) => Value::set(x.iter().chain(y.iter()).cloned()),
                _ => return Err(bad(&a, &b)),
            },
            BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                let (Int(x), Int(y)) = (&a, &b) else {
                    if let (BinOp::Sub, Set(x), Set(y)) = (op, &a, &b) {
                        return Ok(Value::set(x.iter().filter(|m| !y.contains(m)).cloned()));
                    }
                    return Err(bad(&a, &b));
                };
                let r = match op {
                    BinOp::Sub => x.checked_sub(*y),
                    BinOp::Mul => x.checked_mul(*y),
                    BinOp::Div => {
                        if *y == 0 {
                            return Err(Error::DivZero);
                        }
                        x.checked_div(*y)
                    }
                    _ => {
                        if *y == 0 {
                            return Err(Error::DivZero);
                        }
                        x.checked_rem(*y)
                    }
                };
                Int(r.ok_or(Error::Overflow)?)
            }
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                let ord = match (&a, &b) {
                    (Int(x), Int(y)) => x.cmp(y),
                    (Str(x), Str(y)) => x.cmp(y),
                    _ => return Err(bad(&a, &b)),
                };
                Bool(match op {
                    BinOp::Lt => ord.is_lt(),
                    BinOp::Gt => ord.is_gt(),
                    BinOp::Le => ord.is_le(),
                    _ => ord.is_ge(),
                })
            }
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_iter(
        &mut self,
        recv: &Value,
        op: &str,
        vars: &[String],
        acc: Option<(&str, &Expr)>,
        body: &Expr,
        env: &Env,
        ctx: &Ctx,
    ) -> Result<Value> {
        let ms = match recv {
            Value::Table(t) => t.borrow().iter().map(|(k, _)| k.clone()).collect(),
            other => other.members().ok_or_else(|| Error::ty(format!("->{op} on {}", other.kind_name())))?,
        };
        if op == "iterate" {
            let (an, ax) = acc.ok_or_else(|| Error::ty("iterate needs an accumulator"))?;
            let var = vars.first().ok_or_else(|| Error::ty("iterate needs a variable"))?;
            let mut a = self.eval(ax, env, ctx)?;
            for m in ms {
                let inner = env.bind(an, a).bind(var, m);
                a = self.eval(body, &inner, ctx)?;
            }
            return Ok(a);
        }
        if vars.len() > 1 && matches!(op, "forAll" | "exists") {
            let mut tuples: Vec<Vec<Value>> = vec![vec![]];
            for _ in vars {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        ms.iter().map(move |m| {
                            let mut t = t.clone();
                            t.push(m.clone());
                            t
                        })
                    })
                    .collect();
            }
            for t in tuples {
                let mut inner = env.clone();
                for (v, m) in vars.iter().zip(t) {
                    inner = inner.bind(v, m);
                }
                let b = want_bool(self.eval(body, &inner, ctx)?, op)?;
                if op == "forAll" && !b {
                    return Ok(Value::Bool(false));
                }
                if op == "exists" && b {
                    return Ok(Value::Bool(true));
                }
            }
            return Ok(Value::Bool(op == "forAll"));
        }
        let var = vars.first().map(String::as_str).unwrap_or("it");
        let test = |reg: &mut Registry, m: &Value| -> Result<Value> { reg.eval(body, &env.bind(var, m.clone()), ctx) };
        match op {
            "select" | "reject" => {
                let keep = op == "select";
                let mut out = Vec::new();
                for m in ms {
                    if want_bool(test(self, &m)?, op)? == keep {
                        out.push(m);
                    }
                }
                Ok(collect_into(recv, out))
            }
            "collect" => {
                let mut out = Vec::new();
                for m in ms {
                    out.push(test(self, &m)?);
                }
                Ok(collect_into(recv, out))
            }
            "exists" => {
                for m in ms {
                    if want_bool(test(self, &m)?, op)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            "forAll" => {
                for m in ms {
                    if !want_bool(test(self, &m)?, op)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
            "any" | "detect" => {
                for m in ms {
                    if want_bool(test(self, &m)?, op)? {
                        return Ok(m);
                    }
                }
                Ok(Value::Null)
            }
            "one" => {
                let mut n = 0;
                for m in ms {
                    if want_bool(test(self, &m)?, op)? {
                        n += 1;
                    }
                }
                Ok(Value::Bool(n == 1))
            }
            "isUnique" => {
                let mut seen = Vec::new();
                for m in ms {
                    let k = test(self, &m)?;
                    if seen.contains(&k) {
                        return Ok(Value::Bool(false));
                    }
                    seen.push(k);
                }
                Ok(Value::Bool(true))
            }
            _ => Err(Error::DoesNotUnderstand(op.to_string(), 1)),
        }
    }

    /// Calls an operation value, a class (construction) or a mapping.
    pub fn apply_value(&mut self, f: &Value, args: Vec<Value>) -> Result<Value> {
        match f {
            Value::Op(c) => self.invoke_closure(c, args),
            Value::Obj(o) if self.is_class(*o) => {
                let is_mapping = self.class(*o).and_then(|d| d.mapping.clone()).is_some();
                if is_mapping {
                    let has_ctor = self.linearize(*o)?.iter().any(|k| {
                        self.class(*k)
                            .map(|d| d.constructors.iter().any(|c| c.params.len() == args.len()))
                            .unwrap_or(false)
                    });
                    if has_ctor || args.is_empty() {
                        return self.instantiate(*o, args);
                    }
                    let m = self.instantiate(*o, vec![])?;
                    return self.apply_mapping(m.as_obj().unwrap(), args);
                }
                self.instantiate(*o, args)
            }
            Value::Obj(o) => {
                let of = self.cell(*o).of;
                if self.class(of).and_then(|d| d.mapping.clone()).is_some() {
                    return self.apply_mapping(*o, args);
                }
                self.invoke_operation(*o, "invoke", args)
            }
            other => Err(Error::ty(format!("{} is not callable", other.kind_name()))),
        }
    }

    pub fn invoke_closure(&mut self, c: &Closure, args: Vec<Value>) -> Result<Value> {
        self.invoke_closure_as(c, c.self_val.clone(), args)
    }

    /// Runs a closure with `self` rebound, as for guards and actions run
    /// against a machine's element.
    pub fn invoke_closure_as(&mut self, c: &Closure, self_val: Value, args: Vec<Value>) -> Result<Value> {
        if c.params.len() != args.len() {
            return Err(Error::Arity(c.name.borrow().clone(), c.params.len(), args.len()));
        }
        let mut env = c.env.clone();
        for (p, v) in c.params.iter().zip(args) {
            env = env.bind(p, v);
        }
        self.eval(&c.body, &env, &Ctx::new(self_val, c.ns))
    }

    pub fn invoke_operation(&mut self, o: ObjId, name: &str, args: Vec<Value>) -> Result<Value> {
        let of = self.cell(o).of;
        let (owner, op) = self
            .find_operation(of, name, args.len())
            .ok_or_else(|| Error::DoesNotUnderstand(name.to_string(), args.len()))?;
        self.run_operation(Value::Obj(o), owner, &op, args)
    }

    pub(crate) fn run_operation(
        &mut self,
        recv: Value,
        owner: ObjId,
        op: &OperationDesc,
        args: Vec<Value>,
    ) -> Result<Value> {
        if op.is_abstract {
            return Err(Error::DoesNotUnderstand(op.name.clone(), args.len()));
        }
        let mut env = Env::new();
        for (p, v) in op.params.iter().zip(args) {
            env = env.bind(&p.name, v);
        }
        let ns = self.package_of_class(owner);
        self.eval(&op.body, &env, &Ctx::new(recv, ns))
    }
}
