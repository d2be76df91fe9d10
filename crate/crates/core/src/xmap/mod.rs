//! Pattern-matching mappings between models.

use std::rc::Rc;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::kernel::{ConstraintReport, Registry};
use crate::value::{ObjId, Value};
use crate::xocl::ast::Expr;
use crate::xocl::Ctx;

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Var(String),
    Const(Value),
    /// `Path[slot = pattern, ...]`
    Class {
        path: Vec<String>,
        fields: Vec<(String, Pattern)>,
    },
    /// `v = pattern`
    Bind(String, Box<Pattern>),
    /// `rest->including(pattern)`
    SetIncluding(String, Box<Pattern>),
    Seq(Vec<Pattern>),
}

impl Pattern {
    /// Variables in binding order, repeats included.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Pattern::Var(v) => out.push(v.clone()),
            Pattern::Const(_) => {}
            Pattern::Class { fields, .. } => fields.iter().for_each(|(_, p)| p.collect_vars(out)),
            Pattern::Bind(v, p) => {
                out.push(v.clone());
                p.collect_vars(out);
            }
            Pattern::SetIncluding(v, p) => {
                p.collect_vars(out);
                out.push(v.clone());
            }
            Pattern::Seq(ps) => ps.iter().for_each(|p| p.collect_vars(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapClause {
    pub name: String,
    pub patterns: Vec<Pattern>,
    pub guard: Option<Expr>,
    pub template: Expr,
    /// Evaluated in order; each sees the ones before.
    pub wheres: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingDesc {
    pub name: String,
    pub domain: Vec<Vec<String>>,
    pub range: Option<Vec<String>>,
    pub clauses: Vec<Rc<MapClause>>,
}

/// Id for `key` in a trace table, allocating `id<n>` on first sight.
pub fn trace_id(table: &Value, key: &Value) -> Result<String> {
    let Value::Table(rows) = table else {
        return Err(Error::ty("traceId needs a table"));
    };
    if let Some((_, v)) = rows.borrow().iter().find(|(k, _)| k == key) {
        return match v {
            Value::Str(s) => Ok(s.to_string()),
            other => Err(Error::ty(format!("trace table holds {}", other.kind_name()))),
        };
    }
    let id = format!("id{}", rows.borrow().len());
    rows.borrow_mut().push((key.clone(), Value::str(&id)));
    Ok(id)
}

impl Registry {
    /// Matches `v` against `p`, extending `env` on success.
    pub fn match_pattern(&self, p: &Pattern, v: &Value, env: &Env, ns: Option<ObjId>) -> Result<Option<Env>> {
        let mut out = Vec::new();
        if !self.match_into(p, v, ns, &mut out)? {
            return Ok(None);
        }
        let mut env = env.clone();
        for (n, x) in out {
            env = env.bind(&n, x);
        }
        Ok(Some(env))
    }

    /// Appends bindings to `out`; on failure `out` is left as it was. A
    /// variable bound earlier in `out` must match an equal value.
    pub(crate) fn match_into(
        &self,
        p: &Pattern,
        v: &Value,
        ns: Option<ObjId>,
        out: &mut Vec<(String, Value)>,
    ) -> Result<bool> {
        let mark = out.len();
        let ok = self.match_inner(p, v, ns, out)?;
        if !ok {
            out.truncate(mark);
        }
        Ok(ok)
    }

    fn match_inner(&self, p: &Pattern, v: &Value, ns: Option<ObjId>, out: &mut Vec<(String, Value)>) -> Result<bool> {
        let bind = |n: &str, v: &Value, out: &mut Vec<(String, Value)>| match out.iter().find(|(k, _)| k == n) {
            Some((_, old)) => old == v,
            None => {
                out.push((n.to_string(), v.clone()));
                true
            }
        };
        match p {
            Pattern::Var(n) => Ok(bind(n, v, out)),
            Pattern::Const(c) => Ok(c == v),
            Pattern::Bind(n, p) => Ok(self.match_into(p, v, ns, out)? && bind(n, v, out)),
            Pattern::Class { path, fields } => {
                let c = match self.resolve_path(ns, path)? {
                    Value::Obj(c) if self.is_class(c) => c,
                    _ => return Err(Error::UnboundPath(path.join("::"))),
                };
                if !self.is_kind_of(v, c) {
                    return Ok(false);
                }
                let Value::Obj(o) = v else { return Ok(false) };
                for (f, fp) in fields {
                    if !self.has_slot(*o, f) {
                        return Err(Error::NoSlot(f.clone()));
                    }
                    let sv = self.get_slot(*o, f)?;
                    if !self.match_into(fp, &sv, ns, out)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Pattern::SetIncluding(rest, elem) => {
                let Some(ms) = v.members() else { return Ok(false) };
                for (i, m) in ms.iter().enumerate() {
                    let mark = out.len();
                    if self.match_into(elem, m, ns, out)? {
                        let others: Vec<Value> =
                            ms.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect();
                        let r = if matches!(v, Value::Seq(_)) { Value::seq(others) } else { Value::set(others) };
                        if bind(rest, &r, out) {
                            return Ok(true);
                        }
                        out.truncate(mark);
                    }
                }
                Ok(false)
            }
            Pattern::Seq(ps) => {
                let Value::Seq(s) = v else { return Ok(false) };
                let items = s.borrow().clone();
                if items.len() != ps.len() {
                    return Ok(false);
                }
                for (p, x) in ps.iter().zip(items.iter()) {
                    if !self.match_into(p, x, ns, out)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    fn mapping_of(&self, m: ObjId) -> Result<(ObjId, Rc<MappingDesc>)> {
        let of = self.cell(m).of;
        for c in self.linearize(of)? {
            if let Some(d) = self.class(c).and_then(|d| d.mapping.clone()) {
                return Ok((c, d));
            }
        }
        Err(Error::ty("not a mapping instance"))
    }

    /// Runs the first clause whose patterns and guard accept `args`.
    pub fn apply_mapping(&mut self, m: ObjId, args: Vec<Value>) -> Result<Value> {
        let (class, desc) = self.mapping_of(m)?;
        if !desc.domain.is_empty() && desc.domain.len() != args.len() {
            return Err(Error::Arity(desc.name.clone(), desc.domain.len(), args.len()));
        }
        let ns = self.package_of_class(class);
        let ctx = Ctx::new(Value::Obj(m), ns);
        for clause in &desc.clauses {
            if clause.patterns.len() != args.len() {
                continue;
            }
            let mut bs = Vec::new();
            let mut ok = true;
            for (p, a) in clause.patterns.iter().zip(args.iter()) {
                if !self.match_into(p, a, ns, &mut bs)? {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let mut env = Env::new();
            for (n, v) in bs {
                env = env.bind(&n, v);
            }
            if let Some(g) = &clause.guard {
                if self.eval(g, &env, &ctx)? != Value::Bool(true) {
                    continue;
                }
            }
            for (n, x) in &clause.wheres {
                let v = self.eval(x, &env, &ctx)?;
                env = env.bind(n, v);
            }
            return self.eval(&clause.template, &env, &ctx);
        }
        Err(Error::NoClause(desc.name.clone()))
    }

    /// Checks an instance of a mapping-specification class against the
    /// constraints it declares.
    pub fn check_mapping_spec(&mut self, spec: ObjId, link: ObjId) -> Result<ConstraintReport> {
        if !self.is_kind_of(&Value::Obj(link), spec) {
            return Err(Error::ty(format!("link is not a {}", self.class_name(spec))));
        }
        Ok(self.check_constraints(link))
    }
}
