//! Synchronisation rules run to a fixpoint over a scope of objects.

use std::rc::Rc;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::{ObjId, Value};
use crate::xmap::Pattern;
use crate::xocl::ast::Expr;
use crate::xocl::Ctx;

#[derive(Debug, Clone, PartialEq)]
pub struct SyncBinding {
    pub var: String,
    pub pattern: Pattern,
    pub guard: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncRule {
    pub name: String,
    /// Higher fires first.
    pub priority: i64,
    pub bindings: Vec<SyncBinding>,
    pub when: Option<Expr>,
    pub action: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncSpec {
    pub scope: Expr,
    pub rules: Vec<SyncRule>,
}

/// A rule set closed over the environment it was created in.
pub struct SyncModel {
    pub spec: Rc<SyncSpec>,
    env: Env,
    ctx: Ctx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firing {
    pub rule: String,
    pub bindings: Vec<(String, Value)>,
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepReport {
    Quiescent,
    Fired(Firing),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncStatus {
    Fixpoint,
    BudgetExhausted,
}

impl SyncStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SyncStatus::Fixpoint => "fixpoint",
            SyncStatus::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport {
    pub fired: Vec<Firing>,
    pub status: SyncStatus,
}

impl SyncModel {
    /// Rule indices by descending priority, ties in declaration order.
    fn order(&self) -> Vec<usize> {
        let mut ix: Vec<usize> = (0..self.spec.rules.len()).collect();
        ix.sort_by_key(|i| std::cmp::Reverse(self.spec.rules[*i].priority));
        ix
    }
}

impl Registry {
    pub(crate) fn make_sync(&mut self, spec: &Rc<SyncSpec>, env: &Env, ctx: &Ctx) -> Result<Value> {
        Ok(Value::Sync(Rc::new(SyncModel { spec: spec.clone(), env: env.clone(), ctx: ctx.clone() })))
    }

    pub fn sync_scope(&mut self, m: &SyncModel) -> Result<Vec<Value>> {
        let v = self.eval(&m.spec.scope, &m.env, &m.ctx)?;
        Ok(v.members().unwrap_or_else(|| vec![v]))
    }

    /// Every binding tuple accepted by `rule`; the leftmost binding varies
    /// slowest. Variables bound by an earlier binding must agree.
    pub fn enumerate_matches(
        &mut self,
        m: &SyncModel,
        rule: &SyncRule,
        scope: &[Value],
    ) -> Result<Vec<Vec<(String, Value)>>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.enumerate_from(m, rule, scope, 0, &mut cur, &mut out)?;
        Ok(out)
    }

    fn enumerate_from(
        &mut self,
        m: &SyncModel,
        rule: &SyncRule,
        scope: &[Value],
        i: usize,
        cur: &mut Vec<(String, Value)>,
        out: &mut Vec<Vec<(String, Value)>>,
    ) -> Result<()> {
        if i == rule.bindings.len() {
            if let Some(w) = &rule.when {
                if !self.sync_test(m, w, cur)? {
                    return Ok(());
                }
            }
            out.push(cur.clone());
            return Ok(());
        }
        let b = &rule.bindings[i];
        for e in scope {
            let mark = cur.len();
            let ok = self.match_into(&Pattern::Bind(b.var.clone(), Box::new(b.pattern.clone())), e, m.ctx.ns, cur)?;
            if ok {
                let pass = match &b.guard {
                    Some(g) => self.sync_test(m, g, cur)?,
                    None => true,
                };
                if pass {
                    self.enumerate_from(m, rule, scope, i + 1, cur, out)?;
                }
            }
            cur.truncate(mark);
        }
        Ok(())
    }

    fn sync_env(m: &SyncModel, bs: &[(String, Value)]) -> Env {
        let mut env = m.env.clone();
        for (n, v) in bs {
            env = env.bind(n, v.clone());
        }
        env
    }

    fn sync_test(&mut self, m: &SyncModel, e: &Expr, bs: &[(String, Value)]) -> Result<bool> {
        let env = Self::sync_env(m, bs);
        Ok(self.eval(e, &env, &m.ctx)? == Value::Bool(true))
    }

    fn fire(&mut self, m: &SyncModel, rule: &SyncRule, bs: Vec<(String, Value)>, scope: &[Value]) -> Result<Firing> {
        let before = self.serialize_from(scope);
        let env = Self::sync_env(m, &bs);
        self.eval(&rule.action, &env, &m.ctx)?;
        let changed = self.serialize_from(scope) != before;
        Ok(Firing { rule: rule.name.clone(), bindings: bs, changed })
    }

    /// Fires the first match of the highest-priority matching rule.
    pub fn sync_step(&mut self, m: &SyncModel) -> Result<StepReport> {
        let scope = self.sync_scope(m)?;
        for i in m.order() {
            let rule = &m.spec.rules[i];
            if let Some(bs) = self.enumerate_matches(m, rule, &scope)?.into_iter().next() {
                return Ok(StepReport::Fired(self.fire(m, rule, bs, &scope)?));
            }
        }
        Ok(StepReport::Quiescent)
    }

    /// Scans rules in order, firing matches; any firing that changes the
    /// scope restarts the scan. A scan without changes is a fixpoint.
    pub fn run_to_fixpoint(&mut self, m: &SyncModel, max_iters: usize) -> Result<SyncReport> {
        let mut fired = Vec::new();
        loop {
            let scope = self.sync_scope(m)?;
            let mut changed = false;
            'scan: for i in m.order() {
                let rule = &m.spec.rules[i];
                for bs in self.enumerate_matches(m, rule, &scope)? {
                    if fired.len() >= max_iters {
                        return Ok(SyncReport { fired, status: SyncStatus::BudgetExhausted });
                    }
                    let f = self.fire(m, rule, bs, &scope)?;
                    let c = f.changed;
                    fired.push(f);
                    if c {
                        changed = true;
                        break 'scan;
                    }
                }
            }
            if !changed {
                return Ok(SyncReport { fired, status: SyncStatus::Fixpoint });
            }
        }
    }

    /// The rule set that copies `c2`'s name onto `c1` while they differ.
    pub fn same_name_rule(&mut self, c1: ObjId, c2: ObjId) -> Result<Rc<SyncModel>> {
        let e = self.parse_expr(
            "@XSync
               @Scope Set{c1, c2} end
               @Rule r1 1
                 x1 = NamedElement[name = n1] when x1 = c1;
                 x2 = NamedElement[name = n2] when x2 = c2 and n1 <> n2
               do x1.name := x2.name
               end
             end",
        )?;
        let env = Env::new().bind("c1", Value::Obj(c1)).bind("c2", Value::Obj(c2));
        let root = self.root;
        match self.eval(&e, &env, &Ctx::new(Value::Null, Some(root)))? {
            Value::Sync(m) => Ok(m),
            _ => Err(Error::ty("expected a sync model")),
        }
    }

    pub(crate) fn send_sync(&mut self, m: Rc<SyncModel>, name: &str, args: Vec<Value>) -> Result<Value> {
        match (name, args.as_slice()) {
            ("run", []) => {
                let budget = self.max_steps;
                Ok(Value::str(self.run_to_fixpoint(&m, budget)?.status.as_str()))
            }
            ("run", [Value::Int(n)]) if *n >= 1 => {
                Ok(Value::str(self.run_to_fixpoint(&m, *n as usize)?.status.as_str()))
            }
            ("step", []) => Ok(match self.sync_step(&m)? {
                StepReport::Quiescent => Value::str("quiescent"),
                StepReport::Fired(f) => Value::str(&f.rule),
            }),
            _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
        }
    }
}
