//! Ordered-choice grammar interpreter behind user-defined constructs.

use std::rc::Rc;

use super::lexer::TokenKind;
use super::parser::Parser;
use super::{Builtin, GrammarDesc, Term};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::{ObjId, Value};
use crate::xocl::ast::{Binder, Expr};
use crate::xocl::{map_children, Ctx};

/// A matched term: `Some(v)` when it produced a value.
type Produced = Option<Value>;

impl<'r> Parser<'r> {
    /// `@Path ...`: runs the start rule of the grammar owned by the class
    /// named by `path`. `at` is the index of the `@` token.
    pub(super) fn user_construct(&mut self, path: Vec<String>, at: usize) -> Result<Expr> {
        let unknown = || Error::UnknownConstruct(path.join("::"));
        let g = match self.reg.resolve_path(Some(self.ns), &path) {
            Ok(Value::Obj(c)) => self.reg.class(c).and_then(|d| d.grammar.clone()).ok_or_else(unknown)?,
            _ => return Err(unknown()),
        };
        let saved = self.end_lit_at.take();
        let r = self.run_construct(&g, &path.join("::"), at);
        self.end_lit_at = saved;
        r
    }

    fn run_construct(&mut self, g: &Rc<GrammarDesc>, name: &str, at: usize) -> Result<Expr> {
        let start = self.pos;
        let Some((value, env)) = self.call_rule(g, &g.start, Vec::new())? else {
            return Err(self.failure(name, at));
        };
        let closed = self.pos > start && self.end_lit_at == Some(self.pos - 1);
        if !closed && !self.eat_name("end") {
            if self.furthest > self.pos {
                return Err(self.failure(name, at));
            }
            return Err(self.error(format!("expected 'end' to close @{name}")));
        }
        let e = self.reg.construct_expr(value)?;
        Ok(wrap_bindings(e, &env))
    }

    fn failure(&self, name: &str, at: usize) -> Error {
        let i = self.furthest.max(at).min(self.toks.len() - 1);
        let t = &self.toks[i];
        let near = if t.kind == TokenKind::Eof { "end of input".to_string() } else { format!("'{}'", t.text) };
        let what = if self.expected.is_empty() { "input" } else { self.expected.as_str() };
        Error::syntax(t.pos, format!("@{name}: expected {what} near {near}"))
    }

    fn call_rule(&mut self, root: &Rc<GrammarDesc>, name: &str, args: Vec<Value>) -> Result<Option<(Value, Env)>> {
        let (owner, rule) =
            self.reg.grammar_rule(root, name).ok_or_else(|| Error::User(format!("undefined grammar rule {name}")))?;
        if rule.params.len() != args.len() {
            return Err(Error::Arity(name.to_string(), rule.params.len(), args.len()));
        }
        let mut env = Env::new();
        for (p, v) in rule.params.iter().zip(args) {
            env = env.bind(p, v);
        }
        let ns = self.reg.package_of_class(owner.owner);
        self.reg.enter()?;
        let r = self.alternatives(root, ns, &rule.alternatives, &env);
        self.reg.leave();
        Ok(r?.map(|(v, e)| (v.unwrap_or(Value::Null), e)))
    }

    fn alternatives(
        &mut self,
        root: &Rc<GrammarDesc>,
        ns: Option<ObjId>,
        alts: &[Vec<Term>],
        env: &Env,
    ) -> Result<Option<(Produced, Env)>> {
        for alt in alts {
            let save = self.pos;
            let mut e = env.clone();
            let mut last = None;
            let mut ok = true;
            for t in alt {
                match self.term(root, ns, t, &mut e)? {
                    Some(Some(v)) => last = Some(v),
                    Some(None) => {}
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(Some((last, e)));
            }
            self.pos = save;
        }
        Ok(None)
    }

    fn term(&mut self, root: &Rc<GrammarDesc>, ns: Option<ObjId>, t: &Term, env: &mut Env) -> Result<Option<Produced>> {
        match t {
            Term::Lit(text, parts) => {
                for (i, p) in parts.iter().enumerate() {
                    let tok = self.peek_at(i);
                    if matches!(tok.kind, TokenKind::Str | TokenKind::Eof | TokenKind::Terminal) || tok.text != *p {
                        let at = self.pos + i;
                        self.note_failure(at, &format!("'{text}'"));
                        return Ok(None);
                    }
                }
                self.pos += parts.len();
                if parts.last().map(String::as_str) == Some("end") {
                    self.end_lit_at = Some(self.pos - 1);
                }
                Ok(Some(None))
            }
            Term::Builtin(b) => Ok(self.builtin(*b)?.map(Some)),
            Term::NonTerm(name, args) => {
                let mut argv = Vec::new();
                for a in args {
                    argv.push(self.reg.eval(a, env, &Ctx::new(Value::Null, ns))?);
                }
                // Only the start rule's own terminals can close the construct.
                let saved = self.end_lit_at;
                let r = self.call_rule(root, name, argv);
                self.end_lit_at = saved;
                Ok(r?.map(|(v, _)| Some(v)))
            }
            Term::Bind(var, inner) => match self.term(root, ns, inner, env)? {
                Some(v) => {
                    let v = v.unwrap_or(Value::Null);
                    *env = env.bind(var, v.clone());
                    Ok(Some(Some(v)))
                }
                None => Ok(None),
            },
            Term::Star(inner) | Term::Plus(inner) => {
                if matches!(inner.as_ref(), Term::Builtin(Builtin::Char)) {
                    return Ok(Some(Some(self.raw_text())));
                }
                let mut items = Vec::new();
                loop {
                    let save = self.pos;
                    match self.term(root, ns, inner, env)? {
                        Some(v) if self.pos > save => items.push(v.unwrap_or(Value::Null)),
                        _ => {
                            self.pos = save;
                            break;
                        }
                    }
                }
                if matches!(t, Term::Plus(_)) && items.is_empty() {
                    return Ok(None);
                }
                Ok(Some(Some(Value::seq(items))))
            }
            Term::Opt(inner) => {
                let save = self.pos;
                match self.term(root, ns, inner, env)? {
                    Some(v) => Ok(Some(v)),
                    None => {
                        self.pos = save;
                        Ok(Some(None))
                    }
                }
            }
            Term::Group(alts) => match self.alternatives(root, ns, alts, env)? {
                Some((v, e)) => {
                    *env = e;
                    Ok(Some(v))
                }
                None => Ok(None),
            },
            Term::Action(e) => {
                let v = self.reg.eval(e, env, &Ctx::new(Value::Null, ns))?;
                Ok(Some(Some(v)))
            }
        }
    }

    fn builtin(&mut self, b: Builtin) -> Result<Option<Value>> {
        let tok = self.peek().clone();
        let hit = match (b, tok.kind) {
            (Builtin::Name, TokenKind::Name) if tok.text != "end" => Some(Value::str(&tok.text)),
            (Builtin::Int, TokenKind::Int) => Some(Value::Int(tok.text.parse().map_err(|_| Error::Overflow)?)),
            (Builtin::Str, TokenKind::Str) => Some(Value::str(&tok.text)),
            (Builtin::Char, k) if k != TokenKind::Eof => Some(Value::str(&tok.text)),
            (Builtin::Exp, _) => return self.soft_expr(),
            _ => None,
        };
        match hit {
            Some(v) => {
                self.bump();
                Ok(Some(v))
            }
            None => {
                let what = match b {
                    Builtin::Name => "a name",
                    Builtin::Int => "an integer",
                    Builtin::Str => "a string",
                    _ => "a character",
                };
                self.note_failure(self.pos, what);
                Ok(None)
            }
        }
    }

    /// An embedded expression; syntax errors make the term fail softly.
    fn soft_expr(&mut self) -> Result<Option<Value>> {
        let save = self.pos;
        match self.parse_assign() {
            Ok(e) => Ok(Some(Value::Expr(Rc::new(e)))),
            Err(e) if e.is_syntax() => {
                let at = self.pos;
                self.note_failure(at, "an expression");
                self.pos = save;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Source text from the cursor up to the next `end`, trimmed.
    fn raw_text(&mut self) -> Value {
        let from = self.peek().start;
        let mut i = self.pos;
        while self.toks[i].kind != TokenKind::Eof && !self.toks[i].is_name("end") {
            i += 1;
        }
        let to = self.toks[i].start;
        self.pos = i;
        Value::str(self.src[from.min(to)..to].trim())
    }
}

impl Registry {
    /// Lowers a construct result: AST values are used as is, sugar objects
    /// are desugared and anything else is embedded as a constant.
    pub fn construct_expr(&mut self, v: Value) -> Result<Expr> {
        match v {
            Value::Expr(e) => Ok((*e).clone()),
            Value::Obj(_) if self.is_kind_of(&v, self.k.sugar) => self.desugar(&v),
            other => Ok(Expr::Lit(other)),
        }
    }

    /// Repeatedly calls `desugar()` until an expression comes out.
    pub fn desugar(&mut self, v: &Value) -> Result<Expr> {
        let mut cur = v.clone();
        for _ in 0..64 {
            match cur {
                Value::Expr(e) => return Ok((*e).clone()),
                Value::Obj(o) if self.is_kind_of(&cur, self.k.sugar) => {
                    cur = self.invoke_operation(o, "desugar", Vec::new())?;
                }
                other => return Ok(Expr::Lit(other)),
            }
        }
        Err(Error::User("desugar does not terminate".into()))
    }

    /// Text written by a sugar node's `pprint(out, indent)`.
    pub fn pprint_sugar(&mut self, v: &Value) -> Result<String> {
        let o = v.as_obj().ok_or_else(|| Error::ty("pprint needs an object"))?;
        let before = self.take_output();
        let r = self.invoke_operation(o, "pprint", vec![Value::Null, Value::Int(0)]);
        let text = self.take_output();
        self.output = before;
        r?;
        Ok(text)
    }
}

fn collect_vars(e: &Expr, out: &mut Vec<String>) {
    if let Expr::Var(n) = e {
        if !out.contains(n) {
            out.push(n.clone());
        }
    }
    let _ = map_children(e, &mut |c| {
        collect_vars(c, out);
        Ok(c.clone())
    });
}

/// Closes a synthesized expression over the rule variables it mentions.
fn wrap_bindings(e: Expr, env: &Env) -> Expr {
    let mut vars = Vec::new();
    collect_vars(&e, &mut vars);
    let bs: Vec<(Binder, Expr)> = env
        .bindings()
        .into_iter()
        .rev()
        .filter(|(n, _)| vars.contains(n))
        .map(|(n, v)| (Binder::Name(n), Expr::Lit(v)))
        .collect();
    if bs.is_empty() {
        e
    } else {
        Expr::Let(bs, Box::new(e))
    }
}
