use std::rc::Rc;

use indexmap::IndexMap;

use super::lexer::{tokenize, Token, TokenKind};
use super::{Builtin, GrammarDesc, RuleDesc, Term};
use crate::error::{Error, Result};
use crate::kernel::{AttributeDesc, ConstraintDesc, ConstructorDesc, OperationDesc, Registry, SnapshotEntry, TypeRef};
use crate::value::{ObjId, Value};
use crate::xmap::{MapClause, MappingDesc, Pattern};
use crate::xocl::ast::{BinOp, Binder, CaseArm, Expr, OpDef, Param, TypeExpr};
use crate::xsync::{SyncBinding, SyncRule, SyncSpec};

/// Keywords that end an expression rather than start one.
const NON_START: &[&str] =
    &["end", "then", "else", "elseif", "in", "do", "when", "where", "and", "or", "implies", "mod", "context"];

/// Parameter names plus an optional `iterate` accumulator and its initial value.
type LambdaHeader = (Vec<String>, Option<(String, Box<Expr>)>);

const RESERVED: &[&str] = &["if", "let", "not", "true", "false", "null", "self"];

fn is_reserved(s: &str) -> bool {
    NON_START.contains(&s) || RESERVED.contains(&s)
}

pub struct Parser<'r> {
    pub reg: &'r mut Registry,
    pub(super) toks: Vec<Token>,
    pub(super) pos: usize,
    pub(super) src: Rc<str>,
    /// Package used to resolve construct and class names.
    pub(super) ns: ObjId,
    pub(super) furthest: usize,
    pub(super) expected: String,
    /// Token index of the last `end` matched by a grammar literal.
    pub(super) end_lit_at: Option<usize>,
}

impl<'r> Parser<'r> {
    pub fn new(reg: &'r mut Registry, src: &str) -> Result<Parser<'r>> {
        let toks = tokenize(src)?;
        let ns = reg.root;
        Ok(Parser { reg, toks, pos: 0, src: src.into(), ns, furthest: 0, expected: String::new(), end_lit_at: None })
    }

    // ---- token helpers ----------------------------------------------------

    pub(super) fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub(super) fn peek_at(&self, k: usize) -> &Token {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)]
    }

    pub(super) fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_punct(p)
    }

    pub(super) fn at_name(&self, n: &str) -> bool {
        self.peek().is_name(n)
    }

    pub(super) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(super) fn eat_name(&mut self, n: &str) -> bool {
        if self.at_name(n) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(super) fn error(&self, msg: impl Into<String>) -> Error {
        let t = self.peek();
        let near = if t.kind == TokenKind::Eof { "end of input".to_string() } else { format!("'{}'", t.text) };
        Error::syntax(t.pos, format!("{} near {}", msg.into(), near))
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{p}'")))
        }
    }

    pub(super) fn expect_name(&mut self, n: &str) -> Result<()> {
        if self.eat_name(n) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{n}'")))
        }
    }

    /// Any name token.
    fn ident(&mut self) -> Result<String> {
        if self.peek().kind == TokenKind::Name {
            Ok(self.bump().text)
        } else {
            Err(self.error("expected a name"))
        }
    }

    fn path(&mut self) -> Result<Vec<String>> {
        let mut p = vec![self.ident()?];
        while self.eat_punct("::") {
            p.push(self.ident()?);
        }
        Ok(p)
    }

    pub(super) fn note_failure(&mut self, at: usize, what: &str) {
        if at >= self.furthest {
            self.furthest = at;
            self.expected = what.to_string();
        }
    }

    fn resolve_class(&self, path: &[String]) -> Result<ObjId> {
        match self.reg.resolve_path(Some(self.ns), path)? {
            Value::Obj(c) if self.reg.is_class(c) => Ok(c),
            _ => Err(Error::UnboundPath(path.join("::"))),
        }
    }

    // ---- top level ----------------------------------------------------------

    /// The next top-level form, or `None` at end of input.
    pub fn top_form(&mut self) -> Result<Option<Expr>> {
        loop {
            while self.eat_punct(";") {}
            if self.at_eof() {
                return Ok(None);
            }
            if self.at_name("parserImport") || self.at_name("import") {
                while !self.at_eof() && !self.eat_punct(";") {
                    self.bump();
                }
                continue;
            }
            if self.eat_name("context") {
                return self.context_form().map(Some);
            }
            return self.parse_seq().map(Some);
        }
    }

    pub fn whole_expr(&mut self) -> Result<Expr> {
        let e = self.parse_seq()?;
        if !self.at_eof() {
            return Err(self.error("unexpected token"));
        }
        Ok(e)
    }

    fn context_form(&mut self) -> Result<Expr> {
        let path = self.path()?;
        let target = match self.reg.resolve_path(Some(self.ns), &path)? {
            Value::Obj(o) => o,
            _ => return Err(Error::UnboundPath(path.join("::"))),
        };
        let v = if self.eat_punct("@") {
            if self.reg.is_class(target) {
                self.class_member(target)?;
                Value::Obj(target)
            } else if self.reg.package(target).is_some() {
                let saved = self.ns;
                self.ns = target;
                let r = self.package_member(target);
                self.ns = saved;
                r?
            } else {
                return Err(Error::ty(format!("{} is neither a class nor a package", path.join("::"))));
            }
        } else {
            let body = self.parse_seq()?;
            let d = self.reg.class_mut(target).ok_or_else(|| Error::ty("context invariant needs a class"))?;
            d.constraints.push(Rc::new(ConstraintDesc { name: "Invariant".into(), body: Rc::new(body) }));
            Value::Obj(target)
        };
        self.eat_name("end");
        Ok(Expr::Lit(v))
    }

    // ---- definitions --------------------------------------------------------

    /// `@Class`, `@Package`, `@Map`, `@Snapshot` or a named `@Operation`
    /// inside package `p`; the `@` is already consumed.
    fn package_member(&mut self, p: ObjId) -> Result<Value> {
        let kw = self.ident()?;
        self.definition(&kw, p)
    }

    fn definition(&mut self, kw: &str, p: ObjId) -> Result<Value> {
        match kw {
            "Class" => self.class_def(p).map(Value::Obj),
            "Package" => self.package_def(p).map(Value::Obj),
            "Map" => self.map_def(p).map(Value::Obj),
            "Snapshot" => self.snapshot_def(),
            "Operation" => {
                let def = Rc::new(self.op_def()?);
                let v = self.reg.eval(
                    &Expr::Op(def.clone()),
                    &crate::env::Env::new(),
                    &crate::xocl::Ctx::new(Value::Null, Some(p)),
                )?;
                self.reg.package_mut(p).unwrap().contents.insert(def.name.clone(), v.clone());
                Ok(v)
            }
            other => Err(self.error(format!("unexpected package member @{other}"))),
        }
    }

    fn package_def(&mut self, owner: ObjId) -> Result<ObjId> {
        let name = self.ident()?;
        let p = self.reg.new_package(&name, Some(owner));
        if self.eat_name("imports") {
            loop {
                let path = self.path()?;
                match self.reg.resolve_path(Some(self.ns), &path)? {
                    Value::Obj(i) if self.reg.package(i).is_some() => self.reg.package_mut(p).unwrap().imports.push(i),
                    _ => return Err(Error::UnboundPath(path.join("::"))),
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let saved = self.ns;
        self.ns = p;
        let r = self.package_body(p);
        self.ns = saved;
        r?;
        self.expect_name("end")?;
        Ok(p)
    }

    fn package_body(&mut self, p: ObjId) -> Result<()> {
        while self.eat_punct("@") {
            self.package_member(p)?;
        }
        Ok(())
    }

    fn class_header(&mut self, owner: ObjId) -> Result<ObjId> {
        let mut is_abstract = self.eat_name("isAbstract") || self.eat_name("isabstract");
        let name = self.ident()?;
        is_abstract |= self.eat_name("isAbstract") || self.eat_name("isabstract");
        let mut parents = Vec::new();
        if self.eat_name("extends") {
            loop {
                let path = self.path()?;
                parents.push(self.resolve_class(&path)?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let meta = if self.eat_name("metaclass") {
            let p = self.path()?;
            Some(self.resolve_class(&p)?)
        } else {
            None
        };
        let c = self.reg.new_class(&name, &parents, Some(owner));
        if let Some(m) = meta {
            self.reg.cell_mut(c).of = m;
        }
        self.reg.class_mut(c).unwrap().is_abstract = is_abstract;
        Ok(c)
    }

    fn class_def(&mut self, owner: ObjId) -> Result<ObjId> {
        let c = self.class_header(owner)?;
        while self.eat_punct("@") {
            self.class_member(c)?;
        }
        self.expect_name("end")?;
        Ok(c)
    }

    fn map_def(&mut self, owner: ObjId) -> Result<ObjId> {
        let name = self.ident()?;
        let mut domain = Vec::new();
        let mut range = None;
        if self.eat_punct("(") {
            if !self.at_punct(")") {
                loop {
                    domain.push(self.path()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            self.expect_punct("->")?;
            range = Some(self.path()?);
        }
        let c = self.reg.new_class(&name, &[], Some(owner));
        self.reg.cell_mut(c).of = self.reg.k.mapping;
        self.reg.class_mut(c).unwrap().mapping =
            Some(Rc::new(MappingDesc { name, domain, range, clauses: Vec::new() }));
        while self.eat_punct("@") {
            self.class_member(c)?;
        }
        self.expect_name("end")?;
        Ok(c)
    }

    /// One `@Member` of class `c`; the `@` is already consumed.
    fn class_member(&mut self, c: ObjId) -> Result<()> {
        let kw = self.ident()?;
        match kw.as_str() {
            "Attribute" => {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.type_expr()?;
                let init = if self.eat_punct("=") { Some(Rc::new(self.parse_assign()?)) } else { None };
                if self.eat_punct("(") {
                    while !self.eat_punct(")") {
                        if self.at_eof() {
                            return Err(self.error("expected ')'"));
                        }
                        self.bump();
                    }
                }
                self.expect_name("end")?;
                self.reg.add_attribute(c, AttributeDesc { name, ty: TypeRef::Pending(ty), init })?;
            }
            "Operation" | "AbstractOp" => {
                let def = self.op_def()?;
                self.reg.add_operation(
                    c,
                    OperationDesc {
                        name: def.name,
                        params: def.params,
                        body: def.body,
                        is_abstract: kw == "AbstractOp",
                    },
                );
            }
            "Constraint" => {
                let name = self.ident()?;
                let body = self.parse_seq()?;
                self.expect_name("end")?;
                let d = self.reg.class_mut(c).unwrap();
                d.constraints.retain(|k| k.name != name);
                d.constraints.push(Rc::new(ConstraintDesc { name, body: Rc::new(body) }));
            }
            "Constructor" => {
                self.expect_punct("(")?;
                let mut params = Vec::new();
                if !self.at_punct(")") {
                    loop {
                        params.push(self.ident()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                while self.eat_punct("!") || self.eat_punct("?") {}
                let body = if self.at_name("end") { None } else { Some(Rc::new(self.parse_seq()?)) };
                self.expect_name("end")?;
                let d = self.reg.class_mut(c).unwrap();
                d.constructors.retain(|k| k.params.len() != params.len());
                d.constructors.push(Rc::new(ConstructorDesc { params, body }));
            }
            "Grammar" => {
                let g = self.grammar_def(c)?;
                self.reg.class_mut(c).unwrap().grammar = Some(Rc::new(g));
            }
            "Clause" => {
                let clause = self.clause_def()?;
                let d = self.reg.class_mut(c).unwrap();
                let Some(m) = d.mapping.as_mut() else {
                    return Err(Error::ty(format!("@Clause outside a mapping in {}", d.name)));
                };
                let m = Rc::make_mut(m);
                if m.clauses.iter().any(|k| k.name == clause.name) {
                    return Err(Error::User(format!("duplicate clause {} in {}", clause.name, m.name)));
                }
                m.clauses.push(Rc::new(clause));
            }
            other => return Err(self.error(format!("unexpected class member @{other}"))),
        }
        Ok(())
    }

    fn type_expr(&mut self) -> Result<TypeExpr> {
        if (self.at_name("Set") || self.at_name("Seq")) && self.peek_at(1).is_punct("(") {
            let set = self.bump().text == "Set";
            self.bump();
            let t = Box::new(self.type_expr()?);
            self.expect_punct(")")?;
            return Ok(if set { TypeExpr::Set(t) } else { TypeExpr::Seq(t) });
        }
        Ok(TypeExpr::Named(self.path()?))
    }

    /// `[name](p : T, ...)[: T] body end`, after the `@Operation` keyword.
    fn op_def(&mut self) -> Result<OpDef> {
        let name = if self.peek().kind == TokenKind::Name && self.peek_at(1).is_punct("(") {
            self.ident()?
        } else {
            "anonymous".to_string()
        };
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                let n = self.ident()?;
                let ty = if self.eat_punct(":") { Some(self.type_expr()?) } else { None };
                params.push(Param { name: n, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let ret = if self.eat_punct(":") { Some(self.type_expr()?) } else { None };
        let body = if self.at_name("end") { Expr::Null } else { self.parse_seq()? };
        self.expect_name("end")?;
        Ok(OpDef { name, params, ret, body: Rc::new(body) })
    }

    fn snapshot_def(&mut self) -> Result<Value> {
        let name = if self.peek().kind == TokenKind::Name && !self.peek_at(1).is_punct("=") {
            self.ident()?
        } else {
            "snapshot".to_string()
        };
        let mut entries = Vec::new();
        while !self.at_name("end") {
            let label = self.ident()?;
            self.expect_punct("=")?;
            let path = self.path()?;
            let class = if path.len() == 1 { Expr::Var(path[0].clone()) } else { Expr::Path(path) };
            let mut fields = Vec::new();
            if self.eat_punct("[") {
                while !self.eat_punct("]") {
                    let f = self.ident()?;
                    self.expect_punct("=")?;
                    fields.push((f, self.parse_assign()?));
                    if !self.eat_punct(",") && !self.eat_punct(";") && !self.at_punct("]") {
                        return Err(self.error("expected ',' or ']'"));
                    }
                }
            }
            entries.push(SnapshotEntry { label, class, fields });
            while self.eat_punct(";") || self.eat_punct(",") {}
        }
        self.expect_name("end")?;
        let snap = self.reg.load_snapshot(&name, &entries, Some(self.ns))?;
        let t = Value::empty_table();
        if let Value::Table(rows) = &t {
            for (l, id) in &snap.labels {
                rows.borrow_mut().push((Value::str(l), Value::Obj(*id)));
            }
        }
        Ok(t)
    }

    // ---- grammars -----------------------------------------------------------

    fn grammar_def(&mut self, owner: ObjId) -> Result<GrammarDesc> {
        let mut extends = Vec::new();
        if self.eat_name("extends") {
            loop {
                let path = self.path()?;
                if self.eat_punct(".") {
                    self.expect_name("grammar")?;
                }
                match self.reg.resolve_path(Some(self.ns), &path) {
                    Ok(Value::Obj(c)) if self.reg.class(c).is_some_and(|d| d.grammar.is_some()) => extends.push(c),
                    // The built-in expression grammar stands in for OCL.
                    _ if path.last().map(String::as_str) == Some("OCL") => {}
                    _ => return Err(Error::UnboundPath(format!("{}.grammar", path.join("::")))),
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let mut rules = IndexMap::new();
        while !self.at_name("end") {
            let r = self.rule_def()?;
            rules.insert(r.name.clone(), Rc::new(r));
        }
        self.expect_name("end")?;
        let start = self.reg.class(owner).unwrap().name.clone();
        let mut g = GrammarDesc { owner, extends, rules, start };
        let known =
            |n: &str, reg: &Registry, g: &GrammarDesc| g.rules.contains_key(n) || reg.grammar_rule(g, n).is_some();
        let mut rules = g.rules.clone();
        for r in rules.values_mut() {
            let mut rr = (**r).clone();
            for alt in rr.alternatives.iter_mut() {
                for t in alt.iter_mut() {
                    fix_builtins(t, &|n| known(n, self.reg, &g))?;
                }
            }
            *r = Rc::new(rr);
        }
        g.rules = rules;
        Ok(g)
    }

    fn rule_def(&mut self) -> Result<RuleDesc> {
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_punct("(") {
            if !self.at_punct(")") {
                loop {
                    params.push(self.ident()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        }
        self.expect_punct("::=")?;
        let alternatives = self.rule_alts()?;
        self.eat_punct(".");
        Ok(RuleDesc { name, params, alternatives })
    }

    fn rule_alts(&mut self) -> Result<Vec<Vec<Term>>> {
        let mut alts = vec![self.rule_seq()?];
        while self.eat_punct("|") {
            alts.push(self.rule_seq()?);
        }
        Ok(alts)
    }

    fn at_rule_start(&self) -> bool {
        if self.peek().kind != TokenKind::Name {
            return false;
        }
        if self.peek_at(1).is_punct("::=") {
            return true;
        }
        if !self.peek_at(1).is_punct("(") {
            return false;
        }
        let mut k = 2;
        loop {
            let t = self.peek_at(k);
            if t.kind == TokenKind::Eof {
                return false;
            }
            if t.is_punct(")") {
                return self.peek_at(k + 1).is_punct("::=");
            }
            if !(t.kind == TokenKind::Name || t.is_punct(",")) {
                return false;
            }
            k += 1;
        }
    }

    fn rule_seq(&mut self) -> Result<Vec<Term>> {
        let mut terms = Vec::new();
        loop {
            let t = self.peek();
            let stop = t.kind == TokenKind::Eof
                || ["|", ")", "]", ".", "}"].iter().any(|p| t.is_punct(p))
                || t.is_name("end")
                || self.at_rule_start();
            if stop {
                return Ok(terms);
            }
            terms.push(self.rule_elem()?);
        }
    }

    fn rule_elem(&mut self) -> Result<Term> {
        if self.peek().kind == TokenKind::Name && self.peek_at(1).is_punct("=") {
            let v = self.ident()?;
            self.bump();
            return Ok(Term::Bind(v, Box::new(self.rule_suffixed()?)));
        }
        self.rule_suffixed()
    }

    fn rule_suffixed(&mut self) -> Result<Term> {
        let a = self.rule_atom()?;
        Ok(if self.eat_punct("*") {
            Term::Star(Box::new(a))
        } else if self.eat_punct("+") {
            Term::Plus(Box::new(a))
        } else if self.eat_punct("?") {
            Term::Opt(Box::new(a))
        } else {
            a
        })
    }

    fn rule_atom(&mut self) -> Result<Term> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Terminal => {
                self.bump();
                let parts: Vec<String> =
                    tokenize(&t.text)?.into_iter().filter(|x| x.kind != TokenKind::Eof).map(|x| x.text).collect();
                if parts.is_empty() {
                    return Err(Error::syntax(t.pos, "empty terminal"));
                }
                Ok(Term::Lit(t.text, parts))
            }
            TokenKind::Name => {
                self.bump();
                let mut args = Vec::new();
                if self.eat_punct("^") {
                    self.expect_punct("(")?;
                    if !self.at_punct(")") {
                        loop {
                            args.push(self.parse_assign()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                }
                Ok(Term::NonTerm(t.text, args))
            }
            _ if t.is_punct("(") => {
                self.bump();
                let alts = self.rule_alts()?;
                self.expect_punct(")")?;
                Ok(Term::Group(alts))
            }
            _ if t.is_punct("[") => {
                self.bump();
                let alts = self.rule_alts()?;
                self.expect_punct("]")?;
                Ok(Term::Opt(Box::new(Term::Group(alts))))
            }
            _ if t.is_punct("{") => {
                self.bump();
                let e = self.parse_seq()?;
                self.expect_punct("}")?;
                Ok(Term::Action(Rc::new(e)))
            }
            _ => Err(self.error("expected a grammar term")),
        }
    }

    // ---- mappings and patterns ---------------------------------------------

    fn clause_def(&mut self) -> Result<MapClause> {
        let name = self.ident()?;
        let mut patterns = vec![self.pattern()?];
        while self.eat_punct(",") {
            patterns.push(self.pattern()?);
        }
        let mut vars = Vec::new();
        for p in &patterns {
            p.collect_vars(&mut vars);
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::PatternCollision(v.clone()));
            }
        }
        let guard = if self.eat_name("when") { Some(self.parse_seq()?) } else { None };
        self.expect_name("do")?;
        let template = self.parse_seq()?;
        let mut wheres = Vec::new();
        if self.eat_name("where") {
            while !self.at_name("end") {
                let v = self.ident()?;
                self.expect_punct("=")?;
                wheres.push((v, self.parse_assign()?));
                while self.eat_punct(";") || self.eat_punct(",") {}
            }
        }
        self.expect_name("end")?;
        Ok(MapClause { name, patterns, guard, template, wheres })
    }

    pub(super) fn pattern(&mut self) -> Result<Pattern> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Int => {
                self.bump();
                return Ok(Pattern::Const(Value::Int(t.text.parse().map_err(|_| Error::Overflow)?)));
            }
            TokenKind::Str => {
                self.bump();
                return Ok(Pattern::Const(Value::str(&t.text)));
            }
            TokenKind::Name => {}
            _ => return Err(self.error("expected a pattern")),
        }
        match t.text.as_str() {
            "true" | "false" => {
                self.bump();
                return Ok(Pattern::Const(Value::Bool(t.text == "true")));
            }
            "null" => {
                self.bump();
                return Ok(Pattern::Const(Value::Null));
            }
            "Seq" if self.peek_at(1).is_punct("{") => {
                self.bump();
                self.bump();
                let mut ps = Vec::new();
                if !self.at_punct("}") {
                    loop {
                        ps.push(self.pattern()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("}")?;
                return Ok(Pattern::Seq(ps));
            }
            _ => {}
        }
        if self.peek_at(1).is_punct("=") {
            let v = self.ident()?;
            self.bump();
            return Ok(Pattern::Bind(v, Box::new(self.pattern()?)));
        }
        let path = self.path()?;
        if self.eat_punct("[") {
            let mut fields = Vec::new();
            while !self.eat_punct("]") {
                let f = self.ident()?;
                self.expect_punct("=")?;
                fields.push((f, self.pattern()?));
                if !self.eat_punct(",") && !self.eat_punct(";") && !self.at_punct("]") {
                    return Err(self.error("expected ',' or ']'"));
                }
            }
            if let Ok(c) = self.resolve_class(&path) {
                for (f, _) in &fields {
                    if self.reg.attribute(c, f).is_none() {
                        return Err(Error::NoSlot(f.clone()));
                    }
                }
            }
            return Ok(Pattern::Class { path, fields });
        }
        if path.len() == 1 && self.at_punct("->") && self.peek_at(1).is_name("including") {
            self.bump();
            self.bump();
            self.expect_punct("(")?;
            let p = self.pattern()?;
            self.expect_punct(")")?;
            return Ok(Pattern::SetIncluding(path[0].clone(), Box::new(p)));
        }
        if path.len() > 1 {
            return Ok(Pattern::Class { path, fields: Vec::new() });
        }
        Ok(Pattern::Var(path[0].clone()))
    }

    fn sync_def(&mut self) -> Result<SyncSpec> {
        self.expect_punct("@")?;
        self.expect_name("Scope")?;
        let scope = self.parse_seq()?;
        self.expect_name("end")?;
        let mut rules = Vec::new();
        while self.eat_punct("@") {
            self.expect_name("Rule")?;
            let name = self.ident()?;
            let priority = match self.peek().kind {
                TokenKind::Int => self.bump().text.parse().map_err(|_| Error::Overflow)?,
                _ if self.at_punct("-") && self.peek_at(1).kind == TokenKind::Int => {
                    self.bump();
                    -self.bump().text.parse::<i64>().map_err(|_| Error::Overflow)?
                }
                _ => 0,
            };
            let mut bindings = Vec::new();
            while !self.at_name("do") && !self.at_name("when") {
                let var = self.ident()?;
                self.expect_punct("=")?;
                let pattern = self.pattern()?;
                let guard = if self.at_name("when") {
                    self.bump();
                    Some(self.parse_assign()?)
                } else {
                    None
                };
                bindings.push(SyncBinding { var, pattern, guard });
                while self.eat_punct(";") || self.eat_punct(",") {}
            }
            let when = if self.eat_name("when") { Some(self.parse_assign()?) } else { None };
            self.expect_name("do")?;
            let action = if self.at_name("end") { Expr::Null } else { self.parse_seq()? };
            self.expect_name("end")?;
            if rules.iter().any(|r: &SyncRule| r.name == name) {
                return Err(Error::User(format!("duplicate sync rule {name}")));
            }
            rules.push(SyncRule { name, priority, bindings, when, action });
        }
        self.expect_name("end")?;
        Ok(SyncSpec { scope, rules })
    }

    // ---- expressions --------------------------------------------------------

    fn can_start_expr(&self) -> bool {
        let t = self.peek();
        match t.kind {
            TokenKind::Int | TokenKind::Str => true,
            TokenKind::Name => !NON_START.contains(&t.text.as_str()),
            TokenKind::Punct => ["(", "[|", "<", "@", "-"].contains(&t.text.as_str()),
            _ => false,
        }
    }

    pub fn parse_seq(&mut self) -> Result<Expr> {
        let first = self.parse_assign()?;
        if self.at_punct(";") {
            let save = self.pos;
            self.bump();
            if self.can_start_expr() {
                let rest = self.parse_seq()?;
                return Ok(Expr::seq(first, rest));
            }
            // A trailing ';' before a closing keyword is tolerated, but not
            // consumed at top level where it separates forms.
            if self.at_eof() {
                self.pos = save;
            }
        }
        Ok(first)
    }

    pub fn parse_assign(&mut self) -> Result<Expr> {
        let lhs = self.parse_bin(1)?;
        if self.at_punct(":=") {
            if !matches!(lhs, Expr::Var(_) | Expr::Dot(..) | Expr::Path(_)) {
                return Err(self.error("cannot assign to this expression"));
            }
            self.bump();
            let rhs = self.parse_assign()?;
            return Ok(Expr::assign(lhs, rhs));
        }
        Ok(lhs)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let t = self.peek();
        match t.kind {
            TokenKind::Punct => BinOp::from_symbol(&t.text),
            TokenKind::Name if matches!(t.text.as_str(), "and" | "or" | "implies" | "mod") => {
                BinOp::from_symbol(&t.text)
            }
            _ => None,
        }
    }

    fn parse_bin(&mut self, min: u8) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek_binop() {
            let lv = op.level();
            if lv < min {
                break;
            }
            self.bump();
            let rhs = self.parse_bin(lv + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if self.eat_name("not") {
            return Ok(Expr::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat_punct("-") {
            if self.peek().kind == TokenKind::Int && !self.peek_at(1).is_punct(".") && !self.peek_at(1).is_punct("->") {
                let t = self.bump();
                let n: i64 = format!("-{}", t.text).parse().map_err(|_| Error::Overflow)?;
                return Ok(Expr::Int(n));
            }
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        self.parse_postfix()
    }

    fn args(&mut self, close: &str) -> Result<Vec<Expr>> {
        let mut out = Vec::new();
        if self.eat_punct(close) {
            return Ok(out);
        }
        loop {
            out.push(self.parse_assign()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(close)?;
        Ok(out)
    }

    /// `x |`, `x, y |` or `x acc = init |` after `->op(`.
    fn lambda_header(&mut self) -> Result<Option<LambdaHeader>> {
        let save = self.pos;
        let mut vars = Vec::new();
        loop {
            let t = self.peek();
            if t.kind != TokenKind::Name || is_reserved(&t.text) {
                self.pos = save;
                return Ok(None);
            }
            vars.push(self.bump().text);
            if self.eat_punct("|") {
                return Ok(Some((vars, None)));
            }
            if self.eat_punct(",") {
                continue;
            }
            if vars.len() == 1 && self.peek().kind == TokenKind::Name && self.peek_at(1).is_punct("=") {
                let acc = self.bump().text;
                self.bump();
                match self.parse_assign() {
                    Ok(init) => {
                        self.eat_punct(";");
                        if self.eat_punct("|") {
                            return Ok(Some((vars, Some((acc, Box::new(init))))));
                        }
                    }
                    Err(e) if !e.is_syntax() => return Err(e),
                    Err(_) => {}
                }
            }
            self.pos = save;
            return Ok(None);
        }
    }

    fn parse_postfix(&mut self) -> Result<Expr> {
        let mut e = self.parse_primary()?;
        loop {
            if self.at_punct(".") && self.peek_at(1).kind == TokenKind::Name {
                self.bump();
                let name = self.bump().text;
                if self.eat_punct("(") {
                    let args = self.args(")")?;
                    e = Expr::Send { recv: Box::new(e), name, args };
                } else {
                    e = Expr::Dot(Box::new(e), name);
                }
            } else if self.at_punct("->") && self.peek_at(1).kind == TokenKind::Name {
                self.bump();
                let op = self.bump().text;
                if self.eat_punct("(") {
                    if let Some((vars, acc)) = self.lambda_header()? {
                        let body = self.parse_seq()?;
                        self.expect_punct(")")?;
                        e = Expr::Iter { recv: Box::new(e), op, vars, acc, body: Box::new(body) };
                    } else {
                        let args = self.args(")")?;
                        e = Expr::Arrow { recv: Box::new(e), op, args };
                    }
                } else {
                    e = Expr::Arrow { recv: Box::new(e), op, args: Vec::new() };
                }
            } else if self.at_punct("(") {
                self.bump();
                let args = self.args(")")?;
                e = Expr::Call { callee: Box::new(e), args };
            } else if self.at_punct("[")
                && matches!(e, Expr::Var(_) | Expr::Path(_))
                && (self.peek_at(1).is_punct("]")
                    || (self.peek_at(1).kind == TokenKind::Name && self.peek_at(2).is_punct("=")))
            {
                self.bump();
                let mut fields = Vec::new();
                while !self.eat_punct("]") {
                    let f = self.ident()?;
                    self.expect_punct("=")?;
                    fields.push((f, self.parse_assign()?));
                    if !self.eat_punct(",") && !self.eat_punct(";") && !self.at_punct("]") {
                        return Err(self.error("expected ',' or ']'"));
                    }
                }
                e = Expr::ObjectLit { class: Box::new(e), fields };
            } else {
                return Ok(e);
            }
        }
    }

    fn parse_primary(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Int => {
                self.bump();
                return t.text.parse().map(Expr::Int).map_err(|_| Error::Overflow);
            }
            TokenKind::Str => {
                self.bump();
                return Ok(Expr::Str(t.text));
            }
            TokenKind::Name => return self.name_primary(),
            _ => {}
        }
        if self.eat_punct("(") {
            let e = self.parse_seq()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        if self.eat_punct("[|") {
            let e = self.parse_seq()?;
            self.expect_punct("|]")?;
            return Ok(Expr::Quote(Box::new(e)));
        }
        if self.eat_punct("<") {
            let e = self.parse_bin(BinOp::Add.level())?;
            self.expect_punct(">")?;
            return Ok(Expr::Drop(Box::new(e)));
        }
        if self.at_punct("@") {
            return self.construct();
        }
        Err(self.error("expected an expression"))
    }

    fn name_primary(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        let next_brace = self.peek_at(1).is_punct("{");
        match t.text.as_str() {
            "true" | "false" => {
                self.bump();
                Ok(Expr::Bool(t.text == "true"))
            }
            "null" => {
                self.bump();
                Ok(Expr::Null)
            }
            "self" => {
                self.bump();
                Ok(Expr::SelfRef)
            }
            "if" => {
                self.bump();
                self.if_rest()
            }
            "let" => {
                self.bump();
                self.let_rest()
            }
            "Set" | "Seq" if next_brace => {
                self.bump();
                self.bump();
                let mut xs = Vec::new();
                if self.eat_punct("}") {
                    return Ok(if t.text == "Set" { Expr::SetLit(xs) } else { Expr::SeqLit(xs) });
                }
                loop {
                    xs.push(self.parse_assign()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                if t.text == "Seq" && self.eat_punct("|") {
                    let rest = self.parse_assign()?;
                    self.expect_punct("}")?;
                    return Ok(Expr::Cons(xs, Box::new(rest)));
                }
                self.expect_punct("}")?;
                Ok(if t.text == "Set" { Expr::SetLit(xs) } else { Expr::SeqLit(xs) })
            }
            "format" if self.peek_at(1).is_punct("(") => {
                self.bump();
                self.bump();
                let channel = self.parse_assign()?;
                self.expect_punct(",")?;
                let control = self.parse_assign()?;
                let args = if self.eat_punct(",") { Some(Box::new(self.parse_assign()?)) } else { None };
                self.expect_punct(")")?;
                Ok(Expr::Format { channel: Box::new(channel), control: Box::new(control), args })
            }
            s if is_reserved(s) => Err(self.error("expected an expression")),
            _ => {
                let p = self.path()?;
                Ok(if p.len() == 1 { Expr::Var(p.into_iter().next().unwrap()) } else { Expr::Path(p) })
            }
        }
    }

    fn if_rest(&mut self) -> Result<Expr> {
        let c = self.parse_seq()?;
        self.expect_name("then")?;
        let t = self.parse_seq()?;
        let e = if self.eat_name("elseif") {
            return Ok(Expr::if_(c, t, Some(self.if_rest()?)));
        } else if self.eat_name("else") {
            Some(self.parse_seq()?)
        } else {
            None
        };
        self.expect_name("end")?;
        Ok(Expr::if_(c, t, e))
    }

    fn let_rest(&mut self) -> Result<Expr> {
        let mut bs = Vec::new();
        loop {
            let b = if self.eat_punct("<") {
                let d = self.parse_bin(BinOp::Add.level())?;
                self.expect_punct(">")?;
                Binder::Drop(Box::new(d))
            } else {
                Binder::Name(self.ident()?)
            };
            self.expect_punct("=")?;
            bs.push((b, self.parse_assign()?));
            if self.eat_punct(";") || self.eat_name("then") || self.eat_punct(",") {
                if self.at_name("in") {
                    break;
                }
                continue;
            }
            break;
        }
        self.expect_name("in")?;
        let body = self.parse_seq()?;
        self.expect_name("end")?;
        Ok(Expr::Let(bs, Box::new(body)))
    }

    fn block_until(&mut self, stops: &[&str]) -> Result<Expr> {
        if stops.iter().any(|s| self.at_name(s)) {
            return Ok(Expr::Null);
        }
        self.parse_seq()
    }

    fn construct(&mut self) -> Result<Expr> {
        let at = self.pos;
        self.expect_punct("@")?;
        let name = self.ident()?;
        match name.as_str() {
            "While" => {
                let c = self.parse_seq()?;
                self.expect_name("do")?;
                let body = self.block_until(&["end"])?;
                self.expect_name("end")?;
                Ok(Expr::While(Box::new(c), Box::new(body)))
            }
            "For" => {
                let var = self.ident()?;
                self.expect_name("in")?;
                let coll = self.parse_seq()?;
                self.expect_name("do")?;
                let body = self.block_until(&["end"])?;
                self.expect_name("end")?;
                Ok(Expr::For { var, coll: Box::new(coll), body: Box::new(body) })
            }
            "Find" => {
                self.expect_punct("(")?;
                let var = self.ident()?;
                self.expect_punct(",")?;
                let coll = self.parse_seq()?;
                self.expect_punct(")")?;
                let when = if self.eat_name("when") { Some(Box::new(self.parse_seq()?)) } else { None };
                self.expect_name("do")?;
                let body = self.block_until(&["else", "end"])?;
                let otherwise = if self.eat_name("else") { Some(Box::new(self.block_until(&["end"])?)) } else { None };
                self.expect_name("end")?;
                Ok(Expr::Find { var, coll: Box::new(coll), when, body: Box::new(body), otherwise })
            }
            "Case" | "TypeCase" => {
                self.expect_punct("(")?;
                let scrutinee = Box::new(self.parse_seq()?);
                self.expect_punct(")")?;
                let mut arms = Vec::new();
                while !self.at_name("else") && !self.at_name("end") {
                    let test = self.parse_assign()?;
                    self.expect_name("do")?;
                    let body = self.block_until(&["end"])?;
                    self.expect_name("end")?;
                    arms.push(CaseArm { test, body });
                }
                let default = if self.eat_name("else") { Some(Box::new(self.block_until(&["end"])?)) } else { None };
                self.expect_name("end")?;
                Ok(if name == "Case" {
                    Expr::Case { scrutinee, arms, default }
                } else {
                    Expr::TypeCase { scrutinee, arms, default }
                })
            }
            "Operation" => Ok(Expr::Op(Rc::new(self.op_def()?))),
            "XSync" => Ok(Expr::Sync(Rc::new(self.sync_def()?))),
            "Class" | "Package" | "Map" | "Snapshot" => {
                let ns = self.ns;
                self.definition(&name, ns).map(Expr::Lit)
            }
            _ => {
                let mut path = vec![name];
                while self.eat_punct("::") {
                    path.push(self.ident()?);
                }
                self.user_construct(path, at)
            }
        }
    }
}

/// Turns references to undefined rules named like a builtin into builtins.
fn fix_builtins(t: &mut Term, known: &dyn Fn(&str) -> bool) -> Result<()> {
    match t {
        Term::NonTerm(n, args) if !known(n) => match Builtin::from_name(n) {
            Some(b) if args.is_empty() => *t = Term::Builtin(b),
            _ => return Err(Error::User(format!("undefined grammar rule {n}"))),
        },
        Term::Bind(_, x) | Term::Star(x) | Term::Plus(x) | Term::Opt(x) => fix_builtins(x, known)?,
        Term::Group(alts) => {
            for alt in alts {
                for x in alt {
                    fix_builtins(x, known)?;
                }
            }
        }
        _ => {}
    }
    Ok(())
}
