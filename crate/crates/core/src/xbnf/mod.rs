//! Grammars, the construct dispatcher and the expression parser.

mod engine;
pub mod lexer;
mod parser;

use std::rc::Rc;

use indexmap::IndexMap;

use crate::env::Env;
use crate::error::Result;
use crate::kernel::Registry;
use crate::value::{ObjId, Value};
use crate::xocl::ast::Expr;
use crate::xocl::Ctx;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::Parser;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Name,
    Int,
    Str,
    Char,
    Exp,
}

impl Builtin {
    pub fn from_name(n: &str) -> Option<Builtin> {
        Some(match n {
            "Name" => Builtin::Name,
            "Int" => Builtin::Int,
            "Str" => Builtin::Str,
            "Char" => Builtin::Char,
            "Exp" => Builtin::Exp,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// A quoted terminal, pre-split into token texts.
    Lit(String, Vec<String>),
    NonTerm(String, Vec<Expr>),
    Builtin(Builtin),
    Bind(String, Box<Term>),
    Star(Box<Term>),
    Plus(Box<Term>),
    Opt(Box<Term>),
    Group(Vec<Vec<Term>>),
    Action(Rc<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDesc {
    pub name: String,
    pub params: Vec<String>,
    pub alternatives: Vec<Vec<Term>>,
}

#[derive(Debug, Clone)]
pub struct GrammarDesc {
    pub owner: ObjId,
    /// Classes whose grammars this one extends, in declaration order.
    pub extends: Vec<ObjId>,
    pub rules: IndexMap<String, Rc<RuleDesc>>,
    pub start: String,
}

impl Registry {
    /// Finds a rule locally, then through the extended grammars.
    pub fn grammar_rule(&self, g: &GrammarDesc, name: &str) -> Option<(Rc<GrammarDesc>, Rc<RuleDesc>)> {
        let mut seen = Vec::new();
        self.grammar_rule_in(g, name, &mut seen)
    }

    fn grammar_rule_in(
        &self,
        g: &GrammarDesc,
        name: &str,
        seen: &mut Vec<ObjId>,
    ) -> Option<(Rc<GrammarDesc>, Rc<RuleDesc>)> {
        if seen.contains(&g.owner) {
            return None;
        }
        seen.push(g.owner);
        if let Some(r) = g.rules.get(name) {
            let own = self.class(g.owner).and_then(|d| d.grammar.clone())?;
            return Some((own, r.clone()));
        }
        for p in &g.extends {
            if let Some(pg) = self.class(*p).and_then(|d| d.grammar.clone()) {
                if let Some(hit) = self.grammar_rule_in(&pg, name, seen) {
                    return Some(hit);
                }
            }
        }
        None
    }

    /// Loads construct text: every top-level form is parsed and evaluated in
    /// turn, so later forms may use grammars and classes defined earlier.
    pub fn load_str(&mut self, src: &str) -> Result<Vec<Value>> {
        let mut env = Env::new();
        self.load_with_env(src, &mut env)
    }

    /// As [`Registry::load_str`], threading a persistent top-level environment.
    pub fn load_with_env(&mut self, src: &str, env: &mut Env) -> Result<Vec<Value>> {
        let mut p = Parser::new(self, src)?;
        let mut out = Vec::new();
        while let Some(form) = p.top_form()? {
            let v = p.reg.eval_form(&form, env)?;
            out.push(v);
        }
        self.resolve_types()?;
        Ok(out)
    }

    /// Parses one whole expression.
    pub fn parse_expr(&mut self, src: &str) -> Result<Expr> {
        let mut p = Parser::new(self, src)?;
        p.whole_expr()
    }

    /// Parses and evaluates source text, returning the last value.
    pub fn eval_str(&mut self, src: &str) -> Result<Value> {
        Ok(self.load_str(src)?.pop().unwrap_or(Value::Null))
    }

    /// Evaluates a top-level form. Assigning to a variable that is bound
    /// nowhere introduces it into `env`.
    pub(crate) fn eval_form(&mut self, e: &Expr, env: &mut Env) -> Result<Value> {
        let ctx = Ctx::new(Value::Null, Some(self.root));
        if let Expr::Assign(place, v) = e {
            if let Expr::Var(n) = place.as_ref() {
                if !env.binds(n) && self.resolve_name(Some(self.root), n).is_none() {
                    let v = self.eval(v, env, &ctx)?;
                    *env = env.bind(n, v.clone());
                    return Ok(v);
                }
            }
        }
        self.eval(e, env, &ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn state_construct_round_trip() {
        let mut reg = Registry::new();
        reg.load_str(
            "@Class State
               @Attribute name : String end
               @Constructor(name) end
               @Grammar
                 State ::= name = Name {[| State(name) |]}
               end
             end",
        )
        .unwrap();
        let v = reg.eval_str("@State X end").unwrap();
        assert_eq!(reg.display(&v), "<State X>");
    }

    #[test]
    fn unknown_construct() {
        let mut reg = Registry::new();
        assert!(matches!(reg.eval_str("@Nope x end"), Err(Error::UnknownConstruct(_))));
    }

    #[test]
    fn grammar_with_drops_and_groups() {
        let mut reg = Registry::new();
        reg.load_str(
            "@Class Calc
               @Grammar
                 Calc ::= e = Add 'end' { e }.
                 Add ::= n = Int ('+' m = Add { n + m } | { n }).
               end
             end",
        )
        .unwrap();
        assert_eq!(reg.eval_str("@Calc 1 + 2 + 3 end").unwrap(), Value::Int(6));
    }

    #[test]
    fn parameterised_rules() {
        let mut reg = Registry::new();
        reg.load_str(
            "@Class Pairs
               @Grammar
                 Pairs ::= s = Name ps = Pair^(s)* { ps }.
                 Pair(s) ::= '(' t = Name ')' { s + t }.
               end
             end",
        )
        .unwrap();
        let v = reg.eval_str("@Pairs a (b) (c) end").unwrap();
        assert_eq!(v, Value::seq(vec!["ab".into(), "ac".into()]));
    }

    #[test]
    fn extension_shadows_parent_rule() {
        let mut reg = Registry::new();
        reg.load_str(
            "@Class A
               @Grammar
                 A ::= x = Item { x }.
                 Item ::= n = Int { n }.
               end
             end
             @Class B
               @Grammar extends A.grammar
                 B ::= x = Item { x }.
                 Item ::= n = Int { n * 10 }.
               end
             end",
        )
        .unwrap();
        assert_eq!(reg.eval_str("@A 4 end").unwrap(), Value::Int(4));
        assert_eq!(reg.eval_str("@B 4 end").unwrap(), Value::Int(40));
    }

    #[test]
    fn char_star_reads_raw_text() {
        let mut reg = Registry::new();
        reg.load_str(
            "@Class Text
               @Grammar
                 Text ::= t = Char* { t }.
               end
             end",
        )
        .unwrap();
        assert_eq!(reg.eval_str("@Text  hello, world!  end").unwrap(), Value::str("hello, world!"));
    }
}
