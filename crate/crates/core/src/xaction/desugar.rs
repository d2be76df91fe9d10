//! Translations of XAction into XOCL expressions.
//!
//! `desugar1` keeps types at run time: records are `Values::Record`
//! objects built by `Values::Type::new`. `desugar2` resolves record shapes
//! during translation and represents records as a-lists.

use super::ast::{declared_values, Atom, XaExp, XaStmt};
use super::eval::XaTypeEnv;
use crate::error::{Error, Result};
use crate::xocl::ast::Expr;

fn values(class: &str) -> Expr {
    Expr::Path(vec!["XAction".into(), "Values".into(), class.into()])
}

fn atom(a: Atom) -> Expr {
    match a {
        Atom::Int(n) => Expr::call(values("Int"), vec![Expr::Int(n)]),
        Atom::Bool(b) => Expr::call(values("Bool"), vec![Expr::Bool(b)]),
    }
}

fn test(e: Expr) -> Expr {
    Expr::dot(e, "value")
}

fn while_(t: Expr, body: Expr) -> Expr {
    Expr::While(Box::new(test(t)), Box::new(body))
}

/// The expression producing the observed final values:
/// `Seq{Seq{"x", x}, ...}` over the top-level value declarations.
pub fn observation(stmts: &[XaStmt]) -> Expr {
    Expr::SeqLit(declared_values(stmts).iter().map(|n| Expr::SeqLit(vec![Expr::str(n), Expr::var(n)])).collect())
}

pub fn desugar1_exp(e: &XaExp) -> Expr {
    match e {
        XaExp::Const(a) => atom(*a),
        XaExp::Var(n) => Expr::var(n),
        XaExp::BinExp(op, l, r) => Expr::send(desugar1_exp(l), op.method(), vec![desugar1_exp(r)]),
        XaExp::New(t) => Expr::send(Expr::var(t), "new", vec![]),
        XaExp::FieldRef(r, n) => Expr::send(desugar1_exp(r), "lookup", vec![Expr::str(n)]),
    }
}

pub fn desugar1(s: &XaStmt, next: Expr) -> Expr {
    match s {
        XaStmt::TypeDeclaration(n, names) => {
            let names = Expr::SeqLit(names.iter().map(|x| Expr::str(x)).collect());
            Expr::let1(n, Expr::call(values("Type"), vec![names]), next)
        }
        XaStmt::ValueDeclaration(n, e) => Expr::let1(n, desugar1_exp(e), next),
        XaStmt::Block(ss) => Expr::seq(desugar1_all(ss, Expr::Null), next),
        XaStmt::While(t, body) => Expr::seq(while_(desugar1_exp(t), desugar1(body, Expr::Null)), next),
        XaStmt::If(t, a, b) => {
            let else_part = match b {
                Some(b) => desugar1(b, next.clone()),
                None => next.clone(),
            };
            Expr::if_(test(desugar1_exp(t)), desugar1(a, next), Some(else_part))
        }
        XaStmt::Update(n, e) => Expr::seq(Expr::assign(Expr::var(n), desugar1_exp(e)), next),
        XaStmt::FieldUpdate(r, n, e) => {
            Expr::seq(Expr::send(desugar1_exp(r), "update", vec![Expr::str(n), desugar1_exp(e)]), next)
        }
    }
}

/// Chains statements so each one's continuation is the rest.
pub fn desugar1_all(ss: &[XaStmt], next: Expr) -> Expr {
    ss.iter().rev().fold(next, |k, s| desugar1(s, k))
}

/// A whole program whose value is its [`observation`].
pub fn desugar1_program(p: &XaStmt) -> Expr {
    let top = p.top_level();
    desugar1_all(top, observation(top))
}

pub type Next2<'a> = &'a dyn Fn(&XaTypeEnv) -> Result<Expr>;

fn unknown_type(t: &str) -> Error {
    Error::User(format!("Unknown type {t}"))
}

pub fn desugar2_exp(e: &XaExp, tenv: &XaTypeEnv) -> Result<Expr> {
    Ok(match e {
        XaExp::Const(a) => atom(*a),
        XaExp::Var(n) => Expr::var(n),
        XaExp::BinExp(op, l, r) => Expr::send(desugar2_exp(l, tenv)?, op.method(), vec![desugar2_exp(r, tenv)?]),
        XaExp::New(t) => {
            let names = tenv.lookup(t).ok_or_else(|| unknown_type(t))?;
            names.iter().fold(Expr::SeqLit(vec![]), |acc, f| Expr::arrow(acc, "bind", vec![Expr::str(f), Expr::Null]))
        }
        XaExp::FieldRef(r, n) => Expr::arrow(desugar2_exp(r, tenv)?, "lookup", vec![Expr::str(n)]),
    })
}

pub fn desugar2(s: &XaStmt, tenv: &XaTypeEnv, next: Next2) -> Result<Expr> {
    let nothing = |_: &XaTypeEnv| Ok(Expr::Null);
    Ok(match s {
        XaStmt::TypeDeclaration(n, names) => return next(&tenv.bind(n, names)),
        XaStmt::ValueDeclaration(n, e) => Expr::let1(n, desugar2_exp(e, tenv)?, next(tenv)?),
        XaStmt::Block(ss) => Expr::seq(desugar2_all(ss, tenv, &nothing)?, next(tenv)?),
        XaStmt::While(t, body) => {
            Expr::seq(while_(desugar2_exp(t, tenv)?, desugar2(body, tenv, &nothing)?), next(tenv)?)
        }
        XaStmt::If(t, a, b) => {
            let else_part = match b {
                Some(b) => desugar2(b, tenv, next)?,
                None => next(tenv)?,
            };
            Expr::if_(test(desugar2_exp(t, tenv)?), desugar2(a, tenv, next)?, Some(else_part))
        }
        XaStmt::Update(n, e) => Expr::seq(Expr::assign(Expr::var(n), desugar2_exp(e, tenv)?), next(tenv)?),
        XaStmt::FieldUpdate(r, n, e) => Expr::seq(
            Expr::send(desugar2_exp(r, tenv)?, "update", vec![Expr::str(n), desugar2_exp(e, tenv)?]),
            next(tenv)?,
        ),
    })
}

pub fn desugar2_all(ss: &[XaStmt], tenv: &XaTypeEnv, next: Next2) -> Result<Expr> {
    match ss.split_first() {
        None => next(tenv),
        Some((s, rest)) => desugar2(s, tenv, &|t: &XaTypeEnv| desugar2_all(rest, t, next)),
    }
}

pub fn desugar2_program(p: &XaStmt) -> Result<Expr> {
    let top = p.top_level();
    desugar2_all(top, &XaTypeEnv::new(), &|_: &XaTypeEnv| Ok(observation(top)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xaction::parser::parse_program;
    use crate::xocl::print::expr_to_string;

    #[test]
    fn empty_type_declaration_binds_a_type() {
        let s = XaStmt::TypeDeclaration("Nil".into(), vec![]);
        let e = desugar1(&s, Expr::Null);
        assert_eq!(e, Expr::let1("Nil", Expr::call(values("Type"), vec![Expr::SeqLit(vec![])]), Expr::Null));
    }

    #[test]
    fn update_is_sequenced_with_next() {
        let s = XaStmt::Update("x".into(), XaExp::int(1));
        let e = desugar1(&s, Expr::Null);
        let one = Expr::call(values("Int"), vec![Expr::Int(1)]);
        assert_eq!(e, Expr::seq(Expr::assign(Expr::var("x"), one), Expr::Null));
    }

    #[test]
    fn new_expands_to_an_alist() {
        let tenv = XaTypeEnv::new().bind("Pair", &["head".into(), "tail".into()]);
        let e = desugar2_exp(&XaExp::New("Pair".into()), &tenv).unwrap();
        assert_eq!(expr_to_string(&e), r#"Seq{}->bind("head", null)->bind("tail", null)"#);
        let err = desugar2_exp(&XaExp::New("Nope".into()), &tenv).unwrap_err();
        assert_eq!(err.to_string(), "Unknown type Nope");
    }

    #[test]
    fn types_are_erased() {
        let p = parse_program("begin type T is a end value t is new T end end").unwrap();
        let e = desugar2_program(&p).unwrap();
        assert!(!expr_to_string(&e).contains("Type"));
        assert!(expr_to_string(&desugar1_program(&p)).contains("XAction::Values::Type"));
    }

    #[test]
    fn undeclared_type_in_nested_block_fails() {
        let p = parse_program("begin begin type T is a end end value t is new T end end").unwrap();
        assert!(desugar2_program(&p).is_err());
    }
}
