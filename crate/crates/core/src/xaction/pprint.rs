//! Pretty-printer producing text the parser reads back to the same tree.

use std::fmt::{self, Write};

use super::ast::{Atom, XaExp, XaStmt};

fn tab(out: &mut impl Write, indent: usize) -> fmt::Result {
    write!(out, "\n{:indent$}", "")
}

pub fn pprint_exp(e: &XaExp, out: &mut impl Write) -> fmt::Result {
    match e {
        XaExp::Const(Atom::Int(n)) => write!(out, "{n}"),
        XaExp::Const(Atom::Bool(b)) => write!(out, "{b}"),
        XaExp::Var(n) => write!(out, "{n}"),
        XaExp::New(t) => write!(out, "new {t}"),
        XaExp::FieldRef(r, n) => {
            operand(r, matches!(**r, XaExp::BinExp(..)), out)?;
            write!(out, ".{n}")
        }
        XaExp::BinExp(op, l, r) => {
            let tier = op.tier();
            let l_paren = matches!(&**l, XaExp::BinExp(o, ..) if o.tier() <= tier);
            let r_paren = matches!(&**r, XaExp::BinExp(o, ..) if o.tier() < tier);
            operand(l, l_paren, out)?;
            write!(out, " {} ", op.symbol())?;
            operand(r, r_paren, out)
        }
    }
}

fn operand(e: &XaExp, paren: bool, out: &mut impl Write) -> fmt::Result {
    if paren {
        out.write_char('(')?;
        pprint_exp(e, out)?;
        out.write_char(')')
    } else {
        pprint_exp(e, out)
    }
}

/// Prints `s` assuming the cursor already sits at column `indent`.
pub fn pprint_stmt(s: &XaStmt, out: &mut impl Write, indent: usize) -> fmt::Result {
    match s {
        XaStmt::Block(ss) => {
            out.write_str("begin")?;
            for s in ss {
                tab(out, indent + 2)?;
                pprint_stmt(s, out, indent + 2)?;
            }
            tab(out, indent)?;
            out.write_str("end")
        }
        XaStmt::TypeDeclaration(n, names) => {
            if names.is_empty() {
                write!(out, "type {n} is end")
            } else {
                write!(out, "type {n} is {} end", names.join(","))
            }
        }
        XaStmt::ValueDeclaration(n, e) => {
            write!(out, "value {n} is ")?;
            pprint_exp(e, out)?;
            out.write_str(" end")
        }
        XaStmt::While(t, body) => {
            out.write_str("while ")?;
            pprint_exp(t, out)?;
            out.write_str(" do")?;
            tab(out, indent + 2)?;
            pprint_stmt(body, out, indent + 2)?;
            tab(out, indent)?;
            out.write_str("end")
        }
        XaStmt::If(t, a, b) => {
            out.write_str("if ")?;
            pprint_exp(t, out)?;
            out.write_str(" then")?;
            tab(out, indent + 2)?;
            pprint_stmt(a, out, indent + 2)?;
            if let Some(b) = b {
                tab(out, indent)?;
                out.write_str("else")?;
                tab(out, indent + 2)?;
                pprint_stmt(b, out, indent + 2)?;
            }
            tab(out, indent)?;
            out.write_str("end")
        }
        XaStmt::Update(n, e) => {
            write!(out, "{n} := ")?;
            pprint_exp(e, out)?;
            out.write_char(';')
        }
        XaStmt::FieldUpdate(r, n, e) => {
            operand(r, matches!(r, XaExp::BinExp(..)), out)?;
            write!(out, ".{n} := ")?;
            pprint_exp(e, out)?;
            out.write_char(';')
        }
    }
}

pub fn exp_to_string(e: &XaExp) -> String {
    let mut s = String::new();
    pprint_exp(e, &mut s).expect("writing to a String");
    s
}

pub fn stmt_to_string(s: &XaStmt) -> String {
    let mut out = String::new();
    pprint_stmt(s, &mut out, 0).expect("writing to a String");
    out
}
