//! Concrete syntax for expressions; output parses back to the same tree.

use super::ast::{BinOp, Binder, Expr, TypeExpr};
use crate::value::Value;

const SEQ: u8 = 0;
const ASSIGN: u8 = 1;
const UNARY: u8 = 8;
const POSTFIX: u8 = 9;

fn bin_level(op: BinOp) -> u8 {
    op.level() + 1
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Seq(..) => SEQ,
        Expr::Assign(..) => ASSIGN,
        Expr::Bin(op, ..) => bin_level(*op),
        Expr::Not(_) | Expr::Neg(_) => UNARY,
        Expr::Int(n) if *n < 0 => UNARY,
        _ => POSTFIX,
    }
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.expr(e, SEQ);
    p.out
}

pub fn type_to_string(t: &TypeExpr) -> String {
    t.to_string()
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn nl(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn w(&mut self, s: &str) {
        self.out.push_str(s);
    }

    /// Prints `e` in a position requiring at least `min` binding strength.
    fn expr(&mut self, e: &Expr, min: u8) {
        if level(e) < min {
            self.w("(");
            self.expr(e, SEQ);
            self.w(")");
            return;
        }
        match e {
            Expr::Int(n) => self.w(&n.to_string()),
            Expr::Bool(b) => self.w(if *b { "true" } else { "false" }),
            Expr::Str(s) => self.w(&quote_str(s)),
            Expr::Null => self.w("null"),
            Expr::SelfRef => self.w("self"),
            Expr::Var(n) => self.w(n),
            Expr::Path(p) => self.w(&p.join("::")),
            Expr::Dot(t, n) => {
                self.expr(t, POSTFIX);
                self.w(".");
                self.w(n);
            }
            Expr::Bin(op, l, r) => {
                let lv = bin_level(*op);
                self.expr(l, lv);
                self.w(" ");
                self.w(op.symbol());
                self.w(" ");
                self.expr(r, lv + 1);
            }
            Expr::Not(x) => {
                self.w("not ");
                self.expr(x, UNARY);
            }
            Expr::Neg(x) => {
                self.w("-");
                self.expr(x, POSTFIX);
            }
            Expr::If(c, t, f) => {
                self.w("if ");
                self.expr(c, ASSIGN);
                self.w(" then");
                self.block(t);
                if let Some(f) = f {
                    self.nl();
                    self.w("else");
                    self.block(f);
                }
                self.nl();
                self.w("end");
            }
            Expr::Let(bs, body) => {
                self.w("let ");
                for (i, (b, x)) in bs.iter().enumerate() {
                    if i > 0 {
                        self.w("; ");
                    }
                    match b {
                        Binder::Name(n) => self.w(n),
                        Binder::Drop(d) => self.drop(d),
                    }
                    self.w(" = ");
                    self.expr(x, ASSIGN);
                }
                self.w(" in");
                self.block(body);
                self.nl();
                self.w("end");
            }
            Expr::SetLit(xs) => {
                self.w("Set{");
                self.list(xs);
                self.w("}");
            }
            Expr::SeqLit(xs) => {
                self.w("Seq{");
                self.list(xs);
                self.w("}");
            }
            Expr::Cons(xs, r) => {
                self.w("Seq{");
                self.list(xs);
                self.w(" | ");
                self.expr(r, ASSIGN);
                self.w("}");
            }
            Expr::Iter { recv, op, vars, acc, body } => {
                self.expr(recv, POSTFIX);
                self.w("->");
                self.w(op);
                self.w("(");
                self.w(&vars.join(", "));
                if let Some((n, x)) = acc {
                    self.w(" ");
                    self.w(n);
                    self.w(" = ");
                    self.expr(x, ASSIGN);
                }
                self.w(" | ");
                self.expr(body, ASSIGN);
                self.w(")");
            }
            Expr::Arrow { recv, op, args } => {
                self.expr(recv, POSTFIX);
                self.w("->");
                self.w(op);
                self.w("(");
                self.list(args);
                self.w(")");
            }
            Expr::Send { recv, name, args } => {
                self.expr(recv, POSTFIX);
                self.w(".");
                self.w(name);
                self.w("(");
                self.list(args);
                self.w(")");
            }
            Expr::Call { callee, args } => {
                self.expr(callee, POSTFIX);
                self.w("(");
                self.list(args);
                self.w(")");
            }
            Expr::Assign(p, v) => {
                self.expr(p, POSTFIX);
                self.w(" := ");
                self.expr(v, ASSIGN);
            }
            Expr::Seq(a, b) => {
                self.expr(a, ASSIGN);
                self.w(";");
                self.nl();
                self.expr(b, SEQ);
            }
            Expr::While(c, b) => {
                self.w("@While ");
                self.expr(c, ASSIGN);
                self.w(" do");
                self.block(b);
                self.nl();
                self.w("end");
            }
            Expr::For { var, coll, body } => {
                self.w("@For ");
                self.w(var);
                self.w(" in ");
                self.expr(coll, ASSIGN);
                self.w(" do");
                self.block(body);
                self.nl();
                self.w("end");
            }
            Expr::Find { var, coll, when, body, otherwise } => {
                self.w("@Find(");
                self.w(var);
                self.w(", ");
                self.expr(coll, ASSIGN);
                self.w(")");
                if let Some(w) = when {
                    self.w(" when ");
                    self.expr(w, ASSIGN);
                }
                self.w(" do");
                self.block(body);
                if let Some(o) = otherwise {
                    self.nl();
                    self.w("else");
                    self.block(o);
                }
                self.nl();
                self.w("end");
            }
            Expr::Case { scrutinee, arms, default } | Expr::TypeCase { scrutinee, arms, default } => {
                self.w(if matches!(e, Expr::Case { .. }) { "@Case(" } else { "@TypeCase(" });
                self.expr(scrutinee, SEQ);
                self.w(")");
                self.indent += 1;
                for a in arms {
                    self.nl();
                    self.expr(&a.test, ASSIGN);
                    self.w(" do");
                    self.block(&a.body);
                    self.nl();
                    self.w("end");
                }
                if let Some(d) = default {
                    self.nl();
                    self.w("else");
                    self.block(d);
                }
                self.indent -= 1;
                self.nl();
                self.w("end");
            }
            Expr::Format { channel, control, args } => {
                self.w("format(");
                self.expr(channel, ASSIGN);
                self.w(", ");
                self.expr(control, ASSIGN);
                if let Some(a) = args {
                    self.w(", ");
                    self.expr(a, ASSIGN);
                }
                self.w(")");
            }
            Expr::ObjectLit { class, fields } => {
                self.expr(class, POSTFIX);
                self.w("[");
                for (i, (n, x)) in fields.iter().enumerate() {
                    if i > 0 {
                        self.w(", ");
                    }
                    self.w(n);
                    self.w(" = ");
                    self.expr(x, ASSIGN);
                }
                self.w("]");
            }
            Expr::Op(def) => {
                self.w("@Operation ");
                self.w(&def.name);
                self.w("(");
                let ps: Vec<String> = def
                    .params
                    .iter()
                    .map(|p| match &p.ty {
                        Some(t) => format!("{}:{}", p.name, t),
                        None => p.name.clone(),
                    })
                    .collect();
                self.w(&ps.join(", "));
                self.w(")");
                self.block(&def.body);
                self.nl();
                self.w("end");
            }
            Expr::Quote(x) => {
                self.w("[| ");
                self.expr(x, SEQ);
                self.w(" |]");
            }
            Expr::Drop(x) => self.drop(x),
            Expr::Lit(v) => match super::lift_value(v) {
                Ok(Expr::Lit(Value::Expr(inner))) => {
                    self.w("[| ");
                    self.expr(&inner, SEQ);
                    self.w(" |]");
                }
                Ok(l) => self.expr(&l, min),
                Err(_) => self.w(&format!("null /* {v:?} */")),
            },
            Expr::Sync(_) => self.w("@XSync end"),
        }
    }

    fn drop(&mut self, x: &Expr) {
        self.w("<");
        self.expr(x, bin_level(BinOp::Add));
        self.w(">");
    }

    fn block(&mut self, e: &Expr) {
        self.indent += 1;
        self.nl();
        self.expr(e, SEQ);
        self.indent -= 1;
    }

    fn list(&mut self, xs: &[Expr]) {
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                self.w(", ");
            }
            self.expr(x, ASSIGN);
        }
    }
}
