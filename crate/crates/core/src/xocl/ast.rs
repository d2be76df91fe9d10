use std::rc::Rc;

use crate::value::Value;
use crate::xsync::SyncSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Implies,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "implies",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "mod" => BinOp::Mod,
            "and" => BinOp::And,
            "or" => BinOp::Or,
            "implies" => BinOp::Implies,
            "=" => BinOp::Eq,
            "<>" => BinOp::Ne,
            "<" => BinOp::Lt,
            ">" => BinOp::Gt,
            "<=" => BinOp::Le,
            ">=" => BinOp::Ge,
            _ => return None,
        })
    }

    /// Binding strength; larger binds tighter.
    pub fn level(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

/// Attribute and parameter types as written.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Named(Vec<String>),
    Set(Box<TypeExpr>),
    Seq(Box<TypeExpr>),
}

impl std::fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TypeExpr::Named(p) => write!(f, "{}", p.join("::")),
            TypeExpr::Set(t) => write!(f, "Set({t})"),
            TypeExpr::Seq(t) => write!(f, "Seq({t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Option<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Option<TypeExpr>,
    pub body: Rc<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binder {
    Name(String),
    Drop(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseArm {
    pub test: Expr,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    SelfRef,
    Var(String),
    Path(Vec<String>),
    Dot(Box<Expr>, String),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    If(Box<Expr>, Box<Expr>, Option<Box<Expr>>),
    Let(Vec<(Binder, Expr)>, Box<Expr>),
    SetLit(Vec<Expr>),
    SeqLit(Vec<Expr>),
    /// `Seq{a, b | rest}`
    Cons(Vec<Expr>, Box<Expr>),
    /// `recv->op(v1, v2 [acc = init] | body)`
    Iter {
        recv: Box<Expr>,
        op: String,
        vars: Vec<String>,
        acc: Option<(String, Box<Expr>)>,
        body: Box<Expr>,
    },
    /// `recv->op(args)`
    Arrow {
        recv: Box<Expr>,
        op: String,
        args: Vec<Expr>,
    },
    /// `recv.name(args)`
    Send {
        recv: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
    /// `f(args)`: closures, classes (construction) and mappings (application).
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Assign(Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    While(Box<Expr>, Box<Expr>),
    For {
        var: String,
        coll: Box<Expr>,
        body: Box<Expr>,
    },
    Find {
        var: String,
        coll: Box<Expr>,
        when: Option<Box<Expr>>,
        body: Box<Expr>,
        otherwise: Option<Box<Expr>>,
    },
    Case {
        scrutinee: Box<Expr>,
        arms: Vec<CaseArm>,
        default: Option<Box<Expr>>,
    },
    TypeCase {
        scrutinee: Box<Expr>,
        arms: Vec<CaseArm>,
        default: Option<Box<Expr>>,
    },
    Format {
        channel: Box<Expr>,
        control: Box<Expr>,
        args: Option<Box<Expr>>,
    },
    /// `Class[f = e, ...]`
    ObjectLit {
        class: Box<Expr>,
        fields: Vec<(String, Expr)>,
    },
    Op(Rc<OpDef>),
    Quote(Box<Expr>),
    Drop(Box<Expr>),
    /// An already computed value embedded in the tree.
    Lit(Value),
    Sync(Rc<SyncSpec>),
}

impl Expr {
    pub fn var(s: &str) -> Expr {
        Expr::Var(s.to_string())
    }

    pub fn str(s: &str) -> Expr {
        Expr::Str(s.to_string())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn seq(a: Expr, b: Expr) -> Expr {
        Expr::Seq(Box::new(a), Box::new(b))
    }

    pub fn send(recv: Expr, name: &str, args: Vec<Expr>) -> Expr {
        Expr::Send { recv: Box::new(recv), name: name.to_string(), args }
    }

    pub fn arrow(recv: Expr, op: &str, args: Vec<Expr>) -> Expr {
        Expr::Arrow { recv: Box::new(recv), op: op.to_string(), args }
    }

    pub fn call(callee: Expr, args: Vec<Expr>) -> Expr {
        Expr::Call { callee: Box::new(callee), args }
    }

    pub fn dot(target: Expr, name: &str) -> Expr {
        Expr::Dot(Box::new(target), name.to_string())
    }

    pub fn assign(place: Expr, v: Expr) -> Expr {
        Expr::Assign(Box::new(place), Box::new(v))
    }

    pub fn let1(name: &str, v: Expr, body: Expr) -> Expr {
        Expr::Let(vec![(Binder::Name(name.to_string()), v)], Box::new(body))
    }

    pub fn if_(c: Expr, t: Expr, e: Option<Expr>) -> Expr {
        Expr::If(Box::new(c), Box::new(t), e.map(Box::new))
    }
}
