#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XaOp {
    Add,
    Sub,
    Mul,
    Gt,
    Lt,
    Eq,
    Mod,
    And,
    Or,
}

/// Operator tiers, loosest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Logical,
    Compare,
    Arith,
}

impl XaOp {
    pub const ALL: [XaOp; 9] =
        [XaOp::Add, XaOp::Sub, XaOp::Mul, XaOp::Gt, XaOp::Lt, XaOp::Eq, XaOp::Mod, XaOp::And, XaOp::Or];

    pub fn symbol(self) -> &'static str {
        match self {
            XaOp::Add => "+",
            XaOp::Sub => "-",
            XaOp::Mul => "*",
            XaOp::Gt => ">",
            XaOp::Lt => "<",
            XaOp::Eq => "=",
            XaOp::Mod => "mod",
            XaOp::And => "and",
            XaOp::Or => "or",
        }
    }

    pub fn from_symbol(s: &str) -> Option<XaOp> {
        XaOp::ALL.into_iter().find(|o| o.symbol() == s)
    }

    pub fn tier(self) -> Tier {
        match self {
            XaOp::And | XaOp::Or => Tier::Logical,
            XaOp::Gt | XaOp::Lt | XaOp::Eq => Tier::Compare,
            _ => Tier::Arith,
        }
    }

    /// Name of the value-domain operation implementing this operator.
    pub fn method(self) -> &'static str {
        match self {
            XaOp::Add => "binAdd",
            XaOp::Sub => "binSub",
            XaOp::Mul => "binMul",
            XaOp::Gt => "binGt",
            XaOp::Lt => "binLt",
            XaOp::Eq => "binEq",
            XaOp::Mod => "binMod",
            XaOp::And => "binAnd",
            XaOp::Or => "binOr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    Int(i64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XaExp {
    Const(Atom),
    Var(String),
    BinExp(XaOp, Box<XaExp>, Box<XaExp>),
    New(String),
    FieldRef(Box<XaExp>, String),
}

impl XaExp {
    pub fn int(n: i64) -> XaExp {
        XaExp::Const(Atom::Int(n))
    }

    pub fn var(n: &str) -> XaExp {
        XaExp::Var(n.to_string())
    }

    pub fn bin(op: XaOp, l: XaExp, r: XaExp) -> XaExp {
        XaExp::BinExp(op, Box::new(l), Box::new(r))
    }

    pub fn field(v: XaExp, n: &str) -> XaExp {
        XaExp::FieldRef(Box::new(v), n.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XaStmt {
    Block(Vec<XaStmt>),
    TypeDeclaration(String, Vec<String>),
    ValueDeclaration(String, XaExp),
    While(XaExp, Box<XaStmt>),
    If(XaExp, Box<XaStmt>, Option<Box<XaStmt>>),
    Update(String, XaExp),
    FieldUpdate(XaExp, String, XaExp),
}

impl XaStmt {
    /// The statements run at top level: a block's body, or the statement.
    pub fn top_level(&self) -> &[XaStmt] {
        match self {
            XaStmt::Block(ss) => ss,
            s => std::slice::from_ref(s),
        }
    }
}

/// Value names declared directly in `stmts`, first declaration first.
pub fn declared_values(stmts: &[XaStmt]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in stmts {
        if let XaStmt::ValueDeclaration(n, _) = s {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
    }
    out
}
