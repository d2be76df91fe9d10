//! Recursive-descent parser for XAction programs.

use super::ast::{Atom, Tier, XaExp, XaOp, XaStmt};
use crate::error::{Error, Pos, Result};

const KEYWORDS: [&str; 16] = [
    "begin", "end", "type", "is", "value", "while", "do", "if", "then", "else", "new", "and", "or", "mod", "true",
    "false",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>> {
    let mut out = Vec::new();
    let cs: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if cs[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < cs.len() {
        let c = cs[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
        } else if c == '/' && cs.get(i + 1) == Some(&'/') {
            while i < cs.len() && cs[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s: String = cs[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
            let n = s.chars().count();
            out.push((Tok::Name(s), pos));
            advance(&mut i, &mut line, &mut col, n);
        } else if c.is_ascii_digit() {
            let s: String = cs[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
            let n = s.len();
            let v = s.parse().map_err(|_| Error::syntax(pos, "integer literal too large"))?;
            out.push((Tok::Int(v), pos));
            advance(&mut i, &mut line, &mut col, n);
        } else {
            let two: String = cs[i..].iter().take(2).collect();
            let p: &'static str = match (two.as_str(), c) {
                (":=", _) => ":=",
                (_, '.') => ".",
                (_, '(') => "(",
                (_, ')') => ")",
                (_, ';') => ";",
                (_, ',') => ",",
                (_, '+') => "+",
                (_, '-') => "-",
                (_, '*') => "*",
                (_, '>') => ">",
                (_, '<') => "<",
                (_, '=') => "=",
                _ => return Err(Error::syntax(pos, format!("unexpected character '{c}'"))),
            };
            out.push((Tok::Punct(p), pos));
            advance(&mut i, &mut line, &mut col, p.len());
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct P {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl P {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == k)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn fail<T>(&self, what: &str) -> Result<T> {
        let found = match self.peek() {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of input".into(),
        };
        Err(Error::syntax(self.pos(), format!("expected {what}, found {found}")))
    }

    fn kw(&mut self, k: &str) -> Result<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("'{k}'"))
        }
    }

    fn punct(&mut self, p: &str) -> Result<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("'{p}'"))
        }
    }

    fn name(&mut self) -> Result<String> {
        match self.peek() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            _ => self.fail("a name"),
        }
    }

    fn at_name(&self) -> bool {
        matches!(self.peek(), Tok::Name(n) if !KEYWORDS.contains(&n.as_str()))
    }

    fn statement(&mut self) -> Result<XaStmt> {
        let s = match self.peek() {
            Tok::Name(k) if k == "begin" => {
                self.bump();
                XaStmt::Block(self.statements()?)
            }
            Tok::Name(k) if k == "type" => {
                self.bump();
                let n = self.name()?;
                self.kw("is")?;
                let mut ns = Vec::new();
                while self.at_name() {
                    ns.push(self.name()?);
                    if self.is_punct(",") {
                        self.bump();
                    }
                }
                self.kw("end")?;
                XaStmt::TypeDeclaration(n, ns)
            }
            Tok::Name(k) if k == "value" => {
                self.bump();
                let n = self.name()?;
                self.kw("is")?;
                let e = self.exp()?;
                self.kw("end")?;
                XaStmt::ValueDeclaration(n, e)
            }
            Tok::Name(k) if k == "while" => {
                self.bump();
                let e = self.exp()?;
                self.kw("do")?;
                let s = self.statement()?;
                self.kw("end")?;
                XaStmt::While(e, Box::new(s))
            }
            Tok::Name(k) if k == "if" => {
                self.bump();
                let e = self.exp()?;
                self.kw("then")?;
                let s1 = self.statement()?;
                let s2 = if self.is_kw("else") {
                    self.bump();
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                self.kw("end")?;
                XaStmt::If(e, Box::new(s1), s2)
            }
            _ => {
                let target = self.field_ref()?;
                self.punct(":=")?;
                let v = self.exp()?;
                self.punct(";")?;
                return match target {
                    XaExp::Var(n) => Ok(XaStmt::Update(n, v)),
                    XaExp::FieldRef(r, n) => Ok(XaStmt::FieldUpdate(*r, n, v)),
                    _ => Err(Error::syntax(self.pos(), "assignment to a non-variable")),
                };
            }
        };
        if self.is_punct(";") {
            self.bump();
        }
        Ok(s)
    }

    /// Statements up to and including the closing `end`.
    fn statements(&mut self) -> Result<Vec<XaStmt>> {
        let mut ss = Vec::new();
        while !self.is_kw("end") {
            if *self.peek() == Tok::Eof {
                return self.fail("'end'");
            }
            ss.push(self.statement()?);
        }
        self.bump();
        Ok(ss)
    }

    fn exp(&mut self) -> Result<XaExp> {
        self.tier(Tier::Logical)
    }

    fn peek_op(&self, tier: Tier) -> Option<XaOp> {
        let s = match self.peek() {
            Tok::Name(n) => n.as_str(),
            Tok::Punct(p) => p,
            _ => return None,
        };
        XaOp::from_symbol(s).filter(|o| o.tier() == tier)
    }

    /// `operand [op tier]`: right-associative within a tier.
    fn tier(&mut self, tier: Tier) -> Result<XaExp> {
        let left = match tier {
            Tier::Logical => self.tier(Tier::Compare)?,
            Tier::Compare => self.tier(Tier::Arith)?,
            Tier::Arith => self.field_ref()?,
        };
        match self.peek_op(tier) {
            Some(op) => {
                self.bump();
                let right = self.tier(tier)?;
                Ok(XaExp::bin(op, left, right))
            }
            None => Ok(left),
        }
    }

    fn field_ref(&mut self) -> Result<XaExp> {
        let mut e = self.atom()?;
        while self.is_punct(".") {
            self.bump();
            let n = self.name()?;
            e = XaExp::FieldRef(Box::new(e), n);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<XaExp> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(XaExp::Const(Atom::Int(n)))
            }
            Tok::Name(k) if k == "true" || k == "false" => {
                self.bump();
                Ok(XaExp::Const(Atom::Bool(k == "true")))
            }
            Tok::Name(k) if k == "new" => {
                self.bump();
                Ok(XaExp::New(self.name()?))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.exp()?;
                self.punct(")")?;
                Ok(e)
            }
            _ if self.at_name() => Ok(XaExp::Var(self.name()?)),
            _ => self.fail("an expression"),
        }
    }
}

/// Parses one statement, usually a `begin ... end` block.
pub fn parse_program(src: &str) -> Result<XaStmt> {
    let mut p = P { toks: lex(src)?, at: 0 };
    let s = p.statement()?;
    if *p.peek() != Tok::Eof {
        return p.fail("end of input");
    }
    Ok(s)
}

pub fn parse_exp(src: &str) -> Result<XaExp> {
    let mut p = P { toks: lex(src)?, at: 0 };
    let e = p.exp()?;
    if *p.peek() != Tok::Eof {
        return p.fail("end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_declaration() {
        assert_eq!(parse_program("value x is 1 end").unwrap(), XaStmt::ValueDeclaration("x".into(), XaExp::int(1)));
        assert_eq!(parse_program("begin end").unwrap(), XaStmt::Block(vec![]));
    }

    #[test]
    fn tiers_and_associativity() {
        use XaOp::*;
        let e = parse_exp("a mod 2 = 0 and b").unwrap();
        let m = XaExp::bin(Mod, XaExp::var("a"), XaExp::int(2));
        assert_eq!(e, XaExp::bin(And, XaExp::bin(Eq, m, XaExp::int(0)), XaExp::var("b")));
        let e = parse_exp("a - b - c").unwrap();
        assert_eq!(e, XaExp::bin(Sub, XaExp::var("a"), XaExp::bin(Sub, XaExp::var("b"), XaExp::var("c"))));
        let e = parse_exp("(a - b) - p.x.y").unwrap();
        let fr = XaExp::field(XaExp::field(XaExp::var("p"), "x"), "y");
        assert_eq!(e, XaExp::bin(Sub, XaExp::bin(Sub, XaExp::var("a"), XaExp::var("b")), fr));
    }

    #[test]
    fn updates() {
        let s = parse_program("begin x := 1; p.head := x; end").unwrap();
        assert_eq!(
            s,
            XaStmt::Block(vec![
                XaStmt::Update("x".into(), XaExp::int(1)),
                XaStmt::FieldUpdate(XaExp::var("p"), "head".into(), XaExp::var("x")),
            ])
        );
    }

    #[test]
    fn errors_have_positions() {
        match parse_program("begin\n  value is 1 end\nend") {
            Err(Error::Syntax { pos, .. }) => assert_eq!((pos.line, pos.col), (2, 9)),
            other => panic!("{other:?}"),
        }
        assert!(parse_program("begin 1 := 2; end").is_err());
        assert!(parse_program("begin").is_err());
    }
}
