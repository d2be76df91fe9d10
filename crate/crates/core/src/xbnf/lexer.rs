use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Name,
    Int,
    Str,
    /// Single-quoted grammar terminal such as `'begin'`.
    Terminal,
    Punct,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub pos: Pos,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_name(&self, n: &str) -> bool {
        self.kind == TokenKind::Name && self.text == n
    }
}

const PUNCT3: &[&str] = &["::="];
const PUNCT2: &[&str] = &["[|", "|]", "::", ":=", "->", "<>", "<=", ">="];

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if bytes[*i + k] == b'\n' {
                *line += 1;
                *col = 1;
            } else if (bytes[*i + k] & 0xC0) != 0x80 {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        let pos = Pos { line, col };
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= bytes.len() {
                    return Err(Error::syntax(pos, "unterminated comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            toks.push(Token { kind: TokenKind::Name, text: text[start..i].to_string(), pos, start, end: i });
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            toks.push(Token { kind: TokenKind::Int, text: text[start..i].to_string(), pos, start, end: i });
            continue;
        }
        if c == b'"' || c == b'\'' {
            let quote = c;
            advance(&mut i, &mut line, &mut col, 1);
            let mut s = String::new();
            loop {
                if i >= bytes.len() {
                    return Err(Error::syntax(pos, "unterminated string"));
                }
                let ch = text[i..].chars().next().unwrap_or('\0');
                if ch as u32 == quote as u32 {
                    advance(&mut i, &mut line, &mut col, 1);
                    break;
                }
                if ch == '\\' && i + 1 < bytes.len() {
                    let e = bytes[i + 1];
                    s.push(match e {
                        b'n' => '\n',
                        b't' => '\t',
                        b'r' => '\r',
                        other => other as char,
                    });
                    advance(&mut i, &mut line, &mut col, 2);
                    continue;
                }
                s.push(ch);
                advance(&mut i, &mut line, &mut col, ch.len_utf8());
            }
            let kind = if quote == b'"' { TokenKind::Str } else { TokenKind::Terminal };
            toks.push(Token { kind, text: s, pos, start, end: i });
            continue;
        }
        let rest = &text[i..];
        let p = PUNCT3
            .iter()
            .chain(PUNCT2.iter())
            .find(|p| rest.starts_with(**p))
            .map(|p| p.to_string())
            .unwrap_or_else(|| rest.chars().next().map(String::from).unwrap_or_default());
        advance(&mut i, &mut line, &mut col, p.len());
        toks.push(Token { kind: TokenKind::Punct, text: p, pos, start, end: i });
    }
    toks.push(Token { kind: TokenKind::Eof, text: String::new(), pos: Pos { line, col }, start: i, end: i });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(s: &str) -> Vec<(TokenKind, String)> {
        tokenize(s).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn construct_header() {
        use TokenKind::*;
        assert_eq!(
            shape("@State X end"),
            vec![
                (Punct, "@".into()),
                (Name, "State".into()),
                (Name, "X".into()),
                (Name, "end".into()),
                (Eof, "".into())
            ]
        );
    }

    #[test]
    fn longest_match_on_colons() {
        let k: Vec<String> = shape("a::b ::= c").into_iter().map(|(_, t)| t).collect();
        assert_eq!(k, vec!["a", "::", "b", "::=", "c", ""]);
    }

    #[test]
    fn strings_and_comments() {
        use TokenKind::*;
        assert_eq!(
            shape("\"state = \" + T // tail\n/* x */"),
            vec![(Str, "state = ".into()), (Punct, "+".into()), (Name, "T".into()), (Eof, "".into())]
        );
        assert_eq!(shape(r#""a\"b\n""#)[0].1, "a\"b\n");
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("x\n  y").unwrap();
        assert_eq!(t[0].pos, Pos { line: 1, col: 1 });
        assert_eq!(t[1].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn unterminated_errors() {
        assert!(tokenize("\"abc").is_err());
        assert!(tokenize("/* abc").is_err());
    }
}
