//! `format` control strings: `~S` next argument, `~%` newline,
//! `~{sep~;item~}` iterate a sequence argument, `~~` a tilde.

use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::Value;

pub fn format_values(reg: &Registry, control: &str, args: &[Value]) -> Result<String> {
    let chars: Vec<char> = control.chars().collect();
    let mut out = String::new();
    let mut next = 0;
    run(reg, &chars, args, &mut next, &mut out)?;
    Ok(out)
}

fn run(reg: &Registry, cs: &[char], args: &[Value], next: &mut usize, out: &mut String) -> Result<()> {
    let mut i = 0;
    while i < cs.len() {
        if cs[i] != '~' || i + 1 >= cs.len() {
            out.push(cs[i]);
            i += 1;
            continue;
        }
        match cs[i + 1] {
            'S' | 's' | 'A' | 'a' => {
                let v = args.get(*next).ok_or(Error::FormatArity)?;
                *next += 1;
                out.push_str(&reg.display(v));
                i += 2;
            }
            '%' => {
                out.push('\n');
                i += 2;
            }
            '~' => {
                out.push('~');
                i += 2;
            }
            '{' => {
                let close = find_directive(cs, i + 2, '}').ok_or(Error::FormatArity)?;
                let body = &cs[i + 2..close];
                let (sep, item) = match find_directive(body, 0, ';') {
                    Some(k) => (&body[..k], &body[k + 2..]),
                    None => (&body[..0], body),
                };
                let v = args.get(*next).ok_or(Error::FormatArity)?;
                *next += 1;
                let items = v.members().ok_or_else(|| Error::ty("~{ expects a sequence"))?;
                for (n, it) in items.iter().enumerate() {
                    if n > 0 {
                        run(reg, sep, &[], &mut 0, out)?;
                    }
                    let one = std::slice::from_ref(it);
                    run(reg, item, one, &mut 0, out)?;
                }
                i = close + 2;
            }
            other => {
                out.push('~');
                out.push(other);
                i += 2;
            }
        }
    }
    Ok(())
}

/// Index of the matching `~<c>` directive at nesting depth zero.
fn find_directive(cs: &[char], from: usize, c: char) -> Option<usize> {
    let mut depth = 0;
    let mut i = from;
    while i + 1 < cs.len() {
        if cs[i] == '~' {
            let d = cs[i + 1];
            if d == '{' {
                depth += 1;
            } else if d == '}' && depth > 0 {
                depth -= 1;
            } else if d == c && depth == 0 {
                return Some(i);
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directives() {
        let reg = Registry::new();
        assert_eq!(format_values(&reg, "~S=~S~%", &["x".into(), 1.into()]).unwrap(), "x=1\n");
        let names = Value::seq(vec!["head".into(), "tail".into()]);
        assert_eq!(
            format_values(&reg, "type ~S is ~{,~;~S~} end", &["Pair".into(), names]).unwrap(),
            "type Pair is head,tail end"
        );
        assert_eq!(format_values(&reg, "~S ~S", &[1.into()]), Err(Error::FormatArity));
        assert_eq!(format_values(&reg, "a~~b", &[]).unwrap(), "a~b");
    }
}
