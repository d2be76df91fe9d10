use std::rc::Rc;

use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::Value;

fn arity(name: &str, args: &[Value], n: usize) -> Result<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(Error::DoesNotUnderstand(name.to_string(), args.len()))
    }
}

fn index(v: &Value, len: usize) -> Result<usize> {
    match v {
        Value::Int(i) if *i >= 0 && (*i as usize) < len => Ok(*i as usize),
        Value::Int(_) if len == 0 => Err(Error::EmptyCollection),
        other => Err(Error::ty(format!("index {other:?} out of range 0..{len}"))),
    }
}

fn key_name(v: &Value) -> String {
    match v {
        Value::Str(s) => s.to_string(),
        other => format!("{other:?}"),
    }
}

/// Position of `k` in an association list of two-element sequences.
fn alist_find(items: &[Value], k: &Value) -> Option<usize> {
    items.iter().position(|p| match p {
        Value::Seq(pair) => pair.borrow().first() == Some(k),
        _ => false,
    })
}

impl Registry {
    /// Message send: user operations first, then the built-in protocol of the
    /// receiver's kind.
    pub fn send(&mut self, recv: Value, name: &str, args: Vec<Value>) -> Result<Value> {
        if let Value::Obj(o) = &recv {
            let of = self.cell(*o).of;
            if let Some((owner, op)) = self.find_operation(of, name, args.len()) {
                if !op.is_abstract {
                    return self.run_operation(recv.clone(), owner, &op, args);
                }
            }
        }
        match name {
            "of" if args.is_empty() => return Ok(Value::Obj(self.of(&recv))),
            "isKindOf" => {
                arity(name, &args, 1)?;
                return match &args[0] {
                    Value::Obj(c) if self.is_class(*c) => Ok(Value::Bool(self.is_kind_of(&recv, *c))),
                    _ => Err(Error::ty("isKindOf expects a classifier")),
                };
            }
            "toString" if args.is_empty() => return Ok(Value::str(self.display(&recv))),
            "println" if args.is_empty() => {
                let s = self.display(&recv);
                self.write_out(&s);
                self.write_out("\n");
                return Ok(recv);
            }
            "print" if args.is_empty() => {
                let s = self.display(&recv);
                self.write_out(&s);
                return Ok(recv);
            }
            "error" => {
                arity(name, &args, 1)?;
                return Err(Error::User(self.display(&args[0])));
            }
            "equals" => {
                arity(name, &args, 1)?;
                return Ok(Value::Bool(recv == args[0]));
            }
            "lift" if args.is_empty() => return Ok(Value::Expr(Rc::new(super::lift_value(&recv)?))),
            _ => {}
        }
        match &recv {
            Value::Obj(o) => self.send_object(*o, recv.clone(), name, args),
            Value::Seq(_) | Value::Set(_) => self.send_collection(&recv, name, args),
            Value::Table(t) => {
                let t = t.clone();
                match (name, args.as_slice()) {
                    ("put", [k, v]) => {
                        let mut tb = t.borrow_mut();
                        match tb.iter_mut().find(|(x, _)| x == k) {
                            Some(e) => e.1 = v.clone(),
                            None => tb.push((k.clone(), v.clone())),
                        }
                        drop(tb);
                        Ok(recv)
                    }
                    ("get", [k]) => {
                        Ok(t.borrow().iter().find(|(x, _)| x == k).map(|e| e.1.clone()).unwrap_or(Value::Null))
                    }
                    ("hasKey", [k]) => Ok(Value::Bool(t.borrow().iter().any(|(x, _)| x == k))),
                    ("keys", []) => Ok(Value::seq(t.borrow().iter().map(|e| e.0.clone()).collect())),
                    ("values", []) => Ok(Value::seq(t.borrow().iter().map(|e| e.1.clone()).collect())),
                    ("size", []) => Ok(Value::Int(t.borrow().len() as i64)),
                    ("traceId", [k]) => Ok(Value::str(crate::xmap::trace_id(&recv, k)?)),
                    _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
                }
            }
            Value::Op(c) => match (name, args.as_slice()) {
                ("setName", [Value::Str(s)]) => {
                    *c.name.borrow_mut() = s.to_string();
                    Ok(recv.clone())
                }
                ("name", []) => Ok(Value::str(&*c.name.borrow())),
                ("arity", []) => Ok(Value::Int(c.params.len() as i64)),
                ("body", []) => Ok(Value::Expr(c.body.clone())),
                ("invokeWith", [s, a]) => {
                    let a = a.members().ok_or_else(|| Error::ty("invokeWith expects a sequence"))?;
                    self.invoke_closure_as(&c.clone(), s.clone(), a)
                }
                ("invoke", [a]) => {
                    let a = a.members().ok_or_else(|| Error::ty("invoke expects a sequence"))?;
                    self.invoke_closure(&c.clone(), a)
                }
                _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
            },
            Value::Str(s) => match (name, args.as_slice()) {
                ("size", []) => Ok(Value::Int(s.chars().count() as i64)),
                ("asSymbol" | "asString", []) => Ok(recv.clone()),
                ("toUpper", []) => Ok(Value::str(s.to_uppercase())),
                ("toLower", []) => Ok(Value::str(s.to_lowercase())),
                ("hasPrefix", [Value::Str(p)]) => Ok(Value::Bool(s.starts_with(&**p))),
                _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
            },
            Value::Int(n) => match (name, args.as_slice()) {
                ("abs", []) => n.checked_abs().map(Value::Int).ok_or(Error::Overflow),
                ("max", [Value::Int(m)]) => Ok(Value::Int(*n.max(m))),
                ("min", [Value::Int(m)]) => Ok(Value::Int(*n.min(m))),
                _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
            },
            Value::Sync(m) => self.send_sync(m.clone(), name, args),
            Value::Expr(e) => match (name, args.as_slice()) {
                ("eval", []) => {
                    let e = e.clone();
                    self.eval_top(&e)
                }
                ("pprint", []) => Ok(Value::str(super::print::expr_to_string(e))),
                _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
            },
            _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
        }
    }

    fn send_object(&mut self, o: crate::value::ObjId, recv: Value, name: &str, args: Vec<Value>) -> Result<Value> {
        match (name, args.as_slice()) {
            ("get", [Value::Str(n)]) => self.get_slot(o, n),
            ("set", [Value::Str(n), v]) => {
                self.set_slot(o, n, v.clone())?;
                Ok(recv)
            }
            ("hasSlot", [Value::Str(n)]) => Ok(Value::Bool(self.has_slot(o, n))),
            ("getStructuralFeatureNames", []) => {
                Ok(Value::seq(self.feature_names(o).into_iter().map(Value::from).collect()))
            }
            ("checkConstraints", []) => Ok(Value::Bool(self.check_constraints(o).passed())),
            ("new", _) if self.is_class(o) => self.instantiate(o, args),
            ("allAttributes", []) if self.is_class(o) => {
                let names = self.all_attributes(o)?.into_iter().map(|a| Value::str(a.name)).collect();
                Ok(Value::seq(names))
            }
            ("inheritsFrom", [Value::Obj(p)]) if self.is_class(o) => Ok(Value::Bool(self.is_subclass(o, *p))),
            ("lookup" | "ref", [k]) => self.get_slot(o, &key_name(k)),
            ("update", [k, v]) => {
                self.set_slot(o, &key_name(k), v.clone())?;
                Ok(recv)
            }
            _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
        }
    }

    fn send_collection(&mut self, recv: &Value, name: &str, args: Vec<Value>) -> Result<Value> {
        let ms = recv.members().unwrap();
        let is_set = matches!(recv, Value::Set(_));
        let rebuild = |items: Vec<Value>| if is_set { Value::set(items) } else { Value::seq(items) };
        let a = args.as_slice();
        match (name, a) {
            ("size", []) => Ok(Value::Int(ms.len() as i64)),
            ("isEmpty", []) => Ok(Value::Bool(ms.is_empty())),
            ("notEmpty", []) => Ok(Value::Bool(!ms.is_empty())),
            ("includes", [x]) => Ok(Value::Bool(ms.contains(x))),
            ("excludes", [x]) => Ok(Value::Bool(!ms.contains(x))),
            ("includesAll", [c]) => {
                let cs = c.members().ok_or_else(|| Error::ty("includesAll expects a collection"))?;
                Ok(Value::Bool(cs.iter().all(|x| ms.contains(x))))
            }
            ("including", [x]) => {
                let mut v = ms;
                v.push(x.clone());
                Ok(rebuild(v))
            }
            ("excluding", [x]) => Ok(rebuild(ms.into_iter().filter(|m| m != x).collect())),
            ("union", [c]) => {
                let mut v = ms;
                v.extend(c.members().ok_or_else(|| Error::ty("union expects a collection"))?);
                Ok(rebuild(v))
            }
            ("intersection", [c]) => {
                let cs = c.members().ok_or_else(|| Error::ty("intersection expects a collection"))?;
                Ok(rebuild(ms.into_iter().filter(|m| cs.contains(m)).collect()))
            }
            ("sel" | "head" | "first", []) => ms.into_iter().next().ok_or(Error::EmptyCollection),
            ("last", []) => ms.into_iter().last().ok_or(Error::EmptyCollection),
            ("tail", []) => {
                if ms.is_empty() {
                    return Err(Error::EmptyCollection);
                }
                Ok(rebuild(ms[1..].to_vec()))
            }
            ("at", [i]) => {
                let i = index(i, ms.len())?;
                Ok(ms[i].clone())
            }
            ("indexOf", [x]) => Ok(Value::Int(ms.iter().position(|m| m == x).map(|i| i as i64).unwrap_or(-1))),
            ("asSeq", []) => Ok(Value::seq(ms)),
            ("asSet", []) => Ok(Value::set(ms)),
            ("reverse", []) => Ok(Value::seq(ms.into_iter().rev().collect())),
            ("prepend", [x]) => {
                let mut v = vec![x.clone()];
                v.extend(ms);
                Ok(rebuild(v))
            }
            ("append", [c]) => {
                let mut v = ms;
                match c.members() {
                    Some(cs) => v.extend(cs),
                    None => v.push(c.clone()),
                }
                Ok(rebuild(v))
            }
            ("flatten", []) => {
                let mut v = Vec::new();
                for m in ms {
                    match m.members() {
                        Some(xs) => v.extend(xs),
                        None => v.push(m),
                    }
                }
                Ok(rebuild(v))
            }
            ("sum", []) => {
                let mut t: i64 = 0;
                for m in ms {
                    let n = m.as_int().ok_or_else(|| Error::ty("sum over non-integers"))?;
                    t = t.checked_add(n).ok_or(Error::Overflow)?;
                }
                Ok(Value::Int(t))
            }
            ("max" | "min", []) => {
                let mut best: Option<i64> = None;
                for m in ms {
                    let n = m.as_int().ok_or_else(|| Error::ty("max/min over non-integers"))?;
                    best = Some(match best {
                        None => n,
                        Some(b) if name == "max" => b.max(n),
                        Some(b) => b.min(n),
                    });
                }
                best.map(Value::Int).ok_or(Error::EmptyCollection)
            }
            ("zip", [c]) => {
                let cs = c.members().ok_or_else(|| Error::ty("zip expects a collection"))?;
                Ok(Value::seq(ms.into_iter().zip(cs).map(|(x, y)| Value::seq(vec![x, y])).collect()))
            }
            ("setAt", [i, x]) => {
                let Value::Seq(s) = recv else { return Err(Error::ty("setAt on a set")) };
                let i = index(i, ms.len())?;
                s.borrow_mut()[i] = x.clone();
                Ok(recv.clone())
            }
            // Association lists: sequences of two-element sequences.
            ("lookup" | "ref", [k]) => match alist_find(&ms, k) {
                Some(i) => Ok(ms[i].members().unwrap()[1].clone()),
                None => Err(Error::User(format!("no field {}", key_name(k)))),
            },
            ("binds" | "hasKey", [k]) => Ok(Value::Bool(alist_find(&ms, k).is_some())),
            ("set" | "update", [k, v]) => {
                let i = alist_find(&ms, k).ok_or_else(|| Error::User(format!("no field {}", key_name(k))))?;
                let Value::Seq(pair) = &ms[i] else { unreachable!() };
                pair.borrow_mut()[1] = v.clone();
                Ok(recv.clone())
            }
            ("bind", [k, v]) => {
                let mut items = ms;
                items.push(Value::seq(vec![k.clone(), v.clone()]));
                Ok(rebuild(items))
            }
            ("keys", []) => {
                Ok(Value::seq(ms.iter().filter_map(|p| p.members().and_then(|p| p.first().cloned())).collect()))
            }
            _ => Err(Error::DoesNotUnderstand(name.to_string(), args.len())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(xs: &[i64]) -> Value {
        Value::seq(xs.iter().map(|n| Value::Int(*n)).collect())
    }

    #[test]
    fn collection_protocol() {
        let mut reg = Registry::new();
        let s = seq(&[1, 2, 3]);
        assert_eq!(reg.send(s.clone(), "size", vec![]).unwrap(), Value::Int(3));
        assert_eq!(reg.send(s.clone(), "at", vec![1.into()]).unwrap(), Value::Int(2));
        assert_eq!(reg.send(s.clone(), "indexOf", vec![3.into()]).unwrap(), Value::Int(2));
        assert_eq!(reg.send(s.clone(), "tail", vec![]).unwrap(), seq(&[2, 3]));
        assert_eq!(reg.send(seq(&[]), "sel", vec![]), Err(Error::EmptyCollection));
        assert_eq!(reg.send(seq(&[]), "head", vec![]), Err(Error::EmptyCollection));
        assert_eq!(reg.send(s.clone(), "sum", vec![]).unwrap(), Value::Int(6));
        reg.send(s.clone(), "setAt", vec![0.into(), 9.into()]).unwrap();
        assert_eq!(s, seq(&[9, 2, 3]));
    }

    #[test]
    fn alists_bind_lookup_update() {
        let mut reg = Registry::new();
        let l = reg.send(Value::seq(vec![]), "bind", vec!["head".into(), Value::Null]).unwrap();
        let l = reg.send(l, "bind", vec!["tail".into(), Value::Null]).unwrap();
        reg.send(l.clone(), "update", vec!["head".into(), 4.into()]).unwrap();
        assert_eq!(reg.send(l.clone(), "lookup", vec!["head".into()]).unwrap(), Value::Int(4));
        assert!(reg.send(l, "lookup", vec!["nope".into()]).is_err());
    }

    #[test]
    fn tables() {
        let mut reg = Registry::new();
        let t = Value::empty_table();
        reg.send(t.clone(), "put", vec!["a".into(), 1.into()]).unwrap();
        assert_eq!(reg.send(t.clone(), "get", vec!["a".into()]).unwrap(), Value::Int(1));
        assert_eq!(reg.send(t.clone(), "hasKey", vec!["b".into()]).unwrap(), Value::Bool(false));
        assert_eq!(reg.send(t, "keys", vec![]).unwrap(), Value::seq(vec!["a".into()]));
    }

    #[test]
    fn println_writes_display_form() {
        let mut reg = Registry::new();
        reg.send("Invalid State in addTransition()".into(), "println", vec![]).unwrap();
        assert_eq!(reg.take_output(), "Invalid State in addTransition()\n");
    }
}
