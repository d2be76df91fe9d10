use std::collections::HashMap;
use std::fmt::Write;

use super::{Meta, Registry};
use crate::value::{ObjId, Value};

fn quote(s: &str) -> String {
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

impl Registry {
    /// First snapshot label bound to the object, if any.
    pub fn label_of(&self, id: ObjId) -> Option<&str> {
        self.snapshots.values().flat_map(|s| s.labels.iter()).find(|(_, v)| **v == id).map(|(l, _)| l.as_str())
    }

    /// Console form: strings raw, objects `<Class name-or-label>`.
    pub fn display(&self, v: &Value) -> String {
        match v {
            Value::Str(s) => s.to_string(),
            other => self.display_nested(other),
        }
    }

    fn display_nested(&self, v: &Value) -> String {
        match v {
            Value::Null => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Int(n) => n.to_string(),
            Value::Str(s) => quote(s),
            Value::Seq(s) => {
                let items: Vec<String> = s.borrow().iter().map(|x| self.display_nested(x)).collect();
                format!("Seq{{{}}}", items.join(","))
            }
            Value::Set(s) => {
                let items: Vec<String> = s.iter().map(|x| self.display_nested(x)).collect();
                format!("Set{{{}}}", items.join(","))
            }
            Value::Table(t) => format!("<Table {}>", t.borrow().len()),
            Value::Obj(id) => self.display_obj(*id),
            Value::Op(c) => format!("<Operation {}>", c.name.borrow()),
            Value::Expr(e) => format!("[| {} |]", crate::xocl::print::expr_to_string(e)),
            Value::Sync(_) => "<XSync>".into(),
        }
    }

    fn display_obj(&self, id: ObjId) -> String {
        let cell = self.cell(id);
        let cname = self.class_name(cell.of);
        let tag = match &cell.meta {
            Meta::Class(d) => d.name.clone(),
            Meta::Package(d) => d.name.clone(),
            Meta::Plain => match cell.slots.get("name") {
                Some(Value::Str(s)) => s.to_string(),
                _ => self.label_of(id).map(str::to_string).unwrap_or_else(|| format!("#{}", id.0)),
            },
        };
        format!("<{cname} {tag}>")
    }

    /// Snapshot-literal rendering: `Path[slot = value, ...]`, nested objects
    /// inline, repeated objects by their console form.
    pub fn literal(&self, v: &Value) -> String {
        let mut seen = Vec::new();
        self.literal_in(v, &mut seen)
    }

    fn literal_in(&self, v: &Value, seen: &mut Vec<ObjId>) -> String {
        match v {
            Value::Obj(id) if matches!(self.cell(*id).meta, Meta::Plain) => {
                if seen.contains(id) {
                    return self.display_obj(*id);
                }
                seen.push(*id);
                let cell = self.cell(*id);
                let fields: Vec<String> =
                    cell.slots.iter().map(|(k, x)| format!("{k} = {}", self.literal_in(x, seen))).collect();
                format!("{}[{}]", self.class_path(cell.of), fields.join(", "))
            }
            Value::Seq(s) => {
                let items: Vec<String> = s.borrow().iter().map(|x| self.literal_in(x, seen)).collect();
                format!("Seq{{{}}}", items.join(", "))
            }
            Value::Set(s) => {
                let items: Vec<String> = s.iter().map(|x| self.literal_in(x, seen)).collect();
                format!("Set{{{}}}", items.join(", "))
            }
            other => self.display_nested(other),
        }
    }

    /// Canonical text of everything reachable from `roots`; objects are
    /// numbered in first-encounter order so equal graphs serialize equally.
    pub fn serialize_from(&self, roots: &[Value]) -> String {
        let mut ids: HashMap<ObjId, usize> = HashMap::new();
        let mut order: Vec<ObjId> = Vec::new();
        let mut out = String::new();
        for r in roots {
            let s = self.ser_value(r, &mut ids, &mut order);
            let _ = writeln!(out, "root {s}");
        }
        let mut i = 0;
        while i < order.len() {
            let id = order[i];
            let cell = self.cell(id);
            let mut line = format!("#{} : {}", ids[&id], self.class_name(cell.of));
            if let Meta::Class(d) = &cell.meta {
                let _ = write!(line, " class {} {}", d.name, d.attributes.len());
            }
            for (k, v) in cell.slots.clone() {
                let s = self.ser_value(&v, &mut ids, &mut order);
                let _ = write!(line, " {k}={s}");
            }
            let _ = writeln!(out, "{line}");
            i += 1;
        }
        out
    }

    fn ser_value(&self, v: &Value, ids: &mut HashMap<ObjId, usize>, order: &mut Vec<ObjId>) -> String {
        match v {
            Value::Obj(id) => {
                let n = ids.len();
                let k = *ids.entry(*id).or_insert_with(|| {
                    order.push(*id);
                    n
                });
                format!("#{k}")
            }
            Value::Seq(s) => {
                let items: Vec<String> = s.borrow().iter().map(|x| self.ser_value(x, ids, order)).collect();
                format!("Seq{{{}}}", items.join(","))
            }
            Value::Set(s) => {
                let items: Vec<String> = s.iter().map(|x| self.ser_value(x, ids, order)).collect();
                format!("Set{{{}}}", items.join(","))
            }
            Value::Table(t) => {
                let items: Vec<String> = t
                    .borrow()
                    .iter()
                    .map(|(k, x)| format!("{}->{}", self.ser_value(k, ids, order), self.ser_value(x, ids, order)))
                    .collect();
                format!("Table{{{}}}", items.join(","))
            }
            other => self.display_nested(other),
        }
    }

    /// Serialization of the whole heap, used to check that evaluation is pure.
    pub fn serialize_heap(&self) -> String {
        let mut out = String::new();
        for i in 0..self.heap_size() {
            let cell = self.cell(ObjId(i));
            let _ = write!(out, "{i}:{}", cell.of.0);
            match &cell.meta {
                Meta::Class(d) => {
                    let _ = write!(
                        out,
                        " class {} {:?} {} {} {}",
                        d.name,
                        d.parents,
                        d.attributes.len(),
                        d.operations.len(),
                        d.constraints.len()
                    );
                }
                Meta::Package(d) => {
                    let _ = write!(out, " package {} {:?}", d.name, d.contents.keys().collect::<Vec<_>>());
                }
                Meta::Plain => {}
            }
            for (k, v) in &cell.slots {
                let _ = write!(out, " {k}={}", self.ser_shallow(v));
            }
            out.push('\n');
        }
        out
    }

    fn ser_shallow(&self, v: &Value) -> String {
        match v {
            Value::Obj(id) => format!("#{}", id.0),
            Value::Seq(s) => {
                format!("Seq{{{}}}", s.borrow().iter().map(|x| self.ser_shallow(x)).collect::<Vec<_>>().join(","))
            }
            Value::Set(s) => format!("Set{{{}}}", s.iter().map(|x| self.ser_shallow(x)).collect::<Vec<_>>().join(",")),
            Value::Table(t) => format!(
                "Table{{{}}}",
                t.borrow()
                    .iter()
                    .map(|(k, x)| format!("{}->{}", self.ser_shallow(k), self.ser_shallow(x)))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            other => self.display_nested(other),
        }
    }
}
