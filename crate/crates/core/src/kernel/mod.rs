//! Reflective object heap. Classes and packages are heap cells like any other
//! object; `Class` is its own class.

mod constraints;
mod display;
mod meta;
mod snapshot;

use std::rc::Rc;

use indexmap::IndexMap;

pub use constraints::{ConstraintOutcome, ConstraintReport};
pub use meta::{Sub, WalkKind, WalkStats};
pub use snapshot::{Snapshot, SnapshotEntry};

use crate::error::{Error, Result};
use crate::value::{ObjId, Value};
use crate::xbnf::GrammarDesc;
use crate::xmap::MappingDesc;
use crate::xocl::ast::{Expr, Param, TypeExpr};

/// A resolved (or still pending) attribute type.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeRef {
    Pending(TypeExpr),
    Class(ObjId),
    Set(Box<TypeRef>),
    Seq(Box<TypeRef>),
}

#[derive(Debug, Clone)]
pub struct AttributeDesc {
    pub name: String,
    pub ty: TypeRef,
    pub init: Option<Rc<Expr>>,
}

#[derive(Debug, Clone)]
pub struct OperationDesc {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Rc<Expr>,
    pub is_abstract: bool,
}

#[derive(Debug, Clone)]
pub struct ConstraintDesc {
    pub name: String,
    pub body: Rc<Expr>,
}

#[derive(Debug, Clone)]
pub struct ConstructorDesc {
    pub params: Vec<String>,
    pub body: Option<Rc<Expr>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Integer,
    Boolean,
    String,
    Null,
    Set,
    Seq,
    Table,
    Operation,
    Exp,
    XSync,
}

#[derive(Debug, Clone)]
pub struct ClassDesc {
    pub name: String,
    pub is_abstract: bool,
    pub parents: Vec<ObjId>,
    pub attributes: Vec<AttributeDesc>,
    pub operations: Vec<Rc<OperationDesc>>,
    pub constraints: Vec<Rc<ConstraintDesc>>,
    pub constructors: Vec<Rc<ConstructorDesc>>,
    pub grammar: Option<Rc<GrammarDesc>>,
    pub mapping: Option<Rc<MappingDesc>>,
    pub owner: Option<ObjId>,
    pub datatype: Option<DataKind>,
}

impl ClassDesc {
    pub fn new(name: &str) -> ClassDesc {
        ClassDesc {
            name: name.to_string(),
            is_abstract: false,
            parents: Vec::new(),
            attributes: Vec::new(),
            operations: Vec::new(),
            constraints: Vec::new(),
            constructors: Vec::new(),
            grammar: None,
            mapping: None,
            owner: None,
            datatype: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PackageDesc {
    pub name: String,
    pub imports: Vec<ObjId>,
    pub contents: IndexMap<String, Value>,
    pub owner: Option<ObjId>,
}

#[derive(Debug, Clone)]
pub enum Meta {
    Plain,
    Class(Box<ClassDesc>),
    Package(Box<PackageDesc>),
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub of: ObjId,
    pub slots: IndexMap<String, Value>,
    pub meta: Meta,
}

/// Well-known bootstrap classes.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub object: ObjId,
    pub named_element: ObjId,
    pub class: ObjId,
    pub datatype: ObjId,
    pub package: ObjId,
    pub sugar: ObjId,
    pub mapping: ObjId,
    pub sub: ObjId,
    pub integer: ObjId,
    pub boolean: ObjId,
    pub string: ObjId,
    pub null: ObjId,
    pub set: ObjId,
    pub seq: ObjId,
    pub table: ObjId,
    pub operation: ObjId,
    pub exp: ObjId,
    pub xsync: ObjId,
}

/// Slots a class cell answers from its descriptor.
const CLASS_SLOTS: &[&str] = &["name", "isAbstract", "parents", "attributes", "operations", "constraints"];
const PACKAGE_SLOTS: &[&str] = &["name", "imports", "contents"];

/// The heap plus everything loaded into it.
pub struct Registry {
    cells: Vec<Cell>,
    pub k: Kernel,
    pub root: ObjId,
    pub xcore: ObjId,
    pub snapshots: IndexMap<String, Snapshot>,
    pub output: String,
    pub max_steps: usize,
    pub(crate) depth: usize,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::bootstrap()
    }
}

pub const DEFAULT_MAX_STEPS: usize = 100_000;
const MAX_DEPTH: usize = 4000;

impl Registry {
    pub fn new() -> Registry {
        Registry::bootstrap()
    }

    pub fn bootstrap() -> Registry {
        let placeholder = ObjId(0);
        let mut reg = Registry {
            cells: Vec::new(),
            k: Kernel {
                object: placeholder,
                named_element: placeholder,
                class: placeholder,
                datatype: placeholder,
                package: placeholder,
                sugar: placeholder,
                mapping: placeholder,
                sub: placeholder,
                integer: placeholder,
                boolean: placeholder,
                string: placeholder,
                null: placeholder,
                set: placeholder,
                seq: placeholder,
                table: placeholder,
                operation: placeholder,
                exp: placeholder,
                xsync: placeholder,
            },
            root: placeholder,
            xcore: placeholder,
            snapshots: IndexMap::new(),
            output: String::new(),
            max_steps: DEFAULT_MAX_STEPS,
            depth: 0,
        };
        // Class first, so it can be its own class.
        let class = reg.alloc(ObjId(0), Meta::Class(Box::new(ClassDesc::new("Class"))));
        reg.k.class = class;
        let object = reg.raw_class("Object", &[]);
        let named = reg.raw_class("NamedElement", &[object]);
        reg.class_mut(class).unwrap().parents = vec![named];
        let datatype = reg.raw_class("DataType", &[class]);
        let package = reg.raw_class("Package", &[named]);
        let sugar = reg.raw_class("Sugar", &[object]);
        let mapping = reg.raw_class("Mapping", &[class]);
        let sub = reg.raw_class("Sub", &[object]);
        reg.k.object = object;
        reg.k.named_element = named;
        reg.k.datatype = datatype;
        reg.k.package = package;
        reg.k.sugar = sugar;
        reg.k.mapping = mapping;
        reg.k.sub = sub;
        let dt = |reg: &mut Registry, name: &str, kind: DataKind| {
            let id = reg.raw_class(name, &[object]);
            reg.cells[id.0].of = datatype;
            reg.class_mut(id).unwrap().datatype = Some(kind);
            id
        };
        reg.k.integer = dt(&mut reg, "Integer", DataKind::Integer);
        reg.k.boolean = dt(&mut reg, "Boolean", DataKind::Boolean);
        reg.k.string = dt(&mut reg, "String", DataKind::String);
        reg.k.null = dt(&mut reg, "Null", DataKind::Null);
        reg.k.set = dt(&mut reg, "Set", DataKind::Set);
        reg.k.seq = dt(&mut reg, "Seq", DataKind::Seq);
        reg.k.table = dt(&mut reg, "Table", DataKind::Table);
        reg.k.operation = dt(&mut reg, "Operation", DataKind::Operation);
        reg.k.exp = dt(&mut reg, "Exp", DataKind::Exp);
        reg.k.xsync = dt(&mut reg, "XSync", DataKind::XSync);

        let k = reg.k;
        let attr = |name: &str, ty: TypeRef| AttributeDesc { name: name.to_string(), ty, init: None };
        let seq_of = |c: ObjId| TypeRef::Seq(Box::new(TypeRef::Class(c)));
        reg.class_mut(named).unwrap().attributes = vec![attr("name", TypeRef::Class(k.string))];
        reg.class_mut(class).unwrap().attributes = vec![
            attr("isAbstract", TypeRef::Class(k.boolean)),
            attr("parents", seq_of(class)),
            attr("attributes", seq_of(object)),
            attr("operations", seq_of(object)),
            attr("constraints", seq_of(object)),
        ];
        reg.class_mut(package).unwrap().attributes =
            vec![attr("imports", seq_of(package)), attr("contents", TypeRef::Class(k.table))];
        reg.class_mut(sub).unwrap().attributes =
            vec![attr("from", TypeRef::Class(k.string)), attr("to", TypeRef::Class(k.string))];
        reg.class_mut(sub).unwrap().constructors =
            vec![Rc::new(ConstructorDesc { params: vec!["from".into(), "to".into()], body: None })];
        {
            let s = reg.class_mut(sugar).unwrap();
            s.is_abstract = true;
            s.operations.push(Rc::new(OperationDesc {
                name: "desugar".into(),
                params: vec![],
                body: Rc::new(Expr::Null),
                is_abstract: true,
            }));
        }

        let xcore = reg.new_package("XCore", None);
        let root = reg.new_package("Root", None);
        reg.xcore = xcore;
        reg.root = root;
        let ids: Vec<ObjId> = (0..reg.cells.len()).map(ObjId).filter(|id| reg.class(*id).is_some()).collect();
        for id in ids {
            let name = reg.class(id).unwrap().name.clone();
            reg.class_mut(id).unwrap().owner = Some(xcore);
            reg.package_mut(xcore).unwrap().contents.insert(name, Value::Obj(id));
        }
        reg.package_mut(xcore).unwrap().contents.insert("Element".into(), Value::Obj(object));
        reg.package_mut(root).unwrap().contents.insert("XCore".into(), Value::Obj(xcore));
        reg.package_mut(root).unwrap().contents.insert("Root".into(), Value::Obj(root));
        reg
    }

    fn raw_class(&mut self, name: &str, parents: &[ObjId]) -> ObjId {
        let mut d = ClassDesc::new(name);
        d.parents = parents.to_vec();
        let class = self.k.class;
        self.alloc(class, Meta::Class(Box::new(d)))
    }

    // ---- heap -------------------------------------------------------------

    pub fn alloc(&mut self, of: ObjId, meta: Meta) -> ObjId {
        let id = ObjId(self.cells.len());
        self.cells.push(Cell { of, slots: IndexMap::new(), meta });
        id
    }

    pub fn cell(&self, id: ObjId) -> &Cell {
        &self.cells[id.0]
    }

    pub fn cell_mut(&mut self, id: ObjId) -> &mut Cell {
        &mut self.cells[id.0]
    }

    pub fn heap_size(&self) -> usize {
        self.cells.len()
    }

    pub fn class(&self, id: ObjId) -> Option<&ClassDesc> {
        match &self.cells.get(id.0)?.meta {
            Meta::Class(d) => Some(d),
            _ => None,
        }
    }

    pub fn class_mut(&mut self, id: ObjId) -> Option<&mut ClassDesc> {
        match &mut self.cells.get_mut(id.0)?.meta {
            Meta::Class(d) => Some(d),
            _ => None,
        }
    }

    pub fn package(&self, id: ObjId) -> Option<&PackageDesc> {
        match &self.cells.get(id.0)?.meta {
            Meta::Package(d) => Some(d),
            _ => None,
        }
    }

    pub fn package_mut(&mut self, id: ObjId) -> Option<&mut PackageDesc> {
        match &mut self.cells.get_mut(id.0)?.meta {
            Meta::Package(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_class(&self, id: ObjId) -> bool {
        self.class(id).is_some()
    }

    pub(crate) fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            self.depth = 0;
            return Err(Error::User("recursion depth exceeded".into()));
        }
        Ok(())
    }

    pub(crate) fn leave(&mut self) {
        self.depth = self.depth.saturating_sub(1);
    }

    pub fn write_out(&mut self, s: &str) {
        self.output.push_str(s);
    }

    pub fn take_output(&mut self) -> String {
        std::mem::take(&mut self.output)
    }

    // ---- classification ---------------------------------------------------

    pub fn of(&self, v: &Value) -> ObjId {
        let k = &self.k;
        match v {
            Value::Null => k.null,
            Value::Bool(_) => k.boolean,
            Value::Int(_) => k.integer,
            Value::Str(_) => k.string,
            Value::Seq(_) => k.seq,
            Value::Set(_) => k.set,
            Value::Table(_) => k.table,
            Value::Obj(id) => self.cells[id.0].of,
            Value::Op(_) => k.operation,
            Value::Expr(_) => k.exp,
            Value::Sync(_) => k.xsync,
        }
    }

    pub fn class_name(&self, id: ObjId) -> String {
        self.class(id).map(|c| c.name.clone()).unwrap_or_else(|| format!("#{}", id.0))
    }

    /// `Pkg::Sub::Class`, omitting the bootstrap package.
    pub fn class_path(&self, id: ObjId) -> String {
        let mut parts = vec![self.class_name(id)];
        let mut owner = self.class(id).and_then(|c| c.owner);
        while let Some(p) = owner {
            if p == self.xcore || p == self.root {
                break;
            }
            let pd = self.package(p).unwrap();
            parts.push(pd.name.clone());
            owner = pd.owner;
        }
        parts.reverse();
        parts.join("::")
    }

    /// The class followed by its ancestors, depth-first in declaration order.
    pub fn linearize(&self, c: ObjId) -> Result<Vec<ObjId>> {
        fn go(reg: &Registry, c: ObjId, stack: &mut Vec<ObjId>, out: &mut Vec<ObjId>) -> Result<()> {
            if stack.contains(&c) {
                return Err(Error::InheritanceCycle);
            }
            if !out.contains(&c) {
                out.push(c);
            }
            stack.push(c);
            let parents = reg.class(c).map(|d| d.parents.clone()).unwrap_or_default();
            for p in parents {
                go(reg, p, stack, out)?;
            }
            stack.pop();
            Ok(())
        }
        let mut out = Vec::new();
        go(self, c, &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    pub fn is_subclass(&self, c: ObjId, p: ObjId) -> bool {
        c == p || self.linearize(c).map(|l| l.contains(&p)).unwrap_or(false)
    }

    pub fn is_kind_of(&self, v: &Value, c: ObjId) -> bool {
        self.is_subclass(self.of(v), c)
    }

    pub fn all_attributes(&self, c: ObjId) -> Result<Vec<AttributeDesc>> {
        fn go(reg: &Registry, c: ObjId, stack: &mut Vec<ObjId>) -> Result<Vec<AttributeDesc>> {
            if stack.contains(&c) {
                return Err(Error::InheritanceCycle);
            }
            stack.push(c);
            let mut out: Vec<AttributeDesc> = Vec::new();
            let Some(d) = reg.class(c) else {
                stack.pop();
                return Ok(out);
            };
            for p in &d.parents {
                for a in go(reg, *p, stack)? {
                    if !out.iter().any(|x| x.name == a.name) {
                        out.push(a);
                    }
                }
            }
            for a in &d.attributes {
                match out.iter_mut().find(|x| x.name == a.name) {
                    Some(slot) => *slot = a.clone(),
                    None => out.push(a.clone()),
                }
            }
            stack.pop();
            Ok(out)
        }
        go(self, c, &mut Vec::new())
    }

    pub fn attribute(&self, c: ObjId, name: &str) -> Option<AttributeDesc> {
        self.all_attributes(c).ok()?.into_iter().find(|a| a.name == name)
    }

    pub fn feature_names(&self, o: ObjId) -> Vec<String> {
        let cell = &self.cells[o.0];
        match &cell.meta {
            Meta::Plain => cell.slots.keys().cloned().collect(),
            _ => self.all_attributes(cell.of).map(|a| a.into_iter().map(|a| a.name).collect()).unwrap_or_default(),
        }
    }

    pub fn has_slot(&self, o: ObjId, name: &str) -> bool {
        let cell = &self.cells[o.0];
        cell.slots.contains_key(name)
            || match &cell.meta {
                Meta::Class(_) => CLASS_SLOTS.contains(&name),
                Meta::Package(_) => PACKAGE_SLOTS.contains(&name),
                Meta::Plain => false,
            }
    }

    pub fn get_slot(&self, o: ObjId, name: &str) -> Result<Value> {
        let cell = self.cells.get(o.0).ok_or_else(|| Error::NoSlot(name.to_string()))?;
        if let Some(v) = cell.slots.get(name) {
            return Ok(v.clone());
        }
        match &cell.meta {
            Meta::Class(d) => match name {
                "name" => Ok(Value::str(&d.name)),
                "isAbstract" => Ok(Value::Bool(d.is_abstract)),
                "parents" => Ok(Value::seq(d.parents.iter().map(|p| Value::Obj(*p)).collect())),
                "attributes" => Ok(Value::seq(d.attributes.iter().map(|a| Value::str(&a.name)).collect())),
                "operations" => Ok(Value::seq(d.operations.iter().map(|a| Value::str(&a.name)).collect())),
                "constraints" => Ok(Value::seq(d.constraints.iter().map(|a| Value::str(&a.name)).collect())),
                _ => Err(Error::NoSlot(name.to_string())),
            },
            Meta::Package(d) => match name {
                "name" => Ok(Value::str(&d.name)),
                "imports" => Ok(Value::seq(d.imports.iter().map(|p| Value::Obj(*p)).collect())),
                "contents" => Ok(Value::seq(d.contents.values().cloned().collect())),
                _ => Err(Error::NoSlot(name.to_string())),
            },
            Meta::Plain => Err(Error::NoSlot(name.to_string())),
        }
    }

    pub fn set_slot(&mut self, o: ObjId, name: &str, v: Value) -> Result<()> {
        let cell = self.cells.get(o.0).ok_or_else(|| Error::NoSlot(name.to_string()))?;
        if !cell.slots.contains_key(name) {
            match (&cell.meta, name) {
                (Meta::Class(_), "name") => {
                    let s = v.as_str().ok_or_else(|| Error::SlotType("name".into()))?.to_string();
                    self.class_mut(o).unwrap().name = s;
                    return Ok(());
                }
                (Meta::Class(_), "isAbstract") => {
                    let b = v.as_bool().ok_or_else(|| Error::SlotType("isAbstract".into()))?;
                    self.class_mut(o).unwrap().is_abstract = b;
                    return Ok(());
                }
                (Meta::Package(_), "name") => {
                    let s = v.as_str().ok_or_else(|| Error::SlotType("name".into()))?.to_string();
                    self.package_mut(o).unwrap().name = s;
                    return Ok(());
                }
                _ => return Err(Error::NoSlot(name.to_string())),
            }
        }
        let of = cell.of;
        if let Some(a) = self.attribute(of, name) {
            self.check_type(&a.ty, &v, name)?;
        }
        self.cells[o.0].slots.insert(name.to_string(), v);
        Ok(())
    }

    fn check_type(&self, ty: &TypeRef, v: &Value, slot: &str) -> Result<()> {
        if v.is_null() {
            return Ok(());
        }
        let bad = || Error::SlotType(slot.to_string());
        match ty {
            TypeRef::Pending(_) => Ok(()),
            TypeRef::Class(c) => {
                if self.class(*c).map(|d| d.datatype.is_some()).unwrap_or(true) || self.is_kind_of(v, *c) {
                    Ok(())
                } else {
                    Err(bad())
                }
            }
            TypeRef::Set(t) | TypeRef::Seq(t) => {
                let ms = v.members().ok_or_else(bad)?;
                for m in ms {
                    self.check_type(t, &m, slot)?;
                }
                Ok(())
            }
        }
    }

    /// First operation with this name and arity along the linearization,
    /// with the class that declares it.
    pub fn find_operation(&self, c: ObjId, name: &str, arity: usize) -> Option<(ObjId, Rc<OperationDesc>)> {
        for k in self.linearize(c).ok()? {
            if let Some(d) = self.class(k) {
                if let Some(op) = d.operations.iter().rev().find(|o| o.name == name && o.params.len() == arity) {
                    return Some((k, op.clone()));
                }
            }
        }
        None
    }

    pub fn lookup_operation(&self, c: ObjId, name: &str, arity: usize) -> Option<Rc<OperationDesc>> {
        self.find_operation(c, name, arity).map(|(_, op)| op)
    }

    pub fn lookup_operation_of(&self, o: ObjId, name: &str, arity: usize) -> Result<Rc<OperationDesc>> {
        self.lookup_operation(self.cells[o.0].of, name, arity)
            .ok_or_else(|| Error::DoesNotUnderstand(name.to_string(), arity))
    }

    /// Constraints of the class and its ancestors, ancestors first.
    pub fn all_constraints(&self, c: ObjId) -> Vec<(ObjId, Rc<ConstraintDesc>)> {
        let mut lin = self.linearize(c).unwrap_or_default();
        lin.reverse();
        let mut out = Vec::new();
        for k in lin {
            if let Some(d) = self.class(k) {
                for con in &d.constraints {
                    out.push((k, con.clone()));
                }
            }
        }
        out
    }

    fn find_constructor(&self, c: ObjId, arity: usize) -> Option<Rc<ConstructorDesc>> {
        for k in self.linearize(c).ok()? {
            if let Some(d) = self.class(k) {
                if let Some(ctor) = d.constructors.iter().rev().find(|x| x.params.len() == arity) {
                    return Some(ctor.clone());
                }
            }
        }
        None
    }

    // ---- definition -------------------------------------------------------

    /// Registers a fresh class; `owner` receives it in its contents.
    pub fn new_class(&mut self, name: &str, parents: &[ObjId], owner: Option<ObjId>) -> ObjId {
        let mut d = ClassDesc::new(name);
        d.parents = if parents.is_empty() { vec![self.k.object] } else { parents.to_vec() };
        d.owner = owner;
        let class = self.k.class;
        let id = self.alloc(class, Meta::Class(Box::new(d)));
        if let Some(p) = owner {
            self.package_mut(p).unwrap().contents.insert(name.to_string(), Value::Obj(id));
        }
        id
    }

    pub fn new_package(&mut self, name: &str, owner: Option<ObjId>) -> ObjId {
        let d = PackageDesc { name: name.to_string(), imports: Vec::new(), contents: IndexMap::new(), owner };
        let package = self.k.package;
        let id = self.alloc(package, Meta::Package(Box::new(d)));
        if let Some(p) = owner {
            self.package_mut(p).unwrap().contents.insert(name.to_string(), Value::Obj(id));
        }
        id
    }

    /// Adds an attribute; live instances gain a null slot.
    pub fn add_attribute(&mut self, c: ObjId, a: AttributeDesc) -> Result<()> {
        let name = a.name.clone();
        {
            let d = self.class_mut(c).ok_or_else(|| Error::ty("not a class"))?;
            match d.attributes.iter_mut().find(|x| x.name == a.name) {
                Some(x) => *x = a,
                None => d.attributes.push(a),
            }
        }
        for i in 0..self.cells.len() {
            let of = self.cells[i].of;
            if matches!(self.cells[i].meta, Meta::Plain)
                && !self.cells[i].slots.contains_key(&name)
                && self.is_subclass(of, c)
            {
                self.cells[i].slots.insert(name.clone(), Value::Null);
            }
        }
        Ok(())
    }

    pub fn add_operation(&mut self, c: ObjId, op: OperationDesc) {
        let d = self.class_mut(c).unwrap();
        d.operations.retain(|o| !(o.name == op.name && o.params.len() == op.params.len()));
        d.operations.push(Rc::new(op));
    }

    pub fn set_parents(&mut self, c: ObjId, parents: Vec<ObjId>) -> Result<()> {
        let old = std::mem::replace(&mut self.class_mut(c).unwrap().parents, parents);
        if self.linearize(c).is_err() {
            self.class_mut(c).unwrap().parents = old;
            return Err(Error::InheritanceCycle);
        }
        Ok(())
    }

    /// Resolves pending attribute types of every class.
    pub fn resolve_types(&mut self) -> Result<()> {
        for i in 0..self.cells.len() {
            let id = ObjId(i);
            let Some(d) = self.class(id) else { continue };
            if !d.attributes.iter().any(|a| has_pending(&a.ty)) {
                continue;
            }
            let ns = d.owner;
            let mut attrs = d.attributes.clone();
            for a in attrs.iter_mut() {
                a.ty = self.resolve_type(&a.ty, ns)?;
            }
            self.class_mut(id).unwrap().attributes = attrs;
        }
        Ok(())
    }

    fn resolve_type(&self, t: &TypeRef, ns: Option<ObjId>) -> Result<TypeRef> {
        Ok(match t {
            TypeRef::Pending(te) => self.type_from_expr(te, ns)?,
            TypeRef::Set(t) => TypeRef::Set(Box::new(self.resolve_type(t, ns)?)),
            TypeRef::Seq(t) => TypeRef::Seq(Box::new(self.resolve_type(t, ns)?)),
            other => other.clone(),
        })
    }

    pub fn type_from_expr(&self, te: &TypeExpr, ns: Option<ObjId>) -> Result<TypeRef> {
        Ok(match te {
            TypeExpr::Named(p) => match self.resolve_path(ns, p)? {
                Value::Obj(c) if self.is_class(c) => TypeRef::Class(c),
                _ => return Err(Error::UnboundPath(p.join("::"))),
            },
            TypeExpr::Set(t) => TypeRef::Set(Box::new(self.type_from_expr(t, ns)?)),
            TypeExpr::Seq(t) => TypeRef::Seq(Box::new(self.type_from_expr(t, ns)?)),
        })
    }

    // ---- namespaces -------------------------------------------------------

    fn package_lookup(&self, p: ObjId, name: &str, seen: &mut Vec<ObjId>) -> Option<Value> {
        if seen.contains(&p) {
            return None;
        }
        seen.push(p);
        let d = self.package(p)?;
        if let Some(v) = d.contents.get(name) {
            return Some(v.clone());
        }
        for i in &d.imports {
            if let Some(v) = self.package(*i).and_then(|ip| ip.contents.get(name)) {
                return Some(v.clone());
            }
        }
        None
    }

    /// Bare-name lookup from a namespace: the package and its imports, then
    /// enclosing packages, Root, XCore and finally every loaded package.
    pub fn resolve_name(&self, ns: Option<ObjId>, name: &str) -> Option<Value> {
        let mut seen = Vec::new();
        let mut cur =
            ns.and_then(|n| if self.package(n).is_some() { Some(n) } else { self.class(n).and_then(|c| c.owner) });
        while let Some(p) = cur {
            if let Some(v) = self.package_lookup(p, name, &mut seen) {
                return Some(v);
            }
            cur = self.package(p).and_then(|d| d.owner);
        }
        for p in [self.root, self.xcore] {
            if let Some(v) = self.package_lookup(p, name, &mut seen) {
                return Some(v);
            }
        }
        let mut all: Vec<ObjId> = Vec::new();
        self.collect_packages(self.root, &mut all);
        for p in all {
            if let Some(v) = self.package(p).and_then(|d| d.contents.get(name)) {
                return Some(v.clone());
            }
        }
        None
    }

    fn collect_packages(&self, p: ObjId, out: &mut Vec<ObjId>) {
        let Some(d) = self.package(p) else { return };
        for v in d.contents.values() {
            if let Value::Obj(id) = v {
                if self.package(*id).is_some() && !out.contains(id) && *id != self.root {
                    out.push(*id);
                    self.collect_packages(*id, out);
                }
            }
        }
    }

    pub fn resolve_path(&self, ns: Option<ObjId>, path: &[String]) -> Result<Value> {
        let unbound = || Error::UnboundPath(path.join("::"));
        let (first, rest) = path.split_first().ok_or_else(unbound)?;
        let mut cur = self.resolve_name(ns, first).ok_or_else(unbound)?;
        for seg in rest {
            let id = cur.as_obj().ok_or_else(unbound)?;
            cur = self.package(id).and_then(|d| d.contents.get(seg).cloned()).ok_or_else(unbound)?;
        }
        Ok(cur)
    }

    pub fn resolve_path_str(&self, path: &str) -> Result<Value> {
        let segs: Vec<String> = path.split("::").map(|s| s.trim().to_string()).collect();
        self.resolve_path(None, &segs)
    }

    pub fn class_by_path(&self, path: &str) -> Result<ObjId> {
        match self.resolve_path_str(path)? {
            Value::Obj(c) if self.is_class(c) => Ok(c),
            _ => Err(Error::UnboundPath(path.to_string())),
        }
    }

    pub fn package_of_class(&self, c: ObjId) -> Option<ObjId> {
        self.class(c).and_then(|d| d.owner)
    }

    // ---- instantiation ----------------------------------------------------

    /// Creates an object of class `c`. Metaclass instances are new classes.
    pub fn instantiate(&mut self, c: ObjId, args: Vec<Value>) -> Result<Value> {
        let d = self.class(c).ok_or_else(|| Error::ty("instantiate: not a class"))?;
        if d.is_abstract {
            return Err(Error::Abstract(d.name.clone()));
        }
        if let Some(kind) = d.datatype {
            return match (kind, args.len()) {
                (DataKind::Table, _) => Ok(Value::empty_table()),
                (DataKind::Set, _) => Ok(Value::set(args)),
                (DataKind::Seq, _) => Ok(Value::seq(args)),
                _ => Err(Error::NoConstructor(args.len())),
            };
        }
        if self.is_subclass(c, self.k.class) {
            let name = match args.as_slice() {
                [] => String::new(),
                [Value::Str(s)] => s.to_string(),
                _ => return Err(Error::NoConstructor(args.len())),
            };
            let mut desc = ClassDesc::new(&name);
            desc.parents = vec![self.k.object];
            let id = self.alloc(c, Meta::Class(Box::new(desc)));
            for a in self.all_attributes(c)? {
                if !CLASS_SLOTS.contains(&a.name.as_str()) {
                    self.cells[id.0].slots.insert(a.name.clone(), Value::Null);
                }
            }
            return Ok(Value::Obj(id));
        }
        if self.is_subclass(c, self.k.package) {
            let name = args.first().and_then(|v| v.as_str()).unwrap_or("").to_string();
            return Ok(Value::Obj(self.new_package(&name, None)));
        }
        let ctor = if args.is_empty() {
            self.find_constructor(c, 0)
        } else {
            Some(self.find_constructor(c, args.len()).ok_or(Error::NoConstructor(args.len()))?)
        };
        let attrs = self.all_attributes(c)?;
        let id = self.alloc(c, Meta::Plain);
        for a in &attrs {
            self.cells[id.0].slots.insert(a.name.clone(), Value::Null);
        }
        let ns = self.package_of_class(c);
        let obj = Value::Obj(id);
        for a in &attrs {
            if let Some(init) = &a.init {
                let v = self.eval(init, &crate::env::Env::new(), &crate::xocl::Ctx::new(obj.clone(), ns))?;
                self.set_slot(id, &a.name, v)?;
            }
        }
        if let Some(ctor) = ctor {
            let mut env = crate::env::Env::new();
            for (p, v) in ctor.params.iter().zip(args.iter()) {
                if self.has_slot(id, p) {
                    self.set_slot(id, p, v.clone())?;
                }
                env = env.bind(p, v.clone());
            }
            if let Some(body) = &ctor.body {
                self.eval(body, &env, &crate::xocl::Ctx::new(obj.clone(), ns))?;
            }
        }
        Ok(obj)
    }

    /// Makes a plain object with the given slot values, bypassing constructors.
    pub fn make_object(&mut self, c: ObjId, slots: Vec<(&str, Value)>) -> Result<ObjId> {
        let id = self.instantiate(c, vec![])?.as_obj().ok_or_else(|| Error::ty("not an object"))?;
        for (n, v) in slots {
            self.set_slot(id, n, v)?;
        }
        Ok(id)
    }
}

fn has_pending(t: &TypeRef) -> bool {
    match t {
        TypeRef::Pending(_) => true,
        TypeRef::Set(t) | TypeRef::Seq(t) => has_pending(t),
        TypeRef::Class(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(n: &str) -> AttributeDesc {
        AttributeDesc { name: n.into(), ty: TypeRef::Pending(TypeExpr::Named(vec!["String".into()])), init: None }
    }

    #[test]
    fn golden_braid() {
        let reg = Registry::bootstrap();
        let k = reg.k;
        assert_eq!(reg.of(&Value::Obj(k.class)), k.class);
        assert!(reg.is_kind_of(&Value::Obj(k.class), k.object));
        assert_eq!(reg.of(&Value::Obj(k.object)), k.class);
        assert_eq!(reg.of(&Value::Int(3)), k.integer);
        assert_eq!(reg.of(&Value::Null), k.null);
        assert!(!reg.is_kind_of(&Value::Int(3), k.boolean));
    }

    #[test]
    fn metaclass_instances_are_classes() {
        let mut reg = Registry::bootstrap();
        let c = reg.instantiate(reg.k.class, vec!["C".into()]).unwrap();
        let id = c.as_obj().unwrap();
        assert_eq!(reg.of(&Value::Obj(reg.of(&c))), reg.k.class);
        assert_eq!(reg.class_name(id), "C");
        let o = reg.instantiate(id, vec![]).unwrap();
        assert_eq!(reg.of(&o), id);
    }

    #[test]
    fn diamond_flattens_to_one_attribute() {
        let mut reg = Registry::bootstrap();
        let a = reg.new_class("A", &[], None);
        reg.add_attribute(a, attr("x")).unwrap();
        let b = reg.new_class("B", &[a], None);
        let c = reg.new_class("C", &[a], None);
        let d = reg.new_class("D", &[b, c], None);
        reg.add_attribute(d, attr("y")).unwrap();
        let names: Vec<String> = reg.all_attributes(d).unwrap().into_iter().map(|a| a.name).collect();
        assert_eq!(names, vec!["x", "y"]);
        assert!(reg.all_attributes(reg.k.object).unwrap().is_empty());
    }

    #[test]
    fn cycles_are_rejected() {
        let mut reg = Registry::bootstrap();
        let a = reg.new_class("A", &[], None);
        let b = reg.new_class("B", &[a], None);
        assert_eq!(reg.set_parents(a, vec![b]), Err(Error::InheritanceCycle));
        assert!(reg.linearize(a).is_ok());
    }

    #[test]
    fn slots_and_kind_checks() {
        let mut reg = Registry::bootstrap();
        let p = reg.new_package("P", Some(reg.root));
        let ev = reg.new_class("Event", &[], Some(p));
        let t = reg.new_class("T", &[], Some(p));
        reg.add_attribute(t, AttributeDesc { name: "event".into(), ty: TypeRef::Class(ev), init: None }).unwrap();
        let o = reg.instantiate(t, vec![]).unwrap().as_obj().unwrap();
        assert_eq!(reg.get_slot(o, "event").unwrap(), Value::Null);
        assert!(matches!(reg.set_slot(o, "event", 3.into()), Err(Error::SlotType(_))));
        let e = reg.instantiate(ev, vec![]).unwrap();
        reg.set_slot(o, "event", e.clone()).unwrap();
        assert_eq!(reg.get_slot(o, "event").unwrap(), e);
        assert!(matches!(reg.get_slot(o, "missing"), Err(Error::NoSlot(_))));
        assert_eq!(reg.feature_names(o), vec!["event"]);
    }

    #[test]
    fn abstract_and_arity_errors() {
        let mut reg = Registry::bootstrap();
        let a = reg.new_class("A", &[], None);
        reg.class_mut(a).unwrap().is_abstract = true;
        assert!(matches!(reg.instantiate(a, vec![]), Err(Error::Abstract(_))));
        let b = reg.new_class("B", &[], None);
        assert_eq!(reg.instantiate(b, vec![1.into()]), Err(Error::NoConstructor(1)));
    }

    #[test]
    fn paths_resolve_through_packages() {
        let mut reg = Registry::bootstrap();
        let x = reg.new_package("X", Some(reg.root));
        let y = reg.new_class("Y", &[], Some(x));
        let a = reg.new_package("A", Some(reg.root));
        reg.package_mut(a).unwrap().imports.push(x);
        assert_eq!(reg.resolve_path_str("X::Y").unwrap(), Value::Obj(y));
        assert_eq!(reg.resolve_path(Some(a), &["Y".into()]).unwrap(), Value::Obj(y));
        assert!(matches!(reg.resolve_path_str("No::Such"), Err(Error::UnboundPath(_))));
        assert_eq!(reg.class_path(y), "X::Y");
    }

    #[test]
    fn adding_an_attribute_extends_live_instances() {
        let mut reg = Registry::bootstrap();
        let a = reg.new_class("A", &[], None);
        let o = reg.instantiate(a, vec![]).unwrap().as_obj().unwrap();
        reg.add_attribute(a, attr("z")).unwrap();
        assert_eq!(reg.get_slot(o, "z").unwrap(), Value::Null);
    }
}
