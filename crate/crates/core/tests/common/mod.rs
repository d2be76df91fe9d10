#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use mmk::xaction::ast::{Atom, XaExp, XaOp, XaStmt};
use proptest::prelude::*;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// The XAction programs, sorted by file name.
pub fn xaction_corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(data_dir().join("xaction"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "xa"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

const NAMES: [&str; 6] = ["a", "b", "x", "list", "Pair", "n1"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&NAMES[..]).prop_map(str::to_string)
}

pub fn arb_exp(depth: u32) -> BoxedStrategy<XaExp> {
    let leaf = prop_oneof![
        (0i64..1000).prop_map(XaExp::int),
        any::<bool>().prop_map(|b| XaExp::Const(Atom::Bool(b))),
        name().prop_map(XaExp::Var),
        name().prop_map(XaExp::New),
    ];
    if depth <= 1 {
        return leaf.boxed();
    }
    let sub = arb_exp(depth - 1);
    prop_oneof![
        leaf,
        (prop::sample::select(&XaOp::ALL[..]), sub.clone(), sub.clone()).prop_map(|(op, l, r)| XaExp::bin(op, l, r)),
        (sub, name()).prop_map(|(e, n)| XaExp::FieldRef(Box::new(e), n)),
    ]
    .boxed()
}

/// Statements whose tree depth, counting expressions, is at most `depth`.
pub fn arb_stmt(depth: u32) -> BoxedStrategy<XaStmt> {
    let bare = prop_oneof![
        (name(), prop::collection::vec(name(), 0..3)).prop_map(|(n, ns)| XaStmt::TypeDeclaration(n, ns)),
        Just(XaStmt::Block(vec![])),
    ];
    if depth <= 1 {
        return bare.boxed();
    }
    let e = arb_exp(depth - 1);
    let leaf = prop_oneof![
        bare,
        (name(), e.clone()).prop_map(|(n, e)| XaStmt::ValueDeclaration(n, e)),
        (name(), e.clone()).prop_map(|(n, e)| XaStmt::Update(n, e)),
        (e.clone(), name(), e.clone()).prop_map(|(r, n, v)| XaStmt::FieldUpdate(r, n, v)),
    ];
    if depth == 2 {
        return leaf.boxed();
    }
    let sub = arb_stmt(depth - 1);
    prop_oneof![
        2 => leaf,
        1 => prop::collection::vec(sub.clone(), 0..4).prop_map(XaStmt::Block),
        1 => (e.clone(), sub.clone()).prop_map(|(t, b)| XaStmt::While(t, Box::new(b))),
        1 => (e, sub.clone(), prop::option::of(sub)).prop_map(|(t, a, b)| XaStmt::If(t, Box::new(a), b.map(Box::new))),
    ]
    .boxed()
}

pub fn exp_depth(e: &XaExp) -> u32 {
    match e {
        XaExp::BinExp(_, l, r) => 1 + exp_depth(l).max(exp_depth(r)),
        XaExp::FieldRef(r, _) => 1 + exp_depth(r),
        _ => 1,
    }
}

pub fn stmt_depth(s: &XaStmt) -> u32 {
    match s {
        XaStmt::Block(ss) => 1 + ss.iter().map(stmt_depth).max().unwrap_or(0),
        XaStmt::TypeDeclaration(..) => 1,
        XaStmt::ValueDeclaration(_, e) | XaStmt::Update(_, e) => 1 + exp_depth(e),
        XaStmt::While(t, b) => 1 + exp_depth(t).max(stmt_depth(b)),
        XaStmt::If(t, a, b) => 1 + exp_depth(t).max(stmt_depth(a)).max(b.as_deref().map(stmt_depth).unwrap_or(0)),
        XaStmt::FieldUpdate(r, _, v) => 1 + exp_depth(r).max(exp_depth(v)),
    }
}

const VARS: [&str; 3] = ["v0", "v1", "v2"];

fn int_exp(depth: u32) -> BoxedStrategy<XaExp> {
    let leaf = prop_oneof![(0i64..20).prop_map(XaExp::int), prop::sample::select(&VARS[..]).prop_map(XaExp::var)];
    if depth <= 1 {
        return leaf.boxed();
    }
    let sub = int_exp(depth - 1);
    let op = prop::sample::select(&[XaOp::Add, XaOp::Sub, XaOp::Mul][..]);
    prop_oneof![
        leaf,
        (op, sub.clone(), sub.clone()).prop_map(|(op, l, r)| XaExp::bin(op, l, r)),
        (sub, 1i64..7).prop_map(|(l, m)| XaExp::bin(XaOp::Mod, l, XaExp::int(m))),
    ]
    .boxed()
}

fn bool_exp() -> BoxedStrategy<XaExp> {
    let cmp = prop::sample::select(&[XaOp::Gt, XaOp::Lt, XaOp::Eq][..]);
    let atom = (cmp, int_exp(2), int_exp(2)).prop_map(|(op, l, r)| XaExp::bin(op, l, r));
    let logic = prop::sample::select(&[XaOp::And, XaOp::Or][..]);
    prop_oneof![atom.clone(), (logic, atom.clone(), atom).prop_map(|(op, l, r)| XaExp::bin(op, l, r))].boxed()
}

/// Statements over the integer variables `v0..v2` and a record `r`; loops
/// are bounded by counters nothing else assigns.
fn safe_stmt(depth: u32, counter: u32) -> BoxedStrategy<XaStmt> {
    let var = prop::sample::select(&VARS[..]).prop_map(str::to_string);
    let field = prop::sample::select(&["f", "g"][..]).prop_map(str::to_string);
    let leaf = prop_oneof![
        (var.clone(), int_exp(3)).prop_map(|(n, e)| XaStmt::Update(n, e)),
        (field.clone(), int_exp(2)).prop_map(|(f, e)| XaStmt::FieldUpdate(XaExp::var("r"), f, e)),
        (var, field).prop_map(|(n, f)| XaStmt::Update(n, XaExp::field(XaExp::var("r"), &f))),
    ];
    if depth <= 1 {
        return leaf.boxed();
    }
    let sub = safe_stmt(depth - 1, counter + 1);
    let c = format!("c{counter}");
    let looped = (1i64..5, prop::collection::vec(sub.clone(), 0..3)).prop_map(move |(k, mut body)| {
        body.push(XaStmt::Update(c.clone(), XaExp::bin(XaOp::Add, XaExp::var(&c), XaExp::int(1))));
        XaStmt::Block(vec![
            XaStmt::ValueDeclaration(c.clone(), XaExp::int(0)),
            XaStmt::While(XaExp::bin(XaOp::Lt, XaExp::var(&c), XaExp::int(k)), Box::new(XaStmt::Block(body))),
        ])
    });
    let local = prop::collection::vec(sub.clone(), 0..3).prop_map(|mut ss| {
        ss.insert(0, XaStmt::ValueDeclaration("v0".into(), XaExp::int(7)));
        XaStmt::Block(ss)
    });
    prop_oneof![
        3 => leaf,
        1 => looped,
        1 => local,
        1 => (bool_exp(), sub.clone(), prop::option::of(sub))
            .prop_map(|(t, a, b)| XaStmt::If(t, Box::new(a), b.map(Box::new))),
    ]
    .boxed()
}

/// Well-formed programs every semantics can run.
pub fn arb_program() -> impl Strategy<Value = XaStmt> {
    prop::collection::vec(safe_stmt(3, 0), 0..6).prop_map(|body| {
        let mut ss = vec![
            XaStmt::TypeDeclaration("R".into(), vec!["f".into(), "g".into()]),
            XaStmt::ValueDeclaration("r".into(), XaExp::New("R".into())),
            XaStmt::FieldUpdate(XaExp::var("r"), "f".into(), XaExp::int(1)),
            XaStmt::FieldUpdate(XaExp::var("r"), "g".into(), XaExp::int(2)),
        ];
        ss.extend(VARS.iter().enumerate().map(|(i, v)| XaStmt::ValueDeclaration(v.to_string(), XaExp::int(i as i64))));
        ss.extend(body);
        XaStmt::Block(ss)
    })
}
