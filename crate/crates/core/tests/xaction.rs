mod common;

use mmk::xaction::ast::XaStmt;
use mmk::xaction::{observe, parse_program, stmt_to_string, Canon, Semantics};
use proptest::prelude::*;

const FUEL: usize = 1_000_000;

#[test]
fn corpus_is_large_enough() {
    assert!(common::xaction_corpus().len() >= 12);
}

#[test]
fn every_semantics_matches_the_oracle() {
    for (name, src) in common::xaction_corpus() {
        let p = parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let want = common::oracle::run(&p, FUEL).unwrap_or_else(|e| panic!("{name}: {e}"));
        for how in Semantics::ALL {
            let got = observe(&p, how, FUEL).unwrap_or_else(|e| panic!("{name} {how:?}: {e}"));
            assert_eq!(got, want, "{name} {how:?}");
        }
    }
}

fn even() -> XaStmt {
    parse_program(&std::fs::read_to_string(common::data_dir().join("xaction/even.xa")).unwrap()).unwrap()
}

#[test]
fn even_program_shape() {
    let p = even();
    let top = p.top_level();
    assert_eq!(top.iter().filter(|s| matches!(s, XaStmt::TypeDeclaration(..))).count(), 2);
    assert_eq!(top.iter().filter(|s| matches!(s, XaStmt::While(..))).count(), 1);
    let XaStmt::While(_, body) = &top[4] else { panic!() };
    let XaStmt::Block(body) = &**body else { panic!() };
    assert_eq!(body.iter().filter(|s| matches!(s, XaStmt::If(..))).count(), 1);
}

/// Heads along `tail` links, checking each record is new.
fn heads(c: &Canon) -> Vec<i64> {
    let mut out = Vec::new();
    let mut cur = c;
    while let Canon::Record(_, fs) = cur {
        let Some((_, Canon::Int(h))) = fs.iter().find(|(n, _)| n == "head") else { break };
        out.push(*h);
        cur = &fs.iter().find(|(n, _)| n == "tail").unwrap().1;
    }
    assert!(matches!(cur, Canon::Record(_, fs) if fs.is_empty()), "chain ends in the empty record");
    out
}

#[test]
fn even_program_builds_the_evens() {
    let p = even();
    for how in Semantics::ALL {
        let obs = observe(&p, how, FUEL).unwrap();
        let list = &obs.iter().find(|(n, _)| n == "list").unwrap().1;
        assert_eq!(heads(list), (1..=50).map(|i| 2 * i).collect::<Vec<_>>(), "{how:?}");
        assert_eq!(obs.iter().find(|(n, _)| n == "length").unwrap().1, Canon::Int(0));
    }
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for (name, src) in common::xaction_corpus() {
        let p = parse_program(&src).unwrap();
        assert_eq!(parse_program(&stmt_to_string(&p)).unwrap(), p, "{name}");
    }
}

fn all_fail(p: &XaStmt) -> bool {
    Semantics::ALL.iter().all(|how| observe(p, *how, 1000).is_err())
}

#[test]
fn block_bindings_do_not_escape() {
    let inner = parse_program("begin value x is 0 end begin value y is 1 end end value probe is y end end").unwrap();
    assert!(all_fail(&inner));
    let outer = parse_program("begin value x is 0 end begin value y is 1 end end value probe is x end end").unwrap();
    for how in Semantics::ALL {
        assert_eq!(observe(&outer, how, 1000).unwrap()[1], ("probe".to_string(), Canon::Int(0)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_programs_parse_back(s in common::arb_stmt(5)) {
        prop_assert!(common::stmt_depth(&s) <= 5);
        let text = stmt_to_string(&s);
        prop_assert_eq!(parse_program(&text).unwrap(), s, "{}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_programs_agree(p in common::arb_program()) {
        let want = common::oracle::run(&p, FUEL);
        for how in Semantics::ALL {
            let got = observe(&p, how, FUEL);
            match (&want, &got) {
                (Ok(w), Ok(g)) => prop_assert_eq!(w, g, "{:?}\n{}", how, stmt_to_string(&p)),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "{:?} disagrees on success\n{}", how, stmt_to_string(&p)),
            }
        }
    }

    #[test]
    fn block_locality(names in prop::collection::vec(prop::sample::select(&["p", "q", "s"][..]), 1..4)) {
        let decls: String = names.iter().map(|n| format!("value {n} is 1 end ")).collect();
        let inner = parse_program(&format!("begin value x is 0 end begin {decls} end value probe is {} end end", names[0])).unwrap();
        prop_assert!(all_fail(&inner));
    }
}
