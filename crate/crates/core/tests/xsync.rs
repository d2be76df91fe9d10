mod common;

use std::rc::Rc;

use mmk::xsync::{SyncModel, SyncStatus};
use mmk::{Registry, Value};
use proptest::prelude::*;

fn points(reg: &mut Registry) -> Rc<SyncModel> {
    let src = std::fs::read_to_string(common::data_dir().join("cli/points.xmf")).unwrap();
    match reg.load_str(&src).unwrap().pop() {
        Some(Value::Sync(m)) => m,
        v => panic!("{v:?}"),
    }
}

fn xy(reg: &Registry, path: &str) -> (Value, Value) {
    let p = reg.resolve_path_str(path).unwrap().as_obj().unwrap();
    (reg.get_slot(p, "x").unwrap(), reg.get_slot(p, "y").unwrap())
}

#[test]
fn points_converge() {
    let mut reg = Registry::bootstrap();
    let m = points(&mut reg);
    let r = reg.run_to_fixpoint(&m, 200).unwrap();
    assert_eq!(r.status, SyncStatus::Fixpoint);
    assert!(r.fired.len() <= 200);
    let last = r.fired.last().unwrap();
    assert_eq!((last.rule.as_str(), last.changed), ("r1", false));
    for p in ["Root::p1", "Root::p2"] {
        assert_eq!(xy(&reg, p), (Value::Int(100), Value::Int(100)));
    }
    assert!(reg.take_output().ends_with("The points match\n"));
}

#[test]
fn fixpoint_is_quiescent_and_runs_repeat() {
    let mut a = Registry::bootstrap();
    let ma = points(&mut a);
    let ra = a.run_to_fixpoint(&ma, 1000).unwrap();
    let again = a.run_to_fixpoint(&ma, 1000).unwrap();
    assert_eq!(again.status, SyncStatus::Fixpoint);
    assert!(again.fired.iter().all(|f| !f.changed));

    let mut b = Registry::bootstrap();
    let mb = points(&mut b);
    let rb = b.run_to_fixpoint(&mb, 1000).unwrap();
    let shape = |r: &mmk::xsync::SyncReport| r.fired.iter().map(|f| (f.rule.clone(), f.changed)).collect::<Vec<_>>();
    assert_eq!(shape(&ra), shape(&rb));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reports_stay_within_budget(max in 1usize..250) {
        let mut reg = Registry::bootstrap();
        let m = points(&mut reg);
        let r = reg.run_to_fixpoint(&m, max).unwrap();
        prop_assert!(r.fired.len() <= max);
        prop_assert_eq!(r.status == SyncStatus::Fixpoint, max >= 199);
    }
}
