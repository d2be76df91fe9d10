use mmk::xocl::Ctx;
use mmk::{Env, Registry, Value};

fn truth_tables(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << n).map(move |bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
}

fn eval(reg: &mut Registry, src: &str, env: &Env) -> Value {
    let e = reg.parse_expr(src).unwrap();
    reg.eval(&e, env, &Ctx::top()).unwrap()
}

fn env(n: usize, ps: &[bool], set: bool) -> Env {
    let items: Vec<Value> = (0..n as i64).map(Value::Int).collect();
    let c = if set { Value::set(items) } else { Value::seq(items) };
    Env::new().bind("c", c).bind("ps", Value::seq(ps.iter().map(|b| Value::Bool(*b)).collect()))
}

#[test]
fn exists_and_for_all_are_dual() {
    let mut reg = Registry::bootstrap();
    for n in 0..=4 {
        for ps in truth_tables(n) {
            for set in [false, true] {
                let env = env(n, &ps, set);
                let lhs = eval(&mut reg, "not c->exists(x | ps->at(x))", &env);
                let rhs = eval(&mut reg, "c->forAll(x | not ps->at(x))", &env);
                assert_eq!(lhs, rhs, "n={n} ps={ps:?}");
                assert_eq!(lhs, Value::Bool(!ps.iter().any(|b| *b)));
                let lhs = eval(&mut reg, "not c->forAll(x | ps->at(x))", &env);
                let rhs = eval(&mut reg, "c->exists(x | not ps->at(x))", &env);
                assert_eq!(lhs, rhs, "n={n} ps={ps:?}");
            }
        }
    }
}

#[test]
fn select_and_reject_partition() {
    let mut reg = Registry::bootstrap();
    for n in 0..=4 {
        for ps in truth_tables(n) {
            for set in [false, true] {
                let env = env(n, &ps, set);
                let sizes =
                    eval(&mut reg, "c->select(x | ps->at(x))->size + c->reject(x | ps->at(x))->size = c->size", &env);
                assert_eq!(sizes, Value::Bool(true), "n={n} ps={ps:?}");
                let disjoint = eval(
                    &mut reg,
                    "c->select(x | ps->at(x))->forAll(x | not c->reject(y | ps->at(y))->includes(x))",
                    &env,
                );
                assert_eq!(disjoint, Value::Bool(true));
                let covers = eval(
                    &mut reg,
                    "c->forAll(x | c->select(y | ps->at(y))->includes(x) or c->reject(y | ps->at(y))->includes(x))",
                    &env,
                );
                assert_eq!(covers, Value::Bool(true));
                let selected = eval(&mut reg, "c->select(x | ps->at(x))->size", &env);
                assert_eq!(selected, Value::Int(ps.iter().filter(|b| **b).count() as i64));
            }
        }
    }
}
