use mmk::statemachine::Message;
use mmk::{ObjId, Registry, Value};
use proptest::prelude::*;

const STATES: [&str; 4] = ["S0", "S1", "S2", "S3"];

#[derive(Debug, Clone)]
struct Shape {
    states: usize,
    transitions: Vec<(usize, usize, Option<&'static str>)>,
    messages: Vec<&'static str>,
}

fn arb_shape() -> impl Strategy<Value = Shape> {
    (1usize..=4).prop_flat_map(|n| {
        let event = prop::option::weighted(0.8, prop::sample::select(&["a", "b"][..]));
        (
            Just(n),
            prop::collection::vec((0..n, 0..n, event), 0..=6),
            prop::collection::vec(prop::sample::select(&["a", "b", "c"][..]), 0..=5),
        )
            .prop_map(|(states, transitions, messages)| Shape { states, transitions, messages })
    })
}

fn build(reg: &mut Registry, shape: &Shape) -> ObjId {
    let m = reg.new_machine("m", STATES[0]).unwrap();
    for s in &STATES[..shape.states] {
        let s = reg.new_state(s).unwrap();
        reg.add_state(m, s).unwrap();
    }
    for (src, tgt, ev) in &shape.transitions {
        let t = reg.new_transition(STATES[*src], STATES[*tgt]).unwrap();
        if let Some(ev) = ev {
            reg.set_event(t, ev, &[]).unwrap();
        }
        reg.add_transition(m, t).unwrap();
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_run_step_is_a_valid_state_change(shape in arb_shape()) {
        let mut reg = Registry::bootstrap();
        reg.load_state_machines().unwrap();
        let m = build(&mut reg, &shape);
        let msgs: Vec<Message> = shape.messages.iter().map(|n| Message::new(n, vec![])).collect();
        let trace = reg.run_machine(m, Value::Null, msgs, 20).unwrap();
        let fired = trace.fired().count();
        let changes = reg.state_changes(m, &trace).unwrap();
        prop_assert_eq!(changes.len(), fired);
        for ch in changes {
            prop_assert!(reg.validate_state_change(ch).unwrap());
        }
        let consumed = trace.fired().filter(|f| f.consumed.is_some()).count();
        prop_assert!(consumed <= shape.messages.len());
        prop_assert!(fired <= 20);
    }
}

#[test]
fn initial_state_constraint_is_exhaustively_right() {
    let mut reg = Registry::bootstrap();
    reg.load_state_machines().unwrap();
    for start in ["A", "B", "C", "D"] {
        let m = reg.new_machine("m", start).unwrap();
        for s in ["A", "B", "C"] {
            let s = reg.new_state(s).unwrap();
            reg.add_state(m, s).unwrap();
        }
        let rep = reg.check_constraints(m);
        let passed = rep.outcome("StatesIncludeInitialState").unwrap().passed;
        assert_eq!(passed, start != "D", "{start}");
    }
}

#[test]
fn toggle_machine_maps_to_a_class() {
    let mut reg = Registry::bootstrap();
    reg.load_state_machines().unwrap();
    let m = reg
        .eval_str("@StateMachine(Off) @State Off end @State On end @Transition(Off,On) end @Transition(On,Off) end end")
        .unwrap()
        .as_obj()
        .unwrap();
    let c = reg.sm_to_cpp(m).unwrap();
    let ops = reg.get_slot(c, "operations").unwrap().members().unwrap();
    assert_eq!(ops.len(), 2);
    let atts = reg.get_slot(c, "attributes").unwrap().members().unwrap();
    let ty = atts.iter().find_map(|a| reg.get_slot(a.as_obj()?, "type").ok()?.as_obj()).unwrap();
    assert_eq!(reg.get_slot(ty, "name").unwrap(), Value::str("STATE"));
    let mut values: Vec<String> =
        reg.get_slot(ty, "values").unwrap().members().unwrap().iter().map(|v| reg.display(v)).collect();
    values.sort();
    assert_eq!(values, ["Off", "On"]);
}
