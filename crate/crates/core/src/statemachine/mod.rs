//! The StateMachine language: metamodel, textual syntax, an interpreter
//! with message queues, the C++ translation and the state-change checker.

use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::value::{ObjId, Value};
use crate::xocl::ast::Expr;

/// Source of the `StateMachines`, `CPP` and `OCL` packages.
pub const PRELUDE: &str = include_str!("../../models/statemachines.xmf");

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub name: String,
    pub args: Vec<Value>,
}

impl Message {
    pub fn new(name: &str, args: Vec<Value>) -> Message {
        Message { name: name.to_string(), args }
    }

    /// Parses `e1,e2(1,2),e3` into messages. Arguments are integers,
    /// `true`/`false` or bare strings.
    pub fn parse_list(s: &str) -> Result<Vec<Message>> {
        let mut out = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let name_end = rest.find([',', '(']).unwrap_or(rest.len());
            let name = rest[..name_end].trim();
            if name.is_empty() {
                return Err(Error::Usage(format!("bad event list: {s}")));
            }
            rest = &rest[name_end..];
            let mut args = Vec::new();
            if let Some(r) = rest.strip_prefix('(') {
                let close = r.find(')').ok_or_else(|| Error::Usage(format!("unclosed '(' in {s}")))?;
                for a in r[..close].split(',').map(str::trim).filter(|a| !a.is_empty()) {
                    args.push(match a {
                        "true" => Value::Bool(true),
                        "false" => Value::Bool(false),
                        _ => a.parse::<i64>().map(Value::Int).unwrap_or_else(|_| Value::str(a)),
                    });
                }
                rest = &r[close + 1..];
            }
            out.push(Message::new(name, args));
            rest = rest.trim_start().strip_prefix(',').unwrap_or(rest).trim_start();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiredTransition {
    pub transition: ObjId,
    pub source: String,
    pub target: String,
    /// The message consumed, for transitions with an event.
    pub consumed: Option<Message>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStep {
    pub state: String,
    pub fired: Option<FiredTransition>,
    /// Pending messages on entering this step.
    pub queue: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub steps: Vec<RunStep>,
    pub terminal: String,
}

impl RunTrace {
    pub fn fired(&self) -> impl Iterator<Item = &FiredTransition> {
        self.steps.iter().filter_map(|s| s.fired.as_ref())
    }

    /// `STATE`/`FIRE` lines followed by `HALT <terminal>`.
    pub fn report(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            out.push(format!("STATE {}", s.state));
            if let Some(f) = &s.fired {
                out.push(format!("FIRE {}->{}", f.source, f.target));
            }
        }
        out.push(format!("HALT {}", self.terminal));
        out
    }
}

fn str_slot(reg: &Registry, o: ObjId, name: &str) -> Result<String> {
    match reg.get_slot(o, name)? {
        Value::Str(s) => Ok(s.to_string()),
        Value::Null => Ok(String::new()),
        other => Err(Error::ty(format!("slot {name} holds {}", other.kind_name()))),
    }
}

fn obj(v: Value, what: &str) -> Result<ObjId> {
    v.as_obj().ok_or_else(|| Error::ty(format!("{what} is not an object")))
}

impl Registry {
    /// Loads the StateMachine packages once.
    pub fn load_state_machines(&mut self) -> Result<()> {
        if self.package(self.root).map(|p| p.contents.contains_key("StateMachines")).unwrap_or(false) {
            return Ok(());
        }
        self.load_str(PRELUDE)?;
        Ok(())
    }

    pub fn sm_class(&self, name: &str) -> Result<ObjId> {
        self.class_by_path(&format!("StateMachines::{name}"))
    }

    /// A machine with no states or transitions.
    pub fn new_machine(&mut self, name: &str, start: &str) -> Result<ObjId> {
        let c = self.sm_class("StateMachine")?;
        let m = obj(self.instantiate(c, vec![Value::str(start)])?, "machine")?;
        self.set_slot(m, "name", Value::str(name))?;
        Ok(m)
    }

    pub fn new_state(&mut self, name: &str) -> Result<ObjId> {
        let c = self.sm_class("State")?;
        obj(self.instantiate(c, vec![Value::str(name)])?, "state")
    }

    pub fn new_transition(&mut self, source: &str, target: &str) -> Result<ObjId> {
        let c = self.sm_class("Transition")?;
        obj(self.instantiate(c, vec![Value::str(source), Value::str(target)])?, "transition")
    }

    /// Attaches an event with the given parameter names to a transition.
    pub fn set_event(&mut self, t: ObjId, name: &str, params: &[&str]) -> Result<()> {
        let c = self.sm_class("Event")?;
        let ps = Value::seq(params.iter().copied().map(Value::str).collect());
        let e = self.instantiate(c, vec![Value::str(name), ps])?;
        self.set_slot(t, "event", e)
    }

    pub fn add_state(&mut self, sm: ObjId, s: ObjId) -> Result<()> {
        self.invoke_operation(sm, "addState", vec![Value::Obj(s)]).map(|_| ())
    }

    pub fn add_transition(&mut self, sm: ObjId, t: ObjId) -> Result<()> {
        self.invoke_operation(sm, "addTransition", vec![Value::Obj(t)]).map(|_| ())
    }

    pub fn starting_state(&mut self, sm: ObjId) -> Result<ObjId> {
        obj(self.invoke_operation(sm, "startingState", vec![])?, "starting state")
    }

    /// Transitions leaving `state`, in insertion order.
    pub fn transitions_from(&mut self, sm: ObjId, state: &str) -> Result<Vec<ObjId>> {
        let v = self.invoke_operation(sm, "transitionsFrom", vec![Value::str(state)])?;
        v.members().unwrap_or_default().into_iter().map(|t| obj(t, "transition")).collect()
    }

    fn state_named(&mut self, sm: ObjId, name: &str) -> Result<ObjId> {
        match self.invoke_operation(sm, "stateNamed", vec![Value::str(name)])? {
            Value::Obj(s) => Ok(s),
            _ => Err(Error::User(format!("no state named {name}"))),
        }
    }

    fn event_name(&self, t: ObjId) -> Result<Option<String>> {
        match self.get_slot(t, "event")? {
            Value::Obj(e) => Ok(Some(str_slot(self, e, "name")?)),
            _ => Ok(None),
        }
    }

    fn call_behaviour(&mut self, op: &Value, element: &Value, args: Vec<Value>) -> Result<Value> {
        match op {
            Value::Op(c) if c.params.is_empty() => self.invoke_closure_as(c, element.clone(), vec![]),
            Value::Op(c) => self.invoke_closure_as(c, element.clone(), vec![Value::seq(args)]),
            other => Err(Error::ty(format!("{} is not an operation", other.kind_name()))),
        }
    }

    fn guard_holds(&mut self, t: ObjId, element: &Value) -> Result<bool> {
        let g = self.get_slot(t, "guard")?;
        if g.is_null() {
            return Ok(true);
        }
        match self.call_behaviour(&g, element, vec![])? {
            Value::Bool(b) => Ok(b),
            other => Err(Error::ty(format!("guard returned {}", other.kind_name()))),
        }
    }

    /// Runs `sm` against `element`. Each step runs the entry action of the
    /// current state, then fires the first enabled transition. At most
    /// `max_steps` transitions fire.
    pub fn run_machine(
        &mut self,
        sm: ObjId,
        element: Value,
        messages: Vec<Message>,
        max_steps: usize,
    ) -> Result<RunTrace> {
        let mut state = self.starting_state(sm)?;
        let mut queue = messages;
        let mut steps = Vec::new();
        loop {
            let name = str_slot(self, state, "name")?;
            if steps.len() >= max_steps {
                steps.push(RunStep { state: name, fired: None, queue });
                return Ok(RunTrace { steps, terminal: "budget".into() });
            }
            let entry = self.get_slot(state, "entry")?;
            // Position 0 holds the entry result even without an entry, so
            // event arguments always start at 1.
            let mut input = vec![Value::Null];
            if !entry.is_null() {
                input[0] = self.call_behaviour(&entry, &element, vec![])?;
            }
            let mut chosen = None;
            for t in self.transitions_from(sm, &name)? {
                let ev = self.event_name(t)?;
                if let Some(ev) = &ev {
                    if queue.first().map(|m| &m.name) != Some(ev) {
                        continue;
                    }
                }
                if self.guard_holds(t, &element)? {
                    chosen = Some((t, ev.is_some()));
                    break;
                }
            }
            let Some((t, has_event)) = chosen else {
                steps.push(RunStep { state: name, fired: None, queue });
                return Ok(RunTrace { steps, terminal: "no-enabled-transition".into() });
            };
            let before = queue.clone();
            let consumed = if has_event { Some(queue.remove(0)) } else { None };
            if let Some(m) = &consumed {
                input.extend(m.args.iter().cloned());
            }
            let action = self.get_slot(t, "action")?;
            if !action.is_null() {
                self.call_behaviour(&action, &element, input)?;
            }
            let target = str_slot(self, t, "targetName")?;
            let next = self.state_named(sm, &target)?;
            steps.push(RunStep {
                state: name.clone(),
                fired: Some(FiredTransition { transition: t, source: name, target, consumed }),
                queue: before,
            });
            state = next;
        }
    }

    fn message_objects(&mut self, ms: &[Message]) -> Result<Vec<Value>> {
        let c = self.sm_class("Message")?;
        ms.iter().map(|m| self.instantiate(c, vec![Value::str(&m.name), Value::seq(m.args.clone())])).collect()
    }

    /// One `StateChange` object per fired step of `trace`. Messages are
    /// shared between the before and after instances.
    pub fn state_changes(&mut self, sm: ObjId, trace: &RunTrace) -> Result<Vec<ObjId>> {
        let first = trace.steps.first().map(|s| s.queue.clone()).unwrap_or_default();
        let msgs = self.message_objects(&first)?;
        let inst_c = self.sm_class("StateMachineInstance")?;
        let change_c = self.sm_class("StateChange")?;
        let mut consumed = 0;
        let mut out = Vec::new();
        for s in &trace.steps {
            let Some(f) = &s.fired else { continue };
            let taken = usize::from(f.consumed.is_some());
            let before_state = self.state_named(sm, &f.source)?;
            let after_state = self.state_named(sm, &f.target)?;
            let before = self.make_object(
                inst_c,
                vec![
                    ("machine", Value::Obj(sm)),
                    ("state", Value::Obj(before_state)),
                    ("messages", Value::seq(msgs[consumed..].to_vec())),
                ],
            )?;
            let after = self.make_object(
                inst_c,
                vec![
                    ("machine", Value::Obj(sm)),
                    ("state", Value::Obj(after_state)),
                    ("messages", Value::seq(msgs[consumed + taken..].to_vec())),
                ],
            )?;
            consumed += taken;
            out.push(self.make_object(
                change_c,
                vec![
                    ("transition", Value::Obj(f.transition)),
                    ("before", Value::Obj(before)),
                    ("after", Value::Obj(after)),
                ],
            )?);
        }
        Ok(out)
    }

    /// The change commutes with its transition's source and target; with
    /// an event, the head message is the one consumed.
    pub fn validate_state_change(&mut self, ch: ObjId) -> Result<bool> {
        let t = obj(self.get_slot(ch, "transition")?, "transition")?;
        let before = obj(self.get_slot(ch, "before")?, "before")?;
        let after = obj(self.get_slot(ch, "after")?, "after")?;
        let bs = obj(self.get_slot(before, "state")?, "before state")?;
        let as_ = obj(self.get_slot(after, "state")?, "after state")?;
        if str_slot(self, t, "sourceName")? != str_slot(self, bs, "name")?
            || str_slot(self, t, "targetName")? != str_slot(self, as_, "name")?
        {
            return Ok(false);
        }
        let Some(ev) = self.event_name(t)? else { return Ok(true) };
        let bm = self.get_slot(before, "messages")?.members().unwrap_or_default();
        let am = self.get_slot(after, "messages")?.members().unwrap_or_default();
        let Some(Value::Obj(head)) = bm.first() else { return Ok(false) };
        Ok(str_slot(self, *head, "name")? == ev && am.as_slice() == &bm[1..])
    }

    fn apply_map(&mut self, path: &str, args: Vec<Value>) -> Result<Value> {
        let c = self.class_by_path(path)?;
        let m = obj(self.instantiate(c, vec![])?, "mapping")?;
        self.apply_mapping(m, args)
    }

    /// Applies `Transition2Op`.
    pub fn transition_to_op(&mut self, t: ObjId) -> Result<ObjId> {
        obj(self.apply_map("StateMachines::Transition2Op", vec![Value::Obj(t)])?, "operation")
    }

    /// Applies `SM2Class`.
    pub fn sm_to_cpp(&mut self, sm: ObjId) -> Result<ObjId> {
        obj(self.apply_map("StateMachines::SM2Class", vec![Value::Obj(sm)])?, "class")
    }

    /// Builds `OCL` objects for an expression in the translatable fragment.
    pub fn reify_ocl(&mut self, e: &Expr) -> Result<Value> {
        let class = |reg: &Registry, n: &str| reg.class_by_path(&format!("OCL::{n}"));
        let o = match e {
            Expr::Int(n) | Expr::Lit(Value::Int(n)) => {
                let c = class(self, "IntExp")?;
                self.make_object(c, vec![("value", Value::Int(*n))])?
            }
            Expr::Bool(b) | Expr::Lit(Value::Bool(b)) => {
                let c = class(self, "BoolExp")?;
                self.make_object(c, vec![("value", Value::Bool(*b))])?
            }
            Expr::Bin(op, l, r) => {
                let (l, r) = (self.reify_ocl(l)?, self.reify_ocl(r)?);
                let c = class(self, "BinExp")?;
                self.make_object(c, vec![("binOp", Value::str(op.symbol())), ("left", l), ("right", r)])?
            }
            Expr::Dot(target, name) => {
                let t = if matches!(**target, Expr::SelfRef) {
                    let c = class(self, "Self")?;
                    Value::Obj(self.make_object(c, vec![])?)
                } else {
                    self.reify_ocl(target)?
                };
                let c = class(self, "Dot")?;
                self.make_object(c, vec![("name", Value::str(name)), ("target", t)])?
            }
            _ => return Err(Error::Untranslatable),
        };
        Ok(Value::Obj(o))
    }

    /// Renders the guard of `e` through `Exp2String`.
    pub fn exp_to_string(&mut self, e: &Expr) -> Result<String> {
        let v = self.reify_ocl(e)?;
        match self.apply_map("OCL::Exp2String", vec![v]) {
            Ok(Value::Str(s)) => Ok(s.to_string()),
            Ok(_) | Err(Error::NoClause(_)) => Err(Error::Untranslatable),
            Err(e) => Err(e),
        }
    }

    /// The C++ operation text for a guarded transition.
    pub fn emit_cpp_guarded_op(&mut self, t: ObjId) -> Result<String> {
        let guard = match self.get_slot(t, "guard")? {
            Value::Null => "true".to_string(),
            Value::Op(c) => self.exp_to_string(&c.body.clone())?,
            _ => return Err(Error::Untranslatable),
        };
        let name = str_slot(self, t, "name")?;
        let target = str_slot(self, t, "targetName")?;
        Ok(format!("public {name}() if ({guard})\n  this.state := \"{target}\";"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOGGLE: &str = "
        @StateMachine(Off)
          @State Off end
          @State On end
          @Transition(On,Off) on toggle() end
          @Transition(Off,On) on toggle() end
        end";

    fn reg() -> Registry {
        let mut reg = Registry::new();
        reg.load_state_machines().unwrap();
        reg
    }

    fn toggle(reg: &mut Registry) -> ObjId {
        reg.eval_str(TOGGLE).unwrap().as_obj().unwrap()
    }

    fn names(reg: &mut Registry, ts: &[ObjId]) -> Vec<String> {
        ts.iter().map(|t| str_slot(reg, *t, "name").unwrap()).collect()
    }

    #[test]
    fn textual_machine() {
        let mut reg = reg();
        let m = toggle(&mut reg);
        assert_eq!(reg.get_slot(m, "states").unwrap().members().unwrap().len(), 2);
        let s = reg.starting_state(m).unwrap();
        assert_eq!(str_slot(&reg, s, "name").unwrap(), "Off");
        let from_on = reg.transitions_from(m, "On").unwrap();
        assert_eq!(names(&mut reg, &from_on), ["OnOff"]);
        assert!(reg.transitions_from(m, "Nowhere").unwrap().is_empty());
        assert!(reg.check_constraints(m).passed());
    }

    #[test]
    fn add_state_rejects_duplicates() {
        let mut reg = reg();
        let m = toggle(&mut reg);
        let mid = reg.new_state("Mid").unwrap();
        reg.add_state(m, mid).unwrap();
        let on = reg.new_state("On").unwrap();
        let err = reg.add_state(m, on).unwrap_err();
        assert_eq!(err.to_string(), "Cannot add a state that already exists");
        assert_eq!(reg.get_slot(m, "states").unwrap().members().unwrap().len(), 3);
        assert_eq!(reg.get_slot(mid, "owner").unwrap(), Value::Obj(m));
    }

    #[test]
    fn transitions_are_a_set() {
        let mut reg = reg();
        let m = reg.new_machine("M", "A").unwrap();
        let t = reg.new_transition("A", "Z").unwrap();
        reg.add_transition(m, t).unwrap();
        reg.add_transition(m, t).unwrap();
        assert_eq!(reg.get_slot(m, "transitions").unwrap().members().unwrap().len(), 1);
        let a = reg.new_state("A").unwrap();
        reg.add_state(m, a).unwrap();
        assert!(reg.check_constraints(m).passed());
    }

    #[test]
    fn missing_start_state() {
        let mut reg = reg();
        let m = reg.new_machine("M", "A").unwrap();
        let e = reg.starting_state(m).unwrap_err();
        assert_eq!(e.to_string(), "Cannot find starting state: A");
        assert!(!reg.check_constraints(m).outcome("StatesIncludeInitialState").unwrap().passed);
    }

    #[test]
    fn toggle_run() {
        let mut reg = reg();
        let m = toggle(&mut reg);
        let msgs = Message::parse_list("toggle,toggle").unwrap();
        let tr = reg.run_machine(m, Value::Null, msgs, 100).unwrap();
        assert_eq!(
            tr.report(),
            ["STATE Off", "FIRE Off->On", "STATE On", "FIRE On->Off", "STATE Off", "HALT no-enabled-transition"]
        );
        for ch in reg.state_changes(m, &tr).unwrap() {
            assert!(reg.validate_state_change(ch).unwrap());
            assert!(reg.check_constraints(ch).passed());
        }
    }

    #[test]
    fn traffic_light_guard_and_action() {
        let mut reg = reg();
        reg.load_str(
            "@Class Counter @Attribute count : Integer end end
             Root::light :=
             @StateMachine(Green)
               @State Green end
               @State Red end
               @Transition GreenRed(Green,Red)
                 @Guard self.count < 10 end
                 @Action self.count := self.count + 1 end
               end
             end;",
        )
        .unwrap();
        let m = reg.resolve_path_str("Root::light").unwrap().as_obj().unwrap();
        let c = reg.class_by_path("Counter").unwrap();
        let el = reg.make_object(c, vec![("count", Value::Int(9))]).unwrap();
        let tr = reg.run_machine(m, Value::Obj(el), vec![], 100).unwrap();
        assert_eq!(tr.fired().count(), 1);
        assert_eq!(reg.get_slot(el, "count").unwrap(), Value::Int(10));
        assert_eq!(tr.terminal, "no-enabled-transition");

        let t = reg.transitions_from(m, "Green").unwrap()[0];
        let text = reg.emit_cpp_guarded_op(t).unwrap();
        assert_eq!(text, "public GreenRed() if (self.count < 10)\n  this.state := \"Red\";");
    }

    #[test]
    fn entry_result_and_message_args_reach_action() {
        let mut reg = reg();
        let m = reg
            .eval_str(
                "@StateMachine(A)
                   @State A @Entry 7 end end
                   @State B end
                   @Transition(A,B) on go(x, y)
                     @Action (args->at(0) + x + y).println() end
                   end
                 end",
            )
            .unwrap()
            .as_obj()
            .unwrap();
        let tr = reg.run_machine(m, Value::Null, vec![Message::new("go", vec![1.into(), 2.into()])], 10).unwrap();
        assert_eq!(tr.fired().count(), 1);
        assert_eq!(reg.take_output(), "10\n");
    }

    #[test]
    fn message_args_without_entry() {
        let mut reg = reg();
        let m = reg
            .eval_str(
                "@StateMachine(A)
                   @State A end
                   @Transition(A,A) on put(n) @Action n.println() end end
                 end",
            )
            .unwrap()
            .as_obj()
            .unwrap();
        reg.run_machine(m, Value::Null, Message::parse_list("put(3), put(4)").unwrap(), 10).unwrap();
        assert_eq!(reg.take_output(), "3\n4\n");
    }

    #[test]
    fn no_transitions_and_budget() {
        let mut reg = reg();
        let m = reg.eval_str("@StateMachine(A) @State A end end").unwrap().as_obj().unwrap();
        let tr = reg.run_machine(m, Value::Null, vec![], 10).unwrap();
        assert_eq!(tr.report(), ["STATE A", "HALT no-enabled-transition"]);
        let m = reg.eval_str("@StateMachine(A) @State A end @Transition(A,A) end end").unwrap().as_obj().unwrap();
        let tr = reg.run_machine(m, Value::Null, vec![], 3).unwrap();
        assert_eq!(tr.fired().count(), 3);
        assert_eq!(tr.terminal, "budget");
    }

    #[test]
    fn missing_target_is_an_error() {
        let mut reg = reg();
        let m = reg.eval_str("@StateMachine(A) @State A end @Transition(A,Q) end end").unwrap().as_obj().unwrap();
        assert!(reg.run_machine(m, Value::Null, vec![], 10).is_err());
    }

    #[test]
    fn transition_to_op_names_and_bodies() {
        let mut reg = reg();
        for (s, t) in [("On", "Off"), ("A", "A"), ("Off", "On")] {
            let tr = reg.new_transition(s, t).unwrap();
            let op = reg.transition_to_op(tr).unwrap();
            assert_eq!(str_slot(&reg, op, "name").unwrap(), format!("{s}{t}"));
            assert_eq!(str_slot(&reg, op, "body").unwrap(), format!("state = {t}"));
        }
    }

    #[test]
    fn sm_to_cpp_toggle() {
        let mut reg = reg();
        let m = toggle(&mut reg);
        let c = reg.sm_to_cpp(m).unwrap();
        let ops = reg.get_slot(c, "operations").unwrap().members().unwrap();
        let mut ns: Vec<String> = ops.iter().map(|o| str_slot(&reg, o.as_obj().unwrap(), "name").unwrap()).collect();
        ns.sort();
        assert_eq!(ns, ["OffOn", "OnOff"]);
        let att = reg.get_slot(c, "attributes").unwrap().members().unwrap()[0].as_obj().unwrap();
        assert_eq!(str_slot(&reg, att, "name").unwrap(), "state");
        let en = reg.get_slot(att, "type").unwrap().as_obj().unwrap();
        assert_eq!(str_slot(&reg, en, "name").unwrap(), "STATE");
        assert_eq!(reg.get_slot(en, "values").unwrap(), Value::seq(vec!["Off".into(), "On".into()]));
    }

    #[test]
    fn exp_to_string_fragment() {
        let mut reg = reg();
        let e = reg.parse_expr("self.a + self.b < 3").unwrap();
        assert_eq!(reg.exp_to_string(&e).unwrap(), "self.a + self.b < 3");
        let e = reg.parse_expr("true").unwrap();
        assert_eq!(reg.exp_to_string(&e).unwrap(), "true");
        let e = reg.parse_expr("x < 3").unwrap();
        assert_eq!(reg.exp_to_string(&e), Err(Error::Untranslatable));
    }

    #[test]
    fn swapped_change_fails() {
        let mut reg = reg();
        let m = toggle(&mut reg);
        let tr = reg.run_machine(m, Value::Null, Message::parse_list("toggle").unwrap(), 10).unwrap();
        let ch = reg.state_changes(m, &tr).unwrap()[0];
        let b = reg.get_slot(ch, "before").unwrap();
        let a = reg.get_slot(ch, "after").unwrap();
        reg.set_slot(ch, "before", a).unwrap();
        reg.set_slot(ch, "after", b).unwrap();
        assert!(!reg.validate_state_change(ch).unwrap());
    }

    #[test]
    fn message_lists() {
        let ms = Message::parse_list("a, b(1,x,true),c").unwrap();
        assert_eq!(ms.len(), 3);
        assert_eq!(ms[1].args, vec![Value::Int(1), Value::str("x"), Value::Bool(true)]);
        assert!(Message::parse_list("").unwrap().is_empty());
    }
}
