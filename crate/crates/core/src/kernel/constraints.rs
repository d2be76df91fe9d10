use super::{ConstraintDesc, Registry};
use crate::env::Env;
use crate::value::{ObjId, Value};
use crate::xocl::Ctx;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintOutcome {
    /// Path of the class declaring the constraint.
    pub class_path: String,
    pub name: String,
    pub passed: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintReport {
    pub outcomes: Vec<ConstraintOutcome>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, name: &str) -> Option<&ConstraintOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

impl Registry {
    /// Evaluates one constraint with `self` bound to the object. Errors and
    /// non-boolean results count as failures.
    pub fn check_constraint(&mut self, o: ObjId, c: &ConstraintDesc, ns: Option<ObjId>) -> (bool, Option<String>) {
        let ctx = Ctx::new(Value::Obj(o), ns);
        let depth = self.depth;
        let r = self.eval(&c.body, &Env::new(), &ctx);
        self.depth = depth;
        match r {
            Ok(Value::Bool(b)) => (b, None),
            Ok(_) => (false, Some("non-boolean constraint".into())),
            Err(e) => (false, Some(e.to_string())),
        }
    }

    pub fn check_constraints(&mut self, o: ObjId) -> ConstraintReport {
        let of = self.cell(o).of;
        let mut report = ConstraintReport::default();
        for (class, c) in self.all_constraints(of) {
            let ns = self.package_of_class(class);
            let (passed, message) = self.check_constraint(o, &c, ns);
            report.outcomes.push(ConstraintOutcome {
                class_path: self.class_path(class),
                name: c.name.clone(),
                passed,
                message,
            });
        }
        report
    }
}
