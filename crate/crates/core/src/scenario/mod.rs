//! Scenario simulation: call functions against a store of element
//! statuses and values, one atomic call at a time.
//!
//! Every call runs on a shadow copy of the store. The shadow replaces the
//! store only when the call completes, so a rejected call leaves no trace
//! in the store.

mod eval;
mod script;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::checker::{check_spec, CheckReport};
use crate::diag::{Code, Diagnostic};
use crate::dsl::format_statement;
use crate::model::*;
use crate::symbols::SymbolTable;

pub use eval::compare;
pub use script::{parse_script, run_script, Directive, DirectiveResult, ScriptRun};

use eval::{eval, Fault, Val};

/// Name of the pseudo effect that records the deltas made by bindings.
pub const BINDINGS_ENTRY: &str = "$bindings";

/// Status and (when Known) value of one element.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Cell {
    pub status: Status,
    pub value: Option<Literal>,
}

impl Cell {
    pub fn known(value: Literal) -> Self {
        Cell {
            status: Status::Known,
            value: Some(value),
        }
    }

    pub fn with_status(status: Status) -> Self {
        Cell {
            status,
            value: None,
        }
    }
}

/// Element id to cell. `$state` is present iff the specification declares states.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Store {
    cells: BTreeMap<String, Cell>,
}

impl Store {
    /// The initial store described by the init clauses.
    pub fn initial(spec: &Specification) -> Store {
        let mut cells = BTreeMap::new();
        if let Some(first) = spec.states().first() {
            cells.insert(
                STATE_ELEMENT.to_string(),
                Cell::known(Literal::Str(first.clone())),
            );
        }
        let table = SymbolTable::new(spec);
        for e in spec.elements() {
            if cells.contains_key(&e.id) {
                continue;
            }
            let cell = match &e.init {
                Init::Known(v) => {
                    let base = table.element(&e.id).and_then(|i| i.base());
                    let v = base.and_then(|b| v.coerce(b)).unwrap_or_else(|| v.clone());
                    Cell::known(v)
                }
                other => Cell::with_status(other.status()),
            };
            cells.insert(e.id.clone(), cell);
        }
        Store { cells }
    }

    pub fn get(&self, id: &str) -> Option<&Cell> {
        self.cells.get(id)
    }

    pub fn status(&self, id: &str) -> Status {
        self.cells.get(id).map(|c| c.status).unwrap_or_default()
    }

    pub fn value(&self, id: &str) -> Option<&Literal> {
        self.cells.get(id).and_then(|c| c.value.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Cell)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn set(&mut self, id: &str, cell: Cell) {
        self.cells.insert(id.to_string(), cell);
    }

    /// Replays deltas recorded in a trace record.
    pub fn apply(&mut self, deltas: &[Delta]) {
        for d in deltas {
            self.set(
                &d.elem,
                Cell {
                    status: d.status,
                    value: d.value.clone(),
                },
            );
        }
    }
}

/// A caller-supplied binding: a literal, or the marker `defined` meaning
/// "has a value, but the value is not known".
#[derive(Clone, Debug, PartialEq)]
pub enum BindingValue {
    Value(Literal),
    Defined,
}

impl BindingValue {
    /// JSON form: a scalar literal, or `{"defined": true}`.
    pub fn from_json(v: &serde_json::Value) -> Option<BindingValue> {
        if let Some(obj) = v.as_object() {
            return (obj.len() == 1 && obj.get("defined") == Some(&serde_json::Value::Bool(true)))
                .then_some(BindingValue::Defined);
        }
        Literal::from_json(v).map(BindingValue::Value)
    }
}

impl Serialize for BindingValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            BindingValue::Value(l) => l.serialize(serializer),
            BindingValue::Defined => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("defined", &true)?;
                m.end()
            }
        }
    }
}

impl std::fmt::Display for BindingValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BindingValue::Value(l) => write!(f, "{l}"),
            BindingValue::Defined => f.write_str("defined"),
        }
    }
}

pub type Binding = BTreeMap<String, BindingValue>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Rejected(Code),
}

impl Outcome {
    pub fn is_ok(self) -> bool {
        self == Outcome::Ok
    }

    pub fn code(self) -> Option<Code> {
        match self {
            Outcome::Ok => None,
            Outcome::Rejected(c) => Some(c),
        }
    }
}

/// New status and value of one element after a step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delta {
    pub elem: String,
    pub status: Status,
    pub value: Option<Literal>,
}

/// How a statement ended: `known` / `symbolic` for assignments,
/// `held` / `unverified` for requires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepResult {
    Known,
    Symbolic,
    Held,
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub stmt: String,
    pub result: StepResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectTrace {
    Abstract,
    Steps(Vec<Step>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectLog {
    pub id: String,
    #[serde(serialize_with = "serialize_body")]
    pub body: EffectTrace,
    pub deltas: Vec<Delta>,
}

fn serialize_body<S: Serializer>(body: &EffectTrace, s: S) -> Result<S::Ok, S::Error> {
    match body {
        EffectTrace::Abstract => s.serialize_str("abstract"),
        EffectTrace::Steps(steps) => steps.serialize(s),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub seq: u64,
    pub function: String,
    pub bindings: Binding,
    pub outcome: Outcome,
    /// Message of the rejecting diagnostic; `None` for Ok records.
    pub message: Option<String>,
    pub effects: Vec<EffectLog>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TraceRecord {
    pub fn deltas(&self) -> impl Iterator<Item = &Delta> {
        self.effects.iter().flat_map(|e| e.deltas.iter())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace records always serialize")
    }
}

impl Serialize for TraceRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut m = serializer.serialize_map(Some(8))?;
        m.serialize_entry("seq", &self.seq)?;
        m.serialize_entry("function", &self.function)?;
        m.serialize_entry("bindings", &self.bindings)?;
        m.serialize_entry(
            "outcome",
            if self.outcome.is_ok() {
                "ok"
            } else {
                "rejected"
            },
        )?;
        m.serialize_entry("code", &self.outcome.code())?;
        m.serialize_entry("message", &self.message)?;
        m.serialize_entry("effects", &self.effects)?;
        m.serialize_entry("diagnostics", &self.diagnostics)?;
        m.end()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("specification is not consistent ({} error(s))", .0.errors().count())]
    InconsistentSpec(CheckReport),
    #[error("script has {} syntax error(s)", .0.len())]
    Script(Vec<Diagnostic>),
}

/// A live simulation over one consistent specification.
#[derive(Clone, Debug)]
pub struct Session {
    spec: Arc<Specification>,
    table: SymbolTable,
    store: Store,
    trace: Vec<TraceRecord>,
}

pub fn new_session(spec: &Specification) -> Result<Session, ScenarioError> {
    Session::new(Arc::new(spec.clone()))
}

impl Session {
    pub fn new(spec: Arc<Specification>) -> Result<Session, ScenarioError> {
        let report = check_spec(&spec);
        if !report.consistent {
            return Err(ScenarioError::InconsistentSpec(report));
        }
        Ok(Session {
            table: SymbolTable::new(&spec),
            store: Store::initial(&spec),
            spec,
            trace: Vec::new(),
        })
    }

    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn snapshot(&self) -> Store {
        self.store.clone()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Back to the initial store with an empty trace.
    pub fn reset(&mut self) {
        self.store = Store::initial(&self.spec);
        self.trace.clear();
    }

    /// Simulates one call. The record is appended to the trace and returned.
    pub fn call_function(&mut self, function_id: &str, bindings: &Binding) -> TraceRecord {
        let mut run = CallRun {
            table: &self.table,
            shadow: self.store.clone(),
            effects: Vec::new(),
            warnings: Vec::new(),
        };
        let result = match self.spec.function(function_id) {
            Some(f) => run.execute(f, bindings),
            None => Err(Rejection {
                entity: function_id.to_string(),
                fault: Fault::new(Code::R101, format!("unknown function `{function_id}`")),
                loc: None,
            }),
        };
        let seq = self.trace.len() as u64 + 1;
        let record = match result {
            Ok(()) => {
                self.store = run.shadow;
                TraceRecord {
                    seq,
                    function: function_id.to_string(),
                    bindings: bindings.clone(),
                    outcome: Outcome::Ok,
                    message: None,
                    effects: run.effects,
                    diagnostics: run.warnings,
                }
            }
            Err(r) => {
                let mut d = Diagnostic::new(r.fault.code, r.entity, r.fault.message.clone());
                if let Some(loc) = r.loc {
                    d = d.at(loc);
                }
                let mut diagnostics = run.warnings;
                diagnostics.push(d);
                TraceRecord {
                    seq,
                    function: function_id.to_string(),
                    bindings: bindings.clone(),
                    outcome: Outcome::Rejected(r.fault.code),
                    message: Some(r.fault.message),
                    effects: Vec::new(),
                    diagnostics,
                }
            }
        };
        self.trace.push(record.clone());
        record
    }

    /// The whole trace as a JSON array.
    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(&self.trace).expect("trace records always serialize")
    }
}

struct Rejection {
    entity: String,
    fault: Fault,
    loc: Option<Loc>,
}

struct CallRun<'a> {
    table: &'a SymbolTable,
    shadow: Store,
    effects: Vec<EffectLog>,
    warnings: Vec<Diagnostic>,
}

impl CallRun<'_> {
    fn execute(&mut self, f: &FunctionSpec, bindings: &Binding) -> Result<(), Rejection> {
        let reject = |code: Code, message: String| Rejection {
            entity: f.id.clone(),
            fault: Fault::new(code, message),
            loc: None,
        };

        if let Some(Literal::Str(state)) = self.shadow.value(STATE_ELEMENT) {
            if !f.classification.states.contains(state) {
                return Err(reject(
                    Code::R102,
                    format!(
                        "`{}` is not callable in state {state} (allowed: {})",
                        f.id,
                        f.classification.states.join(", ")
                    ),
                ));
            }
        }

        for key in bindings.keys() {
            if !f.param(key).is_some_and(ParamRef::is_bindable) {
                return Err(reject(
                    Code::R105,
                    format!(
                        "unexpected binding `{key}`: not an explicit input of `{}`",
                        f.id
                    ),
                ));
            }
        }
        let before = self.shadow.clone();
        for p in f.params.iter().filter(|p| p.is_bindable()) {
            let Some(bound) = bindings.get(&p.element) else {
                return Err(reject(
                    Code::R105,
                    format!("missing binding for `{}`", p.element),
                ));
            };
            let cell = self.bind(f, &p.element, bound).map_err(|fault| Rejection {
                entity: f.id.clone(),
                fault,
                loc: None,
            })?;
            self.shadow.set(&p.element, cell);
        }
        let deltas = changed(&before, &self.shadow, bindings.keys().map(String::as_str));
        if !deltas.is_empty() {
            self.effects.push(EffectLog {
                id: BINDINGS_ENTRY.to_string(),
                body: EffectTrace::Steps(Vec::new()),
                deltas,
            });
        }

        for p in &f.params {
            if let Some(pre) = f.entry_requirement(&p.element) {
                let actual = self.shadow.status(&p.element);
                if actual < pre.required {
                    return Err(reject(
                        Code::R104,
                        format!(
                            "`{}` must be {} on entry but is {actual}",
                            p.element, pre.required
                        ),
                    ));
                }
            }
        }

        for effect in &f.effects {
            let entity = format!("{}.{}", f.id, effect.id);
            self.run_effect(&entity, effect)
                .map_err(|(fault, loc)| Rejection {
                    entity: entity.clone(),
                    fault,
                    loc,
                })?;
        }
        Ok(())
    }

    /// Checks one binding against the element's kind and restrictions.
    fn bind(&self, f: &FunctionSpec, element: &str, bound: &BindingValue) -> Result<Cell, Fault> {
        let info = self
            .table
            .element(element)
            .ok_or_else(|| Fault::new(Code::R106, format!("`{element}` has no resolved type")))?;
        let literal = match bound {
            BindingValue::Defined => return Ok(Cell::with_status(Status::Defined)),
            BindingValue::Value(l) => l,
        };
        let Some(kind) = info.base() else {
            return Err(Fault::new(
                Code::R106,
                format!("`{element}` is a record and can only be bound as `defined`"),
            ));
        };
        let value = literal.coerce(kind).ok_or_else(|| {
            Fault::new(
                Code::R106,
                format!(
                    "`{element}` expects {kind}, got {} {literal}",
                    literal.kind()
                ),
            )
        })?;
        check_value(element, &info.restriction, kind, &value)?;
        for pre in f.effects.iter().flat_map(|e| e.pre.iter()) {
            if pre.element == element {
                if let Some(r) = &pre.restriction {
                    check_value(element, r, kind, &value)?;
                }
            }
        }
        Ok(Cell::known(value))
    }

    fn run_effect(&mut self, entity: &str, effect: &Effect) -> Result<(), (Fault, Option<Loc>)> {
        let before = self.shadow.clone();
        let mut touched: Vec<&str> = Vec::new();

        for pre in &effect.pre {
            let cell = self.shadow.get(&pre.element).cloned().unwrap_or_default();
            if cell.status < pre.required {
                let msg = format!(
                    "`{}` must be {} but is {}",
                    pre.element, pre.required, cell.status
                );
                return Err((Fault::new(Code::R104, msg), Some(pre.loc)));
            }
            if let (Some(r), Some(v)) = (&pre.restriction, &cell.value) {
                check_value(&pre.element, r, v.kind(), v).map_err(|f| (f, Some(pre.loc)))?;
            }
        }

        let body = match &effect.body {
            EffectBody::Abstract => EffectTrace::Abstract,
            EffectBody::Transform(stmts) => {
                let mut steps = Vec::new();
                for stmt in stmts {
                    let result = self
                        .run_statement(entity, stmt)
                        .map_err(|f| (f, Some(stmt.loc())))?;
                    if let Statement::Assign { target, .. } = stmt {
                        touched.push(target);
                    }
                    steps.push(Step {
                        stmt: format_statement(stmt),
                        result,
                    });
                }
                EffectTrace::Steps(steps)
            }
        };

        for post in &effect.post {
            let current = self.shadow.get(&post.element).cloned().unwrap_or_default();
            let cell = match (post.resulting, current.value) {
                (Status::Known, Some(v)) => Cell::known(v),
                // A post can promise Known only for a value the simulator
                // holds; otherwise the element is as good as Defined.
                (Status::Known, None) => Cell::with_status(Status::Defined),
                (s, _) => Cell::with_status(s),
            };
            self.shadow.set(&post.element, cell);
            touched.push(&post.element);
        }

        self.effects.push(EffectLog {
            id: effect.id.clone(),
            body,
            deltas: changed(&before, &self.shadow, touched.into_iter()),
        });
        Ok(())
    }

    fn run_statement(&mut self, entity: &str, stmt: &Statement) -> Result<StepResult, Fault> {
        match stmt {
            Statement::Assign { target, expr, .. } => {
                let info = self.table.element(target);
                let cell = match eval(expr, &self.shadow)? {
                    Val::Symbolic => Cell::with_status(Status::Defined),
                    Val::Known(v) => {
                        let kind = info.and_then(|i| i.base()).unwrap_or(v.kind());
                        let v = v.coerce(kind).ok_or_else(|| {
                            Fault::new(
                                Code::R106,
                                format!("`{target}` expects {kind}, got {} {v}", v.kind()),
                            )
                        })?;
                        if let Some(info) = info {
                            check_value(target, &info.restriction, kind, &v)?;
                        }
                        Cell::known(v)
                    }
                };
                let result = if cell.status == Status::Known {
                    StepResult::Known
                } else {
                    StepResult::Symbolic
                };
                self.shadow.set(target, cell);
                Ok(result)
            }
            Statement::Require {
                left, op, right, ..
            } => {
                let l = eval(left, &self.shadow)?;
                let r = eval(right, &self.shadow)?;
                match (l, r) {
                    (Val::Known(a), Val::Known(b)) => {
                        let ord = compare(&a, &b).ok_or_else(|| {
                            Fault::new(
                                Code::R106,
                                format!("cannot compare {} with {}", a.kind(), b.kind()),
                            )
                        })?;
                        if op.holds(ord) {
                            Ok(StepResult::Held)
                        } else {
                            Err(Fault::new(
                                Code::R108,
                                format!(
                                    "require failed: {} ({a} {} {b})",
                                    format_statement(stmt),
                                    op.symbol()
                                ),
                            ))
                        }
                    }
                    _ => {
                        let defined: Vec<String> = stmt
                            .reads()
                            .into_iter()
                            .filter(|id| self.shadow.status(id) < Status::Known)
                            .map(|id| format!("`{id}`"))
                            .collect();
                        self.warnings.push(
                            Diagnostic::new(
                                Code::W201,
                                entity,
                                format!(
                                    "`{}` not verifiable: {} defined but not known",
                                    format_statement(stmt),
                                    defined.join(", ")
                                ),
                            )
                            .at(stmt.loc()),
                        );
                        Ok(StepResult::Unverified)
                    }
                }
            }
        }
    }
}

fn check_value(element: &str, r: &Restriction, kind: BaseKind, v: &Literal) -> Result<(), Fault> {
    match r.admits(kind, v) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Fault::new(
            Code::R103,
            format!("`{element}` = {v} violates {r}"),
        )),
        Err(e) => Err(Fault::new(Code::R106, e.to_string())),
    }
}

/// Deltas for the elements in `ids` whose cell differs between the stores,
/// in first-touched order.
fn changed<'a>(before: &Store, after: &Store, ids: impl Iterator<Item = &'a str>) -> Vec<Delta> {
    let mut seen: Vec<&str> = Vec::new();
    let mut out = Vec::new();
    for id in ids {
        if seen.contains(&id) {
            continue;
        }
        seen.push(id);
        let new = after.get(id).cloned().unwrap_or_default();
        if before.get(id) != Some(&new) {
            out.push(Delta {
                elem: id.to_string(),
                status: new.status,
                value: new.value,
            });
        }
    }
    out
}
