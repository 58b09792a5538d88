//! Selective retrieval over functions, data elements and data types, plus
//! the per-element cross-reference report.
//!
//! Query strings are conjunctions of `&`-separated terms:
//!
//! ```text
//! kind=function & class.states~GKOP & refs=line_width & name=SET_* & select=id,class.category
//! ```
//!
//! `~` tests set membership, `=` equality (or a glob for `name`).

use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::model::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Function,
    Element,
    Type,
}

impl QueryKind {
    fn parse(s: &str) -> Option<QueryKind> {
        match s {
            "function" => Some(QueryKind::Function),
            "element" => Some(QueryKind::Element),
            "type" => Some(QueryKind::Type),
            _ => None,
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryKind::Function => "function",
            QueryKind::Element => "element",
            QueryKind::Type => "type",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Descriptor {
    Category,
    Group,
    Level,
}

impl Descriptor {
    fn of(self, c: &Classification) -> &str {
        match self {
            Descriptor::Category => &c.category,
            Descriptor::Group => &c.group,
            Descriptor::Level => &c.level,
        }
    }
}

/// Shell-style pattern with `*` (any run) and `?` (one character).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Glob(Vec<char>);

impl Glob {
    pub fn new(pattern: &str) -> Result<Glob, QueryError> {
        if pattern.is_empty() {
            return Err(QueryError::Invalid("empty name pattern".into()));
        }
        Ok(Glob(pattern.chars().collect()))
    }

    pub fn matches(&self, text: &str) -> bool {
        let t: Vec<char> = text.chars().collect();
        let p = &self.0;
        // Iterative matcher with single-star backtracking.
        let (mut pi, mut ti) = (0, 0);
        let mut star: Option<(usize, usize)> = None;
        while ti < t.len() {
            if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
                pi += 1;
                ti += 1;
            } else if pi < p.len() && p[pi] == '*' {
                star = Some((pi, ti));
                pi += 1;
            } else if let Some((sp, st)) = star {
                pi = sp + 1;
                ti = st + 1;
                star = Some((sp, st + 1));
            } else {
                return false;
            }
        }
        p[pi..].iter().all(|&c| c == '*')
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    NameGlob(Glob),
    ClassEquals(Descriptor, String),
    StateContains(String),
    References(String),
    UsesType(String),
    Unused,
}

impl Predicate {
    fn applies_to(&self, kind: QueryKind) -> bool {
        use QueryKind::*;
        match self {
            Predicate::NameGlob(_) => true,
            Predicate::ClassEquals(..) | Predicate::StateContains(_) | Predicate::References(_) => {
                kind == Function
            }
            Predicate::UsesType(_) => kind != Type,
            Predicate::Unused => kind != Function,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Predicate::NameGlob(_) => "name",
            Predicate::ClassEquals(Descriptor::Category, _) => "class.category",
            Predicate::ClassEquals(Descriptor::Group, _) => "class.group",
            Predicate::ClassEquals(Descriptor::Level, _) => "class.level",
            Predicate::StateContains(_) => "class.states",
            Predicate::References(_) => "refs",
            Predicate::UsesType(_) => "type",
            Predicate::Unused => "unused",
        }
    }
}

/// Projection columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Id,
    Type,
    Category,
    Group,
    Level,
    States,
    ParamCount,
    EffectCount,
    Restriction,
}

impl Field {
    pub const ALL: [Field; 9] = [
        Field::Id,
        Field::Type,
        Field::Category,
        Field::Group,
        Field::Level,
        Field::States,
        Field::ParamCount,
        Field::EffectCount,
        Field::Restriction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Id => "id",
            Field::Type => "type",
            Field::Category => "class.category",
            Field::Group => "class.group",
            Field::Level => "class.level",
            Field::States => "class.states",
            Field::ParamCount => "param-count",
            Field::EffectCount => "effect-count",
            Field::Restriction => "restriction",
        }
    }

    pub fn parse(s: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == s)
    }

    fn applies_to(self, kind: QueryKind) -> bool {
        match self {
            Field::Id => true,
            Field::Type => kind != QueryKind::Function,
            Field::Restriction => kind == QueryKind::Element,
            _ => kind == QueryKind::Function,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub kind: QueryKind,
    pub filters: Vec<Predicate>,
    pub select: Vec<Field>,
}

impl Query {
    pub fn new(kind: QueryKind) -> Query {
        Query {
            kind,
            filters: Vec::new(),
            select: vec![Field::Id],
        }
    }

    /// Parses a query string. `kind` defaults to `function`.
    pub fn parse(text: &str) -> Result<Query, QueryError> {
        let invalid = |m: String| QueryError::Invalid(m);
        let mut kind = None;
        let mut filters = Vec::new();
        let mut select = None;
        for term in text.split('&').map(str::trim) {
            if term.is_empty() {
                if text.trim().is_empty() {
                    continue;
                }
                return Err(invalid("empty term".into()));
            }
            if term == "unused" {
                filters.push(Predicate::Unused);
                continue;
            }
            let (key, op, value) = split_term(term).ok_or_else(|| {
                invalid(format!(
                    "`{term}` is not of the form key=value or key~value"
                ))
            })?;
            let value = value.trim();
            let key = key.trim();
            if value.is_empty() {
                return Err(invalid(format!("`{key}` has an empty value")));
            }
            let wants = |expected: char| -> Result<(), QueryError> {
                if op == expected {
                    Ok(())
                } else {
                    Err(QueryError::Invalid(format!("use `{key}{expected}`")))
                }
            };
            match key {
                "kind" => {
                    wants('=')?;
                    if kind.is_some() {
                        return Err(invalid("`kind` given twice".into()));
                    }
                    kind = Some(
                        QueryKind::parse(value)
                            .ok_or_else(|| invalid(format!("unknown kind `{value}`")))?,
                    );
                }
                "name" => {
                    wants('=')?;
                    filters.push(Predicate::NameGlob(Glob::new(value)?));
                }
                "class.category" | "class.group" | "class.level" => {
                    wants('=')?;
                    let d = match key {
                        "class.category" => Descriptor::Category,
                        "class.group" => Descriptor::Group,
                        _ => Descriptor::Level,
                    };
                    filters.push(Predicate::ClassEquals(d, value.to_string()));
                }
                "class.states" => {
                    wants('~')?;
                    filters.push(Predicate::StateContains(value.to_string()));
                }
                "refs" => {
                    wants('=')?;
                    filters.push(Predicate::References(value.to_string()));
                }
                "type" => {
                    wants('=')?;
                    filters.push(Predicate::UsesType(value.to_string()));
                }
                "select" => {
                    wants('=')?;
                    if select.is_some() {
                        return Err(invalid("`select` given twice".into()));
                    }
                    select = Some(parse_select(value)?);
                }
                other => return Err(invalid(format!("unknown term `{other}`"))),
            }
        }
        let q = Query {
            kind: kind.unwrap_or(QueryKind::Function),
            filters,
            select: select.unwrap_or_else(|| vec![Field::Id]),
        };
        q.validate()?;
        Ok(q)
    }

    /// Rejects predicates and fields that do not apply to the kind.
    pub fn validate(&self) -> Result<(), QueryError> {
        for p in &self.filters {
            if !p.applies_to(self.kind) {
                return Err(QueryError::Invalid(format!(
                    "`{}` does not apply to {} queries",
                    p.label(),
                    self.kind
                )));
            }
        }
        if self.select.is_empty() {
            return Err(QueryError::Invalid("empty selection".into()));
        }
        for f in &self.select {
            if !f.applies_to(self.kind) {
                return Err(QueryError::Invalid(format!(
                    "field `{}` does not apply to {} queries",
                    f.name(),
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

fn split_term(term: &str) -> Option<(&str, char, &str)> {
    let i = term.find(['=', '~'])?;
    let op = term[i..].chars().next()?;
    Some((&term[..i], op, &term[i + 1..]))
}

/// Parses a comma-separated projection list such as `id,class.category`.
pub fn parse_select(text: &str) -> Result<Vec<Field>, QueryError> {
    text.split(',')
        .map(str::trim)
        .map(|name| {
            Field::parse(name).ok_or_else(|| QueryError::Invalid(format!("unknown field `{name}`")))
        })
        .collect()
}

/// Projected rows in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<Field>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    /// The `id` column of every row.
    pub fn ids(&self) -> Vec<String> {
        let i = self.columns.iter().position(|c| *c == Field::Id);
        self.rows
            .iter()
            .filter_map(|r| i.and_then(|i| r[i].as_str()).map(str::to_string))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.name().to_string(), v.clone()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Space-aligned text with a header line.
    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(cell_text).collect())
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.name().len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |values: Vec<&str>| -> String {
            let last = values.len() - 1;
            let mut s = String::new();
            for (i, v) in values.into_iter().enumerate() {
                s.push_str(v);
                if i < last {
                    let pad = widths[i] - v.chars().count() + 2;
                    s.extend(std::iter::repeat_n(' ', pad));
                }
            }
            s.push('\n');
            s
        };
        let mut out = line(self.columns.iter().map(|c| c.name()).collect());
        for row in &cells {
            out.push_str(&line(row.iter().map(String::as_str).collect()));
        }
        out
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell_text).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

pub fn evaluate(spec: &Specification, q: &Query) -> Result<Table, QueryError> {
    q.validate()?;
    let rows = match q.kind {
        QueryKind::Function => spec
            .functions()
            .filter(|f| q.filters.iter().all(|p| function_matches(spec, f, p)))
            .map(|f| q.select.iter().map(|c| function_field(f, *c)).collect())
            .collect(),
        QueryKind::Element => spec
            .elements()
            .filter(|e| q.filters.iter().all(|p| element_matches(spec, e, p)))
            .map(|e| q.select.iter().map(|c| element_field(e, *c)).collect())
            .collect(),
        QueryKind::Type => spec
            .types()
            .filter(|t| q.filters.iter().all(|p| type_matches(spec, t, p)))
            .map(|t| q.select.iter().map(|c| type_field(t, *c)).collect())
            .collect(),
    };
    Ok(Table {
        columns: q.select.clone(),
        rows,
    })
}

fn function_matches(spec: &Specification, f: &FunctionSpec, p: &Predicate) -> bool {
    match p {
        Predicate::NameGlob(g) => g.matches(&f.id),
        Predicate::ClassEquals(d, v) => d.of(&f.classification) == v,
        Predicate::StateContains(s) => f.classification.states.contains(s),
        Predicate::References(e) => f.references(e),
        Predicate::UsesType(t) => f
            .params
            .iter()
            .any(|p| spec.element(&p.element).is_some_and(|e| &e.type_ref == t)),
        Predicate::Unused => false,
    }
}

fn element_matches(spec: &Specification, e: &DataElement, p: &Predicate) -> bool {
    match p {
        Predicate::NameGlob(g) => g.matches(&e.id),
        Predicate::UsesType(t) => &e.type_ref == t,
        Predicate::Unused => !spec.functions().any(|f| f.references(&e.id)),
        _ => false,
    }
}

fn type_matches(spec: &Specification, t: &DataType, p: &Predicate) -> bool {
    match p {
        Predicate::NameGlob(g) => g.matches(&t.id),
        Predicate::Unused => !spec.elements().any(|e| e.type_ref == t.id),
        _ => false,
    }
}

fn function_field(f: &FunctionSpec, c: Field) -> Value {
    let class = &f.classification;
    match c {
        Field::Id => json!(f.id),
        Field::Category => json!(class.category),
        Field::Group => json!(class.group),
        Field::Level => json!(class.level),
        Field::States => json!(class.states),
        Field::ParamCount => json!(f.params.len()),
        Field::EffectCount => json!(f.effects.len()),
        Field::Type | Field::Restriction => Value::Null,
    }
}

fn element_field(e: &DataElement, c: Field) -> Value {
    match c {
        Field::Id => json!(e.id),
        Field::Type => json!(e.type_ref),
        Field::Restriction => json!(e.restriction.to_string()),
        _ => Value::Null,
    }
}

fn type_field(t: &DataType, c: Field) -> Value {
    match c {
        Field::Id => json!(t.id),
        Field::Type => json!(t.describe()),
        _ => Value::Null,
    }
}

/// One function's reference to an element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub function: String,
    pub direction: Direction,
    pub implicit: bool,
}

/// An effect whose body reads or assigns the element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectUse {
    pub function: String,
    pub effect: String,
    pub reads: bool,
    pub assigns: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XRef {
    pub element: String,
    #[serde(rename = "type")]
    pub type_ref: String,
    pub restriction: String,
    pub functions: Vec<Reference>,
    pub effects: Vec<EffectUse>,
}

/// Cross-reference report for one element (including `$state` when the
/// specification declares states).
pub fn xref(spec: &Specification, element: &str) -> Result<XRef, QueryError> {
    let (type_ref, restriction) = match spec.element(element) {
        Some(e) => (e.type_ref.clone(), e.restriction.to_string()),
        None if element == STATE_ELEMENT && spec.state_decl().is_some() => {
            ("string".to_string(), Restriction::Unrestricted.to_string())
        }
        None => return Err(QueryError::UnknownElement(element.to_string())),
    };
    let mut functions = Vec::new();
    let mut effects = Vec::new();
    for f in spec.functions() {
        if let Some(p) = f.param(element) {
            functions.push(Reference {
                function: f.id.clone(),
                direction: p.direction,
                implicit: p.implicit,
            });
        }
        for e in &f.effects {
            let reads = e.reads_element(element);
            let assigns = e.assigns_element(element);
            if reads || assigns {
                effects.push(EffectUse {
                    function: f.id.clone(),
                    effect: e.id.clone(),
                    reads,
                    assigns,
                });
            }
        }
    }
    Ok(XRef {
        element: element.to_string(),
        type_ref,
        restriction,
        functions,
        effects,
    })
}
