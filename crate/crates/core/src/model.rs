//! Domain model shared by every component: data types, data elements,
//! functions with their effects, and the status lattice.

use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::restriction::{Bound, Number, Restriction, RestrictionError};

/// Name of the implicit element that carries the current operating state.
pub const STATE_ELEMENT: &str = "$state";

/// How much is established about a data element.
///
/// The variants are ordered: `Known` implies `Defined` implies `Allocated`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Unallocated,
    Allocated,
    Defined,
    Known,
}

impl Status {
    pub const ALL: [Status; 4] = [
        Status::Unallocated,
        Status::Allocated,
        Status::Defined,
        Status::Known,
    ];

    pub fn at_least(self, required: Status) -> bool {
        self >= required
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Status::Unallocated => "unallocated",
            Status::Allocated => "allocated",
            Status::Defined => "defined",
            Status::Known => "known",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Status> {
        Status::ALL.into_iter().find(|s| s.keyword() == word)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Returns true iff `actual` is at or above `required` in the lattice.
pub fn status_at_least(actual: Status, required: Status) -> bool {
    actual.at_least(required)
}

/// Source position (1-based). `Loc::default()` means "no position".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }

    pub fn is_known(&self) -> bool {
        self.line > 0
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// The three scalar kinds values can have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Int,
    Real,
    String,
}

impl BaseKind {
    pub fn keyword(self) -> &'static str {
        match self {
            BaseKind::Int => "int",
            BaseKind::Real => "real",
            BaseKind::String => "string",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, BaseKind::Int | BaseKind::Real)
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Kind of a data element once its type is resolved. Records carry status only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Int,
    Real,
    String,
    Record,
}

impl ValueKind {
    pub fn base(self) -> Option<BaseKind> {
        match self {
            ValueKind::Int => Some(BaseKind::Int),
            ValueKind::Real => Some(BaseKind::Real),
            ValueKind::String => Some(BaseKind::String),
            ValueKind::Record => None,
        }
    }
}

impl From<BaseKind> for ValueKind {
    fn from(kind: BaseKind) -> Self {
        match kind {
            BaseKind::Int => ValueKind::Int,
            BaseKind::Real => ValueKind::Real,
            BaseKind::String => ValueKind::String,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.base() {
            Some(b) => b.fmt(f),
            None => f.write_str("record"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Field {
    pub name: String,
    pub base: BaseKind,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeBase {
    Scalar(BaseKind),
    Record(Vec<Field>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataType {
    pub id: String,
    pub base: TypeBase,
    #[serde(skip)]
    pub loc: Loc,
}

impl DataType {
    pub fn kind(&self) -> ValueKind {
        match &self.base {
            TypeBase::Scalar(b) => (*b).into(),
            TypeBase::Record(_) => ValueKind::Record,
        }
    }

    /// Short description such as `real` or `record { x: real, y: real }`.
    pub fn describe(&self) -> String {
        match &self.base {
            TypeBase::Scalar(b) => b.keyword().to_string(),
            TypeBase::Record(fields) => {
                let fields: Vec<String> = fields
                    .iter()
                    .map(|f| format!("{}: {}", f.name, f.base))
                    .collect();
                format!("record {{ {} }}", fields.join(", "))
            }
        }
    }
}

/// A literal value. Reals are IEEE-754 doubles compared exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Str(String),
}

impl Literal {
    pub fn kind(&self) -> BaseKind {
        match self {
            Literal::Int(_) => BaseKind::Int,
            Literal::Real(_) => BaseKind::Real,
            Literal::Str(_) => BaseKind::String,
        }
    }

    /// Converts to `kind`, allowing the Int to Real promotion only.
    pub fn coerce(&self, kind: BaseKind) -> Option<Literal> {
        match (self, kind) {
            (Literal::Int(i), BaseKind::Real) => Some(Literal::Real(*i as f64)),
            (l, k) if l.kind() == k => Some(l.clone()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Literal::Int(i) => serde_json::Value::from(*i),
            Literal::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Literal::Str(s) => serde_json::Value::from(s.as_str()),
        }
    }

    /// Interprets a JSON scalar. Integral JSON numbers become `Int`.
    pub fn from_json(value: &serde_json::Value) -> Option<Literal> {
        match value {
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Literal::Int(i))
                } else {
                    n.as_f64().map(Literal::Real)
                }
            }
            serde_json::Value::String(s) => Some(Literal::Str(s.clone())),
            _ => None,
        }
    }
}

impl Serialize for Literal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// Writes the literal in source syntax (reals always carry a decimal point).
impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(r) => f.write_str(&format_real(*r)),
            Literal::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

pub(crate) fn format_real(r: f64) -> String {
    let s = format!("{r}");
    if s.contains('.') || !r.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// Initial status (and value) of a data element.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    #[default]
    Unallocated,
    Allocated,
    Defined,
    Known(Literal),
}

impl Init {
    pub fn status(&self) -> Status {
        match self {
            Init::Unallocated => Status::Unallocated,
            Init::Allocated => Status::Allocated,
            Init::Defined => Status::Defined,
            Init::Known(_) => Status::Known,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataElement {
    pub id: String,
    pub type_ref: String,
    pub restriction: Restriction,
    pub init: Init,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub category: String,
    pub group: String,
    pub level: String,
    pub states: Vec<String>,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    InOut,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::InOut => "inout",
        }
    }

    pub fn is_input(self) -> bool {
        matches!(self, Direction::In | Direction::InOut)
    }

    pub fn is_output(self) -> bool {
        matches!(self, Direction::Out | Direction::InOut)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamRef {
    pub element: String,
    pub direction: Direction,
    pub implicit: bool,
    #[serde(skip)]
    pub loc: Loc,
}

impl ParamRef {
    /// Explicit In/InOut params are the ones callers bind.
    pub fn is_bindable(&self) -> bool {
        !self.implicit && self.direction.is_input()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreCondition {
    pub element: String,
    pub required: Status,
    pub restriction: Option<Restriction>,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PostCondition {
    pub element: String,
    pub resulting: Status,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "++")]
    Concat,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Concat => "++",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Concat => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelOp {
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<RelOp> {
        Some(match s {
            "==" => RelOp::Eq,
            "!=" => RelOp::Ne,
            "<" => RelOp::Lt,
            "<=" => RelOp::Le,
            ">" => RelOp::Gt,
            ">=" => RelOp::Ge,
            _ => return None,
        })
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            RelOp::Eq => ord == Equal,
            RelOp::Ne => ord != Equal,
            RelOp::Lt => ord == Less,
            RelOp::Le => ord != Greater,
            RelOp::Gt => ord == Greater,
            RelOp::Ge => ord != Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Ref(String),
    Neg(Box<Expr>),
    Len(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    /// Element identifiers read by this expression, in left-to-right order.
    pub fn refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Ref(id) => out.push(id),
            Expr::Neg(e) | Expr::Len(e) => e.collect_refs(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_refs(out);
                rhs.collect_refs(out);
            }
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "stmt", rename_all = "lowercase")]
pub enum Statement {
    Assign {
        target: String,
        expr: Expr,
        #[serde(skip)]
        loc: Loc,
    },
    Require {
        left: Expr,
        op: RelOp,
        right: Expr,
        #[serde(skip)]
        loc: Loc,
    },
}

impl Statement {
    pub fn loc(&self) -> Loc {
        match self {
            Statement::Assign { loc, .. } | Statement::Require { loc, .. } => *loc,
        }
    }

    /// Elements read by the statement (operands only, not the assign target).
    pub fn reads(&self) -> Vec<&str> {
        match self {
            Statement::Assign { expr, .. } => expr.refs(),
            Statement::Require { left, right, .. } => {
                let mut r = left.refs();
                r.extend(right.refs());
                r
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectBody {
    Abstract,
    Transform(Vec<Statement>),
}

impl EffectBody {
    pub fn statements(&self) -> &[Statement] {
        match self {
            EffectBody::Abstract => &[],
            EffectBody::Transform(stmts) => stmts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Effect {
    pub id: String,
    pub pre: Vec<PreCondition>,
    pub post: Vec<PostCondition>,
    pub body: EffectBody,
    #[serde(skip)]
    pub loc: Loc,
}

impl Effect {
    /// Every element identifier the effect mentions, in order of appearance.
    pub fn mentions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        out.extend(self.pre.iter().map(|p| p.element.as_str()));
        out.extend(self.post.iter().map(|p| p.element.as_str()));
        for stmt in self.body.statements() {
            if let Statement::Assign { target, .. } = stmt {
                out.push(target);
            }
            out.extend(stmt.reads());
        }
        out
    }

    pub fn mentions_element(&self, id: &str) -> bool {
        self.mentions().contains(&id)
    }

    pub fn pre_for(&self, id: &str) -> Option<&PreCondition> {
        self.pre.iter().find(|p| p.element == id)
    }

    pub fn reads_element(&self, id: &str) -> bool {
        self.body
            .statements()
            .iter()
            .any(|s| s.reads().contains(&id))
    }

    pub fn assigns_element(&self, id: &str) -> bool {
        self.body
            .statements()
            .iter()
            .any(|s| matches!(s, Statement::Assign { target, .. } if target == id))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionSpec {
    pub id: String,
    pub classification: Classification,
    pub params: Vec<ParamRef>,
    pub effects: Vec<Effect>,
    #[serde(skip)]
    pub loc: Loc,
}

impl FunctionSpec {
    pub fn param(&self, element: &str) -> Option<&ParamRef> {
        self.params.iter().find(|p| p.element == element)
    }

    pub fn references(&self, element: &str) -> bool {
        self.param(element).is_some()
    }

    /// Status obligation on entry: the pre of the first effect mentioning
    /// `element`, if that effect declares one.
    pub fn entry_requirement(&self, element: &str) -> Option<&PreCondition> {
        self.effects
            .iter()
            .find(|e| e.mentions_element(element))
            .and_then(|e| e.pre_for(element))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDecl {
    pub states: Vec<String>,
    #[serde(skip)]
    pub loc: Loc,
}

/// One top-level declaration. Specifications keep them in source order.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "decl", rename_all = "lowercase")]
pub enum Decl {
    Type(DataType),
    States(StateDecl),
    Data(DataElement),
    Func(FunctionSpec),
}

impl Decl {
    pub fn loc(&self) -> Loc {
        match self {
            Decl::Type(t) => t.loc,
            Decl::States(s) => s.loc,
            Decl::Data(d) => d.loc,
            Decl::Func(f) => f.loc,
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            Decl::Type(t) => Some(&t.id),
            Decl::States(_) => None,
            Decl::Data(d) => Some(&d.id),
            Decl::Func(f) => Some(&f.id),
        }
    }

    pub fn entity_kind(&self) -> Option<EntityKind> {
        match self {
            Decl::Type(_) => Some(EntityKind::Type),
            Decl::States(_) => None,
            Decl::Data(_) => Some(EntityKind::Element),
            Decl::Func(_) => Some(EntityKind::Function),
        }
    }
}

/// The three kinds of named, editable entities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Type,
    Element,
    Function,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Type => "type",
            EntityKind::Element => "element",
            EntityKind::Function => "function",
        })
    }
}

/// A whole specification document: the unit of checking and persistence.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Specification {
    pub decls: Vec<Decl>,
}

impl Specification {
    pub fn types(&self) -> impl Iterator<Item = &DataType> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Type(t) => Some(t),
            _ => None,
        })
    }

    pub fn elements(&self) -> impl Iterator<Item = &DataElement> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Data(e) => Some(e),
            _ => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionSpec> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Func(f) => Some(f),
            _ => None,
        })
    }

    /// The first state declaration, if any.
    pub fn state_decl(&self) -> Option<&StateDecl> {
        self.decls.iter().find_map(|d| match d {
            Decl::States(s) => Some(s),
            _ => None,
        })
    }

    pub fn states(&self) -> &[String] {
        self.state_decl()
            .map(|s| s.states.as_slice())
            .unwrap_or(&[])
    }

    pub fn declares_state(&self, name: &str) -> bool {
        self.states().iter().any(|s| s == name)
    }

    pub fn type_(&self, id: &str) -> Option<&DataType> {
        self.types().find(|t| t.id == id)
    }

    pub fn element(&self, id: &str) -> Option<&DataElement> {
        self.elements().find(|e| e.id == id)
    }

    pub fn function(&self, id: &str) -> Option<&FunctionSpec> {
        self.functions().find(|f| f.id == id)
    }

    /// Index of the first declaration of `kind` named `id`.
    pub fn position(&self, kind: EntityKind, id: &str) -> Option<usize> {
        self.decls
            .iter()
            .position(|d| d.entity_kind() == Some(kind) && d.id() == Some(id))
    }

    /// Copy with every source location cleared, for structural comparison.
    pub fn without_locations(&self) -> Specification {
        let mut spec = self.clone();
        spec.clear_locations();
        spec
    }

    fn clear_locations(&mut self) {
        let zero = Loc::default();
        for decl in &mut self.decls {
            match decl {
                Decl::Type(t) => {
                    t.loc = zero;
                    if let TypeBase::Record(fields) = &mut t.base {
                        fields.iter_mut().for_each(|f| f.loc = zero);
                    }
                }
                Decl::States(s) => s.loc = zero,
                Decl::Data(d) => d.loc = zero,
                Decl::Func(f) => {
                    f.loc = zero;
                    f.classification.loc = zero;
                    f.params.iter_mut().for_each(|p| p.loc = zero);
                    for e in &mut f.effects {
                        e.loc = zero;
                        e.pre.iter_mut().for_each(|p| p.loc = zero);
                        e.post.iter_mut().for_each(|p| p.loc = zero);
                        if let EffectBody::Transform(stmts) = &mut e.body {
                            for s in stmts {
                                match s {
                                    Statement::Assign { loc, .. }
                                    | Statement::Require { loc, .. } => *loc = zero,
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
