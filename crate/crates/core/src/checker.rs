//! Static consistency checking.
//!
//! Phases run in a fixed order (uniqueness, reference existence, restriction
//! agreement, transform typing, status flow, unused entities) and later
//! phases skip entities an earlier phase already flagged, so one mistake
//! produces one finding.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::diag::{sort_diagnostics, Code, Diagnostic};
use crate::model::*;
use crate::symbols::SymbolTable;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub consistent: bool,
    /// Number of diagnostics per code.
    pub summary: BTreeMap<String, usize>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckReport {
    pub fn from_diagnostics(mut diagnostics: Vec<Diagnostic>) -> Self {
        sort_diagnostics(&mut diagnostics);
        let mut summary = BTreeMap::new();
        for d in &diagnostics {
            *summary.entry(d.code.as_str().to_string()).or_insert(0) += 1;
        }
        CheckReport {
            consistent: !diagnostics.iter().any(Diagnostic::is_error),
            summary,
            diagnostics,
        }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| !d.is_error())
    }

    pub fn count(&self, code: Code) -> usize {
        self.summary.get(code.as_str()).copied().unwrap_or(0)
    }

    /// One diagnostic per line, in report order.
    pub fn to_text(&self) -> String {
        self.diagnostics
            .iter()
            .map(|d| format!("{}\n", d.to_line()))
            .collect()
    }
}

/// Runs every phase over `spec`.
pub fn check_spec(spec: &Specification) -> CheckReport {
    let mut ctx = Context::new(spec);
    let mut diags = Vec::new();
    diags.extend(ctx.uniqueness());
    diags.extend(ctx.existence());
    diags.extend(ctx.restrictions());
    for (_, f) in ctx.live_functions() {
        diags.extend(transform_types(f, spec, &ctx.table));
    }
    for (_, f) in ctx.live_functions() {
        diags.extend(status_flow(f, &ctx.table, &HashMap::new()));
    }
    diags.extend(ctx.unused());
    CheckReport::from_diagnostics(diags)
}

/// Restriction well-formedness and agreement (E003, E005, E007) alone.
pub fn check_restriction_agreement(spec: &Specification) -> Vec<Diagnostic> {
    let mut ctx = Context::new(spec);
    ctx.uniqueness();
    ctx.existence();
    let mut diags = ctx.restrictions();
    sort_diagnostics(&mut diags);
    diags
}

/// Status flow through `function`'s effects (E004). Entry statuses come
/// from the first-mentioning effect's pre, else the element's init.
pub fn check_status_flow(function: &FunctionSpec, spec: &Specification) -> Vec<Diagnostic> {
    check_status_flow_from(function, spec, &HashMap::new())
}

/// Like [`check_status_flow`], with explicit entry statuses overriding the
/// default assumption for the listed parameters.
pub fn check_status_flow_from(
    function: &FunctionSpec,
    spec: &Specification,
    entry: &HashMap<String, Status>,
) -> Vec<Diagnostic> {
    let table = SymbolTable::new(spec);
    let mut diags = status_flow(function, &table, entry);
    sort_diagnostics(&mut diags);
    diags
}

/// Type checks of `function`'s transform statements (E005, E006, E008).
pub fn check_transform_types(function: &FunctionSpec, spec: &Specification) -> Vec<Diagnostic> {
    let table = SymbolTable::new(spec);
    let mut diags = transform_types(function, spec, &table);
    sort_diagnostics(&mut diags);
    diags
}

struct Context<'a> {
    spec: &'a Specification,
    table: SymbolTable,
    /// Declarations (by index into `spec.decls`) excluded from later phases.
    skipped: HashSet<usize>,
}

fn effect_path(f: &FunctionSpec, e: &Effect) -> String {
    format!("{}.{}", f.id, e.id)
}

impl<'a> Context<'a> {
    fn new(spec: &'a Specification) -> Self {
        Context {
            spec,
            table: SymbolTable::new(spec),
            skipped: HashSet::new(),
        }
    }

    fn live_functions(&self) -> Vec<(usize, &'a FunctionSpec)> {
        let spec = self.spec;
        spec.decls
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.skipped.contains(i))
            .filter_map(|(i, d)| match d {
                Decl::Func(f) => Some((i, f)),
                _ => None,
            })
            .collect()
    }

    fn live_elements(&self) -> Vec<(usize, &'a DataElement)> {
        let spec = self.spec;
        spec.decls
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.skipped.contains(i))
            .filter_map(|(i, d)| match d {
                Decl::Data(e) => Some((i, e)),
                _ => None,
            })
            .collect()
    }

    fn uniqueness(&mut self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut seen: HashMap<(EntityKind, &str), Loc> = HashMap::new();
        let mut effect_ids: HashSet<&str> = HashSet::new();
        // name -> (namespace, loc) of each first declaration
        let mut namespaces: BTreeMap<&str, Vec<(&'static str, Loc)>> = BTreeMap::new();

        for (i, decl) in self.spec.decls.iter().enumerate() {
            match decl {
                Decl::States(s) => {
                    let mut names = HashSet::new();
                    for st in &s.states {
                        if !names.insert(st.as_str()) {
                            diags.push(
                                Diagnostic::new(Code::E001, st, Code::E001.title()).at(s.loc),
                            );
                        } else {
                            namespaces.entry(st).or_default().push(("state", s.loc));
                        }
                    }
                }
                _ => {
                    let kind = decl.entity_kind().expect("named declaration");
                    let id = decl.id().expect("named declaration");
                    if let Some(&first) = seen.get(&(kind, id)) {
                        let message = if first.is_known() {
                            format!("duplicate identifier, {kind} first declared at {first}")
                        } else {
                            "duplicate identifier".to_string()
                        };
                        diags.push(Diagnostic::new(Code::E001, id, message).at(decl.loc()));
                        self.skipped.insert(i);
                        continue;
                    }
                    seen.insert((kind, id), decl.loc());
                    let ns = match kind {
                        EntityKind::Type => "type",
                        EntityKind::Element => "element",
                        EntityKind::Function => "function",
                    };
                    namespaces.entry(id).or_default().push((ns, decl.loc()));
                }
            }
            match decl {
                Decl::Type(t) => {
                    if let TypeBase::Record(fields) = &t.base {
                        let mut names = HashSet::new();
                        for field in fields {
                            if !names.insert(field.name.as_str()) {
                                diags.push(
                                    Diagnostic::new(
                                        Code::E001,
                                        format!("{}.{}", t.id, field.name),
                                        "duplicate record field",
                                    )
                                    .at(field.loc),
                                );
                            }
                        }
                    }
                }
                Decl::Func(f) => {
                    let mut params = HashSet::new();
                    for p in &f.params {
                        if !params.insert(p.element.as_str()) {
                            diags.push(
                                Diagnostic::new(
                                    Code::E001,
                                    &f.id,
                                    format!("parameter `{}` listed twice", p.element),
                                )
                                .at(p.loc),
                            );
                            self.skipped.insert(i);
                        }
                    }
                    for e in &f.effects {
                        if !effect_ids.insert(e.id.as_str()) {
                            diags.push(
                                Diagnostic::new(
                                    Code::E001,
                                    effect_path(f, e),
                                    "duplicate effect identifier",
                                )
                                .at(e.loc),
                            );
                        }
                        let mut pres = HashSet::new();
                        for p in &e.pre {
                            if !pres.insert(p.element.as_str()) {
                                diags.push(
                                    Diagnostic::new(
                                        Code::E001,
                                        effect_path(f, e),
                                        format!("more than one pre for `{}`", p.element),
                                    )
                                    .at(p.loc),
                                );
                                self.skipped.insert(i);
                            }
                        }
                        let mut posts = HashSet::new();
                        for p in &e.post {
                            if !posts.insert(p.element.as_str()) {
                                diags.push(
                                    Diagnostic::new(
                                        Code::E001,
                                        effect_path(f, e),
                                        format!("more than one post for `{}`", p.element),
                                    )
                                    .at(p.loc),
                                );
                                self.skipped.insert(i);
                            }
                        }
                    }
                }
                _ => {}
            }
        }

        for (name, mut decls) in namespaces {
            if decls.len() < 2 {
                continue;
            }
            decls.sort_by_key(|(_, loc)| *loc);
            let (first_ns, _) = decls[0];
            for (ns, loc) in &decls[1..] {
                diags.push(
                    Diagnostic::new(
                        Code::W003,
                        name,
                        format!("{ns} `{name}` shares its name with a {first_ns}"),
                    )
                    .at(*loc),
                );
            }
        }
        diags
    }

    fn existence(&mut self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (_, e) in self.live_elements() {
            if self.table.type_(&e.type_ref).is_none() {
                diags.push(
                    Diagnostic::new(
                        Code::E002,
                        &e.id,
                        format!("unresolved type reference `{}`", e.type_ref),
                    )
                    .at(e.loc),
                );
            }
        }
        let declares_states = self.spec.state_decl().is_some();
        for (i, f) in self.live_functions() {
            let mut flagged: HashSet<&str> = HashSet::new();
            let mut report = |id: &'a str, loc: Loc, diags: &mut Vec<Diagnostic>| {
                if !flagged.insert(id) {
                    return;
                }
                let message = if self.table.element(id).is_some() {
                    format!("element `{id}` is not a parameter of `{}`", f.id)
                } else {
                    format!("unresolved element reference `{id}`")
                };
                diags.push(Diagnostic::new(Code::E002, &f.id, message).at(loc));
            };
            for p in &f.params {
                if self.table.element(&p.element).is_none() {
                    report(&p.element, p.loc, &mut diags);
                }
            }
            for e in &f.effects {
                let mut refs: Vec<(&str, Loc)> = Vec::new();
                refs.extend(e.pre.iter().map(|p| (p.element.as_str(), p.loc)));
                refs.extend(e.post.iter().map(|p| (p.element.as_str(), p.loc)));
                for s in e.body.statements() {
                    if let Statement::Assign { target, .. } = s {
                        refs.push((target, s.loc()));
                    }
                    refs.extend(s.reads().into_iter().map(|r| (r, s.loc())));
                }
                for (id, loc) in refs {
                    if f.param(id).is_none() {
                        report(id, loc, &mut diags);
                    }
                }
            }
            if !flagged.is_empty() {
                self.skipped.insert(i);
            }

            let class = &f.classification;
            if declares_states && class.states.is_empty() {
                diags.push(
                    Diagnostic::new(Code::E006, &f.id, "function lists no allowed states")
                        .at(class.loc),
                );
            }
            for st in &class.states {
                if !self.spec.declares_state(st) {
                    diags.push(
                        Diagnostic::new(Code::E006, &f.id, format!("unknown state `{st}`"))
                            .at(class.loc),
                    );
                }
            }
        }
        diags
    }

    fn restrictions(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        // Elements whose own restriction is unusable; agreement against them is skipped.
        let mut broken: HashSet<&str> = HashSet::new();
        for (_, e) in self.live_elements() {
            let Some(kind) = self.table.type_(&e.type_ref).map(DataType::kind) else {
                broken.insert(&e.id);
                continue;
            };
            let Some(base) = kind.base() else {
                if !e.restriction.is_unrestricted() {
                    diags.push(
                        Diagnostic::new(
                            Code::E005,
                            &e.id,
                            "record elements cannot carry value restrictions",
                        )
                        .at(e.loc),
                    );
                }
                if let Init::Known(_) = e.init {
                    diags.push(
                        Diagnostic::new(
                            Code::E005,
                            &e.id,
                            "record elements cannot be initialized to a value",
                        )
                        .at(e.loc),
                    );
                }
                continue;
            };
            if let Err(err) = e.restriction.check_kind(base) {
                diags.push(Diagnostic::new(Code::E005, &e.id, err.to_string()).at(e.loc));
                broken.insert(&e.id);
                continue;
            }
            let empty = e.restriction.is_empty(base).unwrap_or(false);
            if empty {
                diags.push(
                    Diagnostic::new(
                        Code::E007,
                        &e.id,
                        format!("restriction `{}` admits no value", e.restriction),
                    )
                    .at(e.loc),
                );
                broken.insert(&e.id);
            }
            if let Init::Known(v) = &e.init {
                match v.coerce(base) {
                    None => diags.push(
                        Diagnostic::new(
                            Code::E005,
                            &e.id,
                            format!("initial value {v} is not a {base} value"),
                        )
                        .at(e.loc),
                    ),
                    Some(v) if !empty && !e.restriction.admits(base, &v).unwrap_or(true) => diags
                        .push(
                            Diagnostic::new(
                                Code::E003,
                                &e.id,
                                format!("initial value {v} lies outside `{}`", e.restriction),
                            )
                            .at(e.loc),
                        ),
                    Some(_) => {}
                }
            }
        }

        for (_, f) in self.live_functions() {
            for e in &f.effects {
                for pre in &e.pre {
                    let Some(r) = &pre.restriction else { continue };
                    let Some(info) = self.table.element(&pre.element) else {
                        continue;
                    };
                    let Some(kind) = info.kind else { continue };
                    let path = effect_path(f, e);
                    let Some(base) = kind.base() else {
                        diags.push(
                            Diagnostic::new(
                                Code::E005,
                                path,
                                format!(
                                    "record element `{}` cannot carry a value restriction",
                                    pre.element
                                ),
                            )
                            .at(pre.loc),
                        );
                        continue;
                    };
                    if let Err(err) = r.check_kind(base) {
                        diags.push(Diagnostic::new(Code::E005, path, err.to_string()).at(pre.loc));
                        continue;
                    }
                    if r.is_empty(base).unwrap_or(false) {
                        diags.push(
                            Diagnostic::new(
                                Code::E007,
                                path,
                                format!("restriction `{r}` on `{}` admits no value", pre.element),
                            )
                            .at(pre.loc),
                        );
                        continue;
                    }
                    if broken.contains(pre.element.as_str()) {
                        continue;
                    }
                    if !info.restriction.contains(r, base).unwrap_or(true) {
                        diags.push(
                            Diagnostic::new(
                                Code::E003,
                                path,
                                format!(
                                    "`{r}` on `{}` is not within the element restriction `{}`",
                                    pre.element, info.restriction
                                ),
                            )
                            .at(pre.loc),
                        );
                    }
                }
            }
        }
        diags
    }

    fn unused(&self) -> Vec<Diagnostic> {
        let referenced: HashSet<&str> = self
            .spec
            .functions()
            .flat_map(|f| f.params.iter().map(|p| p.element.as_str()))
            .collect();
        let mut diags = Vec::new();
        for (_, e) in self.live_elements() {
            if !referenced.contains(e.id.as_str()) {
                diags.push(
                    Diagnostic::new(Code::W101, &e.id, "element is referenced by no function")
                        .at(e.loc),
                );
            }
        }
        for (_, f) in self.live_functions() {
            if f.effects.is_empty() {
                diags.push(
                    Diagnostic::new(Code::W102, &f.id, "function declares no effects").at(f.loc),
                );
            }
        }
        diags
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Int,
    Real,
    Str,
    /// Already reported, or unresolvable; suppresses further findings.
    Unknown,
}

impl Ty {
    fn numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Real)
    }

    fn name(self) -> &'static str {
        match self {
            Ty::Int => "int",
            Ty::Real => "real",
            Ty::Str => "string",
            Ty::Unknown => "unknown",
        }
    }
}

fn infer(expr: &Expr, table: &SymbolTable) -> Result<Ty, String> {
    Ok(match expr {
        Expr::Lit(Literal::Int(_)) => Ty::Int,
        Expr::Lit(Literal::Real(_)) => Ty::Real,
        Expr::Lit(Literal::Str(_)) => Ty::Str,
        Expr::Ref(id) => match table.element(id).and_then(|e| e.kind) {
            None => Ty::Unknown,
            Some(ValueKind::Int) => Ty::Int,
            Some(ValueKind::Real) => Ty::Real,
            Some(ValueKind::String) => Ty::Str,
            Some(ValueKind::Record) => {
                return Err(format!(
                    "record element `{id}` cannot be used in a transform"
                ))
            }
        },
        Expr::Neg(e) => match infer(e, table)? {
            t @ (Ty::Int | Ty::Real | Ty::Unknown) => t,
            t => return Err(format!("unary `-` needs a number, found {}", t.name())),
        },
        Expr::Len(e) => match infer(e, table)? {
            Ty::Str | Ty::Unknown => Ty::Int,
            t => return Err(format!("`len` needs a string, found {}", t.name())),
        },
        Expr::Binary { op, lhs, rhs } => {
            let (l, r) = (infer(lhs, table)?, infer(rhs, table)?);
            if l == Ty::Unknown || r == Ty::Unknown {
                return Ok(Ty::Unknown);
            }
            match op {
                BinOp::Concat if l == Ty::Str && r == Ty::Str => Ty::Str,
                BinOp::Concat => {
                    return Err(format!(
                        "`++` needs strings, found {} and {}",
                        l.name(),
                        r.name()
                    ))
                }
                _ if l.numeric() && r.numeric() => {
                    if l == Ty::Real || r == Ty::Real {
                        Ty::Real
                    } else {
                        Ty::Int
                    }
                }
                _ => {
                    return Err(format!(
                        "`{}` needs numbers, found {} and {}",
                        op.symbol(),
                        l.name(),
                        r.name()
                    ))
                }
            }
        }
    })
}

fn transform_types(f: &FunctionSpec, spec: &Specification, table: &SymbolTable) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for e in &f.effects {
        let path = effect_path(f, e);
        for stmt in e.body.statements() {
            let loc = stmt.loc();
            match stmt {
                Statement::Assign { target, expr, .. } => {
                    if let Some(p) = f.param(target) {
                        if p.direction == Direction::In {
                            diags.push(
                                Diagnostic::new(
                                    Code::E008,
                                    &path,
                                    format!("`{target}` is an in-parameter and cannot be assigned"),
                                )
                                .at(loc),
                            );
                        }
                    }
                    if target == STATE_ELEMENT {
                        match expr {
                            Expr::Lit(Literal::Str(s)) if spec.declares_state(s) => {}
                            Expr::Lit(Literal::Str(s)) => diags.push(
                                Diagnostic::new(Code::E006, &path, format!("unknown state `{s}`"))
                                    .at(loc),
                            ),
                            _ => diags.push(
                                Diagnostic::new(
                                    Code::E006,
                                    &path,
                                    "`$state` must be assigned a declared state literal",
                                )
                                .at(loc),
                            ),
                        }
                        continue;
                    }
                    let target_kind = table.element(target).and_then(|i| i.kind);
                    if target_kind == Some(ValueKind::Record) {
                        diags.push(
                            Diagnostic::new(
                                Code::E005,
                                &path,
                                format!("record element `{target}` cannot be assigned a value"),
                            )
                            .at(loc),
                        );
                        continue;
                    }
                    let ty = match infer(expr, table) {
                        Ok(ty) => ty,
                        Err(msg) => {
                            diags.push(Diagnostic::new(Code::E005, &path, msg).at(loc));
                            continue;
                        }
                    };
                    let ok = matches!(
                        (target_kind, ty),
                        (None, _)
                            | (_, Ty::Unknown)
                            | (Some(ValueKind::Int), Ty::Int)
                            | (Some(ValueKind::Real), Ty::Int | Ty::Real)
                            | (Some(ValueKind::String), Ty::Str)
                    );
                    if !ok {
                        diags.push(
                            Diagnostic::new(
                                Code::E005,
                                &path,
                                format!(
                                    "cannot assign a {} value to {} element `{target}`",
                                    ty.name(),
                                    target_kind.expect("known kind")
                                ),
                            )
                            .at(loc),
                        );
                    }
                }
                Statement::Require {
                    left, op, right, ..
                } => {
                    let result = infer(left, table).and_then(|l| Ok((l, infer(right, table)?)));
                    match result {
                        Err(msg) => diags.push(Diagnostic::new(Code::E005, &path, msg).at(loc)),
                        Ok((Ty::Unknown, _)) | Ok((_, Ty::Unknown)) => {}
                        Ok((l, r))
                            if (l.numeric() && r.numeric()) || (l == Ty::Str && r == Ty::Str) => {}
                        Ok((l, r)) => diags.push(
                            Diagnostic::new(
                                Code::E005,
                                &path,
                                format!(
                                    "cannot compare {} with {} using `{}`",
                                    l.name(),
                                    r.name(),
                                    op.symbol()
                                ),
                            )
                            .at(loc),
                        ),
                    }
                }
            }
        }
    }
    diags
}

fn status_flow(
    f: &FunctionSpec,
    table: &SymbolTable,
    entry: &HashMap<String, Status>,
) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut guaranteed: HashMap<&str, Status> = HashMap::new();
    for p in &f.params {
        let Some(info) = table.element(&p.element) else {
            continue;
        };
        let status = entry
            .get(&p.element)
            .copied()
            .or_else(|| f.entry_requirement(&p.element).map(|pre| pre.required))
            .unwrap_or_else(|| info.init.status());
        guaranteed.insert(&p.element, status);
    }

    for e in &f.effects {
        let path = effect_path(f, e);
        for pre in &e.pre {
            let Some(g) = guaranteed.get_mut(pre.element.as_str()) else {
                continue;
            };
            if !g.at_least(pre.required) {
                diags.push(
                    Diagnostic::new(
                        Code::E004,
                        &path,
                        format!(
                            "`{}` must be {} but is only guaranteed {}",
                            pre.element, pre.required, g
                        ),
                    )
                    .at(pre.loc),
                );
                *g = pre.required;
            }
        }
        for stmt in e.body.statements() {
            let reads = stmt.reads();
            for id in &reads {
                let Some(g) = guaranteed.get_mut(id) else {
                    continue;
                };
                if !g.at_least(Status::Defined) {
                    let message = if *g == Status::Unallocated {
                        format!("`{id}` is used as input while neither allocated nor defined")
                    } else {
                        format!("`{id}` is used as input but is only guaranteed {g}")
                    };
                    diags.push(Diagnostic::new(Code::E004, &path, message).at(stmt.loc()));
                    *g = Status::Defined;
                }
            }
            if let Statement::Assign { target, .. } = stmt {
                let all_known = reads
                    .iter()
                    .all(|id| guaranteed.get(id).is_none_or(|s| *s == Status::Known));
                if let Some(g) = guaranteed.get_mut(target.as_str()) {
                    *g = if all_known {
                        Status::Known
                    } else {
                        Status::Defined
                    };
                }
            }
        }
        for post in &e.post {
            if let Some(g) = guaranteed.get_mut(post.element.as_str()) {
                *g = post.resulting;
            }
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_spec;

    fn report(src: &str) -> CheckReport {
        check_spec(&parse_spec(src).unwrap())
    }

    fn codes(r: &CheckReport) -> Vec<&'static str> {
        r.diagnostics.iter().map(|d| d.code.as_str()).collect()
    }

    const BASE: &str = "type W real\ntype N int\ntype S string\n";

    fn func(body: &str) -> String {
        format!("func F {{\n class category = c group = g level = l states = []\n{body}\n}}\n")
    }

    #[test]
    fn clean_spec_is_consistent() {
        let src = format!(
            "{BASE}data lw : W restrict value >= 0.0\ndata out : W\n{}",
            func("param lw in\nparam out out\neffect e { pre lw known restrict value >= 1.0\n out := lw * 2.0 }")
        );
        let r = report(&src);
        assert!(r.consistent, "{}", r.to_text());
        assert!(r.diagnostics.is_empty(), "{}", r.to_text());
    }

    #[test]
    fn duplicate_function_reported_once_at_second_declaration() {
        let f = func("param x in\neffect e { abstract }");
        let f2 = f.replace("effect e", "effect e2");
        let src = format!("{BASE}data x : N\n{f}{f2}");
        let r = report(&src);
        assert_eq!(codes(&r), vec!["E001"], "{}", r.to_text());
        assert_eq!(r.diagnostics[0].entity, "F");
        assert_eq!(r.diagnostics[0].loc.unwrap().line, 10);
    }

    #[test]
    fn unresolved_param_names_element_and_function() {
        let src = format!(
            "{BASE}data x : N\n{}",
            func("param x in\nparam lw2 in\neffect e { pre lw2 known\n x := lw2 }")
        );
        let r = report(&src);
        let errors: Vec<_> = r.errors().collect();
        assert_eq!(errors.len(), 1, "{}", r.to_text());
        assert_eq!(errors[0].code, Code::E002);
        assert_eq!(errors[0].entity, "F");
        assert!(errors[0].message.contains("lw2"));
    }

    #[test]
    fn restriction_agreement_examples() {
        let make = |elem: &str, pre: &str| {
            format!(
                "{BASE}data lw : W {elem}\n{}",
                func(&format!(
                    "param lw in\neffect e {{ pre lw known {pre} abstract }}"
                ))
            )
        };
        let ok = check_restriction_agreement(
            &parse_spec(&make("restrict 0.0 <= value", "restrict value >= 1.0")).unwrap(),
        );
        assert!(ok.is_empty(), "{ok:?}");
        let bad = check_restriction_agreement(
            &parse_spec(&make("restrict value >= 0.0", "restrict value >= -1.0")).unwrap(),
        );
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].code, Code::E003);

        let empty = format!("{BASE}data n : N restrict 5 <= value <= 4\n");
        let d = check_restriction_agreement(&parse_spec(&empty).unwrap());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E007);
    }

    #[test]
    fn status_flow_examples() {
        let spec = parse_spec(&format!(
            "{BASE}data x : N\ndata y : N\n{}",
            func("param x inout\nparam y in\neffect e1 { post x defined abstract }\neffect e2 { pre x defined abstract }")
        ))
        .unwrap();
        let f = spec.function("F").unwrap();
        assert!(check_status_flow(f, &spec).is_empty());

        let spec = parse_spec(&format!(
            "{BASE}data x : N\ndata y : N\n{}",
            func("param x out\nparam y in\neffect e { x := y + 1 }")
        ))
        .unwrap();
        let d = check_status_flow(spec.function("F").unwrap(), &spec);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E004);
        assert!(
            d[0].message.contains("`y`") && d[0].message.contains("neither allocated nor defined")
        );

        let spec = parse_spec(&format!(
            "{BASE}data x : N init 1\n{}",
            func("param x inout\neffect e1 { post x unallocated abstract }\neffect e2 { pre x allocated abstract }")
        ))
        .unwrap();
        let d = check_status_flow(spec.function("F").unwrap(), &spec);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E004);
    }

    #[test]
    fn status_flow_without_effects_is_silent() {
        let spec = parse_spec(&format!("{BASE}data x : N\n{}", func("param x in"))).unwrap();
        assert!(check_status_flow(spec.function("F").unwrap(), &spec).is_empty());
    }

    #[test]
    fn transform_type_examples() {
        let spec = parse_spec(&format!(
            "{BASE}states {{ GKCL, GKOP }}\ndata lw : W\ndata n : N\n{}",
            func("param lw inout\nparam n out\nparam $state inout implicit\neffect e { pre lw known\n lw := lw * 2.0\n n := \"abc\"\n $state := \"NOPE\" }")
        ))
        .unwrap();
        let d = check_transform_types(spec.function("F").unwrap(), &spec);
        let codes: Vec<_> = d.iter().map(|d| d.code).collect();
        assert_eq!(codes, vec![Code::E005, Code::E006]);
    }

    #[test]
    fn assignment_rules() {
        let spec = parse_spec(&format!(
            "{BASE}data r : W\ndata i : N\ndata s : S\n{}",
            func("param r inout\nparam i in\nparam s inout\neffect e { pre i known\n pre s known\n r := i\n i := 1\n r := len(s) / 2\n s := s ++ \"x\"\n require s < \"b\"\n require i == 1.5\n require s == 1 }")
        ))
        .unwrap();
        let d = check_transform_types(spec.function("F").unwrap(), &spec);
        let codes: Vec<_> = d.iter().map(|d| d.code).collect();
        assert_eq!(codes, vec![Code::E008, Code::E005], "{d:?}");
    }

    #[test]
    fn records_carry_status_only() {
        let src = format!(
            "{BASE}type P record {{ x: real, y: real }}\ndata p : P\ndata q : P restrict value > 0\n{}",
            func("param p inout\nparam q in\neffect e { pre q defined\n post p defined\n p := q }")
        );
        let r = report(&src);
        let codes = codes(&r);
        assert_eq!(codes, vec!["E005", "E005"], "{}", r.to_text());
    }

    #[test]
    fn namespaces_and_warnings() {
        let src = format!(
            "{BASE}states {{ W }}\ndata W2 : W\ndata unused : N\nfunc W2 {{\n class category = c group = g level = l states = [W]\n param W2 in\n}}\n"
        );
        let r = report(&src);
        let codes = codes(&r);
        assert!(r.consistent);
        assert_eq!(
            codes,
            vec!["W003", "W101", "W003", "W102"],
            "{}",
            r.to_text()
        );
    }

    #[test]
    fn state_lists_are_checked() {
        let src = format!(
            "{BASE}states {{ A, B }}\ndata x : N\n{}",
            func("param x in\neffect e { abstract }").replace("states = []", "states = [A, C]")
        );
        let r = report(&src);
        assert_eq!(codes(&r), vec!["E006"]);
        let src = format!(
            "{BASE}states {{ A }}\ndata x : N\n{}",
            func("param x in\neffect e { abstract }")
        );
        assert_eq!(codes(&report(&src)), vec!["E006"]);
    }
}
