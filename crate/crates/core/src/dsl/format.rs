use std::fmt::Write;

use crate::model::*;

/// Canonical source text. Declarations keep their order; reparsing the
/// output yields a structurally equal specification.
pub fn format_spec(spec: &Specification) -> String {
    let mut out = String::new();
    let mut prev: Option<&Decl> = None;
    for decl in &spec.decls {
        if let Some(p) = prev {
            if needs_blank_line(p, decl) {
                out.push('\n');
            }
        }
        format_decl_into(&mut out, decl);
        prev = Some(decl);
    }
    out
}

pub fn format_decl(decl: &Decl) -> String {
    let mut out = String::new();
    format_decl_into(&mut out, decl);
    out
}

fn needs_blank_line(prev: &Decl, next: &Decl) -> bool {
    let block = |d: &Decl| matches!(d, Decl::Func(_) | Decl::States(_));
    block(prev) || block(next) || std::mem::discriminant(prev) != std::mem::discriminant(next)
}

fn format_decl_into(out: &mut String, decl: &Decl) {
    match decl {
        Decl::Type(t) => {
            let _ = writeln!(out, "type {} {}", t.id, t.describe());
        }
        Decl::States(s) => {
            let _ = writeln!(out, "states {{ {} }}", s.states.join(", "));
        }
        Decl::Data(d) => {
            let _ = write!(out, "data {} : {}", d.id, d.type_ref);
            out.push_str(&restriction_clauses(&d.restriction));
            match &d.init {
                Init::Unallocated => {}
                Init::Allocated => out.push_str(" init allocated"),
                Init::Defined => out.push_str(" init defined"),
                Init::Known(v) => {
                    let _ = write!(out, " init {v}");
                }
            }
            out.push('\n');
        }
        Decl::Func(f) => format_function(out, f),
    }
}

fn format_function(out: &mut String, f: &FunctionSpec) {
    let c = &f.classification;
    let _ = writeln!(out, "func {} {{", f.id);
    let _ = writeln!(
        out,
        "  class category = {} group = {} level = {} states = [{}]",
        c.category,
        c.group,
        c.level,
        c.states.join(", ")
    );
    for p in &f.params {
        let _ = write!(out, "  param {} {}", p.element, p.direction.keyword());
        if p.implicit {
            out.push_str(" implicit");
        }
        out.push('\n');
    }
    for e in &f.effects {
        let _ = writeln!(out, "  effect {} {{", e.id);
        for pre in &e.pre {
            let _ = write!(out, "    pre {} {}", pre.element, pre.required);
            if let Some(r) = &pre.restriction {
                out.push_str(&restriction_clauses(r));
            }
            out.push('\n');
        }
        for post in &e.post {
            let _ = writeln!(out, "    post {} {}", post.element, post.resulting);
        }
        match &e.body {
            EffectBody::Abstract => out.push_str("    abstract\n"),
            EffectBody::Transform(stmts) => {
                for s in stmts {
                    let _ = writeln!(out, "    {}", format_statement(s));
                }
            }
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
}

/// ` restrict ...` clauses with a leading space, or nothing when unrestricted.
pub fn restriction_clauses(r: &Restriction) -> String {
    let op = |b: &Bound| if b.inclusive { "<=" } else { "<" };
    match r {
        Restriction::Unrestricted => String::new(),
        Restriction::NumericRange { lower, upper } => match (lower, upper) {
            (Some(l), Some(u)) => {
                format!(
                    " restrict {} {} value {} {}",
                    l.value,
                    op(l),
                    op(u),
                    u.value
                )
            }
            (Some(l), None) => format!(
                " restrict value {} {}",
                if l.inclusive { ">=" } else { ">" },
                l.value
            ),
            (None, Some(u)) => format!(" restrict value {} {}", op(u), u.value),
            (None, None) => String::new(),
        },
        Restriction::StringLength { min, max } => {
            let mut s = String::new();
            if *min > 0 {
                let _ = write!(s, " restrict length >= {min}");
            }
            if let Some(max) = max {
                let _ = write!(s, " restrict length <= {max}");
            }
            s
        }
    }
}

pub fn format_statement(s: &Statement) -> String {
    match s {
        Statement::Assign { target, expr, .. } => format!("{target} := {expr}"),
        Statement::Require {
            left, op, right, ..
        } => format!("require {left} {} {right}", op.symbol()),
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        _ => 3,
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Ref(id) => f.write_str(id),
            Expr::Len(e) => write!(f, "len({e})"),
            Expr::Neg(e) => match e.as_ref() {
                Expr::Ref(_) | Expr::Len(_) => write!(f, "-{e}"),
                Expr::Lit(Literal::Int(i)) if *i >= 0 => write!(f, "-{e}"),
                Expr::Lit(Literal::Real(r)) if r.is_sign_positive() => write!(f, "-{e}"),
                _ => write!(f, "-({e})"),
            },
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                if precedence(lhs) < p {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if precedence(rhs) <= p {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
        }
    }
}
