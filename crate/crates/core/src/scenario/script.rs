//! `.svs` scenario scripts: one directive per line, `#` comments.
//!
//! ```text
//! call FUNC [name=literal|name=defined ...]
//! expect-error CODE call FUNC [...]
//! assert ELEM relop literal
//! assert-status ELEM status
//! ```

use std::fmt::Write;

use crate::diag::{Code, Diagnostic};
use crate::dsl::{lex, Parser};
use crate::model::*;

use super::{compare, Binding, BindingValue, ScenarioError, Session, Store, TraceRecord};

#[derive(Clone, Debug, PartialEq)]
pub enum Directive {
    Call {
        function: String,
        bindings: Binding,
    },
    ExpectError {
        code: Code,
        function: String,
        bindings: Binding,
    },
    Assert {
        element: String,
        op: RelOp,
        value: Literal,
    },
    AssertStatus {
        element: String,
        status: Status,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectiveResult {
    pub line: u32,
    /// The directive's source text, trimmed.
    pub text: String,
    pub passed: bool,
    /// Why the directive failed.
    pub detail: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ScriptRun {
    pub results: Vec<DirectiveResult>,
    pub trace: Vec<TraceRecord>,
    pub store: Store,
}

impl ScriptRun {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.results.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    pub fn summary(&self) -> String {
        format!("{} passed, {} failed", self.passed(), self.failed())
    }

    /// One `PASS`/`FAIL` line per directive followed by the summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            let _ = write!(out, "{verdict} {}: {}", r.line, r.text);
            if let Some(d) = &r.detail {
                let _ = write!(out, " ({d})");
            }
            out.push('\n');
        }
        out.push_str(&self.summary());
        out.push('\n');
        out
    }
}

/// Parses a script; all syntax errors are collected.
pub fn parse_script(text: &str) -> Result<Vec<(u32, String, Directive)>, Vec<Diagnostic>> {
    let mut directives = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let number = i as u32 + 1;
        let relocate = |mut d: Diagnostic| {
            d.loc = d.loc.map(|l| Loc::new(number, l.col));
            d.entity = "script".to_string();
            d
        };
        let (tokens, lex_errors) = lex(line);
        if !lex_errors.is_empty() {
            errors.extend(lex_errors.into_iter().map(relocate));
            continue;
        }
        let mut p = Parser::new(tokens);
        if p.at_eof() {
            continue;
        }
        match directive(&mut p) {
            Ok(d) => directives.push((number, line.trim().to_string(), d)),
            Err(e) => errors.push(relocate(e)),
        }
    }
    if errors.is_empty() {
        Ok(directives)
    } else {
        Err(errors)
    }
}

fn directive(p: &mut Parser) -> Result<Directive, Diagnostic> {
    let d = if p.eat_word("call") {
        let (function, bindings) = call(p)?;
        Directive::Call { function, bindings }
    } else if p.is_word("expect") {
        p.bump();
        p.expect_sym("-")?;
        if !p.eat_word("error") {
            return p.error("`expect-error`");
        }
        let loc = p.peek().loc;
        let (word, _) = p.ident()?;
        let code = Code::parse(&word).ok_or_else(|| {
            crate::dsl::syntax_error(loc, format!("unknown diagnostic code `{word}`"))
        })?;
        if !p.eat_word("call") {
            return p.error("`call`");
        }
        let (function, bindings) = call(p)?;
        Directive::ExpectError {
            code,
            function,
            bindings,
        }
    } else if p.eat_word("assert") {
        if p.eat_sym("-") {
            if !p.eat_word("status") {
                return p.error("`assert-status`");
            }
            let (element, _) = p.ident()?;
            let status = p.status()?;
            Directive::AssertStatus { element, status }
        } else {
            let (element, _) = p.ident()?;
            let op = p.relop()?;
            let value = p.literal()?;
            Directive::Assert { element, op, value }
        }
    } else {
        return p.error("`call`, `expect-error`, `assert` or `assert-status`");
    };
    if !p.at_eof() {
        return p.error("end of line");
    }
    Ok(d)
}

fn call(p: &mut Parser) -> Result<(String, Binding), Diagnostic> {
    let (function, _) = p.ident()?;
    let mut bindings = Binding::new();
    while !p.at_eof() {
        let loc = p.peek().loc;
        let (name, _) = p.ident()?;
        p.expect_sym("=")?;
        let value = if p.eat_word("defined") {
            BindingValue::Defined
        } else {
            BindingValue::Value(p.literal()?)
        };
        if bindings.insert(name.clone(), value).is_some() {
            return Err(crate::dsl::syntax_error(
                loc,
                format!("`{name}` is bound twice"),
            ));
        }
    }
    Ok((function, bindings))
}

/// Parses and runs a script on a fresh session. Execution continues past
/// failures so that every failing directive is reported.
pub fn run_script(spec: &Specification, text: &str) -> Result<ScriptRun, ScenarioError> {
    let directives = parse_script(text).map_err(ScenarioError::Script)?;
    let mut session = super::new_session(spec)?;
    let results = directives
        .into_iter()
        .map(|(line, text, d)| {
            let detail = run_directive(&mut session, &d).err();
            DirectiveResult {
                line,
                text,
                passed: detail.is_none(),
                detail,
            }
        })
        .collect();
    Ok(ScriptRun {
        results,
        trace: session.trace().to_vec(),
        store: session.snapshot(),
    })
}

fn run_directive(session: &mut Session, d: &Directive) -> Result<(), String> {
    match d {
        Directive::Call { function, bindings } => {
            let rec = session.call_function(function, bindings);
            match rec.outcome.code() {
                None => Ok(()),
                Some(code) => Err(format!(
                    "rejected {code}: {}",
                    rec.message.unwrap_or_default()
                )),
            }
        }
        Directive::ExpectError {
            code,
            function,
            bindings,
        } => {
            let rec = session.call_function(function, bindings);
            match rec.outcome.code() {
                Some(c) if c == *code => Ok(()),
                Some(c) => Err(format!("expected {code}, rejected {c}")),
                None => Err(format!("expected {code}, call succeeded")),
            }
        }
        Directive::Assert { element, op, value } => {
            let Some(cell) = session.store().get(element) else {
                return Err(format!("unknown element `{element}`"));
            };
            let Some(actual) = &cell.value else {
                return Err(format!("`{element}` is {}, not known", cell.status));
            };
            match compare(actual, value) {
                Some(ord) if op.holds(ord) => Ok(()),
                Some(_) => Err(format!("`{element}` is {actual}")),
                None => Err(format!(
                    "cannot compare {} value {actual} with {value}",
                    actual.kind()
                )),
            }
        }
        Directive::AssertStatus { element, status } => {
            let Some(cell) = session.store().get(element) else {
                return Err(format!("unknown element `{element}`"));
            };
            if cell.status == *status {
                Ok(())
            } else {
                Err(format!("status is {}", cell.status))
            }
        }
    }
}
