//! Coded findings shared by the parser, checker, editor and simulator.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::model::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// The stable diagnostic catalog. Severity follows from the code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Syntax error.
    E000,
    /// Duplicate identifier.
    E001,
    /// Unresolved reference.
    E002,
    /// Effect restriction is not a subset of the element restriction.
    E003,
    /// Status-flow violation.
    E004,
    /// Transform type mismatch.
    E005,
    /// Unknown state name.
    E006,
    /// Unsatisfiable restriction.
    E007,
    /// Assignment to an in-parameter.
    E008,
    /// Same name used in two namespaces.
    W003,
    /// Data element referenced by no function.
    W101,
    /// Function with no effects.
    W102,
    /// Unknown function.
    R101,
    /// Operating-state violation.
    R102,
    /// Restriction violation.
    R103,
    /// Status violation.
    R104,
    /// Missing or unexpected binding.
    R105,
    /// Binding type mismatch.
    R106,
    /// Arithmetic fault (division by zero, overflow).
    R107,
    /// `require` evaluated to false.
    R108,
    /// `require` over a value that is defined but not known.
    W201,
}

impl Code {
    pub const ALL: [Code; 21] = [
        Code::E000,
        Code::E001,
        Code::E002,
        Code::E003,
        Code::E004,
        Code::E005,
        Code::E006,
        Code::E007,
        Code::E008,
        Code::W003,
        Code::W101,
        Code::W102,
        Code::R101,
        Code::R102,
        Code::R103,
        Code::R104,
        Code::R105,
        Code::R106,
        Code::R107,
        Code::R108,
        Code::W201,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Code::E000 => "E000",
            Code::E001 => "E001",
            Code::E002 => "E002",
            Code::E003 => "E003",
            Code::E004 => "E004",
            Code::E005 => "E005",
            Code::E006 => "E006",
            Code::E007 => "E007",
            Code::E008 => "E008",
            Code::W003 => "W003",
            Code::W101 => "W101",
            Code::W102 => "W102",
            Code::R101 => "R101",
            Code::R102 => "R102",
            Code::R103 => "R103",
            Code::R104 => "R104",
            Code::R105 => "R105",
            Code::R106 => "R106",
            Code::R107 => "R107",
            Code::R108 => "R108",
            Code::W201 => "W201",
        }
    }

    pub fn parse(s: &str) -> Option<Code> {
        Code::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn severity(self) -> Severity {
        if self.as_str().starts_with('W') {
            Severity::Warning
        } else {
            Severity::Error
        }
    }

    /// Catalog title, used as the default message prefix.
    pub fn title(self) -> &'static str {
        match self {
            Code::E000 => "syntax error",
            Code::E001 => "duplicate identifier",
            Code::E002 => "unresolved reference",
            Code::E003 => "restriction not a subset of element restriction",
            Code::E004 => "status-flow violation",
            Code::E005 => "type mismatch",
            Code::E006 => "unknown state name",
            Code::E007 => "unsatisfiable restriction",
            Code::E008 => "assignment to in-parameter",
            Code::W003 => "identifier shadows another namespace",
            Code::W101 => "unused data element",
            Code::W102 => "function has no effects",
            Code::R101 => "unknown function",
            Code::R102 => "state violation",
            Code::R103 => "restriction violation",
            Code::R104 => "status violation",
            Code::R105 => "missing binding",
            Code::R106 => "type mismatch",
            Code::R107 => "arithmetic fault",
            Code::R108 => "require failed",
            Code::W201 => "unverifiable guard",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: Code,
    /// Path of the entity the finding is about, e.g. `SET_LINE_WIDTH.set_width`.
    pub entity: String,
    pub message: String,
    pub loc: Option<Loc>,
}

impl Diagnostic {
    pub fn new(code: Code, entity: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            entity: entity.into(),
            message: message.into(),
            loc: None,
        }
    }

    pub fn at(mut self, loc: Loc) -> Self {
        self.loc = loc.is_known().then_some(loc);
        self
    }

    pub fn severity(&self) -> Severity {
        self.code.severity()
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }

    /// `CODE severity entity line:col message`.
    pub fn to_line(&self) -> String {
        let loc = match self.loc {
            Some(l) => l.to_string(),
            None => "-".to_string(),
        };
        format!(
            "{} {} {} {} {}",
            self.code,
            self.severity(),
            self.entity,
            loc,
            self.message
        )
    }

    /// Ordering key: source location first (unlocated last), then code.
    pub(crate) fn sort_key(&self) -> (bool, Loc, Code, &str, &str) {
        (
            self.loc.is_none(),
            self.loc.unwrap_or_default(),
            self.code,
            &self.entity,
            &self.message,
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

impl Serialize for Diagnostic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            code: Code,
            severity: Severity,
            entity: &'a str,
            message: &'a str,
            line: Option<u32>,
            col: Option<u32>,
        }
        Wire {
            code: self.code,
            severity: self.severity(),
            entity: &self.entity,
            message: &self.message,
            line: self.loc.map(|l| l.line),
            col: self.loc.map(|l| l.col),
        }
        .serialize(serializer)
    }
}

pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}
