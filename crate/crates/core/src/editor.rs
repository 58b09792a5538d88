//! Check-gated editing. A change is first proposed: it is applied to a
//! copy of the base specification and the copy is checked. Only proposals
//! whose check found no errors can be committed, so the base stays
//! consistent after every step.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::checker::{check_spec, CheckReport};
use crate::diag::{Code, Diagnostic};
use crate::dsl::{format_decl, parse_declaration};
use crate::model::*;

/// One piecewise modification.
#[derive(Clone, Debug, PartialEq)]
pub enum Change {
    Add(Decl),
    Replace {
        kind: EntityKind,
        id: String,
        decl: Decl,
    },
    Delete {
        kind: EntityKind,
        id: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ChangeError {
    #[error("malformed change: {0}")]
    Malformed(String),
    #[error("declaration does not parse")]
    Syntax(Vec<Diagnostic>),
}

impl Change {
    pub fn op(&self) -> &'static str {
        match self {
            Change::Add(_) => "add",
            Change::Replace { .. } => "replace",
            Change::Delete { .. } => "delete",
        }
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            Change::Add(d) => d.entity_kind().expect("add carries an entity"),
            Change::Replace { kind, .. } | Change::Delete { kind, .. } => *kind,
        }
    }

    /// The id the change is about: the new entity for adds, the target otherwise.
    pub fn target(&self) -> &str {
        match self {
            Change::Add(d) => d.id().unwrap_or_default(),
            Change::Replace { id, .. } | Change::Delete { id, .. } => id,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({"op": self.op(), "kind": self.kind(), "id": self.target()});
        if let Change::Add(decl) | Change::Replace { decl, .. } = self {
            v["decl"] = Value::String(format_decl(decl));
        }
        v
    }

    /// Reads `{"op", "kind", "id", "decl"}`. `decl` holds the DSL text of a
    /// single declaration and is required for add and replace; `id` is
    /// optional for add (it must then match the declaration).
    pub fn from_json(v: &Value) -> Result<Change, ChangeError> {
        let malformed = |m: &str| ChangeError::Malformed(m.to_string());
        let obj = v
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object"))?;
        let field = |name: &str| obj.get(name).and_then(Value::as_str);
        let op = field("op").ok_or_else(|| malformed("missing string field `op`"))?;
        let kind: EntityKind = match field("kind") {
            Some(k) => serde_json::from_value(Value::String(k.to_string()))
                .map_err(|_| malformed("`kind` must be type, element or function"))?,
            None => return Err(malformed("missing string field `kind`")),
        };
        let id = field("id");
        let decl = || -> Result<Decl, ChangeError> {
            let text = field("decl").ok_or_else(|| malformed("missing string field `decl`"))?;
            let decl = parse_declaration(text).map_err(ChangeError::Syntax)?;
            if decl.entity_kind() != Some(kind) {
                return Err(malformed(&format!("`decl` does not declare a {kind}")));
            }
            Ok(decl)
        };
        match op {
            "add" => {
                let decl = decl()?;
                if id.is_some_and(|id| Some(id) != decl.id()) {
                    return Err(malformed("`id` does not match the declaration"));
                }
                Ok(Change::Add(decl))
            }
            "replace" => Ok(Change::Replace {
                kind,
                id: id
                    .ok_or_else(|| malformed("missing string field `id`"))?
                    .to_string(),
                decl: decl()?,
            }),
            "delete" => Ok(Change::Delete {
                kind,
                id: id
                    .ok_or_else(|| malformed("missing string field `id`"))?
                    .to_string(),
            }),
            other => Err(malformed(&format!("unknown op `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalStatus {
    Pending,
    Committed,
    Abandoned,
}

#[derive(Clone, Debug)]
pub struct Proposal {
    pub id: String,
    pub change: Change,
    pub report: CheckReport,
    pub status: ProposalStatus,
    base_version: u64,
    result: Specification,
}

impl Proposal {
    /// The specification the change would produce.
    pub fn resulting_spec(&self) -> &Specification {
        &self.result
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EditError {
    #[error("proposal `{0}` has errors and cannot be committed")]
    NotConsistent(String),
    #[error("proposal `{0}` was checked against an older specification; propose it again")]
    StaleProposal(String),
    #[error("no pending proposal `{0}`")]
    UnknownProposal(String),
    #[error("the starting specification is not consistent")]
    InconsistentBase(CheckReport),
}

#[derive(Clone, Debug)]
pub struct EditSession {
    base: Specification,
    version: u64,
    next_id: u64,
    proposals: BTreeMap<String, Proposal>,
}

impl EditSession {
    pub fn new(spec: Specification) -> Result<EditSession, EditError> {
        let report = check_spec(&spec);
        if !report.consistent {
            return Err(EditError::InconsistentBase(report));
        }
        Ok(EditSession {
            base: spec,
            version: 0,
            next_id: 1,
            proposals: BTreeMap::new(),
        })
    }

    pub fn spec(&self) -> &Specification {
        &self.base
    }

    /// Incremented by every commit.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn proposal(&self, id: &str) -> Option<&Proposal> {
        self.proposals.get(id)
    }

    pub fn propose(&mut self, change: Change) -> &Proposal {
        let (result, report) = match apply(&self.base, &change) {
            Some(spec) => {
                let report = check_spec(&spec);
                (spec, report)
            }
            None => {
                let mut diags = check_spec(&self.base).diagnostics;
                diags.push(Diagnostic::new(
                    Code::E002,
                    change.target(),
                    format!(
                        "no {} `{}` to {}",
                        change.kind(),
                        change.target(),
                        change.op()
                    ),
                ));
                (self.base.clone(), CheckReport::from_diagnostics(diags))
            }
        };
        let id = format!("p{}", self.next_id);
        self.next_id += 1;
        let proposal = Proposal {
            id: id.clone(),
            change,
            report,
            status: ProposalStatus::Pending,
            base_version: self.version,
            result,
        };
        self.proposals.entry(id).or_insert(proposal)
    }

    pub fn commit(&mut self, proposal_id: &str) -> Result<&Specification, EditError> {
        let p = self
            .proposals
            .get_mut(proposal_id)
            .filter(|p| p.status == ProposalStatus::Pending)
            .ok_or_else(|| EditError::UnknownProposal(proposal_id.to_string()))?;
        if p.base_version != self.version {
            return Err(EditError::StaleProposal(proposal_id.to_string()));
        }
        if !p.report.consistent {
            return Err(EditError::NotConsistent(proposal_id.to_string()));
        }
        p.status = ProposalStatus::Committed;
        self.base = p.result.clone();
        self.version += 1;
        Ok(&self.base)
    }

    pub fn abandon(&mut self, proposal_id: &str) -> Result<(), EditError> {
        match self.proposals.get_mut(proposal_id) {
            Some(p) if p.status == ProposalStatus::Pending => {
                p.status = ProposalStatus::Abandoned;
                Ok(())
            }
            _ => Err(EditError::UnknownProposal(proposal_id.to_string())),
        }
    }
}

/// The specification after `change`, or `None` when its target is missing.
fn apply(base: &Specification, change: &Change) -> Option<Specification> {
    let mut spec = base.clone();
    match change {
        Change::Add(decl) => spec.decls.push(decl.clone()),
        Change::Replace { kind, id, decl } => {
            let i = spec.position(*kind, id)?;
            spec.decls[i] = decl.clone();
        }
        Change::Delete { kind, id } => {
            let i = spec.position(*kind, id)?;
            spec.decls.remove(i);
        }
    }
    Some(spec)
}
