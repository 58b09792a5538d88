//! Name resolution shared by the checker, the simulator and the query engine.

use std::collections::HashMap;

use crate::model::*;

/// A data element with its type resolved. `$state` appears here as a
/// String element whenever the specification declares states.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementInfo {
    pub id: String,
    pub type_ref: String,
    /// `None` when the type reference does not resolve.
    pub kind: Option<ValueKind>,
    pub restriction: Restriction,
    pub init: Init,
    pub loc: Loc,
}

impl ElementInfo {
    pub fn base(&self) -> Option<BaseKind> {
        self.kind.and_then(ValueKind::base)
    }
}

/// First-declaration-wins lookup tables.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    elements: HashMap<String, ElementInfo>,
    types: HashMap<String, DataType>,
    functions: HashMap<String, usize>,
}

impl SymbolTable {
    pub fn new(spec: &Specification) -> Self {
        let mut table = SymbolTable::default();
        for t in spec.types() {
            table.types.entry(t.id.clone()).or_insert_with(|| t.clone());
        }
        for (i, f) in spec.functions().enumerate() {
            table.functions.entry(f.id.clone()).or_insert(i);
        }
        if let Some(first) = spec.states().first() {
            table.elements.insert(
                STATE_ELEMENT.to_string(),
                ElementInfo {
                    id: STATE_ELEMENT.to_string(),
                    type_ref: "string".to_string(),
                    kind: Some(ValueKind::String),
                    restriction: Restriction::Unrestricted,
                    init: Init::Known(Literal::Str(first.clone())),
                    loc: Loc::default(),
                },
            );
        }
        for e in spec.elements() {
            if table.elements.contains_key(&e.id) {
                continue;
            }
            let kind = table.types.get(&e.type_ref).map(DataType::kind);
            table.elements.insert(
                e.id.clone(),
                ElementInfo {
                    id: e.id.clone(),
                    type_ref: e.type_ref.clone(),
                    kind,
                    restriction: e.restriction.clone(),
                    init: e.init.clone(),
                    loc: e.loc,
                },
            );
        }
        table
    }

    pub fn element(&self, id: &str) -> Option<&ElementInfo> {
        self.elements.get(id)
    }

    pub fn type_(&self, id: &str) -> Option<&DataType> {
        self.types.get(id)
    }

    pub fn has_function(&self, id: &str) -> bool {
        self.functions.contains_key(id)
    }

    pub fn elements(&self) -> impl Iterator<Item = &ElementInfo> {
        self.elements.values()
    }
}
