//! Deterministic generator of large, consistent specifications, used for
//! scale tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::*;

const CATEGORIES: [&str; 6] = [
    "control",
    "output",
    "attribute",
    "segment",
    "input",
    "inquiry",
];
const GROUPS: [&str; 5] = ["gks", "workstation", "primitive", "text", "transform"];
const LEVELS: [&str; 4] = ["L0a", "L0b", "L1a", "L2a"];
const STATES: [&str; 6] = ["S0", "S1", "S2", "S3", "S4", "S5"];

#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub functions: usize,
    pub elements: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            functions: 200,
            elements: 1000,
            seed: 1,
        }
    }
}

struct TypeInfo {
    id: String,
    kind: ValueKind,
}

/// A specification with exactly `functions` functions and `elements` data
/// elements that checks without any diagnostic. The same config always
/// yields the same specification.
pub fn generate(config: SynthConfig) -> Specification {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut decls = Vec::new();

    let kinds = [
        ValueKind::Int,
        ValueKind::Real,
        ValueKind::String,
        ValueKind::Record,
    ];
    let mut types = Vec::new();
    for i in 0..12 {
        let kind = kinds[i % kinds.len()];
        let id = format!("T{i:02}");
        let base = match kind.base() {
            Some(b) => TypeBase::Scalar(b),
            None => TypeBase::Record(vec![
                Field {
                    name: "x".into(),
                    base: BaseKind::Real,
                    loc: Loc::default(),
                },
                Field {
                    name: "y".into(),
                    base: BaseKind::Real,
                    loc: Loc::default(),
                },
            ]),
        };
        decls.push(Decl::Type(DataType {
            id: id.clone(),
            base,
            loc: Loc::default(),
        }));
        types.push(TypeInfo { id, kind });
    }
    decls.push(Decl::States(StateDecl {
        states: STATES.iter().map(|s| s.to_string()).collect(),
        loc: Loc::default(),
    }));

    let mut elements: Vec<(String, ValueKind)> = Vec::new();
    for i in 0..config.elements {
        let t = &types[rng.gen_range(0..types.len())];
        let id = format!("e{i:04}");
        let (restriction, sample) = restriction_for(t.kind, &mut rng);
        let init = match rng.gen_range(0..4) {
            0 => Init::Allocated,
            1 if sample.is_some() => Init::Known(sample.clone().unwrap()),
            _ => Init::Unallocated,
        };
        decls.push(Decl::Data(DataElement {
            id: id.clone(),
            type_ref: t.id.clone(),
            restriction,
            init,
            loc: Loc::default(),
        }));
        elements.push((id, t.kind));
    }

    // Element i is owned by function i % functions, so every element is
    // referenced at least once.
    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); config.functions];
    if config.functions > 0 {
        for i in 0..elements.len() {
            owned[i % config.functions].push(i);
        }
    }
    for (fi, mine) in owned.into_iter().enumerate() {
        decls.push(Decl::Func(function(fi, mine, &elements, &mut rng)));
    }
    Specification { decls }
}

fn restriction_for(kind: ValueKind, rng: &mut ChaCha8Rng) -> (Restriction, Option<Literal>) {
    match kind {
        ValueKind::Int => {
            let lo = rng.gen_range(-50..50);
            let hi = lo + rng.gen_range(0..100);
            (
                Restriction::range(
                    Some(Bound::inclusive(Number::Int(lo))),
                    Some(Bound::inclusive(Number::Int(hi))),
                ),
                Some(Literal::Int(lo)),
            )
        }
        ValueKind::Real => {
            if rng.gen_bool(0.5) {
                (
                    Restriction::range(Some(Bound::inclusive(Number::Real(0.0))), None),
                    Some(Literal::Real(1.5)),
                )
            } else {
                (
                    Restriction::range(
                        Some(Bound::exclusive(Number::Real(0.0))),
                        Some(Bound::inclusive(Number::Real(100.0))),
                    ),
                    Some(Literal::Real(50.0)),
                )
            }
        }
        ValueKind::String => (
            Restriction::StringLength {
                min: 1,
                max: Some(rng.gen_range(4..32)),
            },
            Some(Literal::Str("abc".into())),
        ),
        ValueKind::Record => (Restriction::Unrestricted, None),
    }
}

fn compatible(target: ValueKind, source: ValueKind) -> bool {
    target == source || (target == ValueKind::Real && source == ValueKind::Int)
}

fn function(
    index: usize,
    mut mine: Vec<usize>,
    elements: &[(String, ValueKind)],
    rng: &mut ChaCha8Rng,
) -> FunctionSpec {
    let extra = rng.gen_range(0..3);
    for _ in 0..extra {
        let e = rng.gen_range(0..elements.len());
        if !mine.contains(&e) {
            mine.push(e);
        }
    }
    let mut params = Vec::new();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (n, &e) in mine.iter().enumerate() {
        let (id, kind) = &elements[e];
        // Records are only ever produced, never read.
        let direction = if *kind == ValueKind::Record || n % 3 == 2 {
            Direction::Out
        } else if n % 5 == 4 {
            Direction::InOut
        } else {
            Direction::In
        };
        if direction.is_input() {
            inputs.push((id.clone(), *kind));
        }
        if direction.is_output() {
            outputs.push((id.clone(), *kind));
        }
        params.push(ParamRef {
            element: id.clone(),
            direction,
            implicit: direction == Direction::Out && rng.gen_bool(0.5),
            loc: Loc::default(),
        });
    }
    let state_count = rng.gen_range(1..=3);
    let mut states: Vec<String> = STATES
        .choose_multiple(rng, state_count)
        .map(|s| s.to_string())
        .collect();
    states.sort();
    let changes_state = rng.gen_bool(0.25);
    if changes_state {
        params.push(ParamRef {
            element: STATE_ELEMENT.to_string(),
            direction: Direction::InOut,
            implicit: true,
            loc: Loc::default(),
        });
    }

    let effect_count = rng.gen_range(1..=3usize);
    let mut effects: Vec<Effect> = (0..effect_count)
        .map(|k| Effect {
            id: format!("f{index:03}_e{k}"),
            pre: Vec::new(),
            post: Vec::new(),
            body: EffectBody::Transform(Vec::new()),
            loc: Loc::default(),
        })
        .collect();
    // Every input is required known by the first effect; later effects
    // can rely on that.
    for (id, _) in &inputs {
        effects[0].pre.push(PreCondition {
            element: id.clone(),
            required: Status::Known,
            restriction: None,
            loc: Loc::default(),
        });
    }
    for (n, (target, tkind)) in outputs.iter().enumerate() {
        let k = n % effect_count;
        let source = inputs
            .iter()
            .filter(|(id, kind)| id != target && compatible(*tkind, *kind))
            .nth(n % 2)
            .or_else(|| {
                inputs
                    .iter()
                    .find(|(id, kind)| id != target && compatible(*tkind, *kind))
            });
        let stmt = source.map(|(src, _)| Statement::Assign {
            target: target.clone(),
            expr: Expr::Ref(src.clone()),
            loc: Loc::default(),
        });
        match stmt {
            Some(s) => push_stmt(&mut effects[k], s),
            None => effects[k].post.push(PostCondition {
                element: target.clone(),
                resulting: Status::Defined,
                loc: Loc::default(),
            }),
        }
    }
    if let Some((id, ValueKind::Int)) = inputs.iter().find(|(_, k)| *k == ValueKind::Int) {
        let k = rng.gen_range(0..effect_count);
        push_stmt(
            &mut effects[k],
            Statement::Require {
                left: Expr::Ref(id.clone()),
                op: RelOp::Ge,
                right: Expr::Lit(Literal::Int(0)),
                loc: Loc::default(),
            },
        );
    }
    if changes_state {
        let next = STATES[rng.gen_range(0..STATES.len())];
        push_stmt(
            &mut effects[effect_count - 1],
            Statement::Assign {
                target: STATE_ELEMENT.to_string(),
                expr: Expr::Lit(Literal::Str(next.to_string())),
                loc: Loc::default(),
            },
        );
    }
    for e in &mut effects {
        if e.body.statements().is_empty() {
            e.body = EffectBody::Abstract;
        }
    }

    FunctionSpec {
        id: format!("F{index:03}"),
        classification: Classification {
            category: CATEGORIES[rng.gen_range(0..CATEGORIES.len())].to_string(),
            group: GROUPS[rng.gen_range(0..GROUPS.len())].to_string(),
            level: LEVELS[rng.gen_range(0..LEVELS.len())].to_string(),
            states,
            loc: Loc::default(),
        },
        params,
        effects,
        loc: Loc::default(),
    }
}

fn push_stmt(effect: &mut Effect, stmt: Statement) {
    if let EffectBody::Transform(stmts) = &mut effect.body {
        stmts.push(stmt);
    }
}
