use std::path::PathBuf;

use proptest::prelude::*;

use svsp_core::query::*;
use svsp_core::*;

fn mini_gks() -> Specification {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini_gks.svsp");
    parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ids(spec: &Specification, q: &str) -> Vec<String> {
    evaluate(spec, &Query::parse(q).unwrap()).unwrap().ids()
}

#[test]
fn closed_state_admits_only_open_gks() {
    assert_eq!(
        ids(&mini_gks(), "kind=function & class.states~GKCL"),
        ["OPEN_GKS"]
    );
}

#[test]
fn unused_elements() {
    let spec = parse_spec(
        "type N int\ndata used : N\ndata scratch : N\n\
         func F { class category = c group = g level = l states = [] param used in }\n",
    )
    .unwrap();
    assert_eq!(ids(&spec, "kind=element & unused"), ["scratch"]);
    assert!(ids(&mini_gks(), "kind=element & unused").is_empty());
    assert!(ids(&mini_gks(), "kind=type & unused").is_empty());
}

#[test]
fn references_and_category_against_a_naive_scan() {
    let spec = mini_gks();
    let mut expected = Vec::new();
    for f in spec.functions() {
        let refs = f.params.iter().any(|p| p.element == "line_width");
        if refs && f.classification.category == "attribute" {
            expected.push(f.id.clone());
        }
    }
    assert_eq!(expected, ["SET_LINE_WIDTH"]);
    assert_eq!(
        ids(&spec, "refs=line_width & class.category=attribute"),
        expected
    );
    assert_eq!(
        ids(&spec, "refs=line_width"),
        ["SET_LINE_WIDTH", "POLYLINE"]
    );
}

#[test]
fn no_filters_lists_everything_in_order() {
    let spec = mini_gks();
    let all: Vec<String> = spec.functions().map(|f| f.id.clone()).collect();
    assert_eq!(ids(&spec, "kind=function"), all);
    assert_eq!(all.len(), 11);
    assert_eq!(ids(&spec, "kind=element").len(), 14);
    assert_eq!(ids(&spec, "kind=type").len(), 6);
}

#[test]
fn projections() {
    let spec = mini_gks();
    let t = evaluate(
        &spec,
        &Query::parse("kind=element & name=*width & select=id,type,restriction").unwrap(),
    )
    .unwrap();
    assert_eq!(
        t.to_json(),
        serde_json::json!([
            {"id": "line_width", "type": "WidthScale", "restriction": "value >= 0.0"}
        ])
    );
    let t = evaluate(
        &spec,
        &Query::parse("name=POLYLINE & select=id,class.states,param-count,effect-count").unwrap(),
    )
    .unwrap();
    assert_eq!(
        t.to_text(),
        "id        class.states  param-count  effect-count\nPOLYLINE  WSAC,SGOP     3            1\n"
    );
    let t = evaluate(
        &spec,
        &Query::parse("kind=type & name=PointList & select=type").unwrap(),
    )
    .unwrap();
    assert_eq!(t.rows[0][0], "record { x: real, y: real }");
    let t = evaluate(
        &spec,
        &Query::parse("kind=element & type=Count & select=id").unwrap(),
    )
    .unwrap();
    assert_eq!(t.ids(), ["ws_type", "npts"]);
}

#[test]
fn xref_of_state_lists_every_state_changer() {
    let spec = mini_gks();
    let x = xref(&spec, STATE_ELEMENT).unwrap();
    let changers: Vec<String> = spec
        .functions()
        .filter(|f| f.effects.iter().any(|e| e.assigns_element(STATE_ELEMENT)))
        .map(|f| f.id.clone())
        .collect();
    let refs: Vec<String> = x.functions.iter().map(|r| r.function.clone()).collect();
    assert_eq!(refs, changers);
    assert!(x.functions.iter().all(|r| r.implicit));
    assert_eq!(x.type_ref, "string");
}

#[test]
fn xref_details() {
    let spec = mini_gks();
    let x = xref(&spec, "ws_id").unwrap();
    assert_eq!(x.restriction, "1 <= value <= 16");
    let uses: Vec<(&str, bool, bool)> = x
        .effects
        .iter()
        .map(|e| (e.effect.as_str(), e.reads, e.assigns))
        .collect();
    assert_eq!(
        uses,
        [
            ("open_workstation", true, false),
            ("close_ws", true, false),
            ("activate_ws", true, false),
            ("deactivate_ws", true, false),
        ]
    );
    assert_eq!(
        xref(&spec, "nothing"),
        Err(QueryError::UnknownElement("nothing".into()))
    );

    let spec = parse_spec("type N int\ndata scratch : N restrict value >= 0\n").unwrap();
    let x = xref(&spec, "scratch").unwrap();
    assert!(x.functions.is_empty());
    assert_eq!(
        (x.type_ref.as_str(), x.restriction.as_str()),
        ("N", "value >= 0")
    );
    assert!(xref(&spec, STATE_ELEMENT).is_err());
}

#[test]
fn references_agree_with_xref() {
    let spec = mini_gks();
    for e in spec.elements() {
        let from_query = ids(&spec, &format!("refs={}", e.id));
        let from_xref: Vec<String> = xref(&spec, &e.id)
            .unwrap()
            .functions
            .into_iter()
            .map(|r| r.function)
            .collect();
        assert_eq!(from_query, from_xref, "{}", e.id);
    }
}

const TERMS: [&str; 8] = [
    "class.states~GKOP",
    "class.states~WSAC",
    "refs=line_width",
    "refs=$state",
    "name=*_*",
    "name=SET_*",
    "class.group=output",
    "type=WidthScale",
];

proptest! {
    #[test]
    fn filter_order_does_not_matter(
        picked in prop::sample::subsequence(TERMS.to_vec(), 0..=TERMS.len()),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let spec = mini_gks();
        let mut shuffled = picked.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = ids(&spec, &picked.join(" & "));
        let b = ids(&spec, &shuffled.join(" & "));
        prop_assert_eq!(&a, &b);
        // Conjunction equals the intersection of single-term results.
        let mut expected: Vec<String> = spec.functions().map(|f| f.id.clone()).collect();
        for t in &picked {
            let one = ids(&spec, t);
            expected.retain(|id| one.contains(id));
        }
        prop_assert_eq!(a, expected);
    }
}
