//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails if
//! any criterion failed. Time limits are wall-clock and fixed below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use svsp_core::dsl::parse_spec_bytes;
use svsp_core::editor::{Change, EditError, EditSession};
use svsp_core::query::{evaluate, Query};
use svsp_core::restriction::{Bound, Number, Restriction};
use svsp_core::scenario::{new_session, run_script, Binding, BindingValue, Store};
use svsp_core::symbols::SymbolTable;
use svsp_core::synth::{generate, SynthConfig};
use svsp_core::{
    check_spec, format_spec, parse_spec, BaseKind, Code, Literal, Specification, Status,
};

const CHECK_LIMIT: Duration = Duration::from_millis(100);
const SCALE_LIMIT: Duration = Duration::from_secs(2);
const QUERY_LIMIT: Duration = Duration::from_millis(100);
const ORACLE_LIMIT: Duration = Duration::from_secs(10);
const FUZZ_CALLS: usize = 10_000;
const MUTANTS: usize = 1_000;
const EDITOR_OPS: usize = 50;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap()
}

fn mini_gks() -> Specification {
    parse_spec(&read("mini_gks.svsp")).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn svsp(args: &[&str]) -> (Option<i32>, String, Duration) {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_svsp"))
        .args(args)
        .output()
        .unwrap();
    let took = start.elapsed();
    (
        o.status.code(),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        took,
    )
}

fn fixture_soundness() -> Verdict {
    let spec = mini_gks();
    let counts = (
        spec.functions().count(),
        spec.elements().count(),
        spec.states().len(),
    );
    ensure(counts == (11, 14, 5), || {
        format!("fixture has {counts:?} functions/elements/states")
    })?;
    let path = fixtures().join("mini_gks.svsp");
    let path = path.to_string_lossy();
    // The first spawn pays for page-cache misses; judge the median of five.
    let mut times = Vec::new();
    for _ in 0..5 {
        let (code, out, took) = svsp(&["check", &path]);
        ensure(code == Some(0) && out.is_empty(), || {
            format!("exit {code:?}, output {out:?}")
        })?;
        times.push(took);
    }
    times.sort();
    let median = times[2];
    ensure(median < CHECK_LIMIT, || {
        format!("median check took {median:?}")
    })?;
    Ok(format!("exit 0, no diagnostics, median {median:?}"))
}

fn defect_matrix() -> Verdict {
    let dir = fixtures().join("defects");
    let mut seen = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "svsp"))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let golden = std::fs::read_to_string(path.with_extension("expected")).unwrap();
        let (code, out, _) = svsp(&["check", &path.to_string_lossy()]);
        ensure(code == Some(1), || format!("{name}: exit {code:?}"))?;
        ensure(out == golden, || {
            format!("{name}: output differs from golden:\n{out}")
        })?;
        let (_, json, _) = svsp(&["check", &path.to_string_lossy(), "--format", "json"]);
        let diags: Value = serde_json::from_str(&json).unwrap();
        let errors: Vec<&Value> = diags
            .as_array()
            .unwrap()
            .iter()
            .filter(|d| d["severity"] == "error")
            .collect();
        let want = name[..4].to_uppercase();
        ensure(
            errors.len() == 1 && errors[0]["code"] == want.as_str(),
            || format!("{name}: errors {errors:?}"),
        )?;
        seen.push(want);
    }
    let all: Vec<String> = (1..=8).map(|i| format!("E00{i}")).collect();
    ensure(seen == all, || format!("defects cover {seen:?}"))?;
    Ok("8 defects, one expected error each, goldens match".into())
}

fn scale() -> Verdict {
    let text = format_spec(&generate(SynthConfig::default()));
    let start = Instant::now();
    let spec =
        parse_spec(&text).map_err(|d| format!("generated spec does not parse: {:?}", d[0]))?;
    let report = check_spec(&spec);
    let took = start.elapsed();
    let counts = (spec.functions().count(), spec.elements().count());
    ensure(counts == (200, 1000), || format!("generated {counts:?}"))?;
    ensure(report.diagnostics.is_empty(), || {
        format!("{} diagnostics", report.diagnostics.len())
    })?;
    ensure(took < SCALE_LIMIT, || format!("parse+check took {took:?}"))?;
    let mut slowest = Duration::ZERO;
    for q in [
        "kind=function",
        "class.states~S3 & class.category=output",
        "refs=e0500 & name=F*",
        "kind=element & unused",
        "kind=element & type=T01 & select=id,restriction",
        "name=F01*",
    ] {
        let query = Query::parse(q).unwrap();
        let start = Instant::now();
        let table = evaluate(&spec, &query).map_err(|e| format!("{q}: {e}"))?;
        let took = start.elapsed();
        ensure(took < QUERY_LIMIT, || format!("query `{q}` took {took:?}"))?;
        ensure(q != "kind=function" || table.ids().len() == 200, || {
            "kind=function misses rows".into()
        })?;
        slowest = slowest.max(took);
    }
    Ok(format!("parse+check {took:?}, slowest query {slowest:?}"))
}

fn containment_oracle() -> Verdict {
    let start = Instant::now();
    let mut bounds = vec![None];
    for v in -20i64..=20 {
        bounds.push(Some((v, true)));
        bounds.push(Some((v, false)));
    }
    let members = |lo: Option<(i64, bool)>, hi: Option<(i64, bool)>| -> u128 {
        (-50i64..=50).enumerate().fold(0, |acc, (i, v)| {
            let lo_ok = lo.is_none_or(|(b, incl)| if incl { v >= b } else { v > b });
            let hi_ok = hi.is_none_or(|(b, incl)| if incl { v <= b } else { v < b });
            if lo_ok && hi_ok {
                acc | 1 << i
            } else {
                acc
            }
        })
    };
    let bound = |b: Option<(i64, bool)>| {
        b.map(|(v, inclusive)| Bound {
            value: Number::Int(v),
            inclusive,
        })
    };
    let mut all = vec![(Restriction::Unrestricted, members(None, None))];
    for &lo in &bounds {
        for &hi in &bounds {
            all.push((Restriction::range(bound(lo), bound(hi)), members(lo, hi)));
        }
    }
    let mut pairs = 0u64;
    for (outer, ob) in &all {
        for (inner, ib) in &all {
            let got = outer
                .contains(inner, BaseKind::Int)
                .map_err(|e| e.to_string())?;
            ensure(got == (ib & !ob == 0), || {
                format!("{outer} contains {inner}: {got}")
            })?;
            pairs += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < ORACLE_LIMIT, || format!("oracle took {took:?}"))?;
    Ok(format!("{pairs} pairs agree, {took:?}"))
}

fn scenario_golden() -> Verdict {
    let spec = mini_gks();
    let run = run_script(&spec, &read("scripts/happy.svs")).map_err(|e| e.to_string())?;
    ensure(run.passed() == 5 && run.failed() == 0, || run.summary())?;
    let store = serde_json::to_string_pretty(&run.store).unwrap() + "\n";
    ensure(store == read("golden/happy_store.json"), || {
        "final store differs from golden".into()
    })?;
    let gate = run_script(&spec, &read("scripts/gate.svs")).map_err(|e| e.to_string())?;
    ensure(gate.passed() == 1 && gate.all_passed(), || {
        format!("gate: {}", gate.summary())
    })?;
    Ok("happy 5/5 with byte-identical store, gate passes".into())
}

fn random_literal(rng: &mut ChaCha8Rng) -> BindingValue {
    match rng.gen_range(0..12) {
        0 => BindingValue::Defined,
        1..=3 => BindingValue::Value(Literal::Int(rng.gen_range(-5..40))),
        4..=6 => BindingValue::Value(Literal::Real(
            *[-1.0, -0.0, 0.0, 0.25, 2.5, 99.0, 1e300]
                .choose(rng)
                .unwrap(),
        )),
        7 => BindingValue::Value(Literal::Int(*[i64::MIN, i64::MAX, 0].choose(rng).unwrap())),
        _ => BindingValue::Value(Literal::Str(
            [
                "",
                "errlog",
                "station1",
                "GKOP",
                "a_rather_long_connection_name",
            ]
            .choose(rng)
            .unwrap()
            .to_string(),
        )),
    }
}

fn store_violation(table: &SymbolTable, store: &Store) -> Option<String> {
    for (id, cell) in store.iter() {
        if cell.value.is_some() != (cell.status == Status::Known) {
            return Some(format!(
                "{id}: status {:?} with value {:?}",
                cell.status, cell.value
            ));
        }
        if let Some(v) = &cell.value {
            let info = table.element(id)?;
            let kind = info.base()?;
            if v.kind() != kind || !info.restriction.admits(kind, v).unwrap_or(false) {
                return Some(format!("{id} = {v} violates {}", info.restriction));
            }
        }
    }
    None
}

fn atomicity_fuzz() -> Verdict {
    let spec = mini_gks();
    let table = SymbolTable::new(&spec);
    let names: Vec<String> = spec.functions().map(|f| f.id.clone()).collect();
    let mut session = new_session(&spec).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let (mut ok, mut rejected) = (0usize, 0usize);
    for i in 0..FUZZ_CALLS {
        if rng.gen_ratio(1, 200) {
            session.reset();
        }
        // Prefer functions the current state admits so runs get deep.
        let state = session.store().value(svsp_core::STATE_ELEMENT).cloned();
        let allowed: Vec<&String> = names
            .iter()
            .filter(|n| {
                let f = spec.function(n).unwrap();
                matches!(&state, Some(Literal::Str(s)) if f.classification.states.iter().any(|x| x == s))
            })
            .collect();
        let name = match rng.gen_range(0..10) {
            0..=5 if !allowed.is_empty() => allowed.choose(&mut rng).unwrap().to_string(),
            9 => "NO_SUCH_FUNCTION".to_string(),
            _ => names.choose(&mut rng).unwrap().clone(),
        };
        let mut bindings = Binding::new();
        if let Some(f) = spec.function(&name) {
            for p in f.params.iter().filter(|p| p.is_bindable()) {
                if !rng.gen_ratio(1, 15) {
                    bindings.insert(p.element.clone(), random_literal(&mut rng));
                }
            }
        }
        if rng.gen_ratio(1, 25) {
            bindings.insert("char_height".into(), random_literal(&mut rng));
        }
        let before = serde_json::to_string(session.store()).unwrap();
        let rec = catch_unwind(AssertUnwindSafe(|| session.call_function(&name, &bindings)))
            .map_err(|_| format!("call {i} ({name} {bindings:?}) panicked"))?;
        if rec.outcome.is_ok() {
            ok += 1;
        } else {
            rejected += 1;
            let after = serde_json::to_string(session.store()).unwrap();
            ensure(before == after, || {
                format!("rejected call {i} ({name}) changed the store")
            })?;
        }
        if let Some(v) = store_violation(&table, session.store()) {
            return Err(format!("after call {i} ({name}): {v}"));
        }
    }
    ensure(ok > 500 && rejected > 500, || {
        format!("{ok} ok, {rejected} rejected: fuzz too shallow")
    })?;
    Ok(format!("{FUZZ_CALLS} calls, {ok} ok, {rejected} rejected"))
}

fn corpus() -> Vec<(PathBuf, String)> {
    fn walk(dir: &Path, out: &mut Vec<(PathBuf, String)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else if p.extension().is_some_and(|x| x == "svsp") {
                out.push((p.clone(), std::fs::read_to_string(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(&fixtures(), &mut out);
    out.sort();
    out
}

fn round_trip() -> Verdict {
    let files = corpus();
    for (path, text) in &files {
        let first = parse_spec(text).map_err(|d| format!("{}: {}", path.display(), d[0]))?;
        let printed = format_spec(&first);
        let second =
            parse_spec(&printed).map_err(|d| format!("{}: reparse {}", path.display(), d[0]))?;
        ensure(
            first.without_locations() == second.without_locations(),
            || format!("{}: structure changed", path.display()),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let noise = b"{}[]():=,#\"<>!-./ \n0123456789abc_";
    let mut rejected = 0;
    for i in 0..MUTANTS {
        let mut bytes = files[i % files.len()].1.clone().into_bytes();
        for _ in 0..rng.gen_range(1..=6) {
            let at = rng.gen_range(0..bytes.len());
            match rng.gen_range(0..3) {
                0 => bytes[at] = rng.gen(),
                1 => {
                    bytes.remove(at);
                }
                _ => bytes.insert(at, *noise.choose(&mut rng).unwrap()),
            }
        }
        match catch_unwind(|| parse_spec_bytes(&bytes)) {
            Err(_) => return Err(format!("parser aborted on mutant {i}")),
            Ok(Err(diags)) => {
                ensure(
                    !diags.is_empty() && diags.iter().all(|d| d.code == Code::E000),
                    || format!("mutant {i}: bad diagnostics"),
                )?;
                rejected += 1;
            }
            Ok(Ok(_)) => {}
        }
    }
    Ok(format!(
        "{} files round-trip, {MUTANTS} mutants survived ({rejected} rejected)",
        files.len()
    ))
}

const SPACING: &str =
    "func SET_CHAR_SPACING { class category = attribute group = text level = L0a states = [GKOP]\n\
    param ch in param char_height inout implicit\n\
    effect set_spacing { pre ch known char_height := ch } }";

fn editor_safety() -> Verdict {
    let pool: Vec<Change> = [
        json!({"op": "add", "kind": "type", "decl": "type Angle real"}),
        json!({"op": "add", "kind": "element", "decl": "data angle : Angle restrict value >= 0.0"}),
        json!({"op": "add", "kind": "function", "decl": SPACING}),
        json!({"op": "add", "kind": "element", "decl": "data lw : WidthScale"}),
        json!({"op": "add", "kind": "function", "decl": "func OPEN_GKS { class category = control group = gks level = L0a states = [GKCL] }"}),
        json!({"op": "delete", "kind": "element", "id": "line_width"}),
        json!({"op": "delete", "kind": "type", "id": "NoSuchType"}),
        json!({"op": "delete", "kind": "element", "id": "angle"}),
        json!({"op": "delete", "kind": "function", "id": "SET_CHAR_SPACING"}),
        json!({"op": "delete", "kind": "type", "id": "Angle"}),
        json!({"op": "replace", "kind": "element", "id": "npts", "decl": "data npts : Count restrict 5 <= value <= 4"}),
    ]
    .iter()
    .map(|v| Change::from_json(v).unwrap())
    .collect();

    // Rounds of five operations: two proposals, a commit of each (the second
    // is stale whenever the first lands), then a commit or abandon of a
    // fresh proposal.
    let mut s = EditSession::new(mini_gks()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let (mut commits, mut stale, mut refused, mut abandoned) = (0, 0, 0, 0);
    for step in 0..EDITOR_OPS {
        let before = format_spec(s.spec());
        let version = s.version();
        let result = match step % 5 {
            0 | 1 | 4 => {
                let p = s.propose(pool.choose(&mut rng).unwrap().clone());
                let id = p.id.clone();
                if step % 5 == 4 {
                    if rng.gen_bool(0.5) {
                        abandoned += 1;
                        s.abandon(&id)
                    } else {
                        s.commit(&id).map(|_| ())
                    }
                } else {
                    Ok(())
                }
            }
            n => {
                let id = format!("p{}", step / 5 * 3 + n - 1);
                s.commit(&id).map(|_| ())
            }
        };
        match result {
            Ok(()) if s.version() > version => commits += 1,
            Ok(()) => ensure(format_spec(s.spec()) == before, || {
                format!("op {step}: specification changed without a commit")
            })?,
            Err(e) => {
                match e {
                    EditError::StaleProposal(_) => stale += 1,
                    EditError::NotConsistent(_) => refused += 1,
                    other => return Err(format!("op {step}: {other}")),
                }
                ensure(format_spec(s.spec()) == before, || {
                    format!("op {step}: failed commit changed the specification")
                })?;
            }
        }
        ensure(check_spec(s.spec()).consistent, || {
            format!("op {step}: workspace inconsistent")
        })?;
    }
    ensure(commits > 0 && stale > 0 && refused > 0, || {
        format!("{commits} commits, {stale} stale, {refused} refused: script too tame")
    })?;

    let standalone = Change::from_json(
        &json!({"op": "add", "kind": "element", "decl": "data spare_width : WidthScale"}),
    )
    .unwrap();
    for add in [&pool[0], &pool[2], &standalone] {
        let mut s = EditSession::new(mini_gks()).unwrap();
        let original = format_spec(s.spec());
        let id = s.propose(add.clone()).id.clone();
        s.commit(&id)
            .map_err(|e| format!("add {}: {e}", add.target()))?;
        let id = s
            .propose(Change::Delete {
                kind: add.kind(),
                id: add.target().to_string(),
            })
            .id
            .clone();
        s.commit(&id)
            .map_err(|e| format!("delete {}: {e}", add.target()))?;
        ensure(format_spec(s.spec()) == original, || {
            format!("add+delete {} is not identity", add.target())
        })?;
    }
    Ok(format!(
        "{EDITOR_OPS} ops: {commits} commits, {abandoned} abandoned, {stale} stale and {refused} inconsistent refused; add+delete identity"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("fixture soundness", fixture_soundness),
        ("seeded-defect matrix", defect_matrix),
        ("scale 200/1000", scale),
        ("restriction containment oracle", containment_oracle),
        ("scenario golden trace", scenario_golden),
        ("atomicity fuzz", atomicity_fuzz),
        ("round-trip and parser fuzz", round_trip),
        ("editor safety", editor_safety),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let verdict = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
