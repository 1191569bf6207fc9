//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use adsmv_cli::{run, ExitStatus};
use adsmv_core::conformance::{check_equivalence, check_equivalence_with};
use adsmv_core::fsm::{InvariantKind, Machine, PathInvariants, UniqueTaken};
use adsmv_core::model::{ActivityDiagram, Value};
use adsmv_core::smv::{normalize, parse_smv_subset, print_smv};
use adsmv_core::text::{parse_ad, print_ad};
use adsmv_core::trace::Limits;
use adsmv_core::translate::{canonical_names, translate, translate_with, TransRule, TranslateOptions};

type Criterion = (&'static str, fn() -> Result<String, String>);

const FIXTURES: [&str; 2] = ["controlledLoop", "hireEmployeeSimplified"];

fn fixtures() -> PathBuf {
    std::env::var_os("ADSMV_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures"))
}

fn read(rel: &str) -> Result<String, String> {
    let path = fixtures().join(rel);
    std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(rel: &str) -> Result<ActivityDiagram, String> {
    parse_ad(&read(rel)?).map_err(|e| format!("{rel}: {e:?}"))
}

fn fixture(name: &str) -> Result<ActivityDiagram, String> {
    load(&format!("{name}.ad"))
}

fn cli(args: &[&str]) -> (ExitStatus, String) {
    let mut out = Vec::new();
    let status = run(std::iter::once("adsmv").chain(args.iter().copied()), &mut out, &mut Vec::new());
    (status, String::from_utf8_lossy(&out).into_owned())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

fn golden(name: &str) -> Result<String, String> {
    let path = fixtures().join(format!("{name}.ad"));
    let started = Instant::now();
    let (status, emitted) = cli(&["emit", "--normalized", path.to_str().unwrap()]);
    within(started.elapsed(), Duration::from_secs(1), "emit")?;
    ensure(status == ExitStatus::Ok, || format!("emit exited with {status:?}"))?;
    let expected = parse_smv_subset(&read(&format!("{name}.golden.smv"))?).map_err(|e| e.to_string())?;
    let expected = print_smv(&normalize(&expected));
    if emitted != expected {
        let line = emitted.lines().zip(expected.lines()).position(|(a, b)| a != b);
        return Err(format!("normalized output differs at line {}", line.map_or(0, |l| l + 1)));
    }
    Ok(format!("{} normalized lines equal", expected.lines().count()))
}

fn module_size() -> Result<String, String> {
    let mut sizes = Vec::new();
    for name in FIXTURES {
        let lines = print_smv(&translate(&fixture(name)?).map_err(|e| e.to_string())?).lines().count();
        ensure((130..=190).contains(&lines), || format!("{name}: {lines} lines"))?;
        sizes.push(format!("{name} {lines}"));
    }
    Ok(sizes.join(", "))
}

fn terminated_by_input(name: &str) -> Result<(usize, Vec<(String, usize)>), String> {
    let ad = fixture(name)?;
    let started = Instant::now();
    let report = check_equivalence(&ad, 12, Limits::default()).map_err(|e| e.to_string())?;
    within(started.elapsed(), Duration::from_secs(10), name)?;
    ensure(report.is_equal(), || format!("{name}: {:?} / {:?}", report.only_in_fsm, report.only_in_ad))?;
    let mut split = std::collections::BTreeMap::new();
    for t in report.common.iter().filter(|t| t.is_terminated()) {
        let key: Vec<String> = t.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        *split.entry(key.join(",")).or_insert(0) += 1;
    }
    Ok((report.stats.terminated_traces, split.into_iter().collect()))
}

fn equivalence() -> Result<String, String> {
    let (loop_total, loop_split) = terminated_by_input("controlledLoop")?;
    let expected = vec![("project=long".to_string(), 1), ("project=short".to_string(), 3)];
    ensure(loop_total == 4 && loop_split == expected, || format!("controlledLoop: {loop_total} {loop_split:?}"))?;
    let (hire_total, _) = terminated_by_input("hireEmployeeSimplified")?;
    ensure(hire_total == 2, || format!("hireEmployeeSimplified: {hire_total} terminated"))?;
    Ok("equal; 4 (1 long, 3 short) and 2 terminated traces".into())
}

fn machine(ad: &ActivityDiagram) -> Result<Machine, String> {
    Machine::new(&translate(ad).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn unique_taken() -> Result<String, String> {
    let mut steps = 0;
    for name in FIXTURES {
        match machine(&fixture(name)?)?.check_unique_taken(15).map_err(|e| e.to_string())? {
            UniqueTaken::Pass { steps: n } => steps += n,
            UniqueTaken::Counterexample(w) => return Err(format!("{name}: taken {:?}", w.taken)),
        }
    }
    Ok(format!("{steps} steps checked"))
}

fn path_invariants() -> Result<String, String> {
    let mut steps = 0;
    for name in FIXTURES {
        let ad = fixture(name)?;
        let inv = PathInvariants::for_diagram(&ad, &canonical_names(&ad).map_err(|e| e.to_string())?);
        let report = machine(&ad)?.check_path_invariants(15, &inv).map_err(|e| e.to_string())?;
        for kind in [InvariantKind::InputConstancy, InvariantKind::NopAbsorption] {
            ensure(report.holds(kind), || format!("{name}: {kind:?} violated"))?;
        }
        steps += report.steps;
    }
    Ok(format!("{steps} steps checked"))
}

fn round_trips() -> Result<String, String> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures().join("corpus"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".ad"))
        .map(|n| format!("corpus/{n}"))
        .collect();
    names.extend(FIXTURES.iter().map(|n| format!("{n}.ad")));
    ensure(names.len() >= 10, || format!("only {} diagrams", names.len()))?;
    for rel in &names {
        let ad = load(rel)?;
        ensure(parse_ad(&print_ad(&ad)).as_ref() == Ok(&ad), || format!("{rel} does not round trip"))?;
    }
    for name in FIXTURES {
        let m = translate(&fixture(name)?).map_err(|e| e.to_string())?;
        let back = parse_smv_subset(&print_smv(&m)).map_err(|e| format!("{name}: {e}"))?;
        ensure(back == m.without_comments(), || format!("{name} module does not round trip"))?;
    }
    Ok(format!("{} diagrams, 2 modules", names.len()))
}

fn rule_is_needed(rule: TransRule, fixtures: &[ActivityDiagram]) -> bool {
    let opts = TranslateOptions::omitting(rule);
    fixtures.iter().any(|ad| {
        let equal = check_equivalence_with(ad, 12, Limits::default(), &opts).map(|r| r.is_equal());
        let unique = translate_with(ad, &opts)
            .map_err(|e| e.to_string())
            .and_then(|m| Machine::new(&m).map_err(|e| e.to_string()))
            .and_then(|m| m.check_unique_taken(15).map_err(|e| e.to_string()))
            .map(|u| matches!(u, UniqueTaken::Pass { .. }));
        equal != Ok(true) || unique != Ok(true)
    })
}

fn mutation() -> Result<String, String> {
    let fixtures = FIXTURES.iter().map(|n| fixture(n)).collect::<Result<Vec<_>, _>>()?;
    let unnoticed: Vec<TransRule> = TransRule::ALL.into_iter().filter(|r| !rule_is_needed(*r, &fixtures)).collect();
    ensure(unnoticed.is_empty(), || format!("omitting {unnoticed:?} goes unnoticed"))?;
    Ok(format!("{} of {} omissions detected", TransRule::ALL.len(), TransRule::ALL.len()))
}

fn deadlocks() -> Result<String, String> {
    for name in FIXTURES {
        let found = machine(&fixture(name)?)?.find_deadlocks(15).map_err(|e| e.to_string())?;
        ensure(found.is_empty(), || format!("{name}: {} deadlocks", found.len()))?;
    }
    let m = machine(&load("corpus/guardIncomplete.ad")?)?;
    let found = m.find_deadlocks(15).map_err(|e| e.to_string())?;
    ensure(found.len() == 1, || format!("guard-incomplete variant: {} deadlocks", found.len()))?;
    let project = m.value(&found[0].state, "project");
    ensure(project == Some(Value::sym("long")), || format!("deadlock with project={project:?}"))?;
    Ok(format!("one witness of {} actions, fixtures clean", found[0].actions.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("controlledLoop golden translation", || golden("controlledLoop")),
        ("hireEmployeeSimplified golden translation", || golden("hireEmployeeSimplified")),
        ("module size about 160 lines", module_size),
        ("trace equivalence at depth 12", equivalence),
        ("unique taken edge at depth 15", unique_taken),
        ("input constancy and nop absorption at depth 15", path_invariants),
        ("round trips", round_trips),
        ("mutation sensitivity of the TRANS blocks", mutation),
        ("deadlock detection", deadlocks),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = check();
        let ms = started.elapsed().as_millis();
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({ms} ms)", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
