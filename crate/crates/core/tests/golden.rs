use std::path::PathBuf;

use adsmv_core::smv::{normalize, parse_smv_subset, print_smv};
use adsmv_core::text::parse_ad;
use adsmv_core::translate::translate;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn normalized_text(smv: &str) -> String {
    let m = parse_smv_subset(smv).unwrap_or_else(|e| panic!("{e:?}"));
    print_smv(&normalize(&m))
}

fn emitted(name: &str) -> String {
    let ad = parse_ad(&fixture(&format!("{name}.ad"))).unwrap();
    print_smv(&translate(&ad).unwrap())
}

fn assert_golden(name: &str) {
    let ours = normalized_text(&emitted(name));
    let golden = normalized_text(&fixture(&format!("{name}.golden.smv")));
    if ours != golden {
        for (i, (a, b)) in ours.lines().zip(golden.lines()).enumerate() {
            if a != b {
                panic!("first difference at line {}:\n  ours:   {a}\n  golden: {b}", i + 1);
            }
        }
        panic!("outputs differ in length: {} vs {} lines", ours.lines().count(), golden.lines().count());
    }
}

#[test]
fn controlled_loop_matches_golden() {
    assert_golden("controlledLoop");
}

#[test]
fn hire_employee_matches_golden() {
    assert_golden("hireEmployeeSimplified");
}

#[test]
fn emitted_modules_are_about_160_lines() {
    for name in ["controlledLoop", "hireEmployeeSimplified"] {
        let lines = emitted(name).lines().count();
        assert!((130..=190).contains(&lines), "{name}: {lines} lines");
    }
}

#[test]
fn printed_modules_parse_back() {
    for name in ["controlledLoop", "hireEmployeeSimplified"] {
        let ad = parse_ad(&fixture(&format!("{name}.ad"))).unwrap();
        let m = translate(&ad).unwrap();
        let back = parse_smv_subset(&print_smv(&m)).unwrap();
        assert_eq!(back, m.without_comments(), "{name}");
    }
}
