#![allow(dead_code)]

use std::path::{Path, PathBuf};

use adsmv_core::model::ActivityDiagram;
use adsmv_core::text::parse_ad;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> ActivityDiagram {
    let dir = fixtures_dir();
    let path = [dir.join(format!("{name}.ad")), dir.join("corpus").join(format!("{name}.ad"))]
        .into_iter()
        .find(|p| p.exists())
        .unwrap_or_else(|| panic!("no fixture {name}"));
    parse_ad(&read(&path)).unwrap_or_else(|e| panic!("{name}: {e:?}"))
}

/// Every shipped diagram, the two main fixtures first.
pub fn corpus() -> Vec<(String, ActivityDiagram)> {
    let mut names = vec!["controlledLoop".to_string(), "hireEmployeeSimplified".to_string()];
    let mut rest: Vec<String> = std::fs::read_dir(fixtures_dir().join("corpus"))
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "ad").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    rest.sort();
    names.extend(rest);
    names.into_iter().map(|n| (n.clone(), load(&n))).collect()
}
