//! Set `UPDATE_GOLDEN=1` to rewrite the expected reports.

mod support;

use diffspace_cli::{run_source, FloatFormat};

#[test]
fn reports_match_golden_files() {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        for (stem, src) in support::scripts() {
            std::fs::write(support::golden_path(&stem), support::render(&src)).unwrap();
        }
    }
    let bad = support::golden_mismatches();
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn runs_are_deterministic() {
    for (stem, src) in support::scripts() {
        for seed in [0, 1, 99] {
            let a = run_source(&src, seed).unwrap().to_json_lines(FloatFormat::Hex);
            let b = run_source(&src, seed).unwrap().to_json_lines(FloatFormat::Hex);
            assert_eq!(a, b, "{stem} under seed {seed}");
        }
    }
}

#[test]
fn seeds_are_recorded() {
    let report = run_source("space S = circle; gen x = pi(1), y = pi(2); spec 3;", 42).unwrap();
    assert!(report.records.iter().all(|r| r.seed == 42));
}
