//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion.

use std::fs;

use tfreg_cli::selftest::{run_suite, NAMES};
use tfreg_cli::table::Provenance;

const SEED: u64 = 20240917;

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_suite(SEED);
    let second = run_suite(SEED);
    let a = first.table(Provenance::new("selftest", String::new(), SEED)).write(&dir.path().join("a"), "selftest").unwrap();
    let b = second.table(Provenance::new("selftest", String::new(), SEED)).write(&dir.path().join("b"), "selftest").unwrap();
    let identical = fs::read(&a).unwrap() == fs::read(&b).unwrap();

    let mut failed = Vec::new();
    for v in &first.verdicts {
        println!("{}", v.line());
        if !v.pass {
            failed.push(v.criterion);
            for r in first.rows.iter().filter(|r| r.criterion == v.criterion && !r.pass) {
                println!("     {} {} = {:e} (threshold {:e})", r.case, r.metric, r.value, r.threshold);
            }
        }
    }
    println!("{} 10 {} (csv byte-identical across two runs)", if identical { "PASS" } else { "FAIL" }, NAMES[9]);
    if !identical {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
