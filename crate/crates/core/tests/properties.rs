mod common;

use common::SUITES;

fn run(name: &str) {
    let (_, suite) = SUITES.iter().find(|(n, _)| *n == name).unwrap();
    if let Err(e) = suite() {
        panic!("{name}: {e}");
    }
}

#[test]
fn hull_idempotence() {
    run("hull idempotence");
}

#[test]
fn extreme_contains_exposed() {
    run("extreme contains exposed");
}

#[test]
fn jensen_audits() {
    run("Jensen audits");
}

#[test]
fn verdict_invariance() {
    run("verdict scale/translation invariance");
}

#[test]
fn necessity_rejection() {
    run("necessity rejection");
}

#[test]
fn epsilon_closeness() {
    run("epsilon-closeness scaling");
}
