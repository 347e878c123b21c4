//! End-to-end acceptance: one test per suite criterion, each asserting the
//! criterion passes inside its time budget and printing its report line.

use folkit::suite::{run_suite, RigMode};

const SEED: u64 = 42;

fn check(name: &str, budget_ms: u128) {
    let report = run_suite(SEED, RigMode::None, Some(name));
    assert_eq!(
        report.criteria.len(),
        1,
        "filter {name} must select exactly one criterion"
    );
    let c = &report.criteria[0];
    println!(
        "criterion {:2} {} {}: {} ({} ms, budget {} ms)",
        c.index,
        if c.passed { "PASS" } else { "FAIL" },
        c.name,
        c.details,
        c.millis,
        budget_ms,
    );
    assert!(c.passed, "criterion {}: {}", c.index, c.details);
    assert!(
        c.millis < budget_ms,
        "criterion {} took {} ms, budget {} ms",
        c.index,
        c.millis,
        budget_ms
    );
}

#[test]
fn truth_conditions_audit_is_exact_and_flip_sensitive() {
    check("tarski-truth-conditions", 30_000);
}

#[test]
fn finite_evaluator_matches_expansion_oracle() {
    check("evaluator-oracle-agreement", 10_000);
}

#[test]
fn diagonal_fixed_point_and_liar_laws_hold() {
    check("diagonal-liar-laws", 60_000);
}

#[test]
fn presburger_decision_is_sound_on_bounded_sentences() {
    check("presburger-soundness", 60_000);
}

#[test]
fn squares_defeat_periodicity_and_evens_have_period_two() {
    check("presburger-periodicity", 10_000);
}

#[test]
fn definability_matches_automorphism_enumeration() {
    check("definability-automorphisms", 120_000);
}

#[test]
fn back_and_forth_matches_brute_isomorphism_search() {
    check("back-and-forth-isomorphism", 60_000);
}

#[test]
fn henkin_term_model_agrees_with_decision_procedure() {
    check("henkin-term-model", 60_000);
}

#[test]
fn truth_hierarchy_is_coherent_across_levels() {
    check("hierarchy-coherence", 60_000);
}

#[test]
fn forcing_meets_dense_requirements_deterministically() {
    check("forcing-construction", 5_000);
}
