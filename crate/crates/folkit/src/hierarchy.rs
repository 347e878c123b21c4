//! The iterated truth hierarchy: leveled languages, evaluation that
//! respects level discipline, ascent of a sentence to the next level's
//! truth predicate, and coherence checks between a sentence's direct
//! verdict and what a higher level's predicate says of its code.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::coding::Coder;
use crate::semantics::{
    eval_nat, tarski_demonstrate, Budget, NatAssignment, SemanticsError, TarskiReport, TruthValue3,
};
use crate::syntax::{numeral, Formula, Signature};

/// The level-`k` language: arithmetic plus truth predicates `Tr0 ..
/// Tr(k-1)`. Symbols are appended as the level grows, so formula codes
/// are stable across levels.
pub fn language_level(k: usize) -> Signature {
    Signature::with_truth_levels(k)
}

/// The highest truth-predicate level mentioned in the formula, if any.
pub fn max_truth_level(phi: &Formula) -> Option<usize> {
    match phi {
        Formula::Eq(..) => None,
        Formula::Rel(r, _) => Signature::truth_predicate_level(r),
        Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => max_truth_level(f),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            max_truth_level(a).max(max_truth_level(b))
        }
    }
}

/// Checks that every truth predicate in the formula lives strictly below
/// level `k`.
pub fn check_level(phi: &Formula, k: usize) -> Result<(), SemanticsError> {
    match max_truth_level(phi) {
        Some(j) if j >= k => Err(SemanticsError::LevelViolation { found: j, max: k }),
        _ => Ok(()),
    }
}

/// Evaluates a formula of the level-`k` language over the naturals. The
/// level discipline is checked up front: a `Trj` with `j >= k` is an
/// error, not a verdict.
pub fn eval_level(
    phi: &Formula,
    asg: &NatAssignment,
    k: usize,
    budget: Budget,
) -> Result<TruthValue3, SemanticsError> {
    check_level(phi, k)?;
    eval_nat(phi, asg, &language_level(k), budget)
}

/// The atom `Trj(numeral(code))`.
pub fn truth_atom(j: usize, code: &BigUint) -> Formula {
    Formula::Rel(format!("Tr{j}"), vec![numeral(code)])
}

/// Lifts a level-`j` sentence to the level-`j+1` claim that its code
/// satisfies `Trj`. Each ascent roughly multiplies the code's bit length
/// by sixteen, so chains should start from sentences with compact
/// numerals.
pub fn ascend(phi: &Formula, j: usize) -> Result<Formula, SemanticsError> {
    check_level(phi, j)?;
    let code = Coder::new(&language_level(j)).encode(phi)?;
    Ok(truth_atom(j, &code))
}

/// The chain `sigma, Tr_j(code(sigma)), Tr_{j+1}(code(...)), ...` from
/// level `j` up to level `top` inclusive; entry `i` is a sentence of
/// `language_level(j + i)`.
pub fn truth_chain(phi: &Formula, j: usize, top: usize) -> Result<Vec<Formula>, SemanticsError> {
    let mut chain = vec![phi.clone()];
    for level in j..top {
        let next = ascend(chain.last().unwrap(), level)?;
        chain.push(next);
    }
    Ok(chain)
}

/// A determined conflict between a sentence's direct verdict and the
/// truth predicate's verdict about its code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub sentence: String,
    pub direct: TruthValue3,
    pub through_predicate: TruthValue3,
}

/// Outcome of a level-coherence check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub lower_level: usize,
    pub upper_level: usize,
    pub checked: usize,
    pub agreements: usize,
    /// Pairs where at least one side stayed unknown under the budget.
    pub undetermined: usize,
    pub disagreements: Vec<Disagreement>,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// For each level-`j` sentence in the corpus, compares its direct verdict
/// at level `j` with the verdict of `Trj(code)` at level `k > j`. Verdicts
/// must agree whenever both are determined; the predicate route consumes
/// one extra unit of depth, so it may degrade to unknown.
pub fn coherence_check(
    j: usize,
    k: usize,
    corpus: &[Formula],
    budget: Budget,
) -> Result<CoherenceReport, SemanticsError> {
    if j >= k {
        return Err(SemanticsError::LevelViolation { found: j, max: k });
    }
    let empty = NatAssignment::new();
    let mut report = CoherenceReport {
        lower_level: j,
        upper_level: k,
        checked: 0,
        agreements: 0,
        undetermined: 0,
        disagreements: Vec::new(),
    };
    for sigma in corpus {
        let direct = eval_level(sigma, &empty, j, budget)?;
        let lifted = ascend(sigma, j)?;
        let through = eval_level(&lifted, &empty, k, budget)?;
        report.checked += 1;
        match (direct.determined(), through.determined()) {
            (Some(a), Some(b)) if a == b => report.agreements += 1,
            (Some(_), Some(_)) => report.disagreements.push(Disagreement {
                sentence: sigma.to_string(),
                direct,
                through_predicate: through,
            }),
            _ => report.undetermined += 1,
        }
    }
    Ok(report)
}

/// Runs the undefinability demonstration against the level-`k` language's
/// own strongest predicate: the candidate `Tr(k-1)(x)` correctly decides
/// level-`k-1` sentences (see [`coherence_check`]) yet its liar sentence,
/// which lives at level `k`, defeats it.
pub fn undefinability_at_level(k: usize, budget: Budget) -> Result<TarskiReport, SemanticsError> {
    assert!(k >= 1, "level 0 has no truth predicate to test");
    let sig = language_level(k).with_sub();
    let candidate = Formula::Rel(format!("Tr{}", k - 1), vec![crate::syntax::Term::Var(0)]);
    tarski_demonstrate(&candidate, &sig, budget)
}
