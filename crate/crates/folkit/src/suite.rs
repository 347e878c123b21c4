//! Seeded corpus generators and the ten end-to-end checks behind the
//! `folkit suite` command and the acceptance tests. Every corpus is a
//! deterministic function of the seed, so reports are byte-identical
//! across runs; wall-clock times are kept out of the report body.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coding::Coder;
use crate::definability::{
    automorphisms_brute, back_and_forth, definable_with_params, disagreement_pair, is_automorphism,
    is_isomorphism, isomorphism_brute, relabel, Automorphism,
};
use crate::forcing::{run_construction, verify_status, MeetStatus, Requirement};
use crate::henkin::{
    closed_qf_sentences, henkin_extend, term_model, PresburgerOracle, TheoryOracle,
};
use crate::hierarchy::{coherence_check, eval_level, language_level, truth_atom, truth_chain};
use crate::presburger::{self, builtin_set, definable_set_period, eliminate, periodicity_refute};
use crate::semantics::{
    check_truth_conditions, eval_finite, eval_finite_expansion, eval_nat, exact_truth_set,
    tarski_demonstrate, AuditWorld, Budget, FiniteAssignment, FiniteStructure, NatAssignment,
};
use crate::syntax::{numeral, numeral_u64, parse_formula, Formula, Signature, Term, VarId};

/// Sabotage switch for negative-control runs: the suite must notice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RigMode {
    None,
    /// Flip one membership bit in the first structure's truth set before
    /// auditing it; the truth-conditions criterion must then fail.
    FlipTruthBit,
}

impl FromStr for RigMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(RigMode::None),
            "flip-truth-bit" => Ok(RigMode::FlipTruthBit),
            other => Err(format!(
                "unknown rig mode {other:?} (none | flip-truth-bit)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub index: usize,
    pub name: String,
    pub passed: bool,
    pub details: String,
    /// Wall time; excluded from serialized reports so identical
    /// (config, seed) runs produce identical bytes.
    #[serde(skip)]
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rig: RigMode,
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite seed {}", self.seed)?;
        for c in &self.criteria {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "criterion {:2} {verdict} {}: {}",
                c.index, c.name, c.details
            )?;
        }
        let passing = self.criteria.iter().filter(|c| c.passed).count();
        write!(
            f,
            "suite: {} ({passing}/{} criteria)",
            if self.all_passed() { "PASS" } else { "FAIL" },
            self.criteria.len()
        )
    }
}

type Criterion = fn(u64, RigMode) -> Result<String, String>;

const CRITERIA: [(usize, &str, Criterion); 10] = [
    (1, "tarski-truth-conditions", criterion_truth_conditions),
    (2, "evaluator-oracle-agreement", criterion_evaluator_oracle),
    (3, "diagonal-liar-laws", criterion_diagonal_liar),
    (4, "presburger-soundness", criterion_presburger_soundness),
    (
        5,
        "presburger-periodicity",
        criterion_presburger_periodicity,
    ),
    (6, "definability-automorphisms", criterion_definability),
    (7, "back-and-forth-isomorphism", criterion_back_and_forth),
    (8, "henkin-term-model", criterion_henkin),
    (9, "hierarchy-coherence", criterion_hierarchy),
    (10, "forcing-construction", criterion_forcing),
];

/// Runs the acceptance criteria (those whose name contains `filter`, all
/// when `filter` is `None`) against seeded corpora.
pub fn run_suite(seed: u64, rig: RigMode, filter: Option<&str>) -> SuiteReport {
    let mut criteria = Vec::new();
    for (index, name, run) in CRITERIA {
        if let Some(f) = filter {
            if !name.contains(f) {
                continue;
            }
        }
        let start = Instant::now();
        let outcome = run(seed, rig);
        let millis = start.elapsed().as_millis();
        let (passed, details) = match outcome {
            Ok(details) => (true, details),
            Err(details) => (false, details),
        };
        criteria.push(CriterionReport {
            index,
            name: name.into(),
            passed,
            details,
            millis,
        });
    }
    SuiteReport {
        seed,
        rig,
        criteria,
    }
}

/// One independent generator stream per criterion, all derived from the
/// suite seed.
fn rng_for(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}

// ---------------------------------------------------------------------------
// Criterion 1: exact truth sets pass the audit, any single flip fails
// ---------------------------------------------------------------------------

/// Modular arithmetic on `0..size` with a random order relation. The
/// audit reads existential instances through numerals, so `+`, `*`, `0`,
/// and `1` stay modular: that keeps every element the value of a numeral,
/// while `<` carries the randomness.
fn random_arith_structure(rng: &mut ChaCha8Rng) -> Result<FiniteStructure, String> {
    let size = rng.gen_range(1..=5);
    let constants = BTreeMap::from([("0".to_string(), 0), ("1".to_string(), 1 % size)]);
    let add: Vec<usize> = (0..size)
        .flat_map(|a| (0..size).map(move |b| (a + b) % size))
        .collect();
    let mul: Vec<usize> = (0..size)
        .flat_map(|a| (0..size).map(move |b| a * b % size))
        .collect();
    let less: Vec<Vec<usize>> = (0..size)
        .flat_map(|a| (0..size).map(move |b| vec![a, b]))
        .filter(|_| rng.gen_bool(0.5))
        .collect();
    FiniteStructure::new(
        size,
        Signature::arithmetic(),
        constants,
        vec![("+".into(), 2, add), ("*".into(), 2, mul)],
        vec![("<".into(), 2, less)],
    )
    .map_err(|e| e.to_string())
}

/// A canonical-fragment corpus closed under immediate subsentences and
/// domain-numeral instances, as codes in ascending order.
fn canonical_corpus(s: &FiniteStructure, rng: &mut ChaCha8Rng) -> Result<Vec<BigUint>, String> {
    let n = s.size() as u64;
    let closed_term = |rng: &mut ChaCha8Rng| -> Term {
        match rng.gen_range(0..4) {
            0 => Term::Const("0".into()),
            1 => Term::Const("1".into()),
            2 => numeral_u64(rng.gen_range(0..n)),
            _ => Term::App(
                "+".into(),
                vec![numeral_u64(rng.gen_range(0..n)), Term::Const("1".into())],
            ),
        }
    };
    let atom = |rng: &mut ChaCha8Rng| -> Formula {
        let l = closed_term(rng);
        let r = closed_term(rng);
        if rng.gen_bool(0.5) {
            Formula::Eq(l, r)
        } else {
            Formula::Rel("<".into(), vec![l, r])
        }
    };
    let open_atom = |rng: &mut ChaCha8Rng| -> Formula {
        let t = closed_term(rng);
        match rng.gen_range(0..3) {
            0 => Formula::Eq(Term::Var(0), t),
            1 => Formula::Rel("<".into(), vec![Term::Var(0), t]),
            _ => Formula::Rel("<".into(), vec![t, Term::Var(0)]),
        }
    };
    let mut work: Vec<Formula> = Vec::new();
    for _ in 0..4 {
        work.push(atom(rng));
    }
    for _ in 0..2 {
        work.push(Formula::not(atom(rng)));
    }
    for _ in 0..2 {
        work.push(Formula::and(atom(rng), atom(rng)));
    }
    for _ in 0..2 {
        work.push(Formula::exists(0, open_atom(rng)));
    }

    let coder = Coder::new(s.signature());
    let mut seen = BTreeSet::new();
    while let Some(phi) = work.pop() {
        let code = coder.encode(&phi).map_err(|e| e.to_string())?;
        if !seen.insert(code) {
            continue;
        }
        match &phi {
            Formula::And(a, b) => {
                work.push((**a).clone());
                work.push((**b).clone());
            }
            Formula::Not(f) => work.push((**f).clone()),
            Formula::Exists(v, f) => {
                for d in 0..s.size() {
                    work.push(f.substitute(*v, &numeral_u64(d as u64)));
                }
            }
            _ => {}
        }
    }
    Ok(seen.into_iter().collect())
}

fn criterion_truth_conditions(seed: u64, rig: RigMode) -> Result<String, String> {
    let mut rng = rng_for(seed, 1);
    let mut sentences = 0usize;
    let mut flips = 0usize;
    for idx in 0..50 {
        let s = random_arith_structure(&mut rng)?;
        let corpus = canonical_corpus(&s, &mut rng)?;
        let mut truth = exact_truth_set(&s, &corpus).map_err(|e| e.to_string())?;
        if rig == RigMode::FlipTruthBit && idx == 0 {
            let code = corpus[0].clone();
            if !truth.remove(&code) {
                truth.insert(code);
            }
        }
        let world = AuditWorld::Finite(&s);
        let report = check_truth_conditions(&truth, &world, &corpus).map_err(|e| e.to_string())?;
        if !report.passed() {
            let v = &report.violations[0];
            return Err(format!(
                "structure {idx}: truth set flagged, {} violation(s), first: {} clause on {}",
                report.violations.len(),
                v.clause,
                v.sentence
            ));
        }
        if !report.unverified.is_empty() {
            return Err(format!(
                "structure {idx}: finite audit left sentences unverified"
            ));
        }
        for code in &corpus {
            let mut flipped = truth.clone();
            if !flipped.remove(code) {
                flipped.insert(code.clone());
            }
            let report =
                check_truth_conditions(&flipped, &world, &corpus).map_err(|e| e.to_string())?;
            if report.passed() {
                return Err(format!(
                    "structure {idx}: flipping membership of code {code} went unnoticed"
                ));
            }
            flips += 1;
        }
        sentences += corpus.len();
    }
    Ok(format!(
        "50 structures, {sentences} corpus sentences: exact truth sets audit clean, all {flips} single-bit flips flagged"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 2: evaluator vs quantifier-expansion oracle
// ---------------------------------------------------------------------------

fn mixed_signature() -> Result<Signature, String> {
    Signature::custom(&["a"], &[("f", 1)], &[("P", 1), ("E", 2)]).map_err(|e| e.to_string())
}

fn random_mixed_structure(
    sig: &Signature,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FiniteStructure, String> {
    let constants = BTreeMap::from([("a".to_string(), rng.gen_range(0..size))]);
    let f: Vec<usize> = (0..size).map(|_| rng.gen_range(0..size)).collect();
    let p: Vec<Vec<usize>> = (0..size)
        .filter(|_| rng.gen_bool(0.5))
        .map(|i| vec![i])
        .collect();
    let e: Vec<Vec<usize>> = (0..size)
        .flat_map(|a| (0..size).map(move |b| vec![a, b]))
        .filter(|_| rng.gen_bool(0.5))
        .collect();
    FiniteStructure::new(
        size,
        sig.clone(),
        constants,
        vec![("f".into(), 1, f)],
        vec![("P".into(), 1, p), ("E".into(), 2, e)],
    )
    .map_err(|e| e.to_string())
}

fn random_mixed_term(rng: &mut ChaCha8Rng, quantified: usize, fuel: usize) -> Term {
    if fuel > 0 && rng.gen_bool(0.4) {
        return Term::App(
            "f".into(),
            vec![random_mixed_term(rng, quantified, fuel - 1)],
        );
    }
    if quantified > 0 && rng.gen_bool(0.6) {
        Term::Var(rng.gen_range(0..quantified))
    } else {
        Term::Const("a".into())
    }
}

fn random_mixed_formula(rng: &mut ChaCha8Rng, depth: usize, quantified: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        let t = random_mixed_term(rng, quantified, 2);
        return match rng.gen_range(0..3) {
            0 => Formula::Eq(t, random_mixed_term(rng, quantified, 2)),
            1 => Formula::Rel("P".into(), vec![t]),
            _ => Formula::Rel("E".into(), vec![t, random_mixed_term(rng, quantified, 2)]),
        };
    }
    match rng.gen_range(0..6) {
        0 => Formula::not(random_mixed_formula(rng, depth - 1, quantified)),
        1 => Formula::and(
            random_mixed_formula(rng, depth - 1, quantified),
            random_mixed_formula(rng, depth - 1, quantified),
        ),
        2 => Formula::or(
            random_mixed_formula(rng, depth - 1, quantified),
            random_mixed_formula(rng, depth - 1, quantified),
        ),
        3 => Formula::implies(
            random_mixed_formula(rng, depth - 1, quantified),
            random_mixed_formula(rng, depth - 1, quantified),
        ),
        4 => Formula::exists(
            quantified,
            random_mixed_formula(rng, depth - 1, quantified + 1),
        ),
        _ => Formula::forall(
            quantified,
            random_mixed_formula(rng, depth - 1, quantified + 1),
        ),
    }
}

fn criterion_evaluator_oracle(seed: u64, _rig: RigMode) -> Result<String, String> {
    let sig = mixed_signature()?;
    let mut rng = rng_for(seed, 2);
    let empty = FiniteAssignment::new();
    for i in 0..1000 {
        let size = rng.gen_range(1..=5);
        let s = random_mixed_structure(&sig, size, &mut rng)?;
        let phi = random_mixed_formula(&mut rng, 4, 0);
        let main = eval_finite(&s, &phi, &empty).map_err(|e| e.to_string())?;
        let oracle = eval_finite_expansion(&s, &phi, &empty).map_err(|e| e.to_string())?;
        if main != oracle {
            return Err(format!(
                "instance {i}: eval_finite says {main}, expansion oracle says {oracle} for {phi} over a {size}-element structure"
            ));
        }
    }
    Ok("1000 structure/formula instances: evaluator agrees with the expansion oracle".into())
}

// ---------------------------------------------------------------------------
// Criterion 3: diagonal fixed-point law and liar anti-law
// ---------------------------------------------------------------------------

fn criterion_diagonal_liar(seed: u64, _rig: RigMode) -> Result<String, String> {
    let sig = Signature::arithmetic().with_sub();
    let budget = Budget::default();
    let coder = Coder::new(&sig);
    let mut rng = rng_for(seed, 3);
    let mut k = || rng.gen_range(2u64..=9);
    let texts: Vec<String> = vec![
        "x = x".into(),
        "~(x = x)".into(),
        "x = 0".into(),
        "x = 1".into(),
        "x < 1".into(),
        "1 < x".into(),
        format!("x < {}", k()),
        format!("{} < x", k()),
        format!("x = {}", k()),
        format!("~(x = {})", k()),
        format!("x = x & {} < x", k()),
        "x = 0 | x = x".into(),
        "x = x & ~(x = 0)".into(),
        format!("x < {} | {} < x", k(), k()),
        "~(x < 1)".into(),
        format!("0 = 0 & {} < x", k()),
        "exists y. y < x".into(),
        "exists y. y + y < x".into(),
        // Parity and square-root witnesses sit beyond the default witness
        // budget at liar-code magnitudes, so these two stay undetermined.
        "exists y. x = y + y".into(),
        "exists y. x = y * y".into(),
    ];

    let mut determined = 0usize;
    let empty = NatAssignment::new();
    for (i, text) in texts.iter().enumerate() {
        let phi = parse_formula(text, &sig).map_err(|e| format!("predicate {i}: {e}"))?;

        let d = coder.diag(&phi).map_err(|e| e.to_string())?;
        let direct = eval_nat(&d.sentence, &empty, &sig, budget).map_err(|e| e.to_string())?;
        let applied = phi.substitute(0, &numeral(&d.code));
        let through = eval_nat(&applied, &empty, &sig, budget).map_err(|e| e.to_string())?;
        let diag_pair = (direct.determined(), through.determined());
        if let (Some(a), Some(b)) = diag_pair {
            if a != b {
                return Err(format!(
                    "predicate {i} ({text}): diagonal law broken, sentence is {a} but predicate-of-code is {b}"
                ));
            }
        }

        let report = tarski_demonstrate(&phi, &sig, budget).map_err(|e| e.to_string())?;
        let liar_pair = (
            report.liar_verdict.determined(),
            report.applied_verdict.determined(),
        );
        if let (Some(a), Some(b)) = liar_pair {
            if a == b {
                return Err(format!(
                    "predicate {i} ({text}): liar law broken, both sides evaluate to {a}"
                ));
            }
        }

        if let ((Some(_), Some(_)), (Some(_), Some(_))) = (diag_pair, liar_pair) {
            determined += 1;
        }
    }
    if determined < 15 {
        return Err(format!(
            "only {determined} of 20 predicates fully determined at the default budget (need 15)"
        ));
    }
    Ok(format!(
        "20 predicates: diagonal law and liar anti-law hold on every determined instance, {determined} of 20 fully determined"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 4: Presburger decide vs bounded brute force, eliminate on grid
// ---------------------------------------------------------------------------

fn bounded_matrix(rng: &mut ChaCha8Rng, vars: &[VarId], depth: usize) -> Formula {
    let term = |rng: &mut ChaCha8Rng| -> Term {
        let part = |rng: &mut ChaCha8Rng| -> Term {
            match rng.gen_range(0..4) {
                0 if !vars.is_empty() => Term::Var(vars[rng.gen_range(0..vars.len())]),
                1 => Term::Const("0".into()),
                2 => Term::Const("1".into()),
                _ => Term::Num(BigUint::from(rng.gen_range(0u64..=6))),
            }
        };
        let mut t = part(rng);
        for _ in 0..rng.gen_range(0..2) {
            t = Term::App("+".into(), vec![t, part(rng)]);
        }
        t
    };
    if depth == 0 || rng.gen_bool(0.4) {
        let l = term(rng);
        let r = term(rng);
        return if rng.gen_bool(0.5) {
            Formula::Eq(l, r)
        } else {
            Formula::Rel("<".into(), vec![l, r])
        };
    }
    match rng.gen_range(0..4) {
        0 => Formula::not(bounded_matrix(rng, vars, depth - 1)),
        1 => Formula::and(
            bounded_matrix(rng, vars, depth - 1),
            bounded_matrix(rng, vars, depth - 1),
        ),
        2 => Formula::or(
            bounded_matrix(rng, vars, depth - 1),
            bounded_matrix(rng, vars, depth - 1),
        ),
        _ => Formula::implies(
            bounded_matrix(rng, vars, depth - 1),
            bounded_matrix(rng, vars, depth - 1),
        ),
    }
}

/// Wraps `body` in a syntactically bounded quantifier over `v`.
fn bounded_quantifier(rng: &mut ChaCha8Rng, v: VarId, bound: u64, body: Formula) -> Formula {
    let guard = Formula::Rel("<".into(), vec![Term::Var(v), Term::Num(bound.into())]);
    if rng.gen_bool(0.5) {
        Formula::exists(v, Formula::and(guard, body))
    } else {
        Formula::forall(v, Formula::implies(guard, body))
    }
}

fn bounded_sentence(rng: &mut ChaCha8Rng) -> Formula {
    if rng.gen_bool(0.5) {
        let matrix = bounded_matrix(rng, &[0], 2);
        let bound = rng.gen_range(1..=6);
        bounded_quantifier(rng, 0, bound, matrix)
    } else {
        let matrix = bounded_matrix(rng, &[0, 1], 2);
        let inner_bound = rng.gen_range(1..=5);
        let inner = bounded_quantifier(rng, 1, inner_bound, matrix);
        let outer_bound = rng.gen_range(1..=5);
        bounded_quantifier(rng, 0, outer_bound, inner)
    }
}

fn ground_value(t: &Term, env: &BTreeMap<VarId, u64>) -> Result<u64, String> {
    match t {
        Term::Var(v) => env
            .get(v)
            .copied()
            .ok_or_else(|| format!("unbound variable {v}")),
        Term::Const(c) if c == "0" => Ok(0),
        Term::Const(c) if c == "1" => Ok(1),
        Term::Const(c) => Err(format!("uninterpreted constant {c}")),
        Term::Num(n) => u64::try_from(n).map_err(|_| "numeral too large".into()),
        Term::App(f, args) if f == "+" && args.len() == 2 => {
            Ok(ground_value(&args[0], env)? + ground_value(&args[1], env)?)
        }
        Term::App(f, _) => Err(format!("uninterpreted function {f}")),
    }
}

/// Reference evaluator for the generated fragment: quantifiers must carry
/// the syntactic bound the generator produces, and are expanded by direct
/// enumeration. Shares nothing with the elimination-based decision
/// procedure.
fn brute_bounded_eval(phi: &Formula, env: &mut BTreeMap<VarId, u64>) -> Result<bool, String> {
    match phi {
        Formula::Eq(l, r) => Ok(ground_value(l, env)? == ground_value(r, env)?),
        Formula::Rel(name, args) if name == "<" && args.len() == 2 => {
            Ok(ground_value(&args[0], env)? < ground_value(&args[1], env)?)
        }
        Formula::Rel(name, _) => Err(format!("unexpected relation {name}")),
        Formula::Not(f) => Ok(!brute_bounded_eval(f, env)?),
        Formula::And(a, b) => Ok(brute_bounded_eval(a, env)? && brute_bounded_eval(b, env)?),
        Formula::Or(a, b) => Ok(brute_bounded_eval(a, env)? || brute_bounded_eval(b, env)?),
        Formula::Implies(a, b) => Ok(!brute_bounded_eval(a, env)? || brute_bounded_eval(b, env)?),
        Formula::Exists(v, inner) => match &**inner {
            Formula::And(guard, body) => {
                let bound = guard_bound(guard, *v, env)?;
                for value in 0..bound {
                    env.insert(*v, value);
                    let holds = brute_bounded_eval(body, env)?;
                    env.remove(v);
                    if holds {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            _ => Err("existential without a bound guard".into()),
        },
        Formula::Forall(v, inner) => match &**inner {
            Formula::Implies(guard, body) => {
                let bound = guard_bound(guard, *v, env)?;
                for value in 0..bound {
                    env.insert(*v, value);
                    let holds = brute_bounded_eval(body, env)?;
                    env.remove(v);
                    if !holds {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err("universal without a bound guard".into()),
        },
    }
}

fn guard_bound(guard: &Formula, v: VarId, env: &BTreeMap<VarId, u64>) -> Result<u64, String> {
    match guard {
        Formula::Rel(name, args) if name == "<" && args.len() == 2 => match &args[0] {
            Term::Var(gv) if *gv == v => ground_value(&args[1], env),
            _ => Err("guard does not bound the quantified variable".into()),
        },
        _ => Err("guard is not a strict bound".into()),
    }
}

fn criterion_presburger_soundness(seed: u64, _rig: RigMode) -> Result<String, String> {
    let mut rng = rng_for(seed, 4);
    for i in 0..200 {
        let sentence = bounded_sentence(&mut rng);
        let decided = presburger::decide(&sentence).map_err(|e| format!("sentence {i}: {e}"))?;
        let brute = brute_bounded_eval(&sentence, &mut BTreeMap::new())
            .map_err(|e| format!("sentence {i}: {e}"))?;
        if decided != brute {
            return Err(format!(
                "sentence {i}: decide says {decided}, bounded brute force says {brute} for {sentence}"
            ));
        }
    }

    let mut grid_points = 0usize;
    for i in 0..12 {
        let two_vars = i % 2 == 1;
        let free: Vec<VarId> = if two_vars { vec![0, 1] } else { vec![0] };
        let mut all_vars = free.clone();
        all_vars.push(2);
        let matrix = bounded_matrix(&mut rng, &all_vars, 2);
        let bound = rng.gen_range(1..=5);
        let phi = bounded_quantifier(&mut rng, 2, bound, matrix);
        let qf = eliminate(&phi).map_err(|e| format!("formula {i}: {e}"))?;
        let ys: std::ops::RangeInclusive<u64> = if two_vars { 0..=50 } else { 0..=0 };
        for x in 0..=50u64 {
            for y in ys.clone() {
                let mut env = BTreeMap::from([(0, x)]);
                let mut asg = BTreeMap::from([(0, BigInt::from(x))]);
                if two_vars {
                    env.insert(1, y);
                    asg.insert(1, BigInt::from(y));
                }
                let direct = brute_bounded_eval(&phi, &mut env)
                    .map_err(|e| format!("formula {i} at ({x},{y}): {e}"))?;
                let eliminated = qf
                    .eval(&asg)
                    .map_err(|e| format!("formula {i} at ({x},{y}): {e}"))?;
                if direct != eliminated {
                    return Err(format!(
                        "formula {i}: eliminated form disagrees at ({x},{y}): original {direct}, eliminated {eliminated} for {phi}"
                    ));
                }
                grid_points += 1;
            }
        }
    }

    let pinned = parse_formula(
        "forall x. exists y. (x = y + y | x = y + y + 1)",
        &Signature::presburger(),
    )
    .map_err(|e| e.to_string())?;
    if !presburger::decide(&pinned).map_err(|e| e.to_string())? {
        return Err("decide rejects: every number is even or odd".into());
    }
    Ok(format!(
        "200 bounded sentences match brute force; 12 eliminations verified on {grid_points} grid points; parity dichotomy decided true"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 5: periodicity refutation for squares, period of the evens
// ---------------------------------------------------------------------------

fn criterion_presburger_periodicity(_seed: u64, _rig: RigMode) -> Result<String, String> {
    let member = builtin_set("squares").ok_or("squares set missing")?;
    let bound = 10_000u64;
    let report = periodicity_refute("squares", member, bound, 4_999);
    let mut pairs = 0u64;
    for row in &report.rows {
        let max_threshold = bound - 2 * row.period;
        match row.last_violation {
            Some(n) if n >= max_threshold => pairs += max_threshold + 1,
            _ => {
                return Err(format!(
                    "period {} not refuted past threshold {max_threshold} (last violation {:?})",
                    row.period, row.last_violation
                ))
            }
        }
    }

    let evens = parse_formula("exists y. x = y + y", &Signature::presburger())
        .map_err(|e| e.to_string())?;
    let cert = definable_set_period(&evens).map_err(|e| e.to_string())?;
    if cert.period != 2 {
        return Err(format!(
            "evens certificate reports period {}, expected 2",
            cert.period
        ));
    }
    for n in 0..=1_000u64 {
        if cert.member(n) != (n % 2 == 0) {
            return Err(format!("evens certificate wrong at {n}"));
        }
    }
    Ok(format!(
        "squares defeat all {pairs} (threshold, period) claims with threshold + 2*period <= {bound}; evens certificate has period 2, verified to 1000"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 6: definability via automorphisms vs brute enumeration
// ---------------------------------------------------------------------------

fn graph_signature() -> Result<Signature, String> {
    Signature::custom(&[], &[], &[("P", 1), ("E", 2)]).map_err(|e| e.to_string())
}

fn random_graph_structure(
    sig: &Signature,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FiniteStructure, String> {
    let p: Vec<Vec<usize>> = (0..size)
        .filter(|_| rng.gen_bool(0.5))
        .map(|i| vec![i])
        .collect();
    let e: Vec<Vec<usize>> = (0..size)
        .flat_map(|a| (0..size).map(move |b| vec![a, b]))
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    FiniteStructure::new(
        size,
        sig.clone(),
        BTreeMap::new(),
        vec![],
        vec![("P".into(), 1, p), ("E".into(), 2, e)],
    )
    .map_err(|e| e.to_string())
}

fn criterion_definability(seed: u64, _rig: RigMode) -> Result<String, String> {
    let sig = graph_signature()?;
    let mut rng = rng_for(seed, 6);
    let mut structures = 0usize;
    let mut checks = 0usize;
    for size in 1..=5usize {
        for _ in 0..8 {
            let s = random_graph_structure(&sig, size, &mut rng)?;
            structures += 1;
            let group = automorphisms_brute(&s).map_err(|e| e.to_string())?;
            let mut param_sets: Vec<Vec<usize>> = vec![vec![], vec![0]];
            if size > 1 {
                param_sets.push(vec![0, size - 1]);
            }
            for mask in 0u32..1 << size {
                let x: BTreeSet<usize> = (0..size).filter(|i| mask >> i & 1 == 1).collect();
                for params in &param_sets {
                    let expected = group
                        .iter()
                        .filter(|h| h.fixes(params))
                        .all(|h| x.iter().all(|&e| x.contains(&h.apply(e))));
                    let got = definable_with_params(&x, &s, params).map_err(|e| e.to_string())?;
                    if got != expected {
                        return Err(format!(
                            "structure {structures} (size {size}), set {x:?}, params {params:?}: definable_with_params says {got}, brute enumeration says {expected}"
                        ));
                    }
                    let witness = disagreement_pair(&s, &x, params).map_err(|e| e.to_string())?;
                    match witness {
                        Some(w) => {
                            if expected {
                                return Err(format!(
                                    "structure {structures}: witness produced for a definable set {x:?}"
                                ));
                            }
                            let valid = is_automorphism(&s, w.pi.as_slice())
                                && w.pi.fixes(params)
                                && w.pi.apply(w.t) == w.s
                                && x.contains(&w.s)
                                && !x.contains(&w.t);
                            if !valid {
                                return Err(format!(
                                    "structure {structures}: invalid witness {w:?} for set {x:?}, params {params:?}"
                                ));
                            }
                        }
                        None if !expected => {
                            return Err(format!(
                                "structure {structures}: no witness for non-definable set {x:?}, params {params:?}"
                            ));
                        }
                        None => {}
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok(format!(
        "{structures} structures, {checks} subset/parameter checks: definability matches brute enumeration, every witness validates"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 7: back-and-forth vs brute isomorphism search
// ---------------------------------------------------------------------------

fn criterion_back_and_forth(seed: u64, _rig: RigMode) -> Result<String, String> {
    let sig = graph_signature()?;
    let mut rng = rng_for(seed, 7);
    let mut planted = 0usize;
    let mut isomorphic = 0usize;
    for i in 0..200 {
        let n = rng.gen_range(1..=7);
        let a = random_graph_structure(&sig, n, &mut rng)?;
        let b = if rng.gen_bool(0.5) {
            planted += 1;
            let mut map: Vec<usize> = (0..n).collect();
            map.shuffle(&mut rng);
            let pi = Automorphism::permutation(map).map_err(|e| e.to_string())?;
            relabel(&a, &pi)
        } else {
            let m = rng.gen_range(1..=7);
            random_graph_structure(&sig, m, &mut rng)?
        };
        let fast = back_and_forth(&a, &b).map_err(|e| e.to_string())?;
        let brute = isomorphism_brute(&a, &b).map_err(|e| e.to_string())?;
        if fast.is_some() != brute.is_some() {
            return Err(format!(
                "pair {i}: back-and-forth {} an isomorphism, brute search {}",
                if fast.is_some() { "finds" } else { "misses" },
                if brute.is_some() {
                    "finds one"
                } else {
                    "finds none"
                },
            ));
        }
        if let Some(pi) = &fast {
            if !is_isomorphism(&a, &b, pi.as_slice()) {
                return Err(format!(
                    "pair {i}: returned map fails the isomorphism check"
                ));
            }
            isomorphic += 1;
        }
    }
    Ok(format!(
        "200 pairs ({planted} with planted isomorphisms): existence agrees with brute search, all {isomorphic} returned maps verify"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 8: Henkin completion and its term model
// ---------------------------------------------------------------------------

fn criterion_henkin(_seed: u64, _rig: RigMode) -> Result<String, String> {
    let oracle = PresburgerOracle::new();
    let state = henkin_extend(&oracle, 1, 6).map_err(|e| e.to_string())?;
    if !state.completeness_holds() {
        return Err("completion misses a sentence or accepts both sides".into());
    }
    if !state.witness_property_holds() {
        return Err("an accepted existential lacks an accepted witness instance".into());
    }
    let model = term_model(&state, &oracle).map_err(|e| e.to_string())?;

    let mut determined = 0usize;
    for sentence in closed_qf_sentences(oracle.signature(), 12) {
        if let Some(modeled) = model.eval_closed(&sentence) {
            let decided = presburger::decide(&sentence).map_err(|e| e.to_string())?;
            if modeled != decided {
                return Err(format!(
                    "term model disagrees with decide on {sentence}: model {modeled}, decide {decided}"
                ));
            }
            determined += 1;
        }
    }
    if determined < 100_000 {
        return Err(format!(
            "quotient evaluation determined only {determined} sentences; the carrier is too thin"
        ));
    }
    Ok(format!(
        "completion of {} sentences with {} witnesses is complete and witnessed; term model agrees with decide on all {determined} determined sentences of size <= 12",
        state.considered().len(),
        state.witnesses().len()
    ))
}

// ---------------------------------------------------------------------------
// Criterion 9: hierarchy coherence across levels
// ---------------------------------------------------------------------------

/// Closed sentences kept shallow on purpose: code magnitude grows with
/// nesting depth, and each corpus sentence is re-coded inside a truth atom
/// by the coherence check.
fn small_sentence(rng: &mut ChaCha8Rng) -> Formula {
    let term = |rng: &mut ChaCha8Rng| -> Term {
        let part = |rng: &mut ChaCha8Rng| -> Term {
            match rng.gen_range(0..3) {
                0 => Term::Const("0".into()),
                1 => Term::Const("1".into()),
                _ => Term::Num(BigUint::from(rng.gen_range(0u64..=6))),
            }
        };
        let t = part(rng);
        if rng.gen_bool(0.4) {
            Term::App("+".into(), vec![t, part(rng)])
        } else {
            t
        }
    };
    let atom = |rng: &mut ChaCha8Rng| -> Formula {
        let l = term(rng);
        let r = term(rng);
        if rng.gen_bool(0.5) {
            Formula::Eq(l, r)
        } else {
            Formula::Rel("<".into(), vec![l, r])
        }
    };
    match rng.gen_range(0..6) {
        0 => atom(rng),
        1 => Formula::not(atom(rng)),
        2 => Formula::and(atom(rng), atom(rng)),
        3 => {
            let (a, b) = (atom(rng), atom(rng));
            if rng.gen_bool(0.5) {
                Formula::or(a, b)
            } else {
                Formula::implies(a, b)
            }
        }
        _ => {
            let body = match rng.gen_range(0..4) {
                0 => Formula::Eq(Term::Var(0), term(rng)),
                1 => Formula::Eq(
                    Term::App("+".into(), vec![Term::Var(0), Term::Var(0)]),
                    term(rng),
                ),
                2 => Formula::Rel("<".into(), vec![Term::Var(0), term(rng)]),
                _ => Formula::Eq(
                    Term::App("+".into(), vec![Term::Var(0), term(rng)]),
                    term(rng),
                ),
            };
            let bound = rng.gen_range(1..=6);
            bounded_quantifier(rng, 0, bound, body)
        }
    }
}

fn level_corpus(level: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Formula>, String> {
    let mut corpus = Vec::with_capacity(count);
    for _ in 0..count {
        let base = small_sentence(rng);
        if level == 0 || rng.gen_bool(0.6) {
            corpus.push(base);
            continue;
        }
        let m = rng.gen_range(0..level);
        let coder_sig = language_level(m);
        let code = Coder::new(&coder_sig)
            .encode(&base)
            .map_err(|e| e.to_string())?;
        let atom = truth_atom(m, &code);
        corpus.push(if rng.gen_bool(0.3) {
            Formula::not(atom)
        } else {
            atom
        });
    }
    Ok(corpus)
}

fn criterion_hierarchy(seed: u64, _rig: RigMode) -> Result<String, String> {
    let budget = Budget::default();
    let mut checked = 0usize;
    let mut undetermined = 0usize;
    for j in 0..3usize {
        let corpus = level_corpus(j, 100, &mut rng_for(seed, 90 + j as u64))?;
        for k in j + 1..=3 {
            let report = coherence_check(j, k, &corpus, budget).map_err(|e| e.to_string())?;
            if !report.passed() {
                let d = &report.disagreements[0];
                return Err(format!(
                    "levels {j}->{k}: determined disagreement on {}: direct {}, through predicate {}",
                    d.sentence, d.direct, d.through_predicate
                ));
            }
            checked += report.checked;
            undetermined += report.undetermined;
        }
    }

    for (text, expected) in [("0 = 0", true), ("0 = 1", false), ("~(0 = 1)", true)] {
        let phi = parse_formula(text, &language_level(0)).map_err(|e| e.to_string())?;
        let chain = truth_chain(&phi, 0, 3).map_err(|e| e.to_string())?;
        for (i, sentence) in chain.iter().enumerate() {
            let verdict = eval_level(sentence, &NatAssignment::new(), i, budget)
                .map_err(|e| e.to_string())?;
            if verdict.determined() != Some(expected) {
                return Err(format!(
                    "dereference chain for {text} breaks at level {i}: {sentence} evaluates to {verdict}, expected {expected}"
                ));
            }
        }
    }
    Ok(format!(
        "6 level pairs, {checked} sentence comparisons, zero determined disagreements ({undetermined} honest unknowns); dereference chains match hand derivation to level 3"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 10: forcing construction
// ---------------------------------------------------------------------------

fn criterion_forcing(_seed: u64, _rig: RigMode) -> Result<String, String> {
    let reqs: Vec<Requirement> = (0..8u8)
        .map(|p| {
            let bits: String = (0..3)
                .rev()
                .map(|i| if p >> i & 1 == 1 { '1' } else { '0' })
                .collect();
            Requirement::parse(format!("contains-{bits}"), &format!("contains {bits}"))
                .map_err(|e| e.to_string())
                .map(|r| r.with_dense_hint(true))
        })
        .collect::<Result<_, _>>()?;
    let bound = 40;
    let (final_c, statuses) = run_construction(&reqs, bound).map_err(|e| e.to_string())?;
    for (r, status) in reqs.iter().zip(&statuses) {
        if !matches!(status, MeetStatus::Met { .. }) {
            return Err(format!("dense requirement {} not met: {status:?}", r.label));
        }
        if !verify_status(&final_c, r, status, bound) {
            return Err(format!("status for {} fails re-verification", r.label));
        }
        if !r.member(final_c.bits()) {
            return Err(format!("final condition leaves {} unmet", r.label));
        }
    }
    let rerun = run_construction(&reqs, bound).map_err(|e| e.to_string())?;
    if rerun != (final_c.clone(), statuses.clone()) {
        return Err("construction is not deterministic across runs".into());
    }

    let contradictory = vec![
        Requirement::parse("starts-0", "prefix 0").map_err(|e| e.to_string())?,
        Requirement::parse("starts-1", "prefix 1").map_err(|e| e.to_string())?,
    ];
    let (c2, s2) = run_construction(&contradictory, 12).map_err(|e| e.to_string())?;
    if !matches!(s2[0], MeetStatus::Met { .. }) || !matches!(s2[1], MeetStatus::Sealed { .. }) {
        return Err(format!(
            "contradictory pair gave {s2:?}, expected met then sealed"
        ));
    }
    if !verify_status(&c2, &contradictory[1], &s2[1], 12) {
        return Err("sealed status fails re-verification".into());
    }
    Ok(format!(
        "8 dense pattern requirements met in a {}-bit condition, statuses re-verified, deterministic; contradictory pair met then sealed",
        final_c.len()
    ))
}
