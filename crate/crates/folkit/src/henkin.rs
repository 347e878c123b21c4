//! Henkin completion of a decidable theory, at desk scale: enumerate the
//! closed sentences of a signature up to a size cap in a fixed order,
//! accept each sentence or its negation by consulting a decision oracle,
//! allocate a fresh witness constant for every accepted existential, and
//! quotient the closed terms by the resulting equalities into a term
//! model. Instantiated with the Presburger oracle for a theory that is
//! actually decidable.
//!
//! Witness constants are unknown to the oracle, so before a sentence
//! mentioning them is decided they are abstracted away: each witness is
//! replaced by a fresh variable, existentially quantified and constrained
//! by everything already accepted about that witness. Deciding against
//! the accumulated constraints (rather than the defining instance alone)
//! keeps later answers consistent with earlier ones when an instance does
//! not pin its witness to a single value.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::presburger;
use crate::syntax::{Formula, Signature, SyntaxError, Term, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HenkinError {
    #[error("inconsistent: both `{sentence}` and `{negation}` were forced")]
    Inconsistent { sentence: String, negation: String },
    #[error("oracle failed on `{sentence}`: {reason}")]
    Oracle { sentence: String, reason: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// A total decision procedure for the closed sentences of a signature.
/// Implementations must never validate both a sentence and its negation.
pub trait TheoryOracle {
    fn signature(&self) -> &Signature;
    fn decide(&self, sentence: &Formula) -> Result<bool, String>;
}

/// The linear-arithmetic instantiation: `0`, `1`, `+`, `<` over the
/// naturals, decided by quantifier elimination.
#[derive(Debug, Clone)]
pub struct PresburgerOracle {
    sig: Signature,
}

impl PresburgerOracle {
    pub fn new() -> Self {
        PresburgerOracle {
            sig: Signature::presburger(),
        }
    }
}

impl Default for PresburgerOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl TheoryOracle for PresburgerOracle {
    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn decide(&self, sentence: &Formula) -> Result<bool, String> {
        presburger::decide(sentence).map_err(|e| e.to_string())
    }
}

/// Validates every sentence (or none). A rigged control: completion over
/// it must detect the inconsistency at the first complementary pair.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    sig: Signature,
    pub value: bool,
}

impl ConstantOracle {
    pub fn new(value: bool) -> Self {
        ConstantOracle {
            sig: Signature::presburger(),
            value,
        }
    }
}

impl TheoryOracle for ConstantOracle {
    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn decide(&self, _sentence: &Formula) -> Result<bool, String> {
        Ok(self.value)
    }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// All closed terms of the signature with at most `cap` nodes, ordered by
/// (size, text). Numerals appear as `0`, `1`, and sums; decimal literals
/// are parser sugar and are not enumerated.
pub fn closed_terms(sig: &Signature, cap: usize) -> Vec<Term> {
    let mut gen = Enumerator::new(sig, true);
    let mut out: Vec<Term> = (1..=cap).flat_map(|s| gen.terms(s, 0).to_vec()).collect();
    out.sort_by_key(|t| (t.size(), t.to_string()));
    out
}

/// All closed sentences of the signature with at most `cap` nodes, in the
/// canonical processing order: by size, then by text. Bound variables are
/// named by quantifier depth, so each sentence appears exactly once.
pub fn closed_sentences(sig: &Signature, cap: usize) -> Vec<Formula> {
    enumerate_sentences(sig, cap, true)
}

/// As [`closed_sentences`], but quantifier-free.
pub fn closed_qf_sentences(sig: &Signature, cap: usize) -> Vec<Formula> {
    enumerate_sentences(sig, cap, false)
}

fn enumerate_sentences(sig: &Signature, cap: usize, quantifiers: bool) -> Vec<Formula> {
    let mut gen = Enumerator::new(sig, quantifiers);
    let mut out: Vec<Formula> = (1..=cap)
        .flat_map(|s| gen.formulas(s, 0).to_vec())
        .collect();
    out.sort_by_key(|f| (f.size(), f.to_string()));
    out
}

struct Enumerator<'a> {
    sig: &'a Signature,
    quantifiers: bool,
    terms: HashMap<(usize, usize), Vec<Term>>,
    formulas: HashMap<(usize, usize), Vec<Formula>>,
}

impl<'a> Enumerator<'a> {
    fn new(sig: &'a Signature, quantifiers: bool) -> Self {
        Enumerator {
            sig,
            quantifiers,
            terms: HashMap::new(),
            formulas: HashMap::new(),
        }
    }

    /// Terms of exactly `size` nodes with variables among the first
    /// `depth` quantifier-bound ones.
    fn terms(&mut self, size: usize, depth: usize) -> &[Term] {
        if !self.terms.contains_key(&(size, depth)) {
            let mut out = Vec::new();
            if size == 1 {
                out.extend(self.sig.constants().iter().cloned().map(Term::Const));
                out.extend((0..depth).map(Term::Var));
            } else if size >= 2 {
                for (name, arity) in self.sig.functions().to_vec() {
                    for args in self.argument_lists(size - 1, arity, depth) {
                        out.push(Term::App(name.clone(), args));
                    }
                }
            }
            self.terms.insert((size, depth), out);
        }
        &self.terms[&(size, depth)]
    }

    /// All lists of `count` terms whose sizes sum to `total`.
    fn argument_lists(&mut self, total: usize, count: usize, depth: usize) -> Vec<Vec<Term>> {
        if count == 0 {
            return if total == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = Vec::new();
        for first in 1..=total.saturating_sub(count - 1) {
            let heads = self.terms(first, depth).to_vec();
            for rest in self.argument_lists(total - first, count - 1, depth) {
                for head in &heads {
                    let mut args = Vec::with_capacity(count);
                    args.push(head.clone());
                    args.extend(rest.iter().cloned());
                    out.push(args);
                }
            }
        }
        out
    }

    fn formulas(&mut self, size: usize, depth: usize) -> &[Formula] {
        if !self.formulas.contains_key(&(size, depth)) {
            let mut out = Vec::new();
            if size >= 3 {
                for left in 1..=size - 2 {
                    let ls = self.terms(left, depth).to_vec();
                    let rs = self.terms(size - 1 - left, depth).to_vec();
                    for l in &ls {
                        for r in &rs {
                            out.push(Formula::Eq(l.clone(), r.clone()));
                        }
                    }
                }
                for (name, arity) in self.sig.relations().to_vec() {
                    for args in self.argument_lists(size - 1, arity, depth) {
                        out.push(Formula::Rel(name.clone(), args));
                    }
                }
            }
            if size >= 4 {
                for f in self.formulas(size - 1, depth).to_vec() {
                    out.push(Formula::not(f));
                }
                if self.quantifiers {
                    for f in self.formulas(size - 1, depth + 1).to_vec() {
                        out.push(Formula::exists(depth, f.clone()));
                        out.push(Formula::forall(depth, f));
                    }
                }
            }
            if size >= 7 {
                for left in 3..=size - 4 {
                    let ls = self.formulas(left, depth).to_vec();
                    let rs = self.formulas(size - 1 - left, depth).to_vec();
                    for l in &ls {
                        for r in &rs {
                            out.push(Formula::and(l.clone(), r.clone()));
                            out.push(Formula::or(l.clone(), r.clone()));
                            out.push(Formula::implies(l.clone(), r.clone()));
                        }
                    }
                }
            }
            self.formulas.insert((size, depth), out);
        }
        &self.formulas[&(size, depth)]
    }
}

// ---------------------------------------------------------------------------
// Completion
// ---------------------------------------------------------------------------

/// One allocated witness: the accepted existential, its fresh constant,
/// and the instance obtained by substituting the constant for the bound
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub existential: Formula,
    pub constant: String,
    pub instance: Formula,
}

/// The finite fragment of a Henkin completion: accepted sentences over
/// the witness-extended signature, the witness table in allocation order,
/// and the enumeration actually considered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HenkinStateDoc", into = "HenkinStateDoc")]
pub struct HenkinState {
    base: Signature,
    signature: Signature,
    accepted: BTreeSet<Formula>,
    witnesses: Vec<WitnessEntry>,
    constant_pool: Vec<String>,
    considered: Vec<Formula>,
    depth: usize,
    size_cap: usize,
}

impl HenkinState {
    pub fn base_signature(&self) -> &Signature {
        &self.base
    }

    /// The witness-extended signature.
    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn accepted(&self) -> &BTreeSet<Formula> {
        &self.accepted
    }

    pub fn is_accepted(&self, sentence: &Formula) -> bool {
        self.accepted.contains(sentence)
    }

    pub fn witnesses(&self) -> &[WitnessEntry] {
        &self.witnesses
    }

    pub fn witness_for(&self, existential: &Formula) -> Option<&str> {
        self.witnesses
            .iter()
            .find(|w| &w.existential == existential)
            .map(|w| w.constant.as_str())
    }

    pub fn constant_pool(&self) -> &[String] {
        &self.constant_pool
    }

    /// Every sentence that was processed, in processing order.
    pub fn considered(&self) -> &[Formula] {
        &self.considered
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn size_cap(&self) -> usize {
        self.size_cap
    }

    /// For every considered sentence, exactly one of it and its negation
    /// is accepted.
    pub fn completeness_holds(&self) -> bool {
        self.considered
            .iter()
            .all(|s| self.accepted.contains(s) != self.accepted.contains(&negated_canonical(s)))
    }

    /// Every accepted existential has a witness whose instance is
    /// accepted.
    pub fn witness_property_holds(&self) -> bool {
        self.accepted
            .iter()
            .filter(|s| matches!(s, Formula::Exists(..)))
            .all(|s| self.witness_for(s).is_some())
            && self
                .witnesses
                .iter()
                .all(|w| self.accepted.contains(&w.instance))
    }
}

#[derive(Serialize, Deserialize)]
struct HenkinStateDoc {
    base: Signature,
    signature: Signature,
    accepted: Vec<String>,
    witnesses: Vec<WitnessDoc>,
    constant_pool: Vec<String>,
    considered: Vec<String>,
    depth: usize,
    size_cap: usize,
}

#[derive(Serialize, Deserialize)]
struct WitnessDoc {
    existential: String,
    constant: String,
    instance: String,
}

impl From<HenkinState> for HenkinStateDoc {
    fn from(s: HenkinState) -> Self {
        HenkinStateDoc {
            base: s.base,
            signature: s.signature,
            accepted: s.accepted.iter().map(|f| f.to_string()).collect(),
            witnesses: s
                .witnesses
                .iter()
                .map(|w| WitnessDoc {
                    existential: w.existential.to_string(),
                    constant: w.constant.clone(),
                    instance: w.instance.to_string(),
                })
                .collect(),
            constant_pool: s.constant_pool,
            considered: s.considered.iter().map(|f| f.to_string()).collect(),
            depth: s.depth,
            size_cap: s.size_cap,
        }
    }
}

impl TryFrom<HenkinStateDoc> for HenkinState {
    type Error = SyntaxError;

    fn try_from(doc: HenkinStateDoc) -> Result<Self, SyntaxError> {
        let parse = |text: &str| crate::syntax::parse_formula(text, &doc.signature);
        Ok(HenkinState {
            accepted: doc
                .accepted
                .iter()
                .map(|t| parse(t))
                .collect::<Result<_, _>>()?,
            witnesses: doc
                .witnesses
                .iter()
                .map(|w| {
                    Ok(WitnessEntry {
                        existential: parse(&w.existential)?,
                        constant: w.constant.clone(),
                        instance: parse(&w.instance)?,
                    })
                })
                .collect::<Result<_, SyntaxError>>()?,
            considered: doc
                .considered
                .iter()
                .map(|t| parse(t))
                .collect::<Result<_, _>>()?,
            base: doc.base,
            signature: doc.signature,
            constant_pool: doc.constant_pool,
            depth: doc.depth,
            size_cap: doc.size_cap,
        })
    }
}

fn negated_canonical(sentence: &Formula) -> Formula {
    match sentence {
        Formula::Not(inner) => (**inner).clone(),
        other => Formula::not(other.clone()),
    }
}

fn replace_constant(phi: &Formula, name: &str, by: &Term) -> Formula {
    fn in_term(t: &Term, name: &str, by: &Term) -> Term {
        match t {
            Term::Const(c) if c == name => by.clone(),
            Term::App(f, args) => Term::App(
                f.clone(),
                args.iter().map(|a| in_term(a, name, by)).collect(),
            ),
            other => other.clone(),
        }
    }
    match phi {
        Formula::Eq(l, r) => Formula::Eq(in_term(l, name, by), in_term(r, name, by)),
        Formula::Rel(r, args) => Formula::Rel(
            r.clone(),
            args.iter().map(|a| in_term(a, name, by)).collect(),
        ),
        Formula::Not(f) => Formula::not(replace_constant(f, name, by)),
        Formula::And(a, b) => {
            Formula::and(replace_constant(a, name, by), replace_constant(b, name, by))
        }
        Formula::Or(a, b) => {
            Formula::or(replace_constant(a, name, by), replace_constant(b, name, by))
        }
        Formula::Implies(a, b) => {
            Formula::implies(replace_constant(a, name, by), replace_constant(b, name, by))
        }
        Formula::Exists(u, f) => Formula::exists(*u, replace_constant(f, name, by)),
        Formula::Forall(u, f) => Formula::forall(*u, replace_constant(f, name, by)),
    }
}

fn every_var(phi: &Formula, out: &mut BTreeSet<VarId>) {
    fn in_term(t: &Term, out: &mut BTreeSet<VarId>) {
        match t {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::App(_, args) => args.iter().for_each(|a| in_term(a, out)),
            Term::Const(_) | Term::Num(_) => {}
        }
    }
    match phi {
        Formula::Eq(l, r) => {
            in_term(l, out);
            in_term(r, out);
        }
        Formula::Rel(_, args) => args.iter().for_each(|a| in_term(a, out)),
        Formula::Not(f) => every_var(f, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            every_var(a, out);
            every_var(b, out);
        }
        Formula::Exists(v, f) | Formula::Forall(v, f) => {
            out.insert(*v);
            every_var(f, out);
        }
    }
}

/// Rewrites `sentence` into the base language by existential abstraction:
/// each witness constant it mentions (transitively, through the accepted
/// constraints) becomes a fresh quantified variable, constrained by every
/// accepted sentence about that witness, and the oracle decides the
/// result.
fn pool_constants_in(phi: &Formula, index: &BTreeMap<String, usize>, out: &mut BTreeSet<usize>) {
    fn in_term(t: &Term, index: &BTreeMap<String, usize>, out: &mut BTreeSet<usize>) {
        match t {
            Term::Const(c) => {
                if let Some(&i) = index.get(c.as_str()) {
                    out.insert(i);
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| in_term(a, index, out)),
            Term::Var(_) | Term::Num(_) => {}
        }
    }
    match phi {
        Formula::Eq(l, r) => {
            in_term(l, index, out);
            in_term(r, index, out);
        }
        Formula::Rel(_, args) => args.iter().for_each(|a| in_term(a, index, out)),
        Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => {
            pool_constants_in(f, index, out)
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            pool_constants_in(a, index, out);
            pool_constants_in(b, index, out);
        }
    }
}

/// Index of the accepted facts, bucketed by witness constant: the pinning
/// equalities (witness equals a closed base term) and, for the unpinned
/// witnesses, every fact mentioning them. Facts only accumulate, so the
/// index is built once and extended as verdicts land.
struct WitnessFacts {
    pool: Vec<String>,
    index: BTreeMap<String, usize>,
    pins: BTreeMap<usize, Term>,
    facts_by_constant: BTreeMap<usize, Vec<Formula>>,
}

impl WitnessFacts {
    fn build<'a>(accepted: impl IntoIterator<Item = &'a Formula>, pool: &[String]) -> Self {
        let mut view = WitnessFacts {
            pool: pool.to_vec(),
            index: pool
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i))
                .collect(),
            pins: BTreeMap::new(),
            facts_by_constant: BTreeMap::new(),
        };
        for fact in accepted {
            view.insert(fact);
        }
        view
    }

    fn insert(&mut self, fact: &Formula) {
        let mut mentioned = BTreeSet::new();
        pool_constants_in(fact, &self.index, &mut mentioned);
        if mentioned.is_empty() {
            return;
        }
        if let Formula::Eq(Term::Const(c), t) | Formula::Eq(t, Term::Const(c)) = fact {
            if let Some(&i) = self.index.get(c.as_str()) {
                let mut in_t = BTreeSet::new();
                pool_constants_in(&Formula::Eq(t.clone(), t.clone()), &self.index, &mut in_t);
                if t.is_closed() && in_t.is_empty() {
                    self.pins.entry(i).or_insert_with(|| t.clone());
                }
            }
        }
        for i in mentioned {
            self.facts_by_constant
                .entry(i)
                .or_default()
                .push(fact.clone());
        }
    }

    /// Replaces every pinned witness constant by its closed base term.
    /// Sound because the completion committed to the pinning equality;
    /// keeps the abstraction's quantifier prefix short.
    fn substitute_pins(&self, phi: &Formula) -> Formula {
        let mut phi = phi.clone();
        loop {
            let mut mentioned = BTreeSet::new();
            pool_constants_in(&phi, &self.index, &mut mentioned);
            match mentioned
                .iter()
                .find_map(|i| self.pins.get(i).map(|t| (*i, t)))
            {
                Some((i, t)) => phi = replace_constant(&phi, &self.pool[i], t),
                None => break phi,
            }
        }
    }
}

fn decide_with_elimination(
    oracle: &dyn TheoryOracle,
    accepted: &BTreeSet<Formula>,
    pool: &[String],
    sentence: &Formula,
) -> Result<bool, HenkinError> {
    decide_with_facts(oracle, &WitnessFacts::build(accepted, pool), sentence)
}

fn decide_with_facts(
    oracle: &dyn TheoryOracle,
    view: &WitnessFacts,
    sentence: &Formula,
) -> Result<bool, HenkinError> {
    let sentence = &view.substitute_pins(sentence);

    let mut mentioned = BTreeSet::new();
    pool_constants_in(sentence, &view.index, &mut mentioned);
    let mut needed: Vec<usize> = Vec::new();
    let mut frontier: Vec<usize> = mentioned.into_iter().collect();
    let mut constraints: Vec<Formula> = Vec::new();
    while let Some(i) = frontier.pop() {
        if needed.contains(&i) {
            continue;
        }
        needed.push(i);
        for fact in view.facts_by_constant.get(&i).into_iter().flatten() {
            let fact = view.substitute_pins(fact);
            if !constraints.contains(&fact) {
                let mut in_fact = BTreeSet::new();
                pool_constants_in(&fact, &view.index, &mut in_fact);
                frontier.extend(in_fact);
                constraints.push(fact);
            }
        }
    }
    if needed.is_empty() {
        return oracle
            .decide(sentence)
            .map_err(|reason| HenkinError::Oracle {
                sentence: sentence.to_string(),
                reason,
            });
    }
    needed.sort_unstable();
    let mut vars = BTreeSet::new();
    every_var(sentence, &mut vars);
    for c in &constraints {
        every_var(c, &mut vars);
    }
    let first_fresh = vars.iter().next_back().map_or(0, |v| v + 1);
    let mut body = sentence.clone();
    for c in &constraints {
        body = Formula::and(c.clone(), body);
    }
    for (offset, &i) in needed.iter().enumerate() {
        body = replace_constant(&body, &view.pool[i], &Term::Var(first_fresh + offset));
    }
    let mut closed = body;
    for (offset, _) in needed.iter().enumerate().rev() {
        closed = Formula::exists(first_fresh + offset, closed);
    }
    oracle
        .decide(&closed)
        .map_err(|reason| HenkinError::Oracle {
            sentence: closed.to_string(),
            reason,
        })
}

/// Runs the completion: `depth` rounds, each enumerating every closed
/// sentence of the current (witness-extended) signature up to `size_cap`
/// nodes and deciding the ones not yet considered; accepted existentials
/// allocate fresh witness constants and enqueue their instances within
/// the same round.
pub fn henkin_extend(
    oracle: &dyn TheoryOracle,
    depth: usize,
    size_cap: usize,
) -> Result<HenkinState, HenkinError> {
    let base = oracle.signature().clone();
    let mut state = HenkinState {
        base: base.clone(),
        signature: base,
        accepted: BTreeSet::new(),
        witnesses: Vec::new(),
        constant_pool: Vec::new(),
        considered: Vec::new(),
        depth,
        size_cap,
    };
    let mut seen: BTreeSet<Formula> = BTreeSet::new();
    for _round in 0..depth {
        let mut queue: VecDeque<Formula> = closed_sentences(&state.signature, size_cap)
            .into_iter()
            .filter(|s| !seen.contains(s))
            .collect();
        while let Some(sentence) = queue.pop_front() {
            if !seen.insert(sentence.clone()) {
                continue;
            }
            state.considered.push(sentence.clone());
            let verdict =
                decide_with_elimination(oracle, &state.accepted, &state.constant_pool, &sentence)?;
            let chosen = if verdict {
                sentence.clone()
            } else {
                negated_canonical(&sentence)
            };
            let clash = negated_canonical(&chosen);
            if state.accepted.contains(&clash) {
                return Err(HenkinError::Inconsistent {
                    sentence: clash.to_string(),
                    negation: chosen.to_string(),
                });
            }
            if !state.accepted.insert(chosen.clone()) {
                continue;
            }
            if let Formula::Exists(v, body) = &chosen {
                if state.witness_for(&chosen).is_none() {
                    let name = fresh_constant_name(&state.signature);
                    state.signature = state
                        .signature
                        .with_extra_constants(std::slice::from_ref(&name))?;
                    let instance = body.substitute(*v, &Term::Const(name.clone()));
                    state.witnesses.push(WitnessEntry {
                        existential: chosen.clone(),
                        constant: name.clone(),
                        instance: instance.clone(),
                    });
                    state.constant_pool.push(name);
                    queue.push_back(instance);
                }
            }
        }
    }
    Ok(state)
}

fn fresh_constant_name(sig: &Signature) -> String {
    (0..)
        .map(|i| format!("c{i}"))
        .find(|name| !sig.has_constant(name))
        .expect("some index is unused")
}

// ---------------------------------------------------------------------------
// Term model
// ---------------------------------------------------------------------------

/// One equivalence class of closed terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermClass {
    /// Member terms in enumeration order, as canonical text.
    pub terms: Vec<String>,
    /// The arithmetic value of a pure base-language member, if one is in
    /// the class.
    pub value: Option<u64>,
}

/// The quotient of the closed terms (base terms up to the size cap, plus
/// the witness constants) by oracle-decided equality, with the induced
/// partial operations. Sums that leave the carrier are reported as
/// absent, never invented.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermModel {
    pub classes: Vec<TermClass>,
    /// Constant symbol to class, witnesses included.
    pub constants: BTreeMap<String, usize>,
    /// Class-level addition, indexed `[a][b]`; `None` when no carrier
    /// class holds the sum.
    pub add: Vec<Vec<Option<usize>>>,
    /// Class-level strict order, indexed `[a][b]`.
    pub less: Vec<Vec<bool>>,
}

impl TermModel {
    pub fn class_of(&self, term_text: &str) -> Option<usize> {
        self.classes
            .iter()
            .position(|c| c.terms.iter().any(|t| t == term_text))
    }

    pub fn class_with_value(&self, value: u64) -> Option<usize> {
        self.classes.iter().position(|c| c.value == Some(value))
    }

    fn eval_term(&self, t: &Term) -> Option<usize> {
        match t {
            Term::Var(_) => None,
            Term::Const(c) => self.constants.get(c).copied(),
            Term::Num(n) => self.class_with_value(u64::try_from(n).ok()?),
            Term::App(f, args) if f == "+" && args.len() == 2 => {
                let a = self.eval_term(&args[0])?;
                let b = self.eval_term(&args[1])?;
                *self.add.get(a)?.get(b)?
            }
            Term::App(..) => None,
        }
    }

    /// Evaluates a closed quantifier-free sentence over the quotient.
    /// `None` wherever the carrier is insufficient: a term leaves it, a
    /// symbol is not interpreted, or a quantifier appears (the carrier is
    /// finite, so quantifying over it says nothing about the full model).
    pub fn eval_closed(&self, sentence: &Formula) -> Option<bool> {
        match sentence {
            Formula::Eq(l, r) => Some(self.eval_term(l)? == self.eval_term(r)?),
            Formula::Rel(name, args) if name == "<" && args.len() == 2 => {
                let a = self.eval_term(&args[0])?;
                let b = self.eval_term(&args[1])?;
                Some(*self.less.get(a)?.get(b)?)
            }
            Formula::Rel(..) => None,
            Formula::Not(f) => Some(!self.eval_closed(f)?),
            Formula::And(a, b) => Some(self.eval_closed(a)? && self.eval_closed(b)?),
            Formula::Or(a, b) => Some(self.eval_closed(a)? || self.eval_closed(b)?),
            Formula::Implies(a, b) => Some(!self.eval_closed(a)? || self.eval_closed(b)?),
            Formula::Exists(..) | Formula::Forall(..) => None,
        }
    }
}

impl fmt::Display for TermModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, class) in self.classes.iter().enumerate() {
            let value = class.value.map_or("?".to_string(), |v| v.to_string());
            writeln!(f, "[{i}] value {value}: {}", class.terms.join(" = "))?;
        }
        Ok(())
    }
}

fn base_term_value(t: &Term) -> Option<u64> {
    match t {
        Term::Const(c) if c == "0" => Some(0),
        Term::Const(c) if c == "1" => Some(1),
        Term::Const(_) | Term::Var(_) => None,
        Term::Num(n) => u64::try_from(n).ok(),
        Term::App(f, args) if f == "+" && args.len() == 2 => {
            Some(base_term_value(&args[0])? + base_term_value(&args[1])?)
        }
        Term::App(..) => None,
    }
}

/// Largest numeral tried when pinning a witness constant to a value.
const PIN_VALUE_BOUND: u64 = 64;

/// Quotients the closed terms by equality, deciding each candidate
/// equality through the oracle (with witness elimination) and threading
/// the answers into the constraint set so that later decisions stay
/// consistent with earlier ones. Witnesses left unpinned by the completion
/// are first pinned to the least numeral consistent with the accepted
/// facts, so every later query is a substitution away from the base
/// language. The carrier is the base-language closed terms up to the
/// state's size cap plus the witness constants; induced `+` and `<` come
/// from the same oracle.
pub fn term_model(
    state: &HenkinState,
    oracle: &dyn TheoryOracle,
) -> Result<TermModel, HenkinError> {
    let mut terms = closed_terms(&state.base, state.size_cap);
    terms.extend(state.constant_pool.iter().cloned().map(Term::Const));
    terms.sort_by_key(|t| (t.size(), t.to_string()));

    let mut facts = state.accepted.clone();
    let mut view = WitnessFacts::build(&state.accepted, &state.constant_pool);
    let decide = |view: &mut WitnessFacts,
                  facts: &mut BTreeSet<Formula>,
                  sentence: Formula|
     -> Result<bool, HenkinError> {
        let verdict = decide_with_facts(oracle, view, &sentence)?;
        let chosen = if verdict {
            sentence
        } else {
            negated_canonical(&sentence)
        };
        if facts.insert(chosen.clone()) {
            view.insert(&chosen);
        }
        Ok(verdict)
    };

    for i in 0..state.constant_pool.len() {
        if view.pins.contains_key(&i) {
            continue;
        }
        let constant = Term::Const(state.constant_pool[i].clone());
        for v in 0..=PIN_VALUE_BOUND {
            let candidate = Formula::Eq(constant.clone(), Term::Num(v.into()));
            if decide(&mut view, &mut facts, candidate)? {
                break;
            }
        }
    }

    let mut class_of_term: Vec<usize> = Vec::with_capacity(terms.len());
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, term) in terms.iter().enumerate() {
        let mut found = None;
        for (k, members) in classes.iter().enumerate() {
            let rep = &terms[members[0]];
            if decide(
                &mut view,
                &mut facts,
                Formula::Eq(term.clone(), rep.clone()),
            )? {
                found = Some(k);
                break;
            }
        }
        match found {
            Some(k) => {
                classes[k].push(i);
                class_of_term.push(k);
            }
            None => {
                class_of_term.push(classes.len());
                classes.push(vec![i]);
            }
        }
    }

    let reps: Vec<Term> = classes.iter().map(|m| terms[m[0]].clone()).collect();
    let n = reps.len();
    let mut add = vec![vec![None; n]; n];
    let mut less = vec![vec![false; n]; n];
    if state.base.function_arity("+") == Some(2) {
        for a in 0..n {
            for b in 0..n {
                let sum = Term::App("+".into(), vec![reps[a].clone(), reps[b].clone()]);
                for (k, rk) in reps.iter().enumerate() {
                    if decide(&mut view, &mut facts, Formula::Eq(sum.clone(), rk.clone()))? {
                        add[a][b] = Some(k);
                        break;
                    }
                }
            }
        }
    } else {
        add.clear();
    }
    if state.base.relation_arity("<") == Some(2) {
        for a in 0..n {
            for b in 0..n {
                let atom = Formula::Rel("<".into(), vec![reps[a].clone(), reps[b].clone()]);
                less[a][b] = decide(&mut view, &mut facts, atom)?;
            }
        }
    } else {
        less.clear();
    }

    let mut constants = BTreeMap::new();
    for name in state.signature.constants() {
        if let Some(i) = terms.iter().position(|t| t == &Term::Const(name.clone())) {
            constants.insert(name.clone(), class_of_term[i]);
        }
    }
    let term_value = |t: &Term| -> Option<u64> {
        if let Term::Const(c) = t {
            if let Some(&i) = view.index.get(c.as_str()) {
                return view.pins.get(&i).and_then(base_term_value);
            }
        }
        base_term_value(t)
    };
    let classes = classes
        .into_iter()
        .map(|members| TermClass {
            value: members.iter().find_map(|&i| term_value(&terms[i])),
            terms: members.iter().map(|&i| terms[i].to_string()).collect(),
        })
        .collect();
    Ok(TermModel {
        classes,
        constants,
        add,
        less,
    })
}
