//! Tarskian satisfaction: exact evaluation over finite structures,
//! budgeted three-valued evaluation over the standard naturals, and an
//! auditor checking candidate truth sets against the recursive truth
//! conditions for atomic sentences, conjunction, negation, and the
//! existential quantifier.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coding::{pair, Coder, CodingError};
use crate::syntax::{numeral, Formula, Signature, SyntaxError, Term, VarId};

/// Errors from structure construction and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("variable {0} is not assigned")]
    UnassignedVariable(VarId),
    #[error("symbol `{0}` has no interpretation here")]
    UnknownSymbol(String),
    #[error("truth predicate level {found} is not available in a level-{max} language")]
    LevelViolation { found: usize, max: usize },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid corpus entry {code}: {reason}")]
    InvalidCorpus { code: BigUint, reason: String },
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Three-valued verdict for evaluation over the naturals. `Unknown`
/// records the quantifier/dereference depth at which the budget gave out.
/// Finite-structure evaluation never produces `Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TruthValue3 {
    True,
    False,
    Unknown { at_depth: usize },
}

impl TruthValue3 {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TruthValue3::True
        } else {
            TruthValue3::False
        }
    }

    /// `Some(bool)` when determined, `None` on `Unknown`.
    pub fn determined(self) -> Option<bool> {
        match self {
            TruthValue3::True => Some(true),
            TruthValue3::False => Some(false),
            TruthValue3::Unknown { .. } => None,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            TruthValue3::True => TruthValue3::False,
            TruthValue3::False => TruthValue3::True,
            u => u,
        }
    }

    /// Kleene conjunction: false dominates unknown.
    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (TruthValue3::False, _) | (_, TruthValue3::False) => TruthValue3::False,
            (TruthValue3::True, o) => o,
            (s, TruthValue3::True) => s,
            (TruthValue3::Unknown { at_depth: a }, TruthValue3::Unknown { at_depth: b }) => {
                TruthValue3::Unknown { at_depth: a.min(b) }
            }
        }
    }

    /// Kleene disjunction: true dominates unknown.
    pub fn or(self, other: Self) -> Self {
        self.negate().and(other.negate()).negate()
    }
}

impl fmt::Display for TruthValue3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthValue3::True => write!(f, "true"),
            TruthValue3::False => write!(f, "false"),
            TruthValue3::Unknown { at_depth } => write!(f, "unknown (depth {at_depth})"),
        }
    }
}

/// Resource budget for evaluation over the naturals: `witness_bound` caps
/// quantifier searches, `depth_bound` caps quantifier/Tr-dereference
/// nesting. Both must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub witness_bound: u64,
    pub depth_bound: usize,
}

impl Budget {
    pub fn new(witness_bound: u64, depth_bound: usize) -> Self {
        assert!(
            witness_bound > 0 && depth_bound > 0,
            "budget bounds must be positive"
        );
        Budget {
            witness_bound,
            depth_bound,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            witness_bound: 64,
            depth_bound: 12,
        }
    }
}

/// Variable assignment over a finite domain.
pub type FiniteAssignment = BTreeMap<VarId, usize>;
/// Variable assignment over the naturals.
pub type NatAssignment = BTreeMap<VarId, BigUint>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct FunctionTable {
    arity: usize,
    /// Flat row-major table: index = Σ args[i] · size^(arity−1−i).
    table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RelationSet {
    arity: usize,
    tuples: BTreeSet<Vec<usize>>,
}

/// An explicit finite structure: domain `{0 .. size−1}` with total
/// interpretation tables for every symbol of its signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StructureDoc", into = "StructureDoc")]
pub struct FiniteStructure {
    size: usize,
    sig: Signature,
    constants: BTreeMap<String, usize>,
    functions: BTreeMap<String, FunctionTable>,
    relations: BTreeMap<String, RelationSet>,
}

/// The serialized form: the signature (which fixes symbol order, and with
/// it the structure's coding of formulas) plus the interpretation maps.
#[derive(Serialize, Deserialize)]
struct StructureDoc {
    size: usize,
    signature: Signature,
    constants: BTreeMap<String, usize>,
    functions: BTreeMap<String, FunctionTable>,
    relations: BTreeMap<String, RelationSet>,
}

impl From<FiniteStructure> for StructureDoc {
    fn from(s: FiniteStructure) -> Self {
        StructureDoc {
            size: s.size,
            signature: s.sig,
            constants: s.constants,
            functions: s.functions,
            relations: s.relations,
        }
    }
}

impl TryFrom<StructureDoc> for FiniteStructure {
    type Error = SemanticsError;

    fn try_from(doc: StructureDoc) -> Result<Self, Self::Error> {
        FiniteStructure::new(
            doc.size,
            doc.signature,
            doc.constants,
            {
                doc.functions
                    .into_iter()
                    .map(|(n, t)| (n, t.arity, t.table))
                    .collect()
            },
            {
                doc.relations
                    .into_iter()
                    .map(|(n, r)| (n, r.arity, r.tuples.into_iter().collect()))
                    .collect()
            },
        )
    }
}

impl FiniteStructure {
    /// Builds and validates a structure. Every signature symbol must be
    /// interpreted, tables must be total, and all values must lie in the
    /// domain.
    pub fn new(
        size: usize,
        sig: Signature,
        constants: BTreeMap<String, usize>,
        functions: Vec<(String, usize, Vec<usize>)>,
        relations: Vec<(String, usize, Vec<Vec<usize>>)>,
    ) -> Result<Self, SemanticsError> {
        let bad = |msg: String| Err(SemanticsError::InvalidStructure(msg));
        if size == 0 {
            return bad("domain must be nonempty".into());
        }
        for name in sig.constants() {
            match constants.get(name) {
                None => return bad(format!("constant `{name}` uninterpreted")),
                Some(&v) if v >= size => return bad(format!("constant `{name}` out of domain")),
                _ => {}
            }
        }
        if constants.len() != sig.constants().len() {
            return bad("extra constant interpretations".into());
        }
        let mut fmap = BTreeMap::new();
        for (name, arity, table) in functions {
            match sig.function_arity(&name) {
                Some(a) if a == arity => {}
                Some(a) => {
                    return bad(format!(
                        "function `{name}` declared arity {a}, table arity {arity}"
                    ))
                }
                None => return bad(format!("function `{name}` not in signature")),
            }
            let expected = size.checked_pow(arity as u32).unwrap_or(usize::MAX);
            if table.len() != expected {
                return bad(format!(
                    "function `{name}` table has {} entries, needs {expected}",
                    table.len()
                ));
            }
            if table.iter().any(|&v| v >= size) {
                return bad(format!("function `{name}` maps outside the domain"));
            }
            fmap.insert(name, FunctionTable { arity, table });
        }
        if fmap.len() != sig.functions().len() {
            return bad("missing function interpretations".into());
        }
        let mut rmap = BTreeMap::new();
        for (name, arity, tuples) in relations {
            match sig.relation_arity(&name) {
                Some(a) if a == arity => {}
                Some(a) => {
                    return bad(format!(
                        "relation `{name}` declared arity {a}, tuples arity {arity}"
                    ))
                }
                None => return bad(format!("relation `{name}` not in signature")),
            }
            let mut set = BTreeSet::new();
            for t in tuples {
                if t.len() != arity || t.iter().any(|&v| v >= size) {
                    return bad(format!("relation `{name}` holds a bad tuple {t:?}"));
                }
                set.insert(t);
            }
            rmap.insert(name, RelationSet { arity, tuples: set });
        }
        if rmap.len() != sig.relations().len() {
            return bad("missing relation interpretations".into());
        }
        Ok(FiniteStructure {
            size,
            sig,
            constants,
            functions: fmap,
            relations: rmap,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn function_value(&self, name: &str, args: &[usize]) -> Option<usize> {
        let t = self.functions.get(name)?;
        if args.len() != t.arity || args.iter().any(|&a| a >= self.size) {
            return None;
        }
        let idx = args.iter().fold(0usize, |acc, &a| acc * self.size + a);
        t.table.get(idx).copied()
    }

    pub fn relation_holds(&self, name: &str, tuple: &[usize]) -> Option<bool> {
        let r = self.relations.get(name)?;
        if tuple.len() != r.arity {
            return None;
        }
        Some(r.tuples.contains(tuple))
    }

    pub fn relation_tuples(&self, name: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.relations.get(name).map(|r| &r.tuples)
    }

    /// Replaces one relation's tuple set (used to build structure variants
    /// that agree everywhere else).
    pub fn with_relation_tuples(
        &self,
        name: &str,
        tuples: BTreeSet<Vec<usize>>,
    ) -> Result<Self, SemanticsError> {
        let mut out = self.clone();
        let r = out
            .relations
            .get_mut(name)
            .ok_or_else(|| SemanticsError::UnknownSymbol(name.into()))?;
        for t in &tuples {
            if t.len() != r.arity || t.iter().any(|&v| v >= out.size) {
                return Err(SemanticsError::InvalidStructure(format!("bad tuple {t:?}")));
            }
        }
        r.tuples = tuples;
        Ok(out)
    }

    /// The value of the numeral for `n`: the fold of the `+` table over
    /// `n` ones. Computed by cycle detection so astronomically large `n`
    /// cost only a modular reduction.
    pub fn numeral_value(&self, n: &BigUint) -> Result<usize, SemanticsError> {
        let zero = self
            .constant("0")
            .ok_or_else(|| SemanticsError::UnknownSymbol("0".into()))?;
        if n.is_zero() {
            return Ok(zero);
        }
        let one = self
            .constant("1")
            .ok_or_else(|| SemanticsError::UnknownSymbol("1".into()))?;
        // values[k] = value of the numeral for k+1 (1, then 1+already).
        let mut values = vec![one];
        let mut seen: BTreeMap<usize, usize> = BTreeMap::from([(one, 0)]);
        loop {
            let last = *values.last().unwrap();
            let next = self
                .function_value("+", &[one, last])
                .ok_or_else(|| SemanticsError::UnknownSymbol("+".into()))?;
            if let Some(&start) = seen.get(&next) {
                let preperiod = start;
                let period = values.len() - start;
                let idx = if let Some(k) = n.to_usize().filter(|k| *k <= values.len()) {
                    k - 1
                } else {
                    let n1 = n - 1u32;
                    let off = (&n1 - preperiod) % period;
                    preperiod + off.to_usize().unwrap()
                };
                return Ok(values[idx]);
            }
            seen.insert(next, values.len());
            values.push(next);
        }
    }

    /// Extends the structure with fresh constants naming every element;
    /// returns the extension and the names, indexed by element.
    pub fn with_element_constants(&self) -> Result<(FiniteStructure, Vec<String>), SemanticsError> {
        let mut names = Vec::with_capacity(self.size);
        for d in 0..self.size {
            let mut name = format!("elem{d}");
            while self.sig.constants().iter().any(|c| c == &name)
                || self.sig.function_arity(&name).is_some()
                || self.sig.relation_arity(&name).is_some()
            {
                name.push('_');
            }
            names.push(name);
        }
        let sig = self.sig.with_extra_constants(&names)?;
        let mut constants = self.constants.clone();
        for (d, name) in names.iter().enumerate() {
            constants.insert(name.clone(), d);
        }
        let out = FiniteStructure {
            size: self.size,
            sig,
            constants,
            ..self.clone()
        };
        Ok((out, names))
    }
}

/// Evaluates a term in a finite structure.
pub fn eval_term_finite(
    s: &FiniteStructure,
    t: &Term,
    asg: &FiniteAssignment,
) -> Result<usize, SemanticsError> {
    match t {
        Term::Var(v) => asg
            .get(v)
            .copied()
            .ok_or(SemanticsError::UnassignedVariable(*v)),
        Term::Const(c) => s
            .constant(c)
            .ok_or_else(|| SemanticsError::UnknownSymbol(c.clone())),
        Term::Num(n) => s.numeral_value(n),
        Term::App(f, args) => {
            let vals = args
                .iter()
                .map(|a| eval_term_finite(s, a, asg))
                .collect::<Result<Vec<_>, _>>()?;
            s.function_value(f, &vals)
                .ok_or_else(|| SemanticsError::UnknownSymbol(f.clone()))
        }
    }
}

/// Exact Tarskian evaluation over a finite structure; quantifiers range
/// over the whole domain.
pub fn eval_finite(
    s: &FiniteStructure,
    phi: &Formula,
    asg: &FiniteAssignment,
) -> Result<bool, SemanticsError> {
    match phi {
        Formula::Eq(l, r) => Ok(eval_term_finite(s, l, asg)? == eval_term_finite(s, r, asg)?),
        Formula::Rel(r, args) => {
            let vals = args
                .iter()
                .map(|a| eval_term_finite(s, a, asg))
                .collect::<Result<Vec<_>, _>>()?;
            s.relation_holds(r, &vals)
                .ok_or_else(|| SemanticsError::UnknownSymbol(r.clone()))
        }
        Formula::Not(f) => Ok(!eval_finite(s, f, asg)?),
        Formula::And(a, b) => Ok(eval_finite(s, a, asg)? && eval_finite(s, b, asg)?),
        Formula::Or(a, b) => Ok(eval_finite(s, a, asg)? || eval_finite(s, b, asg)?),
        Formula::Implies(a, b) => Ok(!eval_finite(s, a, asg)? || eval_finite(s, b, asg)?),
        Formula::Exists(v, f) => {
            let mut inner = asg.clone();
            for d in 0..s.size() {
                inner.insert(*v, d);
                if eval_finite(s, f, &inner)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Forall(v, f) => {
            let mut inner = asg.clone();
            for d in 0..s.size() {
                inner.insert(*v, d);
                if !eval_finite(s, f, &inner)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Independent reference evaluator: rewrites every quantifier into an
/// explicit disjunction/conjunction over element constants, then runs a
/// quantifier-free evaluator that shares no code with [`eval_finite`]'s
/// quantifier clauses. Used to audit the main evaluator.
pub fn eval_finite_expansion(
    s: &FiniteStructure,
    phi: &Formula,
    asg: &FiniteAssignment,
) -> Result<bool, SemanticsError> {
    let (ext, names) = s.with_element_constants()?;
    // Name the assignment's values, then expand quantifiers syntactically.
    let mut grounded = phi.clone();
    for (&v, &d) in asg {
        grounded = grounded.substitute(v, &Term::Const(names[d].clone()));
    }
    fn expand(phi: &Formula, names: &[String]) -> Formula {
        match phi {
            Formula::Eq(..) | Formula::Rel(..) => phi.clone(),
            Formula::Not(f) => Formula::not(expand(f, names)),
            Formula::And(a, b) => Formula::and(expand(a, names), expand(b, names)),
            Formula::Or(a, b) => Formula::or(expand(a, names), expand(b, names)),
            Formula::Implies(a, b) => Formula::implies(expand(a, names), expand(b, names)),
            Formula::Exists(v, f) => names
                .iter()
                .map(|n| expand(&f.substitute(*v, &Term::Const(n.clone())), names))
                .reduce(Formula::or)
                .expect("nonempty domain"),
            Formula::Forall(v, f) => names
                .iter()
                .map(|n| expand(&f.substitute(*v, &Term::Const(n.clone())), names))
                .reduce(Formula::and)
                .expect("nonempty domain"),
        }
    }
    fn eval_qf(s: &FiniteStructure, phi: &Formula) -> Result<bool, SemanticsError> {
        let empty = FiniteAssignment::new();
        match phi {
            Formula::Eq(l, r) => {
                Ok(eval_term_finite(s, l, &empty)? == eval_term_finite(s, r, &empty)?)
            }
            Formula::Rel(r, args) => {
                let vals = args
                    .iter()
                    .map(|a| eval_term_finite(s, a, &empty))
                    .collect::<Result<Vec<_>, _>>()?;
                s.relation_holds(r, &vals)
                    .ok_or_else(|| SemanticsError::UnknownSymbol(r.clone()))
            }
            Formula::Not(f) => Ok(!eval_qf(s, f)?),
            Formula::And(a, b) => Ok(eval_qf(s, a)? && eval_qf(s, b)?),
            Formula::Or(a, b) => Ok(eval_qf(s, a)? || eval_qf(s, b)?),
            Formula::Implies(a, b) => Ok(!eval_qf(s, a)? || eval_qf(s, b)?),
            Formula::Exists(..) | Formula::Forall(..) => {
                unreachable!("expansion removed all quantifiers")
            }
        }
    }
    eval_qf(&ext, &expand(&grounded, &names))
}

/// Evaluates a closed-or-assigned term over the naturals. `sub` and
/// `pair`, when the signature declares them, are interpreted by the coding
/// layer's arithmetized substitution and Cantor pairing.
pub fn eval_term_nat(
    t: &Term,
    asg: &NatAssignment,
    sig: &Signature,
) -> Result<BigUint, SemanticsError> {
    match t {
        Term::Var(v) => asg
            .get(v)
            .cloned()
            .ok_or(SemanticsError::UnassignedVariable(*v)),
        Term::Const(c) => match c.as_str() {
            "0" if sig.has_constant("0") => Ok(BigUint::zero()),
            "1" if sig.has_constant("1") => Ok(BigUint::from(1u32)),
            _ => Err(SemanticsError::UnknownSymbol(c.clone())),
        },
        Term::Num(n) => Ok(n.clone()),
        Term::App(f, args) => {
            if sig.function_arity(f) != Some(args.len()) {
                return Err(SemanticsError::UnknownSymbol(f.clone()));
            }
            let vals = args
                .iter()
                .map(|a| eval_term_nat(a, asg, sig))
                .collect::<Result<Vec<_>, _>>()?;
            match f.as_str() {
                "+" => Ok(&vals[0] + &vals[1]),
                "*" => Ok(&vals[0] * &vals[1]),
                "sub" => Ok(Coder::new(sig).sub_value(&vals[0], &vals[1])),
                "pair" => Ok(pair(&vals[0], &vals[1])),
                _ => Err(SemanticsError::UnknownSymbol(f.clone())),
            }
        }
    }
}

fn closed_term_value(t: &Term, sig: &Signature) -> Option<BigUint> {
    if !t.is_closed() {
        return None;
    }
    eval_term_nat(t, &NatAssignment::new(), sig).ok()
}

/// When `body` has the shape `v < t ∧ rest` (existential) with `t`
/// closed, returns `t`.
fn exists_bound(v: VarId, body: &Formula) -> Option<&Term> {
    if let Formula::And(l, _) = body {
        if let Formula::Rel(r, args) = &**l {
            if r == "<" && args.len() == 2 && args[0] == Term::Var(v) && args[1].is_closed() {
                return Some(&args[1]);
            }
        }
    }
    None
}

/// When `body` has the shape `v < t → rest` (universal) with `t` closed,
/// returns `t`.
fn forall_bound(v: VarId, body: &Formula) -> Option<&Term> {
    if let Formula::Implies(l, _) = body {
        if let Formula::Rel(r, args) = &**l {
            if r == "<" && args.len() == 2 && args[0] == Term::Var(v) && args[1].is_closed() {
                return Some(&args[1]);
            }
        }
    }
    None
}

struct NatEvaluator<'a> {
    sig: &'a Signature,
    budget: Budget,
}

impl<'a> NatEvaluator<'a> {
    /// `depth` counts quantifier nestings and truth-predicate
    /// dereferences consumed so far.
    fn eval(
        &self,
        phi: &Formula,
        asg: &NatAssignment,
        depth: usize,
    ) -> Result<TruthValue3, SemanticsError> {
        match phi {
            Formula::Eq(l, r) => Ok(TruthValue3::from_bool(
                eval_term_nat(l, asg, self.sig)? == eval_term_nat(r, asg, self.sig)?,
            )),
            Formula::Rel(r, args) if r == "<" && args.len() == 2 => Ok(TruthValue3::from_bool(
                eval_term_nat(&args[0], asg, self.sig)? < eval_term_nat(&args[1], asg, self.sig)?,
            )),
            Formula::Rel(r, args) => {
                let j = Signature::truth_predicate_level(r)
                    .filter(|_| args.len() == 1)
                    .ok_or_else(|| SemanticsError::UnknownSymbol(r.clone()))?;
                if j >= self.sig.level() {
                    return Err(SemanticsError::LevelViolation {
                        found: j,
                        max: self.sig.level(),
                    });
                }
                if depth >= self.budget.depth_bound {
                    return Ok(TruthValue3::Unknown { at_depth: depth });
                }
                let value = eval_term_nat(&args[0], asg, self.sig)?;
                let lower = Signature::with_truth_levels(j);
                match Coder::new(&lower).decode(&value) {
                    Ok(sentence) if sentence.is_sentence() => {
                        let inner = NatEvaluator {
                            sig: &lower,
                            budget: self.budget,
                        };
                        inner.eval(&sentence, &NatAssignment::new(), depth + 1)
                    }
                    // Not the code of a level-j sentence: the predicate is
                    // total and simply does not hold.
                    _ => Ok(TruthValue3::False),
                }
            }
            Formula::Not(f) => Ok(self.eval(f, asg, depth)?.negate()),
            Formula::And(a, b) => {
                let l = self.eval(a, asg, depth)?;
                if l == TruthValue3::False {
                    return Ok(TruthValue3::False);
                }
                Ok(l.and(self.eval(b, asg, depth)?))
            }
            Formula::Or(a, b) => {
                let l = self.eval(a, asg, depth)?;
                if l == TruthValue3::True {
                    return Ok(TruthValue3::True);
                }
                Ok(l.or(self.eval(b, asg, depth)?))
            }
            Formula::Implies(a, b) => {
                let l = self.eval(a, asg, depth)?;
                if l == TruthValue3::False {
                    return Ok(TruthValue3::True);
                }
                Ok(l.negate().or(self.eval(b, asg, depth)?))
            }
            Formula::Exists(v, f) => self.eval_exists(*v, f, asg, depth),
            Formula::Forall(v, f) => self.eval_forall(*v, f, asg, depth),
        }
    }

    /// The candidate range for a quantifier: the full `0..bound` range
    /// when a syntactic bound `v < t` with closed `t` evaluates to at most
    /// `witness_bound` (search is then exhaustive and both verdicts are
    /// reachable), otherwise `0..=witness_bound` (search only; the
    /// non-witnessed verdict degrades to unknown).
    fn quantifier_range(&self, bound: Option<&Term>) -> (u64, bool) {
        if let Some(t) = bound {
            if let Some(val) = closed_term_value(t, self.sig) {
                if let Some(v) = val.to_u64() {
                    if v <= self.budget.witness_bound {
                        return (v, true);
                    }
                }
            }
        }
        (self.budget.witness_bound + 1, false)
    }

    fn eval_exists(
        &self,
        v: VarId,
        body: &Formula,
        asg: &NatAssignment,
        depth: usize,
    ) -> Result<TruthValue3, SemanticsError> {
        if depth >= self.budget.depth_bound {
            return Ok(TruthValue3::Unknown { at_depth: depth });
        }
        let (range, exhaustive) = self.quantifier_range(exists_bound(v, body));
        let mut inner = asg.clone();
        let mut all_false = true;
        for n in 0..range {
            inner.insert(v, BigUint::from(n));
            match self.eval(body, &inner, depth + 1)? {
                TruthValue3::True => return Ok(TruthValue3::True),
                TruthValue3::False => {}
                TruthValue3::Unknown { .. } => all_false = false,
            }
        }
        if exhaustive && all_false {
            Ok(TruthValue3::False)
        } else {
            Ok(TruthValue3::Unknown { at_depth: depth })
        }
    }

    fn eval_forall(
        &self,
        v: VarId,
        body: &Formula,
        asg: &NatAssignment,
        depth: usize,
    ) -> Result<TruthValue3, SemanticsError> {
        if depth >= self.budget.depth_bound {
            return Ok(TruthValue3::Unknown { at_depth: depth });
        }
        let (range, exhaustive) = self.quantifier_range(forall_bound(v, body));
        let mut inner = asg.clone();
        let mut all_true = true;
        for n in 0..range {
            inner.insert(v, BigUint::from(n));
            match self.eval(body, &inner, depth + 1)? {
                TruthValue3::False => return Ok(TruthValue3::False),
                TruthValue3::True => {}
                TruthValue3::Unknown { .. } => all_true = false,
            }
        }
        if exhaustive && all_true {
            Ok(TruthValue3::True)
        } else {
            Ok(TruthValue3::Unknown { at_depth: depth })
        }
    }
}

/// Budgeted three-valued evaluation over the standard naturals.
///
/// Atomic, conjunction, and negation clauses are exact. An existential is
/// true when a witness at most `witness_bound` verifies the body, false
/// only when a syntactic bound `x < t` (`t` closed, value within the
/// witness bound) makes the search exhaustive; otherwise unknown, with
/// Kleene propagation. Universals are dual. Truth-predicate atoms `Trj(t)`
/// decode the value of `t` as a level-`j` sentence and recurse (false on
/// non-codes), consuming one unit of depth.
pub fn eval_nat(
    phi: &Formula,
    asg: &NatAssignment,
    sig: &Signature,
    budget: Budget,
) -> Result<TruthValue3, SemanticsError> {
    NatEvaluator { sig, budget }.eval(phi, asg, 0)
}

/// Which truth clause a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    Atomic,
    Conjunction,
    Negation,
    Existential,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Atomic => write!(f, "atomic"),
            Clause::Conjunction => write!(f, "conjunction"),
            Clause::Negation => write!(f, "negation"),
            Clause::Existential => write!(f, "existential"),
        }
    }
}

/// A truth-conditions violation: the clause, the sentence, and the
/// membership the clause demands versus the candidate's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: Clause,
    #[serde(with = "crate::biguint_dec")]
    pub code: BigUint,
    pub sentence: String,
    pub expected: bool,
    pub found: bool,
}

/// Result of auditing a candidate truth set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    /// Sentences whose existential clause could not be confirmed within
    /// the witness budget (never reported over finite structures).
    pub unverified: Vec<String>,
    pub sentences_checked: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Where a truth-set audit evaluates its atomic clause and draws its
/// existential instances.
pub enum AuditWorld<'a> {
    Finite(&'a FiniteStructure),
    Nat { sig: &'a Signature, budget: Budget },
}

impl<'a> AuditWorld<'a> {
    fn signature(&self) -> &Signature {
        match self {
            AuditWorld::Finite(s) => s.signature(),
            AuditWorld::Nat { sig, .. } => sig,
        }
    }
}

/// Audits a candidate set of sentence codes against the recursive truth
/// conditions over the given corpus.
///
/// The corpus must contain canonical-fragment sentences (atomic, `&`, `~`,
/// `exists`); each sentence's immediate subsentences and numeral instances
/// are derived on the fly (one closure step), with membership read from
/// the candidate set. Over a finite structure the check is exact; over the
/// naturals an existential whose membership cannot be confirmed within the
/// witness bound is reported as unverified, not as a violation.
pub fn check_truth_conditions(
    candidate: &BTreeSet<BigUint>,
    world: &AuditWorld,
    corpus: &[BigUint],
) -> Result<AuditReport, SemanticsError> {
    let sig = world.signature();
    let coder = Coder::new(sig);
    let mut report = AuditReport::default();
    for code in corpus {
        let sentence = coder
            .decode(code)
            .map_err(|e| SemanticsError::InvalidCorpus {
                code: code.clone(),
                reason: e.to_string(),
            })?;
        if !sentence.is_sentence() {
            return Err(SemanticsError::InvalidCorpus {
                code: code.clone(),
                reason: "free variables".into(),
            });
        }
        report.sentences_checked += 1;
        let found = candidate.contains(code);
        match &sentence {
            Formula::Eq(..) | Formula::Rel(..) => {
                let expected = match world {
                    AuditWorld::Finite(s) => {
                        TruthValue3::from_bool(eval_finite(s, &sentence, &FiniteAssignment::new())?)
                    }
                    AuditWorld::Nat { sig, budget } => {
                        eval_nat(&sentence, &NatAssignment::new(), sig, *budget)?
                    }
                };
                match expected.determined() {
                    Some(expected) if expected != found => report.violations.push(Violation {
                        clause: Clause::Atomic,
                        code: code.clone(),
                        sentence: sentence.to_string(),
                        expected,
                        found,
                    }),
                    Some(_) => {}
                    None => report.unverified.push(sentence.to_string()),
                }
            }
            Formula::And(a, b) => {
                let expected =
                    candidate.contains(&coder.encode(a)?) && candidate.contains(&coder.encode(b)?);
                if expected != found {
                    report.violations.push(Violation {
                        clause: Clause::Conjunction,
                        code: code.clone(),
                        sentence: sentence.to_string(),
                        expected,
                        found,
                    });
                }
            }
            Formula::Not(f) => {
                let expected = !candidate.contains(&coder.encode(f)?);
                if expected != found {
                    report.violations.push(Violation {
                        clause: Clause::Negation,
                        code: code.clone(),
                        sentence: sentence.to_string(),
                        expected,
                        found,
                    });
                }
            }
            Formula::Exists(v, f) => {
                let instance_in = |n: &BigUint| -> Result<bool, SemanticsError> {
                    let inst = f.substitute(*v, &numeral(n));
                    Ok(candidate.contains(&coder.encode(&inst)?))
                };
                match world {
                    AuditWorld::Finite(s) => {
                        let mut expected = false;
                        for d in 0..s.size() {
                            if instance_in(&BigUint::from(d))? {
                                expected = true;
                                break;
                            }
                        }
                        if expected != found {
                            report.violations.push(Violation {
                                clause: Clause::Existential,
                                code: code.clone(),
                                sentence: sentence.to_string(),
                                expected,
                                found,
                            });
                        }
                    }
                    AuditWorld::Nat { budget, .. } => {
                        let mut witnessed = false;
                        for n in 0..=budget.witness_bound {
                            if instance_in(&BigUint::from(n))? {
                                witnessed = true;
                                break;
                            }
                        }
                        if witnessed && !found {
                            report.violations.push(Violation {
                                clause: Clause::Existential,
                                code: code.clone(),
                                sentence: sentence.to_string(),
                                expected: true,
                                found,
                            });
                        } else if !witnessed && found {
                            report.unverified.push(sentence.to_string());
                        }
                    }
                }
            }
            Formula::Or(..) | Formula::Implies(..) | Formula::Forall(..) => {
                return Err(SemanticsError::InvalidCorpus {
                    code: code.clone(),
                    reason: "corpus sentences must stay in the atomic/&/~/exists fragment".into(),
                })
            }
        }
    }
    Ok(report)
}

/// The exact truth set of a finite structure over a coded corpus.
pub fn exact_truth_set(
    s: &FiniteStructure,
    corpus: &[BigUint],
) -> Result<BTreeSet<BigUint>, SemanticsError> {
    let coder = Coder::new(s.signature());
    let mut set = BTreeSet::new();
    for code in corpus {
        let sentence = coder.decode(code)?;
        if eval_finite(s, &sentence, &FiniteAssignment::new())? {
            set.insert(code.clone());
        }
    }
    Ok(set)
}

/// Report of the truth-undefinability demonstration for a candidate
/// truth-predicate formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TarskiReport {
    pub candidate: String,
    pub liar_sentence: String,
    #[serde(with = "crate::biguint_dec")]
    pub liar_code: BigUint,
    /// Digits of the liar code (the code itself is exact above).
    pub code_digits: usize,
    pub liar_verdict: TruthValue3,
    /// Verdict of `candidate(numeral(liar_code))`.
    pub applied_verdict: TruthValue3,
    pub conclusion: String,
}

impl TarskiReport {
    /// True when both sides are determined and disagree.
    pub fn disagreement_exhibited(&self) -> bool {
        matches!(
            (self.liar_verdict.determined(), self.applied_verdict.determined()),
            (Some(a), Some(b)) if a != b
        )
    }
}

/// Runs the undefinability demonstration: builds the liar sentence for the
/// candidate, evaluates the liar and the candidate-applied-to-its-code
/// under the budget, and reports the disagreement (or honest unknowns).
///
/// A candidate that evaluated its own liar sentence correctly would have
/// to satisfy `sigma` true iff `candidate(code(sigma))` false (the
/// negation clause turned against itself), so on determined instances the
/// two verdicts must differ.
pub fn tarski_demonstrate(
    phi: &Formula,
    sig: &Signature,
    budget: Budget,
) -> Result<TarskiReport, SemanticsError> {
    let coder = Coder::new(sig);
    let d = coder.liar(phi)?;
    let liar_verdict = eval_nat(&d.sentence, &NatAssignment::new(), sig, budget)?;
    let applied = phi.substitute(0, &numeral(&d.code));
    let applied_verdict = eval_nat(&applied, &NatAssignment::new(), sig, budget)?;
    let conclusion = match (liar_verdict.determined(), applied_verdict.determined()) {
        (Some(a), Some(b)) if a != b => format!(
            "disagreement exhibited: the liar sentence is {liar_verdict} while the candidate \
             claims {applied_verdict} of its code; no set satisfying the negation clause can \
             contain exactly the sentences this candidate accepts"
        ),
        (Some(_), Some(_)) => {
            "agreement observed: the liar construction failed, which indicates a defect in \
             this workbench, not a truth definition"
                .to_string()
        }
        _ => "unknown: budget exhausted before both sides were determined; no claim of \
              agreement is made"
            .to_string(),
    };
    Ok(TarskiReport {
        candidate: phi.to_string(),
        liar_sentence: d.sentence.to_string(),
        liar_code: d.code.clone(),
        code_digits: d.code.to_string().len(),
        liar_verdict,
        applied_verdict,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{numeral_u64, parse_formula, parse_term};
    use proptest::prelude::*;

    fn v3(b: bool) -> TruthValue3 {
        TruthValue3::from_bool(b)
    }

    /// The cyclic structure: domain 0..m, 0/1 as themselves, + and * mod
    /// m, < the natural order on representatives.
    fn z_mod(m: usize) -> FiniteStructure {
        let add: Vec<usize> = (0..m * m).map(|i| (i / m + i % m) % m).collect();
        let mul: Vec<usize> = (0..m * m).map(|i| ((i / m) * (i % m)) % m).collect();
        let lt: Vec<Vec<usize>> = (0..m)
            .flat_map(|a| (0..m).filter(move |&b| a < b).map(move |b| vec![a, b]))
            .collect();
        FiniteStructure::new(
            m,
            Signature::arithmetic(),
            BTreeMap::from([("0".into(), 0), ("1".into(), 1 % m)]),
            vec![("+".into(), 2, add), ("*".into(), 2, mul)],
            vec![("<".into(), 2, lt)],
        )
        .unwrap()
    }

    fn three_cycle() -> FiniteStructure {
        let sig = Signature::custom(&[], &[], &[("E", 2)]).unwrap();
        FiniteStructure::new(
            3,
            sig,
            BTreeMap::new(),
            vec![],
            vec![("E".into(), 2, vec![vec![0, 1], vec![1, 2], vec![2, 0]])],
        )
        .unwrap()
    }

    #[test]
    fn structure_validation_rejects_partial_tables() {
        let sig = Signature::custom(&["a"], &[("f", 1)], &[]).unwrap();
        let missing_table = FiniteStructure::new(
            2,
            sig.clone(),
            BTreeMap::from([("a".into(), 0)]),
            vec![("f".into(), 1, vec![1])],
            vec![],
        );
        assert!(matches!(
            missing_table,
            Err(SemanticsError::InvalidStructure(_))
        ));
        let out_of_domain = FiniteStructure::new(
            2,
            sig,
            BTreeMap::from([("a".into(), 5)]),
            vec![("f".into(), 1, vec![1, 0])],
            vec![],
        );
        assert!(matches!(
            out_of_domain,
            Err(SemanticsError::InvalidStructure(_))
        ));
    }

    #[test]
    fn finite_evaluation_matches_hand_checks() {
        let s = three_cycle();
        let sig = s.signature().clone();
        let empty = FiniteAssignment::new();
        let cases = [
            ("exists x exists y. E(x, y)", true),
            ("exists x. E(x, x)", false),
            ("forall x exists y. E(x, y)", true),
            ("forall x forall y. (E(x, y) -> ~E(y, x))", true),
        ];
        for (text, expected) in cases {
            let phi = parse_formula(text, &sig).unwrap();
            assert_eq!(eval_finite(&s, &phi, &empty).unwrap(), expected, "{text}");
        }
    }

    #[test]
    fn strict_order_is_irreflexive() {
        let s = z_mod(4);
        let phi = parse_formula("exists x. x < x", s.signature()).unwrap();
        assert!(!eval_finite(&s, &phi, &FiniteAssignment::new()).unwrap());
    }

    #[test]
    fn numeral_values_wrap_in_cyclic_structures() {
        let s = z_mod(5);
        let empty = FiniteAssignment::new();
        assert_eq!(eval_term_finite(&s, &numeral_u64(7), &empty).unwrap(), 2);
        assert_eq!(eval_term_finite(&s, &numeral_u64(0), &empty).unwrap(), 0);
        // 10^30 mod 7 = 3^30 mod 7 = 1.
        let s7 = z_mod(7);
        let huge = Term::Num(BigUint::from(10u32).pow(30));
        assert_eq!(eval_term_finite(&s7, &huge, &empty).unwrap(), 1);
    }

    #[test]
    fn nat_term_evaluation_computes_numerals_and_pairs() {
        let sig = Signature::arithmetic().with_sub().with_pairing();
        let empty = NatAssignment::new();
        assert_eq!(
            eval_term_nat(&numeral_u64(5), &empty, &sig).unwrap(),
            BigUint::from(5u32)
        );
        let t = parse_term("1 + 1", &sig).unwrap();
        assert_eq!(
            eval_term_nat(&t, &empty, &sig).unwrap(),
            BigUint::from(2u32)
        );
        let t = parse_term("pair(1 + 1, 5)", &sig).unwrap();
        assert_eq!(
            eval_term_nat(&t, &empty, &sig).unwrap(),
            BigUint::from(33u32)
        );
    }

    #[test]
    fn sub_symbol_is_interpreted_by_arithmetized_substitution() {
        let sig = Signature::arithmetic().with_sub();
        let coder = Coder::new(&sig);
        let open = parse_formula("x = x", &sig).unwrap();
        let c = coder.encode(&open).unwrap();
        let t = Term::App("sub".into(), vec![numeral(&c), numeral_u64(2)]);
        let expected = coder
            .encode(&Formula::Eq(numeral_u64(2), numeral_u64(2)))
            .unwrap();
        assert_eq!(
            eval_term_nat(&t, &NatAssignment::new(), &sig).unwrap(),
            expected
        );
    }

    #[test]
    fn nat_evaluation_matches_the_reference_contract() {
        let sig = Signature::arithmetic();
        let empty = NatAssignment::new();
        let budget = Budget::default();
        let cases = [
            ("exists x. x + x = 1 + 1 + 1 + 1", v3(true)),
            ("exists x. (x < 1 + 1 + 1 & x + x = 1 + 1)", v3(true)),
            (
                "forall x. (x < 1 + 1 + 1 -> exists y. (x = y + y | x = y + y + 1))",
                v3(true),
            ),
            ("forall x. (x < 3 -> x < 2)", v3(false)),
            ("forall x. x < 5", v3(false)),
            // The witness range is inclusive of the bound itself.
            ("exists x. x = 64", v3(true)),
        ];
        for (text, expected) in cases {
            let phi = parse_formula(text, &sig).unwrap();
            assert_eq!(
                eval_nat(&phi, &empty, &sig, budget).unwrap(),
                expected,
                "{text}"
            );
        }
        for unknown_text in [
            "exists x. ~(x = x)",
            "forall x. x < x + 1",
            "exists x. x = 65",
        ] {
            let phi = parse_formula(unknown_text, &sig).unwrap();
            assert!(
                matches!(
                    eval_nat(&phi, &empty, &sig, budget).unwrap(),
                    TruthValue3::Unknown { .. }
                ),
                "{unknown_text} must stay unknown at the default budget"
            );
        }
    }

    #[test]
    fn bounded_quantifier_with_large_bound_still_witnesses() {
        // The bound exceeds the witness budget, so false is out of reach,
        // but a small witness still proves the existential.
        let sig = Signature::arithmetic();
        let phi = parse_formula("exists x. (x < 1000 & x = 3)", &sig).unwrap();
        assert_eq!(
            eval_nat(&phi, &NatAssignment::new(), &sig, Budget::default()).unwrap(),
            v3(true)
        );
        let phi = parse_formula("exists x. (x < 1000 & x = 999)", &sig).unwrap();
        assert!(matches!(
            eval_nat(&phi, &NatAssignment::new(), &sig, Budget::default()).unwrap(),
            TruthValue3::Unknown { .. }
        ));
    }

    #[test]
    fn depth_bound_exhaustion_is_reported() {
        let sig = Signature::arithmetic();
        let phi = parse_formula("exists x exists y exists z. x + y = z", &sig).unwrap();
        let v = eval_nat(&phi, &NatAssignment::new(), &sig, Budget::new(4, 2)).unwrap();
        assert!(
            matches!(v, TruthValue3::Unknown { .. }),
            "depth 2 cannot reach 3 quantifiers"
        );
    }

    #[test]
    fn budget_determined_verdicts_are_monotone() {
        let sig = Signature::arithmetic();
        let empty = NatAssignment::new();
        let texts = [
            "exists x. x + x = 1 + 1 + 1 + 1",
            "exists x. (x < 20 & x * x = x + x)",
            "forall x. (x < 10 -> x < 20)",
            "forall x. (x < 10 -> exists y. (y < 30 & y = x + x))",
            "exists x. ~(x = x)",
        ];
        for text in texts {
            let phi = parse_formula(text, &sig).unwrap();
            let mut last: Option<bool> = None;
            for wb in [2u64, 8, 32, 64] {
                let v = eval_nat(&phi, &empty, &sig, Budget::new(wb, 12)).unwrap();
                if let Some(prev) = last {
                    if let Some(now) = v.determined() {
                        assert_eq!(prev, now, "{text} flipped verdict between budgets");
                    } else {
                        panic!("{text} lost determination as the budget grew");
                    }
                }
                if let Some(now) = v.determined() {
                    last = Some(now);
                }
            }
        }
    }

    #[test]
    fn truth_predicates_dereference_one_level_down() {
        let l1 = Signature::with_truth_levels(1);
        let l0 = Signature::arithmetic();
        let code = Coder::new(&l0)
            .encode(&parse_formula("0 = 0", &l0).unwrap())
            .unwrap();
        let phi = Formula::Rel("Tr0".into(), vec![numeral(&code)]);
        assert_eq!(
            eval_nat(&phi, &NatAssignment::new(), &l1, Budget::default()).unwrap(),
            v3(true)
        );
        // 7 is not a sentence code.
        let phi = parse_formula("Tr0(7)", &l1).unwrap();
        assert_eq!(
            eval_nat(&phi, &NatAssignment::new(), &l1, Budget::default()).unwrap(),
            v3(false)
        );
        // Level violation: Tr0 in a level-0 language.
        let err = eval_nat(
            &Formula::Rel("Tr0".into(), vec![numeral_u64(7)]),
            &NatAssignment::new(),
            &l0,
            Budget::default(),
        );
        assert!(matches!(
            err,
            Err(SemanticsError::LevelViolation { found: 0, max: 0 })
        ));
    }

    fn small_corpus(s: &FiniteStructure) -> Vec<BigUint> {
        // A one-step-closed canonical-fragment corpus over the structure.
        let sig = s.signature();
        let coder = Coder::new(sig);
        let mut texts = vec![
            "0 = 0".to_string(),
            "0 = 1".to_string(),
            "0 < 1".to_string(),
            "~(0 = 0)".to_string(),
            "~(0 = 1)".to_string(),
            "0 = 0 & 0 < 1".to_string(),
            "exists x. x = 1".to_string(),
            "exists x. x < x".to_string(),
        ];
        for d in 0..s.size() {
            texts.push(format!("{} = 1", numeral_u64(d as u64)));
            texts.push(format!(
                "{} < {}",
                numeral_u64(d as u64),
                numeral_u64(d as u64)
            ));
        }
        let mut corpus: Vec<BigUint> = Vec::new();
        let mut seen = BTreeSet::new();
        for text in texts {
            let code = coder.encode(&parse_formula(&text, sig).unwrap()).unwrap();
            if seen.insert(code.clone()) {
                corpus.push(code);
            }
        }
        corpus
    }

    #[test]
    fn exact_truth_set_passes_and_any_flip_fails() {
        let s = z_mod(3);
        let corpus = small_corpus(&s);
        let truth = exact_truth_set(&s, &corpus).unwrap();
        let world = AuditWorld::Finite(&s);
        let report = check_truth_conditions(&truth, &world, &corpus).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert!(report.unverified.is_empty());
        for code in &corpus {
            let mut flipped = truth.clone();
            if !flipped.remove(code) {
                flipped.insert(code.clone());
            }
            let report = check_truth_conditions(&flipped, &world, &corpus).unwrap();
            assert!(
                !report.passed(),
                "flipping membership of code {code} went unnoticed"
            );
        }
    }

    #[test]
    fn empty_candidate_yields_an_atomic_violation() {
        let s = z_mod(2);
        let coder = Coder::new(s.signature());
        let code = coder
            .encode(&parse_formula("0 = 0", s.signature()).unwrap())
            .unwrap();
        let report = check_truth_conditions(
            &BTreeSet::new(),
            &AuditWorld::Finite(&s),
            std::slice::from_ref(&code),
        )
        .unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.clause, Clause::Atomic);
        assert_eq!(v.code, code);
        assert!(v.expected && !v.found);
    }

    #[test]
    fn zero_violation_candidates_agree_on_tiny_corpora() {
        let s = z_mod(2);
        let corpus = small_corpus(&s);
        assert!(
            corpus.len() <= 14,
            "exhaustive enumeration needs a tiny corpus"
        );
        let world = AuditWorld::Finite(&s);
        let mut passing: Vec<BTreeSet<BigUint>> = Vec::new();
        for mask in 0u32..(1 << corpus.len()) {
            let candidate: BTreeSet<BigUint> = corpus
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, c)| c.clone())
                .collect();
            if check_truth_conditions(&candidate, &world, &corpus)
                .unwrap()
                .passed()
            {
                passing.push(candidate);
            }
        }
        assert!(!passing.is_empty());
        for pair in passing.windows(2) {
            assert_eq!(pair[0], pair[1], "two zero-violation candidates disagree");
        }
        assert_eq!(passing[0], exact_truth_set(&s, &corpus).unwrap());
    }

    #[test]
    fn nat_audit_reports_unverified_not_violation_past_the_bound() {
        let sig = Signature::arithmetic();
        let coder = Coder::new(&sig);
        // A true existential whose least witness exceeds the budget.
        let phi = parse_formula("exists x. x = 100", &sig).unwrap();
        let code = coder.encode(&phi).unwrap();
        let candidate = BTreeSet::from([code.clone()]);
        let world = AuditWorld::Nat {
            sig: &sig,
            budget: Budget::new(10, 6),
        };
        let report = check_truth_conditions(&candidate, &world, &[code]).unwrap();
        assert!(report.passed());
        assert_eq!(report.unverified.len(), 1);
    }

    #[test]
    fn tarski_demonstration_exhibits_the_disagreement() {
        let sig = Signature::arithmetic().with_sub();
        let budget = Budget::default();
        let phi = parse_formula("x = x", &sig).unwrap();
        let r = tarski_demonstrate(&phi, &sig, budget).unwrap();
        assert_eq!(r.liar_verdict, v3(false));
        assert_eq!(r.applied_verdict, v3(true));
        assert!(r.disagreement_exhibited());
        assert!(r.conclusion.starts_with("disagreement exhibited"));

        let phi = parse_formula("~(x = x)", &sig).unwrap();
        let r = tarski_demonstrate(&phi, &sig, budget).unwrap();
        assert_eq!(r.liar_verdict, v3(true));
        assert_eq!(r.applied_verdict, v3(false));

        // Parity of the code is out of budget; the report must not claim
        // agreement or disagreement.
        let phi = parse_formula("exists y. x = y + y", &sig).unwrap();
        let r = tarski_demonstrate(&phi, &sig, budget).unwrap();
        assert!(!r.disagreement_exhibited());
        assert!(r.conclusion.starts_with("unknown"));
    }

    #[test]
    fn structures_round_trip_through_json() {
        let s = z_mod(3);
        let json = serde_json::to_string(&s).unwrap();
        let back: FiniteStructure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let phi = parse_formula("exists x. x + x = 1", back.signature()).unwrap();
        assert_eq!(
            eval_finite(&back, &phi, &FiniteAssignment::new()).unwrap(),
            eval_finite(&s, &phi, &FiniteAssignment::new()).unwrap()
        );
    }

    // Random structures over a fixed one-unary/one-binary signature, and
    // random shallow formulas, for the evaluator-vs-expansion audit.
    prop_compose! {
        fn arb_structure()(size in 1usize..=5)(
            size in Just(size),
            c in 0usize..size,
            p_bits in proptest::collection::vec(any::<bool>(), size),
            e_bits in proptest::collection::vec(any::<bool>(), size * size),
        ) -> FiniteStructure {
            let sig = Signature::custom(&["a"], &[], &[("P", 1), ("E", 2)]).unwrap();
            let p = (0..size).filter(|&i| p_bits[i]).map(|i| vec![i]).collect();
            let e = (0..size * size)
                .filter(|&i| e_bits[i])
                .map(|i| vec![i / size, i % size])
                .collect();
            FiniteStructure::new(
                size,
                sig,
                BTreeMap::from([("a".into(), c)]),
                vec![],
                vec![("P".into(), 1, p), ("E".into(), 2, e)],
            )
            .unwrap()
        }
    }

    fn arb_rel_formula(depth: u32) -> BoxedStrategy<Formula> {
        let term = prop_oneof![
            (0usize..3).prop_map(Term::Var),
            Just(Term::Const("a".into())),
        ];
        let atom = prop_oneof![
            term.clone().prop_map(|t| Formula::Rel("P".into(), vec![t])),
            (term.clone(), term.clone()).prop_map(|(l, r)| Formula::Rel("E".into(), vec![l, r])),
            (term.clone(), term).prop_map(|(l, r)| Formula::Eq(l, r)),
        ];
        atom.prop_recursive(depth, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                ((0usize..3), inner.clone()).prop_map(|(v, f)| Formula::exists(v, f)),
                ((0usize..3), inner).prop_map(|(v, f)| Formula::forall(v, f)),
            ]
        })
        .boxed()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn prop_evaluator_matches_expansion_oracle(
            s in arb_structure(),
            phi in arb_rel_formula(4),
            seeds in proptest::collection::vec(0usize..5, 3),
        ) {
            let asg: FiniteAssignment =
                (0..3).map(|v| (v, seeds[v] % s.size())).collect();
            let direct = eval_finite(&s, &phi, &asg).unwrap();
            let expanded = eval_finite_expansion(&s, &phi, &asg).unwrap();
            prop_assert_eq!(direct, expanded);
        }
    }
}
