//! Terms, formulas, signatures, and the concrete grammar.
//!
//! The surface syntax is deliberately small:
//!
//! ```text
//! formula  := implies
//! implies  := or ("->" implies)?                      (right associative)
//! or       := and ("|" or)?
//! and      := unary ("&" and)?
//! unary    := "~" unary | quantifier | atom
//! quant    := ("exists" | "forall") var (quant | "." formula)
//! atom     := RelName "(" terms ")"
//!           | term ("=" | "<") term
//!           | "(" formula ")"
//! term     := product ("+" term)?                     (right associative)
//! product  := factor ("*" product)?
//! factor   := var | NUMBER | Name | Name "(" terms ")" | "(" term ")"
//! var      := "x" | "y" | "z" | "v" DIGITS
//! ```
//!
//! `+` and `*` associate to the right so that `1 + 1 + 1` parses as the
//! right-nested sum produced by [`numeral`]. Decimal literals other than
//! `0` and `1` desugar through [`numeral`], which represents large values
//! compactly (see [`Term::Num`]); explicit sums of ones stay sums.
//!
//! Variables are numbered: `x`, `y`, `z` name variables 0, 1, 2 and `vN`
//! names variable `N`. Variable 0 (`x`) is the distinguished variable used
//! by the substitution and diagonalization machinery in [`crate::coding`].

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a variable. Variable 0 displays as `x`, 1 as `y`, 2 as `z`,
/// and every other index `n` as `vn`.
pub type VarId = usize;

/// Errors raised by parsing, printing, and signature construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    /// Malformed input text; `position` is a byte offset into the source.
    #[error("syntax error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    /// An identifier that names nothing in the active signature.
    #[error("unknown symbol `{name}` at byte {position}")]
    UnknownSymbol { name: String, position: usize },
    /// A symbol applied to the wrong number of arguments.
    #[error("arity mismatch for `{name}` at byte {position}: expected {expected} arguments, found {found}")]
    ArityMismatch {
        name: String,
        position: usize,
        expected: usize,
        found: usize,
    },
    /// An ill-formed signature (duplicate or reserved names, zero arity).
    #[error("invalid signature: {0}")]
    Signature(String),
}

/// A first-order signature: constant, function, and relation symbols.
///
/// Equality is built into the logic and never appears in the relation
/// list. The `level` records how many truth predicates `Tr0..Tr(level-1)`
/// the relation list carries; see [`crate::hierarchy`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    constants: Vec<String>,
    functions: Vec<(String, usize)>,
    relations: Vec<(String, usize)>,
    level: usize,
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_reserved(name: &str) -> bool {
    if matches!(name, "x" | "y" | "z" | "exists" | "forall" | "div") {
        return true;
    }
    let digits_after = |prefix: &str| {
        name.strip_prefix(prefix)
            .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
    };
    // vN is variable syntax; TrN is claimed by the truth hierarchy.
    digits_after("v") || digits_after("Tr")
}

impl Signature {
    /// The language of arithmetic: constants `0`, `1`, functions `+`, `*`,
    /// relation `<`.
    pub fn arithmetic() -> Self {
        Signature {
            constants: vec!["0".into(), "1".into()],
            functions: vec![("+".into(), 2), ("*".into(), 2)],
            relations: vec![("<".into(), 2)],
            level: 0,
        }
    }

    /// The additive fragment `0`, `1`, `+`, `<` in which the linear
    /// decision procedures of [`crate::presburger`] operate.
    pub fn presburger() -> Self {
        Signature {
            constants: vec!["0".into(), "1".into()],
            functions: vec![("+".into(), 2)],
            relations: vec![("<".into(), 2)],
            level: 0,
        }
    }

    /// Arithmetic extended with unary truth predicates `Tr0 .. Tr(k-1)`.
    pub fn with_truth_levels(k: usize) -> Self {
        let mut sig = Signature::arithmetic();
        for j in 0..k {
            sig.relations.push((format!("Tr{j}"), 1));
        }
        sig.level = k;
        sig
    }

    /// Extends the signature with the binary substitution function `sub`,
    /// interpreted over the naturals by arithmetized substitution on codes
    /// (see [`crate::coding::sub_code`]).
    pub fn with_sub(mut self) -> Self {
        self.functions.push(("sub".into(), 2));
        self
    }

    /// Extends the signature with the binary pairing function `pair`,
    /// interpreted over the naturals by [`crate::coding::pair`].
    pub fn with_pairing(mut self) -> Self {
        self.functions.push(("pair".into(), 2));
        self
    }

    /// A custom finite-structure signature. Symbol names must be plain
    /// identifiers, pairwise distinct, not reserved by the grammar, and
    /// function and relation arities must be positive.
    pub fn custom(
        constants: &[&str],
        functions: &[(&str, usize)],
        relations: &[(&str, usize)],
    ) -> Result<Self, SyntaxError> {
        let sig = Signature {
            constants: constants.iter().map(|s| s.to_string()).collect(),
            functions: functions.iter().map(|(s, a)| (s.to_string(), *a)).collect(),
            relations: relations.iter().map(|(s, a)| (s.to_string(), *a)).collect(),
            level: 0,
        };
        let mut seen = BTreeSet::new();
        for name in sig.symbol_names() {
            if !is_identifier(name) {
                return Err(SyntaxError::Signature(format!(
                    "`{name}` is not an identifier"
                )));
            }
            if is_reserved(name) {
                return Err(SyntaxError::Signature(format!(
                    "`{name}` is reserved by the grammar"
                )));
            }
            if !seen.insert(name.to_string()) {
                return Err(SyntaxError::Signature(format!("duplicate symbol `{name}`")));
            }
        }
        for (name, arity) in sig.functions.iter().chain(sig.relations.iter()) {
            if *arity == 0 {
                return Err(SyntaxError::Signature(format!(
                    "`{name}` has arity 0; use a constant instead"
                )));
            }
        }
        Ok(sig)
    }

    /// Rebuilds a signature from explicit symbol lists, keeping the given
    /// order. Unlike [`Signature::custom`] this accepts operator names
    /// such as `+`; it is the deserialization path for stored structures.
    pub fn from_parts(
        constants: Vec<String>,
        functions: Vec<(String, usize)>,
        relations: Vec<(String, usize)>,
    ) -> Result<Self, SyntaxError> {
        let sig = Signature {
            constants,
            functions,
            relations,
            level: 0,
        };
        let mut seen = BTreeSet::new();
        for name in sig.symbol_names() {
            if !seen.insert(name.to_string()) {
                return Err(SyntaxError::Signature(format!("duplicate symbol `{name}`")));
            }
        }
        for (name, arity) in sig.functions.iter().chain(sig.relations.iter()) {
            if *arity == 0 {
                return Err(SyntaxError::Signature(format!(
                    "`{name}` has arity 0; use a constant instead"
                )));
            }
        }
        Ok(sig)
    }

    /// Adds fresh constants (used by Henkin witness pools). Names must not
    /// collide with existing symbols.
    pub fn with_extra_constants(&self, names: &[String]) -> Result<Self, SyntaxError> {
        let mut sig = self.clone();
        for name in names {
            if sig.symbol_names().any(|s| s == name) {
                return Err(SyntaxError::Signature(format!("duplicate symbol `{name}`")));
            }
            sig.constants.push(name.clone());
        }
        Ok(sig)
    }

    fn symbol_names(&self) -> impl Iterator<Item = &str> {
        self.constants
            .iter()
            .map(|s| s.as_str())
            .chain(self.functions.iter().map(|(s, _)| s.as_str()))
            .chain(self.relations.iter().map(|(s, _)| s.as_str()))
    }

    /// How many truth predicates `Tr0..` the signature carries.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn functions(&self) -> &[(String, usize)] {
        &self.functions
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions
            .iter()
            .find(|(f, _)| f == name)
            .map(|(_, a)| *a)
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations
            .iter()
            .find(|(r, _)| r == name)
            .map(|(_, a)| *a)
    }

    /// Index of a constant in declaration order, used by the coding layer.
    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|(f, _)| f == name)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|(r, _)| r == name)
    }

    /// For a truth-predicate name `TrJ`, the level `J` it reads.
    pub fn truth_predicate_level(name: &str) -> Option<usize> {
        name.strip_prefix("Tr").and_then(|rest| {
            if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
                None
            } else {
                rest.parse().ok()
            }
        })
    }

    /// True when every symbol of `other` appears here with the same arity.
    pub fn extends(&self, other: &Signature) -> bool {
        other.constants.iter().all(|c| self.has_constant(c))
            && other
                .functions
                .iter()
                .all(|(f, a)| self.function_arity(f) == Some(*a))
            && other
                .relations
                .iter()
                .all(|(r, a)| self.relation_arity(r) == Some(*a))
    }
}

/// A first-order term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    /// A variable, numbered; see [`VarId`].
    Var(VarId),
    /// A constant symbol.
    Const(String),
    /// A function symbol applied to argument terms.
    App(String, Vec<Term>),
    /// The numeral for `n`: an abbreviation for the right-nested sum
    /// `1 + (1 + ... + 1)` with `n` summands (`0` for `n = 0`). Kept
    /// compact so that numerals of very large values, such as formula
    /// codes, stay representable; it prints as a decimal literal.
    Num(#[serde(with = "crate::biguint_dec")] BigUint),
}

impl Term {
    /// Number of nodes, the size measure used for enumeration order.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) | Term::Num(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::Const(_) | Term::Num(_) => {}
            Term::App(_, args) => {
                for arg in args {
                    arg.collect_vars(out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    fn max_var(&self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Const(_) | Term::Num(_) => None,
            Term::App(_, args) => args.iter().filter_map(Term::max_var).max(),
        }
    }

    /// Replaces free occurrences of variable `v` by `t`.
    pub fn substitute(&self, v: VarId, t: &Term) -> Term {
        match self {
            Term::Var(u) if *u == v => t.clone(),
            Term::Var(_) | Term::Const(_) | Term::Num(_) => self.clone(),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.substitute(v, t)).collect())
            }
        }
    }
}

/// Builds the numeral term for `n`: the constant `0` for zero, the
/// constant `1` for one, and the compact [`Term::Num`] abbreviation of the
/// right-nested sum `1 + (1 + ... + 1)` otherwise.
pub fn numeral(n: &BigUint) -> Term {
    if n.is_zero() {
        Term::Const("0".into())
    } else if n.is_one() {
        Term::Const("1".into())
    } else {
        Term::Num(n.clone())
    }
}

/// Convenience wrapper over [`numeral`] for machine-sized values.
pub fn numeral_u64(n: u64) -> Term {
    numeral(&BigUint::from(n))
}

/// The unabbreviated numeral: the literal right-nested sum of ones, e.g.
/// `1 + (1 + 1)` for 3. Evaluates to the same value as [`numeral`].
pub fn numeral_expanded(n: u64) -> Term {
    match n {
        0 => Term::Const("0".into()),
        _ => {
            let one = || Term::Const("1".into());
            let mut term = one();
            for _ in 1..n {
                term = Term::App("+".into(), vec![one(), term]);
            }
            term
        }
    }
}

/// A first-order formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    /// Equality of two terms. Equality is built in, not a signature symbol.
    Eq(Term, Term),
    /// A relation symbol applied to argument terms.
    Rel(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(VarId, Box<Formula>),
    Forall(VarId, Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(v: VarId, f: Formula) -> Formula {
        Formula::Exists(v, Box::new(f))
    }

    pub fn forall(v: VarId, f: Formula) -> Formula {
        Formula::Forall(v, Box::new(f))
    }

    /// Number of nodes, the size measure used for enumeration order.
    pub fn size(&self) -> usize {
        match self {
            Formula::Eq(l, r) => 1 + l.size() + r.size(),
            Formula::Rel(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Formula::Not(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.size() + b.size()
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.size(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Formula::Eq(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Formula::Rel(_, args) => {
                for arg in args {
                    arg.collect_vars(out);
                }
            }
            Formula::Not(f) => f.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let mut inner = BTreeSet::new();
                f.collect_free(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    fn max_var(&self) -> Option<VarId> {
        match self {
            Formula::Eq(l, r) => l.max_var().max(r.max_var()),
            Formula::Rel(_, args) => args.iter().filter_map(Term::max_var).max(),
            Formula::Not(f) => f.max_var(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.max_var().max(b.max_var())
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => Some(*v).max(f.max_var()),
        }
    }

    fn rename_bound(&self, from: VarId, to: VarId) -> Formula {
        // Only called with `to` fresh for the whole formula.
        match self {
            Formula::Eq(l, r) => Formula::Eq(
                l.substitute(from, &Term::Var(to)),
                r.substitute(from, &Term::Var(to)),
            ),
            Formula::Rel(r, args) => Formula::Rel(
                r.clone(),
                args.iter()
                    .map(|a| a.substitute(from, &Term::Var(to)))
                    .collect(),
            ),
            Formula::Not(f) => Formula::not(f.rename_bound(from, to)),
            Formula::And(a, b) => Formula::and(a.rename_bound(from, to), b.rename_bound(from, to)),
            Formula::Or(a, b) => Formula::or(a.rename_bound(from, to), b.rename_bound(from, to)),
            Formula::Implies(a, b) => {
                Formula::implies(a.rename_bound(from, to), b.rename_bound(from, to))
            }
            Formula::Exists(v, f) if *v == from => Formula::exists(*v, (**f).clone()),
            Formula::Forall(v, f) if *v == from => Formula::forall(*v, (**f).clone()),
            Formula::Exists(v, f) => Formula::exists(*v, f.rename_bound(from, to)),
            Formula::Forall(v, f) => Formula::forall(*v, f.rename_bound(from, to)),
        }
    }

    /// Capture-avoiding substitution of `t` for free occurrences of `v`.
    /// Bound variables that would capture a variable of `t` are renamed to
    /// fresh indices, deterministically.
    pub fn substitute(&self, v: VarId, t: &Term) -> Formula {
        match self {
            Formula::Eq(l, r) => Formula::Eq(l.substitute(v, t), r.substitute(v, t)),
            Formula::Rel(r, args) => {
                Formula::Rel(r.clone(), args.iter().map(|a| a.substitute(v, t)).collect())
            }
            Formula::Not(f) => Formula::not(f.substitute(v, t)),
            Formula::And(a, b) => Formula::and(a.substitute(v, t), b.substitute(v, t)),
            Formula::Or(a, b) => Formula::or(a.substitute(v, t), b.substitute(v, t)),
            Formula::Implies(a, b) => Formula::implies(a.substitute(v, t), b.substitute(v, t)),
            Formula::Exists(u, f) | Formula::Forall(u, f) => {
                let exists = matches!(self, Formula::Exists(..));
                let rebuild = |u, f: Formula| {
                    if exists {
                        Formula::exists(u, f)
                    } else {
                        Formula::forall(u, f)
                    }
                };
                if *u == v {
                    // `v` is bound here; nothing free to replace.
                    self.clone()
                } else if t.free_vars().contains(u) && f.free_vars().contains(&v) {
                    let fresh = 1 + self.max_var().unwrap_or(0).max(t.max_var().unwrap_or(0));
                    let renamed = f.rename_bound(*u, fresh);
                    rebuild(fresh, renamed.substitute(v, t))
                } else {
                    rebuild(*u, f.substitute(v, t))
                }
            }
        }
    }

    /// Rewrites into the connective fragment `{atomic, &, ~, exists}`:
    /// `a | b` becomes `~(~a & ~b)`, `a -> b` becomes `~(a & ~b)`, and
    /// `forall x. f` becomes `~exists x. ~f`.
    pub fn canonicalize(&self) -> Formula {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => self.clone(),
            Formula::Not(f) => Formula::not(f.canonicalize()),
            Formula::And(a, b) => Formula::and(a.canonicalize(), b.canonicalize()),
            Formula::Or(a, b) => Formula::not(Formula::and(
                Formula::not(a.canonicalize()),
                Formula::not(b.canonicalize()),
            )),
            Formula::Implies(a, b) => Formula::not(Formula::and(
                a.canonicalize(),
                Formula::not(b.canonicalize()),
            )),
            Formula::Exists(v, f) => Formula::exists(*v, f.canonicalize()),
            Formula::Forall(v, f) => {
                Formula::not(Formula::exists(*v, Formula::not(f.canonicalize())))
            }
        }
    }

    /// True when the formula stays inside `{atomic, &, ~, exists}`.
    pub fn is_canonical(&self) -> bool {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => true,
            Formula::Not(f) => f.is_canonical(),
            Formula::And(a, b) => a.is_canonical() && b.is_canonical(),
            Formula::Or(..) | Formula::Implies(..) | Formula::Forall(..) => false,
            Formula::Exists(_, f) => f.is_canonical(),
        }
    }

    /// Checks that every symbol the formula mentions is declared in `sig`
    /// with a matching arity.
    pub fn check_symbols(&self, sig: &Signature) -> Result<(), SyntaxError> {
        fn check_term(t: &Term, sig: &Signature) -> Result<(), SyntaxError> {
            match t {
                Term::Var(_) => Ok(()),
                Term::Num(_) => {
                    // An abbreviation for a sum of ones; needs 0/1 and +.
                    for name in ["0", "1"] {
                        if !sig.has_constant(name) {
                            return Err(SyntaxError::UnknownSymbol {
                                name: name.into(),
                                position: 0,
                            });
                        }
                    }
                    if sig.function_arity("+") != Some(2) {
                        return Err(SyntaxError::UnknownSymbol {
                            name: "+".into(),
                            position: 0,
                        });
                    }
                    Ok(())
                }
                Term::Const(c) => {
                    if sig.has_constant(c) {
                        Ok(())
                    } else {
                        Err(SyntaxError::UnknownSymbol {
                            name: c.clone(),
                            position: 0,
                        })
                    }
                }
                Term::App(f, args) => {
                    match sig.function_arity(f) {
                        None => {
                            return Err(SyntaxError::UnknownSymbol {
                                name: f.clone(),
                                position: 0,
                            })
                        }
                        Some(a) if a != args.len() => {
                            return Err(SyntaxError::ArityMismatch {
                                name: f.clone(),
                                position: 0,
                                expected: a,
                                found: args.len(),
                            })
                        }
                        Some(_) => {}
                    }
                    for arg in args {
                        check_term(arg, sig)?;
                    }
                    Ok(())
                }
            }
        }
        match self {
            Formula::Eq(l, r) => {
                check_term(l, sig)?;
                check_term(r, sig)
            }
            Formula::Rel(r, args) => {
                match sig.relation_arity(r) {
                    None => {
                        return Err(SyntaxError::UnknownSymbol {
                            name: r.clone(),
                            position: 0,
                        })
                    }
                    Some(a) if a != args.len() => {
                        return Err(SyntaxError::ArityMismatch {
                            name: r.clone(),
                            position: 0,
                            expected: a,
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                }
                for arg in args {
                    check_term(arg, sig)?;
                }
                Ok(())
            }
            Formula::Not(f) => f.check_symbols(sig),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.check_symbols(sig)?;
                b.check_symbols(sig)
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) => f.check_symbols(sig),
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

/// Renders a variable index in the surface syntax.
pub fn var_name(v: VarId) -> String {
    match v {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        n => format!("v{n}"),
    }
}

// Term precedence levels: 0 sum, 1 product, 2 atom.
fn fmt_term(t: &Term, level: u8, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&var_name(*v)),
        Term::Const(c) => out.push_str(c),
        Term::Num(n) => out.push_str(&n.to_string()),
        Term::App(f, args) if f == "+" && args.len() == 2 => {
            let wrap = level > 0;
            if wrap {
                out.push('(');
            }
            fmt_term(&args[0], 1, out);
            out.push_str(" + ");
            fmt_term(&args[1], 0, out);
            if wrap {
                out.push(')');
            }
        }
        Term::App(f, args) if f == "*" && args.len() == 2 => {
            let wrap = level > 1;
            if wrap {
                out.push('(');
            }
            fmt_term(&args[0], 2, out);
            out.push_str(" * ");
            fmt_term(&args[1], 1, out);
            if wrap {
                out.push(')');
            }
        }
        Term::App(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_term(arg, 0, out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_term(self, 0, &mut s);
        f.write_str(&s)
    }
}

// Formula precedence levels: 0 implies/quantifier body, 1 or, 2 and,
// 3 unary, 4 atom.
fn fmt_formula(formula: &Formula, level: u8, out: &mut String) {
    let own = match formula {
        Formula::Implies(..) | Formula::Exists(..) | Formula::Forall(..) => 0,
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        Formula::Not(..) => 3,
        Formula::Eq(..) | Formula::Rel(..) => 4,
    };
    let wrap = own < level;
    if wrap {
        out.push('(');
    }
    match formula {
        Formula::Eq(l, r) => {
            fmt_term(l, 0, out);
            out.push_str(" = ");
            fmt_term(r, 0, out);
        }
        Formula::Rel(r, args) if r == "<" && args.len() == 2 => {
            fmt_term(&args[0], 0, out);
            out.push_str(" < ");
            fmt_term(&args[1], 0, out);
        }
        Formula::Rel(r, args) => {
            out.push_str(r);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_term(arg, 0, out);
            }
            out.push(')');
        }
        Formula::Not(f) => {
            out.push('~');
            // Infix atoms get explicit parens under negation: `~(x = 0)`
            // reads unambiguously where `~x = 0` does not.
            let infix_atom = matches!(**f, Formula::Eq(..))
                || matches!(&**f, Formula::Rel(r, args) if r == "<" && args.len() == 2);
            if infix_atom {
                out.push('(');
                fmt_formula(f, 0, out);
                out.push(')');
            } else {
                fmt_formula(f, 3, out);
            }
        }
        Formula::And(a, b) => {
            fmt_formula(a, 3, out);
            out.push_str(" & ");
            fmt_formula(b, 2, out);
        }
        Formula::Or(a, b) => {
            fmt_formula(a, 2, out);
            out.push_str(" | ");
            fmt_formula(b, 1, out);
        }
        Formula::Implies(a, b) => {
            fmt_formula(a, 1, out);
            out.push_str(" -> ");
            fmt_formula(b, 0, out);
        }
        Formula::Exists(v, f) => {
            out.push_str("exists ");
            out.push_str(&var_name(*v));
            out.push_str(". ");
            fmt_formula(f, 0, out);
        }
        Formula::Forall(v, f) => {
            out.push_str("forall ");
            out.push_str(&var_name(*v));
            out.push_str(". ");
            fmt_formula(f, 0, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_formula(self, 0, &mut s);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(BigUint),
    Plus,
    Star,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Eq,
    Lt,
    LParen,
    RParen,
    Comma,
    Dot,
}

struct Lexer;

impl Lexer {
    fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
        let bytes = text.as_bytes();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => {
                    toks.push((Tok::Plus, i));
                    i += 1;
                }
                '*' => {
                    toks.push((Tok::Star, i));
                    i += 1;
                }
                '~' => {
                    toks.push((Tok::Tilde, i));
                    i += 1;
                }
                '&' => {
                    toks.push((Tok::Amp, i));
                    i += 1;
                }
                '|' => {
                    toks.push((Tok::Pipe, i));
                    i += 1;
                }
                '=' => {
                    toks.push((Tok::Eq, i));
                    i += 1;
                }
                '<' => {
                    toks.push((Tok::Lt, i));
                    i += 1;
                }
                '(' => {
                    toks.push((Tok::LParen, i));
                    i += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, i));
                    i += 1;
                }
                ',' => {
                    toks.push((Tok::Comma, i));
                    i += 1;
                }
                '.' => {
                    toks.push((Tok::Dot, i));
                    i += 1;
                }
                '-' => {
                    if bytes.get(i + 1) == Some(&b'>') {
                        toks.push((Tok::Arrow, i));
                        i += 2;
                    } else {
                        return Err(SyntaxError::Parse {
                            position: i,
                            message: "expected `->`".into(),
                        });
                    }
                }
                '0'..='9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let n: BigUint = text[start..i].parse().expect("digits parse as a natural");
                    toks.push((Tok::Number(n), start));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    toks.push((Tok::Ident(text[start..i].to_string()), start));
                }
                other => {
                    return Err(SyntaxError::Parse {
                        position: i,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        Ok(toks)
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(SyntaxError::Parse {
                position: self.here(),
                message: format!("expected {what}"),
            })
        }
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::Parse {
            position: self.here(),
            message: message.into(),
        }
    }

    fn parse_var(name: &str) -> Option<VarId> {
        match name {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => {
                let rest = name.strip_prefix('v')?;
                if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
                    return None;
                }
                rest.parse().ok()
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or_formula()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or_formula(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.and_formula()?;
        if self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.or_formula()?;
            Ok(Formula::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn and_formula(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.unary_formula()?;
        if self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.and_formula()?;
            Ok(Formula::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn unary_formula(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.pos += 1;
                Ok(Formula::not(self.unary_formula()?))
            }
            Some(Tok::Ident(name)) if name == "exists" || name == "forall" => self.quantifier(),
            _ => self.atom(),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, SyntaxError> {
        let kw_pos = self.here();
        let kw = match self.bump() {
            Some(Tok::Ident(k)) => k,
            _ => return Err(self.err("expected quantifier")),
        };
        let var = match self.bump() {
            Some(Tok::Ident(name)) => Self::parse_var(&name).ok_or(SyntaxError::Parse {
                position: kw_pos,
                message: format!("`{name}` is not a variable"),
            })?,
            _ => return Err(self.err("expected a variable after quantifier")),
        };
        // Either a dot and a body, or a directly chained quantifier.
        let body = match self.peek() {
            Some(Tok::Dot) => {
                self.pos += 1;
                self.formula()?
            }
            Some(Tok::Ident(name)) if name == "exists" || name == "forall" => self.quantifier()?,
            _ => return Err(self.err("expected `.` or a chained quantifier")),
        };
        Ok(if kw == "exists" {
            Formula::exists(var, body)
        } else {
            Formula::forall(var, body)
        })
    }

    fn atom(&mut self) -> Result<Formula, SyntaxError> {
        // Relation application, when the leading identifier names one.
        if let Some(Tok::Ident(name)) = self.peek() {
            if let Some(arity) = self.sig.relation_arity(name) {
                let name = name.clone();
                let pos = self.here();
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after relation symbol")?;
                let args = self.term_list()?;
                self.expect(Tok::RParen, "`)`")?;
                if args.len() != arity {
                    return Err(SyntaxError::ArityMismatch {
                        name,
                        position: pos,
                        expected: arity,
                        found: args.len(),
                    });
                }
                return Ok(Formula::Rel(name, args));
            }
        }
        // Comparison of two terms, with backtracking so that a leading
        // `(` can still open a parenthesized formula.
        let snapshot = self.pos;
        match self.comparison() {
            Ok(f) => Ok(f),
            Err(term_err) => {
                self.pos = snapshot;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let f = self.formula()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(f)
                } else {
                    Err(term_err)
                }
            }
        }
    }

    fn comparison(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.term()?;
        match self.peek() {
            Some(Tok::Eq) => {
                self.pos += 1;
                let rhs = self.term()?;
                Ok(Formula::Eq(lhs, rhs))
            }
            Some(Tok::Lt) => {
                self.pos += 1;
                let rhs = self.term()?;
                Ok(Formula::Rel("<".into(), vec![lhs, rhs]))
            }
            _ => Err(self.err("expected `=` or `<`")),
        }
    }

    fn term_list(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.term()?);
        }
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let lhs = self.product()?;
        if self.peek() == Some(&Tok::Plus) {
            if self.sig.function_arity("+") != Some(2) {
                return Err(SyntaxError::UnknownSymbol {
                    name: "+".into(),
                    position: self.here(),
                });
            }
            self.pos += 1;
            let rhs = self.term()?;
            Ok(Term::App("+".into(), vec![lhs, rhs]))
        } else {
            Ok(lhs)
        }
    }

    fn product(&mut self) -> Result<Term, SyntaxError> {
        let lhs = self.factor()?;
        if self.peek() == Some(&Tok::Star) {
            if self.sig.function_arity("*") != Some(2) {
                return Err(SyntaxError::UnknownSymbol {
                    name: "*".into(),
                    position: self.here(),
                });
            }
            self.pos += 1;
            let rhs = self.product()?;
            Ok(Term::App("*".into(), vec![lhs, rhs]))
        } else {
            Ok(lhs)
        }
    }

    fn factor(&mut self) -> Result<Term, SyntaxError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Number(n)) => {
                if !n.is_zero() && !n.is_one() && self.sig.function_arity("+") != Some(2) {
                    return Err(SyntaxError::UnknownSymbol {
                        name: "+".into(),
                        position: pos,
                    });
                }
                let backing = if n.is_zero() { "0" } else { "1" };
                if !self.sig.has_constant(backing) {
                    return Err(SyntaxError::UnknownSymbol {
                        name: backing.into(),
                        position: pos,
                    });
                }
                Ok(numeral(&n))
            }
            Some(Tok::LParen) => {
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(Tok::Ident(name)) => {
                if let Some(v) = Self::parse_var(&name) {
                    return Ok(Term::Var(v));
                }
                if self.peek() == Some(&Tok::LParen) {
                    let arity = self.sig.function_arity(&name).ok_or_else(|| {
                        SyntaxError::UnknownSymbol {
                            name: name.clone(),
                            position: pos,
                        }
                    })?;
                    self.pos += 1;
                    let args = self.term_list()?;
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() != arity {
                        return Err(SyntaxError::ArityMismatch {
                            name,
                            position: pos,
                            expected: arity,
                            found: args.len(),
                        });
                    }
                    Ok(Term::App(name, args))
                } else if self.sig.has_constant(&name) {
                    Ok(Term::Const(name))
                } else {
                    Err(SyntaxError::UnknownSymbol {
                        name,
                        position: pos,
                    })
                }
            }
            _ => Err(SyntaxError::Parse {
                position: pos,
                message: "expected a term".into(),
            }),
        }
    }
}

/// Parses a formula in the concrete grammar against a signature.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, SyntaxError> {
    let mut parser = Parser {
        toks: Lexer::tokenize(text)?,
        pos: 0,
        sig,
        end: text.len(),
    };
    let f = parser.formula()?;
    if parser.pos != parser.toks.len() {
        return Err(SyntaxError::Parse {
            position: parser.here(),
            message: "trailing input after formula".into(),
        });
    }
    f.check_symbols(sig).map_err(|e| match e {
        // check_symbols has no positions; report the whole span.
        SyntaxError::UnknownSymbol { name, .. } => SyntaxError::UnknownSymbol { name, position: 0 },
        other => other,
    })?;
    Ok(f)
}

/// Parses a single term in the concrete grammar against a signature.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, SyntaxError> {
    let mut parser = Parser {
        toks: Lexer::tokenize(text)?,
        pos: 0,
        sig,
        end: text.len(),
    };
    let t = parser.term()?;
    if parser.pos != parser.toks.len() {
        return Err(SyntaxError::Parse {
            position: parser.here(),
            message: "trailing input after term".into(),
        });
    }
    Ok(t)
}
