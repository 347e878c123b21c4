//! Decision procedures for the additive fragment: quantifier elimination
//! in the style of Cooper over the integers with quantifiers relativized
//! to the naturals, a sentence decider built on it, eventual-periodicity
//! certificates for definable sets of naturals, and a refuter that hunts
//! for late periodicity violations in arbitrary membership predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Formula, Term, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresburgerError {
    #[error("`{0}` is outside the additive fragment")]
    UnsupportedSymbol(String),
    #[error("the formula must be a sentence")]
    NotASentence,
    #[error("expected exactly one free variable, found {0:?}")]
    WrongFreeVariables(Vec<VarId>),
    #[error("certificate bounds exceed the machine range")]
    ScaleOverflow,
    #[error("variable {0} is not assigned")]
    UnassignedVariable(VarId),
}

/// A linear expression over the integers: coefficients per variable plus
/// a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Linear {
    coeffs: BTreeMap<VarId, BigInt>,
    constant: BigInt,
}

impl Linear {
    fn constant(k: BigInt) -> Self {
        Linear {
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    fn var(v: VarId) -> Self {
        Linear {
            coeffs: BTreeMap::from([(v, BigInt::one())]),
            constant: BigInt::zero(),
        }
    }

    fn add(mut self, other: &Linear) -> Self {
        for (v, c) in &other.coeffs {
            let entry = self.coeffs.entry(*v).or_default();
            *entry += c;
            if entry.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += &other.constant;
        self
    }

    fn neg(mut self) -> Self {
        for c in self.coeffs.values_mut() {
            *c = -std::mem::take(c);
        }
        self.constant = -self.constant;
        self
    }

    fn sub(self, other: &Linear) -> Self {
        self.add(&other.clone().neg())
    }

    fn scale(mut self, m: &BigInt) -> Self {
        if m.is_zero() {
            return Linear::default();
        }
        for c in self.coeffs.values_mut() {
            *c *= m;
        }
        self.constant *= m;
        self
    }

    fn shift(mut self, k: i64) -> Self {
        self.constant += k;
        self
    }

    fn coeff(&self, v: VarId) -> BigInt {
        self.coeffs.get(&v).cloned().unwrap_or_default()
    }

    fn drop_var(mut self, v: VarId) -> Self {
        self.coeffs.remove(&v);
        self
    }

    fn set_unit_coeff(mut self, v: VarId, positive: bool) -> Self {
        self.coeffs.insert(
            v,
            if positive {
                BigInt::one()
            } else {
                -BigInt::one()
            },
        );
        self
    }

    /// Replaces `v` by the expression `e`.
    fn substitute(self, v: VarId, e: &Linear) -> Self {
        let c = self.coeff(v);
        if c.is_zero() {
            return self;
        }
        self.drop_var(v).add(&e.clone().scale(&c))
    }

    fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn eval(&self, asg: &BTreeMap<VarId, BigInt>) -> Result<BigInt, PresburgerError> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let value = asg.get(v).ok_or(PresburgerError::UnassignedVariable(*v))?;
            acc += c * value;
        }
        Ok(acc)
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let name = crate::syntax::var_name(*v);
            if first {
                match () {
                    _ if c.is_one() => write!(f, "{name}")?,
                    _ if (-c).is_one() => write!(f, "-{name}")?,
                    _ => write!(f, "{c}{name}")?,
                }
                first = false;
            } else if c.is_negative() {
                let m = -c;
                if m.is_one() {
                    write!(f, " - {name}")?;
                } else {
                    write!(f, " - {m}{name}")?;
                }
            } else if c.is_one() {
                write!(f, " + {name}")?;
            } else {
                write!(f, " + {c}{name}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant.is_negative() {
            write!(f, " - {}", -&self.constant)?;
        } else if !self.constant.is_zero() {
            write!(f, " + {}", self.constant)?;
        }
        Ok(())
    }
}

/// Atoms of the eliminated form: strict comparisons against zero and
/// divisibility constraints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    /// `t < 0`.
    Lt(Linear),
    /// `d | t`.
    Div(BigUint, Linear),
    /// `d` does not divide `t`.
    NotDiv(BigUint, Linear),
}

impl Atom {
    fn negated(&self) -> Qf {
        match self {
            // not (t < 0)  iff  -t - 1 < 0.
            Atom::Lt(t) => Qf::atom(Atom::Lt(t.clone().neg().shift(-1))),
            Atom::Div(d, t) => Qf::atom(Atom::NotDiv(d.clone(), t.clone())),
            Atom::NotDiv(d, t) => Qf::atom(Atom::Div(d.clone(), t.clone())),
        }
    }

    fn eval(&self, asg: &BTreeMap<VarId, BigInt>) -> Result<bool, PresburgerError> {
        match self {
            Atom::Lt(t) => Ok(t.eval(asg)?.is_negative()),
            Atom::Div(d, t) => Ok(t.eval(asg)?.mod_floor(&BigInt::from(d.clone())).is_zero()),
            Atom::NotDiv(d, t) => Ok(!t.eval(asg)?.mod_floor(&BigInt::from(d.clone())).is_zero()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Lt(t) => write!(f, "{t} < 0"),
            Atom::Div(d, t) => write!(f, "div({d}, {t})"),
            Atom::NotDiv(d, t) => write!(f, "~div({d}, {t})"),
        }
    }
}

/// Quantifier-free formulas in negation normal form over [`Atom`]s.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Qf {
    True,
    False,
    Atom(Atom),
    And(Vec<Qf>),
    Or(Vec<Qf>),
}

impl Qf {
    /// Constant folds and normalizes atoms as they are born.
    fn atom(a: Atom) -> Qf {
        match a {
            Atom::Lt(t) if t.is_constant() => {
                if t.constant.is_negative() {
                    Qf::True
                } else {
                    Qf::False
                }
            }
            Atom::Lt(t) => {
                // Divide through by the gcd of the coefficients, tightening
                // the constant: g*s + k < 0 iff s + (-floor((-k-1)/g) - 1) < 0.
                let g = t.coeffs.values().fold(BigInt::zero(), |acc, c| acc.gcd(c));
                if g.is_one() {
                    return Qf::Atom(Atom::Lt(t));
                }
                let bound = (-(t.constant.clone()) - BigInt::one()).div_floor(&g);
                let coeffs = t.coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect();
                Qf::Atom(Atom::Lt(Linear {
                    coeffs,
                    constant: -bound - 1,
                }))
            }
            Atom::Div(d, t) => Qf::div_atom(d, t, false),
            Atom::NotDiv(d, t) => Qf::div_atom(d, t, true),
        }
    }

    fn div_atom(d: BigUint, t: Linear, negated: bool) -> Qf {
        if d.is_one() {
            return if negated { Qf::False } else { Qf::True };
        }
        let dz = BigInt::from(d.clone());
        let constant = t.constant.mod_floor(&dz);
        let mut coeffs = BTreeMap::new();
        for (v, c) in t.coeffs {
            let c = c.mod_floor(&dz);
            if !c.is_zero() {
                coeffs.insert(v, c);
            }
        }
        if coeffs.is_empty() {
            return if constant.is_zero() != negated {
                Qf::True
            } else {
                Qf::False
            };
        }
        let t = Linear { coeffs, constant };
        if negated {
            Qf::Atom(Atom::NotDiv(d, t))
        } else {
            Qf::Atom(Atom::Div(d, t))
        }
    }

    fn and(items: Vec<Qf>) -> Qf {
        let mut set = BTreeSet::new();
        for item in items {
            match item {
                Qf::True => {}
                Qf::False => return Qf::False,
                Qf::And(inner) => set.extend(inner),
                other => {
                    set.insert(other);
                }
            }
        }
        match set.len() {
            0 => Qf::True,
            1 => set.into_iter().next().unwrap(),
            _ => Qf::And(set.into_iter().collect()),
        }
    }

    fn or(items: Vec<Qf>) -> Qf {
        let mut set = BTreeSet::new();
        for item in items {
            match item {
                Qf::False => {}
                Qf::True => return Qf::True,
                Qf::Or(inner) => set.extend(inner),
                other => {
                    set.insert(other);
                }
            }
        }
        match set.len() {
            0 => Qf::False,
            1 => set.into_iter().next().unwrap(),
            _ => Qf::Or(set.into_iter().collect()),
        }
    }

    fn negated(&self) -> Qf {
        match self {
            Qf::True => Qf::False,
            Qf::False => Qf::True,
            Qf::Atom(a) => a.negated(),
            Qf::And(items) => Qf::or(items.iter().map(Qf::negated).collect()),
            Qf::Or(items) => Qf::and(items.iter().map(Qf::negated).collect()),
        }
    }

    fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Qf) -> Qf {
        match self {
            Qf::True => Qf::True,
            Qf::False => Qf::False,
            Qf::Atom(a) => f(a),
            Qf::And(items) => Qf::and(items.iter().map(|i| i.map_atoms(f)).collect()),
            Qf::Or(items) => Qf::or(items.iter().map(|i| i.map_atoms(f)).collect()),
        }
    }

    fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(qf: &'a Qf, out: &mut Vec<&'a Atom>) {
            match qf {
                Qf::True | Qf::False => {}
                Qf::Atom(a) => out.push(a),
                Qf::And(items) | Qf::Or(items) => items.iter().for_each(|i| walk(i, out)),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Evaluates under an integer assignment of the free variables.
    pub fn eval(&self, asg: &BTreeMap<VarId, BigInt>) -> Result<bool, PresburgerError> {
        match self {
            Qf::True => Ok(true),
            Qf::False => Ok(false),
            Qf::Atom(a) => a.eval(asg),
            Qf::And(items) => {
                for i in items {
                    if !i.eval(asg)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Qf::Or(items) => {
                for i in items {
                    if i.eval(asg)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// The free variables mentioned by the atoms.
    pub fn variables(&self) -> BTreeSet<VarId> {
        self.atoms()
            .into_iter()
            .flat_map(|a| match a {
                Atom::Lt(t) | Atom::Div(_, t) | Atom::NotDiv(_, t) => {
                    t.coeffs.keys().copied().collect::<Vec<_>>()
                }
            })
            .collect()
    }
}

impl fmt::Display for Qf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_item(qf: &Qf, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match qf {
                Qf::And(..) | Qf::Or(..) => write!(f, "({qf})"),
                _ => write!(f, "{qf}"),
            }
        }
        match self {
            Qf::True => write!(f, "true"),
            Qf::False => write!(f, "false"),
            Qf::Atom(a) => write!(f, "{a}"),
            Qf::And(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write_item(item, f)?;
                }
                Ok(())
            }
            Qf::Or(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write_item(item, f)?;
                }
                Ok(())
            }
        }
    }
}

/// Translates a term of the additive fragment into a linear expression.
pub fn to_linear(t: &Term) -> Result<Linear, PresburgerError> {
    match t {
        Term::Var(v) => Ok(Linear::var(*v)),
        Term::Const(c) => match c.as_str() {
            "0" => Ok(Linear::default()),
            "1" => Ok(Linear::constant(BigInt::one())),
            other => Err(PresburgerError::UnsupportedSymbol(other.into())),
        },
        Term::Num(n) => Ok(Linear::constant(BigInt::from(n.clone()))),
        Term::App(f, args) if f == "+" && args.len() == 2 => {
            Ok(to_linear(&args[0])?.add(&to_linear(&args[1])?))
        }
        Term::App(f, _) => Err(PresburgerError::UnsupportedSymbol(f.clone())),
    }
}

fn qf_of(phi: &Formula) -> Result<Qf, PresburgerError> {
    match phi {
        Formula::Eq(s, t) => {
            // s = t  iff  s - t - 1 < 0 and t - s - 1 < 0.
            let a = to_linear(s)?.sub(&to_linear(t)?);
            Ok(Qf::and(vec![
                Qf::atom(Atom::Lt(a.clone().shift(-1))),
                Qf::atom(Atom::Lt(a.neg().shift(-1))),
            ]))
        }
        Formula::Rel(r, args) if r == "<" && args.len() == 2 => {
            let t = to_linear(&args[0])?.sub(&to_linear(&args[1])?);
            Ok(Qf::atom(Atom::Lt(t)))
        }
        Formula::Rel(r, _) => Err(PresburgerError::UnsupportedSymbol(r.clone())),
        Formula::Not(f) => Ok(qf_of(f)?.negated()),
        Formula::And(a, b) => Ok(Qf::and(vec![qf_of(a)?, qf_of(b)?])),
        Formula::Or(a, b) => Ok(Qf::or(vec![qf_of(a)?, qf_of(b)?])),
        Formula::Implies(a, b) => Ok(Qf::or(vec![qf_of(a)?.negated(), qf_of(b)?])),
        Formula::Exists(v, f) => {
            let body = Qf::and(vec![qf_of(f)?, nat_guard(*v)]);
            Ok(cooper_eliminate(*v, body))
        }
        Formula::Forall(v, f) => {
            let body = Qf::and(vec![qf_of(f)?.negated(), nat_guard(*v)]);
            Ok(cooper_eliminate(*v, body).negated())
        }
    }
}

/// `v >= 0`, i.e. `-v - 1 < 0`: quantifiers range over the naturals.
fn nat_guard(v: VarId) -> Qf {
    Qf::atom(Atom::Lt(Linear::var(v).neg().shift(-1)))
}

/// One round of Cooper elimination: `exists v (qf)` over the integers.
fn cooper_eliminate(v: VarId, qf: Qf) -> Qf {
    // Least common multiple of |coefficient of v| across atoms.
    let mut l = BigInt::one();
    for a in qf.atoms() {
        let c = match a {
            Atom::Lt(t) | Atom::Div(_, t) | Atom::NotDiv(_, t) => t.coeff(v),
        };
        if !c.is_zero() {
            l = l.lcm(&c.abs());
        }
    }
    // Rescale every atom so v's coefficient is +-l, then read it as a
    // fresh unit variable u = l*v, remembering l | u.
    let scaled = qf.map_atoms(&mut |a| {
        let rescale = |t: &Linear| -> Option<(Linear, BigInt)> {
            let c = t.coeff(v);
            if c.is_zero() {
                return None;
            }
            let m = (&l / c.abs()).abs();
            Some((t.clone().scale(&m).set_unit_coeff(v, c.is_positive()), m))
        };
        match a {
            Atom::Lt(t) => match rescale(t) {
                Some((t, _)) => Qf::Atom(Atom::Lt(t)),
                None => Qf::atom(a.clone()),
            },
            Atom::Div(d, t) => match rescale(t) {
                Some((t, m)) => Qf::atom(Atom::Div(d * m.to_biguint().unwrap(), t)),
                None => Qf::atom(a.clone()),
            },
            Atom::NotDiv(d, t) => match rescale(t) {
                Some((t, m)) => Qf::atom(Atom::NotDiv(d * m.to_biguint().unwrap(), t)),
                None => Qf::atom(a.clone()),
            },
        }
    });
    let with_stride = Qf::and(vec![
        scaled,
        Qf::atom(Atom::Div(l.to_biguint().unwrap(), Linear::var(v))),
    ]);
    // Period: lcm of all divisibility moduli that mention u.
    let mut period = BigUint::one();
    let mut lower_bounds: BTreeSet<Linear> = BTreeSet::new();
    for a in with_stride.atoms() {
        match a {
            Atom::Div(d, t) | Atom::NotDiv(d, t) if !t.coeff(v).is_zero() => {
                period = period.lcm(d);
            }
            Atom::Lt(t) if t.coeff(v) == -BigInt::one() => {
                // -u + s < 0, i.e. u > s.
                lower_bounds.insert(t.clone().drop_var(v));
            }
            _ => {}
        }
    }
    let substituted = |expr: &Linear| {
        with_stride.map_atoms(&mut |a| match a {
            Atom::Lt(t) => Qf::atom(Atom::Lt(t.clone().substitute(v, expr))),
            Atom::Div(d, t) => Qf::atom(Atom::Div(d.clone(), t.clone().substitute(v, expr))),
            Atom::NotDiv(d, t) => Qf::atom(Atom::NotDiv(d.clone(), t.clone().substitute(v, expr))),
        })
    };
    let minus_infinity = |k: &Linear| {
        with_stride.map_atoms(&mut |a| match a {
            Atom::Lt(t) => {
                let c = t.coeff(v);
                if c.is_zero() {
                    Qf::atom(a.clone())
                } else if c.is_positive() {
                    // u + s < 0 holds as u goes to minus infinity.
                    Qf::True
                } else {
                    Qf::False
                }
            }
            Atom::Div(d, t) => Qf::atom(Atom::Div(d.clone(), t.clone().substitute(v, k))),
            Atom::NotDiv(d, t) => Qf::atom(Atom::NotDiv(d.clone(), t.clone().substitute(v, k))),
        })
    };
    let d = BigInt::from(period.clone());
    let mut disjuncts = Vec::new();
    let mut k = BigInt::one();
    while k <= d {
        let kl = Linear::constant(k.clone());
        disjuncts.push(minus_infinity(&kl));
        for b in &lower_bounds {
            disjuncts.push(substituted(&b.clone().add(&kl)));
        }
        k += 1;
    }
    let result = Qf::or(disjuncts);
    debug_assert!(
        !result.variables().contains(&v),
        "elimination left the variable behind"
    );
    result
}

/// Eliminates all quantifiers (relativized to the naturals), returning an
/// equivalent quantifier-free form over the formula's free variables.
pub fn eliminate(phi: &Formula) -> Result<Qf, PresburgerError> {
    qf_of(phi)
}

/// Decides a sentence of the additive fragment over the naturals.
pub fn decide(phi: &Formula) -> Result<bool, PresburgerError> {
    if !phi.is_sentence() {
        return Err(PresburgerError::NotASentence);
    }
    qf_of(phi)?.eval(&BTreeMap::new())
}

/// An eventual-periodicity certificate for the set of naturals defined by
/// a one-free-variable formula: below `threshold` membership is tabulated;
/// from `threshold` on it depends only on the residue mod `period`.
/// `threshold` is always a multiple of `period`, so `residues_in` holds
/// residues directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodCertificate {
    pub formula: String,
    pub eliminated: String,
    pub period: u64,
    pub threshold: u64,
    pub below: Vec<bool>,
    pub residues_in: BTreeSet<u64>,
}

impl PeriodCertificate {
    pub fn member(&self, n: u64) -> bool {
        if n < self.threshold {
            self.below[n as usize]
        } else {
            self.residues_in.contains(&(n % self.period))
        }
    }
}

/// Computes the eventual-periodicity certificate of the set defined by
/// `phi`, which must have exactly one free variable.
///
/// The period is the lcm of the divisibility moduli in the eliminated
/// form; every comparison atom stabilizes past its own breakpoint, and the
/// threshold is the largest breakpoint rounded up to a multiple of the
/// period.
pub fn definable_set_period(phi: &Formula) -> Result<PeriodCertificate, PresburgerError> {
    let free: Vec<VarId> = phi.free_vars().into_iter().collect();
    let &[v] = free.as_slice() else {
        return Err(PresburgerError::WrongFreeVariables(free));
    };
    let qf = qf_of(phi)?;
    let mut period = BigUint::one();
    let mut breakpoint = BigInt::zero();
    for a in qf.atoms() {
        match a {
            Atom::Div(d, t) | Atom::NotDiv(d, t) => {
                if !t.coeff(v).is_zero() {
                    period = period.lcm(d);
                }
            }
            Atom::Lt(t) => {
                let c = t.coeff(v);
                let k = t.clone().drop_var(v).constant;
                // c*v + k < 0: for c > 0 the atom is false from
                // ceil(-k/c); for c < 0 it is true from floor(k/|c|) + 1.
                let stable_from = if c.is_positive() {
                    -(k.div_floor(&c))
                } else if c.is_negative() {
                    k.div_floor(&-c) + 1
                } else {
                    continue;
                };
                breakpoint = breakpoint.max(stable_from);
            }
        }
    }
    let period = period.to_u64().ok_or(PresburgerError::ScaleOverflow)?;
    let breakpoint = if breakpoint.is_negative() {
        0
    } else {
        breakpoint.to_u64().ok_or(PresburgerError::ScaleOverflow)?
    };
    let threshold = breakpoint
        .div_ceil(period)
        .checked_mul(period)
        .ok_or(PresburgerError::ScaleOverflow)?;
    let at = |n: u64| qf.eval(&BTreeMap::from([(v, BigInt::from(n))]));
    let below = (0..threshold).map(at).collect::<Result<Vec<_>, _>>()?;
    let mut residues_in = BTreeSet::new();
    for r in 0..period {
        if at(threshold + r)? {
            residues_in.insert(r);
        }
    }
    Ok(PeriodCertificate {
        formula: phi.to_string(),
        eliminated: qf.to_string(),
        period,
        threshold,
        below,
        residues_in,
    })
}

/// For one candidate period: the largest tested `n` with
/// `member(n) != member(n + p)`, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub period: u64,
    pub last_violation: Option<u64>,
}

/// Outcome of a periodicity-refutation sweep over `n <= bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationReport {
    pub set: String,
    pub bound: u64,
    pub rows: Vec<PeriodRow>,
    pub verdict: String,
}

impl RefutationReport {
    /// Whether the claim "membership has period `p` from threshold `T`
    /// on" is defeated by a tested violation at or past `T`. `None` when
    /// `p` was not swept.
    pub fn defeats(&self, threshold: u64, period: u64) -> Option<bool> {
        self.rows
            .iter()
            .find(|r| r.period == period)
            .map(|r| r.last_violation.is_some_and(|n| n >= threshold))
    }
}

/// Sweeps periods `1..=max_period`, recording for each the last violation
/// `member(n) != member(n + p)` with `n + p <= bound`. A violation at `n`
/// defeats every claim of eventual periodicity `(T, p)` with `T <= n`;
/// finding violations arbitrarily late is evidence, not proof, of
/// non-definability in the additive fragment.
pub fn periodicity_refute(
    set: &str,
    member: impl Fn(u64) -> bool,
    bound: u64,
    max_period: u64,
) -> RefutationReport {
    let table: Vec<bool> = (0..=bound).map(member).collect();
    let mut rows = Vec::new();
    for p in 1..=max_period.min(bound) {
        let last_violation = (0..=bound - p)
            .rev()
            .find(|&n| table[n as usize] != table[(n + p) as usize]);
        rows.push(PeriodRow {
            period: p,
            last_violation,
        });
    }
    let unrefuted: Vec<u64> = rows
        .iter()
        .filter(|r| r.last_violation.is_none())
        .map(|r| r.period)
        .collect();
    let verdict = if unrefuted.is_empty() {
        format!(
            "every candidate period up to {} is violated below {bound}; late violations are \
             evidence, not proof, of non-definability",
            max_period.min(bound)
        )
    } else {
        format!(
            "no refutation up to bound {bound} for period(s) {unrefuted:?}: membership is \
             consistent with eventual periodicity there"
        )
    };
    RefutationReport {
        set: set.into(),
        bound,
        rows,
        verdict,
    }
}

/// Named membership predicates for the refuter.
pub fn builtin_set(name: &str) -> Option<fn(u64) -> bool> {
    match name {
        "squares" => Some(|n| {
            let r = n.isqrt();
            r * r == n
        }),
        "evens" => Some(|n| n % 2 == 0),
        "primes" => Some(|n| n >= 2 && (2..=n.isqrt()).all(|d| n % d != 0)),
        "powers" => Some(|n| n != 0 && n.is_power_of_two()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{eval_nat, Budget, NatAssignment, TruthValue3};
    use crate::syntax::{parse_formula, Signature};
    use proptest::prelude::*;

    fn parse(text: &str) -> Formula {
        parse_formula(text, &Signature::presburger()).unwrap()
    }

    #[test]
    fn decide_matches_hand_verdicts() {
        let cases = [
            ("exists x. x + x = 4", true),
            ("exists x. x + x = 5", false),
            ("forall x. x < 5", false),
            ("forall x exists y. x < y", true),
            ("exists x forall y. ~(y < x)", true),
            ("forall x. (x < 3 -> exists y. x + y = 3)", true),
            ("exists x. x < 0", false),
            ("forall x exists y. (x < y & exists z. y = z + z)", true),
            ("forall x exists y. (x = y + y | x = y + y + 1)", true),
            ("exists x. (x + x = 6 & x + 1 = 4)", true),
            ("exists x. (x + x = 6 & x + 1 = 5)", false),
            (
                "forall x. (exists y. x = y + y | exists y. x = y + y + 1)",
                true,
            ),
        ];
        for (text, expected) in cases {
            assert_eq!(decide(&parse(text)).unwrap(), expected, "{text}");
        }
    }

    #[test]
    fn decide_requires_a_sentence() {
        assert!(matches!(
            decide(&parse_formula("x = 0", &Signature::presburger()).unwrap()),
            Err(PresburgerError::NotASentence)
        ));
    }

    #[test]
    fn multiplication_is_rejected() {
        let phi = parse_formula("exists x. x * x = x", &Signature::arithmetic()).unwrap();
        assert!(matches!(
            decide(&phi),
            Err(PresburgerError::UnsupportedSymbol(s)) if s == "*"
        ));
    }

    #[test]
    fn elimination_leaves_only_the_free_variable() {
        let phi = parse_formula("exists y. x = y + y", &Signature::presburger()).unwrap();
        let qf = eliminate(&phi).unwrap();
        assert_eq!(qf.variables(), BTreeSet::from([0]));
        // Decided pointwise, the eliminated form is the even numbers.
        for n in 0..30u64 {
            let holds = qf.eval(&BTreeMap::from([(0, BigInt::from(n))])).unwrap();
            assert_eq!(holds, n % 2 == 0, "n = {n}");
        }
    }

    #[test]
    fn even_numbers_certificate_is_frozen() {
        let phi = parse_formula("exists y. x = y + y", &Signature::presburger()).unwrap();
        let cert = definable_set_period(&phi).unwrap();
        assert_eq!(cert.period, 2);
        assert_eq!(cert.threshold, 2);
        assert_eq!(cert.below, vec![true, false]);
        assert_eq!(cert.residues_in, BTreeSet::from([0]));
    }

    #[test]
    fn initial_segment_certificate_is_frozen() {
        let phi = parse_formula("x < 5", &Signature::presburger()).unwrap();
        let cert = definable_set_period(&phi).unwrap();
        assert_eq!(cert.period, 1);
        assert_eq!(cert.threshold, 5);
        assert_eq!(cert.below, vec![true; 5]);
        assert!(cert.residues_in.is_empty());
    }

    #[test]
    fn trivial_certificate_is_frozen() {
        let phi = parse_formula("x = x", &Signature::presburger()).unwrap();
        let cert = definable_set_period(&phi).unwrap();
        assert_eq!(cert.period, 1);
        assert_eq!(cert.threshold, 0);
        assert!(cert.below.is_empty());
        assert_eq!(cert.residues_in, BTreeSet::from([0]));
    }

    #[test]
    fn certificates_match_the_decision_procedure() {
        let texts = [
            "exists y. x = y + y + y",
            "exists y. (x = y + y & 4 < y)",
            "exists y. x + 3 < y + y",
            "forall y. (y < 3 -> x + y < 9)",
            "exists y. (x = y + y | x = y + y + y)",
        ];
        for text in texts {
            let phi = parse_formula(text, &Signature::presburger()).unwrap();
            let cert = definable_set_period(&phi).unwrap();
            for n in 0..60u64 {
                let instance = phi.substitute(0, &crate::syntax::numeral_u64(n));
                assert_eq!(
                    cert.member(n),
                    decide(&instance).unwrap(),
                    "{text} at n = {n}"
                );
            }
        }
    }

    #[test]
    fn membership_depends_only_on_residue_past_threshold() {
        let phi = parse_formula("exists y. (x = y + y & 4 < y)", &Signature::presburger()).unwrap();
        let cert = definable_set_period(&phi).unwrap();
        assert_eq!(cert.threshold % cert.period, 0);
        for n in cert.threshold..cert.threshold + 6 * cert.period {
            assert_eq!(cert.member(n), cert.member(n + cert.period));
        }
    }

    #[test]
    fn squares_are_refuted_for_all_small_claims() {
        // The bound is itself a square, so for every period p either
        // bound - p is not a square (violation there) or it is, and the
        // violation sits at exactly bound - 2p; either way every claim
        // (T, p) with T + 2p <= bound dies.
        let bound = 10_000;
        let max_period = 300;
        let report = periodicity_refute(
            "squares",
            builtin_set("squares").unwrap(),
            bound,
            max_period,
        );
        for p in 1..=max_period {
            let row = &report.rows[(p - 1) as usize];
            assert_eq!(row.period, p);
            let last = row
                .last_violation
                .expect("squares must violate every period");
            assert!(
                last + 2 * p >= bound,
                "period {p}: last violation {last} leaves claims alive"
            );
        }
        for (t, p) in [(0, 1), (100, 3), (9_000, 250), (9_998, 1)] {
            assert_eq!(report.defeats(t, p), Some(true), "claim ({t}, {p})");
        }
        assert!(report
            .verdict
            .contains("evidence, not proof, of non-definability"));
    }

    #[test]
    fn evens_survive_their_true_period() {
        let report = periodicity_refute("evens", builtin_set("evens").unwrap(), 1000, 2);
        assert_eq!(report.rows[0].period, 1);
        assert_eq!(report.rows[0].last_violation, Some(999));
        assert_eq!(report.rows[1].period, 2);
        assert_eq!(report.rows[1].last_violation, None);
        assert_eq!(report.defeats(0, 2), Some(false));
        assert_eq!(report.defeats(10, 4), None);
        assert!(report.verdict.contains("no refutation up to bound"));
    }

    #[test]
    fn certificate_agrees_with_refuter_for_definable_sets() {
        let phi = parse_formula("exists y. x = y + y", &Signature::presburger()).unwrap();
        let cert = definable_set_period(&phi).unwrap();
        let report = periodicity_refute("evens", |n| cert.member(n), 1000, 4);
        let survivors: Vec<u64> = report
            .rows
            .iter()
            .filter(|r| r.last_violation.is_none())
            .map(|r| r.period)
            .collect();
        assert_eq!(survivors, vec![2, 4]);
    }

    fn brute_instance(phi: &Formula, x: u64, range: u64) -> bool {
        // Independent route: substitute the free variable, strip the one
        // existential by hand, and evaluate body instances exactly.
        let Formula::Exists(v, body) = phi.substitute(0, &crate::syntax::numeral_u64(x)) else {
            panic!("corpus formulas start with a single existential");
        };
        let sig = Signature::presburger();
        (0..=range).any(|y| {
            let inst = body.substitute(v, &crate::syntax::numeral_u64(y));
            match eval_nat(&inst, &NatAssignment::new(), &sig, Budget::new(1, 4)).unwrap() {
                TruthValue3::True => true,
                TruthValue3::False => false,
                TruthValue3::Unknown { .. } => panic!("quantifier-free instances are exact"),
            }
        })
    }

    prop_compose! {
        fn arb_linear_atom()(
            xc in 0i64..=2,
            yc in 0i64..=2,
            k in 0i64..=4,
            rhs_k in 0i64..=4,
            rhs_y in 0i64..=1,
            lt in any::<bool>(),
        ) -> Formula {
            // Terms stay in the surface syntax: sums of x, y, and ones.
            fn side(xc: i64, yc: i64, k: i64) -> Term {
                let mut t: Option<Term> = None;
                let mut push = |s: Term| {
                    t = Some(match t.take() {
                        None => s,
                        Some(prev) => Term::App("+".into(), vec![prev, s]),
                    });
                };
                for _ in 0..xc {
                    push(Term::Var(0));
                }
                for _ in 0..yc {
                    push(Term::Var(1));
                }
                if k > 0 {
                    push(crate::syntax::numeral_u64(k as u64));
                }
                t.unwrap_or(Term::Const("0".into()))
            }
            let l = side(xc, yc, k);
            let r = side(0, rhs_y, rhs_k);
            if lt {
                Formula::Rel("<".into(), vec![l, r])
            } else {
                Formula::Eq(l, r)
            }
        }
    }

    fn arb_exists_formula() -> impl Strategy<Value = Formula> {
        let atom = arb_linear_atom().boxed();
        let combo = prop_oneof![
            atom.clone().prop_map(|a| a),
            (atom.clone(), atom.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (atom.clone(), atom.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (atom.clone(), atom.clone()).prop_map(|(a, b)| Formula::and(a, Formula::not(b))),
            atom.prop_map(Formula::not),
        ];
        combo.prop_map(|body| Formula::exists(1, body))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_elimination_matches_brute_force(phi in arb_exists_formula()) {
            // Coefficients <= 2 and constants <= 4 over x <= 10 keep every
            // satisfiable atom's least witness well under 300.
            let qf = eliminate(&phi).unwrap();
            for x in 0..=10u64 {
                let via_qf = qf.eval(&BTreeMap::from([(0, BigInt::from(x))])).unwrap();
                let via_brute = brute_instance(&phi, x, 300);
                prop_assert_eq!(via_qf, via_brute, "x = {} in {}", x, phi);
            }
        }

        #[test]
        fn prop_decide_agrees_with_bounded_evaluation(
            phi in arb_exists_formula(),
            bound in 1u64..=12,
        ) {
            // Bound the existential syntactically so the semantic
            // evaluator is exact, then compare both deciders.
            let Formula::Exists(v, body) = phi else { unreachable!() };
            let bounded = Formula::exists(
                v,
                Formula::and(
                    Formula::Rel(
                        "<".into(),
                        vec![Term::Var(v), crate::syntax::numeral_u64(bound)],
                    ),
                    *body,
                ),
            );
            let sentence = Formula::forall(
                0,
                Formula::implies(
                    Formula::Rel("<".into(), vec![Term::Var(0), crate::syntax::numeral_u64(8)]),
                    bounded,
                ),
            );
            let via_decide = decide(&sentence).unwrap();
            let via_eval = eval_nat(
                &sentence,
                &NatAssignment::new(),
                &Signature::presburger(),
                Budget::new(16, 6),
            )
            .unwrap();
            prop_assert_eq!(TruthValue3::from_bool(via_decide), via_eval, "{}", sentence);
        }
    }
}
