//! Gödel coding: Cantor pairing, tag-based codes for terms and formulas,
//! substitution on codes, and the diagonal (fixed-point) construction.
//!
//! The numbering is frozen:
//!
//! - `pair(a, b) = (a+b)(a+b+1)/2 + b`, the Cantor pairing bijection.
//! - Lists: `nil` codes as 0, `cons(h, t)` as `pair(h, t) + 1`.
//! - Every AST node codes as `pair(tag, payload)`.
//!
//! Term tags: 0 variable (payload: index), 1 constant (payload: position in
//! the signature's constant list), 2 application (payload: `pair(function
//! position, argument list)`), 3 numeral abbreviation (payload: the value).
//!
//! Formula tags: 0 equality (payload: `pair(left, right)`), 1 relation
//! (payload: `pair(relation position, argument list)`), 2 negation,
//! 3 conjunction, 4 disjunction, 5 implication (payloads: child or
//! `pair(left, right)`), 6 existential, 7 universal (payload:
//! `pair(variable index, body)`).
//!
//! Codes are relative to a [`Signature`], but signatures extend by
//! appending symbols, so a formula's code is the same under any extension
//! of the signature: codes are stable as truth-predicate levels are added.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::syntax::{numeral, Formula, Signature, Term, VarId};

/// Errors from encoding, decoding, and diagonalization.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    /// Encoding met a symbol the signature does not declare.
    #[error("cannot encode `{name}`: not in the signature")]
    SymbolNotInSignature { name: String },
    /// Decoding met a malformed node; `node` is the first bad subcode.
    #[error("invalid code at node {node}: {reason}")]
    Malformed { node: BigUint, reason: String },
    /// diag/liar need exactly the free variable `x`.
    #[error("diagonalization needs exactly the free variable x, found {found:?}")]
    WrongFreeVariables { found: Vec<VarId> },
    /// diag/liar need the binary function symbol `sub` in the signature.
    #[error("diagonalization needs the binary function symbol `sub` in the signature")]
    MissingSub,
}

/// Cantor pairing `(a+b)(a+b+1)/2 + b`; a bijection ℕ×ℕ → ℕ with
/// `pair(0,0) = 0`.
pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

/// Inverse of [`pair`].
pub fn unpair(n: &BigUint) -> (BigUint, BigUint) {
    // Largest w with w(w+1)/2 <= n.
    let w = ((n * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let b = n - t;
    let a = &w - &b;
    (a, b)
}

/// [`pair`] on machine words. Panics if the result exceeds `u64`; callers
/// pass small plane coordinates (bit positions of forcing conditions).
pub fn pair_u64(a: u64, b: u64) -> u64 {
    let s = a as u128 + b as u128;
    let n = s * (s + 1) / 2 + b as u128;
    u64::try_from(n).expect("pair overflows u64")
}

/// Inverse of [`pair_u64`].
pub fn unpair_u64(n: u64) -> (u64, u64) {
    let (a, b) = unpair(&BigUint::from(n));
    (a.to_u64().unwrap(), b.to_u64().unwrap())
}

fn encode_list(items: &[BigUint]) -> BigUint {
    items
        .iter()
        .rev()
        .fold(BigUint::zero(), |tail, head| pair(head, &tail) + 1u32)
}

fn decode_list(n: &BigUint) -> Vec<BigUint> {
    let mut items = Vec::new();
    let mut rest = n.clone();
    while !rest.is_zero() {
        let (head, tail) = unpair(&(rest - 1u32));
        items.push(head);
        rest = tail;
    }
    items
}

fn malformed(node: &BigUint, reason: impl Into<String>) -> CodingError {
    CodingError::Malformed {
        node: node.clone(),
        reason: reason.into(),
    }
}

fn to_var(node: &BigUint, payload: &BigUint) -> Result<VarId, CodingError> {
    payload
        .to_usize()
        .ok_or_else(|| malformed(node, "variable index too large"))
}

/// Encoder/decoder bound to a signature.
pub struct Coder<'a> {
    sig: &'a Signature,
}

impl<'a> Coder<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Coder { sig }
    }

    pub fn signature(&self) -> &Signature {
        self.sig
    }

    pub fn encode_term(&self, t: &Term) -> Result<BigUint, CodingError> {
        Ok(match t {
            Term::Var(v) => pair(&BigUint::zero(), &BigUint::from(*v)),
            Term::Const(c) => {
                let idx = self
                    .sig
                    .constant_index(c)
                    .ok_or_else(|| CodingError::SymbolNotInSignature { name: c.clone() })?;
                pair(&BigUint::one(), &BigUint::from(idx))
            }
            Term::App(f, args) => {
                let idx = self
                    .sig
                    .function_index(f)
                    .ok_or_else(|| CodingError::SymbolNotInSignature { name: f.clone() })?;
                let arg_codes = args
                    .iter()
                    .map(|a| self.encode_term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                pair(
                    &BigUint::from(2u32),
                    &pair(&BigUint::from(idx), &encode_list(&arg_codes)),
                )
            }
            Term::Num(n) => pair(&BigUint::from(3u32), n),
        })
    }

    pub fn decode_term(&self, code: &BigUint) -> Result<Term, CodingError> {
        let (tag, payload) = unpair(code);
        match tag.to_u32() {
            Some(0) => Ok(Term::Var(to_var(code, &payload)?)),
            Some(1) => {
                let idx = payload
                    .to_usize()
                    .ok_or_else(|| malformed(code, "constant index too large"))?;
                let name = self
                    .sig
                    .constants()
                    .get(idx)
                    .ok_or_else(|| malformed(code, "constant index out of range"))?;
                Ok(Term::Const(name.clone()))
            }
            Some(2) => {
                let (fidx, list) = unpair(&payload);
                let idx = fidx
                    .to_usize()
                    .ok_or_else(|| malformed(code, "function index too large"))?;
                let (name, arity) = self
                    .sig
                    .functions()
                    .get(idx)
                    .ok_or_else(|| malformed(code, "function index out of range"))?;
                let arg_codes = decode_list(&list);
                if arg_codes.len() != *arity {
                    return Err(malformed(
                        code,
                        format!(
                            "`{name}` expects {arity} arguments, found {}",
                            arg_codes.len()
                        ),
                    ));
                }
                let args = arg_codes
                    .iter()
                    .map(|c| self.decode_term(c))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(name.clone(), args))
            }
            Some(3) => Ok(Term::Num(payload)),
            _ => Err(malformed(code, "unknown term tag")),
        }
    }

    pub fn encode(&self, phi: &Formula) -> Result<BigUint, CodingError> {
        let node = |tag: u32, payload: &BigUint| pair(&BigUint::from(tag), payload);
        Ok(match phi {
            Formula::Eq(l, r) => node(0, &pair(&self.encode_term(l)?, &self.encode_term(r)?)),
            Formula::Rel(r, args) => {
                let idx = self
                    .sig
                    .relation_index(r)
                    .ok_or_else(|| CodingError::SymbolNotInSignature { name: r.clone() })?;
                let arg_codes = args
                    .iter()
                    .map(|a| self.encode_term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                node(1, &pair(&BigUint::from(idx), &encode_list(&arg_codes)))
            }
            Formula::Not(f) => node(2, &self.encode(f)?),
            Formula::And(a, b) => node(3, &pair(&self.encode(a)?, &self.encode(b)?)),
            Formula::Or(a, b) => node(4, &pair(&self.encode(a)?, &self.encode(b)?)),
            Formula::Implies(a, b) => node(5, &pair(&self.encode(a)?, &self.encode(b)?)),
            Formula::Exists(v, f) => node(6, &pair(&BigUint::from(*v), &self.encode(f)?)),
            Formula::Forall(v, f) => node(7, &pair(&BigUint::from(*v), &self.encode(f)?)),
        })
    }

    pub fn decode(&self, code: &BigUint) -> Result<Formula, CodingError> {
        let (tag, payload) = unpair(code);
        match tag.to_u32() {
            Some(0) => {
                let (l, r) = unpair(&payload);
                Ok(Formula::Eq(self.decode_term(&l)?, self.decode_term(&r)?))
            }
            Some(1) => {
                let (ridx, list) = unpair(&payload);
                let idx = ridx
                    .to_usize()
                    .ok_or_else(|| malformed(code, "relation index too large"))?;
                let (name, arity) = self
                    .sig
                    .relations()
                    .get(idx)
                    .ok_or_else(|| malformed(code, "relation index out of range"))?;
                let arg_codes = decode_list(&list);
                if arg_codes.len() != *arity {
                    return Err(malformed(
                        code,
                        format!(
                            "`{name}` expects {arity} arguments, found {}",
                            arg_codes.len()
                        ),
                    ));
                }
                let args = arg_codes
                    .iter()
                    .map(|c| self.decode_term(c))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Formula::Rel(name.clone(), args))
            }
            Some(2) => Ok(Formula::not(self.decode(&payload)?)),
            Some(3) | Some(4) | Some(5) => {
                let (a, b) = unpair(&payload);
                let (a, b) = (self.decode(&a)?, self.decode(&b)?);
                Ok(match tag.to_u32().unwrap() {
                    3 => Formula::and(a, b),
                    4 => Formula::or(a, b),
                    _ => Formula::implies(a, b),
                })
            }
            Some(6) | Some(7) => {
                let (v, body) = unpair(&payload);
                let v = to_var(code, &v)?;
                let body = self.decode(&body)?;
                Ok(if tag.to_u32() == Some(6) {
                    Formula::exists(v, body)
                } else {
                    Formula::forall(v, body)
                })
            }
            _ => Err(malformed(code, "unknown formula tag")),
        }
    }

    /// Decodes `code` as a closed formula (a sentence); rejects codes whose
    /// formula has free variables.
    pub fn decode_sentence(&self, code: &BigUint) -> Result<Formula, CodingError> {
        let phi = self.decode(code)?;
        if phi.is_sentence() {
            Ok(phi)
        } else {
            Err(malformed(code, "decoded formula has free variables"))
        }
    }

    /// Substitution on codes: `encode(substitute(decode(c), x, numeral(n)))`.
    /// When the decoded formula does not mention `x` free, this is the
    /// identity on `c`.
    pub fn sub_code(&self, c: &BigUint, n: &BigUint) -> Result<BigUint, CodingError> {
        let phi = self.decode(c)?;
        self.encode(&phi.substitute(0, &numeral(n)))
    }

    /// The total interpretation of the `sub` function symbol over ℕ:
    /// [`Coder::sub_code`] where the first argument is a valid formula
    /// code, and the first argument unchanged otherwise.
    pub fn sub_value(&self, a: &BigUint, b: &BigUint) -> BigUint {
        self.sub_code(a, b).unwrap_or_else(|_| a.clone())
    }

    /// The diagonal construction: for `phi` with exactly the free variable
    /// `x`, builds the helper `psi(x) := phi(sub(x, x))` and the sentence
    /// `sigma := psi(numeral(code(psi)))`. Then the value of the term
    /// `sub(code(psi), code(psi))` is exactly `code(sigma)`, so `sigma`
    /// asserts of its own code whatever `phi` asserts of its argument.
    pub fn diag(&self, phi: &Formula) -> Result<Diagonal, CodingError> {
        let fv = phi.free_vars();
        if !(fv.len() == 1 && fv.contains(&0)) {
            return Err(CodingError::WrongFreeVariables {
                found: fv.into_iter().collect(),
            });
        }
        if self.sig.function_arity("sub") != Some(2) {
            return Err(CodingError::MissingSub);
        }
        let sub_xx = Term::App("sub".into(), vec![Term::Var(0), Term::Var(0)]);
        let helper = phi.substitute(0, &sub_xx);
        let helper_code = self.encode(&helper)?;
        let sentence = helper.substitute(0, &numeral(&helper_code));
        let code = self.encode(&sentence)?;
        Ok(Diagonal {
            sentence,
            code,
            helper,
            helper_code,
        })
    }

    /// The liar construction: [`Coder::diag`] applied to `~phi`, yielding a
    /// sentence asserting that its own code does NOT satisfy `phi`.
    pub fn liar(&self, phi: &Formula) -> Result<Diagonal, CodingError> {
        self.diag(&Formula::not(phi.clone()))
    }
}

/// Output of [`Coder::diag`]/[`Coder::liar`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagonal {
    /// The self-referential sentence σ.
    pub sentence: Formula,
    /// `encode(sentence)`.
    pub code: BigUint,
    /// The helper ψ(x) = φ(sub(x,x)).
    pub helper: Formula,
    /// `encode(helper)`; σ = ψ(numeral(helper_code)).
    pub helper_code: BigUint,
}

impl fmt::Display for Diagonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (code: {} digits)",
            self.sentence,
            self.code.to_string().len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{numeral_u64, parse_formula};
    use num_traits::FromPrimitive;
    use proptest::prelude::*;

    fn sig() -> Signature {
        Signature::arithmetic().with_sub()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn pairing_frozen_values() {
        assert_eq!(pair(&big(0), &big(0)), big(0));
        assert_eq!(pair(&big(1), &big(0)), big(1));
        assert_eq!(pair(&big(0), &big(1)), big(2));
        assert_eq!(pair(&big(17), &big(4)), big(235));
        assert_ne!(pair(&big(1), &big(0)), pair(&big(0), &big(1)));
    }

    #[test]
    fn pairing_is_a_bijection_on_an_exhaustive_range() {
        // Surjectivity + injectivity on 0..10^5 via the inverse.
        for n in 0..100_000u64 {
            let (a, b) = unpair_u64(n);
            assert_eq!(pair_u64(a, b), n, "unpair({n}) = ({a},{b}) must pair back");
        }
    }

    #[test]
    fn unpair_inverts_pair_on_large_values() {
        let a = BigUint::parse_bytes(b"987654321098765432109876543210", 10).unwrap();
        let b = BigUint::parse_bytes(b"123456789012345678901234567890123456", 10).unwrap();
        assert_eq!(unpair(&pair(&a, &b)), (a, b));
    }

    #[test]
    fn list_coding_round_trips() {
        let items: Vec<BigUint> = [5u64, 0, 7, 123456].iter().map(|&n| big(n)).collect();
        assert_eq!(decode_list(&encode_list(&items)), items);
        assert_eq!(decode_list(&BigUint::zero()), Vec::<BigUint>::new());
    }

    #[test]
    fn formula_codes_round_trip_on_samples() {
        let s = Signature::with_truth_levels(2).with_sub();
        let coder = Coder::new(&s);
        let samples = [
            "0 = 0",
            "exists x. x + x = 1 + 1 + 1 + 1",
            "forall x. x < x + 1",
            "x = 0 -> (y = 1 | ~(z = z))",
            "Tr0(1) & Tr1(0)",
            "exists v7. v7 * v7 = sub(x, y)",
            "x < 12345678901234567890",
        ];
        for text in samples {
            let phi = parse_formula(text, &s).unwrap();
            let code = coder.encode(&phi).unwrap();
            assert_eq!(coder.decode(&code).unwrap(), phi, "round trip for {text}");
        }
    }

    #[test]
    fn distinct_atoms_get_distinct_codes() {
        let s = sig();
        let coder = Coder::new(&s);
        let a = coder.encode(&parse_formula("0 = 0", &s).unwrap()).unwrap();
        let b = coder.encode(&parse_formula("1 = 1", &s).unwrap()).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn successor_of_a_code_never_decodes_to_the_same_formula() {
        let s = Signature::with_truth_levels(1).with_sub();
        let coder = Coder::new(&s);
        let mut checked = 0;
        for i in 0..100u64 {
            let phi = Formula::exists(
                0,
                Formula::Eq(
                    Term::App("+".into(), vec![Term::Var(0), numeral_u64(i)]),
                    numeral_u64(2 * i + 1),
                ),
            );
            let code = coder.encode(&phi).unwrap() + 1u32;
            if let Ok(other) = coder.decode(&code) {
                assert_ne!(other, phi, "code {code} must not alias")
            }
            checked += 1;
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn codes_are_stable_across_signature_extension() {
        let base = Signature::arithmetic();
        let extended = Signature::with_truth_levels(3).with_sub().with_pairing();
        let phi = parse_formula("exists x. x * x = 1 + 1 + 1 + 1", &base).unwrap();
        let c0 = Coder::new(&base).encode(&phi).unwrap();
        let c1 = Coder::new(&extended).encode(&phi).unwrap();
        assert_eq!(c0, c1);
        assert_eq!(Coder::new(&extended).decode(&c0).unwrap(), phi);
    }

    #[test]
    fn decode_names_the_first_malformed_node() {
        let s = Signature::arithmetic();
        let coder = Coder::new(&s);
        // Tag 1 (relation) with relation index 9: out of range.
        let bad = pair(&big(1), &pair(&big(9), &encode_list(&[big(0), big(0)])));
        match coder.decode(&bad) {
            Err(CodingError::Malformed { node, reason }) => {
                assert_eq!(node, bad);
                assert!(reason.contains("relation index"), "reason: {reason}");
            }
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn sub_code_unfolds_on_the_reference_examples() {
        let s = sig();
        let coder = Coder::new(&s);
        // x = x at n=2 becomes the numeral-2 equation.
        let open = parse_formula("x = x", &s).unwrap();
        let c = coder.encode(&open).unwrap();
        let expected = coder
            .encode(&Formula::Eq(numeral_u64(2), numeral_u64(2)))
            .unwrap();
        assert_eq!(coder.sub_code(&c, &big(2)).unwrap(), expected);
        // A sentence is untouched for every n.
        let closed = parse_formula("0 = 0", &s).unwrap();
        let c = coder.encode(&closed).unwrap();
        for n in [0u64, 1, 99] {
            assert_eq!(coder.sub_code(&c, &big(n)).unwrap(), c);
        }
    }

    #[test]
    fn sub_value_is_total() {
        let s = sig();
        let coder = Coder::new(&s);
        // 10^40 is unlikely to be a valid code; if it decodes, sub_value
        // still returns something. Totality is the contract under test.
        let junk = BigUint::from(10u32).pow(40);
        let out = coder.sub_value(&junk, &big(3));
        if coder.decode(&junk).is_err() {
            assert_eq!(out, junk);
        }
    }

    #[test]
    fn diag_fixed_point_identity_holds_exactly() {
        let s = sig();
        let coder = Coder::new(&s);
        for text in ["x = x", "~(x = x)", "exists y. x = y + y", "0 < x"] {
            let phi = parse_formula(text, &s).unwrap();
            let d = coder.diag(&phi).unwrap();
            assert!(d.sentence.is_sentence());
            assert_eq!(
                coder.sub_code(&d.helper_code, &d.helper_code).unwrap(),
                d.code,
                "sub(code(psi), code(psi)) must equal code(sigma) for {text}"
            );
        }
    }

    #[test]
    fn liar_is_diag_of_the_negation() {
        let s = sig();
        let coder = Coder::new(&s);
        let phi = parse_formula("0 < x", &s).unwrap();
        let via_liar = coder.liar(&phi).unwrap();
        let via_diag = coder.diag(&Formula::not(phi)).unwrap();
        assert_eq!(via_liar, via_diag);
    }

    #[test]
    fn diag_rejects_bad_inputs() {
        let s = sig();
        let coder = Coder::new(&s);
        let wrong_var = parse_formula("y = y", &s).unwrap();
        assert!(matches!(
            coder.diag(&wrong_var),
            Err(CodingError::WrongFreeVariables { .. })
        ));
        let closed = parse_formula("0 = 0", &s).unwrap();
        assert!(matches!(
            coder.diag(&closed),
            Err(CodingError::WrongFreeVariables { .. })
        ));
        let no_sub = Signature::arithmetic();
        let phi = parse_formula("x = x", &no_sub).unwrap();
        assert!(matches!(
            Coder::new(&no_sub).diag(&phi),
            Err(CodingError::MissingSub)
        ));
    }

    #[test]
    fn diag_codes_stay_desk_sized() {
        let s = sig();
        let coder = Coder::new(&s);
        let phi = parse_formula("exists y. x = y + y", &s).unwrap();
        let d = coder.diag(&phi).unwrap();
        let digits = d.code.to_string().len();
        assert!(
            (100..100_000).contains(&digits),
            "expected a few hundred digits, got {digits}"
        );
    }

    // Random ASTs for round-trip and coherence properties. Codes grow
    // multiplicatively in bits per AST level, so the generators stay
    // shallow to keep codes in the few-thousand-bit range.
    fn arb_term(depth: u32) -> BoxedStrategy<Term> {
        let leaf = prop_oneof![
            (0usize..4).prop_map(Term::Var),
            Just(Term::Const("0".into())),
            Just(Term::Const("1".into())),
            (2u64..10_000).prop_map(|n| Term::Num(BigUint::from_u64(n).unwrap())),
        ];
        leaf.prop_recursive(depth, 6, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::App("+".into(), vec![a, b])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::App("*".into(), vec![a, b])),
                (inner.clone(), inner).prop_map(|(a, b)| Term::App("sub".into(), vec![a, b])),
            ]
        })
        .boxed()
    }

    fn arb_formula(depth: u32) -> BoxedStrategy<Formula> {
        let atom = prop_oneof![
            (arb_term(1), arb_term(1)).prop_map(|(l, r)| Formula::Eq(l, r)),
            (arb_term(1), arb_term(1)).prop_map(|(l, r)| Formula::Rel("<".into(), vec![l, r])),
        ];
        atom.prop_recursive(depth, 10, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                ((0usize..4), inner.clone()).prop_map(|(v, f)| Formula::exists(v, f)),
                ((0usize..4), inner).prop_map(|(v, f)| Formula::forall(v, f)),
            ]
        })
        .boxed()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_decode_inverts_encode(phi in arb_formula(3)) {
            let s = sig();
            let coder = Coder::new(&s);
            let code = coder.encode(&phi).unwrap();
            prop_assert_eq!(coder.decode(&code).unwrap(), phi);
        }

        #[test]
        fn prop_sub_code_coheres_with_substitute(phi in arb_formula(2), n in 0u64..5000) {
            let s = sig();
            let coder = Coder::new(&s);
            let code = coder.encode(&phi).unwrap();
            let n = BigUint::from(n);
            let direct = phi.substitute(0, &numeral(&n));
            let via_codes = coder.decode(&coder.sub_code(&code, &n).unwrap()).unwrap();
            prop_assert_eq!(via_codes, direct);
        }
    }
}
