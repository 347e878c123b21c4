//! A workbench for first-order logic over arithmetic and finite structures.
//!
//! The crate is organised around a handful of mechanisms that are usually
//! only discussed on paper, implemented here at desk scale so they can be
//! run, inspected, and tested:
//!
//! - [`syntax`]: terms, formulas, signatures, a concrete grammar with a
//!   parser and canonical printer, and capture-avoiding substitution.
//! - [`coding`]: Cantor pairing, injective codes for formulas, arithmetized
//!   substitution, and the diagonal (fixed-point) construction with a
//!   truth-definability demonstrator built on top of it.
//! - [`semantics`]: Tarskian evaluation over finite structures, budgeted
//!   three-valued evaluation over the naturals, and a checker for the
//!   compositional truth conditions a truth-set candidate must satisfy.
//! - [`hierarchy`]: languages with iterated truth predicates `Tr0, Tr1, ...`
//!   and evaluation that dereferences coded sentences level by level.
//! - [`presburger`]: linear integer arithmetic, quantifier elimination in
//!   the style of Cooper, a decision procedure for closed sentences, and
//!   eventual-periodicity certificates and refutations for unary sets.
//! - [`definability`]: automorphism groups of finite structures, orbits,
//!   definability with parameters, disagreement witnesses, and a
//!   back-and-forth isomorphism search.
//! - [`henkin`]: deterministic Henkin completions of a decidable theory
//!   fragment and the induced term models.
//! - [`forcing`]: finite binary conditions, requirement satisfaction by
//!   bounded search, and plane sections through a pairing of indices.
//! - [`suite`]: seeded corpus generators and the end-to-end checks used by
//!   the `folkit suite` command and the acceptance tests.

pub mod coding;
pub mod definability;
pub mod forcing;
pub mod henkin;
pub mod hierarchy;
pub mod presburger;
pub mod semantics;
pub mod suite;
pub mod syntax;

pub(crate) mod biguint_dec {
    //! Serde helpers serializing `BigUint` as a decimal string.

    use num_bigint::BigUint;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse::<BigUint>()
            .map_err(|e| de::Error::custom(format!("invalid decimal natural: {e}")))
    }
}
