//! Automorphism-based definability on finite structures: the complete
//! automorphism group by pruned backtracking, orbits under parameter-fixing
//! subgroups, definability of a set as orbit closure, disagreement
//! witnesses (an automorphism moving a non-member onto a member while
//! fixing the parameters), and back-and-forth isomorphism search.
//!
//! Over a finite structure a set is first-order definable with parameters
//! exactly when it is invariant under every automorphism fixing those
//! parameters pointwise; that finite criterion is this module's semantics.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::FiniteStructure;

/// Structures larger than this are rejected rather than searched.
pub const SIZE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefinabilityError {
    #[error("structure size {size} exceeds the search limit {limit}")]
    SizeLimit { size: usize, limit: usize },
    #[error("element {element} is outside the domain")]
    OutOfDomain { element: usize },
    #[error("the structures have different signatures")]
    SignatureMismatch,
}

/// A permutation of the domain that preserves all structure, both ways.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Automorphism(Vec<usize>);

impl Automorphism {
    pub fn identity(n: usize) -> Self {
        Automorphism((0..n).collect())
    }

    /// Wraps an explicit permutation of `0..map.len()`.
    pub fn permutation(map: Vec<usize>) -> Result<Self, DefinabilityError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &j in &map {
            if j >= n || seen[j] {
                return Err(DefinabilityError::OutOfDomain { element: j });
            }
            seen[j] = true;
        }
        Ok(Automorphism(map))
    }

    pub fn apply(&self, e: usize) -> usize {
        self.0[e]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Automorphism {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Automorphism(inv)
    }

    /// Pointwise image of a set of elements.
    pub fn image(&self, x: &BTreeSet<usize>) -> BTreeSet<usize> {
        x.iter().map(|&e| self.0[e]).collect()
    }

    pub fn fixes(&self, params: &[usize]) -> bool {
        params.iter().all(|&p| self.0[p] == p)
    }
}

fn tuples(n: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(arity as u32);
    (0..total).map(move |mut i| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = i % n;
            i /= n;
        }
        t
    })
}

/// Checks the two-way preservation conditions directly, independently of
/// any search: `map` must be a bijection fixing every constant, commuting
/// with every function table, and preserving every relation in both
/// directions.
pub fn is_isomorphism(a: &FiniteStructure, b: &FiniteStructure, map: &[usize]) -> bool {
    let n = a.size();
    if b.size() != n || map.len() != n || a.signature() != b.signature() {
        return false;
    }
    let mut seen = vec![false; n];
    for &j in map {
        if j >= n || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    for name in a.signature().constants() {
        if map[a.constant(name).unwrap()] != b.constant(name).unwrap() {
            return false;
        }
    }
    for (name, arity) in a.signature().functions() {
        for t in tuples(n, *arity) {
            let mapped: Vec<usize> = t.iter().map(|&e| map[e]).collect();
            if map[a.function_value(name, &t).unwrap()] != b.function_value(name, &mapped).unwrap()
            {
                return false;
            }
        }
    }
    for (name, arity) in a.signature().relations() {
        for t in tuples(n, *arity) {
            let mapped: Vec<usize> = t.iter().map(|&e| map[e]).collect();
            if a.relation_holds(name, &t).unwrap() != b.relation_holds(name, &mapped).unwrap() {
                return false;
            }
        }
    }
    true
}

pub fn is_automorphism(s: &FiniteStructure, map: &[usize]) -> bool {
    is_isomorphism(s, s, map)
}

/// Partial-assignment consistency between two structures: with images
/// decided for elements `0..k` of `a` (as `perm[0..k]`), checks every
/// constraint that is already fully determined.
fn partial_consistent(a: &FiniteStructure, b: &FiniteStructure, perm: &[usize]) -> bool {
    let k = perm.len();
    let decided = |e: usize| e < k;
    for name in a.signature().constants() {
        let ca = a.constant(name).unwrap();
        let cb = b.constant(name).unwrap();
        if decided(ca) && perm[ca] != cb {
            return false;
        }
        // Injectivity: nothing else may claim the constant's image.
        if !decided(ca) && perm.contains(&cb) {
            return false;
        }
    }
    for (name, arity) in a.signature().relations() {
        for t in tuples(k, *arity) {
            let mapped: Vec<usize> = t.iter().map(|&e| perm[e]).collect();
            if a.relation_holds(name, &t).unwrap() != b.relation_holds(name, &mapped).unwrap() {
                return false;
            }
        }
    }
    for (name, arity) in a.signature().functions() {
        for t in tuples(k, *arity) {
            let va = a.function_value(name, &t).unwrap();
            let mapped: Vec<usize> = t.iter().map(|&e| perm[e]).collect();
            let vb = b.function_value(name, &mapped).unwrap();
            if decided(va) {
                if perm[va] != vb {
                    return false;
                }
            } else if perm.contains(&vb) {
                return false;
            }
        }
    }
    true
}

/// The complete automorphism group, by backtracking over images in domain
/// order with partial-constraint pruning. Every candidate that survives
/// the search is re-verified by [`is_automorphism`] before being returned.
/// The identity is always present; results are in lexicographic order.
pub fn automorphisms(s: &FiniteStructure) -> Result<Vec<Automorphism>, DefinabilityError> {
    let n = s.size();
    if n > SIZE_LIMIT {
        return Err(DefinabilityError::SizeLimit {
            size: n,
            limit: SIZE_LIMIT,
        });
    }
    let mut out = Vec::new();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn dfs(
        s: &FiniteStructure,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Automorphism>,
    ) {
        let n = s.size();
        if perm.len() == n {
            if is_automorphism(s, perm) {
                out.push(Automorphism(perm.clone()));
            }
            return;
        }
        for j in 0..n {
            if used[j] {
                continue;
            }
            perm.push(j);
            used[j] = true;
            if partial_consistent(s, s, perm) {
                dfs(s, perm, used, out);
            }
            perm.pop();
            used[j] = false;
        }
    }
    dfs(s, &mut perm, &mut used, &mut out);
    debug_assert!(out.iter().any(Automorphism::is_identity));
    Ok(out)
}

/// Brute-force oracle: filters all `n!` permutations through the direct
/// preservation check. Exponential; for cross-validation only.
pub fn automorphisms_brute(s: &FiniteStructure) -> Result<Vec<Automorphism>, DefinabilityError> {
    let n = s.size();
    if n > SIZE_LIMIT {
        return Err(DefinabilityError::SizeLimit {
            size: n,
            limit: SIZE_LIMIT,
        });
    }
    let mut out = Vec::new();
    permutations(n, &mut |p| {
        if is_automorphism(s, p) {
            out.push(Automorphism(p.to_vec()));
        }
    });
    out.sort();
    Ok(out)
}

fn permutations(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        n: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if perm.len() == n {
            visit(perm);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(perm, used, n, visit);
                perm.pop();
                used[j] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], n, visit);
}

fn check_elements(s: &FiniteStructure, elems: &[usize]) -> Result<(), DefinabilityError> {
    match elems.iter().find(|&&e| e >= s.size()) {
        Some(&e) => Err(DefinabilityError::OutOfDomain { element: e }),
        None => Ok(()),
    }
}

/// Orbit partition of the domain under the subgroup of automorphisms
/// fixing `params` pointwise, sorted by least element.
pub fn orbits(
    s: &FiniteStructure,
    params: &[usize],
) -> Result<Vec<BTreeSet<usize>>, DefinabilityError> {
    check_elements(s, params)?;
    let group: Vec<Automorphism> = automorphisms(s)?
        .into_iter()
        .filter(|h| h.fixes(params))
        .collect();
    let mut seen = vec![false; s.size()];
    let mut parts = Vec::new();
    for e in 0..s.size() {
        if seen[e] {
            continue;
        }
        let orbit: BTreeSet<usize> = group.iter().map(|h| h.apply(e)).collect();
        for &o in &orbit {
            seen[o] = true;
        }
        parts.push(orbit);
    }
    Ok(parts)
}

/// Whether `x` is a union of orbits under automorphisms fixing `params`:
/// the finite criterion for first-order definability with parameters.
pub fn definable_with_params(
    x: &BTreeSet<usize>,
    s: &FiniteStructure,
    params: &[usize],
) -> Result<bool, DefinabilityError> {
    let elems: Vec<usize> = x.iter().copied().collect();
    check_elements(s, &elems)?;
    check_elements(s, params)?;
    for h in automorphisms(s)? {
        if !h.fixes(params) {
            continue;
        }
        if x.iter().any(|&e| !x.contains(&h.apply(e))) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The witness extracted when a set is not definable: an automorphism
/// fixing the parameters that carries a non-member onto a member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementWitness {
    pub pi: Automorphism,
    /// The member: `pi(t) = s`, `s` in the set.
    pub s: usize,
    /// The non-member.
    pub t: usize,
    pub fixed_params: Vec<usize>,
}

/// If `x` is not definable with `params`, returns the witness with the
/// lexicographically least `(s, t)` (and least automorphism among those);
/// `None` exactly when `x` is definable. The pair of interpretations
/// `(x, pi.image(x))` then disagrees over the one structure.
pub fn disagreement_pair(
    s: &FiniteStructure,
    x: &BTreeSet<usize>,
    params: &[usize],
) -> Result<Option<DisagreementWitness>, DefinabilityError> {
    let elems: Vec<usize> = x.iter().copied().collect();
    check_elements(s, &elems)?;
    check_elements(s, params)?;
    let group: Vec<Automorphism> = automorphisms(s)?
        .into_iter()
        .filter(|h| h.fixes(params))
        .collect();
    for &member in x {
        for outside in 0..s.size() {
            if x.contains(&outside) {
                continue;
            }
            if let Some(pi) = group.iter().find(|h| h.apply(outside) == member) {
                return Ok(Some(DisagreementWitness {
                    pi: pi.clone(),
                    s: member,
                    t: outside,
                    fixed_params: params.to_vec(),
                }));
            }
        }
    }
    Ok(None)
}

/// Pointwise image of a subset under an automorphism.
pub fn apply_automorphism(x: &BTreeSet<usize>, pi: &Automorphism) -> BTreeSet<usize> {
    pi.image(x)
}

/// Relabels a structure along a permutation, producing the isomorphic
/// copy whose element `pi(e)` plays the role `e` did.
pub fn relabel(s: &FiniteStructure, pi: &Automorphism) -> FiniteStructure {
    let n = s.size();
    let sig = s.signature().clone();
    let constants = sig
        .constants()
        .iter()
        .map(|name| (name.clone(), pi.apply(s.constant(name).unwrap())))
        .collect();
    let inv = pi.inverse();
    let functions = sig
        .functions()
        .iter()
        .map(|(name, arity)| {
            let table = tuples(n, *arity)
                .map(|t| {
                    let preimage: Vec<usize> = t.iter().map(|&e| inv.apply(e)).collect();
                    pi.apply(s.function_value(name, &preimage).unwrap())
                })
                .collect();
            (name.clone(), *arity, table)
        })
        .collect();
    let relations = sig
        .relations()
        .iter()
        .map(|(name, arity)| {
            let tuples: Vec<Vec<usize>> = s
                .relation_tuples(name)
                .unwrap()
                .iter()
                .map(|t| t.iter().map(|&e| pi.apply(e)).collect())
                .collect();
            (name.clone(), *arity, tuples)
        })
        .collect();
    FiniteStructure::new(n, sig, constants, functions, relations)
        .expect("relabeling preserves well-formedness")
}

/// Searches for an isomorphism from `a` onto `b` by alternately extending
/// a partial map from the least unmatched element of either side,
/// backtracking on constraint failure. The returned map sends elements of
/// `a` to elements of `b` and is re-verified by [`is_isomorphism`].
pub fn back_and_forth(
    a: &FiniteStructure,
    b: &FiniteStructure,
) -> Result<Option<Automorphism>, DefinabilityError> {
    if a.signature() != b.signature() {
        return Err(DefinabilityError::SignatureMismatch);
    }
    let n = a.size();
    if n.max(b.size()) > SIZE_LIMIT {
        return Err(DefinabilityError::SizeLimit {
            size: n.max(b.size()),
            limit: SIZE_LIMIT,
        });
    }
    if b.size() != n {
        return Ok(None);
    }
    // forward[e] and backward[f] use n as "unset".
    let mut forward = vec![n; n];
    let mut backward = vec![n; n];
    fn consistent(a: &FiniteStructure, b: &FiniteStructure, forward: &[usize]) -> bool {
        let n = a.size();
        let decided: Vec<usize> = (0..n).filter(|&e| forward[e] < n).collect();
        let k = decided.len();
        for name in a.signature().constants() {
            let ca = a.constant(name).unwrap();
            let cb = b.constant(name).unwrap();
            if forward[ca] < n && forward[ca] != cb {
                return false;
            }
            if forward[ca] == n && forward.contains(&cb) {
                return false;
            }
        }
        for (name, arity) in a.signature().relations() {
            for t in tuples(k, *arity) {
                let t: Vec<usize> = t.iter().map(|&i| decided[i]).collect();
                let mapped: Vec<usize> = t.iter().map(|&e| forward[e]).collect();
                if a.relation_holds(name, &t).unwrap() != b.relation_holds(name, &mapped).unwrap() {
                    return false;
                }
            }
        }
        for (name, arity) in a.signature().functions() {
            for t in tuples(k, *arity) {
                let t: Vec<usize> = t.iter().map(|&i| decided[i]).collect();
                let va = a.function_value(name, &t).unwrap();
                let mapped: Vec<usize> = t.iter().map(|&e| forward[e]).collect();
                let vb = b.function_value(name, &mapped).unwrap();
                if forward[va] < n {
                    if forward[va] != vb {
                        return false;
                    }
                } else if forward.contains(&vb) {
                    return false;
                }
            }
        }
        true
    }
    fn extend(
        a: &FiniteStructure,
        b: &FiniteStructure,
        forward: &mut Vec<usize>,
        backward: &mut Vec<usize>,
        matched: usize,
    ) -> bool {
        let n = a.size();
        if matched == n {
            return true;
        }
        if matched.is_multiple_of(2) {
            // Forth: least unmatched element of a chooses its image.
            let e = (0..n).find(|&e| forward[e] == n).unwrap();
            for f in 0..n {
                if backward[f] < n {
                    continue;
                }
                forward[e] = f;
                backward[f] = e;
                if consistent(a, b, forward) && extend(a, b, forward, backward, matched + 1) {
                    return true;
                }
                forward[e] = n;
                backward[f] = n;
            }
        } else {
            // Back: least unmatched element of b chooses its preimage.
            let f = (0..n).find(|&f| backward[f] == n).unwrap();
            for e in 0..n {
                if forward[e] < n {
                    continue;
                }
                forward[e] = f;
                backward[f] = e;
                if consistent(a, b, forward) && extend(a, b, forward, backward, matched + 1) {
                    return true;
                }
                forward[e] = n;
                backward[f] = n;
            }
        }
        false
    }
    if extend(a, b, &mut forward, &mut backward, 0) && is_isomorphism(a, b, &forward) {
        Ok(Some(Automorphism(forward)))
    } else {
        Ok(None)
    }
}

/// Brute-force isomorphism oracle: tries all `n!` maps.
pub fn isomorphism_brute(
    a: &FiniteStructure,
    b: &FiniteStructure,
) -> Result<Option<Automorphism>, DefinabilityError> {
    if a.signature() != b.signature() {
        return Err(DefinabilityError::SignatureMismatch);
    }
    let n = a.size();
    if n.max(b.size()) > SIZE_LIMIT {
        return Err(DefinabilityError::SizeLimit {
            size: n.max(b.size()),
            limit: SIZE_LIMIT,
        });
    }
    if b.size() != n {
        return Ok(None);
    }
    let mut found = None;
    permutations(n, &mut |p| {
        if found.is_none() && is_isomorphism(a, b, p) {
            found = Some(Automorphism(p.to_vec()));
        }
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Signature;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn graph(n: usize, edges: &[(usize, usize)]) -> FiniteStructure {
        let sig = Signature::custom(&[], &[], &[("E", 2)]).unwrap();
        FiniteStructure::new(
            n,
            sig,
            BTreeMap::new(),
            vec![],
            vec![(
                "E".into(),
                2,
                edges.iter().map(|&(a, b)| vec![a, b]).collect(),
            )],
        )
        .unwrap()
    }

    fn three_cycle() -> FiniteStructure {
        graph(3, &[(0, 1), (1, 2), (2, 0)])
    }

    #[test]
    fn three_cycle_has_exactly_the_rotations() {
        let autos = automorphisms(&three_cycle()).unwrap();
        let perms: Vec<&[usize]> = autos.iter().map(|a| a.as_slice()).collect();
        assert_eq!(perms, vec![&[0, 1, 2][..], &[1, 2, 0], &[2, 0, 1]]);
        for a in &autos {
            assert!(is_automorphism(&three_cycle(), a.as_slice()));
        }
    }

    #[test]
    fn all_constants_pin_everything() {
        let sig = Signature::custom(&["a", "b"], &[], &[]).unwrap();
        let s = FiniteStructure::new(
            2,
            sig,
            BTreeMap::from([("a".into(), 0), ("b".into(), 1)]),
            vec![],
            vec![],
        )
        .unwrap();
        let autos = automorphisms(&s).unwrap();
        assert_eq!(autos.len(), 1);
        assert!(autos[0].is_identity());
    }

    #[test]
    fn empty_signature_gives_the_full_symmetric_group() {
        let sig = Signature::custom(&[], &[], &[]).unwrap();
        let s = FiniteStructure::new(2, sig, BTreeMap::new(), vec![], vec![]).unwrap();
        assert_eq!(automorphisms(&s).unwrap().len(), 2);
    }

    #[test]
    fn search_matches_brute_force() {
        let structures = [
            three_cycle(),
            graph(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]),
            graph(4, &[(0, 1), (1, 2), (2, 3)]),
            graph(5, &[]),
        ];
        for s in &structures {
            assert_eq!(automorphisms(s).unwrap(), automorphisms_brute(s).unwrap());
        }
    }

    #[test]
    fn orbit_examples_from_the_contract() {
        let s = three_cycle();
        assert_eq!(orbits(&s, &[]).unwrap(), vec![BTreeSet::from([0, 1, 2])]);
        assert_eq!(
            orbits(&s, &[0]).unwrap(),
            vec![
                BTreeSet::from([0]),
                BTreeSet::from([1]),
                BTreeSet::from([2])
            ]
        );
        let everything: Vec<usize> = (0..3).collect();
        assert_eq!(orbits(&s, &everything).unwrap().len(), 3);
    }

    #[test]
    fn definability_examples_from_the_contract() {
        let s = three_cycle();
        let x = BTreeSet::from([0]);
        assert!(!definable_with_params(&x, &s, &[]).unwrap());
        assert!(definable_with_params(&x, &s, &[0]).unwrap());
        assert!(definable_with_params(&BTreeSet::new(), &s, &[]).unwrap());
        assert!(definable_with_params(&BTreeSet::from([0, 1, 2]), &s, &[]).unwrap());
        assert!(matches!(
            definable_with_params(&BTreeSet::from([7]), &s, &[]),
            Err(DefinabilityError::OutOfDomain { element: 7 })
        ));
    }

    #[test]
    fn disagreement_witness_is_lex_least_and_valid() {
        let s = three_cycle();
        let x = BTreeSet::from([0]);
        let w = disagreement_pair(&s, &x, &[]).unwrap().unwrap();
        assert_eq!((w.s, w.t), (0, 1));
        assert_eq!(w.pi.as_slice(), &[2, 0, 1]);
        assert!(is_automorphism(&s, w.pi.as_slice()));
        assert!(w.pi.fixes(&w.fixed_params));
        assert_eq!(w.pi.apply(w.t), w.s);
        assert!(x.contains(&w.s) && !x.contains(&w.t));
        // The two interpretations disagree over the very same structure.
        assert_ne!(apply_automorphism(&x, &w.pi), x);

        assert!(disagreement_pair(&s, &x, &[0]).unwrap().is_none());
        assert!(disagreement_pair(&s, &BTreeSet::new(), &[])
            .unwrap()
            .is_none());
    }

    #[test]
    fn apply_automorphism_laws() {
        let s = three_cycle();
        let x = BTreeSet::from([0]);
        let autos = automorphisms(&s).unwrap();
        let id = &autos[0];
        assert!(id.is_identity());
        assert_eq!(apply_automorphism(&x, id), x);
        let r = &autos[1];
        assert_eq!(apply_automorphism(&x, r), BTreeSet::from([r.apply(0)]));
        let back = apply_automorphism(&apply_automorphism(&x, r), &r.inverse());
        assert_eq!(back, x);
    }

    fn all_graph_structures(n: usize) -> Vec<FiniteStructure> {
        // Every structure of size n over one unary and one binary relation.
        let sig = Signature::custom(&[], &[], &[("P", 1), ("E", 2)]).unwrap();
        let mut out = Vec::new();
        for p_mask in 0u32..1 << n {
            for e_mask in 0u64..1 << (n * n) {
                let p: Vec<Vec<usize>> = (0..n)
                    .filter(|i| p_mask >> i & 1 == 1)
                    .map(|i| vec![i])
                    .collect();
                let e: Vec<Vec<usize>> = (0..n * n)
                    .filter(|i| e_mask >> i & 1 == 1)
                    .map(|i| vec![i / n, i % n])
                    .collect();
                out.push(
                    FiniteStructure::new(
                        n,
                        sig.clone(),
                        BTreeMap::new(),
                        vec![],
                        vec![("P".into(), 1, p), ("E".into(), 2, e)],
                    )
                    .unwrap(),
                );
            }
        }
        out
    }

    #[test]
    fn definability_and_disagreement_are_exclusive_exhaustively() {
        // All structures of sizes 1..=2 and a sample of size 3, every
        // subset, params empty and {0}.
        let mut structures = all_graph_structures(1);
        structures.extend(all_graph_structures(2));
        structures.extend(all_graph_structures(3).into_iter().step_by(17));
        for s in &structures {
            let n = s.size();
            assert_eq!(automorphisms(s).unwrap(), automorphisms_brute(s).unwrap());
            for x_mask in 0u32..1 << n {
                let x: BTreeSet<usize> = (0..n).filter(|i| x_mask >> i & 1 == 1).collect();
                for params in [vec![], vec![0]] {
                    let definable = definable_with_params(&x, s, &params).unwrap();
                    let witness = disagreement_pair(s, &x, &params).unwrap();
                    assert_eq!(definable, witness.is_none());
                    if let Some(w) = witness {
                        assert!(is_automorphism(s, w.pi.as_slice()));
                        assert!(w.pi.fixes(&params));
                        assert_eq!(w.pi.apply(w.t), w.s);
                        assert!(x.contains(&w.s) && !x.contains(&w.t));
                    }
                }
            }
        }
    }

    #[test]
    fn definability_transports_along_automorphisms() {
        let s = graph(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]);
        for pi in automorphisms(&s).unwrap() {
            for x_mask in 0u32..1 << 4 {
                let x: BTreeSet<usize> = (0..4).filter(|i| x_mask >> i & 1 == 1).collect();
                for params in [vec![], vec![1], vec![0, 2]] {
                    let mapped_params: Vec<usize> = params.iter().map(|&p| pi.apply(p)).collect();
                    assert_eq!(
                        definable_with_params(&x, &s, &params).unwrap(),
                        definable_with_params(&pi.image(&x), &s, &mapped_params).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn back_and_forth_finds_the_order_isomorphism() {
        let sig = Signature::custom(&[], &[], &[("R", 2)]).unwrap();
        let mk = |pairs: &[(usize, usize)]| {
            FiniteStructure::new(
                2,
                sig.clone(),
                BTreeMap::new(),
                vec![],
                vec![(
                    "R".into(),
                    2,
                    pairs.iter().map(|&(a, b)| vec![a, b]).collect(),
                )],
            )
            .unwrap()
        };
        let up = mk(&[(0, 1)]);
        let down = mk(&[(1, 0)]);
        let iso = back_and_forth(&up, &down).unwrap().unwrap();
        assert_eq!(iso.as_slice(), &[1, 0]);
        assert!(is_isomorphism(&up, &down, iso.as_slice()));
    }

    #[test]
    fn back_and_forth_rejects_nonisomorphic_pairs() {
        let cycle = three_cycle();
        let empty = graph(3, &[]);
        assert!(back_and_forth(&cycle, &empty).unwrap().is_none());
        let other_sig = graph(2, &[]);
        // Same signature name but different sizes is a miss, not an error.
        assert!(back_and_forth(&cycle, &other_sig).unwrap().is_none());
        let unary = FiniteStructure::new(
            3,
            Signature::custom(&[], &[], &[("P", 1)]).unwrap(),
            BTreeMap::new(),
            vec![],
            vec![("P".into(), 1, vec![])],
        )
        .unwrap();
        assert!(matches!(
            back_and_forth(&cycle, &unary),
            Err(DefinabilityError::SignatureMismatch)
        ));
    }

    #[test]
    fn relabeled_structures_are_isomorphic() {
        let s = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let pi = Automorphism(vec![2, 0, 3, 1]);
        let t = relabel(&s, &pi);
        assert!(is_isomorphism(&s, &t, pi.as_slice()));
        assert!(back_and_forth(&s, &t).unwrap().is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_back_and_forth_agrees_with_brute_force(
            n in 1usize..=4,
            e1 in any::<u64>(),
            e2 in any::<u64>(),
            shuffle in any::<u64>(),
        ) {
            let mask = (1u64 << (n * n)) - 1;
            let s = graph_from_mask(n, e1 & mask);
            // Half the pairs are planted isomorphic copies.
            let t = if shuffle % 2 == 0 {
                graph_from_mask(n, e2 & mask)
            } else {
                let mut order: Vec<usize> = (0..n).collect();
                let mut state = shuffle | 1;
                for i in (1..n).rev() {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    order.swap(i, (state >> 33) as usize % (i + 1));
                }
                relabel(&s, &Automorphism(order))
            };
            let fast = back_and_forth(&s, &t).unwrap();
            let brute = isomorphism_brute(&s, &t).unwrap();
            prop_assert_eq!(fast.is_some(), brute.is_some());
            if let Some(iso) = fast {
                prop_assert!(is_isomorphism(&s, &t, iso.as_slice()));
            }
        }
    }

    fn graph_from_mask(n: usize, mask: u64) -> FiniteStructure {
        let edges: Vec<(usize, usize)> = (0..n * n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| (i / n, i % n))
            .collect();
        graph(n, &edges)
    }
}
