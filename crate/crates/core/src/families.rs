//! Downward-closed set systems over types, rank computation, and the
//! loop/contraction greedy procedure.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number::Scalar;
use crate::typeset::TypeSet;
use crate::universe::TypeId;

/// Exhaustive rank search refuses more candidate (non-loop) types than this.
pub const EXHAUSTIVE_RANK_CAP: usize = 20;

/// Membership oracle for a downward-closed family over types. Types outside
/// [`IndependenceOracle::ground`] are loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndependenceOracle {
    /// At most `rank` members of `ground`.
    Uniform {
        ground: TypeSet,
        rank: usize,
    },
    /// At most `capacity[p]` members from each part `p`.
    Partition {
        parts: BTreeMap<TypeId, usize>,
        capacity: Vec<usize>,
    },
    /// Types are graph edges; independent sets are matchings.
    Matching {
        edges: BTreeMap<TypeId, (u32, u32)>,
    },
    /// Types form a forest via `parent`; independent sets lie on a single
    /// root-to-leaf path.
    Chain {
        parent: BTreeMap<TypeId, Option<TypeId>>,
    },
    Intersection {
        members: Vec<IndependenceOracle>,
    },
    /// Explicit list of member sets. Not necessarily downward-closed; used to
    /// exercise the verifiers.
    Explicit {
        sets: Vec<TypeSet>,
    },
}

pub fn make_partition_matroid(parts: BTreeMap<TypeId, usize>, capacity: Vec<usize>) -> Result<IndependenceOracle> {
    if let Some((t, &p)) = parts.iter().find(|(_, &p)| p >= capacity.len()) {
        return Err(Error::InvalidFamily(format!("type {t:?} assigned to missing part {p}")));
    }
    Ok(IndependenceOracle::Partition { parts, capacity })
}

pub fn make_uniform_matroid(ground: TypeSet, rank: usize) -> IndependenceOracle {
    IndependenceOracle::Uniform { ground, rank }
}

pub fn make_matching_family(edges: BTreeMap<TypeId, (u32, u32)>) -> Result<IndependenceOracle> {
    if let Some((t, _)) = edges.iter().find(|(_, (u, v))| u == v) {
        return Err(Error::InvalidFamily(format!("edge {t:?} is a self-loop")));
    }
    Ok(IndependenceOracle::Matching { edges })
}

pub fn make_chain_family(parent: BTreeMap<TypeId, Option<TypeId>>) -> Result<IndependenceOracle> {
    for (&t, &p) in &parent {
        let mut cur = p;
        let mut steps = 0;
        while let Some(q) = cur {
            if !parent.contains_key(&q) {
                return Err(Error::InvalidFamily(format!(
                    "parent {q:?} of {t:?} is not in the forest"
                )));
            }
            steps += 1;
            if q == t || steps > parent.len() {
                return Err(Error::InvalidFamily(format!("cycle through {t:?}")));
            }
            cur = parent[&q];
        }
    }
    Ok(IndependenceOracle::Chain { parent })
}

/// Intersection of families over a common ground set. An intersection of
/// `m` matroids is `m`-extendible.
pub fn intersect(oracles: Vec<IndependenceOracle>) -> Result<IndependenceOracle> {
    let Some(first) = oracles.first() else {
        return Err(Error::InvalidFamily("empty intersection".into()));
    };
    let ground = first.ground();
    if let Some(i) = oracles.iter().position(|o| o.ground() != ground) {
        return Err(Error::InvalidFamily(format!("member {i} has a different ground set")));
    }
    Ok(IndependenceOracle::Intersection { members: oracles })
}

impl IndependenceOracle {
    pub fn ground(&self) -> TypeSet {
        match self {
            IndependenceOracle::Uniform { ground, .. } => ground.clone(),
            IndependenceOracle::Partition { parts, capacity } => parts
                .iter()
                .filter(|(_, &p)| capacity[p] > 0)
                .map(|(&t, _)| t)
                .collect(),
            IndependenceOracle::Matching { edges } => edges.keys().copied().collect(),
            IndependenceOracle::Chain { parent } => parent.keys().copied().collect(),
            IndependenceOracle::Intersection { members } => {
                let mut it = members.iter();
                let first = it.next().map(|m| m.ground()).unwrap_or_default();
                it.fold(first, |acc, m| acc.intersection(&m.ground()))
            }
            IndependenceOracle::Explicit { sets } => sets.iter().fold(TypeSet::new(), |acc, s| acc.union(s)),
        }
    }

    pub fn is_independent(&self, set: &TypeSet) -> bool {
        match self {
            IndependenceOracle::Uniform { ground, rank } => set.is_subset(ground) && set.len() <= *rank,
            IndependenceOracle::Partition { parts, capacity } => {
                let mut used = vec![0usize; capacity.len()];
                for t in set.iter() {
                    let Some(&p) = parts.get(&t) else { return false };
                    used[p] += 1;
                    if used[p] > capacity[p] {
                        return false;
                    }
                }
                true
            }
            IndependenceOracle::Matching { edges } => {
                let mut seen = BTreeSet::new();
                for t in set.iter() {
                    let Some(&(u, v)) = edges.get(&t) else { return false };
                    if !seen.insert(u) || !seen.insert(v) {
                        return false;
                    }
                }
                true
            }
            IndependenceOracle::Chain { parent } => {
                if set.iter().any(|t| !parent.contains_key(&t)) {
                    return false;
                }
                // a set is a chain iff its deepest member has all others as ancestors
                let Some(deepest) = set.iter().max_by_key(|&t| chain_depth(parent, t)) else {
                    return true;
                };
                let on_path = chain_ancestors(parent, deepest).filter(|a| set.contains(*a)).count();
                on_path == set.len()
            }
            IndependenceOracle::Intersection { members } => members.iter().all(|m| m.is_independent(set)),
            IndependenceOracle::Explicit { sets } => sets.iter().any(|s| s == set),
        }
    }

    pub fn is_matroid(&self) -> bool {
        match self {
            IndependenceOracle::Uniform { .. } | IndependenceOracle::Partition { .. } => true,
            IndependenceOracle::Intersection { members } => members.len() == 1 && members[0].is_matroid(),
            _ => false,
        }
    }

    /// Non-loop types of `set` relative to an already-fixed independent `base`.
    fn candidates(&self, base: &TypeSet, set: &TypeSet) -> Vec<TypeId> {
        set.difference(base)
            .iter()
            .filter(|&t| self.is_independent(&base.with(t)))
            .collect()
    }

    /// Unweighted rank: size of a largest independent subset of `set`.
    pub fn max_rank(&self, set: &TypeSet) -> Result<usize> {
        if let IndependenceOracle::Chain { parent } = self {
            return Ok(set
                .iter()
                .filter(|t| parent.contains_key(t))
                .map(|t| chain_ancestors(parent, t).filter(|a| set.contains(*a)).count())
                .max()
                .unwrap_or(0));
        }
        Ok(self.max_extension(&TypeSet::new(), set)?.len())
    }

    /// Largest `C ⊆ candidates` with `base ∪ C` independent. `base` must be
    /// independent.
    pub fn max_extension(&self, base: &TypeSet, candidates: &TypeSet) -> Result<TypeSet> {
        let (_, best) = self.max_weight_extension(base, candidates, |_| 1.0f64)?;
        Ok(best)
    }

    /// Weighted rank: maximum total weight of an independent subset of `set`.
    pub fn max_weight<S: Scalar>(&self, set: &TypeSet, weight: impl Fn(TypeId) -> S) -> Result<S> {
        if let IndependenceOracle::Chain { parent } = self {
            let mut best = S::zero();
            for t in set.iter().filter(|t| parent.contains_key(t)) {
                let total = chain_ancestors(parent, t)
                    .filter(|a| set.contains(*a))
                    .fold(S::zero(), |acc, a| acc + weight(a));
                if total > best {
                    best = total;
                }
            }
            return Ok(best);
        }
        Ok(self.max_weight_extension(&TypeSet::new(), set, weight)?.0)
    }

    fn max_weight_extension<S: Scalar>(
        &self,
        base: &TypeSet,
        set: &TypeSet,
        weight: impl Fn(TypeId) -> S,
    ) -> Result<(S, TypeSet)> {
        let mut cands: Vec<(TypeId, S)> = self
            .candidates(base, set)
            .into_iter()
            .map(|t| (t, weight(t)))
            .filter(|(_, w)| *w > S::zero())
            .collect();
        // heaviest first; stable on ties so results are reproducible
        cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        if self.is_matroid() {
            let mut chosen = base.clone();
            let mut total = S::zero();
            for (t, w) in cands {
                if self.is_independent(&chosen.with(t)) {
                    chosen.insert(t);
                    total = total + w;
                }
            }
            return Ok((total, chosen.difference(base)));
        }
        if cands.len() > EXHAUSTIVE_RANK_CAP {
            return Err(Error::RankInfeasible {
                size: cands.len(),
                cap: EXHAUSTIVE_RANK_CAP,
            });
        }
        let mut suffix = vec![S::zero(); cands.len() + 1];
        for i in (0..cands.len()).rev() {
            suffix[i] = suffix[i + 1].clone() + cands[i].1.clone();
        }
        let mut search = Search {
            oracle: self,
            cands: &cands,
            suffix: &suffix,
            best: S::zero(),
            best_set: base.clone(),
        };
        search.run(0, &mut base.clone(), S::zero());
        Ok((search.best, search.best_set.difference(base)))
    }
}

struct Search<'a, S> {
    oracle: &'a IndependenceOracle,
    cands: &'a [(TypeId, S)],
    suffix: &'a [S],
    best: S,
    best_set: TypeSet,
}

impl<S: Scalar> Search<'_, S> {
    fn run(&mut self, i: usize, current: &mut TypeSet, value: S) {
        if value > self.best {
            self.best = value.clone();
            self.best_set = current.clone();
        }
        if i == self.cands.len() || value.clone() + self.suffix[i].clone() <= self.best {
            return;
        }
        let (t, w) = &self.cands[i];
        current.insert(*t);
        if self.oracle.is_independent(current) {
            self.run(i + 1, current, value.clone() + w.clone());
        }
        current.remove(*t);
        self.run(i + 1, current, value);
    }
}

fn chain_ancestors(parent: &BTreeMap<TypeId, Option<TypeId>>, t: TypeId) -> impl Iterator<Item = TypeId> + '_ {
    let mut cur = Some(t);
    std::iter::from_fn(move || {
        let here = cur?;
        cur = parent.get(&here).copied().flatten();
        Some(here)
    })
}

fn chain_depth(parent: &BTreeMap<TypeId, Option<TypeId>>, t: TypeId) -> usize {
    chain_ancestors(parent, t).count()
}

/// A family after contracting an ordered list of non-loop types.
#[derive(Clone, Debug)]
pub struct ContractionState<'a> {
    base: &'a IndependenceOracle,
    contracted: TypeSet,
    order: Vec<TypeId>,
}

impl<'a> ContractionState<'a> {
    pub fn new(base: &'a IndependenceOracle) -> Self {
        ContractionState {
            base,
            contracted: TypeSet::new(),
            order: Vec::new(),
        }
    }

    /// `{t}` is dependent in the contracted family. A contracted type is a
    /// loop of its own contraction.
    pub fn is_loop(&self, t: TypeId) -> bool {
        self.contracted.contains(t) || !self.base.is_independent(&self.contracted.with(t))
    }

    pub fn contract_type(&self, t: TypeId) -> Result<ContractionState<'a>> {
        if self.is_loop(t) {
            return Err(Error::ContractLoop(t.0));
        }
        let mut next = self.clone();
        next.contracted.insert(t);
        next.order.push(t);
        Ok(next)
    }

    /// Contracts `t` when it is a non-loop; returns whether it did.
    pub fn try_contract(&mut self, t: TypeId) -> bool {
        if self.is_loop(t) {
            return false;
        }
        self.contracted.insert(t);
        self.order.push(t);
        true
    }

    pub fn contracted(&self) -> &TypeSet {
        &self.contracted
    }

    pub fn order(&self) -> &[TypeId] {
        &self.order
    }

    pub fn base(&self) -> &'a IndependenceOracle {
        self.base
    }
}

/// Scans `ordered` once, contracting non-loops and skipping loops; returns
/// the contracted set.
pub fn greedy_select(family: &IndependenceOracle, ordered: &[TypeId]) -> TypeSet {
    let mut state = ContractionState::new(family);
    for &t in ordered {
        state.try_contract(t);
    }
    state.contracted
}

/// Number of types contracted by the greedy procedure.
pub fn greedy_rank(family: &IndependenceOracle, ordered: &[TypeId]) -> usize {
    greedy_select(family, ordered).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> TypeSet {
        v.iter().map(|&i| TypeId(i)).collect()
    }

    /// Path a-b-c-d: edges ab=0, bc=1, cd=2.
    fn path4() -> IndependenceOracle {
        make_matching_family([(TypeId(0), (0, 1)), (TypeId(1), (1, 2)), (TypeId(2), (2, 3))].into()).unwrap()
    }

    fn triangle() -> IndependenceOracle {
        make_matching_family([(TypeId(0), (0, 1)), (TypeId(1), (1, 2)), (TypeId(2), (0, 2))].into()).unwrap()
    }

    #[test]
    fn fresh_state_has_no_loops() {
        let f = make_uniform_matroid(ids(&[0, 1, 2]), 1);
        let s = ContractionState::new(&f);
        assert!((0..3).all(|t| !s.is_loop(TypeId(t))));
    }

    #[test]
    fn rank_one_fills_after_one_contraction() {
        let f = make_uniform_matroid(ids(&[0, 1, 2]), 1);
        let s = ContractionState::new(&f).contract_type(TypeId(0)).unwrap();
        assert!(s.is_loop(TypeId(1)) && s.is_loop(TypeId(2)));
        assert!(s.is_loop(TypeId(0)), "contracted type is self-parallel");
        assert_eq!(s.contract_type(TypeId(1)).unwrap_err(), Error::ContractLoop(1));
    }

    #[test]
    fn matching_triangle_contraction() {
        let f = triangle();
        let s = ContractionState::new(&f).contract_type(TypeId(0)).unwrap();
        assert!(s.is_loop(TypeId(1)));
        assert!(s.is_loop(TypeId(2)));
        // an edge disjoint from ab stays a non-loop
        let mut edges: BTreeMap<TypeId, (u32, u32)> = [(TypeId(0), (0, 1)), (TypeId(1), (1, 2))].into();
        edges.insert(TypeId(3), (5, 6));
        let g = make_matching_family(edges).unwrap();
        let s = ContractionState::new(&g).contract_type(TypeId(0)).unwrap();
        assert!(s.is_loop(TypeId(1)));
        assert!(!s.is_loop(TypeId(3)));
    }

    #[test]
    fn contraction_order_is_recorded() {
        let f = make_uniform_matroid(ids(&[0, 1, 2]), 2);
        let s = ContractionState::new(&f);
        let r = s.contract_type(TypeId(2)).unwrap();
        let ri = r.contract_type(TypeId(0)).unwrap();
        assert_eq!(ri.order(), &[TypeId(2), TypeId(0)]);
        assert!(s.order().is_empty(), "original state unchanged");
    }

    #[test]
    fn interleaved_rule_skips_parallel_loop() {
        // R then I where I is parallel to R (same part of a capacity-1 partition)
        let f = make_partition_matroid([(TypeId(0), 0), (TypeId(1), 0)].into(), vec![1]).unwrap();
        let mut s = ContractionState::new(&f);
        assert!(s.try_contract(TypeId(0)));
        assert!(!s.try_contract(TypeId(1)));
        assert_eq!(s.order(), &[TypeId(0)]);
    }

    #[test]
    fn greedy_on_independent_sequence() {
        let f = make_uniform_matroid(ids(&[0, 1, 2, 3]), 4);
        assert_eq!(greedy_rank(&f, &[TypeId(3), TypeId(1), TypeId(0)]), 3);
    }

    #[test]
    fn greedy_middle_edge_blocks_path() {
        let f = path4();
        assert_eq!(greedy_rank(&f, &[TypeId(1), TypeId(0), TypeId(2)]), 1);
        let all = ids(&[0, 1, 2]);
        assert_eq!(f.max_rank(&all).unwrap(), 2);
        // f(A) <= k * greedy(A) with k = 2
        assert!(f.max_rank(&all).unwrap() <= 2 * greedy_rank(&f, &[TypeId(1), TypeId(0), TypeId(2)]));
    }

    #[test]
    fn greedy_handles_duplicates() {
        let f = make_uniform_matroid(ids(&[0, 1]), 2);
        assert_eq!(greedy_rank(&f, &[TypeId(0), TypeId(0), TypeId(1)]), 2);
    }

    #[test]
    fn partition_matroid_capacities() {
        let zero = make_partition_matroid([(TypeId(0), 0), (TypeId(1), 1)].into(), vec![0, 0]).unwrap();
        assert!(zero.is_independent(&TypeSet::new()));
        assert!(!zero.is_independent(&ids(&[0])));
        assert!(!zero.is_independent(&ids(&[1])));
        let two = make_partition_matroid(
            [(TypeId(0), 0), (TypeId(1), 0), (TypeId(2), 1), (TypeId(3), 1)].into(),
            vec![1, 1],
        )
        .unwrap();
        assert!(two.is_independent(&ids(&[0, 2])));
        assert!(!two.is_independent(&ids(&[0, 1])));
        assert!(make_partition_matroid([(TypeId(0), 3)].into(), vec![1]).is_err());
    }

    #[test]
    fn intersection_semantics() {
        let p = make_partition_matroid([(TypeId(0), 0), (TypeId(1), 0), (TypeId(2), 1)].into(), vec![1, 1]).unwrap();
        let single = intersect(vec![p.clone()]).unwrap();
        for mask in 0..8u64 {
            let s = TypeSet::from_mask(&[TypeId(0), TypeId(1), TypeId(2)], mask);
            assert_eq!(single.is_independent(&s), p.is_independent(&s));
        }
        // two rank-1 constraints on supports {0,1} and {1,2} over ground {0,1,2}
        let q = make_partition_matroid([(TypeId(0), 1), (TypeId(1), 0), (TypeId(2), 0)].into(), vec![1, 1]).unwrap();
        let both = intersect(vec![p.clone(), q]).unwrap();
        assert!(both.is_independent(&ids(&[0, 2])));
        assert!(!both.is_independent(&ids(&[0, 1])));
        assert!(!both.is_independent(&ids(&[1, 2])));
        let other = make_uniform_matroid(ids(&[0, 1]), 1);
        assert!(intersect(vec![p, other]).is_err());
        assert!(intersect(vec![]).is_err());
    }

    #[test]
    fn matching_family_basics() {
        assert!(make_matching_family([(TypeId(0), (1, 1))].into()).is_err());
        let f = triangle();
        assert!(f.is_independent(&ids(&[0])));
        assert!(!f.is_independent(&ids(&[0, 1])));
        assert!(!f.is_independent(&ids(&[1, 2])));
        assert_eq!(f.max_rank(&ids(&[0, 1, 2])).unwrap(), 1);
    }

    #[test]
    fn weighted_rank_on_matroid_and_matching() {
        let u = make_uniform_matroid(ids(&[0, 1]), 1);
        let w = |t: TypeId| if t.0 == 0 { 3.0 } else { 5.0 };
        assert_eq!(u.max_weight(&ids(&[0, 1]), w).unwrap(), 5.0);
        assert_eq!(u.max_weight(&TypeSet::new(), w).unwrap(), 0.0);
        let m = path4();
        assert_eq!(m.max_weight(&ids(&[0, 1, 2]), |_| 1.0).unwrap(), 2.0);
        // heavy middle edge beats both ends
        let heavy = |t: TypeId| if t.0 == 1 { 5.0 } else { 2.0 };
        assert_eq!(m.max_weight(&ids(&[0, 1, 2]), heavy).unwrap(), 5.0);
    }

    #[test]
    fn chain_family() {
        // root edges 0,1; 2,3 below 0
        let parent = [
            (TypeId(0), None),
            (TypeId(1), None),
            (TypeId(2), Some(TypeId(0))),
            (TypeId(3), Some(TypeId(0))),
        ]
        .into();
        let c = make_chain_family(parent).unwrap();
        assert!(c.is_independent(&ids(&[0, 2])));
        assert!(!c.is_independent(&ids(&[0, 1])));
        assert!(!c.is_independent(&ids(&[2, 3])));
        assert!(!c.is_independent(&ids(&[1, 2])));
        assert_eq!(c.max_rank(&ids(&[0, 1, 2, 3])).unwrap(), 2);
        assert_eq!(c.max_rank(&ids(&[1, 2, 3])).unwrap(), 1);
        let cyclic = [(TypeId(0), Some(TypeId(1))), (TypeId(1), Some(TypeId(0)))].into();
        assert!(make_chain_family(cyclic).is_err());
    }

    #[test]
    fn exhaustive_cap_applies_to_non_matroids() {
        let edges: BTreeMap<TypeId, (u32, u32)> = (0..22).map(|i| (TypeId(i), (2 * i, 2 * i + 1))).collect();
        let f = make_matching_family(edges).unwrap();
        let all: TypeSet = (0..22).map(TypeId).collect();
        assert!(matches!(f.max_rank(&all), Err(Error::RankInfeasible { size: 22, .. })));
        let u = make_uniform_matroid(all.clone(), 3);
        assert_eq!(u.max_rank(&all).unwrap(), 3);
    }

    #[test]
    fn max_extension_respects_base() {
        let f = path4();
        let ext = f.max_extension(&ids(&[1]), &ids(&[0, 2])).unwrap();
        assert!(ext.is_empty());
        let ext = f.max_extension(&ids(&[0]), &ids(&[1, 2])).unwrap();
        assert_eq!(ext, ids(&[2]));
    }
}
