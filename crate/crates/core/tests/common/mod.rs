#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smplab_core::families::{intersect, make_matching_family, make_partition_matroid};
use smplab_core::{DecisionTree, ElementId, IndependenceOracle, TypeId, TypeSet, Universe};

/// Tree probing `seq` in order whatever the outcomes.
pub fn path_tree(universe: &Universe, seq: &[ElementId]) -> DecisionTree {
    match seq.split_first() {
        None => DecisionTree::Leaf,
        Some((&e, rest)) => {
            let child = path_tree(universe, rest);
            let children = universe.types_of(e).iter().map(|_| child.clone()).collect();
            DecisionTree::probe(universe, e, children).unwrap()
        }
    }
}

/// A random `k`-extendible family over `n` types: a matching (k = 2) or an
/// intersection of `k` partition matroids.
pub fn random_family(rng: &mut ChaCha8Rng, n: u32) -> (IndependenceOracle, usize) {
    let types: Vec<TypeId> = (0..n).map(TypeId).collect();
    if rng.random_bool(0.4) {
        let vertices = rng.random_range(3..=6u32);
        let edges = types
            .iter()
            .map(|&t| {
                let a = rng.random_range(0..vertices);
                let b = (a + rng.random_range(1..vertices)) % vertices;
                (t, (a.min(b), a.max(b)))
            })
            .collect();
        return (make_matching_family(edges).unwrap(), 2);
    }
    let k = rng.random_range(1..=3);
    let members: Vec<IndependenceOracle> = (0..k)
        .map(|_| {
            let parts = rng.random_range(1..=n as usize);
            let capacity = (0..parts).map(|_| rng.random_range(1..=2)).collect();
            let assign: BTreeMap<TypeId, usize> = types.iter().map(|&t| (t, rng.random_range(0..parts))).collect();
            make_partition_matroid(assign, capacity).unwrap()
        })
        .collect();
    let family = if k == 1 {
        members.into_iter().next().unwrap()
    } else {
        intersect(members).unwrap()
    };
    (family, k)
}

/// Random maximal-ish independent superset of `start` drawn from `pool`.
pub fn grow(family: &IndependenceOracle, start: &TypeSet, pool: &[TypeId], rng: &mut ChaCha8Rng, keep: f64) -> TypeSet {
    let mut set = start.clone();
    let mut order = pool.to_vec();
    order.shuffle(rng);
    for t in order {
        if rng.random_bool(keep) && family.is_independent(&set.with(t)) {
            set.insert(t);
        }
    }
    set
}

/// `(F, k, A, B, E)` with `A ⊆ B ∈ F` and `A ∪ E ∈ F`.
pub struct ExtensionCase {
    pub family: IndependenceOracle,
    pub k: usize,
    pub a: TypeSet,
    pub b: TypeSet,
    pub e: TypeSet,
    pub ground: Vec<TypeId>,
}

pub fn random_extension_case(seed: u64) -> ExtensionCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=10u32);
    let (family, k) = random_family(&mut rng, n);
    let ground: Vec<TypeId> = (0..n).map(TypeId).collect();
    let b = grow(&family, &TypeSet::new(), &ground, &mut rng, 0.9);
    let a: TypeSet = b.iter().filter(|_| rng.random_bool(0.5)).collect();
    let with_e = grow(&family, &a, &ground, &mut rng, 0.7);
    let e = with_e.difference(&a);
    ExtensionCase {
        family,
        k,
        a,
        b,
        e,
        ground,
    }
}
