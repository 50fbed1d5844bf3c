//! Brute-force structural checks: submodularity, downward and prefix
//! closure, k-extendibility with constructive set-extension witnesses, and
//! the prime matroid-intersection encoding.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::IndependenceOracle;
use crate::instances::PrimeEncoding;
use crate::strategy::Constraint;
use crate::typeset::TypeSet;
use crate::universe::{ElementId, TypeId, Universe};
use crate::valuation::Valuation;

pub const SUBMODULAR_GROUND_CAP: usize = 10;
pub const DOWNWARD_GROUND_CAP: usize = 12;
pub const EXTENDIBLE_GROUND_CAP: usize = 10;
pub const PREFIX_SEQUENCE_CAP: u64 = 1_000_000;
const WITNESS_SEARCH_CAP: u64 = 1_000_000;

/// Outcome of a check: how many cases were examined and the first failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict<W> {
    pub holds: bool,
    pub checked: u64,
    pub witness: Option<W>,
}

impl<W> Verdict<W> {
    fn pass(checked: u64) -> Self {
        Verdict {
            holds: true,
            checked,
            witness: None,
        }
    }

    fn fail(checked: u64, witness: W) -> Self {
        Verdict {
            holds: false,
            checked,
            witness: Some(witness),
        }
    }
}

fn check_ground(ground: &[TypeId], cap: usize, what: &str) -> Result<()> {
    if ground.len() > cap {
        return Err(Error::InvalidParameter(format!(
            "{what} is exhaustive and accepts at most {cap} ground types, got {}",
            ground.len()
        )));
    }
    Ok(())
}

fn subset(ground: &[TypeId], mask: u64) -> TypeSet {
    TypeSet::from_mask(ground, mask)
}

fn independence_table(family: &IndependenceOracle, ground: &[TypeId]) -> Vec<bool> {
    (0..1u64 << ground.len())
        .map(|m| family.is_independent(&subset(ground, m)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmodularWitness {
    pub a: TypeSet,
    pub b: TypeSet,
    /// `f(A∪B) + f(A∩B)`
    pub lhs: f64,
    /// `f(A) + f(B)`
    pub rhs: f64,
}

/// `f(A∪B) + f(A∩B) > f(A) + f(B)` beyond rounding.
pub fn violates_submodularity(f: &Valuation, a: &TypeSet, b: &TypeSet) -> Result<bool> {
    let lhs = f.value::<f64>(&a.union(b))? + f.value::<f64>(&a.intersection(b))?;
    let rhs = f.value::<f64>(a)? + f.value::<f64>(b)?;
    Ok(lhs > rhs + 1e-9 * (1.0 + rhs.abs()))
}

/// Exhaustive over all pairs `A, B ⊆ ground`.
pub fn check_submodular(f: &Valuation, ground: &[TypeId]) -> Result<Verdict<SubmodularWitness>> {
    check_ground(ground, SUBMODULAR_GROUND_CAP, "submodularity check")?;
    let full = 1u64 << ground.len();
    let values = (0..full)
        .map(|m| f.value::<f64>(&subset(ground, m)))
        .collect::<Result<Vec<f64>>>()?;
    let mut checked = 0;
    for a in 0..full {
        for b in 0..full {
            checked += 1;
            let lhs = values[(a | b) as usize] + values[(a & b) as usize];
            let rhs = values[a as usize] + values[b as usize];
            if lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
                return Ok(Verdict::fail(
                    checked,
                    SubmodularWitness {
                        a: subset(ground, a),
                        b: subset(ground, b),
                        lhs,
                        rhs,
                    },
                ));
            }
        }
    }
    Ok(Verdict::pass(checked))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownwardWitness {
    /// A member of the family ...
    pub set: TypeSet,
    /// ... with a non-member subset.
    pub subset: TypeSet,
}

/// Exhaustive; a failure is always reported as a member and a non-member
/// obtained from it by removing one type.
pub fn check_downward_closed(family: &IndependenceOracle, ground: &[TypeId]) -> Result<Verdict<DownwardWitness>> {
    check_ground(ground, DOWNWARD_GROUND_CAP, "downward-closure check")?;
    let indep = independence_table(family, ground);
    let mut checked = 0;
    for m in 0..indep.len() as u64 {
        if !indep[m as usize] {
            continue;
        }
        for i in 0..ground.len() {
            if m & (1 << i) != 0 {
                checked += 1;
                let sub = m & !(1 << i);
                if !indep[sub as usize] {
                    return Ok(Verdict::fail(
                        checked,
                        DownwardWitness {
                            set: subset(ground, m),
                            subset: subset(ground, sub),
                        },
                    ));
                }
            }
        }
    }
    Ok(Verdict::pass(checked))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixWitness {
    pub sequence: Vec<ElementId>,
    pub infeasible_prefix: Vec<ElementId>,
}

/// Every feasible sequence of length at most `max_len` has feasible
/// prefixes. Tables are checked entry by entry; other constraints by
/// walking all stepwise extensions.
pub fn check_prefix_closed(
    constraint: &Constraint,
    universe: &Universe,
    max_len: usize,
) -> Result<Verdict<PrefixWitness>> {
    let prefix_failure = |seq: &[ElementId]| {
        (0..seq.len())
            .find(|&l| !constraint.is_feasible(&seq[..l]))
            .map(|l| PrefixWitness {
                sequence: seq.to_vec(),
                infeasible_prefix: seq[..l].to_vec(),
            })
    };
    if let Constraint::Table { sequences } = constraint {
        let mut checked = 0;
        for seq in sequences.iter().filter(|s| s.len() <= max_len) {
            checked += 1;
            if let Some(w) = prefix_failure(seq) {
                return Ok(Verdict::fail(checked, w));
            }
        }
        return Ok(Verdict::pass(checked));
    }
    fn walk(
        constraint: &Constraint,
        universe: &Universe,
        seq: &mut Vec<ElementId>,
        max_len: usize,
        checked: &mut u64,
        fail: &dyn Fn(&[ElementId]) -> Option<PrefixWitness>,
    ) -> Result<Option<PrefixWitness>> {
        *checked += 1;
        if *checked > PREFIX_SEQUENCE_CAP {
            return Err(Error::ExactInfeasible {
                what: "prefix-closure walk",
                needed: *checked as u128,
                cap: PREFIX_SEQUENCE_CAP as u128,
            });
        }
        if let Some(w) = fail(seq) {
            return Ok(Some(w));
        }
        if seq.len() == max_len {
            return Ok(None);
        }
        for e in universe.elements() {
            if constraint.may_extend(seq, e) {
                seq.push(e);
                let found = if constraint.is_feasible(seq) {
                    walk(constraint, universe, seq, max_len, checked, fail)?
                } else {
                    None
                };
                seq.pop();
                if found.is_some() {
                    return Ok(found);
                }
            }
        }
        Ok(None)
    }
    let mut checked = 0;
    match walk(
        constraint,
        universe,
        &mut Vec::new(),
        max_len,
        &mut checked,
        &prefix_failure,
    )? {
        Some(w) => Ok(Verdict::fail(checked, w)),
        None => Ok(Verdict::pass(checked)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendibleWitness {
    pub a: TypeSet,
    pub b: TypeSet,
    pub e: TypeId,
}

/// Exhaustive over `A ⊆ B ∈ F` and `e ∉ B` with `A ∪ {e} ∈ F`: some
/// `Z ⊆ B∖A`, `|Z| ≤ k`, must leave `(B∖Z) ∪ {e} ∈ F`.
pub fn check_k_extendible(
    family: &IndependenceOracle,
    ground: &[TypeId],
    k: usize,
) -> Result<Verdict<ExtendibleWitness>> {
    check_ground(ground, EXTENDIBLE_GROUND_CAP, "k-extendibility check")?;
    let indep = independence_table(family, ground);
    let mut checked = 0;
    for b in 0..indep.len() as u64 {
        if !indep[b as usize] {
            continue;
        }
        for i in 0..ground.len() {
            let e = 1u64 << i;
            if b & e != 0 {
                continue;
            }
            // removals that work for (B, e), regardless of A
            let valid: Vec<u64> = submasks(b)
                .filter(|z| z.count_ones() as usize <= k && indep[((b & !z) | e) as usize])
                .collect();
            for a in submasks(b) {
                if !indep[(a | e) as usize] {
                    continue;
                }
                checked += 1;
                if !valid.iter().any(|z| z & a == 0) {
                    return Ok(Verdict::fail(
                        checked,
                        ExtendibleWitness {
                            a: subset(ground, a),
                            b: subset(ground, b),
                            e: ground[i],
                        },
                    ));
                }
            }
        }
    }
    Ok(Verdict::pass(checked))
}

/// Submasks of `m` in increasing order.
fn submasks(m: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == m {
            None
        } else {
            Some(((cur | !m).wrapping_add(1)) & m)
        };
        Some(cur)
    })
}

/// Smallest-first search for `Z ⊆ candidates`, `|Z| ≤ k`, with
/// `(base ∖ Z) ∪ {e} ∈ F`.
fn single_extension(
    family: &IndependenceOracle,
    base: &TypeSet,
    candidates: &[TypeId],
    e: TypeId,
    k: usize,
    budget: &mut u64,
) -> Result<Option<TypeSet>> {
    #[allow(clippy::too_many_arguments)]
    fn combos(
        family: &IndependenceOracle,
        base: &TypeSet,
        candidates: &[TypeId],
        e: TypeId,
        size: usize,
        start: usize,
        z: &mut TypeSet,
        budget: &mut u64,
    ) -> Result<bool> {
        if z.len() == size {
            if *budget == 0 {
                return Err(Error::ExactInfeasible {
                    what: "extension witness search",
                    needed: WITNESS_SEARCH_CAP as u128 + 1,
                    cap: WITNESS_SEARCH_CAP as u128,
                });
            }
            *budget -= 1;
            return Ok(family.is_independent(&base.difference(z).with(e)));
        }
        for i in start..candidates.len() {
            z.insert(candidates[i]);
            if combos(family, base, candidates, e, size, i + 1, z, budget)? {
                return Ok(true);
            }
            z.remove(candidates[i]);
        }
        Ok(false)
    }
    for size in 0..=k.min(candidates.len()) {
        let mut z = TypeSet::new();
        if combos(family, base, candidates, e, size, 0, &mut z, budget)? {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// Constructive set extension for a `k`-extendible family: given
/// `A ⊆ B ∈ F` and `A ∪ E ∈ F`, returns `Z ⊆ B∖A` with `|Z| ≤ k|E|` and
/// `(B∖Z) ∪ E ∈ F`, adding the types of `E` one at a time in increasing id
/// order and removing at most `k` types of `B` for each.
pub fn find_extension_witness(
    family: &IndependenceOracle,
    k: usize,
    a: &TypeSet,
    b: &TypeSet,
    e: &TypeSet,
) -> Result<TypeSet> {
    if !a.is_subset(b) {
        return Err(Error::Precondition("A is not a subset of B".into()));
    }
    if !family.is_independent(b) {
        return Err(Error::Precondition("B is not independent".into()));
    }
    if !family.is_independent(&a.union(e)) {
        return Err(Error::Precondition("A ∪ E is not independent".into()));
    }
    let mut z = TypeSet::new();
    let mut added = TypeSet::new();
    let mut budget = WITNESS_SEARCH_CAP;
    for ei in e.iter() {
        let current = b.difference(&z).union(&added);
        let protected = z.union(a).union(&added);
        let candidates: Vec<TypeId> = b.difference(&protected).iter().collect();
        let Some(step) = single_extension(family, &current, &candidates, ei, k, &mut budget)? else {
            return Err(Error::NotExtendible {
                k,
                detail: format!(
                    "no removal of at most {k} types from {:?} admits {:?} next to {:?}",
                    current,
                    ei,
                    a.union(&added)
                ),
            });
        };
        z.union_with(&step);
        added.insert(ei);
    }
    Ok(z)
}

/// The three conclusions of the set-extension property for `z`.
pub fn extension_witness_valid(
    family: &IndependenceOracle,
    k: usize,
    a: &TypeSet,
    b: &TypeSet,
    e: &TypeSet,
    z: &TypeSet,
) -> bool {
    z.is_subset(&b.difference(a)) && z.len() <= k * e.len() && family.is_independent(&b.difference(z).union(e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingWitness {
    pub set: Vec<ElementId>,
    pub independent: bool,
    pub on_one_path: bool,
}

/// How many sets to test against the path characterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetCheck {
    /// Every subset of the edges (needs at most 20 edges).
    Exhaustive,
    /// This many random sets, half drawn inside one root-leaf path.
    Sampled { count: u64, seed: u64 },
}

/// Pair and set characterizations of the encoding: a set is independent in
/// the intersection iff all its edges lie on one root-leaf path, and a pair
/// iff its edges are ancestor-related. `pair_sample` limits the pair check
/// to that many random pairs.
pub fn check_encoding(
    encoding: &PrimeEncoding,
    pair_sample: Option<(u64, u64)>,
    sets: SetCheck,
) -> Result<Verdict<EncodingWitness>> {
    let family = encoding.intersection()?;
    let n = encoding.active.len();
    let types_of = |set: &[ElementId]| -> TypeSet { set.iter().map(|e| encoding.active[e.index()]).collect() };
    let mut checked = 0;
    let test = |set: Vec<ElementId>, checked: &mut u64| -> Option<EncodingWitness> {
        *checked += 1;
        let independent = family.is_independent(&types_of(&set));
        let on_one_path = encoding.on_one_path(&set);
        (independent != on_one_path).then_some(EncodingWitness {
            set,
            independent,
            on_one_path,
        })
    };
    match pair_sample {
        None => {
            for a in 0..n {
                for b in a..n {
                    let pair = if a == b {
                        vec![ElementId(a as u32)]
                    } else {
                        vec![ElementId(a as u32), ElementId(b as u32)]
                    };
                    if let Some(w) = test(pair, &mut checked) {
                        return Ok(Verdict::fail(checked, w));
                    }
                }
            }
        }
        Some((count, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let a = rng.random_range(0..n as u32);
                let b = rng.random_range(0..n as u32);
                let mut pair = vec![ElementId(a.min(b)), ElementId(a.max(b))];
                pair.dedup();
                if let Some(w) = test(pair, &mut checked) {
                    return Ok(Verdict::fail(checked, w));
                }
            }
        }
    }
    match sets {
        SetCheck::Exhaustive => {
            if n > 20 {
                return Err(Error::InvalidParameter(format!("exhaustive set check over {n} edges")));
            }
            for m in 0..1u64 << n {
                let set = (0..n)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| ElementId(i as u32))
                    .collect();
                if let Some(w) = test(set, &mut checked) {
                    return Ok(Verdict::fail(checked, w));
                }
            }
        }
        SetCheck::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tree = encoding.tree;
            let leaves_start = tree.num_edges().expect("encoding tree is small") - tree.arity.pow(tree.depth) + 1;
            let all: Vec<ElementId> = (0..n as u32).map(ElementId).collect();
            for i in 0..count {
                let leaf = rng.random_range(leaves_start..=tree.num_edges().expect("small"));
                let mut path = Vec::new();
                let mut v = leaf;
                while v > 0 {
                    path.push(tree.edge_element(v));
                    v = tree.parent(v).expect("non-root");
                }
                let mut set: Vec<ElementId> = path.into_iter().filter(|_| rng.random_bool(0.6)).collect();
                if i % 2 == 1 {
                    let extra = rng.random_range(1..=3);
                    set.extend(all.choose_multiple(&mut rng, extra).copied());
                }
                set.sort();
                set.dedup();
                if let Some(w) = test(set, &mut checked) {
                    return Ok(Verdict::fail(checked, w));
                }
            }
        }
    }
    Ok(Verdict::pass(checked))
}
