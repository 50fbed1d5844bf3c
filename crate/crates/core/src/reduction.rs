//! Weighted rank functions of k-extendible families reduced to unweighted
//! ones: weight classes, buckets of classes, representative classes, and
//! the greedy-optimal combiner.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{adap_exact, alg_exact, leaf_paths, ExactLimits, Model};
use crate::families::IndependenceOracle;
use crate::number::{Number, Scalar};
use crate::strategy::AdaptivePolicy;
use crate::typeset::TypeSet;
use crate::universe::{enumerate_assignments, ElementId, TypeId};
use crate::valuation::{weighted_rank, Valuation};

/// `2^j` exactly, for any integer `j`.
pub fn power_of_two(j: i32) -> Number {
    Number::new(BigRational::from_integer(BigInt::from(2)).pow(j))
}

/// Class `j` with `2^{j−1} < w ≤ 2^j`; `None` for zero weight.
pub fn class_index(w: &Number) -> Option<i32> {
    if w.is_zero() || w.is_negative() {
        return None;
    }
    let mut j = w.to_f64().log2().ceil() as i32;
    while power_of_two(j) < *w {
        j += 1;
    }
    while power_of_two(j - 1) >= *w {
        j -= 1;
    }
    Some(j)
}

/// Positive-weight types split by weight class, each class carrying the
/// unweighted rank of the family restricted to its types.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDecomposition {
    pub class_of: BTreeMap<TypeId, i32>,
    pub classes: BTreeMap<i32, Valuation>,
    /// Lowest and highest non-empty class.
    pub lowest: i32,
    pub highest: i32,
}

impl ClassDecomposition {
    pub fn members(&self, j: i32) -> TypeSet {
        self.class_of.iter().filter(|(_, &c)| c == j).map(|(&t, _)| t).collect()
    }
}

pub fn class_decompose(weights: &BTreeMap<TypeId, Number>, family: &IndependenceOracle) -> Result<ClassDecomposition> {
    let class_of: BTreeMap<TypeId, i32> = weights
        .iter()
        .filter_map(|(&t, w)| class_index(w).map(|j| (t, j)))
        .collect();
    let (Some(&lowest), Some(&highest)) = (class_of.values().min(), class_of.values().max()) else {
        return Err(Error::InvalidParameter("all weights are zero".into()));
    };
    let mut support: BTreeMap<i32, TypeSet> = BTreeMap::new();
    for (&t, &j) in &class_of {
        support.entry(j).or_default().insert(t);
    }
    let classes = support
        .into_iter()
        .map(|(j, s)| {
            (
                j,
                Valuation::Rank {
                    family: family.clone(),
                    support: Some(s),
                },
            )
        })
        .collect();
    Ok(ClassDecomposition {
        class_of,
        classes,
        lowest,
        highest,
    })
}

/// Smallest `W` with `2^W ≥ k²`, i.e. `⌈2 log₂ k⌉`.
pub fn bucket_width(k: usize) -> Result<u32> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("bucketing needs k >= 2, got {k}")));
    }
    let square = (k as u128) * (k as u128);
    Ok((0..).find(|&w| 1u128 << w >= square).expect("k² fits in u128"))
}

/// Classes `hi − W + 1 ..= hi` of bucket `index` (1-based, heaviest first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub index: usize,
    pub lo: i32,
    pub hi: i32,
}

impl Bucket {
    pub fn contains(&self, j: i32) -> bool {
        self.lo <= j && j <= self.hi
    }
}

/// Half-open buckets `B_i = {b − iW + 1, …, b − (i−1)W}` down to class `a`.
pub fn bucketize(b: i32, a: i32, k: usize) -> Result<Vec<Bucket>> {
    let w = bucket_width(k)? as i32;
    if b < a {
        return Err(Error::InvalidParameter(format!("highest class {b} below lowest {a}")));
    }
    let mut out = Vec::new();
    let mut hi = b;
    while hi >= a {
        out.push(Bucket {
            index: out.len() + 1,
            lo: hi - w + 1,
            hi,
        });
        hi -= w;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn admits(self, index: usize) -> bool {
        (index % 2 == 1) == (self == Parity::Odd)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representatives {
    pub parity: Parity,
    /// `(bucket index, j(i))` for every bucket with a non-empty class.
    pub argmax: Vec<(usize, i32)>,
}

impl Representatives {
    /// Representative classes of the chosen parity, heaviest first.
    pub fn selected(&self) -> impl Iterator<Item = i32> + '_ {
        self.argmax
            .iter()
            .filter(|(i, _)| self.parity.admits(*i))
            .map(|&(_, j)| j)
    }
}

/// `values[j] = 2^j · alg_j` for every non-empty class. Picks the best class
/// per bucket (larger `j` on ties) and the better parity (odd on ties).
pub fn select_representatives<S: Scalar>(values: &BTreeMap<i32, S>, buckets: &[Bucket]) -> Representatives {
    let mut argmax = Vec::new();
    let (mut odd, mut even) = (S::zero(), S::zero());
    for bucket in buckets {
        let mut best: Option<(i32, &S)> = None;
        for (&j, v) in values.range(bucket.lo..=bucket.hi) {
            if best.is_none_or(|(_, b)| *v >= *b) {
                best = Some((j, v));
            }
        }
        if let Some((j, v)) = best {
            argmax.push((bucket.index, j));
            if bucket.index % 2 == 1 {
                odd = odd + v.clone();
            } else {
                even = even + v.clone();
            }
        }
    }
    let parity = if even > odd { Parity::Even } else { Parity::Odd };
    Representatives { parity, argmax }
}

/// Walks the selected classes heaviest first, each time adding a largest
/// subset of that class's observed types that keeps the union independent.
pub fn greedy_optimal_combine(
    path_types: &TypeSet,
    decomposition: &ClassDecomposition,
    representatives: &Representatives,
    family: &IndependenceOracle,
) -> Result<TypeSet> {
    let mut chosen = TypeSet::new();
    for j in representatives.selected() {
        let candidates = path_types.intersection(&decomposition.members(j));
        let add = family.max_extension(&chosen, &candidates)?;
        chosen.union_with(&add);
    }
    Ok(chosen)
}

/// Every quantity of the reduction on one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionOutcome<S> {
    pub decomposition: ClassDecomposition,
    pub buckets: Vec<Bucket>,
    /// `alg(T, f_j)` per class.
    pub class_alg: BTreeMap<i32, S>,
    /// `adap(T, f_j)` per class.
    pub class_adap: BTreeMap<i32, S>,
    pub representatives: Representatives,
    /// Expected true weight of the combiner's output.
    pub combined: S,
    /// `¼ Σ_selected 2^{j(i)} alg_{j(i)}`.
    pub claim_bound: S,
    /// `adap(T, f)` for the weighted rank.
    pub adap: S,
    /// `adap(T, f) / (32 k log₂ k)`.
    pub theorem_bound: S,
}

impl<S: Scalar> ReductionOutcome<S> {
    pub fn claim_holds(&self, tolerance: f64) -> bool {
        self.combined.to_f64() >= self.claim_bound.to_f64() - tolerance
    }

    pub fn theorem_holds(&self, tolerance: f64) -> bool {
        self.combined.to_f64() >= self.theorem_bound.to_f64() - tolerance
    }

    /// `Σ_j 2^j adap(T, f_j)`, an upper bound on `adap(T, f)`.
    pub fn class_adap_sum(&self) -> S {
        self.class_adap.iter().fold(S::zero(), |acc, (&j, v)| {
            acc + S::from_number(&power_of_two(j)) * v.clone()
        })
    }
}

/// Runs the reduction against `policy` on the weighted rank of `family`
/// under `weights`, for a `k`-extendible family.
pub fn combined_value<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    weights: &BTreeMap<TypeId, Number>,
    family: &IndependenceOracle,
    k: usize,
    limits: ExactLimits,
) -> Result<ReductionOutcome<S>> {
    let decomposition = class_decompose(weights, family)?;
    let buckets = bucketize(decomposition.highest, decomposition.lowest, k)?;
    let mut class_alg = BTreeMap::new();
    let mut class_adap = BTreeMap::new();
    let mut scaled = BTreeMap::new();
    for (&j, fj) in &decomposition.classes {
        let alg: S = alg_exact(policy, model, fj, limits)?;
        scaled.insert(j, S::from_number(&power_of_two(j)) * alg.clone());
        class_alg.insert(j, alg);
        class_adap.insert(j, adap_exact::<S, P>(policy, model, fj, limits)?);
    }
    let representatives = select_representatives(&scaled, &buckets);
    let selected_sum = representatives
        .selected()
        .fold(S::zero(), |acc, j| acc + scaled[&j].clone());
    let claim_bound = S::from_number(&Number::ratio(1, 4)) * selected_sum;

    let weight_of = |t: TypeId| weights.get(&t).map_or_else(S::zero, S::from_number);
    let mut memo: HashMap<Vec<ElementId>, S> = HashMap::new();
    let mut combined = S::zero();
    for (path, prob) in leaf_paths::<S, P>(policy, model, limits)? {
        let mut key: Vec<ElementId> = path.iter().map(|&(e, _)| e).collect();
        key.sort();
        let inner = match memo.get(&key) {
            Some(v) => v.clone(),
            None => {
                let mut total = S::zero();
                for a in enumerate_assignments::<S>(model.universe, model.dist, &key, limits.assignments)? {
                    if a.prob == S::zero() {
                        continue;
                    }
                    let observed: TypeSet = a.types.iter().copied().collect();
                    let chosen = greedy_optimal_combine(&observed, &decomposition, &representatives, family)?;
                    let value = chosen.iter().fold(S::zero(), |acc, t| acc + weight_of(t));
                    total = total + a.prob * value;
                }
                memo.insert(key, total.clone());
                total
            }
        };
        combined = combined + prob * inner;
    }

    let f = weighted_rank(family.clone(), weights.clone())?;
    let adap: S = adap_exact(policy, model, &f, limits)?;
    let denominator = 32.0 * k as f64 * (k as f64).log2();
    let theorem_bound = if k.is_power_of_two() {
        adap.clone() / S::from_count(32 * k as u64 * k.trailing_zeros() as u64)
    } else {
        S::from_number(&Number::from_f64(adap.to_f64() / denominator)?)
    };
    Ok(ReductionOutcome {
        decomposition,
        buckets,
        class_alg,
        class_adap,
        representatives,
        combined,
        claim_bound,
        adap,
        theorem_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_matching_family, make_uniform_matroid};

    fn n(s: &str) -> Number {
        s.parse().unwrap()
    }

    #[test]
    fn classes() {
        assert_eq!(class_index(&n("5")), Some(3));
        assert_eq!(class_index(&n("1")), Some(0));
        assert_eq!(class_index(&n("0.3")), Some(-1));
        assert_eq!(class_index(&n("0")), None);
        assert_eq!(class_index(&n("4")), Some(2));
        assert_eq!(class_index(&n("1024")), Some(10));
        assert_eq!(class_index(&n("1025")), Some(11));
    }

    #[test]
    fn buckets() {
        assert_eq!(bucket_width(2).unwrap(), 2);
        assert_eq!(bucket_width(3).unwrap(), 4);
        assert_eq!(bucket_width(4).unwrap(), 4);
        assert!(bucket_width(1).is_err());
        assert_eq!(
            bucketize(7, 0, 4).unwrap(),
            vec![Bucket { index: 1, lo: 4, hi: 7 }, Bucket { index: 2, lo: 0, hi: 3 }]
        );
        assert_eq!(bucketize(1, 0, 2).unwrap(), vec![Bucket { index: 1, lo: 0, hi: 1 }]);
        assert_eq!(bucketize(3, 3, 4).unwrap(), vec![Bucket { index: 1, lo: 0, hi: 3 }]);
    }

    #[test]
    fn representatives() {
        let one = bucketize(1, 0, 2).unwrap();
        let r = select_representatives(&BTreeMap::from([(0, 1.0), (1, 1.0)]), &one);
        assert_eq!(r.parity, Parity::Odd);
        assert_eq!(r.selected().collect::<Vec<_>>(), vec![1]);

        let two = bucketize(3, 0, 2).unwrap();
        let r = select_representatives(&BTreeMap::from([(3, 0.1), (2, 0.0), (1, 5.0), (0, 2.0)]), &two);
        assert_eq!(r.parity, Parity::Even);
        assert_eq!(r.selected().collect::<Vec<_>>(), vec![1]);

        let four = bucketize(7, 0, 2).unwrap();
        let values: BTreeMap<i32, f64> = (0..8).map(|j| (j, 1.0)).collect();
        let r = select_representatives(&values, &four);
        let sum = r.selected().count() as f64;
        assert!(sum >= 8.0 / (2.0 * 2.0));
    }

    #[test]
    fn decomposition_errors_on_zero_weights() {
        let fam = make_uniform_matroid([TypeId(0)].into_iter().collect(), 1);
        assert!(class_decompose(&BTreeMap::from([(TypeId(0), Number::zero())]), &fam).is_err());
    }

    #[test]
    fn combiner_respects_independence() {
        // path a-b-c-d, edges ab=0, bc=1, cd=2; bc is heavy
        let fam = make_matching_family(BTreeMap::from([
            (TypeId(0), (0, 1)),
            (TypeId(1), (1, 2)),
            (TypeId(2), (2, 3)),
        ]))
        .unwrap();
        let weights = BTreeMap::from([(TypeId(0), n("1")), (TypeId(1), n("64")), (TypeId(2), n("1"))]);
        let dec = class_decompose(&weights, &fam).unwrap();
        let buckets = bucketize(dec.highest, dec.lowest, 2).unwrap();
        assert_eq!(buckets.len(), 4);
        let reps = Representatives {
            parity: Parity::Odd,
            argmax: vec![(1, 6), (3, 0)],
        };
        let all: TypeSet = [TypeId(0), TypeId(1), TypeId(2)].into_iter().collect();
        let chosen = greedy_optimal_combine(&all, &dec, &reps, &fam).unwrap();
        assert!(fam.is_independent(&chosen));
        assert!(chosen.contains(TypeId(1)));
        // the heavy pick blocks both light edges: |A'| ≥ |A| − k|A'_<i| = 2 − 2
        assert_eq!(chosen.len(), 1);
        let light_only = Representatives {
            parity: Parity::Odd,
            argmax: vec![(1, 0)],
        };
        let light = greedy_optimal_combine(&all, &dec, &light_only, &fam).unwrap();
        assert_eq!(light.len(), 2);
    }
}
