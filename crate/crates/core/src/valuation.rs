//! Monotone set functions over types.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::IndependenceOracle;
use crate::number::{Number, Scalar};
use crate::typeset::TypeSet;
use crate::universe::TypeId;

/// A monotone valuation `f : 2^T → R≥0` with `f(∅) = 0`, stored by
/// descriptor so it serializes without a value table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Valuation {
    /// `values[mask]` is the value of the subset of `ground` selected by
    /// `mask`; types outside `ground` contribute nothing.
    Table { ground: Vec<TypeId>, values: Vec<Number> },
    /// Linear function; cardinality when every weight is 1.
    Additive { weights: BTreeMap<TypeId, Number> },
    /// Size of the union of the covered items.
    Coverage { cover: BTreeMap<TypeId, BTreeSet<u32>> },
    /// Sum of the weights of the distinct parts touched.
    PartitionWeighted {
        part_of: BTreeMap<TypeId, usize>,
        part_weight: Vec<Number>,
    },
    /// Unweighted rank of `family`, counting only types in `support` when
    /// given.
    Rank {
        family: IndependenceOracle,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<TypeSet>,
    },
    /// `max_{B ∈ F} w(A ∩ B)`; missing weights are 0.
    WeightedRank {
        family: IndependenceOracle,
        weights: BTreeMap<TypeId, Number>,
    },
    /// `g(A) = base(by ∪ A) − base(by)`.
    Contracted { base: Arc<Valuation>, by: TypeSet },
}

pub fn explicit_table(ground: Vec<TypeId>, values: Vec<Number>) -> Result<Valuation> {
    if ground.len() > 20 || values.len() != 1usize << ground.len() {
        return Err(Error::InvalidParameter(format!(
            "table over {} types needs {} values, got {}",
            ground.len(),
            1u64 << ground.len().min(63),
            values.len()
        )));
    }
    if !values[0].is_zero() {
        return Err(Error::InvalidParameter("table value of the empty set must be 0".into()));
    }
    Ok(Valuation::Table { ground, values })
}

pub fn cardinality(ground: &TypeSet) -> Valuation {
    Valuation::Additive {
        weights: ground.iter().map(|t| (t, Number::one())).collect(),
    }
}

pub fn coverage_valuation(cover: BTreeMap<TypeId, BTreeSet<u32>>) -> Valuation {
    Valuation::Coverage { cover }
}

pub fn partition_weighted_valuation(part_of: BTreeMap<TypeId, usize>, part_weight: Vec<Number>) -> Result<Valuation> {
    if let Some((t, p)) = part_of.iter().find(|(_, &p)| p >= part_weight.len()) {
        return Err(Error::InvalidParameter(format!(
            "type {t:?} assigned to missing part {p}"
        )));
    }
    if part_weight.iter().any(Number::is_negative) {
        return Err(Error::InvalidParameter("negative part weight".into()));
    }
    Ok(Valuation::PartitionWeighted { part_of, part_weight })
}

pub fn rank(family: IndependenceOracle) -> Valuation {
    Valuation::Rank { family, support: None }
}

pub fn weighted_rank(family: IndependenceOracle, weights: BTreeMap<TypeId, Number>) -> Result<Valuation> {
    if weights.values().any(Number::is_negative) {
        return Err(Error::InvalidParameter("negative weight".into()));
    }
    Ok(Valuation::WeightedRank { family, weights })
}

/// `f_S(A) = f(S ∪ A) − f(S)`. Nested contractions are flattened since
/// `(f_S)_R = f_{S ∪ R}`.
pub fn contract(f: &Valuation, s: &TypeSet) -> Valuation {
    match f {
        Valuation::Contracted { base, by } => Valuation::Contracted {
            base: base.clone(),
            by: by.union(s),
        },
        other => Valuation::Contracted {
            base: Arc::new(other.clone()),
            by: s.clone(),
        },
    }
}

impl Valuation {
    pub fn value<S: Scalar>(&self, set: &TypeSet) -> Result<S> {
        match self {
            Valuation::Table { ground, values } => {
                let mask = ground
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| set.contains(**t))
                    .fold(0usize, |m, (i, _)| m | 1 << i);
                Ok(S::from_number(&values[mask]))
            }
            Valuation::Additive { weights } => Ok(set
                .iter()
                .filter_map(|t| weights.get(&t))
                .fold(S::zero(), |acc, w| acc + S::from_number(w))),
            Valuation::Coverage { cover } => {
                let covered: BTreeSet<u32> = set.iter().filter_map(|t| cover.get(&t)).flatten().copied().collect();
                Ok(S::from_count(covered.len() as u64))
            }
            Valuation::PartitionWeighted { part_of, part_weight } => {
                let parts: BTreeSet<usize> = set.iter().filter_map(|t| part_of.get(&t).copied()).collect();
                Ok(parts
                    .into_iter()
                    .fold(S::zero(), |acc, p| acc + S::from_number(&part_weight[p])))
            }
            Valuation::Rank { family, support } => {
                let r = match support {
                    Some(sup) => family.max_rank(&set.intersection(sup))?,
                    None => family.max_rank(set)?,
                };
                Ok(S::from_count(r as u64))
            }
            Valuation::WeightedRank { family, weights } => {
                family.max_weight(set, |t| weights.get(&t).map_or_else(S::zero, S::from_number))
            }
            Valuation::Contracted { base, by } => {
                let with = base.value::<S>(&by.union(set))?;
                Ok(with - base.value::<S>(by)?)
            }
        }
    }

    /// `f(base ∪ {t}) − f(base)` style marginal of a whole set.
    pub fn marginal<S: Scalar>(&self, base: &TypeSet, add: &TypeSet) -> Result<S> {
        Ok(self.value::<S>(&base.union(add))? - self.value::<S>(base)?)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Valuation::Table { .. } => "table",
            Valuation::Additive { .. } => "additive",
            Valuation::Coverage { .. } => "coverage",
            Valuation::PartitionWeighted { .. } => "partition_weighted",
            Valuation::Rank { .. } => "rank",
            Valuation::WeightedRank { .. } => "weighted_rank",
            Valuation::Contracted { .. } => "contracted",
        }
    }

    /// Whether this valuation is submodular by construction.
    pub fn is_submodular_by_construction(&self) -> bool {
        match self {
            Valuation::Additive { .. } | Valuation::Coverage { .. } | Valuation::PartitionWeighted { .. } => true,
            Valuation::Rank { family, .. } | Valuation::WeightedRank { family, .. } => family.is_matroid(),
            Valuation::Contracted { base, .. } => base.is_submodular_by_construction(),
            Valuation::Table { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_matching_family, make_uniform_matroid};

    fn ids(v: &[u32]) -> TypeSet {
        v.iter().map(|&i| TypeId(i)).collect()
    }

    fn val(f: &Valuation, v: &[u32]) -> f64 {
        f.value::<f64>(&ids(v)).unwrap()
    }

    #[test]
    fn contract_by_empty_is_identity() {
        let f = coverage_valuation([(TypeId(0), [1, 2].into()), (TypeId(1), [2, 3].into())].into());
        let g = contract(&f, &TypeSet::new());
        for mask in 0..4 {
            let s = TypeSet::from_mask(&[TypeId(0), TypeId(1)], mask);
            assert_eq!(f.value::<f64>(&s).unwrap(), g.value::<f64>(&s).unwrap());
        }
    }

    #[test]
    fn contract_cardinality() {
        let f = cardinality(&ids(&[0, 1]));
        let g = contract(&f, &ids(&[0]));
        assert_eq!(val(&g, &[1]), 1.0);
        assert_eq!(val(&g, &[0]), 0.0);
        assert_eq!(val(&g, &[]), 0.0);
    }

    #[test]
    fn contract_coverage() {
        // t0 covers {a,b}, t1 covers {b,c}
        let f = coverage_valuation([(TypeId(0), [0, 1].into()), (TypeId(1), [1, 2].into())].into());
        let g = contract(&f, &ids(&[0]));
        assert_eq!(val(&g, &[1]), 1.0);
    }

    #[test]
    fn nested_contraction_flattens() {
        let f = cardinality(&ids(&[0, 1, 2]));
        let g = contract(&contract(&f, &ids(&[0])), &ids(&[1]));
        match &g {
            Valuation::Contracted { by, .. } => assert_eq!(by, &ids(&[0, 1])),
            _ => panic!(),
        }
        assert_eq!(val(&g, &[0, 1, 2]), 1.0);
    }

    #[test]
    fn weighted_rank_examples() {
        let u = make_uniform_matroid(ids(&[0, 1]), 1);
        let f = weighted_rank(
            u,
            [(TypeId(0), Number::integer(3)), (TypeId(1), Number::integer(5))].into(),
        )
        .unwrap();
        assert_eq!(val(&f, &[]), 0.0);
        assert_eq!(val(&f, &[0, 1]), 5.0);
        let m = make_matching_family([(TypeId(0), (0, 1)), (TypeId(1), (1, 2)), (TypeId(2), (2, 3))].into()).unwrap();
        let g = weighted_rank(m, (0..3).map(|i| (TypeId(i), Number::one())).collect()).unwrap();
        assert_eq!(val(&g, &[0, 1, 2]), 2.0);
    }

    #[test]
    fn coverage_examples() {
        let disjoint = coverage_valuation([(TypeId(0), [0, 1].into()), (TypeId(1), [2, 3, 4].into())].into());
        assert_eq!(val(&disjoint, &[]), 0.0);
        assert_eq!(val(&disjoint, &[0, 1]), 5.0);
        let overlap = coverage_valuation([(TypeId(0), [1, 2].into()), (TypeId(1), [2, 3].into())].into());
        assert_eq!(val(&overlap, &[0, 1]), 3.0);
    }

    #[test]
    fn partition_weighted_examples() {
        let same =
            partition_weighted_valuation([(TypeId(0), 0), (TypeId(1), 0)].into(), vec![Number::ratio(9, 10)]).unwrap();
        assert_eq!(val(&same, &[]), 0.0);
        assert_eq!(val(&same, &[0, 1]), 0.9);
        // parts 0,1 with weights (1-eps)^0, (1-eps)^1 at eps = 1/2
        let eps = Number::ratio(1, 2);
        let f = partition_weighted_valuation(
            [(TypeId(0), 0), (TypeId(1), 1)].into(),
            vec![eps.complement().pow(0), eps.complement().pow(1)],
        )
        .unwrap();
        assert_eq!(val(&f, &[0, 1]), 1.5);
        assert!(partition_weighted_valuation([(TypeId(0), 2)].into(), vec![Number::one()]).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(explicit_table(vec![TypeId(0)], vec![Number::zero()]).is_err());
        assert!(explicit_table(vec![TypeId(0)], vec![Number::one(), Number::one()]).is_err());
        let t = explicit_table(
            vec![TypeId(0), TypeId(1)],
            ["0", "0", "0", "2"].iter().map(|s| s.parse().unwrap()).collect(),
        )
        .unwrap();
        assert_eq!(val(&t, &[0, 1, 7]), 2.0);
    }

    #[test]
    fn rank_with_support() {
        let u = make_uniform_matroid(ids(&[0, 1, 2]), 2);
        let f = Valuation::Rank {
            family: u,
            support: Some(ids(&[0, 1])),
        };
        assert_eq!(val(&f, &[0, 1, 2]), 2.0);
        assert_eq!(val(&f, &[2]), 0.0);
    }

    #[test]
    fn exact_and_float_agree() {
        let f = partition_weighted_valuation(
            [(TypeId(0), 0), (TypeId(1), 1)].into(),
            vec![Number::ratio(1, 3), Number::ratio(2, 7)],
        )
        .unwrap();
        let exact: num_rational::BigRational = f.value(&ids(&[0, 1])).unwrap();
        assert_eq!(exact, num_rational::BigRational::new(13.into(), 21.into()));
    }
}
