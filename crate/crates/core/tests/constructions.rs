use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;
use smplab_core::evaluate::{adap_exact, adap_mc, best_nonadaptive_exact, DEFAULT_SEQUENCE_CAP};
use smplab_core::families::{greedy_rank, make_matching_family, ContractionState};
use smplab_core::instances::{
    column_count, gen_prime_matroid_encoding, gen_submodular_lb, gen_tree_lb, submodular_lb_adap_recurrence,
    submodular_lb_adap_table, submodular_lb_alg_opt, submodular_lb_alg_table,
};
use smplab_core::reduction::{bucketize, class_index};
use smplab_core::universe::DEFAULT_ENUMERATION_CAP;
use smplab_core::valuation::explicit_table;
use smplab_core::verify::{check_submodular, find_extension_witness};
use smplab_core::{ElementId, ExactLimits, McConfig, Number, TypeId, TypeSet};

fn set(ids: &[u32]) -> TypeSet {
    ids.iter().map(|&i| TypeId(i)).collect()
}

/// Plain recursion of the adaptive recurrence, no tables.
fn adap_oracle(eps: f64, d: usize, k: usize) -> f64 {
    (0..=d - k)
        .map(|i| {
            (1.0 - eps).powi(i as i32)
                * eps
                * ((1.0 - eps).powi(k as i32) + if k + i < d { adap_oracle(eps, d, k + i + 1) } else { 0.0 })
        })
        .sum()
}

#[test]
fn column_count_matches_exact_search() {
    for (eps, expected) in [("1/2", 3), ("0.1", 44)] {
        let e: Number = eps.parse().unwrap();
        let q = BigRational::one() - e.exact().clone();
        let target = e.exact() * e.exact();
        let mut d = 0;
        let mut power = BigRational::one();
        while power >= target {
            power *= &q;
            d += 1;
        }
        assert_eq!(d, expected);
        assert_eq!(column_count(&e).unwrap(), expected);
    }
    // |V| counts (k, l) with k + l <= D
    assert_eq!(gen_submodular_lb(&Number::ratio(1, 2)).unwrap().universe.len(), 10);
}

#[test]
fn adaptive_recurrence_against_plain_recursion() {
    for (eps, d) in [(0.5, 3usize), (0.25, 10)] {
        let e = Number::from_f64(eps).unwrap();
        let v: f64 = submodular_lb_adap_recurrence(&e).unwrap();
        assert!((v - adap_oracle(eps, d, 0)).abs() < 1e-12);
    }
    // bases: adap(D) = alg(D) = eps (1-eps)^D
    let e = Number::ratio(1, 2);
    let adap: Vec<BigRational> = submodular_lb_adap_table(&e).unwrap();
    let alg: Vec<BigRational> = submodular_lb_alg_table(&e).unwrap();
    let base = BigRational::new(1.into(), 16.into());
    assert_eq!(adap[3], base);
    assert_eq!(alg[3], base);
    assert_eq!(adap[0], BigRational::new(41.into(), 32.into()));
    assert_eq!(alg[0], BigRational::new(15.into(), 16.into()));
}

#[test]
fn column_walk_tree_realizes_recurrence() {
    let e = Number::ratio(1, 4);
    let b = gen_submodular_lb(&e).unwrap();
    let tree: f64 = adap_exact(
        b.strategy.as_ref().unwrap(),
        b.model(),
        &b.valuation,
        ExactLimits::default(),
    )
    .unwrap();
    assert!((tree - adap_oracle(0.25, 10, 0)).abs() < 1e-9);
}

#[test]
fn best_fixed_path_equals_alg_dp() {
    let e = Number::ratio(1, 2);
    let b = gen_submodular_lb(&e).unwrap();
    let best = best_nonadaptive_exact::<BigRational>(
        b.model(),
        &b.valuation,
        &b.constraint,
        b.universe.len(),
        DEFAULT_SEQUENCE_CAP,
        DEFAULT_ENUMERATION_CAP,
    )
    .unwrap();
    assert_eq!(best.value, submodular_lb_alg_opt::<BigRational>(&e).unwrap());
    assert_eq!(best.sequence[0], b.universe.find_element("e_0_0").unwrap());
}

#[test]
fn monte_carlo_on_lower_bound_instance() {
    let e: Number = "0.1".parse().unwrap();
    let b = gen_submodular_lb(&e).unwrap();
    let exact: f64 = submodular_lb_adap_recurrence(&e).unwrap();
    let mc = adap_mc(
        b.strategy.as_ref().unwrap(),
        b.model(),
        &b.valuation,
        McConfig::new(20_000, 17),
    )
    .unwrap();
    assert!(
        (mc.value - exact).abs() <= 3.0 * mc.stderr.unwrap(),
        "{} vs {exact}",
        mc.value
    );
}

#[test]
fn tree_instance_and_encoding_sizes() {
    assert_eq!(gen_tree_lb(2, 2, &Number::ratio(1, 2), None).unwrap().universe.len(), 6);
    let enc = gen_prime_matroid_encoding(2).unwrap();
    assert_eq!(enc.matroids.len(), 4);
    assert_eq!(enc.active.len(), 6);
    // sibling depth-1 edges share part d_v mod 2 in M_{1,0}
    let siblings = [enc.active[0], enc.active[1]].into_iter().collect();
    let m10 = &enc.matroids.iter().find(|((i, j), _)| (*i, *j) == (1, 0)).unwrap().1;
    assert!(!m10.is_independent(&siblings));
    // root edge and the edge below its lower vertex
    let child = enc.tree.edge_element(enc.tree.child(1, 0));
    let chain = [enc.active[0], enc.active[child.0 as usize]].into_iter().collect();
    assert!(enc.matroids.iter().all(|(_, m)| m.is_independent(&chain)));
    assert!(enc.ancestor_related(ElementId(0), child));

    let enc = gen_prime_matroid_encoding(3).unwrap();
    assert_eq!((enc.matroids.len(), enc.active.len()), (9, 39));
}

fn path_matching() -> smplab_core::IndependenceOracle {
    // ab, bc, cd on the path a-b-c-d
    let edges: BTreeMap<TypeId, (u32, u32)> = [(TypeId(0), (0, 1)), (TypeId(1), (1, 2)), (TypeId(2), (2, 3))].into();
    make_matching_family(edges).unwrap()
}

#[test]
fn greedy_on_path_matching() {
    let m = path_matching();
    assert_eq!(greedy_rank(&m, &[TypeId(1), TypeId(0), TypeId(2)]), 1);
    assert_eq!(m.max_rank(&set(&[0, 1, 2])).unwrap(), 2);
}

#[test]
fn extension_on_path_matching() {
    let m = path_matching();
    let z = find_extension_witness(&m, 2, &TypeSet::new(), &set(&[0, 2]), &set(&[1])).unwrap();
    assert_eq!(z, set(&[0, 2]));
}

#[test]
fn triangle_contraction() {
    let edges: BTreeMap<TypeId, (u32, u32)> = [
        (TypeId(0), (0, 1)),
        (TypeId(1), (1, 2)),
        (TypeId(2), (0, 2)),
        (TypeId(3), (3, 4)),
    ]
    .into();
    let m = make_matching_family(edges).unwrap();
    let state = ContractionState::new(&m).contract_type(TypeId(0)).unwrap();
    assert!(state.is_loop(TypeId(1)) && state.is_loop(TypeId(2)));
    assert!(!state.is_loop(TypeId(3)));
    assert!(state.is_loop(TypeId(0)));
}

#[test]
fn weight_classes_and_buckets() {
    assert_eq!(class_index(&Number::integer(5)), Some(3));
    assert_eq!(class_index(&Number::integer(1)), Some(0));
    assert_eq!(class_index(&"0.3".parse().unwrap()), Some(-1));
    assert_eq!(class_index(&Number::zero()), None);
    let spans = |b, a, k| {
        bucketize(b, a, k)
            .unwrap()
            .iter()
            .map(|x| (x.lo, x.hi))
            .collect::<Vec<_>>()
    };
    assert_eq!(spans(7, 0, 4), vec![(4, 7), (0, 3)]);
    assert_eq!(spans(1, 0, 2), vec![(0, 1)]);
    assert_eq!(spans(3, 3, 4), vec![(0, 3)]);
}

#[test]
fn supermodular_table_has_witness() {
    let f = explicit_table(
        vec![TypeId(0), TypeId(1)],
        vec![Number::zero(), Number::zero(), Number::zero(), Number::integer(2)],
    )
    .unwrap();
    let v = check_submodular(&f, &[TypeId(0), TypeId(1)]).unwrap();
    assert!(!v.holds && v.witness.is_some());
}

#[test]
fn gap_within_linear_slack_of_two() {
    for eps in ["0.05", "0.02", "0.01"] {
        let e: Number = eps.parse().unwrap();
        let adap: f64 = submodular_lb_adap_recurrence(&e).unwrap();
        let alg: f64 = submodular_lb_alg_opt(&e).unwrap();
        assert!(adap / alg >= 2.0 - 20.0 * e.to_f64(), "eps {eps}");
    }
}
