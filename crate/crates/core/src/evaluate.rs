//! Exact and Monte Carlo evaluation of adaptive strategies, their
//! random-walk non-adaptive counterparts, and the interleaved greedy value.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{ContractionState, IndependenceOracle};
use crate::number::Scalar;
use crate::strategy::{AdaptivePolicy, Constraint, ProbePath};
use crate::typeset::TypeSet;
use crate::universe::{
    assignment_count, enumerate_assignments, stream_rng, ElementId, TypeDistribution, TypeId, Universe,
    DEFAULT_ENUMERATION_CAP,
};
use crate::valuation::Valuation;

pub const DEFAULT_NODE_CAP: u128 = 1 << 22;
pub const DEFAULT_SEQUENCE_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

/// Value of an evaluation plus how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub value: f64,
    /// Exact rational value, when computed in rational arithmetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<NodeValue>,
}

impl EvalReport {
    pub fn exact<S: Scalar>(value: &S) -> Self {
        EvalReport {
            value: value.to_f64(),
            exact: value.exact_repr(),
            mode: Mode::Exact,
            trials: None,
            seed: None,
            stderr: None,
            trace: Vec::new(),
        }
    }
}

/// Expected additional value `adap(T_v, f_C)` of the subtree at one node,
/// where `C` is the set of types observed on the way to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    pub path: ProbePath,
    pub value: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ExactLimits {
    /// Maximum number of strategy nodes visited.
    pub nodes: u128,
    /// Maximum number of joint assignments enumerated per element set.
    pub assignments: u128,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            nodes: DEFAULT_NODE_CAP,
            assignments: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Shared inputs of every evaluator.
#[derive(Clone, Copy)]
pub struct Model<'a> {
    pub universe: &'a Universe,
    pub dist: &'a TypeDistribution,
}

impl<'a> Model<'a> {
    pub fn new(universe: &'a Universe, dist: &'a TypeDistribution) -> Self {
        Model { universe, dist }
    }

    fn positive_types(&self, e: ElementId) -> impl Iterator<Item = TypeId> + '_ {
        self.universe
            .types_of(e)
            .iter()
            .copied()
            .filter(|&t| !self.dist.prob(t).is_zero())
    }
}

struct NodeBudget {
    left: u128,
    cap: u128,
}

impl NodeBudget {
    fn new(cap: u128) -> Self {
        NodeBudget { left: cap, cap }
    }

    fn take(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::ExactInfeasible {
                what: "strategy traversal",
                needed: self.cap + 1,
                cap: self.cap,
            });
        }
        self.left -= 1;
        Ok(())
    }
}

/// `adap(T, f) = E_X[f(X_{S(X)})]`, computed by the root decomposition
/// `E_I[f(I) + adap(T_I, f_I)]` with the valuation contracted by the types
/// observed so far.
pub fn adap_exact<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    f: &Valuation,
    limits: ExactLimits,
) -> Result<S> {
    let mut budget = NodeBudget::new(limits.nodes);
    adap_node(
        policy,
        model,
        f,
        policy.start(),
        &TypeSet::new(),
        &S::zero(),
        &mut budget,
        None,
    )
}

/// Like [`adap_exact`] but also records the expected additional value at
/// every internal node.
pub fn adap_exact_traced<P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    f: &Valuation,
    limits: ExactLimits,
) -> Result<EvalReport> {
    let mut budget = NodeBudget::new(limits.nodes);
    let mut trace = Trace::default();
    let v: f64 = adap_node(
        policy,
        model,
        f,
        policy.start(),
        &TypeSet::new(),
        &0.0,
        &mut budget,
        Some(&mut trace),
    )?;
    let mut report = EvalReport::exact(&v);
    report.trace = trace.nodes;
    Ok(report)
}

#[derive(Default)]
struct Trace {
    path: ProbePath,
    nodes: Vec<NodeValue>,
}

#[allow(clippy::too_many_arguments)]
fn adap_node<'p, S: Scalar, P: AdaptivePolicy>(
    policy: &'p P,
    model: Model<'_>,
    f: &Valuation,
    cursor: P::Cursor<'p>,
    observed: &TypeSet,
    f_observed: &S,
    budget: &mut NodeBudget,
    mut trace: Option<&mut Trace>,
) -> Result<S> {
    budget.take()?;
    let Some(e) = policy.next(&cursor) else {
        return Ok(S::zero());
    };
    let mut total = S::zero();
    for t in model.positive_types(e) {
        let with = observed.with(t);
        let f_with: S = f.value(&with)?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.path.push((e, t));
        }
        let rest = adap_node(
            policy,
            model,
            f,
            policy.advance(&cursor, t),
            &with,
            &f_with,
            budget,
            trace.as_deref_mut(),
        )?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.path.pop();
        }
        let gain = f_with - f_observed.clone();
        total = total + S::from_number(model.dist.prob(t)) * (gain + rest);
    }
    if let Some(tr) = trace {
        tr.nodes.push(NodeValue {
            path: tr.path.clone(),
            value: total.to_f64(),
        });
    }
    Ok(total)
}

/// Every root-leaf path with positive probability, with that probability.
pub fn leaf_paths<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    limits: ExactLimits,
) -> Result<Vec<(ProbePath, S)>> {
    fn go<'p, S: Scalar, P: AdaptivePolicy>(
        policy: &'p P,
        model: Model<'_>,
        cursor: P::Cursor<'p>,
        path: &mut ProbePath,
        prob: S,
        budget: &mut NodeBudget,
        out: &mut Vec<(ProbePath, S)>,
    ) -> Result<()> {
        budget.take()?;
        let Some(e) = policy.next(&cursor) else {
            out.push((path.clone(), prob));
            return Ok(());
        };
        for t in model.positive_types(e) {
            path.push((e, t));
            let p = prob.clone() * S::from_number(model.dist.prob(t));
            go(policy, model, policy.advance(&cursor, t), path, p, budget, out)?;
            path.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    let mut budget = NodeBudget::new(limits.nodes);
    go(
        policy,
        model,
        policy.start(),
        &mut Vec::new(),
        S::one(),
        &mut budget,
        &mut out,
    )?;
    Ok(out)
}

/// `adap` by direct enumeration of root-leaf paths: `Σ_ℓ P(ℓ) f(types on ℓ)`.
pub fn adap_by_paths<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    f: &Valuation,
    limits: ExactLimits,
) -> Result<S> {
    let mut total = S::zero();
    for (path, prob) in leaf_paths::<S, P>(policy, model, limits)? {
        let types: TypeSet = path.iter().map(|&(_, t)| t).collect();
        total = total + prob * f.value::<S>(&types)?;
    }
    Ok(total)
}

/// `E_X[f(X_S)]` for a fixed element set.
pub fn expected_value_of_set<S: Scalar>(
    model: Model<'_>,
    f: &Valuation,
    elements: &[ElementId],
    cap: u128,
) -> Result<S> {
    let mut total = S::zero();
    for a in enumerate_assignments::<S>(model.universe, model.dist, elements, cap)? {
        if a.prob == S::zero() {
            continue;
        }
        let types: TypeSet = a.types.iter().copied().collect();
        total = total + a.prob * f.value::<S>(&types)?;
    }
    Ok(total)
}

fn sorted_elements(path: &ProbePath) -> Vec<ElementId> {
    let mut v: Vec<ElementId> = path.iter().map(|&(e, _)| e).collect();
    v.sort();
    v
}

/// `alg(T, f) = E_{X,X'}[f(X'_{S(X)})]`: a virtual walk picks the path, the
/// path's elements are then probed for fresh independent types.
pub fn alg_exact<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    f: &Valuation,
    limits: ExactLimits,
) -> Result<S> {
    let mut memo: HashMap<Vec<ElementId>, S> = HashMap::new();
    let mut total = S::zero();
    for (path, prob) in leaf_paths::<S, P>(policy, model, limits)? {
        let key = sorted_elements(&path);
        let inner = match memo.get(&key) {
            Some(v) => v.clone(),
            None => {
                let v = expected_value_of_set::<S>(model, f, &key, limits.assignments)?;
                memo.insert(key, v.clone());
                v
            }
        };
        total = total + prob * inner;
    }
    Ok(total)
}

/// Greedy sequence for one `(X, X')` pair: path elements root to leaf, the
/// true type `X'_e` before the virtual type `X_e`, equal draws once.
pub fn interleaved_sequence(path: &ProbePath, true_types: &[TypeId]) -> Vec<TypeId> {
    let mut seq = Vec::with_capacity(2 * path.len());
    for (&(_, virtual_type), &true_type) in path.iter().zip(true_types) {
        seq.push(true_type);
        if virtual_type != true_type {
            seq.push(virtual_type);
        }
    }
    seq
}

/// `E_{X,X'}[greedy(X_S ∪ X'_S)]` for the unweighted rank of `family`.
pub fn greedy_interleaved_exact<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    family: &IndependenceOracle,
    limits: ExactLimits,
) -> Result<S> {
    let mut total = S::zero();
    for (path, prob) in leaf_paths::<S, P>(policy, model, limits)? {
        let elements: Vec<ElementId> = path.iter().map(|&(e, _)| e).collect();
        let mut inner = S::zero();
        for a in enumerate_assignments::<S>(model.universe, model.dist, &elements, limits.assignments)? {
            if a.prob == S::zero() {
                continue;
            }
            let seq = interleaved_sequence(&path, &a.types);
            let g = crate::families::greedy_rank(family, &seq);
            inner = inner + a.prob * S::from_count(g as u64);
        }
        total = total + prob * inner;
    }
    Ok(total)
}

/// Value of the online selector that, at each probed element, keeps the
/// true type `R` when it is a non-loop and then also contracts the virtual
/// type `I` when it is still a non-loop. Lower-bounds `alg` for rank
/// functions and upper-bounds half the interleaved greedy value.
pub fn online_selector_exact<S: Scalar, P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    family: &IndependenceOracle,
    limits: ExactLimits,
) -> Result<S> {
    fn go<'p, S: Scalar, P: AdaptivePolicy>(
        policy: &'p P,
        model: Model<'_>,
        cursor: P::Cursor<'p>,
        state: &ContractionState<'_>,
        budget: &mut NodeBudget,
    ) -> Result<S> {
        budget.take()?;
        let Some(e) = policy.next(&cursor) else {
            return Ok(S::zero());
        };
        let mut total = S::zero();
        for i in model.positive_types(e) {
            let child = policy.advance(&cursor, i);
            for r in model.positive_types(e) {
                let mut next = state.clone();
                let kept = next.try_contract(r);
                next.try_contract(i);
                let rest = go(policy, model, child.clone(), &next, budget)?;
                let gain = if kept { S::one() } else { S::zero() };
                let p = S::from_number(model.dist.prob(i)) * S::from_number(model.dist.prob(r));
                total = total + p * (gain + rest);
            }
        }
        Ok(total)
    }
    let mut budget = NodeBudget::new(limits.nodes);
    go(
        policy,
        model,
        policy.start(),
        &ContractionState::new(family),
        &mut budget,
    )
}

/// Best fixed probing sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct NonAdaptiveOptimum<S> {
    pub sequence: Vec<ElementId>,
    pub value: S,
    /// Number of feasible sequences examined.
    pub examined: u128,
}

/// Exhaustive optimum of `E_X[f(X_S)]` over feasible sequences of length at
/// most `max_len`. Ties go to the lexicographically smallest sequence.
pub fn best_nonadaptive_exact<S: Scalar>(
    model: Model<'_>,
    f: &Valuation,
    constraint: &Constraint,
    max_len: usize,
    sequence_cap: u128,
    assignment_cap: u128,
) -> Result<NonAdaptiveOptimum<S>> {
    struct Dfs<'a, S> {
        model: Model<'a>,
        f: &'a Valuation,
        constraint: &'a Constraint,
        max_len: usize,
        cap: u128,
        assignment_cap: u128,
        memo: HashMap<Vec<ElementId>, S>,
        best: NonAdaptiveOptimum<S>,
    }
    impl<S: Scalar> Dfs<'_, S> {
        fn visit(&mut self, seq: &mut Vec<ElementId>) -> Result<()> {
            self.best.examined += 1;
            if self.best.examined > self.cap {
                return Err(Error::ExactInfeasible {
                    what: "non-adaptive sequence enumeration (use the instance's closed form)",
                    needed: self.best.examined,
                    cap: self.cap,
                });
            }
            let mut key = seq.clone();
            key.sort();
            let value = match self.memo.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = expected_value_of_set::<S>(self.model, self.f, &key, self.assignment_cap)?;
                    self.memo.insert(key, v.clone());
                    v
                }
            };
            if value > self.best.value {
                self.best.value = value;
                self.best.sequence = seq.clone();
            }
            if seq.len() == self.max_len {
                return Ok(());
            }
            for e in self.model.universe.elements() {
                if self.constraint.may_extend(seq, e) {
                    seq.push(e);
                    let feasible = self.constraint.is_feasible(seq);
                    if feasible {
                        self.visit(seq)?;
                    }
                    seq.pop();
                }
            }
            Ok(())
        }
    }
    let mut dfs = Dfs {
        model,
        f,
        constraint,
        max_len,
        cap: sequence_cap,
        assignment_cap,
        memo: HashMap::new(),
        best: NonAdaptiveOptimum {
            sequence: Vec::new(),
            value: S::zero(),
            examined: 0,
        },
    };
    dfs.visit(&mut Vec::new())?;
    Ok(dfs.best)
}

/// Monte Carlo configuration. Results depend only on `(seed, trials)`.
#[derive(Clone, Copy, Debug)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig {
            trials,
            seed,
            threads: None,
        }
    }
}

/// Walks `policy`, drawing each probed element's type lazily from `rng`.
fn sample_path<P: AdaptivePolicy, R: rand::Rng>(policy: &P, model: Model<'_>, rng: &mut R) -> ProbePath {
    let mut cursor = policy.start();
    let mut path = Vec::new();
    while let Some(e) = policy.next(&cursor) {
        let t = model.dist.sample_type(model.universe, e, rng);
        path.push((e, t));
        cursor = policy.advance(&cursor, t);
    }
    path
}

fn run_trials(config: McConfig, trial: impl Fn(u64) -> Result<f64> + Sync + Send) -> Result<EvalReport> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one trial".into()));
    }
    let work = || {
        (0..config.trials)
            .into_par_iter()
            .map(&trial)
            .collect::<Result<Vec<f64>>>()
    };
    let samples = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    // sequential reduction keeps the estimate bit-identical across thread counts
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EvalReport {
        value: mean,
        exact: None,
        mode: Mode::MonteCarlo,
        trials: Some(config.trials),
        seed: Some(config.seed),
        stderr: Some((var / n).sqrt()),
        trace: Vec::new(),
    })
}

/// Trial `i` draws the virtual vector from stream `2i` and the true vector
/// from stream `2i + 1`.
fn virtual_rng(seed: u64, trial: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, 2 * trial, 0)
}

fn true_rng(seed: u64, trial: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, 2 * trial + 1, 0)
}

pub fn adap_mc<P: AdaptivePolicy>(policy: &P, model: Model<'_>, f: &Valuation, config: McConfig) -> Result<EvalReport> {
    run_trials(config, |i| {
        let path = sample_path(policy, model, &mut virtual_rng(config.seed, i));
        f.value::<f64>(&path.iter().map(|&(_, t)| t).collect())
    })
}

pub fn alg_mc<P: AdaptivePolicy>(policy: &P, model: Model<'_>, f: &Valuation, config: McConfig) -> Result<EvalReport> {
    run_trials(config, |i| {
        let path = sample_path(policy, model, &mut virtual_rng(config.seed, i));
        let mut rng = true_rng(config.seed, i);
        let types: TypeSet = path
            .iter()
            .map(|&(e, _)| model.dist.sample_type(model.universe, e, &mut rng))
            .collect();
        f.value::<f64>(&types)
    })
}

pub fn greedy_interleaved_mc<P: AdaptivePolicy>(
    policy: &P,
    model: Model<'_>,
    family: &IndependenceOracle,
    config: McConfig,
) -> Result<EvalReport> {
    run_trials(config, |i| {
        let path = sample_path(policy, model, &mut virtual_rng(config.seed, i));
        let mut rng = true_rng(config.seed, i);
        let truth: Vec<TypeId> = path
            .iter()
            .map(|&(e, _)| model.dist.sample_type(model.universe, e, &mut rng))
            .collect();
        Ok(crate::families::greedy_rank(family, &interleaved_sequence(&path, &truth)) as f64)
    })
}

/// Number of joint outcomes over the largest root-leaf path element set,
/// for deciding between exact and Monte Carlo evaluation.
pub fn max_path_assignments<P: AdaptivePolicy>(policy: &P, model: Model<'_>, limits: ExactLimits) -> Result<u128> {
    Ok(leaf_paths::<f64, P>(policy, model, limits)?
        .iter()
        .map(|(path, _)| assignment_count(model.universe, &sorted_elements(path)))
        .max()
        .unwrap_or(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::Number;
    use crate::strategy::DecisionTree;
    use crate::valuation::cardinality;

    fn bernoulli(p: Number, n: usize) -> (Universe, TypeDistribution) {
        let mut u = Universe::new();
        for i in 0..n {
            u.add_element(&format!("e{i}"), &["active", "inactive"]).unwrap();
        }
        let probs = (0..n).flat_map(|_| [p.clone(), p.complement()]).collect();
        let d = TypeDistribution::new(&u, probs).unwrap();
        (u, d)
    }

    fn active_types(u: &Universe) -> TypeSet {
        u.elements().map(|e| u.types_of(e)[0]).collect()
    }

    #[test]
    fn leaf_tree_is_worth_nothing() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 1);
        let f = cardinality(&active_types(&u));
        let m = Model::new(&u, &d);
        let leaf = DecisionTree::Leaf;
        let l = ExactLimits::default();
        assert_eq!(adap_exact::<f64, _>(&leaf, m, &f, l).unwrap(), 0.0);
        assert_eq!(alg_exact::<f64, _>(&leaf, m, &f, l).unwrap(), 0.0);
    }

    #[test]
    fn single_bernoulli_indicator() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 1);
        let f = cardinality(&active_types(&u));
        let m = Model::new(&u, &d);
        let t = DecisionTree::probe(&u, ElementId(0), vec![DecisionTree::Leaf, DecisionTree::Leaf]).unwrap();
        let l = ExactLimits::default();
        assert_eq!(adap_exact::<f64, _>(&t, m, &f, l).unwrap(), 0.5);
        assert_eq!(alg_exact::<f64, _>(&t, m, &f, l).unwrap(), 0.5);
        assert_eq!(adap_by_paths::<f64, _>(&t, m, &f, l).unwrap(), 0.5);
    }

    #[test]
    fn node_cap_is_enforced() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 3);
        let f = cardinality(&active_types(&u));
        let m = Model::new(&u, &d);
        let leaf = || DecisionTree::Leaf;
        let t2 = DecisionTree::probe(&u, ElementId(1), vec![leaf(), leaf()]).unwrap();
        let t = DecisionTree::probe(&u, ElementId(0), vec![t2.clone(), t2]).unwrap();
        let tight = ExactLimits {
            nodes: 3,
            assignments: 16,
        };
        assert!(matches!(
            adap_exact::<f64, _>(&t, m, &f, tight),
            Err(Error::ExactInfeasible { .. })
        ));
    }

    #[test]
    fn mc_on_deterministic_instance_is_exact() {
        let mut u = Universe::new();
        u.add_element("a", &["only"]).unwrap();
        u.add_element("b", &["only"]).unwrap();
        let d = TypeDistribution::uniform(&u);
        let f = cardinality(&u.all_types());
        let t = DecisionTree::probe(
            &u,
            ElementId(0),
            vec![DecisionTree::probe(&u, ElementId(1), vec![DecisionTree::Leaf]).unwrap()],
        )
        .unwrap();
        let m = Model::new(&u, &d);
        let r = adap_mc(&t, m, &f, McConfig::new(100, 3)).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.stderr, Some(0.0));
        let r = alg_mc(&t, m, &f, McConfig::new(100, 3)).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn mc_rejects_zero_trials() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 1);
        let f = cardinality(&active_types(&u));
        assert!(adap_mc(&DecisionTree::Leaf, Model::new(&u, &d), &f, McConfig::new(0, 1)).is_err());
    }

    #[test]
    fn trace_records_every_internal_node() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 2);
        let f = cardinality(&active_types(&u));
        let inner = DecisionTree::probe(&u, ElementId(1), vec![DecisionTree::Leaf, DecisionTree::Leaf]).unwrap();
        let t = DecisionTree::probe(&u, ElementId(0), vec![inner.clone(), inner]).unwrap();
        let r = adap_exact_traced(&t, Model::new(&u, &d), &f, ExactLimits::default()).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.trace.len(), 3);
        assert_eq!(r.trace.last().unwrap().path, vec![]);
        assert!(r.trace.iter().take(2).all(|n| n.value == 0.5));
    }

    #[test]
    fn interleaving_order() {
        let path = vec![(ElementId(0), TypeId(1)), (ElementId(1), TypeId(2))];
        assert_eq!(
            interleaved_sequence(&path, &[TypeId(0), TypeId(2)]),
            vec![TypeId(0), TypeId(1), TypeId(2)]
        );
    }

    #[test]
    fn best_nonadaptive_with_nothing_allowed() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 2);
        let f = cardinality(&active_types(&u));
        let best = best_nonadaptive_exact::<f64>(
            Model::new(&u, &d),
            &f,
            &Constraint::Cardinality { max: 0 },
            4,
            DEFAULT_SEQUENCE_CAP,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert!(best.sequence.is_empty());
        assert_eq!(best.value, 0.0);
        assert_eq!(best.examined, 1);
    }

    #[test]
    fn best_nonadaptive_tie_break_is_lexicographic() {
        let (u, d) = bernoulli(Number::ratio(1, 2), 3);
        let f = cardinality(&active_types(&u));
        let best = best_nonadaptive_exact::<f64>(
            Model::new(&u, &d),
            &f,
            &Constraint::Cardinality { max: 2 },
            2,
            DEFAULT_SEQUENCE_CAP,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert_eq!(best.sequence, vec![ElementId(0), ElementId(1)]);
        assert_eq!(best.value, 1.0);
        // 1 empty + 3 singletons + 6 ordered pairs
        assert_eq!(best.examined, 10);
        let capped = best_nonadaptive_exact::<f64>(
            Model::new(&u, &d),
            &f,
            &Constraint::Cardinality { max: 2 },
            2,
            5,
            DEFAULT_ENUMERATION_CAP,
        );
        assert!(matches!(capped, Err(Error::ExactInfeasible { .. })));
    }
}
