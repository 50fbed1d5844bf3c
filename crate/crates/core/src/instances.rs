//! Lower-bound constructions with their closed-form oracles, and seeded
//! random instances for the property suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::Model;
use crate::families::{intersect, make_chain_family, make_matching_family, make_partition_matroid, IndependenceOracle};
use crate::number::{Number, Scalar};
use crate::strategy::{constraint_dag_path, constraint_tree_fan, AdaptivePolicy, Constraint, DecisionTree};
use crate::universe::{ElementId, TypeDistribution, TypeId, Universe};
use crate::valuation::{coverage_valuation, partition_weighted_valuation, rank, weighted_rank, Valuation};

/// Largest tree-fan instance built explicitly; bigger ones use the formulas.
pub const TREE_LB_ELEMENT_CAP: u64 = 1 << 16;

/// Construction name and parameters, kept with a bundle for provenance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub construction: String,
    pub params: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(construction: &str, params: &[(&str, String)]) -> Self {
        Metadata {
            construction: construction.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceBundle {
    pub universe: Universe,
    pub dist: TypeDistribution,
    pub valuation: Valuation,
    pub constraint: Constraint,
    pub strategy: Option<Strategy>,
    pub metadata: Metadata,
}

impl InstanceBundle {
    pub fn model(&self) -> Model<'_> {
        Model::new(&self.universe, &self.dist)
    }

    /// Independence family underlying a rank valuation.
    pub fn family(&self) -> Option<&IndependenceOracle> {
        match &self.valuation {
            Valuation::Rank { family, .. } | Valuation::WeightedRank { family, .. } => Some(family),
            _ => None,
        }
    }
}

/// A decision tree, or one of the implicit policies of the lower-bound
/// constructions (whose explicit trees can be astronomically large).
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Tree(DecisionTree),
    ColumnWalk(ColumnWalk),
    FanDescent(FanDescent),
}

#[derive(Clone, Debug)]
pub enum StrategyCursor<'a> {
    Tree(&'a DecisionTree),
    Column(Option<(u32, u32)>),
    Fan(Option<FanCursor>),
}

impl AdaptivePolicy for Strategy {
    type Cursor<'a> = StrategyCursor<'a>;

    fn start(&self) -> StrategyCursor<'_> {
        match self {
            Strategy::Tree(t) => StrategyCursor::Tree(t.start()),
            Strategy::ColumnWalk(c) => StrategyCursor::Column(c.start()),
            Strategy::FanDescent(f) => StrategyCursor::Fan(f.start()),
        }
    }

    fn next(&self, cursor: &StrategyCursor<'_>) -> Option<ElementId> {
        match (self, cursor) {
            (Strategy::Tree(t), StrategyCursor::Tree(c)) => t.next(c),
            (Strategy::ColumnWalk(w), StrategyCursor::Column(c)) => w.next(c),
            (Strategy::FanDescent(f), StrategyCursor::Fan(c)) => f.next(c),
            _ => None,
        }
    }

    fn advance<'a>(&'a self, cursor: &StrategyCursor<'a>, observed: TypeId) -> StrategyCursor<'a> {
        match (self, cursor) {
            (Strategy::Tree(t), StrategyCursor::Tree(c)) => StrategyCursor::Tree(t.advance(c, observed)),
            (Strategy::ColumnWalk(w), StrategyCursor::Column(c)) => StrategyCursor::Column(w.advance(c, observed)),
            (Strategy::FanDescent(f), StrategyCursor::Fan(c)) => StrategyCursor::Fan(f.advance(c, observed)),
            _ => cursor.clone(),
        }
    }
}

fn check_eps(eps: &Number) -> Result<()> {
    let half = Number::ratio(1, 2);
    if eps.is_negative() || eps.is_zero() || *eps > half {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

/// Smallest `D` with `(1−ε)^D < ε²`. Logarithms locate `D`; exact powers
/// settle it only when the logarithms are too close to call.
pub fn column_count(eps: &Number) -> Result<u32> {
    check_eps(eps)?;
    let (lq, le) = (eps.complement().to_f64().ln(), eps.to_f64().ln());
    let guess = (2.0 * le / lq).floor().max(0.0) as u32;
    let below = |d: u32| eps.complement().pow(d).exact() < &(eps.exact() * eps.exact());
    let close = |d: u32| ((d as f64) * lq - 2.0 * le).abs() < 1e-9 * le.abs();
    let mut d = guess.saturating_sub(1);
    loop {
        let is_below = if close(d) { below(d) } else { (d as f64) * lq < 2.0 * le };
        if is_below {
            return Ok(d);
        }
        d += 1;
    }
}

/// The column walk: at `e(k,l)` stop when `k+l = D`, otherwise jump to the
/// next column head `e(k+l+1, 0)` on an active outcome and step down to
/// `e(k, l+1)` on an inactive one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnWalk {
    depth: u32,
    grid: Vec<Vec<ElementId>>,
    active: BTreeSet<TypeId>,
}

impl ColumnWalk {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn element(&self, k: u32, l: u32) -> ElementId {
        self.grid[k as usize][l as usize]
    }

    fn start(&self) -> Option<(u32, u32)> {
        Some((0, 0))
    }

    fn next(&self, cursor: &Option<(u32, u32)>) -> Option<ElementId> {
        cursor.map(|(k, l)| self.element(k, l))
    }

    fn advance(&self, cursor: &Option<(u32, u32)>, observed: TypeId) -> Option<(u32, u32)> {
        let (k, l) = (*cursor)?;
        if k + l == self.depth {
            None
        } else if self.active.contains(&observed) {
            Some((k + l + 1, 0))
        } else {
            Some((k, l + 1))
        }
    }
}

impl AdaptivePolicy for ColumnWalk {
    type Cursor<'a> = Option<(u32, u32)>;

    fn start(&self) -> Option<(u32, u32)> {
        ColumnWalk::start(self)
    }

    fn next(&self, cursor: &Option<(u32, u32)>) -> Option<ElementId> {
        ColumnWalk::next(self, cursor)
    }

    fn advance(&self, cursor: &Option<(u32, u32)>, observed: TypeId) -> Option<(u32, u32)> {
        ColumnWalk::advance(self, cursor, observed)
    }
}

/// Grid of Bernoulli(ε) elements `e(k,l)`, `k+l ≤ D`, whose active types in
/// column `k` are worth `(1−ε)^k` once; probes follow the grid's arcs.
pub fn gen_submodular_lb(eps: &Number) -> Result<InstanceBundle> {
    let depth = column_count(eps)?;
    let mut universe = Universe::new();
    let mut grid = Vec::new();
    for k in 0..=depth {
        let mut column = Vec::new();
        for l in 0..=depth - k {
            column.push(universe.add_element(&format!("e_{k}_{l}"), &["active", "inactive"])?);
        }
        grid.push(column);
    }
    let probs = universe
        .elements()
        .flat_map(|_| [eps.clone(), eps.complement()])
        .collect();
    let dist = TypeDistribution::new(&universe, probs)?;
    let q = eps.complement();
    let mut part_of = BTreeMap::new();
    let mut active = BTreeSet::new();
    let mut arcs = BTreeMap::new();
    for k in 0..=depth {
        for l in 0..=depth - k {
            let e = grid[k as usize][l as usize];
            let t = universe.types_of(e)[0];
            part_of.insert(t, k as usize);
            active.insert(t);
            if k + l < depth {
                arcs.insert(e, vec![grid[k as usize][l as usize + 1], grid[(k + l + 1) as usize][0]]);
            }
        }
    }
    let weights = (0..=depth).map(|k| q.pow(k)).collect();
    let valuation = partition_weighted_valuation(part_of, weights)?;
    let constraint = constraint_dag_path(arcs, grid[0][0]);
    let walk = ColumnWalk { depth, grid, active };
    Ok(InstanceBundle {
        universe,
        dist,
        valuation,
        constraint,
        strategy: Some(Strategy::ColumnWalk(walk)),
        metadata: Metadata::new("submodular_lb", &[("eps", eps.to_string()), ("D", depth.to_string())]),
    })
}

/// Powers `q^0 ..= q^n`.
fn powers<S: Scalar>(q: &S, n: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = S::one();
    for _ in 0..=n {
        out.push(cur.clone());
        cur = cur * q.clone();
    }
    out
}

/// Per-column adaptive values `adap(0..=D)` of the column walk:
/// `adap(k) = Σ_{i=0}^{D−k} (1−ε)^i ε [(1−ε)^k + adap(k+i+1)]`.
pub fn submodular_lb_adap_table<S: Scalar>(eps: &Number) -> Result<Vec<S>> {
    let d = column_count(eps)? as usize;
    let e = S::from_number(eps);
    let q = powers(&S::from_number(&eps.complement()), d + 1);
    let mut adap = vec![S::zero(); d + 2];
    for k in (0..=d).rev() {
        let mut total = S::zero();
        for i in 0..=d - k {
            total = total + q[i].clone() * e.clone() * (q[k].clone() + adap[k + i + 1].clone());
        }
        adap[k] = total;
    }
    adap.truncate(d + 1);
    Ok(adap)
}

pub fn submodular_lb_adap_recurrence<S: Scalar>(eps: &Number) -> Result<S> {
    Ok(submodular_lb_adap_table::<S>(eps)?.swap_remove(0))
}

/// Best non-adaptive value from column `k` on:
/// `alg(k) = max_{i=0..D−k} [(1−ε)^k (1−(1−ε)^{i+1}) + alg(k+i+1)]`.
pub fn submodular_lb_alg_table<S: Scalar>(eps: &Number) -> Result<Vec<S>> {
    let d = column_count(eps)? as usize;
    let q = powers(&S::from_number(&eps.complement()), d + 1);
    let mut alg = vec![S::zero(); d + 2];
    for k in (0..=d).rev() {
        let mut best: Option<S> = None;
        for i in 0..=d - k {
            let v = q[k].clone() * (S::one() - q[i + 1].clone()) + alg[k + i + 1].clone();
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        alg[k] = best.unwrap_or_else(S::zero);
    }
    alg.truncate(d + 1);
    Ok(alg)
}

pub fn submodular_lb_alg_opt<S: Scalar>(eps: &Number) -> Result<S> {
    Ok(submodular_lb_alg_table::<S>(eps)?.swap_remove(0))
}

/// Limits of the infinite construction as `D → ∞`: adaptive `2 − ε`,
/// non-adaptive `1`.
pub fn submodular_lb_limits(eps: &Number) -> (Number, Number) {
    (&Number::integer(2) - eps, Number::one())
}

/// Perfect `w`-ary tree of depth `k` with vertices numbered breadth-first:
/// the root is 0 and child `j` of `u` is `u·w + j + 1`. Edge elements are
/// numbered by their lower vertex minus one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectTree {
    pub arity: u64,
    pub depth: u32,
}

impl PerfectTree {
    pub fn new(arity: u64, depth: u32) -> Result<Self> {
        if arity == 0 || depth == 0 {
            return Err(Error::InvalidParameter(
                "tree arity and depth must be at least 1".into(),
            ));
        }
        Ok(PerfectTree { arity, depth })
    }

    /// `w + w² + … + w^k`, or `None` on overflow.
    pub fn num_edges(&self) -> Option<u64> {
        let mut total: u64 = 0;
        let mut level: u64 = 1;
        for _ in 0..self.depth {
            level = level.checked_mul(self.arity)?;
            total = total.checked_add(level)?;
        }
        Some(total)
    }

    pub fn child(&self, u: u64, j: u64) -> u64 {
        u * self.arity + j + 1
    }

    pub fn parent(&self, v: u64) -> Option<u64> {
        (v > 0).then(|| (v - 1) / self.arity)
    }

    pub fn vertex_depth(&self, mut v: u64) -> u32 {
        let mut d = 0;
        while let Some(p) = self.parent(v) {
            v = p;
            d += 1;
        }
        d
    }

    /// Child indices from the root down to `v`.
    pub fn label(&self, mut v: u64) -> Vec<u64> {
        let mut out = Vec::new();
        while let Some(p) = self.parent(v) {
            out.push((v - 1) % self.arity);
            v = p;
        }
        out.reverse();
        out
    }

    pub fn edge_element(&self, lower: u64) -> ElementId {
        ElementId((lower - 1) as u32)
    }

    pub fn lower_vertex(&self, e: ElementId) -> u64 {
        e.0 as u64 + 1
    }

    pub fn is_ancestor_or_self(&self, a: u64, mut v: u64) -> bool {
        loop {
            if v == a {
                return true;
            }
            match self.parent(v) {
                Some(p) if v > a => v = p,
                _ => return false,
            }
        }
    }
}

/// The tree-fan strategy: probe the child edges of the current vertex in
/// index order, descend below the first active one, or below child 0 when
/// none is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanDescent {
    tree: PerfectTree,
    active: BTreeSet<TypeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FanCursor {
    vertex: u64,
    depth: u32,
    index: u64,
}

impl FanDescent {
    pub fn tree(&self) -> PerfectTree {
        self.tree
    }

    fn start(&self) -> Option<FanCursor> {
        Some(FanCursor {
            vertex: 0,
            depth: 0,
            index: 0,
        })
    }

    fn next(&self, cursor: &Option<FanCursor>) -> Option<ElementId> {
        let c = (*cursor)?;
        (c.depth < self.tree.depth).then(|| self.tree.edge_element(self.tree.child(c.vertex, c.index)))
    }

    fn advance(&self, cursor: &Option<FanCursor>, observed: TypeId) -> Option<FanCursor> {
        let c = (*cursor)?;
        let descend = |j| FanCursor {
            vertex: self.tree.child(c.vertex, j),
            depth: c.depth + 1,
            index: 0,
        };
        Some(if self.active.contains(&observed) {
            descend(c.index)
        } else if c.index + 1 < self.tree.arity {
            FanCursor {
                index: c.index + 1,
                ..c
            }
        } else {
            descend(0)
        })
    }
}

impl AdaptivePolicy for FanDescent {
    type Cursor<'a> = Option<FanCursor>;

    fn start(&self) -> Option<FanCursor> {
        FanDescent::start(self)
    }

    fn next(&self, cursor: &Option<FanCursor>) -> Option<ElementId> {
        FanDescent::next(self, cursor)
    }

    fn advance(&self, cursor: &Option<FanCursor>, observed: TypeId) -> Option<FanCursor> {
        FanDescent::advance(self, cursor, observed)
    }
}

fn tree_universe(tree: PerfectTree, p: &Number) -> Result<(Universe, TypeDistribution)> {
    let n = tree
        .num_edges()
        .filter(|&n| n <= TREE_LB_ELEMENT_CAP)
        .ok_or(Error::ExactInfeasible {
            what: "tree instance representation (use the closed-form formulas)",
            needed: tree.num_edges().map_or(u128::MAX, u128::from),
            cap: TREE_LB_ELEMENT_CAP as u128,
        })?;
    let mut universe = Universe::new();
    for v in 1..=n {
        let parent = tree.parent(v).unwrap_or(0);
        universe.add_element(&format!("edge_{parent}_{v}"), &["active", "inactive"])?;
    }
    let probs = universe.elements().flat_map(|_| [p.clone(), p.complement()]).collect();
    let dist = TypeDistribution::new(&universe, probs)?;
    Ok((universe, dist))
}

/// Edges of a perfect `w`-ary depth-`k` tree, each Bernoulli(`p`); the value
/// of a set is the largest number of its active edges on one root-leaf
/// path, or their largest per-depth weight sum when `weights` is given.
pub fn gen_tree_lb(k: u32, w: u64, p: &Number, weights: Option<&[Number]>) -> Result<InstanceBundle> {
    if p.is_negative() || p.is_zero() || *p > Number::one() {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
    }
    let tree = PerfectTree::new(w, k)?;
    if let Some(ws) = weights {
        if ws.len() != k as usize {
            return Err(Error::InvalidParameter(format!(
                "expected {k} per-depth weights, got {}",
                ws.len()
            )));
        }
    }
    let (universe, dist) = tree_universe(tree, p)?;
    let active_of = |e: ElementId| universe.types_of(e)[0];
    let mut parent = BTreeMap::new();
    let mut edges = Vec::new();
    for e in universe.elements() {
        let v = tree.lower_vertex(e);
        let up = tree.parent(v).expect("edge has an upper vertex");
        edges.push((up as u32, v as u32));
        parent.insert(active_of(e), tree.parent(up).map(|_| active_of(tree.edge_element(up))));
    }
    let family = make_chain_family(parent)?;
    let valuation = match weights {
        None => rank(family),
        Some(ws) => {
            let per_type = universe
                .elements()
                .map(|e| {
                    (
                        active_of(e),
                        ws[tree.vertex_depth(tree.lower_vertex(e)) as usize - 1].clone(),
                    )
                })
                .collect();
            weighted_rank(family, per_type)?
        }
    };
    let constraint = constraint_tree_fan(edges, 0)?;
    let active = universe.elements().map(active_of).collect();
    let mut params = vec![("k", k.to_string()), ("w", w.to_string()), ("p", p.to_string())];
    if let Some(ws) = weights {
        params.push((
            "weights",
            ws.iter().map(Number::to_string).collect::<Vec<_>>().join(","),
        ));
    }
    Ok(InstanceBundle {
        universe,
        dist,
        valuation,
        constraint,
        strategy: Some(Strategy::FanDescent(FanDescent { tree, active })),
        metadata: Metadata::new("tree_lb", &params),
    })
}

fn pow_scalar<S: Scalar>(x: &S, mut n: u64) -> S {
    let mut base = x.clone();
    let mut acc = S::one();
    while n > 0 {
        if n & 1 == 1 {
            acc = acc * base.clone();
        }
        base = base.clone() * base;
        n >>= 1;
    }
    acc
}

/// Adaptive value of the tree-fan strategy: `k (1 − (1−p)^w)`.
pub fn tree_lb_adaptive_formula<S: Scalar>(k: u32, w: u64, p: &Number) -> S {
    S::from_count(k as u64) * (S::one() - pow_scalar(&S::from_number(&p.complement()), w))
}

/// Upper bound `1 + k p` on every non-adaptive strategy.
pub fn tree_lb_nonadaptive_bound<S: Scalar>(k: u32, p: &Number) -> S {
    S::one() + S::from_count(k as u64) * S::from_number(p)
}

pub fn is_prime(k: u64) -> bool {
    k >= 2 && (2..).take_while(|d| d * d <= k).all(|d| !k.is_multiple_of(d))
}

/// `k²` simple partition matroids whose intersection is the chain family of
/// the `k`-ary depth-`k` tree.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeEncoding {
    pub k: u32,
    pub tree: PerfectTree,
    /// `((i, j), M_{i,j})` over the active types of the tree edges.
    pub matroids: Vec<((u32, u32), IndependenceOracle)>,
    /// Label of the lower vertex of each edge element.
    pub labels: BTreeMap<ElementId, Vec<u64>>,
    /// Active type of each edge element, indexed by element.
    pub active: Vec<TypeId>,
}

impl PrimeEncoding {
    pub fn intersection(&self) -> Result<IndependenceOracle> {
        intersect(self.matroids.iter().map(|(_, m)| m.clone()).collect())
    }

    /// The lower vertices of `a` and `b` are ancestor-related.
    pub fn ancestor_related(&self, a: ElementId, b: ElementId) -> bool {
        let (u, v) = (self.tree.lower_vertex(a), self.tree.lower_vertex(b));
        self.tree.is_ancestor_or_self(u, v) || self.tree.is_ancestor_or_self(v, u)
    }

    /// All edges of `set` lie on one root-leaf path.
    pub fn on_one_path(&self, set: &[ElementId]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| self.ancestor_related(a, b)))
    }
}

/// Builds `M_{i,j}` for `i ∈ 1..=k`, `j ∈ 0..k`: the edge above `v` with
/// depth `d_v ≥ i` lies in big part `(L_v(i)·j + d_v) mod k`, shallower
/// edges are singleton parts. Element and type ids match
/// `gen_tree_lb(k, k, ·)`.
pub fn gen_prime_matroid_encoding(k: u32) -> Result<PrimeEncoding> {
    if !is_prime(k as u64) {
        return Err(Error::InvalidParameter(format!("k = {k} is not prime")));
    }
    let tree = PerfectTree::new(k as u64, k)?;
    let (universe, _) = tree_universe(tree, &Number::ratio(1, 2))?;
    let active: Vec<TypeId> = universe.elements().map(|e| universe.types_of(e)[0]).collect();
    let labels: BTreeMap<ElementId, Vec<u64>> = universe
        .elements()
        .map(|e| (e, tree.label(tree.lower_vertex(e))))
        .collect();
    let kk = k as u64;
    let mut matroids = Vec::new();
    for i in 1..=k {
        for j in 0..k {
            let mut parts = BTreeMap::new();
            let mut capacity = vec![1; k as usize];
            for e in universe.elements() {
                let label = &labels[&e];
                let d = label.len() as u64;
                let part = if d >= i as u64 {
                    ((label[i as usize - 1] * j as u64 + d) % kk) as usize
                } else {
                    capacity.push(1);
                    capacity.len() - 1
                };
                parts.insert(active[e.index()], part);
            }
            matroids.push(((i, j), make_partition_matroid(parts, capacity)?));
        }
    }
    Ok(PrimeEncoding {
        k,
        tree,
        matroids,
        labels,
        active,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RandomValuationKind {
    Coverage,
    PartitionWeighted,
    /// Rank of an intersection of `k` random partition matroids.
    PartitionIntersectionRank {
        k: usize,
    },
    MatchingRank,
    /// Weighted rank of an intersection of `k` partition matroids, integer
    /// weights in `1..=max_weight`.
    WeightedPartitionIntersection {
        k: usize,
        max_weight: u64,
    },
    WeightedMatching {
        max_weight: u64,
    },
}

impl RandomValuationKind {
    /// Extendibility parameter of the underlying family, if any.
    pub fn extendibility(&self) -> Option<usize> {
        match self {
            RandomValuationKind::PartitionIntersectionRank { k }
            | RandomValuationKind::WeightedPartitionIntersection { k, .. } => Some(*k),
            RandomValuationKind::MatchingRank | RandomValuationKind::WeightedMatching { .. } => Some(2),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomConstraintKind {
    Unconstrained,
    Budget,
    Cardinality,
    DagPath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub max_elements: usize,
    pub max_types: usize,
    pub max_depth: usize,
    pub valuations: Vec<RandomValuationKind>,
    pub constraints: Vec<RandomConstraintKind>,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_elements: 8,
            max_types: 3,
            max_depth: 4,
            valuations: vec![RandomValuationKind::Coverage, RandomValuationKind::PartitionWeighted],
            constraints: vec![
                RandomConstraintKind::Unconstrained,
                RandomConstraintKind::Budget,
                RandomConstraintKind::Cardinality,
                RandomConstraintKind::DagPath,
            ],
        }
    }
}

impl RandomParams {
    pub fn with_valuations(valuations: Vec<RandomValuationKind>) -> Self {
        RandomParams {
            valuations,
            ..RandomParams::default()
        }
    }
}

/// Small seeded instance with a random feasible decision tree.
pub fn gen_random_instance(params: &RandomParams, seed: u64) -> Result<InstanceBundle> {
    if params.max_elements == 0 || params.max_types == 0 || params.max_elements > 12 || params.max_depth > 6 {
        return Err(Error::InvalidParameter(
            "random instances need 1..=12 elements, at least one type and depth at most 6".into(),
        ));
    }
    if params.valuations.is_empty() || params.constraints.is_empty() {
        return Err(Error::InvalidParameter(
            "no valuation or constraint kinds to draw from".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=params.max_elements);
    let mut universe = Universe::new();
    let mut probs = Vec::new();
    for i in 0..n {
        let m = rng.random_range(1..=params.max_types);
        let names: Vec<String> = (0..m).map(|j| format!("t{j}")).collect();
        universe.add_element(&format!("e{i}"), &names)?;
        let mut raw: Vec<i64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0
                } else {
                    rng.random_range(1..=4)
                }
            })
            .collect();
        if raw.iter().all(|&r| r == 0) {
            raw[0] = 1;
        }
        let total: i64 = raw.iter().sum();
        probs.extend(raw.iter().map(|&r| Number::ratio(r, total)));
    }
    let dist = TypeDistribution::new(&universe, probs)?;
    let kind = *params.valuations.choose(&mut rng).expect("non-empty");
    let valuation = random_valuation(&universe, kind, &mut rng)?;
    let ckind = *params.constraints.choose(&mut rng).expect("non-empty");
    let constraint = random_constraint(&universe, ckind, &mut rng);
    let tree = random_tree(&universe, &constraint, &mut Vec::new(), params.max_depth, &mut rng)?;
    Ok(InstanceBundle {
        universe,
        dist,
        valuation,
        constraint,
        strategy: Some(Strategy::Tree(tree)),
        metadata: Metadata::new(
            "random",
            &[
                ("seed", seed.to_string()),
                ("valuation", serde_json::to_string(&kind).expect("serializable")),
                ("constraint", serde_json::to_string(&ckind).expect("serializable")),
            ],
        ),
    })
}

fn random_partition_matroid(types: &[TypeId], rng: &mut ChaCha8Rng) -> Result<IndependenceOracle> {
    let nparts = rng.random_range(1..=types.len().max(1));
    let capacity = (0..nparts).map(|_| rng.random_range(1..=2)).collect();
    let parts = types.iter().map(|&t| (t, rng.random_range(0..nparts))).collect();
    make_partition_matroid(parts, capacity)
}

fn random_matching(types: &[TypeId], rng: &mut ChaCha8Rng) -> Result<IndependenceOracle> {
    let vertices = rng.random_range(3..=5u32);
    let edges = types
        .iter()
        .map(|&t| {
            let a = rng.random_range(0..vertices);
            let b = (a + rng.random_range(1..vertices)) % vertices;
            (t, (a.min(b), a.max(b)))
        })
        .collect();
    make_matching_family(edges)
}

fn random_partition_intersection(types: &[TypeId], k: usize, rng: &mut ChaCha8Rng) -> Result<IndependenceOracle> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one matroid".into()));
    }
    let members = (0..k)
        .map(|_| random_partition_matroid(types, rng))
        .collect::<Result<Vec<_>>>()?;
    if k == 1 {
        Ok(members.into_iter().next().expect("one member"))
    } else {
        intersect(members)
    }
}

/// Some types are left out of the family so that loops occur.
fn random_ground(universe: &Universe, rng: &mut ChaCha8Rng) -> Vec<TypeId> {
    universe.all_types().iter().filter(|_| rng.random_bool(0.85)).collect()
}

fn random_weights(types: &[TypeId], max_weight: u64, rng: &mut ChaCha8Rng) -> BTreeMap<TypeId, Number> {
    types
        .iter()
        .map(|&t| (t, Number::integer(rng.random_range(1..=max_weight.max(1)) as i64)))
        .collect()
}

fn random_valuation(universe: &Universe, kind: RandomValuationKind, rng: &mut ChaCha8Rng) -> Result<Valuation> {
    Ok(match kind {
        RandomValuationKind::Coverage => {
            let items = rng.random_range(2..=6u32);
            let cover = universe
                .all_types()
                .iter()
                .map(|t| {
                    let size = rng.random_range(0..=3);
                    (t, (0..size).map(|_| rng.random_range(0..items)).collect())
                })
                .collect();
            coverage_valuation(cover)
        }
        RandomValuationKind::PartitionWeighted => {
            let nparts = rng.random_range(1..=4);
            let weights = (0..nparts)
                .map(|_| Number::ratio(rng.random_range(1..=8), rng.random_range(1..=4)))
                .collect();
            let part_of = random_ground(universe, rng)
                .into_iter()
                .map(|t| (t, rng.random_range(0..nparts)))
                .collect();
            partition_weighted_valuation(part_of, weights)?
        }
        RandomValuationKind::PartitionIntersectionRank { k } => {
            let ground = random_ground(universe, rng);
            rank(random_partition_intersection(&ground, k, rng)?)
        }
        RandomValuationKind::MatchingRank => {
            let ground = random_ground(universe, rng);
            rank(random_matching(&ground, rng)?)
        }
        RandomValuationKind::WeightedPartitionIntersection { k, max_weight } => {
            let ground = random_ground(universe, rng);
            let family = random_partition_intersection(&ground, k, rng)?;
            weighted_rank(family, random_weights(&ground, max_weight, rng))?
        }
        RandomValuationKind::WeightedMatching { max_weight } => {
            let ground = random_ground(universe, rng);
            let family = random_matching(&ground, rng)?;
            weighted_rank(family, random_weights(&ground, max_weight, rng))?
        }
    })
}

fn random_constraint(universe: &Universe, kind: RandomConstraintKind, rng: &mut ChaCha8Rng) -> Constraint {
    let n = universe.len();
    match kind {
        RandomConstraintKind::Unconstrained => Constraint::Unconstrained,
        RandomConstraintKind::Cardinality => Constraint::Cardinality {
            max: rng.random_range(1..=n.max(1)),
        },
        RandomConstraintKind::Budget => Constraint::Budget {
            cost: (0..n).map(|_| Number::integer(rng.random_range(1..=3))).collect(),
            budget: Number::integer(rng.random_range(2..=6)),
        },
        RandomConstraintKind::DagPath => {
            let mut order: Vec<ElementId> = universe.elements().collect();
            order.shuffle(rng);
            let mut arcs = BTreeMap::new();
            for (i, &a) in order.iter().enumerate() {
                let targets: Vec<ElementId> = order[i + 1..]
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(0.5))
                    .collect();
                if !targets.is_empty() {
                    arcs.insert(a, targets);
                }
            }
            constraint_dag_path(arcs, order[0])
        }
    }
}

fn random_tree(
    universe: &Universe,
    constraint: &Constraint,
    seq: &mut Vec<ElementId>,
    depth_left: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionTree> {
    if depth_left == 0 || (!seq.is_empty() && rng.random_bool(0.2)) {
        return Ok(DecisionTree::Leaf);
    }
    let candidates: Vec<ElementId> = universe
        .elements()
        .filter(|&e| {
            if !constraint.may_extend(seq, e) {
                return false;
            }
            seq.push(e);
            let ok = constraint.is_feasible(seq);
            seq.pop();
            ok
        })
        .collect();
    let Some(&e) = candidates.choose(rng) else {
        return Ok(DecisionTree::Leaf);
    };
    seq.push(e);
    let children = (0..universe.types_of(e).len())
        .map(|_| random_tree(universe, constraint, seq, depth_left - 1, rng))
        .collect::<Result<Vec<_>>>()?;
    seq.pop();
    DecisionTree::probe(universe, e, children)
}
