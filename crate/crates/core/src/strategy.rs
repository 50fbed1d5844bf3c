//! Adaptive strategies (decision trees and implicit policies), prefix-closed
//! probing constraints, feasibility, and random-walk paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number::Number;
use crate::universe::{ElementId, TypeId, TypeVector, Universe};

/// An adaptive probing policy, navigated by a cursor: `next` names the
/// element to probe (or `None` to stop) and `advance` moves past the
/// observed type of that element.
pub trait AdaptivePolicy: Sync {
    type Cursor<'a>: Clone + Send
    where
        Self: 'a;

    fn start(&self) -> Self::Cursor<'_>;
    fn next(&self, cursor: &Self::Cursor<'_>) -> Option<ElementId>;
    fn advance<'a>(&'a self, cursor: &Self::Cursor<'a>, observed: TypeId) -> Self::Cursor<'a>;
}

/// Explicit decision tree. Every internal node has one child per type of
/// its element, and no element repeats on a root-leaf path.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionTree {
    Leaf,
    Probe {
        element: ElementId,
        /// One child per type of `element`, in the universe's type order.
        children: Vec<(TypeId, DecisionTree)>,
    },
}

impl DecisionTree {
    pub fn leaf() -> Self {
        DecisionTree::Leaf
    }

    /// Internal node probing `element`; `children[i]` follows its `i`-th type.
    pub fn probe(universe: &Universe, element: ElementId, children: Vec<DecisionTree>) -> Result<Self> {
        if !universe.contains_element(element) {
            return Err(Error::InvalidStrategy(format!("unknown element {element:?}")));
        }
        let types = universe.types_of(element);
        if children.len() != types.len() {
            return Err(Error::InvalidStrategy(format!(
                "element `{}` has {} types but {} children",
                universe.element_name(element),
                types.len(),
                children.len()
            )));
        }
        if children.iter().any(|c| c.contains_element(element)) {
            return Err(Error::InvalidStrategy(format!(
                "element `{}` repeats on a root-leaf path",
                universe.element_name(element)
            )));
        }
        Ok(DecisionTree::Probe {
            element,
            children: types.iter().copied().zip(children).collect(),
        })
    }

    fn contains_element(&self, e: ElementId) -> bool {
        match self {
            DecisionTree::Leaf => false,
            DecisionTree::Probe { element, children } => {
                *element == e || children.iter().any(|(_, c)| c.contains_element(e))
            }
        }
    }

    pub fn child(&self, t: TypeId) -> Option<&DecisionTree> {
        match self {
            DecisionTree::Leaf => None,
            DecisionTree::Probe { children, .. } => children.iter().find(|(ty, _)| *ty == t).map(|(_, c)| c),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            DecisionTree::Leaf => 1,
            DecisionTree::Probe { children, .. } => 1 + children.iter().map(|(_, c)| c.node_count()).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf => 0,
            DecisionTree::Probe { children, .. } => 1 + children.iter().map(|(_, c)| c.depth()).max().unwrap_or(0),
        }
    }

    /// Re-checks the structural invariants against `universe`.
    pub fn validate(&self, universe: &Universe) -> Result<()> {
        fn go(node: &DecisionTree, universe: &Universe, seen: &mut Vec<ElementId>) -> Result<()> {
            let DecisionTree::Probe { element, children } = node else {
                return Ok(());
            };
            if !universe.contains_element(*element) {
                return Err(Error::InvalidStrategy(format!("unknown element {element:?}")));
            }
            if seen.contains(element) {
                return Err(Error::InvalidStrategy(format!(
                    "element `{}` repeats on a root-leaf path",
                    universe.element_name(*element)
                )));
            }
            let types: Vec<TypeId> = children.iter().map(|(t, _)| *t).collect();
            if types != universe.types_of(*element) {
                return Err(Error::InvalidStrategy(format!(
                    "children of `{}` do not match its types",
                    universe.element_name(*element)
                )));
            }
            seen.push(*element);
            for (_, c) in children {
                go(c, universe, seen)?;
            }
            seen.pop();
            Ok(())
        }
        go(self, universe, &mut Vec::new())
    }
}

impl AdaptivePolicy for DecisionTree {
    type Cursor<'a> = &'a DecisionTree;

    fn start(&self) -> &DecisionTree {
        self
    }

    fn next(&self, cursor: &&DecisionTree) -> Option<ElementId> {
        match cursor {
            DecisionTree::Leaf => None,
            DecisionTree::Probe { element, .. } => Some(*element),
        }
    }

    fn advance<'a>(&'a self, cursor: &&'a DecisionTree, observed: TypeId) -> &'a DecisionTree {
        cursor
            .child(observed)
            .expect("observed type belongs to the probed element")
    }
}

/// Root-to-leaf sequence of `(element, observed type)`.
pub type ProbePath = Vec<(ElementId, TypeId)>;

/// Follows the arcs chosen by `vector` from the root to a leaf.
pub fn random_walk_path<P: AdaptivePolicy>(policy: &P, vector: &TypeVector) -> Result<ProbePath> {
    let mut cursor = policy.start();
    let mut path = Vec::new();
    while let Some(e) = policy.next(&cursor) {
        let t = vector.get(e).ok_or(Error::Unassigned(e.0))?;
        path.push((e, t));
        cursor = policy.advance(&cursor, t);
    }
    Ok(path)
}

/// Builds the explicit tree of `policy`, refusing more than `max_nodes` nodes.
pub fn materialize<P: AdaptivePolicy>(policy: &P, universe: &Universe, max_nodes: usize) -> Result<DecisionTree> {
    fn go<'a, P: AdaptivePolicy>(
        policy: &'a P,
        universe: &Universe,
        cursor: P::Cursor<'a>,
        budget: &mut usize,
    ) -> Result<DecisionTree> {
        if *budget == 0 {
            return Err(Error::ExactInfeasible {
                what: "tree materialization",
                needed: u128::MAX,
                cap: 0,
            });
        }
        *budget -= 1;
        let Some(e) = policy.next(&cursor) else {
            return Ok(DecisionTree::Leaf);
        };
        let children = universe
            .types_of(e)
            .iter()
            .map(|&t| go(policy, universe, policy.advance(&cursor, t), budget))
            .collect::<Result<Vec<_>>>()?;
        DecisionTree::probe(universe, e, children)
    }
    let mut budget = max_nodes;
    go(policy, universe, policy.start(), &mut budget).map_err(|err| match err {
        Error::ExactInfeasible { what, .. } => Error::ExactInfeasible {
            what,
            needed: max_nodes as u128 + 1,
            cap: max_nodes as u128,
        },
        other => other,
    })
}

/// Prefix-closed family of allowed probing sequences. Feasibility of a
/// sequence means every step passed [`Constraint::may_extend`], except for
/// [`Constraint::Table`] whose membership is read directly from the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    Unconstrained,
    Cardinality {
        max: usize,
    },
    Budget {
        cost: Vec<Number>,
        budget: Number,
    },
    DagPath {
        arcs: BTreeMap<ElementId, Vec<ElementId>>,
        start: ElementId,
    },
    TreeFan(TreeFan),
    /// Explicit list of allowed sequences, as read from an external file.
    Table {
        sequences: BTreeSet<Vec<ElementId>>,
    },
}

/// Edges of a rooted tree as probeable elements; a probed set must keep at
/// least one endpoint of every edge on some common root-leaf path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeFanData", into = "TreeFanData")]
pub struct TreeFan {
    /// `(parent vertex, child vertex)` of element `i`.
    edges: Vec<(u32, u32)>,
    root: u32,
    vertex_parent: BTreeMap<u32, u32>,
}

impl TreeFan {
    pub fn new(edges: Vec<(u32, u32)>, root: u32) -> Result<Self> {
        let mut vertex_parent = BTreeMap::new();
        for &(p, c) in &edges {
            if c == root || vertex_parent.insert(c, p).is_some() {
                return Err(Error::InvalidConstraint(format!(
                    "vertex {c} has two parents or is the root"
                )));
            }
        }
        let fan = TreeFan {
            edges,
            root,
            vertex_parent,
        };
        for &(p, c) in &fan.edges {
            let mut v = p;
            let mut steps = 0;
            while v != fan.root {
                v = *fan
                    .vertex_parent
                    .get(&v)
                    .ok_or_else(|| Error::InvalidConstraint(format!("edge ({p},{c}) is not connected to the root")))?;
                steps += 1;
                if steps > fan.edges.len() {
                    return Err(Error::InvalidConstraint("cycle in tree edges".into()));
                }
            }
        }
        Ok(fan)
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    fn is_ancestor_or_self(&self, a: u32, mut v: u32) -> bool {
        loop {
            if v == a {
                return true;
            }
            match self.vertex_parent.get(&v) {
                Some(&p) => v = p,
                None => return false,
            }
        }
    }

    fn depth(&self, mut v: u32) -> usize {
        let mut d = 0;
        while let Some(&p) = self.vertex_parent.get(&v) {
            v = p;
            d += 1;
        }
        d
    }

    /// Compatible leaves are those below the deepest upper endpoint; the set
    /// is non-empty iff every upper endpoint lies on the root path of that
    /// deepest one.
    fn compatible(&self, probed: impl Iterator<Item = ElementId> + Clone) -> bool {
        let mut uppers = Vec::new();
        for e in probed {
            match self.edges.get(e.index()) {
                Some(&(p, _)) => uppers.push(p),
                None => return false,
            }
        }
        let Some(&deepest) = uppers.iter().max_by_key(|&&v| self.depth(v)) else {
            return true;
        };
        uppers.iter().all(|&v| self.is_ancestor_or_self(v, deepest))
    }
}

#[derive(Serialize, Deserialize)]
struct TreeFanData {
    edges: Vec<(u32, u32)>,
    root: u32,
}

impl TryFrom<TreeFanData> for TreeFan {
    type Error = Error;
    fn try_from(data: TreeFanData) -> Result<Self> {
        TreeFan::new(data.edges, data.root)
    }
}

impl From<TreeFan> for TreeFanData {
    fn from(fan: TreeFan) -> Self {
        TreeFanData {
            edges: fan.edges,
            root: fan.root,
        }
    }
}

pub fn constraint_budget(cost: Vec<Number>, budget: Number) -> Result<Constraint> {
    if cost.iter().any(Number::is_negative) {
        return Err(Error::InvalidConstraint("negative cost".into()));
    }
    Ok(Constraint::Budget { cost, budget })
}

pub fn constraint_dag_path(arcs: BTreeMap<ElementId, Vec<ElementId>>, start: ElementId) -> Constraint {
    Constraint::DagPath { arcs, start }
}

pub fn constraint_tree_fan(edges: Vec<(u32, u32)>, root: u32) -> Result<Constraint> {
    Ok(Constraint::TreeFan(TreeFan::new(edges, root)?))
}

impl Constraint {
    /// Whether `seq` followed by `next` is allowed, given that `seq` is.
    pub fn may_extend(&self, seq: &[ElementId], next: ElementId) -> bool {
        if seq.contains(&next) {
            return false;
        }
        match self {
            Constraint::Unconstrained => true,
            Constraint::Cardinality { max } => seq.len() < *max,
            Constraint::Budget { cost, budget } => {
                let Some(c) = cost.get(next.index()) else { return false };
                let mut total = c.clone();
                for e in seq {
                    match cost.get(e.index()) {
                        Some(ce) => total = &total + ce,
                        None => return false,
                    }
                }
                total <= *budget
            }
            Constraint::DagPath { arcs, start } => match seq.last() {
                None => next == *start,
                Some(last) => arcs.get(last).is_some_and(|out| out.contains(&next)),
            },
            Constraint::TreeFan(fan) => fan.compatible(seq.iter().copied().chain(std::iter::once(next))),
            Constraint::Table { sequences } => {
                let mut s = seq.to_vec();
                s.push(next);
                sequences.contains(&s)
            }
        }
    }

    pub fn is_feasible(&self, seq: &[ElementId]) -> bool {
        if seq.is_empty() {
            return true;
        }
        match self {
            Constraint::Table { sequences } => sequences.contains(seq),
            _ => (0..seq.len()).all(|i| self.may_extend(&seq[..i], seq[i])),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::Unconstrained => "unconstrained",
            Constraint::Cardinality { .. } => "cardinality",
            Constraint::Budget { .. } => "budget",
            Constraint::DagPath { .. } => "dag_path",
            Constraint::TreeFan(_) => "tree_fan",
            Constraint::Table { .. } => "table",
        }
    }
}

/// Outcome of a feasibility check, with the first violating element
/// sequence when infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<Vec<ElementId>>,
}

/// Checks every root-leaf path of `policy` against `constraint`, exploring
/// at most `max_nodes` nodes.
pub fn check_policy_feasible<P: AdaptivePolicy>(
    policy: &P,
    universe: &Universe,
    constraint: &Constraint,
    max_nodes: usize,
) -> Result<Feasibility> {
    fn go<'a, P: AdaptivePolicy>(
        policy: &'a P,
        universe: &Universe,
        constraint: &Constraint,
        cursor: P::Cursor<'a>,
        prefix: &mut Vec<ElementId>,
        budget: &mut usize,
    ) -> Result<Option<Vec<ElementId>>> {
        if *budget == 0 {
            return Err(Error::ExactInfeasible {
                what: "feasibility check",
                needed: u128::MAX,
                cap: 0,
            });
        }
        *budget -= 1;
        let Some(e) = policy.next(&cursor) else {
            return Ok(None);
        };
        let ok = constraint.may_extend(prefix, e);
        prefix.push(e);
        if !ok {
            return Ok(Some(prefix.clone()));
        }
        for &t in universe.types_of(e) {
            if let Some(w) = go(policy, universe, constraint, policy.advance(&cursor, t), prefix, budget)? {
                return Ok(Some(w));
            }
        }
        prefix.pop();
        Ok(None)
    }
    let mut budget = max_nodes;
    let witness = go(
        policy,
        universe,
        constraint,
        policy.start(),
        &mut Vec::new(),
        &mut budget,
    )?;
    Ok(Feasibility {
        feasible: witness.is_none(),
        witness,
    })
}

/// Explicit-tree feasibility: every root-leaf element sequence is allowed.
pub fn check_tree_feasible(tree: &DecisionTree, universe: &Universe, constraint: &Constraint) -> Feasibility {
    check_policy_feasible(tree, universe, constraint, usize::MAX).expect("explicit trees are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::Number;

    fn bernoulli_universe(n: usize) -> Universe {
        let mut u = Universe::new();
        for i in 0..n {
            u.add_element(&format!("e{i}"), &["active", "inactive"]).unwrap();
        }
        u
    }

    fn chain_tree(u: &Universe, elems: &[u32]) -> DecisionTree {
        match elems.split_first() {
            None => DecisionTree::Leaf,
            Some((&e, rest)) => {
                let sub = chain_tree(u, rest);
                DecisionTree::probe(u, ElementId(e), vec![sub.clone(), sub]).unwrap()
            }
        }
    }

    #[test]
    fn probe_rejects_wrong_arity_and_repeats() {
        let u = bernoulli_universe(2);
        assert!(DecisionTree::probe(&u, ElementId(0), vec![DecisionTree::Leaf]).is_err());
        let inner = DecisionTree::probe(&u, ElementId(0), vec![DecisionTree::Leaf, DecisionTree::Leaf]).unwrap();
        assert!(DecisionTree::probe(&u, ElementId(0), vec![inner.clone(), DecisionTree::Leaf]).is_err());
        assert!(DecisionTree::probe(&u, ElementId(1), vec![inner, DecisionTree::Leaf]).is_ok());
        assert!(DecisionTree::probe(&u, ElementId(5), vec![]).is_err());
    }

    #[test]
    fn leaf_is_feasible_and_has_empty_path() {
        let u = bernoulli_universe(1);
        let leaf = DecisionTree::Leaf;
        let nothing = Constraint::Cardinality { max: 0 };
        assert!(check_tree_feasible(&leaf, &u, &nothing).feasible);
        let v = TypeVector::empty(&u);
        assert!(random_walk_path(&leaf, &v).unwrap().is_empty());
    }

    #[test]
    fn depth_one_path() {
        let u = bernoulli_universe(1);
        let t = chain_tree(&u, &[0]);
        for ty in [TypeId(0), TypeId(1)] {
            let v = TypeVector::from_pairs(&u, &[(ElementId(0), ty)]).unwrap();
            assert_eq!(random_walk_path(&t, &v).unwrap(), vec![(ElementId(0), ty)]);
        }
        assert_eq!(
            random_walk_path(&t, &TypeVector::empty(&u)).unwrap_err(),
            Error::Unassigned(0)
        );
    }

    #[test]
    fn cardinality_witness_has_depth_three() {
        let u = bernoulli_universe(3);
        let t = chain_tree(&u, &[0, 1, 2]);
        let res = check_tree_feasible(&t, &u, &Constraint::Cardinality { max: 2 });
        assert!(!res.feasible);
        assert_eq!(res.witness.unwrap().len(), 3);
        assert!(check_tree_feasible(&t, &u, &Constraint::Cardinality { max: 3 }).feasible);
    }

    #[test]
    fn budget_constraint() {
        let unit = constraint_budget(vec![Number::one(); 3], Number::zero()).unwrap();
        assert!(!unit.may_extend(&[], ElementId(0)));
        let two = constraint_budget(vec![Number::one(); 3], Number::integer(2)).unwrap();
        assert!(two.is_feasible(&[ElementId(0), ElementId(1)]));
        assert!(!two.is_feasible(&[ElementId(0), ElementId(1), ElementId(2)]));
        let mixed = constraint_budget(vec![Number::ratio(3, 2), Number::one()], Number::integer(2)).unwrap();
        assert!(mixed.is_feasible(&[ElementId(0)]));
        assert!(!mixed.may_extend(&[ElementId(0)], ElementId(1)));
        assert!(mixed.is_feasible(&[ElementId(1)]));
        assert!(!mixed.may_extend(&[ElementId(1)], ElementId(0)));
        assert!(constraint_budget(vec![Number::integer(-1)], Number::one()).is_err());
    }

    #[test]
    fn dag_path_constraint() {
        // 0 -> {1, 2}, 1 -> {3}
        let arcs = [
            (ElementId(0), vec![ElementId(1), ElementId(2)]),
            (ElementId(1), vec![ElementId(3)]),
        ]
        .into();
        let c = constraint_dag_path(arcs, ElementId(0));
        assert!(c.may_extend(&[], ElementId(0)));
        assert!(!c.may_extend(&[], ElementId(1)));
        assert!(c.may_extend(&[ElementId(0)], ElementId(2)));
        assert!(!c.may_extend(&[ElementId(0)], ElementId(3)));
        assert!(c.is_feasible(&[ElementId(0), ElementId(1), ElementId(3)]));
    }

    #[test]
    fn no_repeats_in_any_constraint() {
        let c = Constraint::Unconstrained;
        assert!(!c.may_extend(&[ElementId(0)], ElementId(0)));
    }

    /// Perfect binary tree of depth 3: vertex v has children 2v+1, 2v+2;
    /// element i is the edge into vertex i+1.
    fn binary_fan() -> TreeFan {
        let edges = (1..15u32).map(|c| ((c - 1) / 2, c)).collect();
        TreeFan::new(edges, 0).unwrap()
    }

    #[test]
    fn tree_fan_constraint() {
        let c = Constraint::TreeFan(binary_fan());
        for e in 0..14 {
            assert!(c.may_extend(&[], ElementId(e)));
        }
        // edges into 3 and 5 hang below vertices 1 and 2: no common path
        assert!(!c.may_extend(&[ElementId(2)], ElementId(4)));
        // all edges incident to the path 0-1-3-7 (w*k = 6), any order
        let fan: Vec<ElementId> = [0, 1, 2, 3, 6, 7].iter().map(|&i| ElementId(i)).collect();
        assert!(c.is_feasible(&fan));
        let mut rev = fan.clone();
        rev.reverse();
        assert!(c.is_feasible(&rev));
        assert!(!c.may_extend(&fan, ElementId(4)));
        assert!(!c.may_extend(&[], ElementId(99)));
    }

    #[test]
    fn tree_fan_rejects_disconnected_edges() {
        assert!(TreeFan::new(vec![(0, 1), (5, 6)], 0).is_err());
        assert!(TreeFan::new(vec![(0, 1), (2, 1)], 0).is_err());
    }

    #[test]
    fn table_feasibility_is_membership() {
        let c = Constraint::Table {
            sequences: [vec![ElementId(0), ElementId(1)]].into(),
        };
        assert!(c.is_feasible(&[ElementId(0), ElementId(1)]));
        assert!(!c.is_feasible(&[ElementId(0)]));
    }

    #[test]
    fn materialize_roundtrips_tree() {
        let u = bernoulli_universe(3);
        let t = chain_tree(&u, &[2, 0, 1]);
        assert_eq!(materialize(&t, &u, 100).unwrap(), t);
        assert!(matches!(materialize(&t, &u, 5), Err(Error::ExactInfeasible { .. })));
        t.validate(&u).unwrap();
        assert_eq!(t.depth(), 3);
        assert_eq!(t.node_count(), 15);
    }
}
