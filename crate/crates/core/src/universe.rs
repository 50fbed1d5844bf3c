//! Ground-set model: elements, their disjoint type spaces, independent
//! per-element type distributions, and type vectors.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number::{Number, Scalar};
use crate::typeset::TypeSet;

/// Default cap on the number of joint assignments enumerated in exact mode.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct TypeId(pub u32);

/// Ids also deserialize from digit strings, as JSON object keys are strings.
struct IdVisitor;

impl serde::de::Visitor<'_> for IdVisitor {
    type Value = u32;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a non-negative integer id")
    }

    fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<u32, E> {
        u32::try_from(v).map_err(|_| E::custom(format!("id {v} out of range")))
    }

    fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<u32, E> {
        u32::try_from(v).map_err(|_| E::custom(format!("id {v} out of range")))
    }

    fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<u32, E> {
        v.parse().map_err(|_| E::custom(format!("invalid id `{v}`")))
    }
}

impl<'de> Deserialize<'de> for ElementId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(IdVisitor).map(ElementId)
    }
}

impl<'de> Deserialize<'de> for TypeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(IdVisitor).map(TypeId)
    }
}

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Debug for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct ElementInfo {
    name: String,
    types: Vec<TypeId>,
}

#[derive(Clone, Debug, PartialEq)]
struct TypeInfo {
    name: String,
    element: ElementId,
}

/// Finite universe of elements. Type ids are global and dense, so the type
/// spaces of distinct elements are disjoint by construction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Universe {
    elements: Vec<ElementInfo>,
    types: Vec<TypeInfo>,
}

impl Universe {
    pub fn new() -> Self {
        Universe::default()
    }

    /// Appends an element with the given local type names.
    pub fn add_element<S: AsRef<str>>(&mut self, name: &str, type_names: &[S]) -> Result<ElementId> {
        if type_names.is_empty() {
            return Err(Error::InvalidUniverse(format!("element `{name}` has no types")));
        }
        if self.find_element(name).is_some() {
            return Err(Error::InvalidUniverse(format!("duplicate element `{name}`")));
        }
        for (i, a) in type_names.iter().enumerate() {
            if type_names[..i].iter().any(|b| b.as_ref() == a.as_ref()) {
                return Err(Error::InvalidUniverse(format!(
                    "element `{name}` repeats type `{}`",
                    a.as_ref()
                )));
            }
        }
        let id = ElementId(self.elements.len() as u32);
        let first = self.types.len() as u32;
        let types = (0..type_names.len() as u32).map(|i| TypeId(first + i)).collect();
        self.types.extend(type_names.iter().map(|n| TypeInfo {
            name: n.as_ref().to_string(),
            element: id,
        }));
        self.elements.push(ElementInfo {
            name: name.to_string(),
            types,
        });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementId> {
        (0..self.elements.len() as u32).map(ElementId)
    }

    pub fn types_of(&self, e: ElementId) -> &[TypeId] {
        &self.elements[e.index()].types
    }

    pub fn element_of(&self, t: TypeId) -> ElementId {
        self.types[t.index()].element
    }

    pub fn element_name(&self, e: ElementId) -> &str {
        &self.elements[e.index()].name
    }

    /// Local name of a type within its element.
    pub fn type_name(&self, t: TypeId) -> &str {
        &self.types[t.index()].name
    }

    /// Position of `t` within its element's type list.
    pub fn local_index(&self, t: TypeId) -> usize {
        let e = self.element_of(t);
        t.index() - self.types_of(e)[0].index()
    }

    pub fn find_element(&self, name: &str) -> Option<ElementId> {
        self.elements
            .iter()
            .position(|e| e.name == name)
            .map(|i| ElementId(i as u32))
    }

    pub fn find_type(&self, e: ElementId, name: &str) -> Option<TypeId> {
        self.types_of(e).iter().copied().find(|&t| self.type_name(t) == name)
    }

    pub fn contains_element(&self, e: ElementId) -> bool {
        e.index() < self.elements.len()
    }

    pub fn contains_type(&self, t: TypeId) -> bool {
        t.index() < self.types.len()
    }

    pub fn all_types(&self) -> TypeSet {
        (0..self.types.len() as u32).map(TypeId).collect()
    }
}

/// Independent per-element distributions, one probability per type.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeDistribution {
    probs: Vec<Number>,
    approx: Vec<f64>,
}

impl TypeDistribution {
    pub fn new(universe: &Universe, probs: Vec<Number>) -> Result<Self> {
        if probs.len() != universe.num_types() {
            return Err(Error::InvalidUniverse(format!(
                "distribution has {} probabilities for {} types",
                probs.len(),
                universe.num_types()
            )));
        }
        let approx: Vec<f64> = probs.iter().map(Number::to_f64).collect();
        for e in universe.elements() {
            let invalid = |reason: String| Error::InvalidDistribution {
                element: universe.element_name(e).to_string(),
                reason,
            };
            let mut sum = 0.0;
            for &t in universe.types_of(e) {
                let p = approx[t.index()];
                if !(0.0..=1.0).contains(&p) || probs[t.index()].is_negative() {
                    return Err(invalid(format!("probability {} out of [0,1]", probs[t.index()])));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("probabilities sum to {sum}")));
            }
        }
        Ok(TypeDistribution { probs, approx })
    }

    pub fn uniform(universe: &Universe) -> Self {
        let probs = universe
            .elements()
            .flat_map(|e| {
                let n = universe.types_of(e).len() as i64;
                (0..n).map(move |_| Number::ratio(1, n))
            })
            .collect();
        TypeDistribution::new(universe, probs).expect("uniform distribution is valid")
    }

    pub fn prob(&self, t: TypeId) -> &Number {
        &self.probs[t.index()]
    }

    pub fn prob_f64(&self, t: TypeId) -> f64 {
        self.approx[t.index()]
    }

    pub fn probs(&self) -> &[Number] {
        &self.probs
    }

    /// Draws the type of one element.
    pub fn sample_type<R: Rng + ?Sized>(&self, universe: &Universe, e: ElementId, rng: &mut R) -> TypeId {
        let types = universe.types_of(e);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &t in types {
            acc += self.approx[t.index()];
            if u < acc {
                return t;
            }
        }
        // rounding slack: fall back to the last type with positive mass
        *types
            .iter()
            .rev()
            .find(|t| self.approx[t.index()] > 0.0)
            .unwrap_or(&types[types.len() - 1])
    }
}

/// Counter-addressable random stream: `(seed, stream, counter)` fixes every
/// draw, independent of which thread consumes it.
pub fn stream_rng(seed: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((counter as u128) << 32);
    rng
}

/// Assignment of types to (some of) the elements.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeVector {
    slots: Vec<Option<TypeId>>,
}

impl fmt::Debug for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl TypeVector {
    pub fn empty(universe: &Universe) -> Self {
        TypeVector {
            slots: vec![None; universe.len()],
        }
    }

    pub fn from_pairs(universe: &Universe, pairs: &[(ElementId, TypeId)]) -> Result<Self> {
        let mut v = TypeVector::empty(universe);
        for &(e, t) in pairs {
            v.assign(universe, e, t)?;
        }
        Ok(v)
    }

    pub fn assign(&mut self, universe: &Universe, e: ElementId, t: TypeId) -> Result<()> {
        if !universe.contains_element(e) || !universe.contains_type(t) || universe.element_of(t) != e {
            return Err(Error::InvalidUniverse(format!(
                "type {t:?} does not belong to element {e:?}"
            )));
        }
        self.slots[e.index()] = Some(t);
        Ok(())
    }

    pub fn get(&self, e: ElementId) -> Option<TypeId> {
        self.slots.get(e.index()).copied().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementId, TypeId)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (ElementId(i as u32), t)))
    }

    pub fn len(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_total(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    /// The set `X_S` of realised types.
    pub fn types(&self) -> TypeSet {
        self.slots.iter().flatten().copied().collect()
    }
}

/// Draws every element independently.
pub fn sample_type_vector<R: Rng + ?Sized>(universe: &Universe, dist: &TypeDistribution, rng: &mut R) -> TypeVector {
    TypeVector {
        slots: universe
            .elements()
            .map(|e| Some(dist.sample_type(universe, e, rng)))
            .collect(),
    }
}

/// Projection of `vector` onto `subset`.
pub fn restrict(vector: &TypeVector, subset: &[ElementId]) -> Result<TypeVector> {
    let mut out = TypeVector {
        slots: vec![None; vector.slots.len()],
    };
    for &e in subset {
        let t = vector.get(e).ok_or(Error::Unassigned(e.0))?;
        out.slots[e.index()] = Some(t);
    }
    Ok(out)
}

/// One joint outcome over an ordered subset of elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<S> {
    /// `types[i]` is the type of `subset[i]`.
    pub types: Vec<TypeId>,
    pub prob: S,
}

/// Number of joint outcomes over `subset`, saturating.
pub fn assignment_count(universe: &Universe, subset: &[ElementId]) -> u128 {
    subset
        .iter()
        .fold(1u128, |acc, &e| acc.saturating_mul(universe.types_of(e).len() as u128))
}

/// Enumerates every assignment of types to `subset` with its product
/// probability, in odometer order (last element varies fastest).
pub fn enumerate_assignments<'a, S: Scalar>(
    universe: &'a Universe,
    dist: &'a TypeDistribution,
    subset: &'a [ElementId],
    cap: u128,
) -> Result<impl Iterator<Item = Assignment<S>> + 'a> {
    let needed = assignment_count(universe, subset);
    if needed > cap {
        return Err(Error::ExactInfeasible {
            what: "assignment enumeration",
            needed,
            cap,
        });
    }
    let mut digits = vec![0usize; subset.len()];
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        let types: Vec<TypeId> = subset
            .iter()
            .zip(&digits)
            .map(|(&e, &d)| universe.types_of(e)[d])
            .collect();
        let prob = types
            .iter()
            .fold(S::one(), |acc, &t| acc * S::from_number(dist.prob(t)));
        // advance odometer
        done = true;
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < universe.types_of(subset[i]).len() {
                done = false;
                break;
            }
            digits[i] = 0;
        }
        Some(Assignment { types, prob })
    }))
}
