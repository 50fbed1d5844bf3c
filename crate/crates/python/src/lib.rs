//! Python bindings: instances, exact and Monte Carlo evaluation, the
//! weighted reduction and the lower-bound formulas.

use num_rational::BigRational;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use smplab_core::evaluate::{
    adap_exact, adap_mc, alg_exact, alg_mc, best_nonadaptive_exact, greedy_interleaved_exact, DEFAULT_SEQUENCE_CAP,
};
use smplab_core::format::{instance_to_json, parse_instance};
use smplab_core::instances::{
    gen_prime_matroid_encoding, gen_random_instance, gen_submodular_lb, gen_tree_lb, submodular_lb_adap_recurrence,
    submodular_lb_alg_opt, tree_lb_adaptive_formula, tree_lb_nonadaptive_bound, RandomParams, RandomValuationKind,
};
use smplab_core::reduction::combined_value;
use smplab_core::universe::DEFAULT_ENUMERATION_CAP;
use smplab_core::verify::{check_encoding, SetCheck};
use smplab_core::{Error, ExactLimits, InstanceBundle, McConfig, Number, Scalar, Strategy, Valuation};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ExactInfeasible { .. } | Error::RankInfeasible { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn number(text: &str) -> PyResult<Number> {
    text.parse().map_err(to_py)
}

/// Parses a random valuation kind such as `coverage`, `matching_rank` or
/// `partition_intersection_rank:2`.
pub fn valuation_kind(spec: &str) -> Result<RandomValuationKind, Error> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let k = || -> Result<usize, Error> {
        arg.ok_or_else(|| Error::InvalidParameter(format!("`{name}` needs `:k`")))?
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad k in `{spec}`")))
    };
    Ok(match name {
        "coverage" => RandomValuationKind::Coverage,
        "partition_weighted" => RandomValuationKind::PartitionWeighted,
        "partition_intersection_rank" => RandomValuationKind::PartitionIntersectionRank { k: k()? },
        "matching_rank" => RandomValuationKind::MatchingRank,
        "weighted_partition_intersection" => RandomValuationKind::WeightedPartitionIntersection {
            k: k()?,
            max_weight: 1024,
        },
        "weighted_matching" => RandomValuationKind::WeightedMatching { max_weight: 1024 },
        _ => {
            return Err(Error::UnknownKind {
                what: "valuation",
                kind: name.to_string(),
            })
        }
    })
}

/// An instance with its strategy.
#[pyclass(module = "smplab", frozen)]
pub struct Instance {
    bundle: InstanceBundle,
}

impl Instance {
    fn strategy(&self) -> PyResult<&Strategy> {
        self.bundle
            .strategy
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("instance has no strategy"))
    }

    fn mc(trials: u64, seed: u64, threads: Option<usize>) -> McConfig {
        McConfig { trials, seed, threads }
    }
}

#[pymethods]
impl Instance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Instance {
            bundle: parse_instance(text).map_err(to_py)?,
        })
    }

    /// Column-walk lower-bound instance for `eps`, given as a decimal or `a/b`.
    #[staticmethod]
    fn submodular_lb(eps: &str) -> PyResult<Self> {
        Ok(Instance {
            bundle: gen_submodular_lb(&number(eps)?).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn tree_lb(k: u32, w: u64, p: &str) -> PyResult<Self> {
        Ok(Instance {
            bundle: gen_tree_lb(k, w, &number(p)?, None).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (seed, valuation = "coverage"))]
    fn random(seed: u64, valuation: &str) -> PyResult<Self> {
        let kind = valuation_kind(valuation).map_err(to_py)?;
        Ok(Instance {
            bundle: gen_random_instance(&RandomParams::with_valuations(vec![kind]), seed).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        instance_to_json(&self.bundle)
    }

    #[getter]
    fn num_elements(&self) -> usize {
        self.bundle.universe.len()
    }

    #[getter]
    fn num_types(&self) -> usize {
        self.bundle.universe.num_types()
    }

    #[getter]
    fn construction(&self) -> String {
        self.bundle.metadata.construction.clone()
    }

    #[getter]
    fn valuation_kind(&self) -> &'static str {
        self.bundle.valuation.kind()
    }

    fn adap(&self, py: Python<'_>) -> PyResult<f64> {
        let s = self.strategy()?;
        py.detach(|| adap_exact::<f64, _>(s, self.bundle.model(), &self.bundle.valuation, ExactLimits::default()))
            .map_err(to_py)
    }

    /// Exact adaptive value as a rational string.
    fn adap_exact(&self, py: Python<'_>) -> PyResult<String> {
        let s = self.strategy()?;
        let v: BigRational = py
            .detach(|| adap_exact(s, self.bundle.model(), &self.bundle.valuation, ExactLimits::default()))
            .map_err(to_py)?;
        Ok(v.exact_repr().expect("rationals are exact"))
    }

    fn alg(&self, py: Python<'_>) -> PyResult<f64> {
        let s = self.strategy()?;
        py.detach(|| alg_exact::<f64, _>(s, self.bundle.model(), &self.bundle.valuation, ExactLimits::default()))
            .map_err(to_py)
    }

    fn greedy(&self, py: Python<'_>) -> PyResult<f64> {
        let s = self.strategy()?;
        let family = self
            .bundle
            .family()
            .ok_or_else(|| PyValueError::new_err("valuation has no independence family"))?;
        py.detach(|| greedy_interleaved_exact::<f64, _>(s, self.bundle.model(), family, ExactLimits::default()))
            .map_err(to_py)
    }

    /// `(value, element names)` of the best fixed feasible sequence.
    fn best_nonadaptive(&self, py: Python<'_>) -> PyResult<(f64, Vec<String>)> {
        let b = &self.bundle;
        let best = py
            .detach(|| {
                best_nonadaptive_exact::<f64>(
                    b.model(),
                    &b.valuation,
                    &b.constraint,
                    b.universe.len(),
                    DEFAULT_SEQUENCE_CAP,
                    DEFAULT_ENUMERATION_CAP,
                )
            })
            .map_err(to_py)?;
        let names = best
            .sequence
            .iter()
            .map(|&e| b.universe.element_name(e).to_string())
            .collect();
        Ok((best.value, names))
    }

    /// `(estimate, stderr)`.
    #[pyo3(signature = (trials, seed, threads = None))]
    fn adap_mc(&self, py: Python<'_>, trials: u64, seed: u64, threads: Option<usize>) -> PyResult<(f64, f64)> {
        let s = self.strategy()?;
        let r = py
            .detach(|| {
                adap_mc(
                    s,
                    self.bundle.model(),
                    &self.bundle.valuation,
                    Self::mc(trials, seed, threads),
                )
            })
            .map_err(to_py)?;
        Ok((r.value, r.stderr.unwrap_or(0.0)))
    }

    #[pyo3(signature = (trials, seed, threads = None))]
    fn alg_mc(&self, py: Python<'_>, trials: u64, seed: u64, threads: Option<usize>) -> PyResult<(f64, f64)> {
        let s = self.strategy()?;
        let r = py
            .detach(|| {
                alg_mc(
                    s,
                    self.bundle.model(),
                    &self.bundle.valuation,
                    Self::mc(trials, seed, threads),
                )
            })
            .map_err(to_py)?;
        Ok((r.value, r.stderr.unwrap_or(0.0)))
    }

    /// Weighted-to-unweighted reduction for a `k`-extendible weighted rank.
    fn reduce<'py>(&self, py: Python<'py>, k: usize) -> PyResult<Bound<'py, PyDict>> {
        let Valuation::WeightedRank { family, weights } = &self.bundle.valuation else {
            return Err(PyValueError::new_err("reduction needs a weighted_rank valuation"));
        };
        let s = self.strategy()?;
        let out = py
            .detach(|| combined_value::<f64, _>(s, self.bundle.model(), weights, family, k, ExactLimits::default()))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("adap", out.adap)?;
        d.set_item("combined", out.combined)?;
        d.set_item("claim_bound", out.claim_bound)?;
        d.set_item("theorem_bound", out.theorem_bound)?;
        d.set_item("selected", out.representatives.selected().collect::<Vec<i32>>())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance({}, elements={}, types={}, valuation={})",
            self.bundle.metadata.construction,
            self.bundle.universe.len(),
            self.bundle.universe.num_types(),
            self.bundle.valuation.kind()
        )
    }
}

/// `(adap(0), alg_opt(0), ratio)` of the submodular lower-bound recurrences.
#[pyfunction]
fn submodular_gap(eps: &str) -> PyResult<(f64, f64, f64)> {
    let eps = number(eps)?;
    let adap: f64 = submodular_lb_adap_recurrence(&eps).map_err(to_py)?;
    let alg: f64 = submodular_lb_alg_opt(&eps).map_err(to_py)?;
    Ok((adap, alg, adap / alg))
}

/// `k(1 − (1 − p)^w)`.
#[pyfunction]
fn tree_lb_formula(k: u32, w: u64, p: &str) -> PyResult<f64> {
    Ok(tree_lb_adaptive_formula(k, w, &number(p)?))
}

/// `1 + kp`.
#[pyfunction]
fn tree_lb_bound(k: u32, p: &str) -> PyResult<f64> {
    Ok(tree_lb_nonadaptive_bound(k, &number(p)?))
}

/// `(holds, cases checked)` for the prime matroid encoding, with `samples`
/// random sets (exhaustive when `samples` is `None`).
#[pyfunction]
#[pyo3(signature = (k, samples = None, seed = 0))]
fn check_matroid_encoding(py: Python<'_>, k: u32, samples: Option<u64>, seed: u64) -> PyResult<(bool, u64)> {
    let sets = match samples {
        Some(count) => SetCheck::Sampled { count, seed },
        None => SetCheck::Exhaustive,
    };
    let v = py
        .detach(|| gen_prime_matroid_encoding(k).and_then(|enc| check_encoding(&enc, None, sets)))
        .map_err(to_py)?;
    Ok((v.holds, v.checked))
}

#[pymodule]
pub fn smplab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(submodular_gap, m)?)?;
    m.add_function(wrap_pyfunction!(tree_lb_formula, m)?)?;
    m.add_function(wrap_pyfunction!(tree_lb_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_matroid_encoding, m)?)?;
    Ok(())
}
