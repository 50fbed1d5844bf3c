//! Laboratory for stochastic multi-value probing: adaptive decision-tree
//! strategies over independent multi-type elements, exact and Monte Carlo
//! evaluation of adaptive, random-walk non-adaptive and greedy values, the
//! weighted-to-unweighted class reduction, lower-bound instance generators,
//! and brute-force structural verifiers.

pub mod error;
pub mod evaluate;
pub mod families;
pub mod format;
pub mod instances;
pub mod number;
pub mod reduction;
pub mod strategy;
pub mod typeset;
pub mod universe;
pub mod valuation;
pub mod verify;

pub use error::{Error, Result};
pub use evaluate::{EvalReport, ExactLimits, McConfig, Mode, Model};
pub use families::IndependenceOracle;
pub use instances::{InstanceBundle, Strategy};
pub use number::{Number, Scalar};
pub use strategy::{AdaptivePolicy, Constraint, DecisionTree};
pub use typeset::TypeSet;
pub use universe::{ElementId, TypeDistribution, TypeId, TypeVector, Universe};
pub use valuation::Valuation;
