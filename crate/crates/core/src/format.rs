//! Instance and report files. Instances are schema-versioned JSON documents
//! with named elements and types, exact rational probabilities, and trees
//! as nested records. Reports are one record per metric, with a CSV export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evaluate::{EvalReport, Mode};
use crate::instances::{ColumnWalk, FanDescent, InstanceBundle, Metadata, Strategy};
use crate::number::Number;
use crate::strategy::{Constraint, DecisionTree};
use crate::universe::{TypeDistribution, Universe};
use crate::valuation::Valuation;

pub const INSTANCE_SCHEMA: &str = "smplab-instance";
pub const REPORT_SCHEMA: &str = "smplab-report";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeRecord {
    pub name: String,
    pub prob: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub name: String,
    pub types: Vec<TypeRecord>,
}

/// Internal tree node; a leaf has no element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ChildRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildRecord {
    #[serde(rename = "type")]
    pub type_name: String,
    pub node: NodeRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyRecord {
    Tree { root: NodeRecord },
    ColumnWalk(ColumnWalk),
    FanDescent(FanDescent),
}

/// On-disk instance. Type and element ids inside the valuation and the
/// constraint are positions in `elements` (types numbered consecutively
/// across elements).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: String,
    pub version: u32,
    #[serde(default)]
    pub metadata: Metadata,
    pub elements: Vec<ElementRecord>,
    pub valuation: Valuation,
    pub constraint: Constraint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyRecord>,
}

fn tree_record(tree: &DecisionTree, universe: &Universe) -> NodeRecord {
    match tree {
        DecisionTree::Leaf => NodeRecord {
            probe: None,
            children: Vec::new(),
        },
        DecisionTree::Probe { element, children } => NodeRecord {
            probe: Some(universe.element_name(*element).to_string()),
            children: children
                .iter()
                .map(|(t, c)| ChildRecord {
                    type_name: universe.type_name(*t).to_string(),
                    node: tree_record(c, universe),
                })
                .collect(),
        },
    }
}

fn tree_from_record(node: &NodeRecord, universe: &Universe) -> Result<DecisionTree> {
    let Some(name) = &node.probe else {
        if !node.children.is_empty() {
            return Err(Error::Parse("tree leaf with children".into()));
        }
        return Ok(DecisionTree::Leaf);
    };
    let e = universe
        .find_element(name)
        .ok_or_else(|| Error::Parse(format!("tree probes unknown element `{name}`")))?;
    let mut children = Vec::new();
    for &t in universe.types_of(e) {
        let wanted = universe.type_name(t);
        let child = node
            .children
            .iter()
            .find(|c| c.type_name == wanted)
            .ok_or_else(|| Error::Parse(format!("tree node `{name}` lacks a child for type `{wanted}`")))?;
        children.push(tree_from_record(&child.node, universe)?);
    }
    if node.children.len() != children.len() {
        return Err(Error::Parse(format!(
            "tree node `{name}` has children for unknown types"
        )));
    }
    DecisionTree::probe(universe, e, children)
}

impl InstanceFile {
    pub fn from_bundle(bundle: &InstanceBundle) -> Self {
        let u = &bundle.universe;
        let elements = u
            .elements()
            .map(|e| ElementRecord {
                name: u.element_name(e).to_string(),
                types: u
                    .types_of(e)
                    .iter()
                    .map(|&t| TypeRecord {
                        name: u.type_name(t).to_string(),
                        prob: bundle.dist.prob(t).clone(),
                    })
                    .collect(),
            })
            .collect();
        let strategy = bundle.strategy.as_ref().map(|s| match s {
            Strategy::Tree(t) => StrategyRecord::Tree {
                root: tree_record(t, u),
            },
            Strategy::ColumnWalk(c) => StrategyRecord::ColumnWalk(c.clone()),
            Strategy::FanDescent(f) => StrategyRecord::FanDescent(f.clone()),
        });
        InstanceFile {
            schema: INSTANCE_SCHEMA.to_string(),
            version: FORMAT_VERSION,
            metadata: bundle.metadata.clone(),
            elements,
            valuation: bundle.valuation.clone(),
            constraint: bundle.constraint.clone(),
            strategy,
        }
    }

    pub fn into_bundle(self) -> Result<InstanceBundle> {
        if self.schema != INSTANCE_SCHEMA || self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "expected schema `{INSTANCE_SCHEMA}` version {FORMAT_VERSION}, found `{}` version {}",
                self.schema, self.version
            )));
        }
        let mut universe = Universe::new();
        let mut probs = Vec::new();
        for el in &self.elements {
            let names: Vec<&str> = el.types.iter().map(|t| t.name.as_str()).collect();
            universe.add_element(&el.name, &names)?;
            probs.extend(el.types.iter().map(|t| t.prob.clone()));
        }
        let dist = TypeDistribution::new(&universe, probs)?;
        let strategy = match self.strategy {
            None => None,
            Some(StrategyRecord::Tree { root }) => Some(Strategy::Tree(tree_from_record(&root, &universe)?)),
            Some(StrategyRecord::ColumnWalk(c)) => Some(Strategy::ColumnWalk(c)),
            Some(StrategyRecord::FanDescent(f)) => Some(Strategy::FanDescent(f)),
        };
        Ok(InstanceBundle {
            universe,
            dist,
            valuation: self.valuation,
            constraint: self.constraint,
            strategy,
            metadata: self.metadata,
        })
    }
}

const VALUATION_KINDS: &[&str] = &[
    "table",
    "additive",
    "coverage",
    "partition_weighted",
    "rank",
    "weighted_rank",
    "contracted",
];
const FAMILY_KINDS: &[&str] = &["uniform", "partition", "matching", "chain", "intersection", "explicit"];
const CONSTRAINT_KINDS: &[&str] = &[
    "unconstrained",
    "cardinality",
    "budget",
    "dag_path",
    "tree_fan",
    "table",
];
const STRATEGY_KINDS: &[&str] = &["tree", "column_walk", "fan_descent"];

fn check_kind(value: Option<&Value>, what: &'static str, known: &[&str]) -> Result<()> {
    let Some(kind) = value.and_then(|v| v.get("kind")).and_then(Value::as_str) else {
        return Ok(());
    };
    if known.contains(&kind) {
        Ok(())
    } else {
        Err(Error::UnknownKind {
            what,
            kind: kind.to_string(),
        })
    }
}

fn check_family(value: Option<&Value>) -> Result<()> {
    check_kind(value, "family", FAMILY_KINDS)?;
    if let Some(members) = value.and_then(|v| v.get("members")).and_then(Value::as_array) {
        for m in members {
            check_family(Some(m))?;
        }
    }
    Ok(())
}

fn check_valuation(value: Option<&Value>) -> Result<()> {
    if value.is_none() {
        return Ok(());
    }
    check_kind(value, "valuation", VALUATION_KINDS)?;
    check_family(value.and_then(|v| v.get("family")))?;
    check_valuation(value.and_then(|v| v.get("base")).filter(|b| b.is_object()))
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("{} at line {} column {}", classify(&e), e.line(), e.column()))
}

fn classify(e: &serde_json::Error) -> String {
    match e.classify() {
        serde_json::error::Category::Eof => format!("truncated document: {e}"),
        serde_json::error::Category::Syntax => format!("malformed document: {e}"),
        _ => e.to_string(),
    }
}

pub fn instance_to_json(bundle: &InstanceBundle) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_bundle(bundle)).expect("instance serializes") + "\n"
}

pub fn parse_instance(text: &str) -> Result<InstanceBundle> {
    let value: Value = serde_json::from_str(text).map_err(json_error)?;
    check_valuation(value.get("valuation"))?;
    check_kind(value.get("constraint"), "constraint", CONSTRAINT_KINDS)?;
    check_kind(value.get("strategy"), "strategy", STRATEGY_KINDS)?;
    let file: InstanceFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_bundle()
}

/// One metric of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub name: String,
    pub value: f64,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// The inequality this record is checked against, spelled out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl ReportRecord {
    pub fn value(name: &str, value: f64, mode: Mode) -> Self {
        ReportRecord {
            name: name.to_string(),
            value,
            mode,
            exact: None,
            seed: None,
            trials: None,
            stderr: None,
            bound: None,
            pass: None,
        }
    }

    pub fn from_eval(name: &str, report: &EvalReport) -> Self {
        ReportRecord {
            name: name.to_string(),
            value: report.value,
            mode: report.mode,
            exact: report.exact.clone(),
            seed: report.seed,
            trials: report.trials,
            stderr: report.stderr,
            bound: None,
            pass: None,
        }
    }

    pub fn check(mut self, bound: &str, pass: bool) -> Self {
        self.bound = Some(bound.to_string());
        self.pass = Some(pass);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub version: u32,
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub records: Vec<ReportRecord>,
    /// Structured extras, e.g. the reduction's class decomposition.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
    pub passed: bool,
    /// Wall-clock milliseconds per phase; the only non-deterministic part.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(command: &str, params: BTreeMap<String, String>) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            version: FORMAT_VERSION,
            command: command.to_string(),
            params,
            records: Vec::new(),
            details: BTreeMap::new(),
            passed: true,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, record: ReportRecord) {
        if record.pass == Some(false) {
            self.passed = false;
        }
        self.records.push(record);
    }

    /// Names of the records whose checked bound failed.
    pub fn failures(&self) -> Vec<&ReportRecord> {
        self.records.iter().filter(|r| r.pass == Some(false)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Same report without timings, for reproducibility comparisons.
    pub fn without_timings(&self) -> Report {
        Report {
            timings_ms: BTreeMap::new(),
            ..self.clone()
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record([
            "name", "value", "mode", "exact", "seed", "trials", "stderr", "bound", "pass",
        ])
        .map_err(io)?;
        for r in &self.records {
            let opt = |v: Option<String>| v.unwrap_or_default();
            w.write_record([
                r.name.clone(),
                format!("{:?}", r.value),
                match r.mode {
                    Mode::Exact => "exact".to_string(),
                    Mode::MonteCarlo => "monte_carlo".to_string(),
                },
                opt(r.exact.clone()),
                opt(r.seed.map(|s| s.to_string())),
                opt(r.trials.map(|s| s.to_string())),
                opt(r.stderr.map(|s| format!("{s:?}"))),
                opt(r.bound.clone()),
                opt(r.pass.map(|p| p.to_string())),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn parse_report(text: &str) -> Result<Report> {
    let report: Report = serde_json::from_str(text).map_err(json_error)?;
    if report.schema != REPORT_SCHEMA || report.version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "expected schema `{REPORT_SCHEMA}` version {FORMAT_VERSION}, found `{}` version {}",
            report.schema, report.version
        )));
    }
    Ok(report)
}
