//! Input loading and JSON encodings for the CLI.

use lfpoly_core::formats::{self, FormatError};
use lfpoly_core::marginal::{JointDistribution, Witness};
use lfpoly_core::polytope::{HPolytope, Inequality, VPolytope};
use lfpoly_core::rational::{self, Rational};
use lfpoly_core::scenario::{Behavior, FloatBehavior, Scenario};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::Path;

/// Errors that end a command with the usage exit code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        UsageError(msg.into())
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for UsageError {
            fn from(e: $t) -> Self {
                UsageError(e.to_string())
            }
        }
    )*};
}

usage_from!(
    FormatError,
    serde_json::Error,
    lfpoly_core::scenario::ScenarioError,
    lfpoly_core::marginal::MarginalError,
    lfpoly_core::polytope::PolytopeError,
    lfpoly_quantum::QuantumError
);

pub fn read_text(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, UsageError> {
    Ok(formats::scenario_from_json(&read_text(path)?)?)
}

fn behavior_doc(path: &Path, scenario: Option<&Path>) -> Result<(formats::BehaviorDoc, Scenario), UsageError> {
    let doc = formats::behavior_doc_from_json(&read_text(path)?)?;
    let s = match scenario {
        Some(p) => load_scenario(p)?,
        None => doc.scenario(path.parent())?,
    };
    Ok((doc, s))
}

pub fn load_behavior(path: &Path, scenario: Option<&Path>) -> Result<(Scenario, Behavior), UsageError> {
    let (doc, s) = behavior_doc(path, scenario)?;
    let b = doc.exact(&s)?;
    Ok((s, b))
}

pub fn load_float_behavior(path: &Path, scenario: Option<&Path>) -> Result<(Scenario, FloatBehavior), UsageError> {
    let (doc, s) = behavior_doc(path, scenario)?;
    let b = doc.float(&s)?;
    Ok((s, b))
}

/// H-polytope from .ieq or JSON (by extension).
pub fn load_hpolytope(path: &Path) -> Result<HPolytope, UsageError> {
    let text = read_text(path)?;
    let h = match extension(path) {
        "ieq" => formats::read_ieq(&text)?,
        "json" => formats::hpolytope_from_json(&text)?,
        other => return Err(UsageError(format!("{}: expected .ieq or .json H-description, got .{other}", path.display()))),
    };
    h.check()?;
    Ok(h)
}

/// V-polytope from .poi or JSON (by extension).
pub fn load_vpolytope(path: &Path) -> Result<VPolytope, UsageError> {
    let text = read_text(path)?;
    match extension(path) {
        "poi" => Ok(formats::read_poi(&text)?),
        "json" => Ok(formats::vpolytope_from_json(&text)?),
        other => Err(UsageError(format!("{}: expected .poi or .json V-description, got .{other}", path.display()))),
    }
}

/// Either description, told apart by extension or, for JSON, by its fields.
pub enum AnyPolytope {
    H(HPolytope),
    V(VPolytope),
}

pub fn load_polytope(path: &Path) -> Result<AnyPolytope, UsageError> {
    match extension(path) {
        "ieq" => Ok(AnyPolytope::H(load_hpolytope(path)?)),
        "poi" => Ok(AnyPolytope::V(load_vpolytope(path)?)),
        "json" => {
            let v: Value = serde_json::from_str(&read_text(path)?)?;
            if v.get("vertices").is_some() {
                Ok(AnyPolytope::V(load_vpolytope(path)?))
            } else {
                Ok(AnyPolytope::H(load_hpolytope(path)?))
            }
        }
        other => Err(UsageError(format!("{}: unknown polytope format .{other}", path.display()))),
    }
}

pub fn extension(path: &Path) -> &str {
    path.extension().and_then(|e| e.to_str()).unwrap_or("")
}

/// Joint distribution file: variables, cardinalities and an exact table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDoc {
    pub vars: Vec<String>,
    pub cards: Vec<usize>,
    pub table: Vec<String>,
}

pub fn load_joint(path: &Path) -> Result<JointDistribution, UsageError> {
    let doc: JointDoc = serde_json::from_str(&read_text(path)?)?;
    let n = doc.cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c).filter(|&n| n <= formats::MAX_COORDS));
    if n.is_none() {
        return Err(UsageError::new("joint table too large"));
    }
    let table = doc.table.iter().map(|t| rational::parse(t)).collect::<Result<Vec<_>, _>>().map_err(|e| UsageError(e.to_string()))?;
    let j = JointDistribution::new(doc.vars, doc.cards, table)?;
    if !j.is_distribution() {
        return Err(UsageError(format!("{}: not a probability distribution", path.display())));
    }
    Ok(j)
}

pub fn joint_json(j: &JointDistribution) -> Value {
    json!({
        "vars": j.vars,
        "cards": j.cards,
        "table": j.table.iter().map(rational::fmt).collect::<Vec<_>>(),
    })
}

pub fn exact(r: &Rational) -> Value {
    Value::String(rational::fmt(r))
}

pub fn exact_vec(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(exact).collect())
}

/// Inequality with its nonzero terms named by behavior coordinate.
pub fn inequality_json(s: Option<&Scenario>, i: &Inequality) -> Value {
    let mut v = json!({ "coeffs": exact_vec(&i.coeffs), "bound": exact(&i.bound) });
    if let Some(s) = s {
        let terms: Vec<Value> = i
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
            .map(|(k, c)| json!({ "coord": s.coord_name(k), "coeff": exact(c) }))
            .collect();
        v["terms"] = Value::Array(terms);
    }
    v
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Global(j) => json!({ "global": joint_json(j) }),
        Witness::Family(js) => json!({ "family": js.iter().map(joint_json).collect::<Vec<_>>() }),
    }
}
