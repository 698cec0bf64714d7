//! File formats: JSON scenarios, behaviors, specs and polytopes; PORTA .ieq/.poi.

use crate::polytope::{Equality, HPolytope, Inequality, VPolytope};
use crate::rational::{self, Rational};
use crate::scenario::{
    self, Behavior, FloatBehavior, LfSpec, Measurement, Scenario, ScenarioError, SequentialLfSpec,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Upper bound on behavior coordinates and polytope dimensions accepted from files.
pub const MAX_COORDS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDoc {
    pub id: String,
    pub card: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub measurements: Vec<MeasurementDoc>,
    pub contexts: Vec<Vec<String>>,
}

impl ScenarioDoc {
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioDoc {
            measurements: s
                .measurements()
                .iter()
                .map(|m| MeasurementDoc {
                    id: m.id.clone(),
                    card: m.card,
                })
                .collect(),
            contexts: (0..s.contexts().len()).map(|c| s.context_ids(c)).collect(),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario, FormatError> {
        let ms: Vec<Measurement> = self
            .measurements
            .iter()
            .map(|m| Measurement {
                id: m.id.clone(),
                card: m.card,
            })
            .collect();
        let mut total = 0usize;
        for ctx in &self.contexts {
            let mut n = 1usize;
            for id in ctx {
                let card = ms.iter().find(|m| &m.id == id).map_or(1, |m| m.card.max(1));
                n = n
                    .checked_mul(card)
                    .filter(|&n| n <= MAX_COORDS)
                    .ok_or_else(too_large)?;
            }
            total = total
                .checked_add(n)
                .filter(|&t| t <= MAX_COORDS)
                .ok_or_else(too_large)?;
        }
        Ok(Scenario::new(ms, self.contexts.clone())?)
    }
}

fn too_large() -> FormatError {
    FormatError::Invalid(format!("more than {MAX_COORDS} behavior coordinates"))
}

pub fn scenario_from_json(text: &str) -> Result<Scenario, FormatError> {
    serde_json::from_str::<ScenarioDoc>(text)?.to_scenario()
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioDoc::from_scenario(s)).expect("serializable")
}

/// A behavior file's scenario: inline, or a path relative to the behavior file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Path(String),
    Inline(ScenarioDoc),
}

/// Probability entry: exact "num/den" string or a float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Exact(String),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub context: usize,
    pub outcome: Vec<usize>,
    pub p: Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorDoc {
    pub scenario: ScenarioRef,
    pub entries: Vec<EntryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

pub fn behavior_doc_from_json(text: &str) -> Result<BehaviorDoc, FormatError> {
    Ok(serde_json::from_str(text)?)
}

impl BehaviorDoc {
    /// Loads the scenario, resolving a path against `base` when given.
    pub fn scenario(&self, base: Option<&Path>) -> Result<Scenario, FormatError> {
        match &self.scenario {
            ScenarioRef::Inline(d) => d.to_scenario(),
            ScenarioRef::Path(p) => {
                let path = match base {
                    Some(b) => b.join(p),
                    None => Path::new(p).to_path_buf(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
                scenario_from_json(&text)
            }
        }
    }

    fn slot(&self, s: &Scenario, e: &EntryDoc) -> Result<usize, FormatError> {
        if e.context >= s.contexts().len() {
            return Err(FormatError::Invalid(format!(
                "context {} out of range",
                e.context
            )));
        }
        let cards = s.cards(e.context);
        if e.outcome.len() != cards.len() || e.outcome.iter().zip(&cards).any(|(o, c)| o >= c) {
            return Err(FormatError::Invalid(format!(
                "outcome {:?} invalid for context {}",
                e.outcome, e.context
            )));
        }
        Ok(scenario::encode(&e.outcome, &cards))
    }

    /// Exact behavior; every entry must be an exact rational string. Omitted entries are 0.
    pub fn exact(&self, s: &Scenario) -> Result<Behavior, FormatError> {
        let mut b = Behavior::zeros(s);
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            let i = self.slot(s, e)?;
            if !seen.insert((e.context, i)) {
                return Err(FormatError::Invalid(format!(
                    "duplicate entry {:?} in context {}",
                    e.outcome, e.context
                )));
            }
            let p = match &e.p {
                Prob::Exact(t) => {
                    rational::parse(t).map_err(|err| FormatError::Invalid(err.to_string()))?
                }
                Prob::Float(x) => {
                    return Err(FormatError::Invalid(format!(
                        "float probability {x}; rationalize the behavior first"
                    )))
                }
            };
            b.tables[e.context][i] = p;
        }
        b.validate(s)?;
        Ok(b)
    }

    /// Float behavior; exact entries are converted.
    pub fn float(&self, s: &Scenario) -> Result<FloatBehavior, FormatError> {
        let mut tables: Vec<Vec<f64>> = (0..s.contexts().len())
            .map(|c| vec![0.0; s.outcome_count(c)])
            .collect();
        for e in &self.entries {
            let i = self.slot(s, e)?;
            tables[e.context][i] = match &e.p {
                Prob::Exact(t) => rational::to_f64(
                    &rational::parse(t).map_err(|err| FormatError::Invalid(err.to_string()))?,
                ),
                Prob::Float(x) => *x,
            };
        }
        Ok(FloatBehavior { tables })
    }
}

fn entries_of<T: Clone>(
    s: &Scenario,
    tables: &[Vec<T>],
    keep: impl Fn(&T) -> Option<Prob>,
) -> Vec<EntryDoc> {
    let mut out = Vec::new();
    for (c, t) in tables.iter().enumerate() {
        let cards = s.cards(c);
        for (i, p) in t.iter().enumerate() {
            if let Some(p) = keep(p) {
                out.push(EntryDoc {
                    context: c,
                    outcome: scenario::decode(i, &cards),
                    p,
                });
            }
        }
    }
    out
}

/// Exact behavior JSON with the scenario inlined; zero entries are omitted.
pub fn behavior_to_json(s: &Scenario, b: &Behavior) -> String {
    let doc = BehaviorDoc {
        scenario: ScenarioRef::Inline(ScenarioDoc::from_scenario(s)),
        entries: entries_of(s, &b.tables, |p: &Rational| {
            (!num_traits::Zero::is_zero(p)).then(|| Prob::Exact(rational::fmt(p)))
        }),
        tol: None,
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Float behavior JSON carrying its tolerance.
pub fn float_behavior_to_json(s: &Scenario, b: &FloatBehavior, tol: f64) -> String {
    let doc = BehaviorDoc {
        scenario: ScenarioRef::Inline(ScenarioDoc::from_scenario(s)),
        entries: entries_of(s, &b.tables, |p: &f64| {
            (*p != 0.0).then_some(Prob::Float(*p))
        }),
        tol: Some(tol),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Reads an exact behavior file, resolving a scenario path relative to the file.
pub fn read_behavior(path: &Path) -> Result<(Scenario, Behavior), FormatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    let doc = behavior_doc_from_json(&text)?;
    let s = doc.scenario(path.parent())?;
    let b = doc.exact(&s)?;
    Ok((s, b))
}

/// "NA,NB" with binary outcomes, or "NA,NB:c1,..;d1,.." with explicit cardinalities.
pub fn parse_lf_spec(text: &str) -> Result<LfSpec, FormatError> {
    let bad = || FormatError::Invalid(format!("bad spec {text:?}; expected NA,NB"));
    let (sizes, cards) = match text.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (text, None),
    };
    let nums: Vec<usize> = sizes
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [na, nb] = nums[..] else {
        return Err(bad());
    };
    if na > 64 || nb > 64 {
        return Err(FormatError::Invalid("at most 64 settings per side".into()));
    }
    let spec = match cards {
        None => LfSpec::binary(na, nb),
        Some(c) => {
            let (ca, cb) = c.split_once(';').ok_or_else(bad)?;
            let list = |s: &str| -> Result<Vec<usize>, FormatError> {
                s.split(',')
                    .map(|x| x.trim().parse().map_err(|_| bad()))
                    .collect()
            };
            LfSpec {
                n_a: na,
                n_b: nb,
                card_a: list(ca)?,
                card_b: list(cb)?,
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub fn sequential_spec_from_json(text: &str) -> Result<SequentialLfSpec, FormatError> {
    let spec: SequentialLfSpec = serde_json::from_str(text)?;
    spec.validate()?;
    if spec.parties.len() > 16
        || spec
            .parties
            .iter()
            .any(|p| p.outcome_cards.len() > 64 || p.sequence_length > 64)
    {
        return Err(FormatError::Invalid("sequential spec too large".into()));
    }
    let s = scenario::build_sequential_scenario(&spec)?;
    ScenarioDoc::from_scenario(&s).to_scenario()?;
    Ok(spec)
}

fn check_poly_dims(dim: usize, rows: impl Iterator<Item = usize>) -> Result<(), FormatError> {
    if dim > MAX_COORDS {
        return Err(too_large());
    }
    for n in rows {
        if n != dim {
            return Err(FormatError::Invalid(format!(
                "row of length {n} in dimension {dim}"
            )));
        }
    }
    Ok(())
}

pub fn hpolytope_from_json(text: &str) -> Result<HPolytope, FormatError> {
    let h: HPolytope = serde_json::from_str(text)?;
    check_poly_dims(
        h.dim,
        h.inequalities
            .iter()
            .map(|i| i.coeffs.len())
            .chain(h.equalities.iter().map(|e| e.coeffs.len())),
    )?;
    Ok(h)
}

pub fn vpolytope_from_json(text: &str) -> Result<VPolytope, FormatError> {
    let v: VPolytope = serde_json::from_str(text)?;
    check_poly_dims(v.dim, v.vertices.iter().chain(&v.rays).map(|x| x.len()))?;
    Ok(v)
}

pub fn polytope_to_json<T: Serialize>(p: &T) -> String {
    serde_json::to_string_pretty(p).expect("serializable")
}

// ---------- PORTA ----------

fn porta_num(r: &Rational) -> String {
    rational::fmt(r)
}

fn porta_term(c: &Rational, k: usize) -> String {
    let one = rational::one();
    let sign = if c < &rational::zero() { "-" } else { "+" };
    let a = num_traits::Signed::abs(c);
    if a == one {
        format!("{sign}x{}", k + 1)
    } else {
        format!("{sign}{}x{}", porta_num(&a), k + 1)
    }
}

fn porta_lhs(coeffs: &[Rational]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
        .map(|(k, c)| porta_term(c, k))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("")
    }
}

/// PORTA .ieq text: equalities (==) first, then inequalities (<=).
pub fn write_ieq(h: &HPolytope) -> String {
    let mut out = format!("DIM = {}\n\nINEQUALITIES_SECTION\n", h.dim);
    let mut k = 1;
    for e in &h.equalities {
        out += &format!(
            "({k:>3}) {} == {}\n",
            porta_lhs(&e.coeffs),
            porta_num(&e.rhs)
        );
        k += 1;
    }
    for i in &h.inequalities {
        out += &format!(
            "({k:>3}) {} <= {}\n",
            porta_lhs(&i.coeffs),
            porta_num(&i.bound)
        );
        k += 1;
    }
    out += "\nEND\n";
    out
}

/// PORTA .poi text with CONV_SECTION and, if present, CONE_SECTION.
pub fn write_poi(v: &VPolytope) -> String {
    let row = |x: &[Rational]| x.iter().map(porta_num).collect::<Vec<_>>().join(" ");
    let mut out = format!("DIM = {}\n\nCONV_SECTION\n", v.dim);
    for (k, x) in v.vertices.iter().enumerate() {
        out += &format!("({:>3}) {}\n", k + 1, row(x));
    }
    if !v.rays.is_empty() {
        out += "\nCONE_SECTION\n";
        for (k, x) in v.rays.iter().enumerate() {
            out += &format!("({:>3}) {}\n", k + 1, row(x));
        }
    }
    out += "\nEND\n";
    out
}

fn strip_index(line: &str) -> &str {
    let t = line.trim();
    if t.starts_with('(') {
        if let Some(e) = t.find(')') {
            return t[e + 1..].trim();
        }
    }
    t
}

fn parse_dim(line: &str, ln: usize) -> Result<usize, FormatError> {
    let rest = line
        .trim_start_matches("DIM")
        .trim()
        .trim_start_matches('=')
        .trim();
    let d: usize = rest.parse().map_err(|_| FormatError::Parse {
        line: ln,
        msg: format!("bad dimension {rest:?}"),
    })?;
    if d > MAX_COORDS {
        return Err(too_large());
    }
    Ok(d)
}

/// Parses a PORTA linear form such as `+2x1-3/4x3+x7`.
fn parse_linear(lhs: &str, dim: usize, ln: usize) -> Result<Vec<Rational>, FormatError> {
    let err = |msg: String| FormatError::Parse { line: ln, msg };
    let s: String = lhs.chars().filter(|c| !c.is_whitespace()).collect();
    let mut coeffs = vec![rational::zero(); dim];
    if s == "0" {
        return Ok(coeffs);
    }
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let mut neg = false;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            neg = bytes[i] == b'-';
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i] != b'x' {
            if bytes[i] == b'+' || bytes[i] == b'-' {
                return Err(err(format!("term without variable in {lhs:?}")));
            }
            i += 1;
        }
        if i >= bytes.len() {
            return Err(err(format!("term without variable in {lhs:?}")));
        }
        let coef_text = &s[start..i];
        let mut c = if coef_text.is_empty() {
            rational::one()
        } else {
            rational::parse(coef_text).map_err(|e| err(e.to_string()))?
        };
        if neg {
            c = -c;
        }
        i += 1;
        let vs = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let k: usize = s[vs..i]
            .parse()
            .map_err(|_| err(format!("bad variable index in {lhs:?}")))?;
        if k == 0 || k > dim {
            return Err(err(format!("variable x{k} outside dimension {dim}")));
        }
        coeffs[k - 1] += c;
    }
    Ok(coeffs)
}

/// Parses PORTA .ieq text. `>=` rows are negated into `<=`.
pub fn read_ieq(text: &str) -> Result<HPolytope, FormatError> {
    let mut dim = None;
    let mut h = HPolytope::default();
    let mut in_ineq = false;
    let mut skip_next = false;
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if skip_next {
            skip_next = false;
            continue;
        }
        if line.starts_with("DIM") {
            dim = Some(parse_dim(line, ln)?);
            continue;
        }
        match line {
            "INEQUALITIES_SECTION" => {
                in_ineq = true;
                continue;
            }
            "END" => break,
            "VALID" | "LOWER_BOUNDS" | "UPPER_BOUNDS" | "ELIMINATION_ORDER" => {
                in_ineq = false;
                skip_next = true;
                continue;
            }
            _ => {}
        }
        if !in_ineq {
            return Err(FormatError::Parse {
                line: ln,
                msg: format!("unexpected line {line:?}"),
            });
        }
        let d = dim.ok_or(FormatError::Parse {
            line: ln,
            msg: "DIM must precede constraints".into(),
        })?;
        let body = strip_index(line);
        let (op, pos) = ["<=", ">=", "=<", "=>", "=="]
            .iter()
            .find_map(|op| body.find(op).map(|p| (*op, p)))
            .ok_or(FormatError::Parse {
                line: ln,
                msg: "missing relation".into(),
            })?;
        let coeffs = parse_linear(&body[..pos], d, ln)?;
        let rhs = rational::parse(body[pos + 2..].trim()).map_err(|e| FormatError::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        match op {
            "==" => h.equalities.push(Equality::new(coeffs, rhs)),
            "<=" | "=<" => h.inequalities.push(Inequality::new(coeffs, rhs)),
            _ => h
                .inequalities
                .push(Inequality::new(coeffs.iter().map(|c| -c).collect(), -rhs)),
        }
    }
    h.dim = dim.ok_or(FormatError::Parse {
        line: 0,
        msg: "missing DIM".into(),
    })?;
    Ok(h)
}

/// Parses PORTA .poi text.
pub fn read_poi(text: &str) -> Result<VPolytope, FormatError> {
    let mut dim = None;
    let mut v = VPolytope::default();
    #[derive(PartialEq)]
    enum Sec {
        None,
        Conv,
        Cone,
    }
    let mut sec = Sec::None;
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("DIM") {
            dim = Some(parse_dim(line, ln)?);
            continue;
        }
        match line {
            "CONV_SECTION" => {
                sec = Sec::Conv;
                continue;
            }
            "CONE_SECTION" => {
                sec = Sec::Cone;
                continue;
            }
            "END" => break,
            _ => {}
        }
        if sec == Sec::None {
            return Err(FormatError::Parse {
                line: ln,
                msg: format!("unexpected line {line:?}"),
            });
        }
        let d = dim.ok_or(FormatError::Parse {
            line: ln,
            msg: "DIM must precede points".into(),
        })?;
        let x: Vec<Rational> = strip_index(line)
            .split_whitespace()
            .map(|t| {
                rational::parse(t).map_err(|e| FormatError::Parse {
                    line: ln,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        if x.len() != d {
            return Err(FormatError::Parse {
                line: ln,
                msg: format!("{} entries in dimension {d}", x.len()),
            });
        }
        if sec == Sec::Conv {
            v.vertices.push(x);
        } else {
            v.rays.push(x);
        }
    }
    v.dim = dim.ok_or(FormatError::Parse {
        line: 0,
        msg: "missing DIM".into(),
    })?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use crate::scenario::build_lf_compatibility_graph;

    #[test]
    fn scenario_round_trip() {
        let s = build_lf_compatibility_graph(&LfSpec::binary(2, 3)).unwrap();
        assert_eq!(scenario_from_json(&scenario_to_json(&s)).unwrap(), s);
    }

    #[test]
    fn behavior_round_trip() {
        let s = build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap();
        let b = Behavior::uniform(&s);
        let doc = behavior_doc_from_json(&behavior_to_json(&s, &b)).unwrap();
        let s2 = doc.scenario(None).unwrap();
        assert_eq!(doc.exact(&s2).unwrap(), b);
    }

    #[test]
    fn behavior_rejects_bad_entries() {
        let text = r#"{"scenario":{"measurements":[{"id":"a","card":2}],"contexts":[["a"]]},
            "entries":[{"context":0,"outcome":[0],"p":"1/2"},{"context":0,"outcome":[0],"p":"1/2"}]}"#;
        let doc = behavior_doc_from_json(text).unwrap();
        assert!(doc.exact(&doc.scenario(None).unwrap()).is_err());
        let text = r#"{"scenario":{"measurements":[{"id":"a","card":2}],"contexts":[["a"]]},
            "entries":[{"context":0,"outcome":[0],"p":"1"}]}"#;
        let doc = behavior_doc_from_json(text).unwrap();
        let b = doc.exact(&doc.scenario(None).unwrap()).unwrap();
        assert_eq!(b.tables[0], vec![int(1), int(0)]);
    }

    #[test]
    fn porta_round_trip() {
        let mut h = HPolytope::cube(3);
        h.equalities
            .push(Equality::new(vec![int(1), frac(-1, 2), int(0)], frac(1, 3)));
        let back = read_ieq(&write_ieq(&h)).unwrap();
        assert_eq!(back, h);
        let v = VPolytope {
            dim: 2,
            vertices: vec![vec![int(0), frac(1, 2)], vec![int(1), int(1)]],
            rays: vec![vec![int(1), int(0)]],
        };
        assert_eq!(read_poi(&write_poi(&v)).unwrap(), v);
    }

    #[test]
    fn porta_reads_variants() {
        let t = "DIM = 2\nVALID\n0 0\nINEQUALITIES_SECTION\n(1) + 2 x1 - x2 >= -1\n(2) x2 =< 3/2\nEND\n";
        let h = read_ieq(t).unwrap();
        assert_eq!(
            h.inequalities[0],
            Inequality::new(vec![int(-2), int(1)], int(1))
        );
        assert_eq!(
            h.inequalities[1],
            Inequality::new(vec![int(0), int(1)], frac(3, 2))
        );
        assert!(read_ieq("DIM = 2\nINEQUALITIES_SECTION\nx3 <= 1\n").is_err());
        assert!(read_poi("DIM = 2\nCONV_SECTION\n1 2 3\n").is_err());
    }

    #[test]
    fn specs() {
        assert_eq!(parse_lf_spec("3,2").unwrap(), LfSpec::binary(3, 2));
        let s = parse_lf_spec("1,2:3;2,4").unwrap();
        assert_eq!(s.card_b, vec![2, 4]);
        assert!(parse_lf_spec("2").is_err());
        assert!(parse_lf_spec("2,2:1,2;2,2").is_err());
        let text = serde_json::to_string(&SequentialLfSpec::minimal()).unwrap();
        assert_eq!(
            sequential_spec_from_json(&text).unwrap(),
            SequentialLfSpec::minimal()
        );
    }
}
