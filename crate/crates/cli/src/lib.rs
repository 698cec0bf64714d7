//! The `lfpoly` command line: argument parsing, dispatch and exit codes.

pub mod io;
pub mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use io::{exact, exact_vec, inequality_json, witness_json, AnyPolytope, UsageError};
use lfpoly_core::dd;
use lfpoly_core::formats;
use lfpoly_core::marginal::{self, LiftedPolytope, MembershipResult};
use lfpoly_core::polytope::{self, HPolytope, Inner, VPolytope};
use lfpoly_core::rational::{self, Rational};
use lfpoly_core::scenario::{self, LfSpec, Scenario, SequentialLfSpec};
use lfpoly_core::sequential;
use lfpoly_quantum::fixtures;
use lfpoly_quantum::possibilistic::{self, Ordering, PossibilisticModel};
use lfpoly_quantum::protocol::{self, ChoiceVector, ProtocolSpec};
use lfpoly_quantum::protocols;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Lifted LP size (behavior plus auxiliary variables) above which vertex and
/// facet enumeration needs `--allow-long`.
pub const LONG_LIFTED_VARS: usize = 48;
/// Behavior coordinates above which Bell facet enumeration needs `--allow-long`.
pub const LONG_BELL_COORDS: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "lfpoly", version, about = "Exact Bell, KSNC and Local Friendliness polytope tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Float tolerance for simulated quantities.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Largest denominator used when rationalizing floats.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub max_den: u64,
    /// Permit enumerations that are not desk-scale.
    #[arg(long, global = true)]
    pub allow_long: bool,
    /// Human-readable table instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BehaviorArgs {
    #[arg(long, value_name = "FILE")]
    pub behavior: PathBuf,
    /// Scenario file overriding the one named by the behavior.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolytopeKind {
    Bell,
    Lf,
    Nd,
    Ksnc,
}

#[derive(Args, Debug, Clone)]
pub struct PolytopeArgs {
    #[arg(long, value_enum)]
    pub polytope: Option<PolytopeKind>,
    /// LF spec "NA,NB" (binary) or "NA,NB:c1,..;d1,..".
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Accepted for readability; "NA,NB" specs are binary already.
    #[arg(long)]
    pub binary: bool,
    /// Explicit polytope file (.ieq, .poi or JSON) instead of a named polytope.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Porta,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderingArg {
    Max,
    Min,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that shared measurements have context-independent marginals.
    CheckNd(BehaviorArgs),
    /// Exact Bell/KSNC membership with a separating inequality on failure.
    CheckBell(BehaviorArgs),
    /// Exact LF membership for a two-party spec.
    CheckLf {
        #[arg(long)]
        spec: String,
        #[command(flatten)]
        b: BehaviorArgs,
    },
    /// Exact LF membership for a sequential spec (JSON file).
    CheckLfSeq {
        #[arg(long, value_name = "FILE")]
        sequential: PathBuf,
        #[command(flatten)]
        b: BehaviorArgs,
    },
    /// Glue two joint distributions agreeing on their shared variables.
    Glue {
        #[arg(long, value_name = "FILE")]
        left: PathBuf,
        #[arg(long, value_name = "FILE")]
        right: PathBuf,
    },
    /// Facets (H-description) of a named polytope or of a V-description file.
    Facets {
        #[command(flatten)]
        p: PolytopeArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
    },
    /// Vertices (V-description) of a named polytope or of an H-description file.
    Vertices {
        #[command(flatten)]
        p: PolytopeArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
    },
    /// Affine dimension of a polytope, projected to behavior coordinates.
    Dim {
        #[command(flatten)]
        p: PolytopeArgs,
    },
    /// Intersection of H-description files, with redundant rows removed.
    Intersect {
        #[arg(long = "input", value_name = "FILE", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
    },
    /// Containment of one polytope (V or H file) in another (H file).
    Subset {
        #[arg(long, value_name = "FILE")]
        inner: PathBuf,
        #[arg(long, value_name = "FILE")]
        outer: PathBuf,
    },
    /// Born-rule behavior of a realization file.
    Born {
        #[arg(long, value_name = "FILE")]
        realization: PathBuf,
    },
    /// Simulate a protocol for one choice vector.
    Simulate {
        #[arg(long, value_name = "FILE")]
        protocol: PathBuf,
        /// Choice as NAME=VALUE (1-based); repeatable.
        #[arg(long = "choice", value_name = "NAME=VALUE")]
        choices: Vec<String>,
        /// Comma-separated registers to marginalize onto.
        #[arg(long)]
        marginal: Option<String>,
    },
    /// Exact behavior from a float behavior by bounded-denominator rounding.
    Rationalize {
        #[command(flatten)]
        b: BehaviorArgs,
    },
    /// KCBS behavior and the LF no-go on the 5-cycle.
    #[command(name = "demo-5cycle")]
    Demo5cycle,
    /// LF no-go from the Peres-Mermin square.
    DemoPm,
    /// Commutation-irrelevance no-go on the 5-cycle and Peres-Mermin square.
    DemoCi,
    /// Translate a possibilistic model and realization into a protocol, then verify it.
    TranslateKs {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        realization: PathBuf,
        #[arg(long, value_enum, default_value = "max")]
        ordering: OrderingArg,
        /// Build the commutation-irrelevance variant instead.
        #[arg(long)]
        ci: bool,
        /// Write the generated protocol to FILE.
        #[arg(long, value_name = "FILE")]
        protocol_out: Option<PathBuf>,
    },
    /// Exact maximum of a linear functional over a polytope.
    MaxViolation {
        #[command(flatten)]
        p: PolytopeArgs,
        /// CHSH settings "x0,x1;y0,y1" (1-based).
        #[arg(long, default_value = "1,2;1,2")]
        chsh: String,
        /// JSON array of exact coefficients, one per behavior coordinate.
        #[arg(long, value_name = "FILE")]
        functional: Option<PathBuf>,
    },
}

/// What a command produced: a report body and whether verification passed.
pub struct Outcome {
    pub body: Body,
    pub ok: bool,
}

pub enum Body {
    Json(Value),
    Text(String),
}

impl Outcome {
    fn json(v: Value, ok: bool) -> Self {
        Outcome { body: Body::Json(v), ok }
    }
}

/// Runs one command line; returns the exit code. Errors go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(o) => {
            let text = match &o.body {
                Body::Json(v) => report::render(v, cli.pretty),
                Body::Text(t) => t.clone(),
            };
            let written = match &cli.out {
                Some(p) => std::fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display())),
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
            if o.ok {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, UsageError> {
    match &cli.command {
        Command::CheckNd(b) => check_nd(b),
        Command::CheckBell(b) => check_bell(b),
        Command::CheckLf { spec, b } => check_lf(spec, b),
        Command::CheckLfSeq { sequential, b } => check_lf_seq(sequential, b),
        Command::Glue { left, right } => glue(left, right),
        Command::Facets { p, format } => facets(cli, p, *format),
        Command::Vertices { p, format } => vertices(cli, p, *format),
        Command::Dim { p } => dim(p),
        Command::Intersect { inputs, format } => intersect(inputs, *format),
        Command::Subset { inner, outer } => subset(inner, outer),
        Command::Born { realization } => born(cli, realization),
        Command::Simulate { protocol, choices, marginal } => simulate(cli, protocol, choices, marginal.as_deref()),
        Command::Rationalize { b } => rationalize(cli, b),
        Command::Demo5cycle => demo_5cycle(cli),
        Command::DemoPm => demo_pm(cli),
        Command::DemoCi => demo_ci(cli),
        Command::TranslateKs { model, realization, ordering, ci, protocol_out } => {
            translate_ks(cli, model, realization, *ordering, *ci, protocol_out.as_deref())
        }
        Command::MaxViolation { p, chsh, functional } => max_violation(p, chsh, functional.as_deref()),
    }
}

fn check_nd(a: &BehaviorArgs) -> Result<Outcome, UsageError> {
    let (s, b) = io::load_behavior(&a.behavior, a.scenario.as_deref())?;
    let r = scenario::check_no_disturbance(&s, &b)?;
    let violations: Vec<Value> = r
        .violations
        .iter()
        .map(|d| {
            json!({
                "measurement": d.measurement,
                "contexts": [d.contexts.0, d.contexts.1],
                "outcome": d.outcome,
                "gap": exact(&d.gap),
            })
        })
        .collect();
    Ok(Outcome::json(json!({ "no_disturbance": r.ok, "violations": violations }), r.ok))
}

fn membership_report(s: &Scenario, r: &MembershipResult) -> Outcome {
    let mut v = json!({ "feasible": r.feasible, "theorem_invoked": r.theorem });
    if let Some(sep) = &r.separator {
        v["separator"] = inequality_json(Some(s), sep);
    }
    if let Some(w) = &r.joint {
        v["joint"] = witness_json(w);
    }
    Outcome::json(v, r.feasible)
}

fn check_bell(a: &BehaviorArgs) -> Result<Outcome, UsageError> {
    let (s, b) = io::load_behavior(&a.behavior, a.scenario.as_deref())?;
    let r = marginal::bell_membership(&s, &b)?;
    Ok(membership_report(&s, &r))
}

fn check_lf(spec: &str, a: &BehaviorArgs) -> Result<Outcome, UsageError> {
    let spec = formats::parse_lf_spec(spec)?;
    let (s, b) = io::load_behavior(&a.behavior, a.scenario.as_deref())?;
    if s != scenario::build_lf_compatibility_graph(&spec)? {
        return Err(UsageError::new("behavior scenario is not the compatibility graph of the spec"));
    }
    let r = marginal::lf_membership(&spec, &b)?;
    Ok(membership_report(&s, &r))
}

fn check_lf_seq(path: &Path, a: &BehaviorArgs) -> Result<Outcome, UsageError> {
    let spec: SequentialLfSpec = formats::sequential_spec_from_json(&io::read_text(path)?)?;
    let (s, b) = io::load_behavior(&a.behavior, a.scenario.as_deref())?;
    if s != scenario::build_sequential_scenario(&spec)? {
        return Err(UsageError::new("behavior scenario does not match the sequential spec"));
    }
    let r = sequential::lf_membership_sequential(&spec, &b)?;
    Ok(membership_report(&s, &r))
}

fn glue(left: &Path, right: &Path) -> Result<Outcome, UsageError> {
    let (p1, p2) = (io::load_joint(left)?, io::load_joint(right)?);
    let g = marginal::glue(&p1, &p2)?;
    Ok(Outcome::json(io::joint_json(&g), true))
}

/// A named polytope in behavior coordinates.
struct Named {
    scenario: Scenario,
    lifted: LiftedPolytope,
    kind: PolytopeKind,
}

fn named(p: &PolytopeArgs) -> Result<Named, UsageError> {
    let kind = p.polytope.ok_or_else(|| UsageError::new("give --polytope or --input"))?;
    let spec: Option<LfSpec> = p.spec.as_deref().map(formats::parse_lf_spec).transpose()?;
    let scenario = match (&spec, &p.scenario) {
        (Some(sp), None) => scenario::build_lf_compatibility_graph(sp)?,
        (None, Some(f)) => io::load_scenario(f)?,
        _ => return Err(UsageError::new("give exactly one of --spec and --scenario")),
    };
    let lifted = match kind {
        PolytopeKind::Bell => marginal::bell_polytope(&scenario)?,
        PolytopeKind::Nd => marginal::nd_polytope(&scenario),
        PolytopeKind::Lf | PolytopeKind::Ksnc => {
            let sp = spec.as_ref().ok_or_else(|| UsageError::new("lf and ksnc polytopes need --spec"))?;
            if kind == PolytopeKind::Lf {
                marginal::lf_polytope(sp)?
            } else {
                marginal::ksnc_intersection_polytope(sp)?
            }
        }
    };
    Ok(Named { scenario, lifted, kind })
}

fn guard(allow: bool, what: &str, size: usize, limit: usize) -> Result<(), UsageError> {
    if size > limit && !allow {
        return Err(UsageError(format!("{what} has size {size} > {limit}; pass --allow-long to run it anyway")));
    }
    Ok(())
}

fn named_vertices(cli: &Cli, n: &Named) -> Result<VPolytope, UsageError> {
    if n.kind == PolytopeKind::Bell {
        let count = n.scenario.n_global().unwrap_or(usize::MAX);
        guard(cli.allow_long, "deterministic assignment count", count, 1 << 16)?;
        return Ok(marginal::bell_vertices(&n.scenario));
    }
    guard(cli.allow_long, "lifted LP", n.lifted.n_behavior + n.lifted.n_aux, LONG_LIFTED_VARS)?;
    Ok(n.lifted.projected_vertices()?)
}

fn h_output(h: &HPolytope, s: Option<&Scenario>, format: OutFormat) -> Outcome {
    match format {
        OutFormat::Porta => Outcome { body: Body::Text(formats::write_ieq(h)), ok: true },
        OutFormat::Json => {
            let v = json!({
                "dim": h.dim,
                "n_facets": h.inequalities.len(),
                "inequalities": h.inequalities.iter().map(|i| inequality_json(s, i)).collect::<Vec<_>>(),
                "equalities": h.equalities.iter().map(|e| json!({ "coeffs": exact_vec(&e.coeffs), "rhs": exact(&e.rhs) })).collect::<Vec<_>>(),
            });
            Outcome::json(v, true)
        }
    }
}

fn v_output(v: &VPolytope, format: OutFormat) -> Outcome {
    match format {
        OutFormat::Porta => Outcome { body: Body::Text(formats::write_poi(v)), ok: true },
        OutFormat::Json => Outcome::json(
            json!({
                "dim": v.dim,
                "n_vertices": v.vertices.len(),
                "vertices": v.vertices.iter().map(|x| exact_vec(x)).collect::<Vec<_>>(),
                "rays": v.rays.iter().map(|x| exact_vec(x)).collect::<Vec<_>>(),
            }),
            true,
        ),
    }
}

fn facets(cli: &Cli, p: &PolytopeArgs, format: OutFormat) -> Result<Outcome, UsageError> {
    if let Some(f) = &p.input {
        let h = match io::load_polytope(f)? {
            AnyPolytope::V(v) => dd::dd_v_to_h(&v)?,
            AnyPolytope::H(h) => polytope::remove_redundant(&h)?,
        };
        return Ok(h_output(&h, None, format));
    }
    let n = named(p)?;
    if n.kind == PolytopeKind::Bell {
        guard(cli.allow_long, "Bell facet enumeration", n.scenario.n_coords(), LONG_BELL_COORDS)?;
    }
    let v = named_vertices(cli, &n)?;
    let h = dd::dd_v_to_h(&v)?;
    Ok(h_output(&h, Some(&n.scenario), format))
}

fn vertices(cli: &Cli, p: &PolytopeArgs, format: OutFormat) -> Result<Outcome, UsageError> {
    if let Some(f) = &p.input {
        let v = match io::load_polytope(f)? {
            AnyPolytope::H(h) => dd::dd_h_to_v(&h)?,
            AnyPolytope::V(v) => VPolytope::new(v.dim, marginal::extreme_points(v.vertices)?),
        };
        return Ok(v_output(&v, format));
    }
    let n = named(p)?;
    Ok(v_output(&named_vertices(cli, &n)?, format))
}

fn dim(p: &PolytopeArgs) -> Result<Outcome, UsageError> {
    let d = match &p.input {
        Some(f) => match io::load_polytope(f)? {
            AnyPolytope::H(h) => polytope::affine_dimension(&h)?,
            AnyPolytope::V(v) => vertex_dimension(&v),
        },
        None => polytope::affine_dimension(&named(p)?.lifted)?,
    };
    Ok(Outcome::json(json!({ "dimension": d }), true))
}

fn vertex_dimension(v: &VPolytope) -> i64 {
    let Some(first) = v.vertices.first() else { return -1 };
    let diffs: Vec<Vec<Rational>> = v
        .vertices
        .iter()
        .skip(1)
        .map(|x| x.iter().zip(first).map(|(a, b)| a - b).collect())
        .chain(v.rays.iter().cloned())
        .collect();
    lfpoly_core::linalg::rank(&diffs) as i64
}

fn intersect(inputs: &[PathBuf], format: OutFormat) -> Result<Outcome, UsageError> {
    let mut acc: Option<HPolytope> = None;
    for f in inputs {
        let h = io::load_hpolytope(f)?;
        acc = Some(match acc {
            None => polytope::remove_redundant(&h)?,
            Some(a) => polytope::intersect(&a, &h)?,
        });
    }
    Ok(h_output(&acc.expect("at least one input"), None, format))
}

fn subset(inner: &Path, outer: &Path) -> Result<Outcome, UsageError> {
    let outer = io::load_hpolytope(outer)?;
    let r = match io::load_polytope(inner)? {
        AnyPolytope::V(v) => polytope::is_subset(Inner::Vertices(&v), &outer)?,
        AnyPolytope::H(h) => polytope::is_subset(Inner::Lp(&h), &outer)?,
    };
    let mut v = json!({ "subset": r.subset });
    if let Some(w) = &r.witness {
        v["witness"] = exact_vec(w);
    }
    Ok(Outcome::json(v, r.subset))
}

fn born(cli: &Cli, path: &Path) -> Result<Outcome, UsageError> {
    let (s, real) = fixtures::realization_from_json(&io::read_text(path)?)?;
    let b = fixtures::born_behavior(&real.state, &s, &real.pvms)?;
    let v: Value = serde_json::from_str(&formats::float_behavior_to_json(&s, &b, cli.tol))?;
    Ok(Outcome::json(v, true))
}

fn parse_choices(items: &[String]) -> Result<ChoiceVector, UsageError> {
    let mut c = ChoiceVector::new();
    for it in items {
        let (k, v) = it.split_once('=').ok_or_else(|| UsageError(format!("choice {it:?} is not NAME=VALUE")))?;
        let v: usize = v.trim().parse().map_err(|_| UsageError(format!("choice value {v:?} is not a number")))?;
        if c.insert(k.trim().to_string(), v).is_some() {
            return Err(UsageError(format!("choice {k} given twice")));
        }
    }
    Ok(c)
}

fn simulate(cli: &Cli, path: &Path, choices: &[String], marginal: Option<&str>) -> Result<Outcome, UsageError> {
    let p = ProtocolSpec::from_json(&io::read_text(path)?)?;
    let choices = parse_choices(choices)?;
    let mut d = protocol::simulate_protocol(&p, &choices)?;
    if let Some(m) = marginal {
        let names: Vec<&str> = m.split(',').map(str::trim).collect();
        d = d.marginal(&names)?;
    }
    let mut v = serde_json::to_value(&d)?;
    v["tol"] = json!(cli.tol);
    Ok(Outcome::json(v, true))
}

fn rationalize(cli: &Cli, a: &BehaviorArgs) -> Result<Outcome, UsageError> {
    let (s, b) = io::load_float_behavior(&a.behavior, a.scenario.as_deref())?;
    match fixtures::rationalize_behavior(&s, &b, cli.max_den, cli.tol) {
        Ok(q) => Ok(Outcome::json(serde_json::from_str(&formats::behavior_to_json(&s, &q))?, true)),
        Err(e @ lfpoly_quantum::QuantumError::Rationalize { .. }) => {
            Ok(Outcome::json(json!({ "rationalized": false, "reason": e.to_string() }), false))
        }
        Err(e) => Err(e.into()),
    }
}

fn demo_5cycle(cli: &Cli) -> Result<Outcome, UsageError> {
    let k = fixtures::kcbs_fixture();
    let fb = fixtures::born_behavior(&k.state, &k.scenario, &k.realization().pvms)?;
    let q = fixtures::rationalize_behavior(&k.scenario, &fb, cli.max_den, cli.tol)?;
    let zeros: Vec<Value> = [(0, [1, 1]), (1, [0, 0]), (2, [1, 1]), (3, [0, 0])]
        .iter()
        .map(|(c, o)| json!({ "context": k.scenario.context_ids(*c), "outcome": o, "p": fb.get(&k.scenario, *c, o) }))
        .collect();
    let p51 = q.get(&k.scenario, 4, &[0, 1]);
    let bell = marginal::bell_membership(&k.scenario, &q)?;
    let no_go = possibilistic::verify_lf_no_go(&protocols::lf_5cycle_protocol(), &possibilistic::lf_5cycle_model())?;
    let ok = !bell.feasible && no_go.contradiction;
    let v = json!({
        "kcbs": {
            "zeros": zeros,
            "tol": cli.tol,
            "p_A5_0_A1_1": exact(&p51),
            "bell_feasible": bell.feasible,
        },
        "no_go": no_go,
    });
    Ok(Outcome::json(v, ok))
}

fn demo_pm(_cli: &Cli) -> Result<Outcome, UsageError> {
    let m = possibilistic::peres_mermin_model();
    let contextual = possibilistic::check_possibilistic_contextuality(&m)?;
    let no_go = possibilistic::verify_lf_no_go(&protocols::lf_pm_protocol(), &m)?;
    let ok = contextual.contextual && no_go.contradiction;
    Ok(Outcome::json(json!({ "model_contextual": contextual.contextual, "no_go": no_go }), ok))
}

fn demo_ci(_cli: &Cli) -> Result<Outcome, UsageError> {
    let k = fixtures::kcbs_fixture();
    let m5 = possibilistic::ksnc_5cycle_model();
    let t5 = possibilistic::ks_to_ci_translate(&m5, &k.realization(), Ordering::MaxOverlap)?;
    let r5 = possibilistic::verify_ci_no_go(&t5, &m5)?;
    let pm = fixtures::peres_mermin_fixture();
    let mpm = possibilistic::peres_mermin_model();
    let real = pm.realization(lfpoly_quantum::StateVector::basis(vec![4], &[0]));
    let tpm = possibilistic::ks_to_ci_translate(&mpm, &real, Ordering::MinOverlap)?;
    let rpm = possibilistic::verify_ci_no_go(&tpm, &mpm)?;
    let ok = r5.contradiction && rpm.contradiction;
    Ok(Outcome::json(json!({ "five_cycle": r5, "peres_mermin": rpm }), ok))
}

fn translate_ks(
    _cli: &Cli,
    model: &Path,
    realization: &Path,
    ordering: OrderingArg,
    ci: bool,
    protocol_out: Option<&Path>,
) -> Result<Outcome, UsageError> {
    let m = PossibilisticModel::from_json(&io::read_text(model)?)?;
    let (s, real) = fixtures::realization_from_json(&io::read_text(realization)?)?;
    if s != m.scenario {
        return Err(UsageError::new("model and realization scenarios differ"));
    }
    let ordering = match ordering {
        OrderingArg::Max => Ordering::MaxOverlap,
        OrderingArg::Min => Ordering::MinOverlap,
    };
    let write_protocol = |p: &ProtocolSpec| -> Result<(), UsageError> {
        if let Some(f) = protocol_out {
            std::fs::write(f, p.to_json()).map_err(|e| UsageError(format!("{}: {e}", f.display())))?;
        }
        Ok(())
    };
    if ci {
        let t = possibilistic::ks_to_ci_translate(&m, &real, ordering)?;
        write_protocol(&t.protocol)?;
        let r = possibilistic::verify_ci_no_go(&t, &m)?;
        let ok = r.contradiction;
        return Ok(Outcome::json(json!({ "chain": t.chain, "report": r }), ok));
    }
    let p = possibilistic::ks_to_lf_translate(&m, &real, ordering)?;
    write_protocol(&p)?;
    let r = possibilistic::verify_lf_no_go(&p, &m)?;
    let ok = r.contradiction;
    Ok(Outcome::json(json!({ "steps": p.timeline.len(), "report": r }), ok))
}

fn parse_chsh(text: &str) -> Result<((usize, usize), (usize, usize)), UsageError> {
    let bad = || UsageError(format!("bad CHSH settings {text:?}; expected x0,x1;y0,y1"));
    let (a, b) = text.split_once(';').ok_or_else(bad)?;
    let pair = |t: &str| -> Result<(usize, usize), UsageError> {
        let v: Vec<usize> = t.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        match v[..] {
            [x, y] if x >= 1 && y >= 1 && x != y => Ok((x - 1, y - 1)),
            _ => Err(bad()),
        }
    };
    Ok((pair(a)?, pair(b)?))
}

fn max_violation(p: &PolytopeArgs, chsh: &str, functional: Option<&Path>) -> Result<Outcome, UsageError> {
    let n = named(p)?;
    let c: Vec<Rational> = match functional {
        Some(f) => {
            let raw: Vec<String> = serde_json::from_str(&io::read_text(f)?)?;
            raw.iter().map(|t| rational::parse(t)).collect::<Result<_, _>>().map_err(|e| UsageError(e.to_string()))?
        }
        None => {
            let spec = p.spec.as_deref().map(formats::parse_lf_spec).transpose()?.ok_or_else(|| UsageError::new("CHSH needs --spec"))?;
            let (xs, ys) = parse_chsh(chsh)?;
            if xs.0.max(xs.1) >= spec.n_a || ys.0.max(ys.1) >= spec.n_b {
                return Err(UsageError::new("CHSH settings out of range for the spec"));
            }
            if spec.card_a.iter().chain(&spec.card_b).any(|&c| c != 2) {
                return Err(UsageError::new("CHSH needs binary outcomes"));
            }
            marginal::chsh_functional(&spec, xs, ys)
        }
    };
    if c.len() != n.scenario.n_coords() {
        return Err(UsageError(format!("functional has {} coefficients, expected {}", c.len(), n.scenario.n_coords())));
    }
    let (value, point) = marginal::maximize_over(&n.lifted, &c)?;
    let maximizer: Vec<Value> = point
        .iter()
        .enumerate()
        .filter(|(_, x)| !num_traits::Zero::is_zero(*x))
        .map(|(k, x)| json!({ "coord": n.scenario.coord_name(k), "p": exact(x) }))
        .collect();
    Ok(Outcome::json(json!({ "value": exact(&value), "maximizer": maximizer }), true))
}
