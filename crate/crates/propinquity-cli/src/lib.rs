//! The `qprop` command-line front end: argument parsing, instance loading,
//! dispatch and report emission.

pub mod schema;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use propinquity::bridges::{bridge_length, bridge_seminorm, height, reach};
use propinquity::constructions::{
    classical_bridge, diameter_bridge, fuzzy_torus, gh_bruteforce, verify_admissibility, LengthChoice,
};
use propinquity::quantum_metric::{
    check_leibniz, check_lipnorm, eval_lipnorm, mk_distance, state_diameter_seeded, CertifiedValue, LipKind, Method,
    Report, DEFAULT_SEED, DIAMETER_SAMPLES,
};
use propinquity::treks::{trek_length, verify_target_bounds, Registry, Trek};
use propinquity::Error;
use serde::Serialize;

use schema::{BridgeSpec, Instance, LipSpec, SpaceSpec, World};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "qprop", version, about = "Bridges, treks and propinquity bounds for finite quantum metric spaces")]
pub struct Cli {
    /// Instance file (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Accepted bound gap for exact methods.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_lp: f64,
    /// Accepted bound gap for iterative methods.
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub tol_iter: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lip-norm of a named element.
    Lipnorm { space: String, element: String },
    /// Monge–Kantorovich distance between two named states.
    Mk { space: String, state1: String, state2: String },
    /// Diameter of the state space.
    Diam {
        space: String,
        #[arg(long, default_value_t = DIAMETER_SAMPLES)]
        samples: usize,
    },
    /// A quantity attached to a named bridge.
    Bridge {
        name: String,
        #[arg(value_enum)]
        quantity: BridgeQuantity,
        /// Elements `a` and `b` for `seminorm`.
        elements: Vec<String>,
    },
    /// Length of a named trek.
    Trek {
        name: String,
        #[arg(value_enum)]
        quantity: TrekQuantity,
    },
    /// Registry upper bound on the propinquity, with its witnessing trek.
    Propinquity {
        a: String,
        b: String,
        /// Register the diameter bridge between the two spaces when no path exists.
        #[arg(long)]
        add_diameter_bridge: bool,
    },
    /// Build an object and emit the extended instance.
    Construct {
        #[command(subcommand)]
        what: Construct,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BridgeQuantity {
    Seminorm,
    Reach,
    Height,
    Length,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrekQuantity {
    Length,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Leibniz,
    Kernel,
    Admissible,
    TargetBounds,
    All,
}

#[derive(Subcommand, Debug)]
pub enum Construct {
    /// Classical bridge from an optimal Gromov–Hausdorff coupling.
    ClassicalBridge {
        a: String,
        b: String,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        name: Option<String>,
    },
    /// The tensor-product bridge with unit pivot.
    DiameterBridge {
        a: String,
        b: String,
        #[arg(long)]
        name: Option<String>,
    },
    /// Admissible Lip-norm on the direct sum of a bridge's endpoints.
    SumLipnorm {
        bridge: String,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long)]
        name: Option<String>,
    },
    /// Fuzzy torus with its dual-action Lip-norm.
    FuzzyTorus {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "arc", value_parser = parse_length)]
        length: LengthChoice,
        #[arg(long)]
        name: Option<String>,
    },
    /// Brute-force Gromov–Hausdorff distance between two finite metric spaces.
    Gh { a: String, b: String },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn parse_length(s: &str) -> Result<LengthChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code and a machine-readable kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: i32,
    pub error: String,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, error: "input".into(), message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Structural(_) => (EXIT_INPUT, "structural"),
            Error::Domain(_) => (EXIT_INPUT, "domain"),
            Error::Unsupported(_) => (EXIT_INPUT, "unsupported"),
            Error::NoPath(_) => (EXIT_INPUT, "no-path"),
            Error::Resource(_) => (EXIT_RESOURCE, "resource"),
            Error::NonConvergence(_) => (EXIT_NONCONVERGENCE, "non-convergence"),
        };
        Failure { code, error: kind.into(), message: e.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub lp: f64,
    pub iter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub quantity: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: String,
    pub seed: u64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub path: Vec<String>,
    /// Bridge names with `true` when traversed backwards.
    pub bridges: Vec<(String, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Output {
    pub command: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub results: Vec<Row>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// What a command produced: a report, or an extended instance file.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Report(Output),
    Instance(Instance),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        match self {
            Outcome::Report(o) => o.passed,
            Outcome::Instance(_) => true,
        }
    }

    pub fn render(&self, format: Format) -> Result<String, Failure> {
        let io = |e: String| Failure { code: EXIT_INPUT, error: "output".into(), message: e };
        match (self, format) {
            (Outcome::Instance(i), _) => serde_json::to_string_pretty(i).map(|s| s + "\n").map_err(|e| io(e.to_string())),
            (Outcome::Report(o), Format::Json) => serde_json::to_string_pretty(o).map(|s| s + "\n").map_err(|e| io(e.to_string())),
            (Outcome::Report(o), Format::Csv) => csv_report(o).map_err(io),
        }
    }
}

fn csv_report(o: &Output) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| e.to_string();
    w.write_record(["name", "quantity", "value", "lower", "upper", "method", "seed"]).map_err(err)?;
    let seed = o.seed.to_string();
    for r in &o.results {
        w.write_record([&r.name, &r.quantity, &r.value.to_string(), &r.lower.to_string(), &r.upper.to_string(), &r.method, &seed])
            .map_err(err)?;
    }
    for rep in &o.reports {
        for c in &rep.checks {
            let status = match (c.passed, c.informational) {
                (_, true) => "info",
                (true, _) => "pass",
                _ => "fail",
            };
            let name = format!("{}/{}", rep.title, c.name);
            w.write_record([&name, "check", &c.observed.to_string(), "", &c.bound.to_string(), status, &seed])
                .map_err(err)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

struct Ctx {
    seed: u64,
    tol: Tolerances,
}

impl Ctx {
    fn row(&self, name: impl Into<String>, quantity: &str, v: &CertifiedValue) -> Row {
        let tolerance = if v.method.is_exact() { self.tol.lp } else { self.tol.iter };
        Row {
            name: name.into(),
            quantity: quantity.into(),
            value: v.value,
            lower: v.lower,
            upper: v.upper,
            method: v.method.as_str().into(),
            seed: self.seed,
            tolerance,
            within_tolerance: v.gap() <= tolerance,
            caveat: v.caveat.clone(),
        }
    }

    fn output(&self, command: String, results: Vec<Row>, reports: Vec<Report>, witness: Option<Witness>) -> Outcome {
        let passed = reports.iter().all(Report::passed);
        Outcome::Report(Output { command, seed: self.seed, tolerances: self.tol.clone(), passed, results, reports, witness })
    }
}

pub fn read_instance(path: Option<&PathBuf>) -> Result<Instance, Failure> {
    match path {
        None => Ok(Instance::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure { code: EXIT_INPUT, error: "schema".into(), message: format!("{}: {e}", p.display()) })
        }
    }
}

/// Runs one command against an already parsed instance.
pub fn execute(cli: &Cli, instance: Instance) -> Result<Outcome, Failure> {
    let ctx = Ctx { seed: cli.seed, tol: Tolerances { lp: cli.tol_lp, iter: cli.tol_iter } };
    if let Command::Construct { what } = &cli.command {
        return construct(&ctx, what, instance);
    }
    let world = World::load(instance)?;
    match &cli.command {
        Command::Lipnorm { space, element } => {
            let v = eval_lipnorm(world.space(space)?, world.element(element)?)?;
            let row = ctx.row(element.clone(), "lipnorm", &CertifiedValue::exact(v, Method::ExactLp));
            Ok(ctx.output(format!("lipnorm {space} {element}"), vec![row], vec![], None))
        }
        Command::Mk { space, state1, state2 } => {
            let v = mk_distance(world.space(space)?, world.state(state1)?, world.state(state2)?)?;
            let row = ctx.row(format!("{state1}:{state2}"), "mk", &v);
            Ok(ctx.output(format!("mk {space} {state1} {state2}"), vec![row], vec![], None))
        }
        Command::Diam { space, samples } => {
            let v = state_diameter_seeded(world.space(space)?, ctx.seed, *samples)?;
            Ok(ctx.output(format!("diam {space}"), vec![ctx.row(space.clone(), "diameter", &v)], vec![], None))
        }
        Command::Bridge { name, quantity, elements } => bridge_command(&ctx, &world, name, *quantity, elements),
        Command::Trek { name, .. } => {
            let t = named_trek(&world, &registry(&world)?, name)?;
            let v = trek_length(&t)?;
            Ok(ctx.output(format!("trek {name} length"), vec![ctx.row(name.clone(), "trek-length", &v)], vec![], None))
        }
        Command::Propinquity { a, b, add_diameter_bridge } => {
            let mut reg = registry(&world)?;
            let found = match reg.propinquity_upper_bound(a, b) {
                Err(Error::NoPath(msg)) if !add_diameter_bridge => {
                    return Err(Failure { code: EXIT_INPUT, error: "no-path".into(), message: format!("{msg}; rerun with --add-diameter-bridge") })
                }
                Err(Error::NoPath(_)) => {
                    let g = diameter_bridge(world.space(a)?, world.space(b)?)?;
                    reg.add_bridge(format!("diameter:{a}:{b}"), a, b, g)?;
                    reg.propinquity_upper_bound(a, b)?
                }
                other => other?,
            };
            let row = ctx.row(format!("{a}:{b}"), "propinquity", &found.bound);
            let witness = Witness { path: found.path, bridges: found.bridges };
            Ok(ctx.output(format!("propinquity {a} {b}"), vec![row], vec![], Some(witness)))
        }
        Command::Verify { suite, samples } => verify(&ctx, &world, *suite, *samples),
        Command::Construct { .. } => unreachable!(),
    }
}

fn bridge_command(ctx: &Ctx, world: &World, name: &str, q: BridgeQuantity, elements: &[String]) -> Result<Outcome, Failure> {
    let (spec, g) = world.bridge(name)?;
    let (la, lb) = (world.space(&spec.from)?, world.space(&spec.to)?);
    let (quantity, v) = match q {
        BridgeQuantity::Seminorm => {
            let [a, b] = elements else {
                return Err(Failure::input("`bridge <name> seminorm` takes two element names"));
            };
            let v = bridge_seminorm(g, world.element(a)?, world.element(b)?)?;
            ("seminorm", CertifiedValue::exact(v, Method::ExactLp))
        }
        BridgeQuantity::Reach => ("reach", reach(g, la, lb)?),
        BridgeQuantity::Height => ("height", height(g, la, lb)?),
        BridgeQuantity::Length => ("length", bridge_length(g, la, lb)?),
    };
    if q != BridgeQuantity::Seminorm && !elements.is_empty() {
        return Err(Failure::input(format!("`bridge <name> {quantity}` takes no elements")));
    }
    Ok(ctx.output(format!("bridge {name} {quantity}"), vec![ctx.row(name, quantity, &v)], vec![], None))
}

fn registry(world: &World) -> Result<Registry, Error> {
    let mut reg = Registry::new();
    for (name, l) in &world.spaces {
        reg.add_space(name.clone(), l.clone())?;
    }
    for (name, g) in &world.bridges {
        let spec = &world.instance.bridges[name];
        reg.add_bridge(name.clone(), &spec.from, &spec.to, g.clone())?;
    }
    Ok(reg)
}

fn named_trek(world: &World, reg: &Registry, name: &str) -> Result<Trek, Error> {
    let names = world.instance.treks.get(name).ok_or_else(|| Error::Structural(format!("unknown trek `{name}`")))?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    reg.trek(&refs)
}

fn verify(ctx: &Ctx, world: &World, suite: Suite, samples: usize) -> Result<Outcome, Failure> {
    let wants = |s: Suite| suite == s || suite == Suite::All;
    let mut reports = Vec::new();
    let titled = |mut r: Report, title: String| {
        r.title = title;
        r
    };
    if wants(Suite::Kernel) {
        for (name, l) in &world.spaces {
            reports.push(titled(check_lipnorm(l), format!("kernel:{name}")));
        }
    }
    if wants(Suite::Leibniz) {
        for (name, l) in &world.spaces {
            reports.push(titled(check_leibniz(l, samples, ctx.seed), format!("leibniz:{name}")));
        }
    }
    if wants(Suite::Admissible) {
        for (name, l) in &world.spaces {
            if matches!(l.kind(), LipKind::DirectSumMax { .. }) {
                reports.push(titled(verify_admissibility(l, samples, ctx.seed), format!("admissible:{name}")));
            }
        }
    }
    if wants(Suite::TargetBounds) {
        let reg = registry(world)?;
        for name in world.instance.treks.keys() {
            let t = named_trek(world, &reg, name)?;
            reports.push(titled(verify_target_bounds(&t, samples, ctx.seed), format!("target-bounds:{name}")));
        }
        for name in world.bridges.keys() {
            let t = reg.trek(&[name.as_str()])?;
            reports.push(titled(verify_target_bounds(&t, samples, ctx.seed), format!("target-bounds:bridge:{name}")));
        }
    }
    let label = format!("verify {suite:?}").to_lowercase();
    Ok(ctx.output(label, vec![], reports, None))
}

fn fresh(taken: impl Fn(&str) -> bool, base: String) -> String {
    if !taken(&base) {
        return base;
    }
    (2..).map(|i| format!("{base}_{i}")).find(|n| !taken(n)).unwrap()
}

fn finite_space<'a>(instance: &'a Instance, name: &str) -> Result<&'a Vec<Vec<f64>>, Failure> {
    match instance.spaces.get(name) {
        Some(SpaceSpec::FiniteMetric { dist, .. }) => Ok(dist),
        Some(_) => Err(Failure::input(format!("space `{name}` is not a finite metric space"))),
        None => Err(Failure::input(format!("unknown space `{name}`"))),
    }
}

fn construct(ctx: &Ctx, what: &Construct, mut instance: Instance) -> Result<Outcome, Failure> {
    use propinquity::quantum_metric::FiniteMetricSpace;
    match what {
        Construct::ClassicalBridge { a, b, epsilon, name } => {
            let x = FiniteMetricSpace::new(finite_space(&instance, a)?.clone())?;
            let y = FiniteMetricSpace::new(finite_space(&instance, b)?.clone())?;
            let cb = classical_bridge(&gh_bruteforce(&x, &y)?.coupling, *epsilon)?;
            let key = name.clone().unwrap_or_else(|| fresh(|n| instance.bridges.contains_key(n), format!("classical:{a}:{b}")));
            instance.bridges.insert(key, BridgeSpec::export(a, b, &cb.bridge));
            World::load(instance.clone())?;
            Ok(Outcome::Instance(instance))
        }
        Construct::DiameterBridge { a, b, name } => {
            let world = World::load(instance.clone())?;
            let g = diameter_bridge(world.space(a)?, world.space(b)?)?;
            let key = name.clone().unwrap_or_else(|| fresh(|n| instance.bridges.contains_key(n), format!("diameter:{a}:{b}")));
            instance.bridges.insert(key, BridgeSpec::export(a, b, &g));
            Ok(Outcome::Instance(instance))
        }
        Construct::SumLipnorm { bridge, epsilon, name } => {
            let key = name.clone().unwrap_or_else(|| fresh(|n| instance.spaces.contains_key(n), format!("sum:{bridge}")));
            instance.spaces.insert(key, SpaceSpec::AdmissibleSum { bridge: bridge.clone(), epsilon: *epsilon });
            World::load(instance.clone())?;
            Ok(Outcome::Instance(instance))
        }
        Construct::FuzzyTorus { n, k, length, name } => {
            fuzzy_torus(*n, *k, *length)?;
            let key = name.clone().unwrap_or_else(|| fresh(|s| instance.spaces.contains_key(s), format!("fuzzy_{n}_{k}")));
            instance.spaces.insert(key, SpaceSpec::FuzzyTorus { n: *n, k: *k, lipnorm: Some(LipSpec::DualAction { length: *length }) });
            Ok(Outcome::Instance(instance))
        }
        Construct::Gh { a, b } => {
            let x = FiniteMetricSpace::new(finite_space(&instance, a)?.clone())?;
            let y = FiniteMetricSpace::new(finite_space(&instance, b)?.clone())?;
            let g = gh_bruteforce(&x, &y)?;
            let row = ctx.row(format!("{a}:{b}"), "gh", &CertifiedValue::exact(g.value, Method::VertexEnum));
            Ok(ctx.output(format!("construct gh {a} {b}"), vec![row], vec![], None))
        }
    }
}

/// Parses, runs and renders; returns the text to emit and the exit code.
pub fn run(cli: &Cli) -> Result<(String, i32), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(format!("--threads: {e}")))?;
    }
    let instance = read_instance(cli.input.as_ref())?;
    let outcome = execute(cli, instance)?;
    let text = outcome.render(cli.format)?;
    Ok((text, if outcome.passed() { EXIT_OK } else { EXIT_VERIFICATION }))
}
