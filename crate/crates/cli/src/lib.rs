//! The `quantale` command line.
//!
//! Exit codes: 0 on success, 1 on input diagnostics or usage errors, 2 on
//! evaluation errors. Results go to stdout as JSON (or CSV), diagnostics
//! to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use quantale::dsl::{parse_prop, parse_scenario, parse_world, SourceDiagnostic};
use quantale::engine::{self, EngineError, DEFAULT_VAGUE_NODE_CAP};
use quantale::model::DEFAULT_CONFIG_CAP;
use quantale::quant::shape_value;
use quantale::rsa::{reading_selector, Alpha, Rsa, RsaError};
use quantale::scope::{self, ScopeDiagnostic};
use quantale::{EngineKind, EngineOptions, LiftScheme, QuantifierKind, ScopeGraph, World};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_EVAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "quantale", version, about = "Probabilistic quantification over finite pixie spaces")]
struct Cli {
    /// Worker threads for engine-internal parallelism (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Probability that a proposition is true in a world.
    Eval(EvalArgs),
    /// Sampled quantifier shape as CSV rows `ratio,value`.
    Curve(CurveArgs),
    /// Literal listener, pragmatic speaker or pragmatic listener of a scenario.
    Rsa(RsaArgs),
    /// Parse and validate a world and proposition, or a scenario.
    Check(CheckArgs),
    /// Exact evaluation versus the generic fast path.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct Caps {
    /// Cap on lifted configurations times threshold regions.
    #[arg(long, default_value_t = DEFAULT_CONFIG_CAP)]
    cap_configs: usize,
    /// Cap on vague quantifier nodes under exact evaluation.
    #[arg(long, default_value_t = DEFAULT_VAGUE_NODE_CAP)]
    cap_vague_nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Naive,
    Exact,
    Mc,
    GenericFast,
}

impl EngineArg {
    fn kind(self) -> EngineKind {
        match self {
            Self::Naive => EngineKind::Naive,
            Self::Exact => EngineKind::Exact,
            Self::Mc => EngineKind::MonteCarlo,
            Self::GenericFast => EngineKind::GenericFast,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Independent,
    CoupledThreshold,
}

impl SchemeArg {
    fn scheme(self) -> LiftScheme {
        match self {
            Self::Independent => LiftScheme::Independent,
            Self::CoupledThreshold => LiftScheme::CoupledThreshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputArg {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    prop: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    engine: EngineArg,
    /// Lifting scheme (default independent).
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long, env = "QUANTALE_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    output: OutputArg,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Quantifier keyword.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 11)]
    points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AgentArg {
    L0,
    S1,
    L1,
    /// Pragmatic reading report over parameterised states.
    Reading,
}

#[derive(Args, Debug)]
struct RsaArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    agent: AgentArg,
    /// Utterance heard (l0, l1, reading).
    #[arg(long)]
    utterance: Option<String>,
    /// State observed (s1).
    #[arg(long)]
    state: Option<String>,
    /// Override the scenario's rationality: a positive number or `inf`.
    #[arg(long)]
    alpha: Option<String>,
    /// Include the meaning matrix.
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, required_unless_present = "scenario", requires = "prop")]
    world: Option<PathBuf>,
    #[arg(long, requires = "world")]
    prop: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["world", "prop"])]
    scenario: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    prop: PathBuf,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[command(flatten)]
    caps: Caps,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn json(&mut self, v: &Value) {
        let _ = writeln!(self.out, "{}", serde_json::to_string_pretty(v).expect("values serialize"));
    }

    fn error(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.err, "error: {msg}");
    }

    fn warn(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.err, "warning: {msg}");
    }

    fn diagnostics(&mut self, diags: &[SourceDiagnostic]) {
        for d in diags {
            let _ = writeln!(self.err, "{d}");
        }
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(io.err, "{}", e.render());
            } else {
                let _ = write!(io.out, "{}", e.render());
            }
            return code;
        }
    };
    let command = cli.command;
    let body = move |io: &mut Io| match command {
        Command::Eval(a) => cmd_eval(a, io),
        Command::Curve(a) => cmd_curve(a, io),
        Command::Rsa(a) => cmd_rsa(a, io),
        Command::Check(a) => cmd_check(a, io),
        Command::Compare(a) => cmd_compare(a, io),
    };
    match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => {
                // output is buffered so the pool never touches the caller's writers
                let (code, out, err) = pool.install(|| {
                    let (mut out, mut err) = (Vec::new(), Vec::new());
                    let code = body(&mut Io { out: &mut out, err: &mut err });
                    (code, out, err)
                });
                let _ = io.out.write_all(&out);
                let _ = io.err.write_all(&err);
                code
            }
            Err(e) => {
                io.error(format!("cannot start {n} threads: {e}"));
                EXIT_INPUT
            }
        },
        None => body(&mut io),
    }
}

fn read(path: &Path, io: &mut Io) -> Option<String> {
    match std::fs::read_to_string(path) {
        Ok(t) => Some(t),
        Err(e) => {
            io.error(format!("cannot read `{}`: {e}", path.display()));
            None
        }
    }
}

fn with_file(diags: Vec<SourceDiagnostic>, path: &Path) -> Vec<SourceDiagnostic> {
    diags
        .into_iter()
        .map(|mut d| {
            d.file.get_or_insert_with(|| path.display().to_string());
            d
        })
        .collect()
}

fn load_world(path: &Path, io: &mut Io) -> Result<World, Vec<SourceDiagnostic>> {
    let text = read(path, io).ok_or_else(Vec::new)?;
    parse_world(&text).map_err(|d| with_file(d, path))
}

fn load_prop(path: &Path, io: &mut Io) -> Result<(ScopeGraph, String), Vec<SourceDiagnostic>> {
    let text = read(path, io).ok_or_else(Vec::new)?;
    parse_prop(&text).map(|g| (g, text.clone())).map_err(|d| with_file(d, path))
}

/// Scope diagnostics located at their node's source position.
fn locate_scope(diags: &[ScopeDiagnostic], graph: &ScopeGraph, text: &str, path: &Path) -> Vec<Value> {
    diags
        .iter()
        .map(|d| {
            let pos = d.node.and_then(|n| graph.position(n));
            let (line, column) = pos.map(|p| (p.line, p.column)).unwrap_or((1, 1));
            json!({
                "severity": "error",
                "kind": d.kind,
                "message": d.message,
                "line": line,
                "column": column,
                "snippet": text.lines().nth(line - 1).unwrap_or(""),
                "file": path.display().to_string(),
            })
        })
        .collect()
}

fn report_scope(diags: &[ScopeDiagnostic], graph: &ScopeGraph, text: &str, path: &Path, io: &mut Io) {
    for v in locate_scope(diags, graph, text, path) {
        let _ = writeln!(io.err, "error: {}", v["message"].as_str().unwrap_or(""));
        let _ = writeln!(io.err, "  --> {}:{}:{}", path.display(), v["line"], v["column"]);
    }
}

fn options(caps: &Caps, scheme: Option<SchemeArg>) -> EngineOptions {
    EngineOptions {
        scheme: scheme.map(SchemeArg::scheme).unwrap_or_default(),
        config_cap: caps.cap_configs,
        vague_node_cap: caps.cap_vague_nodes,
        ..EngineOptions::default()
    }
}

fn cmd_eval(a: EvalArgs, io: &mut Io) -> i32 {
    let engine = a.engine.kind();
    let mc = if engine == EngineKind::MonteCarlo {
        match (a.samples, a.seed) {
            (Some(n), Some(s)) => Some((n, s)),
            (None, _) => {
                io.error("--engine mc needs --samples");
                return EXIT_INPUT;
            }
            (_, None) => {
                io.error("--engine mc needs --seed (or QUANTALE_SEED)");
                return EXIT_INPUT;
            }
        }
    } else {
        None
    };
    if a.scheme.is_some() && matches!(engine, EngineKind::Naive | EngineKind::GenericFast) {
        io.warn(format!("--scheme has no effect on the {} engine", engine.name()));
    }
    let world = match load_world(&a.world, io) {
        Ok(w) => w,
        Err(d) => {
            io.diagnostics(&d);
            return EXIT_INPUT;
        }
    };
    let (graph, text) = match load_prop(&a.prop, io) {
        Ok(g) => g,
        Err(d) => {
            io.diagnostics(&d);
            return EXIT_INPUT;
        }
    };
    let opts = options(&a.caps, a.scheme);
    match engine::evaluate(engine, &graph, &world.model, &world.lexicon, &opts, mc) {
        Ok(r) => {
            match a.output {
                OutputArg::Json => io.json(&serde_json::to_value(&r).expect("result serializes")),
                OutputArg::Csv => {
                    let opt = |v: Option<String>| v.unwrap_or_default();
                    let _ = writeln!(io.out, "probability,engine,ci_low,ci_high,samples,seed,scheme");
                    let _ = writeln!(
                        io.out,
                        "{},{},{},{},{},{},{}",
                        r.probability,
                        r.engine.name(),
                        opt(r.ci.map(|c| c.0.to_string())),
                        opt(r.ci.map(|c| c.1.to_string())),
                        opt(r.samples.map(|s| s.to_string())),
                        opt(r.seed.map(|s| s.to_string())),
                        opt(r.scheme.map(|s| s.name().to_string())),
                    );
                }
            }
            EXIT_OK
        }
        Err(EngineError::Validation(d)) => {
            report_scope(&d, &graph, &text, &a.prop, io);
            EXIT_INPUT
        }
        Err(e) => {
            io.error(e);
            EXIT_EVAL
        }
    }
}

fn cmd_curve(a: CurveArgs, io: &mut Io) -> i32 {
    let kind = match QuantifierKind::from_keyword(&a.kind) {
        Ok(k) => k,
        Err(e) => {
            io.error(e);
            return EXIT_INPUT;
        }
    };
    if a.points < 2 {
        io.error("--points must be at least 2");
        return EXIT_INPUT;
    }
    let last = (a.points - 1) as f64;
    let rows: Vec<(f64, f64)> = (0..a.points)
        .map(|i| {
            let r = i as f64 / last;
            (r, shape_value(&kind, r).expect("ratio in [0, 1]"))
        })
        .collect();
    match a.output {
        OutputArg::Csv => {
            let _ = writeln!(io.out, "ratio,value");
            for (r, v) in rows {
                let _ = writeln!(io.out, "{r},{v}");
            }
        }
        OutputArg::Json => {
            let points: Vec<Value> = rows.iter().map(|(r, v)| json!({"ratio": r, "value": v})).collect();
            io.json(&json!({"kind": kind.to_string(), "points": points}));
        }
    }
    EXIT_OK
}

fn rsa_exit(e: &RsaError) -> i32 {
    match e {
        RsaError::UnknownState(_) | RsaError::UnknownUtterance(_) | RsaError::BadAlpha(_) => EXIT_INPUT,
        _ => EXIT_EVAL,
    }
}

fn parse_alpha(s: &str) -> Option<Alpha> {
    if s == "inf" {
        return Some(Alpha::Infinite);
    }
    s.parse::<f64>().ok().filter(|a| a.is_finite() && *a > 0.0).map(Alpha::Finite)
}

fn cmd_rsa(a: RsaArgs, io: &mut Io) -> i32 {
    let Some(text) = read(&a.scenario, io) else { return EXIT_INPUT };
    let base = a.scenario.parent().unwrap_or(Path::new("."));
    let scenario = match parse_scenario(&text, base) {
        Ok(s) => s,
        Err(d) => {
            io.diagnostics(&with_file(d, &a.scenario));
            return EXIT_INPUT;
        }
    };
    let scenario = match a.alpha.as_deref() {
        None => scenario,
        Some(s) => match parse_alpha(s) {
            Some(alpha) => match scenario.with_alpha(alpha) {
                Ok(sc) => sc,
                Err(e) => {
                    io.error(e);
                    return EXIT_INPUT;
                }
            },
            None => {
                io.error(format!("--alpha must be a positive number or `inf`, got `{s}`"));
                return EXIT_INPUT;
            }
        },
    };
    let rsa = match Rsa::new(scenario, &options(&a.caps, None)) {
        Ok(r) => r,
        Err(e) => {
            io.error(&e);
            return rsa_exit(&e);
        }
    };
    let need = |v: &Option<String>, flag: &str, io: &mut Io| -> Option<String> {
        if v.is_none() {
            io.error(format!("--agent {:?} needs {flag}", a.agent).to_lowercase());
        }
        v.clone()
    };
    let result = match a.agent {
        AgentArg::L0 => {
            let Some(u) = need(&a.utterance, "--utterance", io) else { return EXIT_INPUT };
            rsa.literal_listener(&u).map(|p| serde_json::to_value(p).expect("serializes"))
        }
        AgentArg::L1 => {
            let Some(u) = need(&a.utterance, "--utterance", io) else { return EXIT_INPUT };
            rsa.pragmatic_listener(&u).map(|p| serde_json::to_value(p).expect("serializes"))
        }
        AgentArg::S1 => {
            let Some(s) = need(&a.state, "--state", io) else { return EXIT_INPUT };
            rsa.pragmatic_speaker(&s).map(|p| serde_json::to_value(p).expect("serializes"))
        }
        AgentArg::Reading => {
            let Some(u) = need(&a.utterance, "--utterance", io) else { return EXIT_INPUT };
            reading_selector(&rsa, &u).map(|r| serde_json::to_value(r).expect("serializes"))
        }
    };
    match result {
        Ok(mut v) => {
            if a.verbose {
                let sc = rsa.scenario();
                v["meanings"] = json!({
                    "utterances": sc.utterances().iter().map(|u| u.id.clone()).collect::<Vec<_>>(),
                    "states": sc.states().iter().map(|s| s.id.clone()).collect::<Vec<_>>(),
                    "matrix": rsa.meanings(),
                });
            }
            io.json(&v);
            EXIT_OK
        }
        Err(e) => {
            io.error(&e);
            rsa_exit(&e)
        }
    }
}

fn source_json(d: &SourceDiagnostic) -> Value {
    serde_json::to_value(d).expect("diagnostics serialize")
}

fn cmd_check(a: CheckArgs, io: &mut Io) -> i32 {
    let diags: Vec<Value> = if let Some(path) = &a.scenario {
        let Some(text) = read(path, io) else { return EXIT_INPUT };
        let base = path.parent().unwrap_or(Path::new("."));
        match parse_scenario(&text, base) {
            Ok(_) => Vec::new(),
            Err(d) => {
                let d = with_file(d, path);
                io.diagnostics(&d);
                d.iter().map(source_json).collect()
            }
        }
    } else {
        let (world_path, prop_path) = (a.world.expect("clap requires --world"), a.prop.expect("clap requires --prop"));
        let world = load_world(&world_path, io);
        let prop = load_prop(&prop_path, io);
        let mut out = Vec::new();
        let mut failed_read = false;
        for r in [world.as_ref().err(), prop.as_ref().err()].into_iter().flatten() {
            failed_read |= r.is_empty();
            io.diagnostics(r);
            out.extend(r.iter().map(source_json));
        }
        if failed_read {
            return EXIT_INPUT;
        }
        if let (Ok(world), Ok((graph, text))) = (&world, &prop) {
            if let Err(d) = scope::validate(graph, &world.model, &world.lexicon) {
                report_scope(&d, graph, text, &prop_path, io);
                out.extend(locate_scope(&d, graph, text, &prop_path));
            }
        }
        out
    };
    io.json(&Value::Array(diags.clone()));
    if diags.is_empty() {
        EXIT_OK
    } else {
        EXIT_INPUT
    }
}

fn cmd_compare(a: CompareArgs, io: &mut Io) -> i32 {
    let world = match load_world(&a.world, io) {
        Ok(w) => w,
        Err(d) => {
            io.diagnostics(&d);
            return EXIT_INPUT;
        }
    };
    let (graph, text) = match load_prop(&a.prop, io) {
        Ok(g) => g,
        Err(d) => {
            io.diagnostics(&d);
            return EXIT_INPUT;
        }
    };
    match engine::compare_generic(&graph, &world.model, &world.lexicon, &options(&a.caps, a.scheme)) {
        Ok(c) => {
            io.json(&serde_json::to_value(c).expect("serializes"));
            EXIT_OK
        }
        Err(EngineError::Validation(d)) => {
            report_scope(&d, &graph, &text, &a.prop, io);
            EXIT_INPUT
        }
        Err(e) => {
            io.error(e);
            EXIT_EVAL
        }
    }
}
