//! Command-line front end. Every command builds a JSON document first; CSV
//! and text renderings are derived from the same data.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use crate::amenability::{cheeger_exact, classify, ClassifyParams, DeclaredBounds, Verdict};
use crate::enumerate::DEFAULT_GUARD;
use crate::error::{Error, Result};
use crate::fixtures::{make_fixture, Fixture, FIXTURE_NAMES};
use crate::gw::{
    event_path_prob, event_sary_prob, format_label, generation_growth_check, monte_carlo_event,
    sample_trial, verify_dichotomy, DichotomyParams, EventPredicate, GwSpec, Side,
};
use crate::oracle::TreeOracle;
use crate::ratio::Ratio;
use crate::tree::{parse_child_list, parse_edge_list, Tree};
use crate::trimming::{ball_orbit, trim_orbit, OrbitStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_REFUTED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "arbor", version, about = "Trimming, isoperimetry and amenability of trees")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate leaf removal on a finite tree, or on a ball of a fixture.
    Trim(TrimArgs),
    /// Exhaustive minimum of |∂A|/|A| over small connected sets.
    Cheeger(CheegerArgs),
    /// Search for Følner witnesses or check declared non-amenability bounds.
    Classify(ClassifyArgs),
    /// Galton-Watson sampling and checks.
    Gw {
        #[command(subcommand)]
        command: GwCommand,
    },
    /// Built-in infinite trees.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Edge list, or a child-list JSON document when the name ends in `.json`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fixture id such as `regular(3)` or `staircase_n(2)`.
    #[arg(long)]
    pub fixture: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrimArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    /// Ball radius used for fixtures.
    #[arg(long, default_value_t = 8)]
    pub radius: usize,
    #[arg(long, default_value_t = 200_000)]
    pub max_vertices: usize,
}

#[derive(Debug, Args)]
pub struct CheegerArgs {
    #[command(flatten)]
    pub source: Source,
    /// Largest set examined (default 8, or the whole tree for files).
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Ball radius for fixtures (default `max_size / 2 + 1`).
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, default_value_t = 200_000)]
    pub max_vertices: usize,
    /// Largest number of subsets the search may visit.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub guard: u128,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 64)]
    pub radius: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_vertices: usize,
    /// Largest path length `d` searched for branchless-path witnesses.
    #[arg(long, default_value_t = 50)]
    pub max_path: usize,
    /// Trimming depth `k` after which nothing is removed.
    #[arg(long = "declared-k", requires_all = ["declared_d", "declared_r"])]
    pub declared_k: Option<usize>,
    /// Longest branchless chain length `d` in the trimmed tree.
    #[arg(long = "declared-d", requires_all = ["declared_k", "declared_r"])]
    pub declared_d: Option<usize>,
    /// Largest inessential subtree size `R`.
    #[arg(long = "declared-R", requires_all = ["declared_k", "declared_d"])]
    pub declared_r: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub cert_radius: usize,
    #[arg(long, default_value_t = 8)]
    pub cert_max_size: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct GwSource {
    /// JSON offspring distribution: `{"p": [..]}` or a named family.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inline offspring vector, e.g. `1/4,1/4,1/2` or `0,0.5,0.5`.
    #[arg(long, value_name = "P0,P1,...")]
    pub p: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum GwCommand {
    /// Sample one tree.
    Sample {
        #[command(flatten)]
        spec: GwSource,
        #[arg(long)]
        seed: u64,
        /// Trial index within the seed's stream family.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Last generation materialized.
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 200_000)]
        max_vertices: usize,
    },
    /// Analytic and Monte Carlo probability of a first-generations event.
    Events {
        #[command(flatten)]
        spec: GwSource,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = EventKind::Path)]
        event: EventKind,
        #[arg(long)]
        d: usize,
        /// Branching of the s-ary event.
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Empirical mean of W_n against m^n.
    Growth {
        #[command(flatten)]
        spec: GwSource,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Monte Carlo check of the side of the dichotomy the distribution is on.
    Dichotomy {
        #[command(flatten)]
        spec: GwSource,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "5")]
        d: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1000)]
        subsets: usize,
        #[arg(long, default_value_t = 20)]
        subset_max_size: usize,
        #[arg(long, default_value_t = 3)]
        truncation_depth: usize,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        #[arg(long, default_value_t = 1000)]
        retry_budget: usize,
        #[arg(long, default_value_t = 200_000)]
        max_vertices: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EventKind {
    Path,
    Sary,
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    List,
}

/// A rendered report with its exit code.
#[derive(Debug)]
pub struct Outcome {
    pub json: Value,
    pub csv: Option<String>,
    pub code: i32,
}

impl Outcome {
    fn ok(json: Value) -> Outcome {
        Outcome {
            json,
            csv: None,
            code: EXIT_OK,
        }
    }

    fn with_csv(mut self, csv: String) -> Outcome {
        self.csv = Some(csv);
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(format!("{}\n", serde_json::to_string_pretty(&self.json)?)),
            Format::Csv => self
                .csv
                .clone()
                .ok_or_else(|| Error::InvalidInput("this command has no CSV output".into())),
            Format::Text => Ok(text(&self.json)),
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DeclaredBoundsRefuted { .. } => EXIT_REFUTED,
        Error::BudgetExhausted(_)
        | Error::SearchTooLarge { .. }
        | Error::RejectionBudget { .. }
        | Error::IncompleteKnowledge(_)
        | Error::InsufficientDepth { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_INPUT,
    }
}

/// Parses arguments, runs the command and prints its report. Returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = run(&cli).and_then(|o| Ok((o.render(cli.format)?, o.code)));
    match result {
        Ok((out, code)) => {
            print!("{out}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::DeclaredBoundsRefuted { counterexample, .. } = &e {
                if !counterexample.is_empty() {
                    eprintln!("counterexample: {}", counterexample.join(" "));
                }
            }
            exit_code(&e)
        }
    }
}

/// Runs a parsed command inside a thread pool of the requested size.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::InvalidInput("--workers must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Trim(a) => cmd_trim(a),
        Command::Cheeger(a) => cmd_cheeger(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Gw { command } => cmd_gw(command),
        Command::Fixtures {
            command: FixturesCommand::List,
        } => Ok(cmd_fixtures()),
    }
}

enum Loaded {
    File(Tree, String),
    Fixture(Fixture),
}

fn load(source: &Source) -> Result<Loaded> {
    match (&source.input, &source.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let is_json = path.extension().is_some_and(|x| x == "json");
            let tree = if is_json {
                parse_child_list(&text)?
            } else {
                parse_edge_list(&text)?
            };
            info!("read {} vertices from {}", tree.vertex_count(), path.display());
            Ok(Loaded::File(tree, path.display().to_string()))
        }
        (None, Some(id)) => Ok(Loaded::Fixture(make_fixture(id)?)),
        (None, None) => Err(Error::InvalidInput("give --input or --fixture".into())),
    }
}

fn positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::InvalidInput(format!("--{name} must be positive")));
    }
    Ok(())
}

fn cmd_trim(a: &TrimArgs) -> Result<Outcome> {
    positive("steps", a.steps)?;
    positive("radius", a.radius)?;
    let (source, counts, status, mut doc) = match load(&a.source)? {
        Loaded::File(tree, name) => {
            let orbit = trim_orbit(&tree, a.steps)?;
            (name, orbit.counts(), orbit.status, orbit.to_json())
        }
        Loaded::Fixture(f) => {
            let orbit = ball_orbit(&f, a.radius, a.steps, a.max_vertices)?;
            (f.to_string(), orbit.counts.clone(), orbit.status, orbit.to_json())
        }
    };
    doc["source"] = json!(source);
    let mut csv = String::from("step,vertices\n");
    for (j, c) in counts.iter().enumerate() {
        csv.push_str(&format!("{j},{c}\n"));
    }
    let code = match status {
        OrbitStatus::BudgetExhausted { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    };
    Ok(Outcome {
        json: doc,
        csv: Some(csv),
        code,
    })
}

fn cmd_cheeger(a: &CheegerArgs) -> Result<Outcome> {
    let doc = match load(&a.source)? {
        Loaded::File(tree, name) => {
            let n = tree.vertex_count();
            let center = tree.root().unwrap_or(0);
            let max_size = a.max_size.unwrap_or(n);
            positive("max-size", max_size)?;
            let res = cheeger_exact(&tree, &center, n, max_size, a.max_vertices.max(n), Some(a.guard))?;
            json!({ "source": name, "result": res })
        }
        Loaded::Fixture(f) => {
            let max_size = a.max_size.unwrap_or(8);
            positive("max-size", max_size)?;
            let radius = a.radius.unwrap_or(max_size / 2 + 1);
            positive("radius", radius)?;
            let res = cheeger_exact(&f, &f.root(), radius, max_size, a.max_vertices, Some(a.guard))?;
            json!({ "source": f.to_string(), "result": res })
        }
    };
    Ok(Outcome::ok(doc))
}

fn cmd_classify(a: &ClassifyArgs) -> Result<Outcome> {
    positive("radius", a.radius)?;
    positive("max-vertices", a.max_vertices)?;
    positive("max-path", a.max_path)?;
    let declared = match (a.declared_k, a.declared_d, a.declared_r) {
        (Some(k), Some(d), Some(r)) => {
            positive("declared-d", d)?;
            positive("declared-R", r)?;
            Some(DeclaredBounds { k, d, r })
        }
        _ => None,
    };
    let params = ClassifyParams {
        radius: a.radius,
        max_vertices: a.max_vertices,
        path_targets: (1..=a.max_path).collect(),
        declared,
        cert_radius: a.cert_radius,
        cert_max_size: a.cert_max_size,
        ..ClassifyParams::default()
    };
    let (source, report) = match load(&a.source)? {
        Loaded::File(tree, name) => {
            let center = tree.root().unwrap_or(0);
            (name, classify(&tree, &center, &params)?)
        }
        Loaded::Fixture(f) => (f.to_string(), classify(&f, &f.root(), &params)?),
    };
    info!("{source}: {}", report.verdict.label());
    let code = match report.verdict {
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    };
    let mut doc = serde_json::to_value(&report)?;
    doc["source"] = json!(source);
    Ok(Outcome {
        json: doc,
        csv: None,
        code,
    })
}

fn load_spec(source: &GwSource) -> Result<GwSpec> {
    match (&source.input, &source.p) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            GwSpec::from_json(&text)
        }
        (None, Some(list)) => {
            let items: Vec<&str> = list.split(',').map(str::trim).collect();
            if let Ok(exact) = items.iter().map(|s| s.parse::<Ratio>()).collect::<std::result::Result<Vec<_>, _>>() {
                return GwSpec::from_ratios(exact);
            }
            let floats = items
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .or_else(|| s.parse::<Ratio>().ok().map(|r| r.to_f64()))
                        .ok_or_else(|| Error::InvalidDistribution(format!("bad entry `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            GwSpec::from_probs(floats)
        }
        (None, None) => Err(Error::InvalidInput("give --input or --p".into())),
    }
}

fn cmd_gw(command: &GwCommand) -> Result<Outcome> {
    match command {
        GwCommand::Sample {
            spec,
            seed,
            trial,
            depth,
            max_vertices,
        } => {
            let spec = load_spec(spec)?;
            let s = sample_trial(&spec, *seed, *trial, *depth, *max_vertices)?;
            let labels: Vec<String> = s.labels.iter().map(|l| format_label(l)).collect();
            let mut csv = String::from("label,parent,generation,offspring\n");
            for v in 0..s.vertex_count() {
                let parent = s.parent[v].map(|p| labels[p].clone()).unwrap_or_default();
                csv.push_str(&format!("\"{}\",\"{}\",{},{}\n", labels[v], parent, s.generation[v], s.offspring[v]));
            }
            let doc = json!({
                "spec": spec,
                "seed": seed,
                "trial": trial,
                "vertices": s.vertex_count(),
                "depth": s.depth,
                "extinct": s.extinct,
                "truncated_at": s.truncated_at,
                "generation_sizes": s.generation_sizes,
                "labels": labels,
                "offspring": s.offspring,
            });
            Ok(Outcome::ok(doc).with_csv(csv))
        }
        GwCommand::Events {
            spec,
            seed,
            event,
            d,
            s,
            trials,
        } => {
            let spec = load_spec(spec)?;
            positive("trials", *trials)?;
            let (predicate, analytic, hypothesis) = match event {
                EventKind::Path => (EventPredicate::Path { d: *d }, event_path_prob(&spec, *d), true),
                EventKind::Sary => {
                    let q = event_sary_prob(&spec, *s, *d);
                    (EventPredicate::Sary { s: *s, d: *d }, q.q, q.hypothesis_holds)
                }
            };
            let est = monte_carlo_event(&spec, &predicate, *trials, *seed)?;
            let se = (analytic * (1.0 - analytic) / *trials as f64).sqrt();
            let deviation = (est.estimate - analytic).abs();
            let doc = json!({
                "spec": spec,
                "seed": seed,
                "event": predicate,
                "analytic": analytic,
                "hypothesis_holds": hypothesis,
                "monte_carlo": est,
                "analytic_std_error": se,
                "within_3se": deviation <= 3.0 * se || (se == 0.0 && deviation == 0.0),
            });
            let csv = format!(
                "event,analytic,trials,hits,estimate,std_error\n{},{},{},{},{},{}\n",
                event_name(*event),
                analytic,
                est.trials,
                est.hits,
                est.estimate,
                est.std_error
            );
            Ok(Outcome::ok(doc).with_csv(csv))
        }
        GwCommand::Growth { spec, seed, n, trials } => {
            let spec = load_spec(spec)?;
            let report = generation_growth_check(&spec, *n, *trials, *seed)?;
            let csv = report.to_csv()?;
            let doc = json!({ "spec": spec, "seed": seed, "report": report });
            Ok(Outcome::ok(doc).with_csv(csv))
        }
        GwCommand::Dichotomy {
            spec,
            seed,
            d,
            trials,
            subsets,
            subset_max_size,
            truncation_depth,
            max_size,
            retry_budget,
            max_vertices,
        } => {
            let spec = load_spec(spec)?;
            positive("trials", *trials)?;
            positive("subset-max-size", *subset_max_size)?;
            let params = DichotomyParams {
                d_list: d.clone(),
                trials: *trials,
                max_vertices: *max_vertices,
                retry_budget: *retry_budget,
                subsets: *subsets,
                subset_max_size: *subset_max_size,
                truncation_depth: *truncation_depth,
                cheeger_max_size: *max_size,
                guard: DEFAULT_GUARD,
            };
            let report = verify_dichotomy(&spec, &params, *seed)?;
            info!("dichotomy side {:?}", report.side);
            let csv = report.to_csv()?;
            let code = match report.side {
                Side::Amenable if report.amenable.iter().any(|r| r.meets_bound == Some(false)) => {
                    EXIT_INCONCLUSIVE
                }
                Side::NonAmenable
                    if report.non_amenable.as_ref().is_some_and(|s| {
                        s.bound_violations + s.degree_violations + s.cheeger_violations > 0
                    }) =>
                {
                    EXIT_INCONCLUSIVE
                }
                _ => EXIT_OK,
            };
            Ok(Outcome {
                json: serde_json::to_value(&report)?,
                csv: Some(csv),
                code,
            })
        }
    }
}

fn event_name(e: EventKind) -> &'static str {
    match e {
        EventKind::Path => "path",
        EventKind::Sary => "sary",
    }
}

#[derive(Serialize)]
struct FixtureInfo {
    id: &'static str,
    description: &'static str,
}

fn cmd_fixtures() -> Outcome {
    let list: Vec<FixtureInfo> = FIXTURE_NAMES
        .iter()
        .map(|&(id, description)| FixtureInfo { id, description })
        .collect();
    let mut csv = String::from("id,description\n");
    for f in &list {
        csv.push_str(&format!("\"{}\",\"{}\"\n", f.id, f.description));
    }
    Outcome::ok(json!({ "fixtures": list })).with_csv(csv)
}

/// Flattens a JSON document into `path: value` lines, with a headline for
/// orbit reports.
fn text(doc: &Value) -> String {
    let mut out = String::new();
    if let (Some(status), Some(stages)) = (doc.get("status").and_then(Value::as_str), doc.get("stages")) {
        let stages: Vec<String> = stages
            .as_array()
            .map(|a| a.iter().map(ToString::to_string).collect())
            .unwrap_or_default();
        out.push_str(&format!("stages: {}\n", stages.join(" ")));
        let mut line = status.replace('_', " ");
        if status == "periodic_within_radius" {
            line.push_str(&format!(", period {}", doc["period"]));
        }
        out.push_str(&format!("status: {line}\n"));
        return out;
    }
    flatten("", doc, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &dyn Display| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&key(&i), x, out);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: {}\n", parts.join(" ")));
        }
        other => out.push_str(&format!("{prefix}: {}\n", scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
