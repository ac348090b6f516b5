mod element;
mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use selfsim::attractor::AttractorGrid;
use selfsim::core_rep::GradedCoreElement;
use selfsim::ideals::{closed_set, orbit_overlaps, primitive_ideals, quotient_dimension, ClosedSet, IdealDescriptor, Tag};
use selfsim::ifs::builtin;
use selfsim::report::{sci, serialize_sci, to_json};
use selfsim::singularity::{analyze, check_assumption_b, Singularity, SingularityReport};
use selfsim::traces::{discrete_trace, trace_eval, HutchinsonTrace, TraceSpec};
use selfsim::verify::{all_pass, verify, PropertyResult, Suite, VerifyConfig};
use selfsim::{Point, SelfSimilarSystem};

#[derive(Parser)]
#[command(name = "selfsim", version, about = "Ideal structure of cores of self-similar map algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Total grid depth for sampled fields and the Hutchinson trace.
    #[arg(long, global = true, visible_alias = "depth", default_value_t = 10)]
    grid_depth: usize,
    /// Highest level of graded elements in property checks (default 3); for `ideals`, the highest
    /// orbit level.
    #[arg(long, global = true)]
    max_level: Option<usize>,
    /// Highest orbit level listed among primitive ideals.
    #[arg(long, global = true, default_value_t = 3)]
    max_ideal_level: usize,
    #[arg(long, global = true, default_value_t = selfsim::singularity::DEFAULT_POSTCRITICAL_DEPTH)]
    postcritical_depth: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Tolerance of the trace normalization check.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tolerance: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Branch values, branch points and Assumption B.
    Analyze { system: String },
    /// Primitive ideals up to the maximal ideal level.
    Ideals { system: String },
    /// Evaluates a trace on an element spec.
    Trace {
        system: String,
        /// `discrete:<point>,<n>` or `hutchinson:<m>`.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        element: PathBuf,
    },
    /// Runs a property battery.
    Verify {
        system: String,
        /// all, singularity, bimodule, core-rep or ideals.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Draws the attractor as SVG, optionally with an orbit set.
    Plot {
        system: String,
        #[arg(long, value_enum, default_value_t = PlotWhat::Grid)]
        what: PlotWhat,
        /// Branch point (coordinates or a named point) for `--what orbits`.
        #[arg(long)]
        base: Option<String>,
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Grid depth of the drawing.
        #[arg(long, default_value_t = 6)]
        plot_depth: usize,
        /// Also write `word,point,weight` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotWhat {
    Grid,
    Orbits,
}

/// A built-in name or a TOML file.
fn load_system(source: &str) -> Result<SelfSimilarSystem> {
    if let Some(s) = builtin(source) {
        return Ok(s);
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!("`{source}` is neither a built-in system (tent, cantor, sierpinski) nor a file");
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {source}"))?;
    SelfSimilarSystem::from_toml_str(&text).with_context(|| format!("loading {source}"))
}

fn resolve_point(system: &SelfSimilarSystem, s: &str) -> Result<Point> {
    match system.named_point(s) {
        Some(p) => Ok(p.clone()),
        None => Point::parse(s).map_err(|e| anyhow!("{s}: {e}")),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_analysis(r: &SingularityReport) -> String {
    let named = |p: &Point, n: &Option<String>| match n {
        Some(n) => format!("{n} = {p}"),
        None => p.to_string(),
    };
    let mut s = String::new();
    writeln!(s, "system {} (dimension {}, {} branches, {})", r.system, r.dimension, r.branches, r.scalar).unwrap();
    let values: Vec<String> = r.branch_values.iter().map(|c| named(&c.point, &c.name)).collect();
    writeln!(s, "branch values C: {{{}}}", values.join(", ")).unwrap();
    writeln!(s, "branch points B:").unwrap();
    if r.branch_points.is_empty() {
        writeln!(s, "  none").unwrap();
    }
    for b in &r.branch_points {
        let labels: Vec<String> = b.labels.iter().map(|l| l.to_string()).collect();
        writeln!(s, "  {} over {}, e = {}, labels ({})", named(&b.point, &b.name), b.value, b.index, labels.join(",")).unwrap();
    }
    let v = &r.assumption_b;
    writeln!(s, "Assumption B: {}", if v.pass { "pass" } else { "FAIL" }).unwrap();
    for (name, c) in [
        ("left inverse", &v.left_inverse),
        ("finite branch set", &v.finite_branch_set),
        ("postcritical disjoint", &v.postcritical_disjoint),
        ("unique collision slot", &v.unique_collision_slot),
    ] {
        writeln!(s, "  {name}: {} ({})", if c.pass { "ok" } else { "fails" }, c.detail).unwrap();
    }
    s
}

fn cmd_analyze(cli: &Cli, source: &str) -> Result<ExitCode> {
    let system = load_system(source)?;
    let report = analyze(&system, cli.postcritical_depth);
    let text = match cli.format {
        Format::Json => to_json(&report) + "\n",
        Format::Text => render_analysis(&report),
    };
    emit(cli, &text)?;
    Ok(if report.assumption_b.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Serialize)]
struct IdealRow {
    ideal: String,
    tag: Option<Tag>,
    /// Point list, or "K" for the whole attractor.
    closed_set: serde_json::Value,
    #[serde(skip)]
    closed_text: String,
    quotient_dimension: Option<u64>,
    /// The trace whose kernel is the ideal.
    trace: String,
    #[serde(serialize_with = "serialize_sci")]
    normalization_defect: f64,
    normalized: bool,
}

#[derive(Serialize)]
struct IdealTable {
    system: String,
    max_level: usize,
    rows: Vec<IdealRow>,
    warnings: Vec<String>,
}

fn cmd_ideals(cli: &Cli, source: &str) -> Result<ExitCode> {
    let system = load_system(source)?;
    let verdict = check_assumption_b(&system, cli.postcritical_depth);
    let sing = Singularity::compute(&system)?;
    let max_level = cli.max_level.unwrap_or(cli.max_ideal_level);
    let prims = primitive_ideals(&sing, &verdict, max_level)?;
    let one = GradedCoreElement::one(0, system.dimension());
    let mut rows = Vec::new();
    for d in &prims {
        let cs = closed_set(&system, &sing, d)?;
        let (tag, trace, value, qdim) = match d {
            IdealDescriptor::OrbitUnion(tags) if tags.len() == 1 => {
                let t = tags.iter().next().unwrap();
                let v = discrete_trace(&system, &sing, &t.base, t.level, &one)?;
                (Some(t.clone()), format!("discrete:{},{}", t.base, t.level), v, Some(quotient_dimension(&system, d)?))
            }
            _ => {
                let v = HutchinsonTrace::new(&system, cli.grid_depth).eval(&one)?;
                (None, format!("hutchinson:{}", cli.grid_depth), v, None)
            }
        };
        let defect = (value - 1.0).norm();
        rows.push(IdealRow {
            ideal: d.to_string(),
            tag,
            closed_set: match &cs {
                ClosedSet::Whole => serde_json::Value::String("K".into()),
                ClosedSet::Points(ps) => serde_json::to_value(ps)?,
            },
            closed_text: cs.to_string(),
            quotient_dimension: qdim,
            trace,
            normalization_defect: defect,
            normalized: defect <= cli.tolerance,
        });
    }
    let tags = prims.iter().filter_map(|d| d.tags()).flatten().cloned().collect();
    let table = IdealTable { system: system.name().to_string(), max_level, rows, warnings: orbit_overlaps(&system, &tags) };
    let text = match cli.format {
        Format::Json => to_json(&table) + "\n",
        Format::Text => {
            let mut s = format!("primitive ideals of {} up to level {}\n", table.system, table.max_level);
            for r in &table.rows {
                let q = r.quotient_dimension.map_or("-".to_string(), |q| q.to_string());
                writeln!(s, "{:<20} closed set {}  quotient dim {q}  {} normalized: {}", r.ideal, r.closed_text, r.trace, r.normalized).unwrap();
            }
            for w in &table.warnings {
                writeln!(s, "warning: {w}").unwrap();
            }
            s
        }
    };
    emit(cli, &text)?;
    Ok(if table.rows.iter().all(|r| r.normalized) { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Serialize)]
struct TraceReport {
    system: String,
    kind: String,
    #[serde(serialize_with = "serialize_sci")]
    re: f64,
    #[serde(serialize_with = "serialize_sci")]
    im: f64,
}

fn cmd_trace(cli: &Cli, source: &str, kind: &str, element: &Path) -> Result<ExitCode> {
    let system = load_system(source)?;
    let sing = Singularity::compute(&system)?;
    let spec = TraceSpec::parse(kind, &system)?;
    let text = std::fs::read_to_string(element).with_context(|| format!("reading {}", element.display()))?;
    let t = element::parse(&text, &system, &sing)?;
    let v = trace_eval(&system, &sing, &spec, &t)?;
    let report = TraceReport { system: system.name().to_string(), kind: kind.to_string(), re: v.re, im: v.im };
    let text = match cli.format {
        Format::Json => to_json(&report) + "\n",
        Format::Text if v.im == 0.0 => format!("{}\n", sci(v.re)),
        Format::Text => format!("{} {}i\n", sci(v.re), sci(v.im)),
    };
    emit(cli, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    system: String,
    suite: &'a str,
    pass: bool,
    results: &'a [PropertyResult],
}

fn cmd_verify(cli: &Cli, source: &str, suite: &str) -> Result<ExitCode> {
    let suite: Suite = suite.parse().map_err(|e| anyhow!("{e}"))?;
    let system = load_system(source)?;
    let cfg = VerifyConfig {
        grid_depth: cli.grid_depth,
        max_level: cli.max_level.unwrap_or(3),
        max_ideal_level: cli.max_ideal_level,
        postcritical_depth: cli.postcritical_depth,
        ..VerifyConfig::default()
    };
    let results = verify(&system, suite, cfg)?;
    let pass = all_pass(&results);
    let text = match cli.format {
        Format::Json => to_json(&VerifyReport { system: system.name().to_string(), suite: suite.name(), pass, results: &results }) + "\n",
        Format::Text => {
            let mut s = String::new();
            for r in &results {
                let status = if r.pass { "pass" } else { "FAIL" };
                writeln!(s, "{status} {:<48} {} <= {}", r.property, sci(r.max_defect), sci(r.tolerance)).unwrap();
            }
            writeln!(s, "{} of {} properties pass", results.iter().filter(|r| r.pass).count(), results.len()).unwrap();
            s
        }
    };
    emit(cli, &text)?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_plot(cli: &Cli, source: &str, what: PlotWhat, base: Option<&str>, level: usize, depth: usize, csv: Option<&Path>) -> Result<ExitCode> {
    let system = load_system(source)?;
    let grid = AttractorGrid::generate(&system, depth);
    let orbit = match what {
        PlotWhat::Grid => None,
        PlotWhat::Orbits => {
            let base = base.ok_or_else(|| anyhow!("--what orbits needs --base"))?;
            let b = resolve_point(&system, base)?;
            let sing = Singularity::compute(&system)?;
            Some(sing.orbit_set(&system, &b, level)?.points)
        }
    };
    let svg = plot::svg(&system, &grid, orbit.as_deref().map(|p| (level, p)));
    emit(cli, &svg)?;
    if let Some(path) = csv {
        std::fs::write(path, plot::csv(&system, &grid)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Ok(n) = std::env::var("SELFSIM_THREADS") {
        let n: usize = n.parse().map_err(|_| anyhow!("SELFSIM_THREADS must be a positive integer, got `{n}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    match &cli.command {
        Command::Analyze { system } => cmd_analyze(cli, system),
        Command::Ideals { system } => cmd_ideals(cli, system),
        Command::Trace { system, kind, element } => cmd_trace(cli, system, kind, element),
        Command::Verify { system, suite } => cmd_verify(cli, system, suite),
        Command::Plot { system, what, base, level, plot_depth, csv } => {
            cmd_plot(cli, system, *what, base.as_deref(), *level, *plot_depth, csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
