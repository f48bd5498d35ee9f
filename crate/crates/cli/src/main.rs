use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bcdg::condition::{check_condition1, check_screened, check_theorem1, equivalence_fuzz, ConditionVerdict, FuzzMode};
use bcdg::generators::FamilySpec;
use bcdg::protocol::{PlanBook, PlanError};
use bcdg::simulator::{run, Behavior, Byzantine, RunConfig, TranscriptLevel};
use bcdg::{Bit, DiGraph, NodeSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bcdg", version, about = "Byzantine consensus on directed graphs")]
struct Cli {
    /// Worker threads for the parallel scans.
    #[arg(long, global = true, env = "BCDG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph from a named family.
    Gen(GenArgs),
    /// Decide whether consensus is feasible on a graph.
    Check(CheckArgs),
    /// Run the consensus algorithm in the simulator.
    Run(RunArgs),
    /// Compare the two forms of the feasibility condition.
    Equiv(EquivArgs),
    /// Convert a graph between JSON and DOT.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    TwoClique,
    CliqueSink,
    Complete,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Fault bound (two-clique).
    #[arg(long)]
    f: Option<usize>,
    /// Clique size (clique-sink, complete).
    #[arg(long)]
    k: Option<usize>,
    /// Node count (random).
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (random).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; the JSON goes to standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a DOT file next to the output.
    #[arg(long)]
    dot: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Degree screen, then the partition scan.
    Screened,
    /// Partition scan with the propagate relation.
    Propagate,
    /// Scan with the in-neighbour counting form.
    Arrow,
}

#[derive(Args)]
struct CheckArgs {
    graph: PathBuf,
    #[arg(long)]
    f: usize,
    #[arg(long, value_enum, default_value = "screened")]
    method: Method,
    /// Print the violating partition.
    #[arg(long)]
    witness: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Silent,
    Flip,
    Equivocate,
    SplitBrain,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Summary,
    Iterations,
    Full,
}

#[derive(Args)]
struct RunArgs {
    graph: PathBuf,
    #[arg(long)]
    f: usize,
    /// Comma-separated names of the faulty nodes.
    #[arg(long, value_delimiter = ',')]
    faulty: Vec<String>,
    #[arg(long, value_enum, default_value = "silent")]
    strategy: Strategy,
    /// One bit per node in node order, e.g. `0,1,1` or `011`. Defaults to
    /// all zeros.
    #[arg(long)]
    inputs: Option<String>,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a JSON-lines transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "iterations")]
    transcript_level: Level,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EquivArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    f: usize,
    /// Every digraph on n nodes (n <= 4).
    #[arg(long, conflicts_with = "random")]
    exhaustive: bool,
    /// Seeded random digraphs.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Args)]
struct ExportArgs {
    graph: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure that should exit with status 2.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Check(a) => cmd_check(a),
        Command::Run(a) => cmd_run(a),
        Command::Equiv(a) => cmd_equiv(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_graph(path: &Path) -> Result<DiGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let g = if text.trim_start().starts_with("digraph") {
        DiGraph::from_dot(&text)
    } else {
        DiGraph::from_json(&text)
    };
    g.with_context(|| format!("cannot parse {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values serialize"));
}

fn braces(g: &DiGraph, s: NodeSet) -> String {
    format!("{{{}}}", g.names_of(s).join(","))
}

fn cmd_gen(a: GenArgs) -> Result<u8, Usage> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| anyhow!("--{flag} is required for this family"));
    let spec = match a.family {
        Family::TwoClique => FamilySpec::TwoClique { f: need(a.f, "f")? },
        Family::CliqueSink => FamilySpec::CliqueSink { k: need(a.k, "k")? },
        Family::Complete => FamilySpec::Complete { k: need(a.k, "k")? },
        Family::Random => FamilySpec::Random {
            n: need(a.n, "n")?,
            p: a.p.ok_or_else(|| anyhow!("--p is required for this family"))?,
            seed: a.seed,
        },
    };
    let g = spec.generate()?;
    let mut dot_path = None;
    match &a.out {
        Some(out) => {
            write_file(out, &g.to_json())?;
            if a.dot {
                let p = out.with_extension("dot");
                write_file(&p, &g.to_dot())?;
                dot_path = Some(p);
            }
        }
        None if a.json => {}
        None => print!("{}", g.to_json()),
    }
    if a.json {
        print_json(&json!({
            "spec": spec,
            "nodes": g.n(),
            "edges": g.edge_count(),
            "out": a.out.as_ref().map(|p| p.display().to_string()),
            "dot": dot_path.as_ref().map(|p| p.display().to_string()),
            "graph": if a.out.is_none() { serde_json::from_str::<Value>(&g.to_json())? } else { Value::Null },
        }));
    } else if let Some(out) = &a.out {
        eprintln!("wrote {} nodes, {} edges to {}", g.n(), g.edge_count(), out.display());
    }
    Ok(0)
}

fn cmd_check(a: CheckArgs) -> Result<u8, Usage> {
    let g = read_graph(&a.graph)?;
    let v: ConditionVerdict = match a.method {
        Method::Screened => check_screened(&g, a.f)?,
        Method::Propagate => check_theorem1(&g, a.f)?,
        Method::Arrow => check_condition1(&g, a.f)?,
    };
    if a.json {
        print_json(&v.to_json(&g));
    } else {
        println!("{}", if v.satisfied { "satisfied" } else { "violated" });
        println!(
            "method {}, f = {}, {} fault sets, {} examined",
            v.method.as_str(),
            v.f,
            v.fault_sets,
            v.examined
        );
        if let (true, Some(w)) = (a.witness || !v.satisfied, v.witness) {
            println!("witness {}", w.describe(&g));
        }
    }
    Ok(if v.satisfied { 0 } else { 1 })
}

fn parse_inputs(text: Option<&str>, n: usize) -> Result<Vec<Bit>> {
    let Some(text) = text else {
        return Ok(vec![Bit::Zero; n]);
    };
    let bits: Vec<Bit> = text
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(Bit::Zero),
            '1' => Ok(Bit::One),
            _ => Err(anyhow!("inputs must be 0 or 1, got {c:?}")),
        })
        .collect::<Result<_>>()?;
    if bits.len() != n {
        bail!("expected {n} inputs, got {}", bits.len());
    }
    Ok(bits)
}

fn cmd_run(a: RunArgs) -> Result<u8, Usage> {
    let g = read_graph(&a.graph)?;
    let inputs = parse_inputs(a.inputs.as_deref(), g.n())?;
    let faulty = g.set_of(&a.faulty)?;
    if faulty.len() > a.f {
        return Err(anyhow!("{} faulty nodes exceed f = {}", faulty.len(), a.f).into());
    }
    let book = match PlanBook::new(&g, a.f) {
        Ok(b) => b,
        Err(PlanError::Condition { witness, .. }) => {
            if a.json {
                print_json(&json!({"refused": true, "f": a.f, "witness": witness.to_json(&g)}));
            } else {
                println!("refused: the graph does not admit consensus with f = {}", a.f);
                println!("witness {}", witness.describe(&g));
            }
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let behavior = match a.strategy {
        Strategy::Silent => Behavior::Silent,
        Strategy::Flip => Behavior::Flip,
        Strategy::Equivocate => Behavior::Equivocate,
        Strategy::SplitBrain => Behavior::SplitBrain { left: None },
        Strategy::Random => Behavior::Random { seed: a.seed },
    };
    let level = match a.transcript_level {
        Level::Summary => TranscriptLevel::Summary,
        Level::Iterations => TranscriptLevel::Iterations,
        Level::Full => TranscriptLevel::Full,
    };
    let mut config = match &a.transcript {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            RunConfig::writer(level, std::io::BufWriter::new(file))
        }
        None => RunConfig::default(),
    };
    let mut adversary = Byzantine::new(faulty, behavior);
    let report = run(&book, &inputs, &mut adversary, &mut config)?;
    let passed = report.monitors.all_passed();
    if a.json {
        let mut v = report.to_json(&g);
        v["strategy"] = json!(adversary.behavior().name());
        print_json(&v);
    } else {
        for (v, b) in report.fault_free() {
            println!("{} {}", g.name(v), b.as_char());
        }
        if !faulty.is_empty() {
            println!("faulty {} ({})", braces(&g, faulty), adversary.behavior().name());
        }
        println!("rounds {}, messages {}", report.rounds, report.messages);
        if passed {
            println!("monitors passed");
        } else {
            println!("monitors FAILED: {}", report.monitors.first_failure());
        }
    }
    Ok(if passed { 0 } else { 1 })
}

fn cmd_equiv(a: EquivArgs) -> Result<u8, Usage> {
    let mode = match (a.exhaustive, a.random) {
        (true, _) => FuzzMode::Exhaustive,
        (false, true) => FuzzMode::Random {
            trials: a.trials,
            seed: a.seed,
        },
        (false, false) => return Err(anyhow!("pick --exhaustive or --random").into()),
    };
    let r = equivalence_fuzz(a.n, a.f, mode)?;
    if a.json {
        print_json(&r.to_json());
    } else {
        println!(
            "n = {}, f = {}: {} graphs, {} satisfied, {} disagreements",
            r.n, r.f, r.graphs, r.satisfied, r.disagreements
        );
        if let Some(g) = &r.first_disagreement {
            print!("first disagreement: {}", g.to_json());
        }
    }
    Ok(if r.disagreements == 0 { 0 } else { 1 })
}

fn cmd_export(a: ExportArgs) -> Result<u8, Usage> {
    let g = read_graph(&a.graph)?;
    let text = match a.format {
        Format::Json => g.to_json(),
        Format::Dot => g.to_dot(),
    };
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}
