use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wham_core::bench::{bench, fit_slopes, BenchConfig};
use wham_core::emit::{emit_rows, report_json, rows_json, write_csv, Format};
use wham_core::family::{analytic_size, gen_family, FamilyKind};
use wham_core::machine::{dump_trace, run_machine, MachineId, RunOptions};
use wham_core::metrics::{check_bounds, check_segments};
use wham_core::strategy::{ri_normalize, wh_normalize, Normalization, ReduceOptions};
use wham_core::suite::{parse_suites, run_suites, SuiteConfig};
use wham_core::term::{free_vars, parse, print, Term};

const STACK: usize = 256 << 20;

const GRAMMAR: &str = "\
term grammar:
  term  = lam | app
  lam   = (\"\\\" | \"λ\") ident \".\" term
  app   = atom+            (left-associative)
  atom  = ident | \"(\" term \")\"
  ident = [A-Za-z_][A-Za-z0-9_']*
  comments run from \"--\" to the end of the line";

#[derive(Parser)]
#[command(name = "wham", version, about = "Abstract machines for weak head reduction, with metered costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a machine (or a reference reducer) on one term.
    Run(RunArgs),
    /// Build a member of a term family.
    Family(FamilyArgs),
    /// Run machines over family ranges and report costs.
    Bench(BenchArgs),
    /// Run conformance, invariant and bound suites.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// search, micro, mam, mam-eff, kam-list, kam-array, ref-wh or ref-ri.
    #[arg(long, default_value = "mam")]
    machine: String,
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    expr: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    fuel: u64,
    /// Write the transition trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the report, with bound checks, as JSON to this file.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Refuse terms with free variables.
    #[arg(long)]
    require_closed: bool,
}

#[derive(Args)]
struct FamilyArgs {
    /// t, s, u, r, ui or chain.
    #[arg(long)]
    name: String,
    #[arg(long)]
    n: u32,
    /// Print the term (the default).
    #[arg(long, conflicts_with = "size_only")]
    print: bool,
    /// Print only the term's size, computed without building it.
    #[arg(long)]
    size_only: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated family names.
    #[arg(long, value_delimiter = ',', default_value = "ui")]
    families: Vec<String>,
    /// Comma-separated machine names.
    #[arg(long, value_delimiter = ',', default_value = "search,micro,mam,mam-eff,kam-list,kam-array")]
    machines: Vec<String>,
    #[arg(long, default_value_t = 1)]
    n_min: u32,
    #[arg(long, default_value_t = 10)]
    n_max: u32,
    #[arg(long, default_value_t = 1_000_000)]
    fuel: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Args)]
struct CheckArgs {
    /// all, families, conformance, invariants, bounds or kam.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 42)]
    corpus_seed: u64,
    #[arg(long, default_value_t = 500)]
    corpus_size: usize,
    #[arg(long, default_value_t = 10_000)]
    fuel: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

/// Failures of the command itself, as opposed to a failing check.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn load_term(args: &RunArgs) -> std::result::Result<Term, Failure> {
    let src = match (&args.expr, &args.file) {
        (Some(e), _) => e.clone(),
        (None, Some(p)) => fs::read_to_string(p)
            .with_context(|| format!("cannot read {}", p.display()))
            .map_err(Failure::Runtime)?,
        (None, None) => return Err(Failure::Usage("one of --expr or --file is required".into())),
    };
    let t = parse(&src).map_err(|e| Failure::Usage(format!("{e}\n\n{GRAMMAR}")))?;
    if args.require_closed {
        let fv = free_vars(&t);
        if !fv.is_empty() {
            let names: Vec<String> = fv.iter().map(|x| x.name().to_string()).collect();
            return Err(Failure::Usage(format!("term has free variables: {}", names.join(", "))));
        }
    }
    Ok(t)
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn reference_json(name: &str, n: &Normalization) -> serde_json::Value {
    let last = &n.derivation.last;
    json!({
        "machine": name,
        "term_size": n.derivation.initial.size(),
        "steps": n.derivation.len(),
        "status": format!("{:?}", n.outcome),
        "result": print(last),
        "result_size": last.size(),
    })
}

fn run(args: RunArgs) -> Outcome {
    let t = load_term(&args)?;
    let reference = match args.machine.as_str() {
        "ref-wh" => Some(wh_normalize(&t, &ReduceOptions::with_fuel(args.fuel))),
        "ref-ri" => Some(ri_normalize(&t, &ReduceOptions::with_fuel(args.fuel))),
        _ => None,
    };
    if let Some(r) = reference {
        let v = reference_json(&args.machine, &r);
        match args.format {
            OutFormat::Text => println!("{:?} after {} steps: {}", r.outcome, r.derivation.len(), print(&r.derivation.last)),
            _ => println!("{v}"),
        }
        if let Some(p) = &args.metrics {
            write_file(p, &format!("{v:#}\n"))?;
        }
        return Ok(true);
    }
    let machine: MachineId = args.machine.parse().map_err(|e| Failure::Usage(format!("{e}")))?;
    let opts = RunOptions {
        fuel: args.fuel,
        record_trace: args.trace.is_some() || args.metrics.is_some(),
        ..RunOptions::default()
    };
    let (report, trace, _) = run_machine(machine, &t, &opts);
    match args.format {
        OutFormat::Json => println!("{}", report_json(&report)),
        OutFormat::Csv => {
            println!("machine,term_size,beta,search,varsub,length,cost_units,peak_state,status");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                machine,
                report.term_size,
                report.beta_count,
                report.tallies.search,
                report.tallies.varsub,
                report.length,
                report.cost_units,
                report.peak_state_size,
                report.status
            );
        }
        OutFormat::Text => {
            println!("{} after {} transitions, β={}", report.status, report.length, report.beta_count);
            println!("cost {} (peak state {})", report.cost_units, report.peak_state_size);
            match (&report.decoded, report.decoded_size) {
                (Some(d), _) => println!("result {}", print(d)),
                (None, Some(n)) => println!("result of size {n} not materialised"),
                _ => {}
            }
        }
    }
    if let Some(p) = &args.trace {
        write_file(p, &dump_trace(&trace))?;
    }
    if let Some(p) = &args.metrics {
        let size = t.size() as u64;
        let mut checks = check_bounds(&report, size, Some(1));
        checks.extend(check_segments(machine, &trace, size));
        let mut v = report_json(&report);
        v["bounds"] = checks
            .iter()
            .map(|c| json!({"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "pass": c.pass}))
            .collect();
        write_file(p, &format!("{v:#}\n"))?;
    }
    Ok(true)
}

fn family(args: FamilyArgs) -> Outcome {
    let kind: FamilyKind = args.name.parse().map_err(|e| Failure::Usage(format!("{e}")))?;
    if args.size_only {
        println!("{}", analytic_size(kind, args.n));
        return Ok(true);
    }
    let t = gen_family(kind, args.n).map_err(|e| Failure::Runtime(anyhow!(e)))?;
    println!("{}", print(&t));
    Ok(true)
}

fn bench_cmd(args: BenchArgs) -> Outcome {
    let families = args
        .families
        .iter()
        .map(|s| s.parse::<FamilyKind>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(format!("{e}")))?;
    let machines = args
        .machines
        .iter()
        .map(|s| s.parse::<MachineId>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(format!("{e}")))?;
    if args.n_min > args.n_max {
        return Err(Failure::Usage("--n-min exceeds --n-max".into()));
    }
    let cfg = BenchConfig {
        families,
        machines,
        n_min: args.n_min,
        n_max: args.n_max,
        fuel: args.fuel,
    };
    let rows = bench(&cfg).map_err(|e| Failure::Runtime(anyhow!(e)))?;
    let fits = fit_slopes(&rows);
    let format = match args.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
        OutFormat::Text => return Err(Failure::Usage("bench writes csv or json".into())),
    };
    match &args.out {
        Some(p) => emit_rows(&rows, &fits, format, p).map_err(|e| Failure::Runtime(anyhow!(e)))?,
        None => match format {
            Format::Csv => write_csv(&rows, io::stdout().lock()).map_err(|e| Failure::Runtime(anyhow!(e)))?,
            Format::Json => println!("{:#}", rows_json(&rows, &fits)),
        },
    }
    let mut err = io::stderr().lock();
    for f in &fits {
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            err,
            "{} on {}: {} points, log-log slope {}, log2 slope {}",
            f.machine,
            f.family,
            f.points,
            show(f.loglog),
            show(f.semilog2)
        );
    }
    let flagged = rows.iter().filter(|r| r.is_flagged()).count();
    if flagged > 0 {
        let _ = writeln!(err, "{flagged} rows did not reach a final state");
    }
    Ok(true)
}

fn check(args: CheckArgs) -> Outcome {
    let suites = parse_suites(&args.suite).map_err(|e| Failure::Usage(format!("{e}")))?;
    let cfg = SuiteConfig {
        corpus_seed: args.corpus_seed,
        corpus_count: args.corpus_size,
        fuel: args.fuel,
        ..SuiteConfig::default()
    };
    println!("corpus seed {}, {} terms", cfg.corpus_seed, cfg.corpus_count);
    let outcomes = run_suites(&suites, &cfg);
    for o in &outcomes {
        println!("{o}");
    }
    Ok(outcomes.iter().all(|o| o.pass))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Family(a) => family(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Check(a) => check(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // reduction and decoding recurse on term depth
    let worker = std::thread::Builder::new().stack_size(STACK).spawn(move || {
        rayon::ThreadPoolBuilder::new().stack_size(STACK).build_global().ok();
        dispatch(cli)
    });
    let result = match worker.map(|h| h.join()) {
        Ok(Ok(r)) => r,
        _ => Err(Failure::Runtime(anyhow!("worker thread failed"))),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nsee `wham --help` for the available flags");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
