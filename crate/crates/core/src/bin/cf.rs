use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;

use cf_core::bounds::{check_lower_bound, homogeneous_bottom_fanin_bound, Target, TargetFamily};
use cf_core::circuit::{
    count_parse_trees_at, enumerate_parse_trees_at, parse_circuit, print_circuit,
};
use cf_core::field::{verify_equivalent, CheckConfig, DEFAULT_PRIME, DEFAULT_SEED, DEFAULT_TRIALS};
use cf_core::generators::{generate, Family, GeneratorSpec};
use cf_core::passes::{Pipeline, PipelineConfig, Stage};
use cf_core::poly::DEFAULT_TERM_BUDGET;
use cf_core::{Circuit, Error};

const PARSE_TREE_REPORT_LIMIT: u64 = 1_000_000_000;

#[derive(Parser)]
#[command(
    name = "cf",
    version,
    about = "Arithmetic circuit depth reduction toolkit"
)]
struct Cli {
    #[command(flatten)]
    check: CheckArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CheckArgs {
    /// Prime modulus for randomized checks (below 2^63).
    #[arg(long, global = true, default_value_t = DEFAULT_PRIME)]
    prime: u64,
    /// Random evaluation points per randomized check.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Seed for randomized checks and random generation.
    #[arg(long, global = true, env = "CF_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Largest number of terms an exact expansion may hold.
    #[arg(long, global = true, default_value_t = DEFAULT_TERM_BUDGET)]
    term_budget: usize,
}

impl CheckArgs {
    fn config(&self) -> CheckConfig {
        CheckConfig {
            prime: self.prime,
            trials: self.trials,
            seed: self.seed,
            term_budget: self.term_budget,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Size, degree, depth, gate counts and parse-tree count of a circuit.
    Stats { file: PathBuf },
    /// Write a reference circuit.
    Gen(GenArgs),
    /// Run a list of passes and report every bound they promise.
    Transform(TransformArgs),
    /// Decide whether two circuits compute the same polynomials.
    Verify { first: PathBuf, second: PathBuf },
    /// Lower-bound certificates for a ΣΠΣΠ circuit computing Perm_n or Det_n.
    Bounds(BoundsArgs),
    /// Count, and optionally list, the parse trees of each output.
    ParseTrees {
        file: PathBuf,
        /// List up to this many trees with their monomials.
        #[arg(long)]
        list: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Perm,
    Det,
    Comb,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: FamilyArg,
    /// Matrix size, comb length, or number of variables.
    #[arg(long, short)]
    n: u32,
    /// Gate cap for random circuits, inputs included.
    #[arg(long, default_value_t = 12)]
    gates: usize,
    #[arg(long, default_value_t = 6)]
    max_degree: u32,
    #[arg(long, default_value_t = 3)]
    max_fanin: usize,
    /// Pad sums so every random circuit is homogeneous.
    #[arg(long)]
    homogeneous: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    file: PathBuf,
    /// Comma-separated passes: binarize, homogenize, normalize, balance,
    /// depth4, reduce.
    #[arg(long, value_delimiter = ',', default_value = "reduce")]
    pass: Vec<String>,
    /// Split parameter for depth4, 0 < a < d.
    #[arg(long)]
    a: Option<u32>,
    /// Where to write the transformed circuit.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the JSON-lines reports, in addition to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Perm,
    Det,
}

#[derive(Args)]
struct BoundsArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "perm")]
    target: TargetArg,
    /// Matrix size; inferred from the variable space when omitted.
    #[arg(long, short)]
    n: Option<u32>,
}

/// Outcome of a command: whether every requested check held.
type Outcome = Result<bool, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.check.config();
    let result = match &cli.command {
        Command::Stats { file } => stats(file),
        Command::Gen(args) => gen(args, cfg.seed),
        Command::Transform(args) => transform(args, &cfg),
        Command::Verify { first, second } => verify(first, second, &cfg),
        Command::Bounds(args) => bounds(args, &cfg),
        Command::ParseTrees { file, list } => parse_trees(file, *list),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit<T: Serialize>(value: &T) -> String {
    let line = serde_json::to_string(value).expect("reports serialize");
    println!("{line}");
    line
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn read_circuit(path: &Path) -> Result<Circuit, Error> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_circuit(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn stats(file: &Path) -> Outcome {
    let c = read_circuit(file)?;
    let s = c.stats();
    let trees: BigUint = c
        .outputs()
        .iter()
        .map(|o| count_parse_trees_at(&c, *o))
        .sum::<Result<BigUint, Error>>()?;
    let shown = (trees <= BigUint::from(PARSE_TREE_REPORT_LIMIT)).then(|| trees.to_string());
    emit(&json!({
        "command": "stats",
        "file": file.display().to_string(),
        "stats": s,
        "parse_trees": shown,
    }));
    eprintln!(
        "s = {}, d = {}, n = {}, depth = {}, homogeneous = {}, parse trees = {}",
        s.size,
        s.degree,
        s.vars,
        s.depth,
        s.homogeneous,
        shown.as_deref().unwrap_or("> 10^9")
    );
    Ok(true)
}

fn gen(args: &GenArgs, seed: u64) -> Outcome {
    let family = match args.family {
        FamilyArg::Perm => Family::Perm,
        FamilyArg::Det => Family::Det,
        FamilyArg::Comb => Family::Comb,
        FamilyArg::Random => Family::Random,
    };
    let spec = GeneratorSpec {
        family,
        n: args.n,
        seed: Some(seed),
        gates: args.gates,
        max_degree: args.max_degree,
        max_fanin: args.max_fanin,
        homogeneous: args.homogeneous,
    };
    let c = generate(&spec)?;
    let text = print_circuit(&c);
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            emit(&json!({
                "command": "gen",
                "spec": spec,
                "out": path.display().to_string(),
                "stats": c.stats(),
            }));
        }
        None => print!("{text}"),
    }
    eprintln!("generated {} gates, degree {}", c.size(), c.degree());
    Ok(true)
}

fn transform(args: &TransformArgs, cfg: &CheckConfig) -> Outcome {
    if args.a == Some(0) {
        return Err(Error::Parameter(
            "split parameter a must be positive".into(),
        ));
    }
    let stages: Vec<Stage> = args
        .pass
        .iter()
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()?;
    let c = read_circuit(&args.file)?;
    let config = PipelineConfig {
        check: *cfg,
        a: args.a,
        verify: true,
    };
    if stages
        .iter()
        .any(|s| matches!(s, Stage::Depth4 | Stage::Reduce))
    {
        config.validate_a(c.degree())?;
    }
    let mut pipeline = Pipeline::new(c, config);
    let mut lines = Vec::new();
    let mut all_ok = true;
    for stage in stages {
        let report = pipeline.run(stage).map_err(|e| stage_error(stage, e))?;
        let ok = report.ok();
        all_ok &= ok;
        eprintln!(
            "{stage}: size {} -> {}, bounds {}, equivalence {}",
            report.input.size,
            report.output.size,
            if report.bound_satisfied {
                "ok"
            } else {
                "VIOLATED"
            },
            match &report.equivalence {
                Some(e) if e.equal => "ok",
                Some(_) => "FAILED",
                None => "skipped",
            }
        );
        lines.push(emit(
            &json!({ "command": "transform", "ok": ok, "report": report }),
        ));
    }
    let out = pipeline.circuit();
    if let Some(path) = &args.out {
        write_file(path, &print_circuit(&out))?;
    }
    if let Some(path) = &args.report {
        let mut body = lines.join("\n");
        body.push('\n');
        write_file(path, &body)?;
    }
    eprintln!(
        "{}",
        if all_ok {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
    Ok(all_ok)
}

fn stage_error(stage: Stage, e: Error) -> Error {
    match e {
        Error::Contract { .. } | Error::Parameter(_) => e,
        other => Error::Config(format!("{stage}: {other}")),
    }
}

fn verify(first: &Path, second: &Path, cfg: &CheckConfig) -> Outcome {
    let a = read_circuit(first)?;
    let b = read_circuit(second)?;
    let report = verify_equivalent(&a, &b, cfg)?;
    emit(&json!({
        "command": "verify",
        "first": first.display().to_string(),
        "second": second.display().to_string(),
        "equivalence": report,
    }));
    eprintln!(
        "{} ({:?})",
        if report.equal { "equal" } else { "not equal" },
        report.method
    );
    Ok(report.equal)
}

fn bounds(args: &BoundsArgs, cfg: &CheckConfig) -> Outcome {
    let c = read_circuit(&args.file)?;
    let n = match args.n {
        Some(n) => n,
        None => {
            let space = c.var_space() as u32;
            let root = (space as f64).sqrt().round() as u32;
            if root * root != space {
                return Err(Error::Parameter(format!(
                    "cannot infer n from {space} variables; pass --n"
                )));
            }
            root.max(1)
        }
    };
    let family = match args.target {
        TargetArg::Perm => TargetFamily::Perm,
        TargetArg::Det => TargetFamily::Det,
    };
    let report = check_lower_bound(&c, Target { family, n }, cfg)?;
    emit(&json!({ "command": "bounds", "kind": "profile", "profile": report.profile }));
    emit(&json!({ "command": "bounds", "kind": "equivalence", "equivalence": report.equivalence }));
    let mut ok = report.satisfied;
    for cert in &report.certificates {
        emit(&json!({ "command": "bounds", "kind": "lower_bound", "certificate": cert }));
    }
    if c.is_homogeneous() {
        for cert in homogeneous_bottom_fanin_bound(&c, n)? {
            ok &= cert.satisfied;
            emit(&json!({ "command": "bounds", "kind": "structural", "certificate": cert }));
        }
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    eprintln!(
        "s1 = {}, t3 = {}: {}",
        report.profile.s1,
        report.profile.t3,
        if ok {
            "all certificates satisfied"
        } else {
            "some certificates failed"
        }
    );
    Ok(ok)
}

fn parse_trees(file: &Path, list: Option<u64>) -> Outcome {
    let c = read_circuit(file)?;
    for (i, o) in c.outputs().iter().enumerate() {
        let count = count_parse_trees_at(&c, *o)?;
        emit(&json!({
            "command": "parse-trees",
            "output": i,
            "count": count.to_string(),
        }));
        eprintln!("output {i}: {count} parse trees");
        if let Some(limit) = list {
            let trees = enumerate_parse_trees_at(&c, *o, u64::MAX, &|_| false)?;
            for (k, tree) in trees.take(limit as usize).enumerate() {
                let m = tree.monomial(&c)?;
                emit(&json!({
                    "command": "parse-trees",
                    "output": i,
                    "tree": k,
                    "leaves": tree.leaves().count(),
                    "monomial": m.to_string(),
                }));
            }
        }
    }
    Ok(true)
}
