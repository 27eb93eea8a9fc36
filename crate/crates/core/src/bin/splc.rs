use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use splc_core::analysis::{
    check_enough_demand, check_no_production_out_of_nothing, check_strong_connectivity,
    compute_price_floor, compute_production_bound,
};
use splc_core::equilibrium::{
    parse_equilibrium, serialize_equilibrium, solve_market, verify_equilibrium, SolveError, SolveOptions,
    SolveOutcome,
};
use splc_core::formulation::build_nhad_lcp;
use splc_core::harness::{enumerate_equilibria, generate_random_market, run_benchmark, GenParams};
use splc_core::lcp::DEFAULT_MAX_ITERATIONS;
use splc_core::model::{parse_market, rational_string, serialize_market, validate_market, Market};
use splc_core::reduction::exchange_to_production;

#[derive(Parser)]
#[command(name = "splc", version, about = "Exact equilibria of SPLC production markets via Lemke's algorithm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Shape {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    goods: usize,
    #[arg(long)]
    firms: usize,
    #[arg(long)]
    segs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Shape {
    fn params(self) -> GenParams {
        GenParams::new(self.agents, self.goods, self.firms, self.segs, self.seed)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the three sufficiency checks; exit 0 iff all pass.
    Check { market: PathBuf },
    /// Compute an equilibrium.
    Solve {
        market: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iters: u64,
        /// Print one line per pivot on stderr.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve even if some good lacks demand.
        #[arg(long)]
        waive_demand: bool,
        /// Write the complementarity system to this file.
        #[arg(long)]
        dump_lcp: Option<PathBuf>,
    },
    /// Check an equilibrium document against a market; exit 0 iff it passes.
    Verify { market: PathBuf, equilibrium: PathBuf },
    /// Turn an exchange market into a production market.
    Reduce {
        market: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the good/firm map (default: next to --out, else stderr).
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Generate a random market.
    Gen {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve many random markets and report iteration statistics.
    Bench {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List every equilibrium of a small market, up to scaling.
    Enumerate { market: PathBuf },
}

const EXIT_ERROR: u8 = 1;
const EXIT_PRECHECK: u8 = 2;
const EXIT_RAY: u8 = 3;
const EXIT_LIMIT: u8 = 4;

struct Failed(u8, String);

fn fail(msg: impl ToString) -> Failed {
    Failed(EXIT_ERROR, msg.to_string())
}

fn load_market(path: &Path) -> Result<Market, Failed> {
    let bytes = fs::read(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    parse_market(&bytes).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failed> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| fail(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn require_valid(m: &Market) -> Result<(), Failed> {
    let report = validate_market(m);
    if report.passed() {
        return Ok(());
    }
    let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
    Err(fail(format!("invalid market:\n  {}", lines.join("\n  "))))
}

fn check(path: &Path) -> Result<u8, Failed> {
    let m = load_market(path)?;
    require_valid(&m)?;
    let capped = compute_production_bound(&m).capped;
    let reports = [
        check_no_production_out_of_nothing(&m),
        check_strong_connectivity(&m),
        check_enough_demand(&capped),
    ];
    let passed = reports.iter().all(|r| r.passed);
    let doc = json!({
        "passed": passed,
        "checks": reports.iter().map(|r| r.to_json(&m)).collect::<Vec<_>>(),
    });
    print!("{}", pretty(&doc));
    Ok(if passed { 0 } else { EXIT_ERROR })
}

fn solve(
    path: &Path,
    opts: SolveOptions,
    out: Option<&Path>,
    dump: Option<&Path>,
) -> Result<u8, Failed> {
    let m = load_market(path)?;
    if let Some(dump) = dump {
        require_valid(&m)?;
        let capped = compute_production_bound(&m).capped;
        let floor = compute_price_floor(&capped).map_err(fail)?;
        let lcp = build_nhad_lcp(&capped, &floor).map_err(fail)?;
        emit(Some(dump), &lcp.instance.dump())?;
    }
    let report = match solve_market(&m, &opts) {
        Ok(r) => r,
        Err(SolveError::RayDespiteConditions(ray)) => {
            return Err(fail(format!(
                "internal error: secondary ray ({}) on a market meeting every sufficiency condition",
                ray.case
            )))
        }
        Err(e) => return Err(fail(e)),
    };
    for line in &report.trace {
        eprintln!("{line}");
    }
    match report.outcome {
        SolveOutcome::Equilibrium(e) => {
            emit(out, &serialize_equilibrium(&m, &e))?;
            eprintln!("iterations: {}", report.iterations);
            Ok(0)
        }
        SolveOutcome::Failure(f) => {
            eprintln!("precheck failed: {f}");
            if let splc_core::equilibrium::Failure::Check(c) = &f {
                print!("{}", pretty(&c.to_json(&m)));
            }
            Ok(EXIT_PRECHECK)
        }
        SolveOutcome::SecondaryRay(ray) => {
            let names = |v: &[usize], f: &dyn Fn(usize) -> String| v.iter().map(|&x| f(x)).collect::<Vec<_>>();
            let doc = json!({
                "outcome": "secondary ray",
                "case": ray.case.to_string(),
                "fixedPriceGoods": names(&ray.fixed_goods, &|j| m.goods[j].clone()),
                "firmsMakingThem": names(&ray.fixed_firms, &|f| m.firms[f].name.clone()),
                "agentsWantingThem": names(&ray.wanting_agents, &|i| m.agents[i].name.clone()),
                "vertexZ": rational_string(&ray.ray.vertex_z),
                "iterations": report.iterations,
            });
            print!("{}", pretty(&doc));
            Ok(EXIT_RAY)
        }
        SolveOutcome::IterationLimit => {
            eprintln!("iteration limit {} reached", opts.max_iterations);
            Ok(EXIT_LIMIT)
        }
    }
}

fn verify(market: &Path, eq: &Path) -> Result<u8, Failed> {
    let m = load_market(market)?;
    let bytes = fs::read(eq).map_err(|e| fail(format!("{}: {e}", eq.display())))?;
    let e = parse_equilibrium(&m, &bytes).map_err(|e| fail(format!("{}: {e}", eq.display())))?;
    let report = verify_equilibrium(&m, &e);
    if report.passed() {
        println!("pass");
        return Ok(0);
    }
    for issue in &report.issues {
        println!("{issue}");
    }
    Ok(EXIT_ERROR)
}

fn reduce(path: &Path, out: Option<&Path>, map: Option<&Path>) -> Result<u8, Failed> {
    let m = load_market(path)?;
    let (reduced, rmap) = exchange_to_production(&m).map_err(fail)?;
    emit(out, &serialize_market(&reduced))?;
    let map_text = pretty(&rmap.to_json(&reduced));
    let map_path = map.map(Path::to_path_buf).or_else(|| {
        out.map(|o| {
            let mut name = o.as_os_str().to_owned();
            name.push(".map.json");
            PathBuf::from(name)
        })
    });
    match map_path {
        Some(p) => emit(Some(&p), &map_text)?,
        None => eprint!("{map_text}"),
    }
    Ok(0)
}

fn gen(shape: Shape, out: Option<&Path>) -> Result<u8, Failed> {
    let m = generate_random_market(&shape.params()).map_err(fail)?;
    emit(out, &serialize_market(&m))?;
    Ok(0)
}

fn bench(shape: Shape, count: usize, csv: Option<&Path>) -> Result<u8, Failed> {
    let stats = run_benchmark(&shape.params(), count);
    if let Some(p) = csv {
        let file = fs::File::create(p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
        stats.write_csv(std::io::BufWriter::new(file)).map_err(fail)?;
    }
    print!("{}", pretty(&stats.to_json()));
    Ok(if stats.failures == 0 { 0 } else { EXIT_ERROR })
}

fn enumerate(path: &Path) -> Result<u8, Failed> {
    let m = load_market(path)?;
    let e = enumerate_equilibria(&m).map_err(fail)?;
    let equilibria: Vec<Value> = e
        .normalized_prices()
        .iter()
        .map(|p| {
            let prices: serde_json::Map<String, Value> = m
                .goods
                .iter()
                .zip(p)
                .map(|(g, v)| (g.clone(), Value::String(rational_string(v))))
                .collect();
            json!({ "prices": prices })
        })
        .collect();
    let doc = json!({
        "count": e.count(),
        "equilibria": equilibria,
        "degenerate": e.degenerate,
        "dimension": e.dimension,
    });
    print!("{}", pretty(&doc));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { market } => check(&market),
        Command::Solve { market, max_iters, trace, out, waive_demand, dump_lcp } => {
            let opts = SolveOptions { max_iterations: max_iters, waive_enough_demand: waive_demand, trace };
            solve(&market, opts, out.as_deref(), dump_lcp.as_deref())
        }
        Command::Verify { market, equilibrium } => verify(&market, &equilibrium),
        Command::Reduce { market, out, map } => reduce(&market, out.as_deref(), map.as_deref()),
        Command::Gen { shape, out } => gen(shape, out.as_deref()),
        Command::Bench { shape, count, csv } => bench(shape, count, csv.as_deref()),
        Command::Enumerate { market } => enumerate(&market),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failed(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
