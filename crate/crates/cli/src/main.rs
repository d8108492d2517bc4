//! `hybridgen` command-line tool.
//!
//! Exit status: 0 on success, 1 when a verification or comparison fails,
//! 2 on usage errors (bad flags, invalid parameters, malformed input).

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridgen::analytics::{
    allocation_boundaries, allocation_table, cluster_matrix, cluster_table, factory_probs,
    factory_sizing, factory_success_with, linspace, m_opt, scheme_table, CLUSTER_QUANTITIES,
    DEFAULT_ANCILLA_CAP, DEFAULT_M_CAP,
};
use hybridgen::emitter::{
    compile_boosted_pair, compile_cluster_2d, compile_cluster_nd, compile_encoded_ring,
    compile_ghz, compile_linear, compile_ring,
};
use hybridgen::montecarlo::{estimate, expected_success, LossModel, DEFAULT_TRIALS};
use hybridgen::table::{Cell, Table};
use hybridgen::verify::{run_suite, VerifyConfig};
use hybridgen::{Error, GenerationPlan};

#[derive(Parser)]
#[command(
    name = "hybridgen",
    version,
    about = "Photonic graph-state generation with boosted fusion"
)]
struct Cli {
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "HYBRIDGEN_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write rate and success-probability tables.
    Rates(RatesArgs),
    /// Compile a generation plan to a JSON-lines file.
    Plan(PlanArgs),
    /// Monte Carlo success rate of a plan under photon loss.
    Simulate(SimulateArgs),
    /// Success probability and sizing of the encoded-ring factories.
    Factory(FactoryArgs),
    /// Check every graph rewrite against the statevector oracle.
    Verify(VerifyArgs),
    /// Monte Carlo estimate of a plan against its closed form.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableSet {
    /// Boosted fusion success and the optimal allocation against eta.
    #[value(alias = "5")]
    Allocation,
    /// 2D cluster success and rate ratios over n1 x n2.
    #[value(alias = "6")]
    Cluster,
    /// Encoded-ring rates of the emitter and all-photonic schemes.
    #[value(alias = "9")]
    Schemes,
}

#[derive(Args)]
struct RatesArgs {
    /// Table set to produce.
    #[arg(long, value_enum)]
    figure: TableSet,
    #[arg(long)]
    eta_min: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    /// Number of eta grid points.
    #[arg(long)]
    steps: Option<usize>,
    /// Allocations listed as separate columns in the allocation table.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3, 4])]
    fixed_m: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_M_CAP)]
    m_cap: u32,
    /// Cluster sizes, used for both n1 and n2 (`a..b` or a list).
    #[arg(long, default_value = "3..8", value_parser = parse_sizes)]
    sizes: Sizes,
    /// Separate n2 sizes for the cluster tables.
    #[arg(long, value_parser = parse_sizes)]
    n2_sizes: Option<Sizes>,
    /// Loss values for the cluster tables.
    #[arg(long, value_delimiter = ',', default_values_t = [0.90, 0.95, 0.99])]
    etas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    t_emit: f64,
    #[arg(long, default_value_t = 0.0)]
    t_h: f64,
    #[arg(long, default_value_t = DEFAULT_ANCILLA_CAP)]
    ancilla_cap: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Debug)]
struct Sizes(Vec<u64>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
        let b: u64 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|e| format!("{b}: {e}"))?;
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(Sizes((a..=b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("{x}: {e}")))
        .collect::<Result<_, _>>()
        .map(Sizes)
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("{s} is not a whole number")),
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(value_enum)]
    family: Family,
    /// Vertex sizes of a linear cluster, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Photons of a GHZ state.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Cluster shape, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Photons per side of each boosted fusion.
    #[arg(long)]
    m: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Linear,
    Ghz,
    #[value(name = "cluster2d")]
    Cluster2d,
    #[value(name = "clusterNd", alias = "cluster-nd")]
    ClusterNd,
    Ring,
    EncodedRing,
    BoostedPair,
}

#[derive(Args)]
struct SimArgs {
    /// Per-photon detection probability.
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = DEFAULT_TRIALS, value_parser = parse_count)]
    trials: u64,
    #[arg(long, env = "HYBRIDGEN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    substream: u64,
}

#[derive(Args)]
struct SimulateArgs {
    plan: PathBuf,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FactoryArgs {
    #[arg(long, default_value_t = 6)]
    k: u64,
    #[arg(long, default_value_t = 4)]
    n1: u64,
    #[arg(long, default_value_t = 0.95)]
    eta: f64,
    /// Photons per fusion side; the optimum for `eta` when absent.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Count emission loss of every ring photon in the ring factory.
    #[arg(long)]
    strict: bool,
    /// Ring-factory copies; the sizing estimate when absent.
    #[arg(long)]
    na: Option<u64>,
    /// GHZ-factory copies; the sizing estimate when absent.
    #[arg(long)]
    nb: Option<u64>,
    /// Sweep one supply, e.g. `NA=1..200` or `NB=100..4000`.
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<Sweep>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Sweep {
    ring: bool,
    values: Vec<u64>,
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (key, range) = s.split_once('=').ok_or("expected NA=a..b or NB=a..b")?;
    let ring = match key.to_ascii_uppercase().as_str() {
        "NA" => true,
        "NB" => false,
        _ => return Err(format!("unknown sweep variable {key}")),
    };
    Ok(Sweep {
        ring,
        values: parse_sizes(range)?.0,
    })
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 8)]
    max_qubits: usize,
    #[arg(long, default_value_t = 500)]
    cases: usize,
    #[arg(long, env = "HYBRIDGEN_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    plan: PathBuf,
    #[command(flatten)]
    sim: SimArgs,
    /// Further eta values, run after `--eta`.
    #[arg(long, value_delimiter = ',')]
    more_etas: Vec<f64>,
    /// Width of the accepted interval in standard deviations.
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Check(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::MalformedPlan(_)
            | Error::Parse(_)
            | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn resolve(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

/// Writes to `path` under the output directory, or to stdout.
fn emit(out_dir: &Path, path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => {
            let p = resolve(out_dir, p);
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(&p, text)?;
            eprintln!("wrote {}", p.display());
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render(t: &Table, f: Format) -> String {
    match f {
        Format::Csv => t.to_csv(),
        Format::Json => t.to_json() + "\n",
    }
}

fn eta_grid(a: &RatesArgs, lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    linspace(
        a.eta_min.unwrap_or(lo),
        a.eta_max.unwrap_or(hi),
        a.steps.unwrap_or(steps),
    )
}

fn cmd_rates(out_dir: &Path, a: &RatesArgs) -> Outcome {
    let ext = a.format.ext();
    let mut files: Vec<(String, Table)> = Vec::new();
    match a.figure {
        TableSet::Allocation => {
            let etas = eta_grid(a, 0.5, 1.0, 200);
            files.push((
                format!("allocation.{ext}"),
                allocation_table(&etas, &a.fixed_m, a.m_cap)?,
            ));
            let top = etas.iter().copied().fold(0.0, f64::max);
            let max_m = m_opt(top)?.m.min(a.m_cap).max(1);
            files.push((
                format!("allocation_boundaries.{ext}"),
                allocation_boundaries(max_m)?,
            ));
        }
        TableSet::Cluster => {
            let n1s = &a.sizes.0;
            let n2s = &a.n2_sizes.as_ref().unwrap_or(&a.sizes).0;
            files.push((
                format!("cluster.{ext}"),
                cluster_table(n1s, n2s, &a.etas, a.t_emit, a.t_h)?,
            ));
            for &eta in &a.etas {
                for q in CLUSTER_QUANTITIES {
                    let name = format!(
                        "cluster_{q}_eta{}.{ext}",
                        hybridgen::table::format_float(eta)
                    );
                    files.push((name, cluster_matrix(n1s, n2s, eta, q, a.t_emit, a.t_h)?));
                }
            }
        }
        TableSet::Schemes => {
            let etas = eta_grid(a, 0.82, 1.0, 100);
            files.push((
                format!("schemes.{ext}"),
                scheme_table(&etas, a.ancilla_cap)?,
            ));
        }
    }
    for (name, t) in files {
        emit(out_dir, Some(Path::new(&name)), &render(&t, a.format))?;
    }
    Ok(())
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for this family")))
}

fn cmd_plan(out_dir: &Path, a: &PlanArgs) -> Outcome {
    let plan = match a.family {
        Family::Linear => compile_linear(&a.sizes)?,
        Family::Ghz => compile_ghz(need(a.n, "n")?)?,
        Family::Cluster2d => {
            compile_cluster_2d(need(a.n1, "n1")?, need(a.n2, "n2")?, need(a.m, "m")?)?
        }
        Family::ClusterNd => compile_cluster_nd(&a.dims, need(a.m, "m")?)?,
        Family::Ring => compile_ring(need(a.k, "k")?, need(a.m, "m")?)?,
        Family::EncodedRing => compile_encoded_ring(
            need(a.k, "k")?,
            need(a.n1, "n1")?,
            need(a.n2, "n2")?,
            need(a.m, "m")?,
        )?,
        Family::BoostedPair => compile_boosted_pair(need(a.m, "m")?)?,
    };
    emit(out_dir, a.output.as_deref(), &plan.to_jsonl())
}

fn read_plan(p: &Path) -> Result<GenerationPlan, Failure> {
    let f = fs::File::open(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    Ok(GenerationPlan::read_jsonl(BufReader::new(f))?)
}

fn cmd_simulate(out_dir: &Path, a: &SimulateArgs) -> Outcome {
    let plan = read_plan(&a.plan)?;
    let loss = LossModel::new(a.sim.eta, a.sim.seed, a.sim.substream)?;
    let e = estimate(&plan, &loss, a.sim.trials)?;
    emit(out_dir, a.output.as_deref(), &(e.to_json() + "\n"))
}

fn cmd_factory(out_dir: &Path, a: &FactoryArgs) -> Outcome {
    let m = match a.m {
        Some(m) => m,
        None => m_opt(a.eta)?.m,
    };
    let sizing = factory_sizing(a.k, a.n1, m, a.eta, a.epsilon, a.strict)?;
    let probs = factory_probs(a.k, a.n1, m, a.eta, a.strict)?;
    let n_a = a.na.unwrap_or(sizing.n_a);
    let n_b = a.nb.unwrap_or(sizing.n_b);
    let table = match &a.sweep {
        Some(sw) => {
            let mut t = Table::new(["n_a", "n_b", "p_success"]);
            for &v in &sw.values {
                let (x, y) = if sw.ring { (v, n_b) } else { (n_a, v) };
                t.push(vec![
                    Cell::Int(x as i64),
                    Cell::Int(y as i64),
                    factory_success_with(a.k, x, y, &probs)?.into(),
                ])?;
            }
            t
        }
        None => {
            let mut t = Table::new([
                "k",
                "n1",
                "m",
                "eta",
                "epsilon",
                "strict",
                "p_a",
                "p_b",
                "p_c",
                "c_hat",
                "n_a_hat",
                "n_b_hat",
                "n_a",
                "n_b",
                "p_success",
                "c_hat_per_halving",
            ]);
            let p = factory_success_with(a.k, n_a, n_b, &probs)?;
            // extra attempts needed each time epsilon is halved
            let per_halving = std::f64::consts::LN_2 / (1.0 - probs.p_c).ln().abs();
            t.push(vec![
                Cell::Int(a.k as i64),
                Cell::Int(a.n1 as i64),
                m.into(),
                a.eta.into(),
                a.epsilon.into(),
                a.strict.into(),
                probs.p_a.into(),
                probs.p_b.into(),
                probs.p_c.into(),
                Cell::Int(sizing.c_hat as i64),
                Cell::Int(sizing.n_a as i64),
                Cell::Int(sizing.n_b as i64),
                Cell::Int(n_a as i64),
                Cell::Int(n_b as i64),
                p.into(),
                per_halving.into(),
            ])?;
            t
        }
    };
    emit(out_dir, a.output.as_deref(), &render(&table, a.format))
}

fn cmd_verify(out_dir: &Path, a: &VerifyArgs) -> Outcome {
    let reports = run_suite(&VerifyConfig {
        max_qubits: a.max_qubits,
        cases: a.cases,
        seed: a.seed,
    })?;
    let mut failed = 0;
    let mut out = String::new();
    for r in &reports {
        if r.passed() {
            out += &format!("PASS {:<18} {} cases\n", r.rule, r.cases);
        } else {
            failed += 1;
            out += &format!("FAIL {:<18} {}/{} cases\n", r.rule, r.failed, r.cases);
            for c in &r.counterexamples {
                out += &format!("  case {}: {} ({})\n", c.case, c.operation, c.detail);
                out += &format!("  input: {}\n", c.input);
            }
        }
    }
    print!("{out}");
    if let Some(p) = &a.report {
        let json = serde_json::to_string_pretty(&reports).map_err(Error::from)? + "\n";
        emit(out_dir, Some(p), &json)?;
    }
    if failed > 0 {
        return Err(Failure::Check(format!(
            "{failed} of {} rules failed",
            reports.len()
        )));
    }
    Ok(())
}

fn cmd_compare(out_dir: &Path, a: &CompareArgs) -> Outcome {
    let plan = read_plan(&a.plan)?;
    let mut t = Table::new([
        "eta",
        "p_closed_form",
        "p_hat",
        "ci_low",
        "ci_high",
        "successes",
        "trials",
        "within",
    ]);
    let mut outside = 0;
    for (i, &eta) in std::iter::once(&a.sim.eta).chain(&a.more_etas).enumerate() {
        let want = expected_success(&plan, eta)?
            .ok_or_else(|| Failure::Usage(format!("no closed form for family {}", plan.family)))?;
        let loss = LossModel::new(eta, a.sim.seed, a.sim.substream + i as u64)?;
        let e = estimate(&plan, &loss, a.sim.trials)?;
        let within = e.covers(want, a.sigmas);
        outside += usize::from(!within);
        t.push(vec![
            eta.into(),
            want.into(),
            e.p_hat.into(),
            e.interval(a.sigmas).0.into(),
            e.interval(a.sigmas).1.into(),
            Cell::Int(e.successes as i64),
            Cell::Int(e.trials as i64),
            within.into(),
        ])?;
    }
    emit(out_dir, a.output.as_deref(), &render(&t, a.format))?;
    if outside > 0 {
        return Err(Failure::Check(format!(
            "{outside} estimates outside the {}-sigma interval",
            a.sigmas
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli.out_dir.as_path();
    let result = match &cli.command {
        Command::Rates(a) => cmd_rates(out_dir, a),
        Command::Plan(a) => cmd_plan(out_dir, a),
        Command::Simulate(a) => cmd_simulate(out_dir, a),
        Command::Factory(a) => cmd_factory(out_dir, a),
        Command::Verify(a) => cmd_verify(out_dir, a),
        Command::Compare(a) => cmd_compare(out_dir, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("hybridgen: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("hybridgen: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("hybridgen: {msg}");
            ExitCode::from(1)
        }
    }
}
