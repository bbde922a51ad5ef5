use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hullprice::algebra::export_lp_text;
use hullprice::hulls::build_system;
use hullprice::instance::{parse_instance, serialize_instance};
use hullprice::instance::synth::{generate, SynthConfig};
use hullprice::instance::SystemInstance;
use hullprice::pricing::{
    formulation_kinds, hull_kinds, render_table, run_all, Algorithm, IacOptions, PricingError, PricingOptions,
};
use hullprice::verify::{run_suite, Corruption, SuiteConfig, Tolerances};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Convex hull pricing for unit commitment.
#[derive(Parser, Debug)]
#[command(name = "hullprice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run pricing algorithms on an instance file.
    Solve(SolveArgs),
    /// Run the oracle cross-check suites.
    Verify(VerifyArgs),
    /// Write a seeded synthetic instance.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Lmp,
    Tlp,
    Ia1,
    Ia2,
    Iac1,
    Iac2,
    Opt,
    All,
}

impl AlgorithmArg {
    fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgorithmArg::Lmp => vec![Algorithm::Lmp],
            AlgorithmArg::Tlp => vec![Algorithm::Tlp],
            AlgorithmArg::Ia1 => vec![Algorithm::Ia1],
            AlgorithmArg::Ia2 => vec![Algorithm::Ia2],
            AlgorithmArg::Iac1 => vec![Algorithm::Iac1],
            AlgorithmArg::Iac2 => vec![Algorithm::Iac2],
            AlgorithmArg::Opt => vec![Algorithm::Opt],
            AlgorithmArg::All => Algorithm::ALL.to_vec(),
        }
    }
}

/// Tolerances and limits; each can also come from the environment.
#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, env = "HULLPRICE_FEASIBILITY_TOL", default_value_t = 1e-7)]
    feasibility_tol: f64,
    #[arg(long, env = "HULLPRICE_OPTIMALITY_TOL", default_value_t = 1e-7)]
    optimality_tol: f64,
    /// Relative MIP gap at which branch-and-bound stops.
    #[arg(long, env = "HULLPRICE_MIP_GAP", default_value_t = 1e-3)]
    mip_gap: f64,
    #[arg(long, env = "HULLPRICE_INTEGRALITY_TOL", default_value_t = 1e-6)]
    integrality_tol: f64,
    /// Distance from an integer that flags a unit as fractional.
    #[arg(long, env = "HULLPRICE_FRAC_TOL", default_value_t = 1e-5)]
    frac_tol: f64,
    /// Relative P1 improvement a complementary upgrade must achieve.
    #[arg(long, env = "HULLPRICE_IMPROVE_TOL", default_value_t = 1e-6)]
    improve_tol: f64,
    /// Simplex iteration limit per LP.
    #[arg(long)]
    iteration_limit: Option<usize>,
    /// Branch-and-bound node limit.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Cap on relaxed-LP solves per iterative run.
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    /// Complementary search worker groups.
    #[arg(long)]
    iac_workers: Option<usize>,
    /// Stop the complementary search after this many accepted upgrades.
    #[arg(long)]
    iac_n_stop: Option<usize>,
    /// Wall-clock limit of the complementary search, in seconds.
    #[arg(long)]
    iac_time_limit: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> PricingOptions {
        let mut o = PricingOptions::default();
        o.solver.feasibility_tol = self.feasibility_tol;
        o.solver.optimality_tol = self.optimality_tol;
        o.solver.mip_gap = self.mip_gap;
        o.solver.integrality_tol = self.integrality_tol;
        if let Some(n) = self.iteration_limit {
            o.solver.iteration_limit = n;
        }
        if let Some(n) = self.node_limit {
            o.solver.node_limit = n;
        }
        o.solver.time_limit = self.time_limit.map(Duration::from_secs_f64);
        o.frac_tol = self.frac_tol;
        o.improve_tol = self.improve_tol;
        o.max_iterations = self.max_iterations;
        o.iac = IacOptions {
            workers: self.iac_workers,
            n_stop: self.iac_n_stop,
            time_limit: self.iac_time_limit.map(Duration::from_secs_f64),
        };
        o
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::All)]
    algorithm: AlgorithmArg,
    /// Directory for report, table and LP files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the final pricing LP of each run and the exact hull LP.
    #[arg(long)]
    dump_lp: bool,
    /// Print the reports as JSON instead of the table.
    #[arg(long)]
    json: bool,
    /// Zero wall-clock fields so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CorruptionArg {
    AggregatedCost,
    MissingMinUp,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random generators per class in each generator-level suite.
    #[arg(long, default_value_t = 50)]
    per_class: usize,
    #[arg(long, default_value_t = 5)]
    max_horizon: usize,
    /// Remove a facet family from the class hulls (negative control).
    #[arg(long, value_enum)]
    corrupt: Option<CorruptionArg>,
    /// Instances for the monotonicity suite; without any, small synthetic
    /// instances are drawn from the seed.
    #[arg(long = "instance")]
    instances: Vec<PathBuf>,
    /// Synthetic instances used when no instance file is given.
    #[arg(long, default_value_t = 2)]
    synthetic: usize,
    #[arg(long, env = "HULLPRICE_INTEGRALITY_CHECK_TOL", default_value_t = 1e-5)]
    integrality_check_tol: f64,
    #[arg(long, env = "HULLPRICE_OBJECTIVE_CHECK_TOL", default_value_t = 1e-6)]
    objective_check_tol: f64,
    #[arg(long, env = "HULLPRICE_MONOTONE_CHECK_TOL", default_value_t = 1e-6)]
    monotone_check_tol: f64,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    gens: usize,
    #[arg(long, default_value_t = 6)]
    horizon: usize,
    /// Exact counts per class, `g1,g2,g3,g4`; overrides `--gens`.
    #[arg(long, value_parser = parse_mix)]
    mix: Option<[usize; 4]>,
    #[arg(long, default_value_t = 1)]
    buses: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mix(s: &str) -> Result<[usize; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("expected four comma-separated counts".into());
    }
    let mut mix = [0; 4];
    for (slot, p) in mix.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|e| format!("`{p}`: {e}"))?;
    }
    Ok(mix)
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

fn pricing_failure(e: PricingError) -> Failure {
    let code = match e {
        PricingError::TooLarge { .. } | PricingError::Dimension { .. } | PricingError::Hull(_) => EXIT_DATA,
        _ => EXIT_SOLVE,
    };
    Failure::new(code, e)
}

fn load_instance(path: &Path) -> Result<SystemInstance, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(EXIT_DATA, e))?;
    parse_instance(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|e| Failure::new(EXIT_DATA, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(|e| Failure::new(EXIT_DATA, e))?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|e| Failure::new(EXIT_DATA, e))
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let inst = load_instance(&args.instance)?;
    let opts = args.solver.options();
    let (uc, mut reports) = run_all(&inst, &args.algorithm.algorithms(), &opts).map_err(pricing_failure)?;
    if args.no_timing {
        reports.iter_mut().for_each(|r| r.strip_timing());
    }
    let mut table = format!(
        "instance {}  MIP incumbent {:.3}  bound {:.3}  nodes {}\n",
        inst.name, uc.objective, uc.best_bound, uc.nodes
    );
    table.push_str(&render_table(&reports, 1e-5));
    let json = serde_json::to_string_pretty(&reports).map_err(|e| Failure::new(EXIT_SOLVE, e))?;
    let stem = if inst.name.is_empty() { "instance".to_string() } else { inst.name.clone() };
    if let Some(dir) = &args.out {
        for r in &reports {
            let name = format!("{stem}.{}.json", r.algorithm.name().to_lowercase());
            write_file(&dir.join(name), &r.to_json())?;
        }
        write_file(&dir.join(format!("{stem}.table.txt")), &table)?;
    }
    if args.dump_lp {
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
        for r in &reports {
            let kinds = formulation_kinds(&inst, &r.gamma);
            let sys = build_system(&inst, &kinds).map_err(|e| Failure::new(EXIT_DATA, e))?;
            let name = format!("{stem}.{}.p1.lp", r.algorithm.name().to_lowercase());
            write_file(&dir.join(name), &export_lp_text(&sys.model))?;
        }
        let sys = build_system(&inst, &hull_kinds(&inst)).map_err(|e| Failure::new(EXIT_DATA, e))?;
        write_file(&dir.join(format!("{stem}.p.lp")), &export_lp_text(&sys.model))?;
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{table}");
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let mut instances = Vec::new();
    for p in &args.instances {
        instances.push(load_instance(p)?);
    }
    if instances.is_empty() {
        for k in 0..args.synthetic {
            let cfg = SynthConfig {
                seed: args.seed.wrapping_add(k as u64),
                horizon: 4,
                generators: 5,
                mix: Some([2, 0, 1, 2]),
                buses: 1,
            };
            instances.push(generate(&cfg));
        }
    }
    let cfg = SuiteConfig {
        seed: args.seed,
        per_class: args.per_class,
        max_horizon: args.max_horizon,
        corrupt: args.corrupt.map(|c| match c {
            CorruptionArg::AggregatedCost => Corruption::AggregatedCost,
            CorruptionArg::MissingMinUp => Corruption::MissingMinUp,
        }),
        tol: Tolerances {
            integrality: args.integrality_check_tol,
            objective: args.objective_check_tol,
            monotone: args.monotone_check_tol,
        },
    };
    let checks = run_suite(&cfg, &instances, &args.solver.options());
    if args.json {
        println!("{}", serde_json::to_string_pretty(&checks).map_err(|e| Failure::new(EXIT_SOLVE, e))?);
    } else {
        for c in &checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            println!("{verdict} {:<36} cases {:>5}  failures {}", c.name, c.cases, c.failure_count);
            for f in &c.failures {
                println!("    {f}");
            }
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Failure::new(EXIT_VERIFY, anyhow::anyhow!("{failed} check(s) failed")));
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let generators = args.mix.map_or(args.gens, |m| m.iter().sum());
    if generators == 0 || args.horizon == 0 {
        return Err(Failure::new(EXIT_USAGE, anyhow::anyhow!("need at least one generator and one period")));
    }
    let cfg = SynthConfig {
        seed: args.seed,
        horizon: args.horizon,
        generators,
        mix: args.mix,
        buses: args.buses,
    };
    let text = serialize_instance(&generate(&cfg));
    match &args.out {
        Some(p) => write_file(p, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
