//! `entrolab` — solve, verify, interpolate and sweep Schrödinger problems on
//! finite reversible metric measure spaces.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 numerical failure (or
//! failed verification checks). Identical config + seed produce byte
//! identical JSON/CSV outputs.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use entrolab_core::interpolation::interpolate;
use entrolab_core::oracle::{zero_noise_sweep, SweepRow, SweepSpec};
use entrolab_core::schrodinger::{ipfp_solve, SolverOptions};
use entrolab_core::verify::{run_suite, TierSelection};
use entrolab_core::Error as CoreError;

use config::{config_hash, ProblemSpec, SpaceSpec};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed config, invalid problem data: exit code 1.
    Config(String),
    /// The solver or an integrator failed: exit code 2.
    Numerical(String),
    /// Verification ran but some checks failed: exit code 2.
    ChecksFailed(usize),
}

impl CliError {
    /// Core errors raised while constructing the problem are config errors.
    fn config_stage(e: CoreError) -> CliError {
        CliError::Config(e.to_string())
    }

    /// Core errors raised by the solver/integrator stage: genuinely
    /// numerical failures keep exit code 2, data problems map to 1.
    fn solver_stage(e: CoreError) -> CliError {
        match e {
            CoreError::NotConverged { .. }
            | CoreError::UnstableTimeStep { .. }
            | CoreError::DivergentAscent(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numerical(msg) => f.write_str(msg),
            CliError::ChecksFailed(n) => write!(f, "{n} verification check(s) failed"),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TierArg {
    A,
    B,
    All,
}

impl From<TierArg> for TierSelection {
    fn from(t: TierArg) -> TierSelection {
        match t {
            TierArg::A => TierSelection::A,
            TierArg::B => TierSelection::B,
            TierArg::All => TierSelection::All,
        }
    }
}

#[derive(Parser)]
#[command(name = "entrolab", version, about = "Schrödinger problems on finite spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Path to the JSON problem configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Mix each marginal with delta * uniform before solving.
    #[arg(long, value_name = "DELTA")]
    floor: Option<f64>,
    /// Override the config seed for randomized suites.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run IPFP and write the solution JSON.
    Solve(CommonArgs),
    /// Run the tier-A/B verification suite and write the report JSON.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Which verification tier to run.
        #[arg(long, value_enum, default_value = "all")]
        tier: TierArg,
    },
    /// Build the entropic interpolation and write it as CSV.
    Interpolate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of time steps (overrides the config's K).
        #[arg(long = "K", value_name = "K")]
        time_steps: Option<usize>,
    },
    /// Run the zero-noise sweep and write the CSV table.
    Sweep(CommonArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version go to stdout and exit successfully.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Config(_) => ExitCode::from(1),
                CliError::Numerical(_) | CliError::ChecksFailed(_) => ExitCode::from(2),
            }
        }
    }
}

struct LoadedProblem {
    spec: ProblemSpec,
    hash: String,
    dir: PathBuf,
}

fn load(args: &CommonArgs) -> Result<LoadedProblem, CliError> {
    let bytes = std::fs::read(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let mut spec = ProblemSpec::parse(&text)?;
    if let Some(delta) = args.floor {
        if !(0.0..=1.0).contains(&delta) {
            return Err(CliError::Config(format!(
                "--floor must lie in [0, 1], got {delta}"
            )));
        }
        spec.floor = Some(delta);
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let dir = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedProblem {
        spec,
        hash: config_hash(&bytes),
        dir,
    })
}

fn write_output(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Verify { common, tier } => cmd_verify(&common, tier.into()),
        Command::Interpolate { common, time_steps } => cmd_interpolate(&common, time_steps),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

fn solve_problem(
    loaded: &LoadedProblem,
) -> Result<
    (
        entrolab_core::Space,
        entrolab_core::Density,
        entrolab_core::Density,
        entrolab_core::SchrodingerSolution,
    ),
    CliError,
> {
    let spec = &loaded.spec;
    let space = spec.build_space(&loaded.dir)?;
    let rho0 = spec.build_marginal(&space, 0)?;
    let rho1 = spec.build_marginal(&space, 1)?;
    let opts = SolverOptions {
        tol: spec.tol,
        max_iter: spec.max_iter,
    };
    let sol =
        ipfp_solve(&space, &rho0, &rho1, spec.eps, &opts).map_err(CliError::solver_stage)?;
    Ok((space, rho0, rho1, sol))
}

fn cmd_solve(args: &CommonArgs) -> Result<(), CliError> {
    let loaded = load(args)?;
    let (_, _, _, sol) = solve_problem(&loaded)?;
    let json = serde_json::to_string_pretty(&sol).expect("solution serializes");
    let path = write_output(&args.out, "solution.json", &json)?;
    println!(
        "cost={:.6e} iters={} residual={:.3e}",
        sol.cost, sol.iterations, sol.marginal_residual
    );
    eprintln!("solution written to {}", path.display());
    Ok(())
}

fn cmd_verify(args: &CommonArgs, tier: TierSelection) -> Result<(), CliError> {
    let loaded = load(args)?;
    let report = run_suite(tier, loaded.spec.seed, &loaded.hash)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    print!("{}", report.table());
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!(
        "{}/{} checks passed (seed {}, config {})",
        passed,
        report.checks.len(),
        report.seed,
        report.config_hash
    );
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_output(&args.out, "report.json", &json)?;
    if report.all_passed {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(report.checks.len() - passed))
    }
}

fn cmd_interpolate(args: &CommonArgs, time_steps: Option<usize>) -> Result<(), CliError> {
    let loaded = load(args)?;
    let steps = time_steps.unwrap_or(loaded.spec.time_steps);
    let (space, _, _, sol) = solve_problem(&loaded)?;
    let path = interpolate(&space, &sol, steps).map_err(CliError::solver_stage)?;
    let csv = path.to_csv();
    let file = write_output(&args.out, "interpolation.csv", &csv)?;
    println!(
        "cost={:.6e} K={} rows={}",
        sol.cost,
        steps,
        (steps + 1) * space.len(),
    );
    eprintln!("interpolation written to {}", file.display());
    Ok(())
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("eps,n,cost,w2sq_half,gap\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.eps, r.n, r.cost, r.w2sq_half, r.gap);
    }
    out
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), CliError> {
    let loaded = load(args)?;
    let spec = &loaded.spec;
    let sweep = spec
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("config: sweep section missing".into()))?;
    let length = match &spec.space {
        SpaceSpec::Interval { length, .. } => *length,
        _ => {
            return Err(CliError::Config(
                "config: sweep needs an interval space (the exact W2 oracle is 1-D)".into(),
            ))
        }
    };
    let (marginal0, marginal1) = spec.sweep_profiles()?;
    let pairs: Vec<(f64, usize)> = match (&sweep.n, &sweep.n_schedule) {
        (Some(n), _) => sweep.eps_list.iter().map(|&e| (e, *n)).collect(),
        (None, Some(ns)) => sweep.eps_list.iter().copied().zip(ns.iter().copied()).collect(),
        _ => unreachable!("validated at parse time"),
    };
    let core_spec = SweepSpec {
        length,
        marginal0,
        marginal1,
        solver: SolverOptions {
            tol: spec.tol,
            max_iter: spec.max_iter,
        },
        floor: spec.floor,
    };
    let rows = zero_noise_sweep(&core_spec, &pairs).map_err(CliError::solver_stage)?;
    let csv = sweep_csv(&rows);
    let file = write_output(&args.out, "sweep.csv", &csv)?;
    for r in &rows {
        println!(
            "eps={} n={} cost={:.6e} w2sq_half={:.6e} gap={:.6e}",
            r.eps, r.n, r.cost, r.w2sq_half, r.gap
        );
    }
    eprintln!("sweep written to {}", file.display());
    Ok(())
}
