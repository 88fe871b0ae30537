//! `dispersion`: solve, bound and certify weighted max-dispersion instances.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid or missing input file,
//! 3 hard numerical or output failure.

mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use dispersion_core::{
    brute_force_maxcut, certify, ellipsoid_solve, graph_to_instance, hyperplane_round,
    minimize_dual, objective, simplex_configuration, solve_primal, Error, Instance, SolveParams,
};
use serde::Serialize;

use files::{
    emit, finite, read_json, read_points, read_x, Diagnostics, GraphFile, InstanceFile, ResultFile,
};

/// Environment variable consulted when `--seed` is absent.
const SEED_ENV: &str = "DISPERSION_SEED";

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Hard(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Hard(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Hard(m) => m,
        }
    }
}

/// Classifies a library error raised after the input was validated.
fn from_core(e: Error) -> Failure {
    match e {
        Error::Parameter(_) | Error::TooLarge { .. } => Failure::Usage(e.to_string()),
        Error::Invalid(_)
        | Error::PointCount { .. }
        | Error::Dimension { .. }
        | Error::EmptyConfiguration
        | Error::NonFiniteCoordinate(_)
        | Error::DualLength { .. }
        | Error::NegativeMultiplier { .. }
        | Error::Graph(_) => Failure::Input(e.to_string()),
        _ => Failure::Hard(e.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dispersion",
    version,
    about = "Weighted max-dispersion solver and certificate checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Ascent,
    Ellipsoid,
}

impl Backend {
    fn name(self) -> &'static str {
        match self {
            Backend::Ascent => "ascent",
            Backend::Ellipsoid => "ellipsoid",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximize the primal objective and report a certificate.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Overrides DISPERSION_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, value_enum, default_value_t = Backend::Ascent)]
        backend: Backend,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize the dual bound over nonnegative multipliers.
    Dual {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration (and optional multipliers) for optimality.
    Certify {
        instance: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regular simplex with unit circumradius, optimal for unit weights and radii.
    Simplex {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round a solved unit-ball configuration to a graph cut.
    Maxcut {
        graph: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Overrides DISPERSION_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Also compute the optimum by enumeration.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Failure::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn load_instance(path: &std::path::Path) -> Result<Instance, Failure> {
    read_json::<InstanceFile>(path)?.to_instance()
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.9}")
    } else {
        v.to_string()
    }
}

fn run_solve(
    instance: PathBuf,
    tol: f64,
    seed: Option<u64>,
    restarts: usize,
    backend: Backend,
    max_iters: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let seed = resolve_seed(seed)?;
    let inst = load_instance(&instance)?;
    let params = SolveParams {
        tol,
        max_iters,
        seed,
        restarts,
        ..SolveParams::default()
    };
    params.validate().map_err(from_core)?;
    let r = match backend {
        Backend::Ascent => solve_primal(&inst, &params),
        Backend::Ellipsoid => ellipsoid_solve(&inst, &params),
    }
    .map_err(from_core)?;
    let result = ResultFile {
        primal_value: r.primal_value,
        dual_bound: finite(r.dual_bound),
        gap: finite(r.dual_bound - r.primal_value),
        verdict: r.certificate.verdict.to_string(),
        points: r.config.to_vecs(),
        x: r.dual_x.as_slice().to_vec(),
        diagnostics: Diagnostics {
            iterations: r.iterations,
            converged: r.converged,
            seed,
            status: r.status.as_str().to_string(),
            backend: backend.name().to_string(),
        },
    };
    emit(&result, out.as_deref())?;
    eprintln!(
        "solve: n={} primal {} dual bound {} relative gap {:.3e} verdict {} status {} ({} iterations, seed {seed})",
        inst.n(),
        fmt_value(r.primal_value),
        fmt_value(r.dual_bound),
        r.relative_gap(),
        r.certificate.verdict,
        r.status.as_str(),
        r.iterations,
    );
    Ok(())
}

#[derive(Serialize)]
struct DualFile {
    value: Option<f64>,
    x: Vec<f64>,
    unattained: bool,
    iterations: usize,
}

fn run_dual(instance: PathBuf, out: Option<PathBuf>) -> Result<(), Failure> {
    let inst = load_instance(&instance)?;
    let d = minimize_dual(&inst, &SolveParams::default()).map_err(from_core)?;
    emit(
        &DualFile {
            value: finite(d.value),
            x: d.x.as_slice().to_vec(),
            unattained: d.unattained,
            iterations: d.iterations,
        },
        out.as_deref(),
    )?;
    eprintln!(
        "dual: n={} value {}{} ({} iterations)",
        inst.n(),
        fmt_value(d.value),
        if d.unattained {
            " (infimum not attained; best value seen)"
        } else {
            ""
        },
        d.iterations
    );
    Ok(())
}

#[derive(Serialize)]
struct CertificateFile {
    primal_value: f64,
    dual_value: Option<f64>,
    gap: Option<f64>,
    relative_gap: Option<f64>,
    stationarity_residual: Option<f64>,
    affinely_independent: bool,
    affine_rank: usize,
    weight_consistency_residual: Option<f64>,
    degenerate: bool,
    verdict: String,
    x: Vec<f64>,
    reasons: Vec<String>,
}

fn run_certify(
    instance: PathBuf,
    points: PathBuf,
    x: Option<PathBuf>,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("tol must be positive, got {tol}")));
    }
    let inst = load_instance(&instance)?;
    let cfg = read_points(&points)?;
    let x = x.as_deref().map(read_x).transpose()?;
    let c = certify(&inst, &cfg, x.as_ref(), tol).map_err(from_core)?;
    emit(
        &CertificateFile {
            primal_value: c.primal_value,
            dual_value: finite(c.dual_value),
            gap: finite(c.gap),
            relative_gap: finite(c.relative_gap),
            stationarity_residual: finite(c.stationarity_residual),
            affinely_independent: c.affinely_independent,
            affine_rank: c.affine_rank,
            weight_consistency_residual: finite(c.weight_consistency_residual),
            degenerate: c.degenerate,
            verdict: c.verdict.to_string(),
            x: c.x.as_slice().to_vec(),
            reasons: c.reasons.clone(),
        },
        out.as_deref(),
    )?;
    eprintln!(
        "certify: primal {} dual {} gap {:.3e} verdict {}",
        fmt_value(c.primal_value),
        fmt_value(c.dual_value),
        c.gap,
        c.verdict
    );
    for reason in &c.reasons {
        eprintln!("  - {reason}");
    }
    Ok(())
}

#[derive(Serialize)]
struct PointsFile {
    n: usize,
    points: Vec<Vec<f64>>,
}

fn run_simplex(n: usize, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = simplex_configuration(n).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(
        &PointsFile {
            n,
            points: cfg.to_vecs(),
        },
        out.as_deref(),
    )?;
    let value =
        objective(&Instance::uniform(n, 1.0, 1.0).map_err(from_core)?, &cfg).map_err(from_core)?;
    eprintln!(
        "simplex: n={n} dimension {} unit-weight value {}",
        cfg.dim(),
        fmt_value(value)
    );
    Ok(())
}

#[derive(Serialize)]
struct ExactCut {
    value: f64,
    side: Vec<u8>,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct CutFile {
    n: usize,
    cut_value: f64,
    side: Vec<u8>,
    mean_value: f64,
    trials: usize,
    seed: u64,
    relaxation_value: f64,
    /// Half the dual bound of the unit-ball instance; at least the max cut.
    cut_upper_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactCut>,
}

fn sides(side: &[bool]) -> Vec<u8> {
    side.iter().map(|&s| u8::from(s)).collect()
}

fn run_maxcut(
    graph: PathBuf,
    trials: usize,
    seed: Option<u64>,
    exact: bool,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let seed = resolve_seed(seed)?;
    if trials < 1 {
        return Err(Failure::Usage("trials must be at least 1".into()));
    }
    let g = read_json::<GraphFile>(&graph)?.to_graph()?;
    let exact = if exact {
        Some(brute_force_maxcut(&g).map_err(from_core)?)
    } else {
        None
    };
    let params = SolveParams {
        seed,
        ..SolveParams::default()
    };
    let sol = solve_primal(&graph_to_instance(&g), &params).map_err(from_core)?;
    let r = hyperplane_round(&sol.config, &g, trials, seed).map_err(from_core)?;
    let file = CutFile {
        n: g.n(),
        cut_value: r.best.value,
        side: sides(&r.best.side),
        mean_value: r.mean(),
        trials,
        seed,
        relaxation_value: sol.primal_value,
        cut_upper_bound: finite(sol.dual_bound / 2.0),
        exact: exact.as_ref().map(|c| ExactCut {
            value: c.value,
            side: sides(&c.side),
            ratio: (c.value > 0.0).then(|| r.best.value / c.value),
        }),
    };
    emit(&file, out.as_deref())?;
    eprintln!(
        "maxcut: n={} best cut {} mean {} over {trials} trials (seed {seed}), relaxation {}",
        g.n(),
        fmt_value(r.best.value),
        fmt_value(r.mean()),
        fmt_value(sol.primal_value)
    );
    if let Some(c) = &exact {
        eprintln!("maxcut: optimum {} by enumeration", fmt_value(c.value));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            tol,
            seed,
            restarts,
            backend,
            max_iters,
            out,
        } => run_solve(instance, tol, seed, restarts, backend, max_iters, out),
        Command::Dual { instance, out } => run_dual(instance, out),
        Command::Certify {
            instance,
            points,
            x,
            tol,
            out,
        } => run_certify(instance, points, x, tol, out),
        Command::Simplex { n, out } => run_simplex(n, out),
        Command::Maxcut {
            graph,
            trials,
            seed,
            exact,
            out,
        } => run_maxcut(graph, trials, seed, exact, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
