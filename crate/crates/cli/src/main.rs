//! `uncbound`: bounds, variational solutions and falsification scans from
//! the command line. Every subcommand emits machine-readable output (CSV
//! for `curve`, JSON elsewhere) and is deterministic for fixed flags.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 a bound
//! violation or minimizer mismatch detected under `--check`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use uncbound::basis::{angular_stats, example_state, moments_superposition};
use uncbound::bounds::{curve_csv, heisenberg_bound, omega_bound, BoundInputs};
use uncbound::constraints::{audit_w, omega_min_integer, solve_probabilities};
use uncbound::oracle::{random_scan_state, scan, Quadrature, QuadratureConfig};
use uncbound::optimizer::{minimize_product, verify_stationarity, StationarityReport};
use uncbound::{Error, OptimizeProblem};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "uncbound", version, about = "Uncertainty-product bounds from angular momentum statistics")]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds for given L² and R, with the W audit.
    Bound {
        /// Mean of L̂² (ħ² units).
        #[arg(long)]
        l2: f64,
        /// Variance of L̂² (ħ⁴ units).
        #[arg(long)]
        r: f64,
        /// Search cap for the integer minimum (default: derived from L², R).
        #[arg(long)]
        lmax: Option<u32>,
    },
    /// CSV of Ω(L², R) over an L grid at fixed R.
    Curve {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        #[arg(long)]
        steps: usize,
    },
    /// The two-level example family and its saturation of Ω.
    Example {
        /// Angular momentum of the upper level (> 1).
        #[arg(long)]
        l0: u32,
        /// Target ⟨L̂²⟩, in (0, l0(l0+1)).
        #[arg(long)]
        l2: f64,
    },
    /// Probabilities, domain and multipliers for one level triple.
    Solve {
        /// Comma-separated levels l1,l2,l3 with l1 ≥ l2 ≥ l3.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        triple: Vec<u32>,
        #[arg(long)]
        l2: f64,
        /// Mean of L̂⁴ (F = R + L⁴).
        #[arg(long)]
        f: f64,
    },
    /// Exhaustive integer minimum of ω with the W audit.
    OmegaMin {
        #[arg(long)]
        l2: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        lmax: Option<u32>,
    },
    /// Quadrature cross-check of the analytic moments on random states.
    VerifyBasis {
        #[arg(long, default_value_t = 100)]
        states: u64,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long, default_value_t = 8)]
        lmax: u32,
        #[arg(long, default_value_t = 5)]
        terms: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        nodes: usize,
    },
    /// Randomized attempt to violate the Ω bound.
    Scan {
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long, default_value_t = 8)]
        lmax: u32,
        #[arg(long, default_value_t = 5)]
        terms: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Exit 3 when any violation is found.
        #[arg(long)]
        check: bool,
    },
    /// Direct constrained minimization of σ_r·σ_p over a truncated basis.
    Minimize {
        #[arg(long)]
        l2: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        nmax: Option<u32>,
        #[arg(long)]
        lmax: Option<u32>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        /// Exit 3 when the minimum disagrees with the integer search.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Serialize)]
struct BoundReport {
    l2: f64,
    r: f64,
    heisenberg: f64,
    omega: f64,
    omega_min: Option<f64>,
    w_as_printed: Option<f64>,
    w_consistent: Option<bool>,
}

#[derive(Serialize)]
struct ExampleReport {
    l0: u32,
    product: f64,
    #[serde(rename = "L2")]
    l2: f64,
    #[serde(rename = "R")]
    r: f64,
    omega: f64,
    saturated: bool,
}

#[derive(Serialize)]
struct OmegaMinReport {
    solution: uncbound::TripleSolution,
    x_continuous: f64,
    w_as_printed: f64,
    w_consistent: bool,
    rounding_pair: (u32, u32),
    rounding_pair_matches: bool,
}

#[derive(Serialize)]
struct VerifyBasisReport {
    states: u64,
    nodes: usize,
    seed: u64,
    max_moment_delta: f64,
    max_norm_defect: f64,
    pass: bool,
}

#[derive(Serialize)]
struct MinimizeReport {
    best_product: f64,
    omega_min: f64,
    gap: f64,
    matches_search: bool,
    converged: bool,
    constraint_residuals: [f64; 3],
    stationarity: StationarityReport,
    n_max: u32,
    l_max: u32,
    restarts: uncbound::optimizer::RestartStats,
    best_state: uncbound::SuperpositionState,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Invalid inputs exit 2; failures of the numerics themselves exit 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::QuadratureNotConverged { .. } | Error::NoRestartConverged => 1,
        _ => 2,
    }
}

fn emit(output: Option<&PathBuf>, text: &str) -> uncbound::Result<()> {
    let io_err = |e: std::io::Error| Error::StateJson(format!("write failed: {e}"));
    match output {
        Some(path) => std::fs::write(path, text).map_err(io_err),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err),
    }
}

fn emit_json<T: Serialize>(output: Option<&PathBuf>, report: &T) -> uncbound::Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::StateJson(format!("serialize failed: {e}")))?;
    text.push('\n');
    emit(output, &text)
}

fn run(cli: Cli) -> uncbound::Result<ExitCode> {
    let out = cli.output.as_ref();
    match cli.command {
        Command::Bound { l2, r, lmax } => {
            let inputs = BoundInputs::new(l2, r)?;
            let (omega_min, w_as_printed, w_consistent) = if l2 > 0.0 {
                let audit = audit_w(l2, r, lmax)?;
                (
                    Some(audit.omega_min),
                    Some(audit.w_as_printed),
                    Some(audit.consistent),
                )
            } else {
                // no angular structure: Ω collapses to 3/2 and W is undefined
                (None, None, None)
            };
            emit_json(
                out,
                &BoundReport {
                    l2,
                    r,
                    heisenberg: heisenberg_bound().value,
                    omega: omega_bound(inputs).value,
                    omega_min,
                    w_as_printed,
                    w_consistent,
                },
            )?;
        }
        Command::Curve {
            r,
            lmin,
            lmax,
            steps,
        } => {
            emit(out, &curve_csv(r, lmin, lmax, steps)?)?;
        }
        Command::Example { l0, l2 } => {
            let state = example_state(l0, l2)?;
            let product = moments_superposition(&state)?.product;
            let stats = angular_stats(&state);
            let omega = omega_bound(BoundInputs::from(&stats)).value;
            emit_json(
                out,
                &ExampleReport {
                    l0,
                    product,
                    l2: stats.l2_mean,
                    r: stats.r,
                    omega,
                    saturated: (product - omega).abs() <= 1e-10,
                },
            )?;
        }
        Command::Solve { triple, l2, f } => {
            let solution = solve_probabilities(triple[0], triple[1], triple[2], l2, f)?;
            emit_json(out, &solution)?;
        }
        Command::OmegaMin { l2, r, lmax } => {
            let audit = audit_w(l2, r, lmax)?;
            let cap = lmax.unwrap_or_else(|| (2.0 * audit.x).ceil() as u32 + 2);
            let solution = omega_min_integer(l2, r, cap)?;
            emit_json(
                out,
                &OmegaMinReport {
                    solution,
                    x_continuous: audit.x,
                    w_as_printed: audit.w_as_printed,
                    w_consistent: audit.consistent,
                    rounding_pair: audit.rounding_pair,
                    rounding_pair_matches: audit.rounding_pair_matches,
                },
            )?;
        }
        Command::VerifyBasis {
            states,
            nmax,
            lmax,
            terms,
            seed,
            nodes,
        } => {
            let quad = Quadrature::new(QuadratureConfig::new(nodes, 60.0)?)?;
            let mut max_moment_delta = 0.0f64;
            let mut max_norm_defect = 0.0f64;
            for i in 0..states {
                let state = random_scan_state(nmax, lmax, terms, seed.wrapping_add(i))?;
                let analytic = moments_superposition(&state)?;
                let numeric = quad.moments(&state)?;
                max_moment_delta = max_moment_delta
                    .max((analytic.r2 - numeric.r2).abs())
                    .max((analytic.p2 - numeric.p2).abs())
                    .max((analytic.product - numeric.product).abs());
                for (q, _) in state.terms() {
                    max_norm_defect = max_norm_defect.max((quad.overlap(*q, *q) - 1.0).abs());
                }
            }
            let pass = max_moment_delta <= 1e-8 && max_norm_defect <= 1e-12;
            emit_json(
                out,
                &VerifyBasisReport {
                    states,
                    nodes,
                    seed,
                    max_moment_delta,
                    max_norm_defect,
                    pass,
                },
            )?;
        }
        Command::Scan {
            samples,
            nmax,
            lmax,
            terms,
            seed,
            check,
        } => {
            let report = scan(samples, nmax, lmax, terms, seed)?;
            emit_json(out, &report)?;
            if check && report.violations > 0 {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Minimize {
            l2,
            r,
            nmax,
            lmax,
            restarts,
            seed,
            tolerance,
            check,
        } => {
            let mut problem = OptimizeProblem::new(l2, r)?;
            if let Some(n) = nmax {
                problem.n_max = n;
            }
            if let Some(l) = lmax {
                problem.l_max = l;
            }
            if let Some(k) = restarts {
                problem.restarts = k;
            }
            problem.seed = seed;
            problem.tolerance = tolerance;
            let result = minimize_product(&problem)?;
            let search = omega_min_integer(l2, r, problem.l_max)?;
            let stationarity = verify_stationarity(&result, None)?;
            let gap = result.best_product - search.omega;
            let matches_search = gap.abs() <= 1e-4;
            emit_json(
                out,
                &MinimizeReport {
                    best_product: result.best_product,
                    omega_min: search.omega,
                    gap,
                    matches_search,
                    converged: result.converged,
                    constraint_residuals: result.constraint_residuals,
                    stationarity,
                    n_max: result.n_max,
                    l_max: result.l_max,
                    restarts: result.restarts,
                    best_state: result.best_state,
                },
            )?;
            if check && !matches_search {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
