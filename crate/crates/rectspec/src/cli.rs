//! Command-line front-end: load tensors or hypergraphs, run the solvers,
//! and emit human or JSON-lines reports.
//!
//! Exit codes partition the outcomes: 0 success, 1 certificate failure,
//! 2 usage or parse error, 3 non-convergence, 4 failed precondition.
//! With fixed seeds the output is byte-identical across runs.

use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::hypergraph::parse_hypergraph;
use crate::solver::{
    boundary_solve, strong_solve, weak_solve, EigenTriple, PQNorms, Regime, SolverConfig,
    SolverReport, TripleKind,
};
use crate::structure::is_weakly_irreducible;
use crate::tensor::{parse_rect_tensor, RectTensor, SYMMETRY_TOL};
use crate::verify::{case2_crosscheck, example21_analysis, svd_crosscheck};

const EXIT_OK: i32 = 0;
const EXIT_CERTIFICATE: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_NO_CONVERGENCE: i32 = 3;
const EXIT_PRECONDITION: i32 = 4;

#[derive(Parser)]
#[command(
    name = "rectspec",
    version,
    about = "Weak and strong (p,q)-eigenvalue triples of nonnegative rectangular tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the eigen-equations, routed by the regime of xi = r/p + s/q
    Solve(SolveArgs),
    /// Find a weak triple regardless of regime
    WeakSolve(SolveArgs),
    /// Report the regime, structure flags and applicable guarantee
    Check(CheckArgs),
    /// Build the adjacency tensor of a directed hypergraph and solve it
    Hypergraph(SolveArgs),
    /// Cross-check the solver against the Gram power-iteration oracle
    Crosscheck(CrosscheckArgs),
    /// Print the boundary-regime counterexample certificate
    Counterexample(CounterexampleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Jsonl,
}

#[derive(Args)]
struct SolveArgs {
    /// Input file: `rect-tensor v1` or `dhg v1`
    input: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Force the strong/boundary route even where weak would be chosen
    #[arg(long, conflicts_with = "weak")]
    strong: bool,
    /// Force the weak route regardless of regime
    #[arg(long)]
    weak: bool,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args)]
struct CrosscheckArgs {
    input: PathBuf,
    /// Norm exponent q for (1,s)-order inputs (p is fixed at 2)
    #[arg(long)]
    q: Option<f64>,
    /// Agreement tolerance; defaults to 1e-9 for matrices, 1e-6 otherwise
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

/// Run the CLI against explicit argv and output streams; returns the exit
/// code. `RECTSPEC_THREADS` caps the restart parallelism.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Ok(threads) = std::env::var("RECTSPEC_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            // ignored if a global pool already exists (e.g. repeated calls)
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(&args, false, out, err),
        Command::WeakSolve(args) => cmd_solve(&args, true, out, err),
        Command::Check(args) => cmd_check(&args, out, err),
        Command::Hypergraph(args) => cmd_hypergraph(&args, out, err),
        Command::Crosscheck(args) => cmd_crosscheck(&args, out, err),
        Command::Counterexample(args) => cmd_counterexample(&args, out),
    };
    outcome.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        exit_code_for(&e)
    })
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::Domain(_) => EXIT_USAGE,
        Error::Regime { .. }
        | Error::Structure { .. }
        | Error::UnsupportedOrder { .. }
        | Error::Scale(_) => EXIT_PRECONDITION,
        Error::Dimension { .. } => EXIT_USAGE,
    }
}

// Load either format, auto-detected by header; the adjacency tensor stands
// in for a hypergraph input.
fn load_input(path: &PathBuf, err: &mut dyn Write) -> Result<RectTensor, Error> {
    let text = std::fs::read_to_string(path)?;
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if header.starts_with("dhg") {
        Ok(parse_hypergraph(&text)?.adjacency_tensor())
    } else {
        let (tensor, warnings) = parse_rect_tensor(&text)?;
        for w in warnings {
            let _ = writeln!(err, "warning: {w}");
        }
        Ok(tensor)
    }
}

fn solver_config(args: &SolveArgs) -> SolverConfig {
    SolverConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        epsilon_floor: None,
        seed: args.seed,
        restarts: args.restarts,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let inner: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
    format!("[{}]", inner.join(", "))
}

fn print_solution(
    triple: &EigenTriple,
    report: &SolverReport,
    format: Format,
    out: &mut dyn Write,
) {
    match format {
        Format::Human => {
            let _ = writeln!(out, "regime: {} (xi = {})", report.regime, report.xi);
            let kind = match triple.kind {
                TripleKind::Weak => "weak",
                TripleKind::Strong => "strong",
            };
            let _ = writeln!(out, "kind: {kind}");
            let _ = writeln!(out, "lambda: {:.16e}", triple.lambda);
            let _ = writeln!(out, "x: {}", fmt_vec(&triple.x));
            let _ = writeln!(out, "y: {}", fmt_vec(&triple.y));
            let _ = writeln!(
                out,
                "residuals: ({:.16e}, {:.16e})",
                triple.residual_x, triple.residual_y
            );
            let _ = writeln!(out, "iterations: {}", report.iterations);
            match report.failure_reason {
                None => {
                    let _ = writeln!(out, "converged: {}", report.converged);
                }
                Some(reason) => {
                    let _ = writeln!(
                        out,
                        "converged: {} (failure: {})",
                        report.converged,
                        serde_json::to_value(reason)
                            .map(|v| v.as_str().unwrap_or_default().to_string())
                            .unwrap_or_default()
                    );
                }
            }
        }
        Format::Jsonl => {
            let record = json!({
                "record": "solve",
                "regime": report.regime,
                "xi": report.xi,
                "kind": triple.kind,
                "lambda": triple.lambda,
                "x": triple.x,
                "y": triple.y,
                "residual_x": triple.residual_x,
                "residual_y": triple.residual_y,
                "iterations": report.iterations,
                "converged": report.converged,
                "failure_reason": report.failure_reason,
                "trace_len": report.distance_trace.len(),
                "trace_last": report.distance_trace.last(),
            });
            let _ = writeln!(out, "{record}");
        }
    }
}

fn route_and_solve(
    tensor: &RectTensor,
    pq: &PQNorms,
    cfg: &SolverConfig,
    force_strong: bool,
    force_weak: bool,
) -> Result<(EigenTriple, SolverReport), Error> {
    let regime = pq.classify(tensor.r(), tensor.s());
    if force_weak {
        return weak_solve(tensor, pq, cfg);
    }
    match regime {
        Regime::Contractive => strong_solve(tensor, pq, cfg),
        Regime::Boundary => boundary_solve(tensor, pq, cfg),
        Regime::Supercritical => {
            if force_strong {
                Err(Error::Regime {
                    xi: pq.xi(tensor.r(), tensor.s()),
                    required: "no strong triple is guaranteed for xi > 1; use the weak route",
                })
            } else {
                weak_solve(tensor, pq, cfg)
            }
        }
    }
}

fn cmd_solve(
    args: &SolveArgs,
    force_weak: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let tensor = load_input(&args.input, err)?;
    let pq = PQNorms::new(args.p, args.q)?;
    let cfg = solver_config(args);
    let (triple, report) =
        route_and_solve(&tensor, &pq, &cfg, args.strong, force_weak || args.weak)?;
    print_solution(&triple, &report, args.format, out);
    Ok(if report.converged {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    })
}

fn guarantee_line(regime: Regime, symmetric: bool, irreducible: bool) -> &'static str {
    match regime {
        Regime::Contractive => "a unique positive strong triple exists",
        Regime::Boundary => {
            if symmetric && irreducible {
                "a unique positive strong triple exists (partially symmetric and weakly irreducible at the boundary)"
            } else if !symmetric {
                "no strong-triple guarantee: partial symmetry fails at the boundary; weak triples still exist"
            } else {
                "no strong-triple guarantee: weak irreducibility fails at the boundary; weak triples still exist"
            }
        }
        Regime::Supercritical => "weak triples exist; strong triples may fail to exist",
    }
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    let tensor = load_input(&args.input, err)?;
    let pq = PQNorms::new(args.p, args.q)?;
    let regime = pq.classify(tensor.r(), tensor.s());
    let xi = pq.xi(tensor.r(), tensor.s());
    let symmetric = tensor.is_partially_symmetric(SYMMETRY_TOL);
    let irreducible = is_weakly_irreducible(&tensor);
    let guarantee = guarantee_line(regime, symmetric, irreducible);
    match args.format {
        Format::Human => {
            let _ = writeln!(out, "regime: {regime} (xi = {xi})");
            let _ = writeln!(out, "partially symmetric: {symmetric}");
            let _ = writeln!(out, "weakly irreducible: {irreducible}");
            let _ = writeln!(out, "guarantee: {guarantee}");
        }
        Format::Jsonl => {
            let record = json!({
                "record": "check",
                "regime": regime,
                "xi": xi,
                "partially_symmetric": symmetric,
                "weakly_irreducible": irreducible,
                "guarantee": guarantee,
            });
            let _ = writeln!(out, "{record}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_hypergraph(args: &SolveArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.input)?;
    let h = parse_hypergraph(&text)?;
    let tensor = h.adjacency_tensor();
    let degrees = h.degrees();
    let symmetric = tensor.is_partially_symmetric(SYMMETRY_TOL);
    let irreducible = is_weakly_irreducible(&tensor);
    match args.format {
        Format::Human => {
            let _ = writeln!(
                out,
                "hypergraph: n = {}, r = {}, s = {}, edges = {}",
                h.vertex_count,
                h.r,
                h.s,
                h.edge_count()
            );
            let _ = writeln!(out, "outdegree: {:?}", degrees.outdegree);
            let _ = writeln!(out, "indegree: {:?}", degrees.indegree);
            let _ = writeln!(
                out,
                "nonzero outdegree vertices: {:?}",
                degrees.nonzero_out().iter().map(|v| v + 1).collect::<Vec<_>>()
            );
            let _ = writeln!(
                out,
                "nonzero indegree vertices: {:?}",
                degrees.nonzero_in().iter().map(|v| v + 1).collect::<Vec<_>>()
            );
            let _ = writeln!(out, "adjacency nonzeros: {}", tensor.nnz());
            let _ = writeln!(out, "partially symmetric: {symmetric}");
            let _ = writeln!(out, "weakly irreducible: {irreducible}");
        }
        Format::Jsonl => {
            let record = json!({
                "record": "hypergraph",
                "n": h.vertex_count,
                "r": h.r,
                "s": h.s,
                "edges": h.edge_count(),
                "outdegree": degrees.outdegree,
                "indegree": degrees.indegree,
                "adjacency_nnz": tensor.nnz(),
                "partially_symmetric": symmetric,
                "weakly_irreducible": irreducible,
            });
            let _ = writeln!(out, "{record}");
        }
    }
    let pq = PQNorms::new(args.p, args.q)?;
    let cfg = solver_config(args);
    let (triple, report) = route_and_solve(&tensor, &pq, &cfg, args.strong, args.weak)?;
    print_solution(&triple, &report, args.format, out);
    Ok(if report.converged {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    })
}

fn cmd_crosscheck(
    args: &CrosscheckArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let tensor = load_input(&args.input, err)?;
    let (label, solver, oracle, tol) = if tensor.r() == 1 && tensor.s() == 1 {
        let (solver, oracle) = svd_crosscheck(&tensor)?;
        ("matrix-singular-value", solver, oracle, args.tol.unwrap_or(1e-9))
    } else {
        let q = args.q.ok_or_else(|| {
            Error::domain("--q is required for (1,s)-order inputs with s > 1")
        })?;
        let pq = PQNorms::new(2.0, q)?;
        let (solver, oracle) = case2_crosscheck(&tensor, &pq)?;
        ("gram-tensor", solver, oracle, args.tol.unwrap_or(1e-6))
    };
    let diff = (solver - oracle).abs();
    let agree = diff <= tol * solver.abs().max(oracle.abs()).max(1.0);
    match args.format {
        Format::Human => {
            let _ = writeln!(out, "crosscheck: {label}");
            let _ = writeln!(out, "solver: {solver:.16e}");
            let _ = writeln!(out, "oracle: {oracle:.16e}");
            let _ = writeln!(out, "difference: {diff:.16e} (tol {tol})");
            let _ = writeln!(out, "agreement: {}", if agree { "PASS" } else { "FAIL" });
        }
        Format::Jsonl => {
            let record = json!({
                "record": "crosscheck",
                "kind": label,
                "solver": solver,
                "oracle": oracle,
                "difference": diff,
                "tol": tol,
                "agreement": agree,
            });
            let _ = writeln!(out, "{record}");
        }
    }
    Ok(if agree { EXIT_OK } else { EXIT_CERTIFICATE })
}

fn cmd_counterexample(args: &CounterexampleArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let report = example21_analysis();
    let (lp, lm) = report.lambda_roots;
    let (y1, y2) = report.y_fourth_powers;
    let half_trace = 3.0 * 2f64.sqrt();
    let checks = [
        ("lambda_plus_root", (lp * lp - half_trace * lp - 4.0).abs()),
        ("lambda_minus_root", (lm * lm - half_trace * lm - 4.0).abs()),
        ("fourth_power_sum", (y1 + y2 - 18.0 / 17.0).abs()),
        ("norm_defect", (report.norm_defect - 1.0 / 17.0).abs()),
        ("ratio_consistency", (report.y_ratio.powi(4) - y1 / y2).abs()),
    ];
    let pass = checks.iter().all(|(_, defect)| *defect <= args.tol);
    match args.format {
        Format::Human => {
            let _ = writeln!(out, "lambda roots: {lp:.16e}, {lm:.16e}");
            let _ = writeln!(out, "y fourth powers: {y1:.16e}, {y2:.16e}");
            let _ = writeln!(out, "y ratio: {:.16e}", report.y_ratio);
            let _ = writeln!(
                out,
                "norm defect: {:.16e} (unit sphere misses by 1/17)",
                report.norm_defect
            );
            if let Some(failure) = &report.hypothesis_failure {
                let _ = writeln!(out, "solver precondition: {failure}");
            }
            let _ = writeln!(
                out,
                "bypassed iteration: converged = {}, iterations = {}",
                report.solver_outcome.converged, report.solver_outcome.iterations
            );
            for (name, defect) in &checks {
                let _ = writeln!(out, "check {name}: defect {defect:.3e}");
            }
            let _ = writeln!(
                out,
                "certificate: {} (tol {})",
                if pass { "PASS" } else { "FAIL" },
                args.tol
            );
        }
        Format::Jsonl => {
            for (name, defect) in &checks {
                let record = json!({
                    "record": "counterexample-check",
                    "item": name,
                    "defect": defect,
                    "tol": args.tol,
                    "pass": *defect <= args.tol,
                });
                let _ = writeln!(out, "{record}");
            }
            let record = json!({
                "record": "counterexample",
                "lambda_roots": [lp, lm],
                "y_fourth_powers": [y1, y2],
                "y_ratio": report.y_ratio,
                "norm_defect": report.norm_defect,
                "hypothesis_failure": report.hypothesis_failure,
                "solver_converged": report.solver_outcome.converged,
                "pass": pass,
            });
            let _ = writeln!(out, "{record}");
        }
    }
    Ok(if pass { EXIT_OK } else { EXIT_CERTIFICATE })
}
