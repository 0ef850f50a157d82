//! Command-line front end: decompose instances, add seeded noise, score
//! solutions against ground truth, and batch-benchmark losses.
//!
//! Exit codes: 0 on success, 1 when any instance failed (parse, solve, or
//! verification), 2 for command-line usage errors.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context, Result};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use flowdec::io::{parse_graphs, parse_paths, render_graphs, render_paths, GraphSection, PathSection};
use flowdec::metrics::{
    flow_error, path_error, path_error_one_sided, relative_flow_error, render_report, GroundTruth,
    ReportRow,
};
use flowdec::oracle::{reference_ls_optimum, OracleError};
use flowdec::perturb::{perturb_binomial, perturb_poisson};
use flowdec::{
    conic_decomposition, integral_decomposition, solve, Decomposition, LossKind, PathVertex,
    PoissonScaleMode, SolverConfig, SolverReport, Termination,
};

/// Objective tolerance for `--verify`: the solver value may exceed the
/// brute-force reference by at most this much.
const VERIFY_TOL: f64 = 1e-6;

/// Path cap for the verification reference; beyond it, verification is
/// skipped with a note.
const VERIFY_PATH_CAP: usize = 100_000;

#[derive(Parser)]
#[command(name = "flowdec", version, about = "Sparse path decomposition of flows on DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose each instance in a graph file into weighted paths.
    Decompose(DecomposeArgs),
    /// Replace edge values by seeded integer noise around them.
    Perturb(PerturbArgs),
    /// Score solution files against ground truth.
    Evaluate(EvaluateArgs),
    /// Run every loss over a directory of instances and report metrics.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    /// Least squares against the ray spanned by the input.
    Ls,
    /// Least squares with early termination to an integral decomposition.
    LsInt,
    /// Poisson log-likelihood on node in-flows.
    Poisson,
}

impl LossArg {
    fn name(self) -> &'static str {
        match self {
            LossArg::Ls => "ls",
            LossArg::LsInt => "ls-int",
            LossArg::Poisson => "poisson",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    /// Total flow out of the source.
    Outflow,
    /// Largest single edge value.
    Maxedge,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    /// Poisson(r_e) per edge.
    Poisson,
    /// Binomial(2·round(r_e), 1/2) per edge.
    Binomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathErrorArg {
    /// Count mistakes on both sides (wrong or missing in either direction).
    Symmetric,
    /// Count only solution paths that are wrong or absent from the truth.
    OneSided,
}

#[derive(Parser)]
struct DecomposeArgs {
    /// Input graph file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = LossArg::Ls)]
    loss: LossArg,
    /// Stop once the duality gap falls to this value.
    #[arg(long, default_value_t = 1e-10)]
    gap_tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Wall-clock budget per instance, in seconds.
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    /// How the Poisson polytope scale is chosen.
    #[arg(long, value_enum, default_value_t = ScaleArg::Outflow)]
    poisson_scale: ScaleArg,
    /// Cross-check the final objective against a slow reference (ls and
    /// ls-int only).
    #[arg(long)]
    verify: bool,
    /// Write the decompositions here as a paths file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct PerturbArgs {
    /// Input graph file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    dist: DistArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the perturbed graph file here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct EvaluateArgs {
    /// Graph file the solutions refer to.
    #[arg(long)]
    graph: PathBuf,
    /// Ground-truth paths file.
    #[arg(long)]
    truth: PathBuf,
    /// Solution paths file; repeat for several methods. The file stem names
    /// the method in the report.
    #[arg(long = "solution", required = true)]
    solutions: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = PathErrorArg::Symmetric)]
    path_error: PathErrorArg,
    /// Write the tab-separated report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Parser)]
struct BenchArgs {
    /// Directory of .graph files, each optionally next to a .truth file.
    #[arg(long)]
    input: PathBuf,
    /// Losses to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ls,ls-int,poisson")]
    losses: Vec<LossArg>,
    /// Write the tab-separated report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "FLOWDEC_JOBS")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Decompose(args) => decompose(args),
        Command::Perturb(args) => perturb(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_graph_file(path: &Path) -> Result<Vec<GraphSection>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_graphs(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_or_print(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn solver_config(loss: LossArg) -> SolverConfig {
    match loss {
        LossArg::Ls => SolverConfig::least_squares(),
        LossArg::LsInt => SolverConfig::least_squares_integral(),
        LossArg::Poisson => SolverConfig::poisson(),
    }
}

/// Solve one instance and extract its decomposition. Integral mode emits
/// the rounded integral decomposition only when the solver certified an
/// exact match; otherwise the real-weighted conic one.
fn run_instance(
    section: &GraphSection,
    loss: LossArg,
    config: &SolverConfig,
) -> Result<(Decomposition, SolverReport)> {
    let (set, report) = solve(&section.graph, &section.flow, config)?;
    let d = match loss {
        LossArg::LsInt if report.termination == Termination::EarlyExactMatch => {
            integral_decomposition(&set, &section.flow)?
        }
        LossArg::Poisson => conic_decomposition(&set, &section.flow, LossKind::Poisson)?,
        _ => conic_decomposition(&set, &section.flow, LossKind::LeastSquares)?,
    };
    Ok((d, report))
}

fn decompose(args: DecomposeArgs) -> Result<bool> {
    if args.verify && args.loss == LossArg::Poisson {
        Cli::command()
            .error(
                ErrorKind::ArgumentConflict,
                "--verify needs a least-squares loss (ls or ls-int)",
            )
            .exit();
    }
    let sections = read_graph_file(&args.input)?;
    let mut config = solver_config(args.loss);
    config.gap_tolerance = args.gap_tol;
    config.max_iterations = args.max_iters;
    config.time_limit_seconds = args.time_limit;
    config.poisson_scale_mode = match args.poisson_scale {
        ScaleArg::Outflow => PoissonScaleMode::SourceOutflow,
        ScaleArg::Maxedge => PoissonScaleMode::MaxEdgeFlow,
    };

    let mut out_sections = Vec::new();
    let mut all_ok = true;
    for section in &sections {
        let (d, report) = match run_instance(section, args.loss, &config) {
            Ok(pair) => pair,
            Err(e) => {
                eprintln!("graph {}: error: {e:#}", section.id);
                all_ok = false;
                continue;
            }
        };
        println!(
            "graph {}: loss={} termination={} iterations={} paths={} value={:.6e} time={:.4}s",
            section.id,
            args.loss.name(),
            report.termination,
            report.iterations,
            d.len(),
            report.primal_trace.last().expect("trace is never empty"),
            report.wall_time_seconds,
        );
        if args.verify {
            if report.termination == Termination::EarlyExactMatch {
                // The claim here is an exact integral reconstruction, not
                // objective optimality; check it directly.
                if d.reconstruction() == section.flow.values() {
                    println!("graph {}: verify ok (exact reconstruction)", section.id);
                } else {
                    eprintln!(
                        "graph {}: verify FAILED: reconstruction differs from the input",
                        section.id
                    );
                    all_ok = false;
                }
            } else {
                match reference_ls_optimum(&section.graph, &section.flow, VERIFY_PATH_CAP) {
                    Ok(reference) => {
                        let value = *report.primal_trace.last().expect("trace is never empty");
                        if value <= reference + VERIFY_TOL {
                            println!(
                                "graph {}: verify ok (reference {:.6e})",
                                section.id, reference
                            );
                        } else {
                            eprintln!(
                                "graph {}: verify FAILED: value {:.6e} exceeds reference {:.6e}",
                                section.id, value, reference
                            );
                            all_ok = false;
                        }
                    }
                    Err(OracleError::PathExplosion { cap }) => {
                        println!(
                            "graph {}: verify skipped (more than {cap} paths)",
                            section.id
                        );
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let entries = d
            .paths()
            .iter()
            .zip(d.weights())
            .map(|(p, &w)| (w, p.nodes().to_vec()))
            .collect();
        let mut out = PathSection::new(section.id.clone(), entries);
        out.annotations
            .push(("time".into(), format!("{}", report.wall_time_seconds)));
        out_sections.push(out);
    }
    if let Some(path) = &args.output {
        write_or_print(Some(path), &render_paths(&out_sections))?;
    }
    Ok(all_ok)
}

fn perturb(args: PerturbArgs) -> Result<bool> {
    let mut sections = read_graph_file(&args.input)?;
    for section in &mut sections {
        section.flow = match args.dist {
            DistArg::Poisson => perturb_poisson(&section.flow, args.seed)?,
            DistArg::Binomial => perturb_binomial(&section.flow, args.seed)?,
        };
    }
    write_or_print(args.output.as_deref(), &render_graphs(&sections))?;
    Ok(true)
}

fn method_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Bind a parsed paths section to its graph as a weighted decomposition.
fn bind_solution(section: &PathSection, graph_section: &GraphSection) -> Result<Decomposition> {
    let mut paths = Vec::with_capacity(section.entries.len());
    let mut weights = Vec::with_capacity(section.entries.len());
    for (w, nodes) in &section.entries {
        paths.push(PathVertex::from_nodes(&graph_section.graph, nodes.clone())?);
        weights.push(*w);
    }
    Ok(Decomposition::new(
        paths,
        weights,
        graph_section.graph.edge_count(),
    )?)
}

fn evaluate(args: EvaluateArgs) -> Result<bool> {
    let graphs = read_graph_file(&args.graph)?;
    let by_id: HashMap<&str, &GraphSection> =
        graphs.iter().map(|s| (s.id.as_str(), s)).collect();

    let truth_text = std::fs::read_to_string(&args.truth)
        .with_context(|| format!("reading {}", args.truth.display()))?;
    let truth_sections =
        parse_paths(&truth_text).with_context(|| format!("parsing {}", args.truth.display()))?;
    let mut truths: HashMap<String, GroundTruth> = HashMap::new();
    let mut all_ok = true;
    for ts in &truth_sections {
        let Some(gs) = by_id.get(ts.id.as_str()) else {
            eprintln!("graph {}: truth section has no matching graph", ts.id);
            all_ok = false;
            continue;
        };
        match GroundTruth::from_entries(&gs.graph, &ts.entries) {
            Ok(t) => {
                truths.insert(ts.id.clone(), t);
            }
            Err(e) => {
                eprintln!("graph {}: bad ground truth: {e:#}", ts.id);
                all_ok = false;
            }
        }
    }

    let mut rows = Vec::new();
    for solution_path in &args.solutions {
        let method = method_name(solution_path);
        let text = std::fs::read_to_string(solution_path)
            .with_context(|| format!("reading {}", solution_path.display()))?;
        let sections = parse_paths(&text)
            .with_context(|| format!("parsing {}", solution_path.display()))?;
        for section in &sections {
            let Some(gs) = by_id.get(section.id.as_str()) else {
                eprintln!(
                    "graph {}: solution in {method} has no matching graph",
                    section.id
                );
                all_ok = false;
                continue;
            };
            let d = match bind_solution(section, gs) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("graph {}: bad solution in {method}: {e:#}", section.id);
                    all_ok = false;
                    continue;
                }
            };
            let truth = truths.get(&section.id);
            let row = match truth {
                Some(t) => {
                    let pe = match args.path_error {
                        PathErrorArg::Symmetric => path_error(&d, t)?,
                        PathErrorArg::OneSided => path_error_one_sided(&d, t)?,
                    };
                    ReportRow {
                        id: section.id.clone(),
                        method: method.clone(),
                        path_error: Some(pe),
                        flow_error: Some(flow_error(&d, t)?),
                        rel_flow_error: Some(relative_flow_error(&d, t)?),
                        n_paths: d.len(),
                        wall_time: section.time_annotation(),
                    }
                }
                None => ReportRow {
                    id: section.id.clone(),
                    method: method.clone(),
                    path_error: None,
                    flow_error: None,
                    rel_flow_error: None,
                    n_paths: d.len(),
                    wall_time: section.time_annotation(),
                },
            };
            rows.push(row);
        }
    }
    write_or_print(args.report.as_deref(), &render_report(&rows))?;
    Ok(all_ok)
}

fn bench(args: BenchArgs) -> Result<bool> {
    let mut graph_files: Vec<PathBuf> = std::fs::read_dir(&args.input)
        .with_context(|| format!("reading directory {}", args.input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "graph"))
        .collect();
    graph_files.sort();
    if graph_files.is_empty() {
        return Err(anyhow!("no .graph files in {}", args.input.display()));
    }
    let multi_file = graph_files.len() > 1;

    struct Task {
        row_id: String,
        section: GraphSection,
        truth: Option<GroundTruth>,
        loss: LossArg,
    }

    let mut tasks = Vec::new();
    let mut all_ok = true;
    for file in &graph_files {
        let stem = method_name(file);
        let sections = read_graph_file(file)?;
        let truth_path = file.with_extension("truth");
        let mut truths: HashMap<String, GroundTruth> = HashMap::new();
        if truth_path.exists() {
            let text = std::fs::read_to_string(&truth_path)
                .with_context(|| format!("reading {}", truth_path.display()))?;
            let truth_sections = parse_paths(&text)
                .with_context(|| format!("parsing {}", truth_path.display()))?;
            let by_id: HashMap<&str, &GraphSection> =
                sections.iter().map(|s| (s.id.as_str(), s)).collect();
            for ts in &truth_sections {
                let Some(gs) = by_id.get(ts.id.as_str()) else {
                    eprintln!("graph {}: truth section has no matching graph", ts.id);
                    all_ok = false;
                    continue;
                };
                match GroundTruth::from_entries(&gs.graph, &ts.entries) {
                    Ok(t) => {
                        truths.insert(ts.id.clone(), t);
                    }
                    Err(e) => {
                        eprintln!("graph {}: bad ground truth: {e:#}", ts.id);
                        all_ok = false;
                    }
                }
            }
        }
        for section in sections {
            let row_id = if multi_file {
                format!("{stem}:{}", section.id)
            } else {
                section.id.clone()
            };
            for &loss in &args.losses {
                tasks.push(Task {
                    row_id: row_id.clone(),
                    section: section.clone(),
                    truth: truths.get(&section.id).cloned(),
                    loss,
                });
            }
        }
    }

    let jobs = args
        .jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);

    // Workers pull task indices from a shared counter and write results by
    // index, so the report is identical for any worker count.
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<std::result::Result<ReportRow, String>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let task = &tasks[i];
                let outcome = run_instance(&task.section, task.loss, &solver_config(task.loss))
                    .map_err(|e| format!("{e:#}"))
                    .and_then(|(d, report)| {
                        let (pe, fe, rfe) = match &task.truth {
                            Some(t) => (
                                Some(path_error(&d, t).map_err(|e| e.to_string())?),
                                Some(flow_error(&d, t).map_err(|e| e.to_string())?),
                                Some(relative_flow_error(&d, t).map_err(|e| e.to_string())?),
                            ),
                            None => (None, None, None),
                        };
                        Ok(ReportRow {
                            id: task.row_id.clone(),
                            method: task.loss.name().to_string(),
                            path_error: pe,
                            flow_error: fe,
                            rel_flow_error: rfe,
                            n_paths: d.len(),
                            wall_time: Some(report.wall_time_seconds),
                        })
                    });
                results.lock().expect("no poisoned lock")[i] = Some(outcome);
            });
        }
    });

    let mut rows = Vec::new();
    for (task, outcome) in tasks.iter().zip(results.into_inner().expect("no poisoned lock")) {
        match outcome.expect("every task ran") {
            Ok(row) => rows.push(row),
            Err(message) => {
                eprintln!("graph {} ({}): error: {message}", task.row_id, task.loss.name());
                all_ok = false;
            }
        }
    }
    write_or_print(args.report.as_deref(), &render_report(&rows))?;
    Ok(all_ok)
}
