//! `qkdplan`: plan, evaluate and export QKD network layouts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qkdplan::baseline::{run_sa_batch, BaselineError, SaConfig};
use qkdplan::eval::{circle_heuristic, EvalError, EvaluationReport};
use qkdplan::export::{export_graph, GraphFormat};
use qkdplan::network::{load_network, reference_network, NetworkError, NetworkFormat};
use qkdplan::plan::SolutionFileError;
use qkdplan::planner::{run_hqa, run_redundancy, HqaConfig, PlanError, RedundancyConfig};
use qkdplan::qubo::{AnnealingSolver, ExhaustiveSolver, QuboSolver};
use qkdplan::{Network, PlanSolution};

#[derive(Parser)]
#[command(name = "qkdplan", version, about = "Plan cost-minimal QKD network layouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spanning plan from one QUBO per node, rebuilt by edge frequency.
    PlanNn(PlanArgs),
    /// Bridge-free plan: circle redundancies added to a spanning plan.
    PlanRedundant(RedundantArgs),
    /// Simulated annealing directly over edge subsets.
    BaselineSa(SaArgs),
    /// Metrics and per-edge loads of an existing solution.
    Evaluate(EvalArgs),
    /// Minimum spanning tree plus cycle-closing chords.
    Heuristic(HeuristicArgs),
}

#[derive(Args)]
struct NetArgs {
    /// Network file: JSON, or `.csv` rows `u,v,key_rate` with demands in a
    /// sibling `<stem>.traffic.csv`.
    #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
    input: Option<PathBuf>,
    /// Use the built-in 29-node reference network generated from --seed.
    #[arg(long)]
    reference: bool,
    /// Run seed; also selects the reference network.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (QKDPLAN_OUT takes precedence).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Exhaustive,
    Sa,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Node the planner starts from.
    #[arg(long, default_value = "6")]
    start: String,
    /// Longest candidate path in edges.
    #[arg(long, default_value_t = 6)]
    max_len: usize,
    #[arg(long, value_enum, default_value_t = SolverKind::Sa)]
    solver: SolverKind,
}

#[derive(Args)]
struct RedundantArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Spanning solution to extend; computed with plan-nn settings if absent.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Bridge-workaround rounds before giving up.
    #[arg(long, default_value_t = 10)]
    max_rounds: usize,
}

#[derive(Args)]
struct SaArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Independent runs; the best one becomes solution.json.
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Only accept 2-edge-connected candidates.
    #[arg(long)]
    redundant: bool,
    /// Chains per run.
    #[arg(long)]
    restarts: Option<usize>,
    /// Weight of one deployed edge in the energy.
    #[arg(long)]
    qkd_weight: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    net: NetArgs,
    /// solution.json written by any command.
    #[arg(long)]
    solution: PathBuf,
    /// Also compute worst-case loads under every single edge failure.
    #[arg(long)]
    failure: bool,
}

#[derive(Args)]
struct HeuristicArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, default_value = "6")]
    start: String,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(m: impl fmt::Display) -> Self {
        Failure { code: 1, message: m.to_string() }
    }

    fn infeasible(m: impl fmt::Display) -> Self {
        Failure { code: 2, message: m.to_string() }
    }

    fn solver(m: impl fmt::Display) -> Self {
        Failure { code: 3, message: m.to_string() }
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        Failure::input(e)
    }
}

impl From<SolutionFileError> for Failure {
    fn from(e: SolutionFileError) -> Self {
        Failure::input(e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::input(e)
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::NoRedundancy(_) | PlanError::BridgesRemain { .. } | PlanError::NoCandidates(_) => {
                Failure::infeasible(e)
            }
            PlanError::Solver { .. } | PlanError::Qubo(_) | PlanError::Cost(_) | PlanError::NotSpanning => {
                Failure::solver(e)
            }
            _ => Failure::input(e),
        }
    }
}

impl From<BaselineError> for Failure {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::Infeasible(_) => Failure::infeasible(e),
            _ => Failure::input(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PlanNn(a) => plan_nn(a),
        Command::PlanRedundant(a) => plan_redundant(a),
        Command::BaselineSa(a) => baseline_sa(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Heuristic(a) => heuristic(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &NetArgs) -> Result<Network, Failure> {
    match &args.input {
        Some(path) => Ok(load_network(path, NetworkFormat::from_path(path))?),
        None => Ok(reference_network(args.seed)),
    }
}

fn out_dir(args: &NetArgs) -> Result<PathBuf, Failure> {
    let dir = std::env::var_os("QKDPLAN_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| args.out.clone());
    fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn solver_for(kind: SolverKind, schedule: qkdplan::qubo::AnnealSchedule) -> Box<dyn QuboSolver> {
    match kind {
        SolverKind::Exhaustive => Box::new(ExhaustiveSolver),
        SolverKind::Sa => Box::new(AnnealingSolver::new(schedule)),
    }
}

/// Writes network, solution, report and DOT rendering, then prints a summary.
fn emit(dir: &Path, net: &Network, sol: &PlanSolution, failure: bool) -> Result<(), Failure> {
    let report = EvaluationReport::build(net, &sol.edges, failure)?;
    write(&dir.join("network.json"), net.to_json_string())?;
    write(&dir.join("solution.json"), sol.to_json(net))?;
    write(&dir.join("report.json"), report.to_json())?;
    write(&dir.join("report.csv"), report.to_csv())?;
    write(&dir.join("solution.dot"), export_graph(net, &sol.edges, GraphFormat::Dot)?)?;
    println!(
        "{} of {} edges, edge improvement {:.2}%, min key rate {:.2} kbit/s, max load {:.2}%",
        sol.edges.len(),
        net.edge_count(),
        sol.metrics.edge_improvement,
        sol.metrics.min_key_rate,
        report.max_load
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn spanning_plan(net: &Network, a: &PlanArgs) -> Result<PlanSolution, Failure> {
    let config = HqaConfig {
        max_len: a.max_len,
        seed: a.net.seed,
    };
    let solver = solver_for(a.solver, HqaConfig::planner_schedule());
    Ok(run_hqa(net, &a.start, &config, solver.as_ref())?)
}

fn plan_nn(a: PlanArgs) -> Result<(), Failure> {
    let net = load(&a.net)?;
    let dir = out_dir(&a.net)?;
    let sol = spanning_plan(&net, &a)?;
    emit(&dir, &net, &sol, false)
}

fn plan_redundant(a: RedundantArgs) -> Result<(), Failure> {
    let net = load(&a.plan.net)?;
    let dir = out_dir(&a.plan.net)?;
    let base = match &a.solution {
        Some(path) => read_solution(&net, path)?,
        None => spanning_plan(&net, &a.plan)?,
    };
    let config = RedundancyConfig {
        max_len: a.plan.max_len,
        seed: a.plan.net.seed,
        max_rounds: a.max_rounds,
    };
    let solver = solver_for(a.plan.solver, RedundancyConfig::planner_schedule());
    let sol = run_redundancy(&net, &base.edges, &config, solver.as_ref())?;
    write(&dir.join("base.json"), base.to_json(&net))?;
    emit(&dir, &net, &sol, true)
}

fn baseline_sa(a: SaArgs) -> Result<(), Failure> {
    if a.runs == 0 {
        return Err(Failure::input("--runs must be positive"));
    }
    let net = load(&a.net)?;
    let dir = out_dir(&a.net)?;
    let defaults = SaConfig::default();
    let config = SaConfig {
        redundancy_mode: a.redundant,
        seed: a.net.seed,
        restarts: a.restarts.unwrap_or(defaults.restarts),
        qkd_weight: a.qkd_weight.unwrap_or(defaults.qkd_weight),
        ..defaults
    };
    let runs = run_sa_batch(&net, &config, a.runs)?;

    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", runs_dir.display())))?;
    let mut table = csv::Writer::from_writer(Vec::new());
    let row_err = |e: csv::Error| Failure::input(e);
    table
        .write_record(["run", "edges", "edge_improvement", "min_key_rate", "energy"])
        .map_err(row_err)?;
    for (i, run) in runs.iter().enumerate() {
        write(&runs_dir.join(format!("run_{i:03}.json")), run.to_json(&net))?;
        let energy = match &run.provenance {
            qkdplan::plan::Provenance::SimulatedAnnealing { best_energy, .. } => *best_energy,
            _ => f64::NAN,
        };
        table
            .write_record([
                i.to_string(),
                run.edges.len().to_string(),
                run.metrics.edge_improvement.to_string(),
                run.metrics.min_key_rate.to_string(),
                energy.to_string(),
            ])
            .map_err(row_err)?;
    }
    let bytes = table.into_inner().map_err(|e| Failure::input(e.to_string()))?;
    write(&dir.join("runs.csv"), bytes)?;

    let improvements: Vec<f64> = runs.iter().map(|r| r.metrics.edge_improvement).collect();
    let mean = improvements.iter().sum::<f64>() / improvements.len() as f64;
    println!("{} runs, mean edge improvement {:.2}%", runs.len(), mean);
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(i, x), (j, y)| {
            x.metrics
                .edge_improvement
                .total_cmp(&y.metrics.edge_improvement)
                .then(j.cmp(i))
        })
        .map(|(_, r)| r)
        .expect("runs is nonempty");
    emit(&dir, &net, best, a.redundant)
}

fn read_solution(net: &Network, path: &Path) -> Result<PlanSolution, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(PlanSolution::from_json(net, &text)?)
}

fn evaluate(a: EvalArgs) -> Result<(), Failure> {
    let net = load(&a.net)?;
    let dir = out_dir(&a.net)?;
    let sol = read_solution(&net, &a.solution)?;
    emit(&dir, &net, &sol, a.failure)
}

fn heuristic(a: HeuristicArgs) -> Result<(), Failure> {
    let net = load(&a.net)?;
    let dir = out_dir(&a.net)?;
    let sol = circle_heuristic(&net, &a.start).map_err(|e| match e {
        EvalError::NotTwoEdgeConnected | EvalError::UncoverableLeaf(_) => Failure::infeasible(e),
        other => Failure::input(other),
    })?;
    emit(&dir, &net, &sol, true)
}
