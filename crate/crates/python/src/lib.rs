//! Python bindings: networks, the planners, the annealing baseline, the
//! heuristic, evaluation and a small QUBO front end.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qkdplan::baseline::{run_sa_batch, SaConfig};
use qkdplan::eval::{circle_heuristic, edge_improvement_counts, EvaluationReport};
use qkdplan::network::{load_network, reference_network, NetworkFormat};
use qkdplan::planner::{run_hqa, run_redundancy, HqaConfig, RedundancyConfig};
use qkdplan::qubo::{solve_exhaustive, solve_sa, AnnealSchedule, AnnealingSolver, ExhaustiveSolver, QuboProblem, QuboSolver};
use qkdplan::{EdgeSet, NetworkBuilder, PlanSolution};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyclass(module = "qkdplan_py", frozen)]
struct Network {
    inner: qkdplan::Network,
}

#[pymethods]
impl Network {
    /// Network from `(u, v, key_rate)` triples with one uniform demand
    /// between every node pair.
    #[new]
    #[pyo3(signature = (edges, demand = 0.0))]
    fn new(edges: Vec<(String, String, f64)>, demand: f64) -> PyResult<Self> {
        let mut b = NetworkBuilder::new();
        for (u, v, rate) in edges {
            b = b.edge(u, v, rate);
        }
        let inner = b.uniform_demand(demand).build().map_err(value_err)?;
        Ok(Network { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (seed = 0))]
    fn reference(seed: u64) -> Self {
        Network {
            inner: reference_network(seed),
        }
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let format = NetworkFormat::from_path(&path);
        let inner = load_network(&path, format).map_err(value_err)?;
        Ok(Network { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = qkdplan::Network::from_json_str(text).map_err(value_err)?;
        Ok(Network { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn node_ids(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.id.0.clone()).collect()
    }

    fn edges(&self) -> Vec<(String, String, f64)> {
        self.inner
            .edges()
            .iter()
            .map(|e| (self.inner.id(e.u).0.clone(), self.inner.id(e.v).0.clone(), e.key_rate))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

#[pyclass(module = "qkdplan_py", frozen)]
struct Solution {
    edges: Vec<(String, String)>,
    inner: PlanSolution,
    json: String,
}

impl Solution {
    fn wrap(net: &qkdplan::Network, inner: PlanSolution) -> Self {
        Solution {
            edges: inner.edges.id_pairs(net),
            json: inner.to_json(net),
            inner,
        }
    }

    fn edge_set(&self, net: &qkdplan::Network) -> PyResult<EdgeSet> {
        EdgeSet::from_pairs(net, &self.edges).map_err(value_err)
    }
}

#[pymethods]
impl Solution {
    /// Reads a solution file against `network`, re-validating its metrics.
    #[staticmethod]
    fn from_json(network: &Network, text: &str) -> PyResult<Self> {
        let inner = PlanSolution::from_json(&network.inner, text).map_err(value_err)?;
        Ok(Solution::wrap(&network.inner, inner))
    }

    #[getter]
    fn edges(&self) -> Vec<(String, String)> {
        self.edges.clone()
    }

    #[getter]
    fn edge_improvement(&self) -> f64 {
        self.inner.metrics.edge_improvement
    }

    #[getter]
    fn min_key_rate(&self) -> f64 {
        self.inner.metrics.min_key_rate
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.provenance.method()
    }

    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __len__(&self) -> usize {
        self.edges.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(method={:?}, edges={}, edge_improvement={:.2})",
            self.inner.provenance.method(),
            self.edges.len(),
            self.inner.metrics.edge_improvement
        )
    }
}

fn solver(exhaustive: bool, schedule: AnnealSchedule) -> Box<dyn QuboSolver> {
    if exhaustive {
        Box::new(ExhaustiveSolver)
    } else {
        Box::new(AnnealingSolver::new(schedule))
    }
}

/// Spanning plan built from one QUBO per node.
#[pyfunction]
#[pyo3(signature = (network, start = "6", max_len = 6, seed = 0, exhaustive = false))]
fn plan_nn(py: Python<'_>, network: &Network, start: &str, max_len: usize, seed: u64, exhaustive: bool) -> PyResult<Solution> {
    let net = &network.inner;
    let config = HqaConfig { max_len, seed };
    let s = solver(exhaustive, HqaConfig::planner_schedule());
    let plan = py
        .detach(|| run_hqa(net, start, &config, s.as_ref()))
        .map_err(runtime_err)?;
    Ok(Solution::wrap(net, plan))
}

/// Bridge-free extension of `base` (a spanning solution of the same network).
#[pyfunction]
#[pyo3(signature = (network, base, max_len = 6, seed = 0, max_rounds = 10, exhaustive = false))]
fn plan_redundant(
    py: Python<'_>,
    network: &Network,
    base: &Solution,
    max_len: usize,
    seed: u64,
    max_rounds: usize,
    exhaustive: bool,
) -> PyResult<Solution> {
    let net = &network.inner;
    let input = base.edge_set(net)?;
    let config = RedundancyConfig {
        max_len,
        seed,
        max_rounds,
    };
    let s = solver(exhaustive, RedundancyConfig::planner_schedule());
    let plan = py
        .detach(|| run_redundancy(net, &input, &config, s.as_ref()))
        .map_err(runtime_err)?;
    Ok(Solution::wrap(net, plan))
}

/// `runs` seeded annealing runs over edge subsets.
#[pyfunction]
#[pyo3(signature = (network, seed = 0, runs = 1, redundant = false, restarts = 20))]
fn baseline_sa(
    py: Python<'_>,
    network: &Network,
    seed: u64,
    runs: usize,
    redundant: bool,
    restarts: usize,
) -> PyResult<Vec<Solution>> {
    let net = &network.inner;
    let config = SaConfig {
        seed,
        redundancy_mode: redundant,
        restarts,
        ..SaConfig::default()
    };
    let plans = py
        .detach(|| run_sa_batch(net, &config, runs))
        .map_err(runtime_err)?;
    Ok(plans.into_iter().map(|p| Solution::wrap(net, p)).collect())
}

#[pyfunction]
#[pyo3(signature = (network, start = "6"))]
fn heuristic(network: &Network, start: &str) -> PyResult<Solution> {
    let net = &network.inner;
    let plan = circle_heuristic(net, start).map_err(runtime_err)?;
    Ok(Solution::wrap(net, plan))
}

/// Evaluation report as a JSON string.
#[pyfunction]
#[pyo3(signature = (network, solution, failure = false))]
fn evaluate(network: &Network, solution: &Solution, failure: bool) -> PyResult<String> {
    let net = &network.inner;
    let edges = solution.edge_set(net)?;
    let report = EvaluationReport::build(net, &edges, failure).map_err(value_err)?;
    Ok(report.to_json())
}

#[pyfunction]
fn edge_improvement(total: usize, used: usize) -> f64 {
    edge_improvement_counts(total, used)
}

/// Minimizes `x^T Q x` over binary `x` for an upper-triangular `Q`. Returns
/// the assignment and its energy.
#[pyfunction]
#[pyo3(signature = (matrix, exhaustive = true, seed = 0, restarts = 100))]
fn solve_qubo(matrix: Vec<Vec<f64>>, exhaustive: bool, seed: u64, restarts: usize) -> PyResult<(Vec<bool>, f64)> {
    let q = QuboProblem::from_dense(&matrix).map_err(value_err)?;
    let result = if exhaustive {
        solve_exhaustive(&q)
    } else {
        let schedule = AnnealSchedule {
            restarts,
            ..AnnealSchedule::default()
        };
        solve_sa(&q, &schedule, seed)
    }
    .map_err(value_err)?;
    Ok((result.assignment, result.energy))
}

#[pymodule]
fn qkdplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(plan_nn, m)?)?;
    m.add_function(wrap_pyfunction!(plan_redundant, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_sa, m)?)?;
    m.add_function(wrap_pyfunction!(heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(edge_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(solve_qubo, m)?)?;
    Ok(())
}
