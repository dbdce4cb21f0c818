//! Quadratic unconstrained binary optimization: problem representation,
//! energy evaluation and local solvers.
//!
//! A [`QuboProblem`] stores `Q` sparsely as an upper-triangular map
//! `(i, j) -> coefficient` with `i <= j`; diagonal entries are the linear
//! terms. The energy of an assignment is `sum_{i<=j} Q_ij x_i x_j`. Builders
//! may also accumulate a constant offset (from expanded squared penalties);
//! it is kept alongside the matrix and is not part of [`evaluate`].

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::sub_seed;

/// Largest problem [`solve_exhaustive`] accepts.
pub const EXHAUSTIVE_MAX_VARIABLES: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("assignment has {got} bits, problem has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{n} variables exceed the exhaustive limit of {max}")]
    TooManyVariables { n: usize, max: usize },
    #[error("duplicate variable label {0}")]
    DuplicateLabel(String),
    #[error("variable index {0} out of bounds")]
    IndexOutOfBounds(usize),
    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),
    #[error("problem has no variables")]
    Empty,
    #[error("malformed qubo dump: {0}")]
    Dump(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuboProblem {
    labels: Vec<String>,
    terms: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboProblem {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.terms
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.terms.get(&key).copied().unwrap_or(0.0)
    }

    /// Constant dropped from the matrix form.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Builds from a dense (possibly non-symmetric) matrix; `Q_ij` and `Q_ji`
    /// are folded onto the upper triangle.
    pub fn from_dense(matrix: &[Vec<f64>]) -> Result<Self, QuboError> {
        let mut b = QuboBuilder::new();
        let vars: Vec<usize> = (0..matrix.len())
            .map(|i| b.add_variable(format!("x{i}")))
            .collect::<Result<_, _>>()?;
        for (i, row) in matrix.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if j >= vars.len() {
                    return Err(QuboError::IndexOutOfBounds(j));
                }
                b.add_quadratic(i, j, c);
            }
        }
        Ok(b.build())
    }

    /// Text dump: `#` header lines with the labels, then `i j coefficient` rows.
    pub fn to_dump(&self) -> String {
        let mut out = format!(
            "# qubo variables={} terms={} offset={}\n",
            self.len(),
            self.terms.len(),
            self.offset
        );
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "# label {i} {l}").unwrap();
        }
        for (&(i, j), c) in &self.terms {
            writeln!(out, "{i} {j} {c}").unwrap();
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, QuboError> {
        let bad = |m: String| QuboError::Dump(m);
        let mut b = QuboBuilder::new();
        let mut labels: Vec<(usize, String)> = Vec::new();
        let mut offset = 0.0;
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("# label ") {
                let (i, label) = rest
                    .split_once(' ')
                    .ok_or_else(|| bad(format!("bad label line {line:?}")))?;
                let i = i.parse().map_err(|_| bad(format!("bad index in {line:?}")))?;
                labels.push((i, label.to_string()));
            } else if let Some(rest) = line.strip_prefix("# qubo ") {
                if let Some(o) = rest.split_whitespace().find_map(|kv| kv.strip_prefix("offset=")) {
                    offset = o.parse().map_err(|_| bad(format!("bad offset {o:?}")))?;
                }
            } else if line.starts_with('#') {
                continue;
            } else {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(bad(format!("expected `i j c`, got {line:?}")));
                }
                let i: usize = parts[0].parse().map_err(|_| bad(line.to_string()))?;
                let j: usize = parts[1].parse().map_err(|_| bad(line.to_string()))?;
                let c: f64 = parts[2].parse().map_err(|_| bad(line.to_string()))?;
                rows.push((i, j, c));
            }
        }
        labels.sort_by_key(|(i, _)| *i);
        for (expected, (i, label)) in labels.into_iter().enumerate() {
            if i != expected {
                return Err(bad(format!("label indices not contiguous at {i}")));
            }
            b.add_variable(label)?;
        }
        for (i, j, c) in rows {
            if i >= b.len() || j >= b.len() {
                return Err(QuboError::IndexOutOfBounds(i.max(j)));
            }
            b.add_quadratic(i, j, c);
        }
        b.add_constant(offset);
        Ok(b.build())
    }
}

/// Incremental construction of a [`QuboProblem`].
#[derive(Default, Debug)]
pub struct QuboBuilder {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    terms: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn add_variable(&mut self, label: impl Into<String>) -> Result<usize, QuboError> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return Err(QuboError::DuplicateLabel(label));
        }
        let i = self.labels.len();
        self.index.insert(label.clone(), i);
        self.labels.push(label);
        Ok(i)
    }

    pub fn variable(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn add_linear(&mut self, i: usize, c: f64) {
        self.add_quadratic(i, i, c);
    }

    /// Adds `c * x_i * x_j`; `i == j` is a linear term since `x^2 = x`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) {
        debug_assert!(i < self.labels.len() && j < self.labels.len());
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.terms.entry(key).or_insert(0.0) += c;
    }

    pub fn add_constant(&mut self, c: f64) {
        self.offset += c;
    }

    /// Adds `scale * (constant + sum_k a_k x_k)^2`, expanded with `x^2 = x`.
    /// Variables in `terms` must be distinct.
    pub fn add_squared(&mut self, scale: f64, constant: f64, terms: &[(usize, f64)]) {
        self.add_constant(scale * constant * constant);
        for (k, &(i, a)) in terms.iter().enumerate() {
            self.add_linear(i, scale * (2.0 * constant * a + a * a));
            for &(j, b) in &terms[k + 1..] {
                self.add_quadratic(i, j, scale * 2.0 * a * b);
            }
        }
    }

    pub fn build(self) -> QuboProblem {
        QuboProblem {
            labels: self.labels,
            terms: self.terms,
            offset: self.offset,
        }
    }
}

/// `sum_{i<=j} Q_ij x_i x_j`.
pub fn evaluate(q: &QuboProblem, x: &[bool]) -> Result<f64, QuboError> {
    if x.len() != q.len() {
        return Err(QuboError::LengthMismatch {
            expected: q.len(),
            got: x.len(),
        });
    }
    Ok(q
        .terms
        .iter()
        .filter(|(&(i, j), _)| x[i] && x[j])
        .map(|(_, c)| c)
        .sum())
}

/// Linear fields plus symmetric coupling lists, for O(degree) flip deltas.
struct Compiled {
    linear: Vec<f64>,
    couplings: Vec<Vec<(usize, f64)>>,
}

impl Compiled {
    fn new(q: &QuboProblem) -> Self {
        let n = q.len();
        let mut linear = vec![0.0; n];
        let mut couplings = vec![Vec::new(); n];
        for (&(i, j), &c) in &q.terms {
            if c == 0.0 {
                continue;
            }
            if i == j {
                linear[i] += c;
            } else {
                couplings[i].push((j, c));
                couplings[j].push((i, c));
            }
        }
        Compiled { linear, couplings }
    }

    /// Energy change from flipping bit `i`.
    #[inline]
    fn flip_delta(&self, x: &[bool], i: usize) -> f64 {
        let field = self.linear[i]
            + self.couplings[i]
                .iter()
                .filter(|(j, _)| x[*j])
                .map(|(_, c)| c)
                .sum::<f64>();
        if x[i] {
            -field
        } else {
            field
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub assignment: Vec<bool>,
    /// Always `evaluate(problem, assignment)`.
    pub energy: f64,
    pub solver: String,
    pub restarts: usize,
    pub seed: u64,
    /// Restart that produced the result.
    pub best_restart: usize,
    /// Temperature step within that restart at which it was first reached.
    pub best_step: usize,
}

/// Global minimum by Gray-code enumeration. Ties go to the lexicographically
/// smallest assignment (first variable most significant).
pub fn solve_exhaustive(q: &QuboProblem) -> Result<SolveResult, QuboError> {
    let n = q.len();
    if n > EXHAUSTIVE_MAX_VARIABLES {
        return Err(QuboError::TooManyVariables {
            n,
            max: EXHAUSTIVE_MAX_VARIABLES,
        });
    }
    let compiled = Compiled::new(q);
    let scale = q.terms.values().map(|c| c.abs()).sum::<f64>().max(1.0);
    let tol = 1e-9 * scale;

    // Local fields: field[i] is the energy change from setting bit i with
    // everything else fixed.
    let mut field = compiled.linear.clone();
    let mut x = vec![false; n];
    let mut energy = 0.0;
    let mut best_x = x.clone();
    let mut best_exact = 0.0;
    let mut best_approx = 0.0;
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        let on = !x[i];
        x[i] = on;
        if on {
            energy += field[i];
            for &(j, c) in &compiled.couplings[i] {
                field[j] += c;
            }
        } else {
            energy -= field[i];
            for &(j, c) in &compiled.couplings[i] {
                field[j] -= c;
            }
        }
        if energy < best_approx - tol {
            best_exact = evaluate(q, &x)?;
            best_approx = best_exact;
            energy = best_exact;
            best_x.clone_from(&x);
        } else if energy <= best_approx + tol {
            let exact = evaluate(q, &x)?;
            energy = exact;
            if exact < best_exact || (exact == best_exact && x < best_x) {
                best_exact = exact;
                best_approx = exact;
                best_x.clone_from(&x);
            }
        }
    }
    Ok(SolveResult {
        energy: evaluate(q, &best_x)?,
        assignment: best_x,
        solver: "exhaustive".into(),
        restarts: 1,
        seed: 0,
        best_restart: 0,
        best_step: 0,
    })
}

/// Geometric cooling schedule with independent restarts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub alpha: f64,
    /// Full sweeps over all variables per temperature; `None` means one
    /// sweep per variable.
    pub sweeps_per_temp: Option<usize>,
    pub restarts: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            t_start: 1000.0,
            t_end: 1e-4,
            alpha: 0.9,
            sweeps_per_temp: None,
            restarts: 100,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), QuboError> {
        let bad = |m: &str| Err(QuboError::InvalidSchedule(m.to_string()));
        if !(self.t_start > 0.0 && self.t_end > 0.0) {
            return bad("temperatures must be positive");
        }
        if !(self.t_end < self.t_start) {
            return bad("t_end must be below t_start");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.sweeps_per_temp == Some(0) || self.restarts == 0 {
            return bad("sweeps and restarts must be positive");
        }
        Ok(())
    }

    /// Temperatures visited: `t_start, alpha*t_start, ...` while above `t_end`.
    pub fn temperatures(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.t_start), move |t| Some(t * self.alpha))
            .take_while(move |&t| t > self.t_end)
    }

    /// Number of `t -> alpha*t` steps until `t <= t_end`.
    pub fn cooling_steps(&self) -> usize {
        self.temperatures().count()
    }
}

/// Single-bit-flip Metropolis annealing with independent restarts.
///
/// Each restart draws random initial bits from its own sub-seed, so results
/// do not depend on how restarts are scheduled across threads. The winner is
/// the lowest exact energy, ties to the lowest restart index.
pub fn solve_sa(q: &QuboProblem, schedule: &AnnealSchedule, seed: u64) -> Result<SolveResult, QuboError> {
    schedule.validate()?;
    let n = q.len();
    if n == 0 {
        return Err(QuboError::Empty);
    }
    let compiled = Compiled::new(q);
    let sweeps = schedule.sweeps_per_temp.unwrap_or(n);
    let temps: Vec<f64> = schedule.temperatures().collect();

    let runs: Vec<(f64, Vec<bool>, usize)> = (0..schedule.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "qubo-sa", restart as u64));
            let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let mut energy = evaluate(q, &x).expect("length matches");
            let mut best = (energy, x.clone(), 0);
            for (step, &t) in temps.iter().enumerate() {
                for _ in 0..sweeps {
                    for i in 0..n {
                        let delta = compiled.flip_delta(&x, i);
                        if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                            x[i] = !x[i];
                            energy += delta;
                            if energy < best.0 {
                                best = (energy, x.clone(), step);
                            }
                        }
                    }
                }
                // resync against drift once per temperature
                energy = evaluate(q, &x).expect("length matches");
            }
            let exact = evaluate(q, &best.1).expect("length matches");
            (exact, best.1, best.2)
        })
        .collect();

    let (best_restart, (energy, assignment, best_step)) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.0.total_cmp(&b.0).then(ia.cmp(ib)))
        .expect("at least one restart");
    Ok(SolveResult {
        assignment,
        energy,
        solver: "simulated-annealing".into(),
        restarts: schedule.restarts,
        seed,
        best_restart,
        best_step,
    })
}

/// Error from a [`QuboSolver`] backend, tagged with its name.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("solver {backend} failed: {source}")]
pub struct SolverError {
    pub backend: String,
    #[source]
    pub source: QuboError,
}

/// Pluggable QUBO backend. Implementations must return results whose
/// `energy` equals [`evaluate`] of their `assignment`.
pub trait QuboSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, q: &QuboProblem, seed: u64) -> Result<SolveResult, SolverError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExhaustiveSolver;

impl QuboSolver for ExhaustiveSolver {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn solve(&self, q: &QuboProblem, _seed: u64) -> Result<SolveResult, SolverError> {
        solve_exhaustive(q).map_err(|source| SolverError {
            backend: self.name().into(),
            source,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnnealingSolver {
    pub schedule: AnnealSchedule,
}

impl AnnealingSolver {
    pub fn new(schedule: AnnealSchedule) -> Self {
        AnnealingSolver { schedule }
    }
}

impl QuboSolver for AnnealingSolver {
    fn name(&self) -> &str {
        "simulated-annealing"
    }

    fn solve(&self, q: &QuboProblem, seed: u64) -> Result<SolveResult, SolverError> {
        solve_sa(q, &self.schedule, seed).map_err(|source| SolverError {
            backend: self.name().into(),
            source,
        })
    }
}

/// Exhaustive search when the problem fits, annealing otherwise.
#[derive(Clone, Debug, Default)]
pub struct AutoSolver {
    pub schedule: AnnealSchedule,
}

impl QuboSolver for AutoSolver {
    fn name(&self) -> &str {
        "auto"
    }

    fn solve(&self, q: &QuboProblem, seed: u64) -> Result<SolveResult, SolverError> {
        if q.len() <= 20 {
            ExhaustiveSolver.solve(q, seed)
        } else {
            solve_sa(q, &self.schedule, seed).map_err(|source| SolverError {
                backend: self.name().into(),
                source,
            })
        }
    }
}
