//! Dosage allocation under a per-transmitter molecule budget.
//!
//! The decision variable is the matrix `G` (transmitters x molecule types);
//! each row lies on the scaled simplex `{g >= 0, Σ g = Λ}` and the objective
//! is the weighted MIMO-MTMR BER with every receiver's threshold
//! re-optimized at each evaluation. The solver is projected gradient descent
//! with finite-difference gradients and an Armijo backtracking line search.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{nonnegative, positive};
use crate::system::{LinkTable, ReceiverWeights, SlotConfig, Topology};
use crate::{Error, Result};

const ROW_SUM_RTOL: f64 = 1e-9;

/// Molecules of each type released by each transmitter, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    n_tx: usize,
    n_types: usize,
    entries: Vec<f64>,
    budget: Option<f64>,
}

impl AllocationMatrix {
    /// Any nonnegative matrix; rows need not share a budget.
    pub fn from_rows(n_tx: usize, n_types: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n_tx * n_types {
            return Err(Error::Shape {
                what: "allocation entries",
                expected: n_tx * n_types,
                found: entries.len(),
            });
        }
        for &g in &entries {
            nonnegative("allocation entry", g)?;
        }
        Ok(Self {
            n_tx,
            n_types,
            entries,
            budget: None,
        })
    }

    /// A matrix whose every row sums to `budget` (relative tolerance 1e-9).
    pub fn with_budget(
        n_tx: usize,
        n_types: usize,
        entries: Vec<f64>,
        budget: f64,
    ) -> Result<Self> {
        let budget = positive("budget", budget)?;
        let mut m = Self::from_rows(n_tx, n_types, entries)?;
        for s in 0..n_tx {
            let sum: f64 = m.row(s).iter().sum();
            if (sum - budget).abs() > ROW_SUM_RTOL * budget {
                return Err(Error::Domain {
                    what: "allocation row sum",
                    value: sum,
                });
            }
        }
        m.budget = Some(budget);
        Ok(m)
    }

    /// `budget / n_types` everywhere.
    pub fn uniform(n_tx: usize, n_types: usize, budget: f64) -> Result<Self> {
        Self::with_budget(
            n_tx,
            n_types,
            vec![budget / n_types as f64; n_tx * n_types],
            budget,
        )
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn budget(&self) -> Option<f64> {
        self.budget
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, s: usize, k: usize) -> f64 {
        self.entries[s * self.n_types + k]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.entries[s * self.n_types..(s + 1) * self.n_types]
    }

    pub fn column_into(&self, k: usize, out: &mut [f64]) {
        for (s, slot) in out.iter_mut().enumerate().take(self.n_tx) {
            *slot = self.get(s, k);
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_tx).map(|s| self.row(s).iter().sum()).collect()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &AllocationMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Integer molecule counts, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerAllocation {
    n_tx: usize,
    n_types: usize,
    entries: Vec<u64>,
}

impl IntegerAllocation {
    pub fn new(n_tx: usize, n_types: usize, entries: Vec<u64>) -> Result<Self> {
        if entries.len() != n_tx * n_types {
            return Err(Error::Shape {
                what: "allocation entries",
                expected: n_tx * n_types,
                found: entries.len(),
            });
        }
        Ok(Self {
            n_tx,
            n_types,
            entries,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, s: usize, k: usize) -> u64 {
        self.entries[s * self.n_types + k]
    }

    pub fn row(&self, s: usize) -> &[u64] {
        &self.entries[s * self.n_types..(s + 1) * self.n_types]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_tx).map(|s| self.row(s).iter().sum()).collect()
    }

    pub fn to_real(&self) -> AllocationMatrix {
        AllocationMatrix {
            n_tx: self.n_tx,
            n_types: self.n_types,
            entries: self.entries.iter().map(|&g| g as f64).collect(),
            budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizeMode {
    /// Round every entry on its own; row sums may drift by a few molecules.
    Nearest,
    /// Largest-remainder apportionment; every row sums to the budget.
    BudgetExact,
}

/// Rounds a real allocation to molecule counts.
///
/// `BudgetExact` targets the matrix budget, or each row's rounded sum when
/// the matrix has none.
pub fn quantize_allocation(g: &AllocationMatrix, mode: QuantizeMode) -> IntegerAllocation {
    let mut out = Vec::with_capacity(g.entries.len());
    for s in 0..g.n_tx {
        let row = g.row(s);
        match mode {
            QuantizeMode::Nearest => out.extend(row.iter().map(|&x| libm::round(x) as u64)),
            QuantizeMode::BudgetExact => {
                let target = libm::round(g.budget.unwrap_or_else(|| row.iter().sum())) as u64;
                out.extend(largest_remainder(row, target));
            }
        }
    }
    IntegerAllocation {
        n_tx: g.n_tx,
        n_types: g.n_types,
        entries: out,
    }
}

fn largest_remainder(row: &[f64], target: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = row.iter().map(|&x| libm::floor(x) as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..row.len()).collect();
    let frac = |i: usize| row[i] - libm::floor(row[i]);
    if assigned < target {
        // Largest fractional part first, lower index on ties.
        order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
        let mut deficit = target - assigned;
        let mut i = 0;
        while deficit > 0 && !order.is_empty() {
            counts[order[i % order.len()]] += 1;
            deficit -= 1;
            i += 1;
        }
    } else if assigned > target {
        order.sort_by(|&a, &b| frac(a).total_cmp(&frac(b)).then(b.cmp(&a)));
        let mut excess = assigned - target;
        while excess > 0 {
            let Some(&i) = order.iter().find(|&&i| counts[i] > 0) else {
                break;
            };
            counts[i] -= 1;
            excess -= 1;
            order.rotate_left(1);
        }
    }
    counts
}

/// Euclidean projection of `row` onto `{x >= 0, Σ x = budget}`.
pub fn project_to_budget(row: &[f64], budget: f64) -> Vec<f64> {
    if row.is_empty() {
        return Vec::new();
    }
    let mut sorted = row.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - budget) / (j + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        } else {
            break;
        }
    }
    row.iter().map(|&v| (v - shift).max(0.0)).collect()
}

fn project_rows(entries: &mut [f64], n_types: usize, budget: f64) {
    for row in entries.chunks_mut(n_types) {
        let projected = project_to_budget(row, budget);
        row.copy_from_slice(&projected);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the objective by less than
    /// `tolerance * objective`.
    pub tolerance: f64,
    /// Finite-difference step as a fraction of the budget.
    pub fd_step: f64,
    pub armijo: f64,
    /// Extra random starts besides the initial point (0 disables).
    pub multistart: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-10,
            fd_step: 1e-4,
            armijo: 1e-4,
            multistart: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub real: AllocationMatrix,
    pub integer_nearest: IntegerAllocation,
    pub integer_exact: IntegerAllocation,
    pub ber_real: f64,
    pub ber_int_nearest: f64,
    pub ber_int_exact: f64,
    /// Objective at the uniform allocation, for reference.
    pub ber_uniform: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

impl OptResult {
    pub fn integer(&self, mode: QuantizeMode) -> (&IntegerAllocation, f64) {
        match mode {
            QuantizeMode::Nearest => (&self.integer_nearest, self.ber_int_nearest),
            QuantizeMode::BudgetExact => (&self.integer_exact, self.ber_int_exact),
        }
    }

    /// `|ber_int_nearest - ber_real|`.
    pub fn quantization_gap(&self) -> f64 {
        (self.ber_int_nearest - self.ber_real).abs()
    }
}

/// Objective and gradient oracle over one topology.
pub struct AllocationProblem<'a> {
    table: LinkTable,
    weights: &'a ReceiverWeights,
    budget: f64,
}

impl<'a> AllocationProblem<'a> {
    pub fn new(
        topo: &Topology,
        slot: &SlotConfig,
        weights: &'a ReceiverWeights,
        budget: f64,
    ) -> Result<Self> {
        let budget = positive("budget", budget)?;
        topo.check_distinct_types()?;
        if weights.len() != topo.n_rx() {
            return Err(Error::Shape {
                what: "receiver weights",
                expected: topo.n_rx(),
                found: weights.len(),
            });
        }
        Ok(Self {
            table: LinkTable::new(topo, slot)?,
            weights,
            budget,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.table.n_tx()
    }

    pub fn n_types(&self) -> usize {
        self.table.n_rx()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn objective(&self, g: &AllocationMatrix) -> Result<f64> {
        self.table.aggregate_ber(g, self.weights)
    }

    fn objective_entries(&self, entries: &[f64]) -> Result<f64> {
        let (n, r) = (self.n_tx(), self.n_types());
        let mut column = vec![0.0; n];
        let mut total = 0.0;
        for k in 0..r {
            for s in 0..n {
                column[s] = entries[s * r + k];
            }
            total += self.weights.as_slice()[k] * self.table.receiver_ber(k, &column)?.1;
        }
        Ok(total)
    }

    /// Finite-difference gradient with step `step` (molecules): central
    /// differences, forward ones within `step` of zero. Entry `(s, k)` only
    /// enters receiver `k`'s term, so only that term is differenced.
    pub fn gradient(&self, entries: &[f64], step: f64) -> Result<Vec<f64>> {
        let (n, r) = (self.n_tx(), self.n_types());
        let mut grad = vec![0.0; n * r];
        let mut column = vec![0.0; n];
        for k in 0..r {
            let w = self.weights.as_slice()[k];
            for s in 0..n {
                for t in 0..n {
                    column[t] = entries[t * r + k];
                }
                let x = column[s];
                let (lo, hi) = if x >= step {
                    (x - step, x + step)
                } else {
                    (x, x + step)
                };
                column[s] = hi;
                let f_hi = self.table.receiver_ber(k, &column)?.1;
                column[s] = lo;
                let f_lo = self.table.receiver_ber(k, &column)?.1;
                grad[s * r + k] = w * (f_hi - f_lo) / (hi - lo);
            }
        }
        Ok(grad)
    }
}

struct Descent {
    entries: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn descend(
    problem: &AllocationProblem<'_>,
    start: Vec<f64>,
    cfg: &OptimizerConfig,
) -> Result<Descent> {
    let r = problem.n_types();
    let budget = problem.budget;
    let fd = cfg.fd_step * budget;
    let mut x = start;
    project_rows(&mut x, r, budget);
    let mut f = problem.objective_entries(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut trace = vec![f];
    let mut alpha: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; x.len()];

    while iterations < cfg.max_iterations {
        let grad = problem.gradient(&x, fd)?;
        let norm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
        if !(norm > 0.0 && norm.is_finite()) {
            converged = true;
            break;
        }
        // First trial step moves about one uniform share; afterwards start
        // from twice the last accepted step.
        let mut step = alpha.map_or(budget / (r as f64 * norm), |a| 2.0 * a);
        let mut accepted = None;
        for _ in 0..80 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&grad) {
                *t = xi - step * gi;
            }
            project_rows(&mut trial, r, budget);
            let ft = problem.objective_entries(&trial)?;
            let directional: f64 = grad
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(g, (t, xi))| g * (t - xi))
                .sum();
            if ft.is_finite() && ft <= f + cfg.armijo * directional {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some(ft) = accepted else {
            converged = true;
            break;
        };
        let improvement = f - ft;
        x.copy_from_slice(&trial);
        f = ft;
        trace.push(f);
        alpha = Some(step);
        if improvement <= cfg.tolerance * f {
            converged = true;
            break;
        }
    }
    Ok(Descent {
        entries: x,
        value: f,
        iterations,
        converged,
        trace,
    })
}

fn random_start(rng: &mut ChaCha8Rng, n: usize, r: usize, budget: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * r);
    for _ in 0..n {
        // Flat Dirichlet via normalized exponentials.
        let row: Vec<f64> = (0..r)
            .map(|_| -libm::log(1.0 - rng.random::<f64>()))
            .collect();
        let total: f64 = row.iter().sum();
        out.extend(row.iter().map(|e| budget * e / total));
    }
    out
}

/// Minimizes the weighted MIMO-MTMR BER over allocations with every row
/// summing to `budget`. Starts from `init` or the uniform allocation.
pub fn optimize_allocation(
    topo: &Topology,
    slot: &SlotConfig,
    weights: &ReceiverWeights,
    budget: f64,
    init: Option<&AllocationMatrix>,
    cfg: &OptimizerConfig,
) -> Result<OptResult> {
    let problem = AllocationProblem::new(topo, slot, weights, budget)?;
    let (n, r) = (problem.n_tx(), problem.n_types());
    let uniform = AllocationMatrix::uniform(n, r, budget)?;
    let ber_uniform = problem.objective(&uniform)?;
    let first = match init {
        Some(g) if g.n_tx() != n || g.n_types() != r => {
            return Err(Error::Shape {
                what: "initial allocation",
                expected: n * r,
                found: g.n_tx() * g.n_types(),
            })
        }
        Some(g) => g.entries.clone(),
        None => uniform.entries.clone(),
    };

    let mut best = descend(&problem, first, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.multistart {
        let run = descend(&problem, random_start(&mut rng, n, r, budget), cfg)?;
        if run.value < best.value {
            best = run;
        }
    }

    let real = AllocationMatrix {
        n_tx: n,
        n_types: r,
        entries: best.entries,
        budget: Some(budget),
    };
    let integer_nearest = quantize_allocation(&real, QuantizeMode::Nearest);
    let integer_exact = quantize_allocation(&real, QuantizeMode::BudgetExact);
    Ok(OptResult {
        ber_int_nearest: problem.objective(&integer_nearest.to_real())?,
        ber_int_exact: problem.objective(&integer_exact.to_real())?,
        integer_nearest,
        integer_exact,
        ber_real: best.value,
        ber_uniform,
        real,
        iterations: best.iterations,
        converged: best.converged,
        trace: best.trace,
    })
}

/// Best allocation on the grid `{0, step, 2 step, ...}` with every row
/// summing to the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub allocation: AllocationMatrix,
    pub ber: f64,
    pub points: u128,
}

pub const GRID_POINT_LIMIT: u128 = 10_000_000;

/// Exhaustive search over row-feasible grid points. `budget / grid_step`
/// must be a whole number. Refuses grids above [`GRID_POINT_LIMIT`] points.
pub fn brute_force_allocation(
    topo: &Topology,
    slot: &SlotConfig,
    weights: &ReceiverWeights,
    budget: f64,
    grid_step: f64,
) -> Result<GridOptimum> {
    let problem = AllocationProblem::new(topo, slot, weights, budget)?;
    let grid_step = positive("grid step", grid_step)?;
    let units_f = budget / grid_step;
    let units = libm::round(units_f);
    if (units_f - units).abs() > 1e-9 * units_f.max(1.0) {
        return Err(Error::Domain {
            what: "budget / grid step",
            value: units_f,
        });
    }
    let (n, r) = (problem.n_tx(), problem.n_types());
    let units = units as u64;
    let per_row = binomial(units + r as u64 - 1, r as u64 - 1);
    let points = per_row.checked_pow(n as u32).unwrap_or(u128::MAX);
    if points > GRID_POINT_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_POINT_LIMIT,
        });
    }

    let rows = compositions(units, r);
    let mut index = vec![0usize; n];
    let mut entries = vec![0.0; n * r];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        for (s, &i) in index.iter().enumerate() {
            for (k, &u) in rows[i].iter().enumerate() {
                entries[s * r + k] = u as f64 * grid_step;
            }
        }
        let f = problem.objective_entries(&entries)?;
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, entries.clone()));
        }
        // Odometer over the row choices.
        let mut s = 0;
        while s < n {
            index[s] += 1;
            if index[s] < rows.len() {
                break;
            }
            index[s] = 0;
            s += 1;
        }
        if s == n {
            break;
        }
    }
    let (ber, entries) = best.expect("grid is never empty");
    Ok(GridOptimum {
        allocation: AllocationMatrix {
            n_tx: n,
            n_types: r,
            entries,
            budget: Some(budget),
        },
        ber,
        points,
    })
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = vec![0u64; parts];
    fn fill(pos: usize, left: u64, current: &mut [u64], out: &mut Vec<Vec<u64>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.to_vec());
            return;
        }
        for v in (0..=left).rev() {
            current[pos] = v;
            fill(pos + 1, left - v, current, out);
        }
    }
    fill(0, total, &mut current, &mut out);
    out
}
