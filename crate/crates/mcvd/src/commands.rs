//! The four subcommands as library functions, so tests can drive them
//! without spawning processes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mcvd_core::montecarlo::{SimConfig, Simulation};
use mcvd_core::optimizer::{
    optimize_allocation, AllocationMatrix, IntegerAllocation, OptResult, OptimizerConfig,
    QuantizeMode,
};
use mcvd_core::scenario::Scenario;
use mcvd_core::system::{layout_ber, mimo_mtmr_ber, Layout};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::parallel::simulate_parallel;

pub fn parse_layout(s: &str) -> AppResult<Layout> {
    match s {
        "siso" => Ok(Layout::Siso),
        "simo" => Ok(Layout::Simo),
        "miso" => Ok(Layout::Miso),
        "mimo-mtmr" | "mimo" => Ok(Layout::MimoMtmr),
        other => Err(AppError::Usage(format!(
            "unknown mode `{other}`, expected one of siso, simo, miso, mimo-mtmr"
        ))),
    }
}

pub fn parse_quantize(s: &str) -> AppResult<QuantizeMode> {
    match s {
        "nearest" => Ok(QuantizeMode::Nearest),
        "budget_exact" => Ok(QuantizeMode::BudgetExact),
        other => Err(AppError::Usage(format!(
            "unknown quantization `{other}`, expected nearest or budget_exact"
        ))),
    }
}

fn parse_number(s: &str, what: &str) -> AppResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| AppError::Usage(format!("{what}: `{s}` is not a finite number")))
}

/// Comma-separated values.
pub fn parse_list(s: &str, what: &str) -> AppResult<Vec<f64>> {
    let values = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_number(p, what))
        .collect::<AppResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(AppError::Usage(format!("{what}: empty list")));
    }
    Ok(values)
}

/// Either a comma list or `start:stop:step` with the stop included.
pub fn parse_t_grid(s: &str) -> AppResult<Vec<f64>> {
    let grid = match s.split(':').collect::<Vec<_>>()[..] {
        [start, stop, step] => {
            let (start, stop, step) = (
                parse_number(start, "t-grid")?,
                parse_number(stop, "t-grid")?,
                parse_number(step, "t-grid")?,
            );
            if step <= 0.0 || stop < start {
                return Err(AppError::Usage(format!(
                    "t-grid: `{s}` needs step > 0 and stop >= start"
                )));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        [_] => parse_list(s, "t-grid")?,
        _ => {
            return Err(AppError::Usage(format!(
                "t-grid: `{s}` is neither a list nor start:stop:step"
            )))
        }
    };
    if let Some(bad) = grid.iter().find(|&&t| t <= 0.0) {
        return Err(AppError::Usage(format!(
            "t-grid: slot durations must be positive, got {bad}"
        )));
    }
    Ok(grid)
}

/// On-disk allocation: one row per transmitter, one column per receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationFile {
    pub rows: Vec<Vec<f64>>,
}

impl AllocationFile {
    pub fn from_matrix(g: &AllocationMatrix) -> Self {
        Self {
            rows: (0..g.n_tx()).map(|s| g.row(s).to_vec()).collect(),
        }
    }

    pub fn from_integer(g: &IntegerAllocation) -> Self {
        Self {
            rows: (0..g.n_tx())
                .map(|s| g.row(s).iter().map(|&x| x as f64).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AllocSpec {
    Uniform,
    File(PathBuf),
}

impl AllocSpec {
    pub fn parse(s: &str) -> Self {
        match s {
            "uniform" => AllocSpec::Uniform,
            path => AllocSpec::File(PathBuf::from(path)),
        }
    }
}

/// Resolves an allocation against the scenario's transmitter and receiver counts.
pub fn resolve_allocation(
    scenario: &Scenario,
    budget: f64,
    spec: &AllocSpec,
) -> AppResult<AllocationMatrix> {
    let (n, r) = (scenario.topology.n_tx(), scenario.topology.n_rx());
    match spec {
        AllocSpec::Uniform => Ok(AllocationMatrix::uniform(n, r, budget)?),
        AllocSpec::File(path) => {
            let text = fs::read_to_string(path).map_err(|source| AppError::Read {
                path: path.clone(),
                source,
            })?;
            let file: AllocationFile =
                serde_json::from_str(&text).map_err(|e| AppError::Parse {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            if file.rows.len() != n || file.rows.iter().any(|row| row.len() != r) {
                return Err(AppError::Validation(format!(
                    "{}: allocation must be {n} row(s) of {r} entries",
                    path.display()
                )));
            }
            Ok(AllocationMatrix::from_rows(n, r, file.rows.concat())?)
        }
    }
}

pub fn write_output(path: &Path, contents: &str) -> AppResult<()> {
    fs::write(path, contents).map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t_seconds: f64,
    pub ber: f64,
    pub bit_rate: f64,
}

pub fn ber_curve(
    scenario: &Scenario,
    layout: Layout,
    t_grid: &[f64],
    alloc: &AllocationMatrix,
) -> AppResult<Vec<CurvePoint>> {
    layout.check(&scenario.topology)?;
    t_grid
        .iter()
        .map(|&t| {
            let rep = layout_ber(
                layout,
                &scenario.topology,
                alloc,
                &scenario.with_slot(t).slot_config(),
                &scenario.weights,
            )?;
            Ok(CurvePoint {
                t_seconds: t,
                ber: rep.aggregate,
                bit_rate: rep.bit_rate,
            })
        })
        .collect()
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("t_seconds,ber,bit_rate\n");
    for p in points {
        let _ = writeln!(out, "{},{:e},{}", p.t_seconds, p.ber, p.bit_rate);
    }
    out
}

#[derive(Debug, Clone)]
pub struct OptimizePoint {
    pub t_seconds: f64,
    pub lambda: f64,
    pub result: OptResult,
    pub gap: f64,
}

/// Optimizes every (t, Λ) pair; pairs run concurrently on `threads` workers.
pub fn optimize_sweep(
    scenario: &Scenario,
    lambdas: &[f64],
    t_grid: &[f64],
    cfg: &OptimizerConfig,
    quantize: QuantizeMode,
    threads: usize,
) -> AppResult<Vec<OptimizePoint>> {
    let jobs: Vec<(f64, f64)> = t_grid
        .iter()
        .flat_map(|&t| lambdas.iter().map(move |&l| (t, l)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {threads} worker thread(s): {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(t, lambda)| {
                let s = scenario.with_slot(t);
                let result = optimize_allocation(
                    &s.topology,
                    &s.slot_config(),
                    &s.weights,
                    lambda,
                    None,
                    cfg,
                )?;
                let gap = (result.integer(quantize).1 - result.ber_real).abs();
                Ok(OptimizePoint {
                    t_seconds: t,
                    lambda,
                    result,
                    gap,
                })
            })
            .collect()
    })
}

pub fn optimize_csv(points: &[OptimizePoint]) -> String {
    let mut out = String::from("t_seconds,lambda,ber_real,ber_int_nearest,ber_int_exact,gap\n");
    for p in points {
        let r = &p.result;
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e}",
            p.t_seconds, p.lambda, r.ber_real, r.ber_int_nearest, r.ber_int_exact, p.gap
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct OptimumRecord {
    t_seconds: f64,
    lambda: f64,
    ber_real: f64,
    ber_uniform: f64,
    iterations: usize,
    converged: bool,
    real: AllocationFile,
    integer_nearest: AllocationFile,
    integer_exact: AllocationFile,
}

/// Allocations found by [`optimize_sweep`], one record per CSV row.
pub fn optimize_sidecar(points: &[OptimizePoint]) -> String {
    let records: Vec<OptimumRecord> = points
        .iter()
        .map(|p| OptimumRecord {
            t_seconds: p.t_seconds,
            lambda: p.lambda,
            ber_real: p.result.ber_real,
            ber_uniform: p.result.ber_uniform,
            iterations: p.result.iterations,
            converged: p.result.converged,
            real: AllocationFile::from_matrix(&p.result.real),
            integer_nearest: AllocationFile::from_integer(&p.result.integer_nearest),
            integer_exact: AllocationFile::from_integer(&p.result.integer_exact),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("plain data") + "\n"
}

/// Sidecar location for an optimize CSV: same stem, `.allocation.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "optimize".into());
    csv.with_file_name(format!("{stem}.allocation.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverCheck {
    pub receiver: usize,
    pub molecule: String,
    pub threshold: f64,
    pub analytic_ber: f64,
    pub empirical_ber: f64,
    pub errors: u64,
    pub slots: u64,
    /// Empirical standard error of the BER estimate.
    pub std_error: f64,
    /// Standard error under the analytic BER; the 3σ test uses this one.
    pub reference_std_error: f64,
    /// `None` when both the analytic reference and the deviation are zero.
    pub z: Option<f64>,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub slots: u64,
    pub warmup_slots: u64,
    pub slot_s: f64,
    pub isi_depth: usize,
    pub allocation: AllocationFile,
    pub receivers: Vec<ReceiverCheck>,
    pub analytic_ber: f64,
    pub empirical_ber: f64,
    pub std_error: f64,
    pub reference_std_error: f64,
    pub within_3_sigma: bool,
}

fn three_sigma(analytic: f64, empirical: f64, n: u64) -> (f64, Option<f64>, bool) {
    let se = (analytic * (1.0 - analytic) / n as f64).sqrt();
    let dev = (empirical - analytic).abs();
    if se > 0.0 {
        let z = dev / se;
        (se, Some(z), z <= 3.0)
    } else {
        (se, if dev == 0.0 { Some(0.0) } else { None }, dev == 0.0)
    }
}

pub fn simulate_report(
    scenario: &Scenario,
    alloc: &IntegerAllocation,
    slots: u64,
    seed: u64,
    threads: usize,
) -> AppResult<SimulationReport> {
    let slot = scenario.slot_config();
    let warmup = scenario.isi_depth as u64;
    let cfg = SimConfig {
        warmup_slots: warmup,
        ..SimConfig::new(slots, seed)
    };
    let analytic = mimo_mtmr_ber(
        &scenario.topology,
        &alloc.to_real(),
        &slot,
        &scenario.weights,
    )?;
    let sim = Simulation::new(&scenario.topology, alloc, &slot, &scenario.weights, cfg)?;
    let res = simulate_parallel(&sim, threads)?;
    let receivers: Vec<ReceiverCheck> = res
        .receivers
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let a = analytic.per_receiver[k];
            let (reference, z, ok) = three_sigma(a, r.ber, r.slots);
            ReceiverCheck {
                receiver: k,
                molecule: scenario.topology.receivers()[k].molecule.name().to_string(),
                threshold: r.threshold.0,
                analytic_ber: a,
                empirical_ber: r.ber,
                errors: r.errors,
                slots: r.slots,
                std_error: r.std_error,
                reference_std_error: reference,
                z,
                within_3_sigma: ok,
            }
        })
        .collect();
    // Receivers share simulated slots, so the aggregate reference error is
    // bounded by the weighted per-receiver errors.
    let w = scenario.weights.as_slice();
    let reference: f64 = receivers
        .iter()
        .zip(w)
        .map(|(c, w)| w * c.reference_std_error)
        .sum();
    let dev = (res.aggregate_ber - analytic.aggregate).abs();
    Ok(SimulationReport {
        seed,
        slots: res.slots,
        warmup_slots: warmup,
        slot_s: scenario.slot,
        isi_depth: scenario.isi_depth,
        allocation: AllocationFile::from_integer(alloc),
        within_3_sigma: receivers.iter().all(|c| c.within_3_sigma) && dev <= 3.0 * reference,
        receivers,
        analytic_ber: analytic.aggregate,
        empirical_ber: res.aggregate_ber,
        std_error: res.aggregate_std_error,
        reference_std_error: reference,
    })
}

pub fn report_json(report: &SimulationReport) -> String {
    serde_json::to_string_pretty(report).expect("plain data") + "\n"
}

/// One-paragraph summary printed by `validate`.
pub fn describe(scenario: &Scenario) -> String {
    let names: Vec<&str> = scenario
        .topology
        .receivers()
        .iter()
        .map(|r| r.molecule.name())
        .collect();
    format!(
        "ok: {} transmitter(s), {} receiver(s) [{}], slot {} s, isi depth {}, budget {}",
        scenario.topology.n_tx(),
        scenario.topology.n_rx(),
        names.join(", "),
        scenario.slot,
        scenario.isi_depth,
        scenario.budget
    )
}
