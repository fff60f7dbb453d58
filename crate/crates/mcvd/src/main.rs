use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcvd::commands::{self, AllocSpec};
use mcvd::scenario_file::{load_scenario, save_scenario};
use mcvd::AppResult;
use mcvd_core::optimizer::{quantize_allocation, OptimizerConfig};
use mcvd_core::scenario::{default_scenario, Scenario};

#[derive(Parser)]
#[command(
    name = "mcvd",
    version,
    about = "Diffusion-channel BER curves, allocation optimization and Monte Carlo checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario file; the built-in four-amino-acid scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArg {
    fn load(&self) -> AppResult<Scenario> {
        match &self.scenario {
            Some(path) => load_scenario(path),
            None => Ok(default_scenario()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// BER against slot duration for one topology mode.
    BerCurve {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// siso, simo, miso or mimo-mtmr; must match the scenario's shape.
        #[arg(long, default_value = "mimo-mtmr")]
        mode: String,
        /// Slot durations in seconds: `1,2,5` or `1:10:1`.
        #[arg(long, default_value = "1:10:1")]
        t_grid: String,
        /// Molecules per transmitter per slot; the scenario budget when omitted.
        #[arg(long)]
        lambda: Option<f64>,
        /// `uniform` or a JSON allocation file.
        #[arg(long, default_value = "uniform")]
        alloc: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimal allocations over budgets and slot durations.
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Comma-separated budgets.
        #[arg(long, default_value = "50,100,1000,10000")]
        lambda: String,
        #[arg(long, default_value = "10")]
        t_grid: String,
        /// Integer allocation used for the gap column.
        #[arg(long, default_value = "nearest")]
        quantize: String,
        /// Extra random starting points.
        #[arg(long, default_value_t = 0)]
        multistart: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// CSV output; allocations go to `<stem>.allocation.json` next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo BER against the analytic value.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value = "uniform")]
        alloc: String,
        /// Rounding of real allocations to molecule counts.
        #[arg(long, default_value = "budget_exact")]
        quantize: String,
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write the built-in scenario, optionally reduced to one topology mode.
    Scenario {
        #[arg(long, default_value = "mimo-mtmr")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> AppResult<()> {
    match command {
        Command::BerCurve {
            scenario,
            mode,
            t_grid,
            lambda,
            alloc,
            out,
        } => {
            let layout = commands::parse_layout(&mode)?;
            let grid = commands::parse_t_grid(&t_grid)?;
            let s = scenario.load()?;
            let g = commands::resolve_allocation(
                &s,
                lambda.unwrap_or(s.budget),
                &AllocSpec::parse(&alloc),
            )?;
            let points = commands::ber_curve(&s, layout, &grid, &g)?;
            commands::write_output(&out, &commands::curve_csv(&points))
        }
        Command::Optimize {
            scenario,
            lambda,
            t_grid,
            quantize,
            multistart,
            seed,
            threads,
            out,
        } => {
            let lambdas = commands::parse_list(&lambda, "lambda")?;
            let grid = commands::parse_t_grid(&t_grid)?;
            let mode = commands::parse_quantize(&quantize)?;
            let s = scenario.load()?;
            let cfg = OptimizerConfig {
                multistart,
                seed,
                ..OptimizerConfig::default()
            };
            let points = commands::optimize_sweep(&s, &lambdas, &grid, &cfg, mode, threads)?;
            commands::write_output(&out, &commands::optimize_csv(&points))?;
            commands::write_output(
                &commands::sidecar_path(&out),
                &commands::optimize_sidecar(&points),
            )
        }
        Command::Simulate {
            scenario,
            lambda,
            alloc,
            quantize,
            slots,
            seed,
            threads,
            out,
        } => {
            let mode = commands::parse_quantize(&quantize)?;
            let s = scenario.load()?;
            let g = commands::resolve_allocation(
                &s,
                lambda.unwrap_or(s.budget),
                &AllocSpec::parse(&alloc),
            )?;
            let report = commands::simulate_report(
                &s,
                &quantize_allocation(&g, mode),
                slots,
                seed,
                threads,
            )?;
            commands::write_output(&out, &commands::report_json(&report))
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!("{}", commands::describe(&s));
            Ok(())
        }
        Command::Scenario { mode, out } => {
            let base = default_scenario();
            let s = match commands::parse_layout(&mode)? {
                mcvd_core::system::Layout::Siso => base.siso()?,
                mcvd_core::system::Layout::Simo => base.simo()?,
                mcvd_core::system::Layout::Miso => base.miso()?,
                mcvd_core::system::Layout::MimoMtmr => base,
            };
            save_scenario(&s, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
