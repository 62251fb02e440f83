//! Command-line front end: `stowopt <command> <scenario.json> [flags]`.
//!
//! Exit codes: 0 Optimal or certified, 1 input error, 2 LocalOnly without
//! certification or IterationLimit, 3 Infeasible.

pub mod report;
pub mod scenario;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::model::Problem;
use crate::oracle::{grid_search, LatticeSpec};
use crate::quadratic_analysis::classify_constraint_matrix;
use crate::solver::{mu_sensitivity, sensitivity_check, solve, solve_lp, Solution, SolveStatus};

use report::{oracle_summary, CaseReport, ClassifyReport, Format, SensitivityReport};
use scenario::{parse_order, parse_scenario, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_LOCAL: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Lattice step used by `oracle` when `--step` is absent.
pub const DEFAULT_ORACLE_STEP: f64 = 500.0;

#[derive(Debug, Parser)]
#[command(
    name = "stowopt",
    version,
    about = "Stability-constrained cargo loading optimizer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the full problem with the stability constraint.
    Solve(CommonArgs),
    /// Solve the linear baseline without the stability constraint.
    Lp(CommonArgs),
    /// Classify the constraint matrix and print its congruent diagonal.
    Classify(CommonArgs),
    /// Solve, then certify against an exhaustive lattice search.
    Oracle(CommonArgs),
    /// Compare multiplier-based revenue predictions with re-solves at μ + Δ.
    Sensitivity {
        #[command(flatten)]
        common: CommonArgs,
        /// Margin increment in meters; repeat for a sweep.
        #[arg(long, default_values_t = vec![0.1], allow_negative_numbers = true)]
        delta: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Table => Format::Table,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    /// Minimum metacentric height in meters; overrides the scenario.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Stacking order: normal, reverse, or perm=i,j,k (1-based, keel first).
    #[arg(long)]
    pub order: Option<String>,
    /// Drop the implicit water-ballast cargo.
    #[arg(long)]
    pub no_ballast: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of multistart points.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Lattice step in tons for oracle certification.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    pub format: FormatArg,
    /// Show masses, volumes and revenue in thousands.
    #[arg(long)]
    pub kilotons: bool,
}

impl CommonArgs {
    /// Reads the scenario and applies flag overrides.
    pub fn load(&self) -> Result<Scenario> {
        let text = std::fs::read_to_string(&self.scenario).map_err(|e| {
            Error::Scenario(format!("cannot read {}: {e}", self.scenario.display()))
        })?;
        let mut s = parse_scenario(&text)?;
        if let Some(mu) = self.mu {
            s.mu = mu;
        }
        if let Some(order) = &self.order {
            s.order = parse_order(order)?;
        }
        if self.no_ballast {
            s.include_ballast = false;
        }
        if let Some(seed) = self.seed {
            s.solver.rng_seed = seed;
        }
        if let Some(starts) = self.starts {
            s.solver.multistart_count = starts;
        }
        if let Some(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::invalid(
                    "step",
                    format!("must be finite and > 0, got {step}"),
                ));
            }
        }
        s.validate()?;
        Ok(s)
    }
}

fn status_code(status: SolveStatus, certified: Option<bool>) -> i32 {
    match (status, certified) {
        (SolveStatus::Infeasible, _) => EXIT_INFEASIBLE,
        (SolveStatus::IterationLimit, _) => EXIT_LOCAL,
        (_, Some(false)) => EXIT_LOCAL,
        (SolveStatus::Optimal, _) | (SolveStatus::LocalOnly, Some(true)) => EXIT_OK,
        (SolveStatus::LocalOnly, None) => EXIT_LOCAL,
    }
}

fn case(
    command: &str,
    problem: &Problem,
    solution: &Solution,
    step: Option<f64>,
) -> Result<(CaseReport, i32)> {
    let oracle = match step {
        Some(step) if solution.status != SolveStatus::Infeasible => {
            let grid = grid_search(problem, &LatticeSpec::new(step))?;
            Some(oracle_summary(problem, solution, &grid, step))
        }
        _ => None,
    };
    let report = CaseReport::build(command, problem, solution, oracle)?;
    let code = status_code(solution.status, report.oracle.as_ref().map(|o| o.certified));
    Ok((report, code))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (name, common) = match &cli.command {
        Command::Solve(c) => ("solve", c),
        Command::Lp(c) => ("lp", c),
        Command::Classify(c) => ("classify", c),
        Command::Oracle(c) => ("oracle", c),
        Command::Sensitivity { common, .. } => ("sensitivity", common),
    };
    let scenario = common.load()?;
    let problem = scenario.problem()?;
    for w in scenario.validate()? {
        let _ = writeln!(err, "warning: {}", w.0);
    }
    let format = Format::from(common.format);
    let write = |out: &mut dyn Write, text: String| -> Result<()> {
        out.write_all(text.as_bytes())
            .map_err(|e| Error::Scenario(format!("cannot write output: {e}")))
    };

    let code = match &cli.command {
        Command::Solve(_) | Command::Oracle(_) => {
            let solution = solve(&problem, &scenario.solver)?;
            let step = match &cli.command {
                Command::Oracle(_) => Some(common.step.unwrap_or(DEFAULT_ORACLE_STEP)),
                _ => common.step,
            };
            let (report, code) = case(name, &problem, &solution, step)?;
            for w in report.hydro.warnings(&problem.vessel) {
                let _ = writeln!(err, "warning: {}", w.0);
            }
            write(out, report::render_case(&report, format, common.kilotons))?;
            code
        }
        Command::Lp(_) => {
            let solution = solve_lp(&problem);
            let (report, _) = case(name, &problem, &solution, common.step)?;
            write(out, report::render_case(&report, format, common.kilotons))?;
            match &report.oracle {
                Some(o) if !o.certified => EXIT_LOCAL,
                _ => EXIT_OK,
            }
        }
        Command::Classify(_) => {
            let densities = problem.densities();
            let result = classify_constraint_matrix(&densities, problem.environment.water_density)?;
            let report = ClassifyReport {
                labels: problem.cargoes.iter().map(|c| c.label.clone()).collect(),
                densities,
                water_density: problem.environment.water_density,
                result,
            };
            write(out, report::render_classify(&report, format))?;
            EXIT_OK
        }
        Command::Sensitivity { delta, .. } => {
            let base = solve(&problem, &scenario.solver)?;
            let mut worst = status_code(base.status, None);
            let mut rows = Vec::with_capacity(delta.len());
            for &d in delta {
                let check = sensitivity_check(&problem, &scenario.solver, d)?;
                worst = worst.max(status_code(check.perturbed_status, None));
                rows.push(check);
            }
            let report = SensitivityReport {
                multiplier_stability: base.multipliers.stability,
                displacement: Problem::total_mass(&base.x) + problem.vessel.light_mass,
                sensitivity: mu_sensitivity(&problem, &base),
                rows,
            };
            write(out, report::render_sensitivity(&report, format))?;
            worst
        }
    };
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command.
/// Results go to `out`, diagnostics to `err`; returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}
