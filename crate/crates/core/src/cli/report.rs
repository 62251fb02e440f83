//! Report assembly and rendering as an aligned table, CSV, or JSON.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::hydrostatics::{metacentric_height, HydroState};
use crate::model::Problem;
use crate::oracle::GridResult;
use crate::quadratic_analysis::{classify_constraint_matrix, DefinitenessClass};
use crate::solver::{mu_sensitivity, KktReport, SensitivityCheck, Solution, SolveStatus};

/// Relative slack at which a constraint is reported as binding.
pub const BINDING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadRow {
    /// Stack position from the keel, 1-based.
    pub position: usize,
    pub label: String,
    pub density: f64,
    pub tons: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Binding {
    pub deadweight: bool,
    pub volume: bool,
    pub stability: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub step: f64,
    pub best_revenue: f64,
    pub points_evaluated: u64,
    /// `max p · n · step`: how far the lattice optimum may trail a continuous one.
    pub lattice_gap_bound: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub command: String,
    pub mu: f64,
    pub status: SolveStatus,
    pub loads: Vec<LoadRow>,
    pub total_load: f64,
    pub revenue: f64,
    pub volume_used: f64,
    pub hydro: HydroState,
    pub multiplier_stability: f64,
    pub multiplier_deadweight: f64,
    pub multiplier_volume: f64,
    pub mu_sensitivity: f64,
    pub binding: Binding,
    pub definiteness: DefinitenessClass,
    pub kkt: KktReport,
    pub starts_used: usize,
    pub best_start_index: usize,
    pub iterations: usize,
    pub oracle: Option<OracleSummary>,
}

impl CaseReport {
    pub fn build(
        command: &str,
        problem: &Problem,
        solution: &Solution,
        oracle: Option<OracleSummary>,
    ) -> Result<Self> {
        let hydro = metacentric_height(problem, &solution.x)?;
        let definiteness =
            classify_constraint_matrix(&problem.densities(), problem.environment.water_density)?;
        let binding = solution.binding(problem, BINDING_TOLERANCE);
        let loads = problem
            .cargoes
            .iter()
            .zip(&solution.x)
            .enumerate()
            .map(|(i, (c, &tons))| LoadRow {
                position: i + 1,
                label: c.label.clone(),
                density: c.density,
                tons,
                volume: tons / c.density,
            })
            .collect();
        Ok(CaseReport {
            command: command.to_string(),
            mu: problem.policy.min_metacentric_height,
            status: solution.status,
            loads,
            total_load: Problem::total_mass(&solution.x),
            revenue: solution.revenue,
            volume_used: problem.volume_used(&solution.x),
            hydro,
            multiplier_stability: solution.multipliers.stability,
            multiplier_deadweight: solution.multipliers.deadweight,
            multiplier_volume: solution.multipliers.volume,
            mu_sensitivity: mu_sensitivity(problem, solution),
            binding: Binding {
                deadweight: binding[0],
                volume: binding[1],
                stability: binding[2],
            },
            definiteness,
            kkt: solution.kkt.clone(),
            starts_used: solution.starts_used,
            best_start_index: solution.best_start_index,
            iterations: solution.iterations,
            oracle,
        })
    }

    pub fn certified(&self) -> bool {
        self.oracle.as_ref().is_some_and(|o| o.certified)
    }
}

pub fn oracle_summary(
    problem: &Problem,
    solution: &Solution,
    grid: &GridResult,
    step: f64,
) -> OracleSummary {
    let pmax = problem.objective.iter().fold(0.0f64, |m, v| m.max(*v));
    OracleSummary {
        step,
        best_revenue: grid.best_revenue,
        points_evaluated: grid.points_evaluated,
        lattice_gap_bound: pmax * problem.dim() as f64 * step,
        certified: solution.revenue
            >= grid.best_revenue - crate::oracle::certification_tolerance(grid.best_revenue),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub labels: Vec<String>,
    pub densities: Vec<f64>,
    pub water_density: f64,
    pub result: DefinitenessClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub multiplier_stability: f64,
    pub displacement: f64,
    pub sensitivity: f64,
    pub rows: Vec<SensitivityCheck>,
}

/// One rendered cell.
#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn table(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.4}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => significant(*v, 12),
            Cell::Text(s) if s.contains([',', '"']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// `value` rounded to `digits` significant digits, without exponent
/// notation for ordinary magnitudes.
pub fn significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    if !(-6..=15).contains(&magnitude) {
        return format!("{:.*e}", digits - 1, value);
    }
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{value:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

struct Rows {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

fn render(rows: &Rows, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&rows.header.join(","));
            out.push('\n');
            for r in &rows.rows {
                let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Format::Table | Format::Json => {
            let text: Vec<Vec<String>> = rows
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::table).collect())
                .collect();
            let mut widths: Vec<usize> = rows.header.iter().map(|h| h.len()).collect();
            for r in &text {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cells: Vec<String>| {
                let mut s = String::new();
                for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                    if i == 0 {
                        let _ = write!(s, "{c:<w$}");
                    } else {
                        let _ = write!(s, "  {c:>w$}");
                    }
                }
                s.trim_end().to_string()
            };
            out.push_str(&line(rows.header.iter().map(|h| h.to_string()).collect()));
            out.push('\n');
            for r in text {
                out.push_str(&line(r));
                out.push('\n');
            }
        }
    }
    out
}

fn yes_no(b: bool) -> Cell {
    Cell::Text(if b { "yes" } else { "no" }.into())
}

fn kv(name: impl Into<String>, cell: Cell) -> Vec<Cell> {
    vec![Cell::Text(name.into()), cell]
}

/// Renders a case report. `kilotons` divides masses, volumes and revenue
/// by 10³ in table and CSV output.
pub fn render_case(report: &CaseReport, format: Format, kilotons: bool) -> String {
    if format == Format::Json {
        return serde_json::to_string_pretty(report).expect("report is serializable") + "\n";
    }
    let k = if kilotons { 1e-3 } else { 1.0 };
    let (mass_unit, vol_unit, money_unit) = if kilotons {
        ("kt", "1e3m3", "1e3")
    } else {
        ("t", "m3", "money")
    };
    let loads = Rows {
        header: vec!["position", "label", "density", "load", "volume"],
        rows: report
            .loads
            .iter()
            .map(|l| {
                vec![
                    Cell::Text(l.position.to_string()),
                    Cell::Text(l.label.clone()),
                    Cell::Num(l.density),
                    Cell::Num(l.tons * k),
                    Cell::Num(l.volume * k),
                ]
            })
            .collect(),
    };
    let h = &report.hydro;
    let mut metrics = vec![
        kv("command", Cell::Text(report.command.clone())),
        kv("status", Cell::Text(report.status.to_string())),
        kv("mu_m", Cell::Num(report.mu)),
        kv(
            format!("total_load_{mass_unit}"),
            Cell::Num(report.total_load * k),
        ),
        kv(
            format!("revenue_{money_unit}"),
            Cell::Num(report.revenue * k),
        ),
        kv(
            format!("volume_used_{vol_unit}"),
            Cell::Num(report.volume_used * k),
        ),
        kv("draft_m", Cell::Num(h.draft)),
        kv("km_m", Cell::Num(h.keel_to_metacenter)),
        kv("kg_m", Cell::Num(h.keel_to_mass)),
        kv("gm_m", Cell::Num(h.metacentric_height)),
        kv(
            "multiplier_stability",
            Cell::Num(report.multiplier_stability),
        ),
        kv(
            "multiplier_deadweight",
            Cell::Num(report.multiplier_deadweight),
        ),
        kv("multiplier_volume", Cell::Num(report.multiplier_volume)),
        kv("mu_sensitivity_per_m", Cell::Num(report.mu_sensitivity)),
        kv("binding_deadweight", yes_no(report.binding.deadweight)),
        kv("binding_volume", yes_no(report.binding.volume)),
        kv("binding_stability", yes_no(report.binding.stability)),
        kv(
            "definiteness",
            Cell::Text(report.definiteness.class.to_string()),
        ),
        kv("kkt_satisfied", yes_no(report.kkt.satisfied)),
        kv(
            "kkt_stationarity",
            Cell::Text(format!("{:.3e}", report.kkt.stationarity_residual)),
        ),
        kv(
            "kkt_complementarity",
            Cell::Text(format!("{:.3e}", report.kkt.complementarity_residual)),
        ),
        kv(
            "kkt_primal",
            Cell::Text(format!("{:.3e}", report.kkt.primal_feasibility)),
        ),
        kv(
            "kkt_dual",
            Cell::Text(format!("{:.3e}", report.kkt.dual_feasibility)),
        ),
        kv("starts_used", Cell::Text(report.starts_used.to_string())),
        kv(
            "best_start_index",
            Cell::Text(report.best_start_index.to_string()),
        ),
        kv(
            "newton_iterations",
            Cell::Text(report.iterations.to_string()),
        ),
    ];
    if let Some(o) = &report.oracle {
        metrics.push(kv("oracle_step_t", Cell::Num(o.step)));
        metrics.push(kv(
            format!("oracle_best_revenue_{money_unit}"),
            Cell::Num(o.best_revenue * k),
        ));
        metrics.push(kv(
            "oracle_points",
            Cell::Text(o.points_evaluated.to_string()),
        ));
        metrics.push(kv(
            format!("oracle_gap_bound_{money_unit}"),
            Cell::Num(o.lattice_gap_bound * k),
        ));
        metrics.push(kv("certified", yes_no(o.certified)));
    }
    let metrics = Rows {
        header: vec!["field", "value"],
        rows: metrics,
    };
    let sep = if format == Format::Table { "\n" } else { "" };
    format!(
        "{}{sep}{}",
        render(&loads, format),
        render(&metrics, format)
    )
}

pub fn render_classify(report: &ClassifyReport, format: Format) -> String {
    if format == Format::Json {
        return serde_json::to_string_pretty(report).expect("report is serializable") + "\n";
    }
    let rows = Rows {
        header: vec!["position", "label", "density", "congruent_diagonal"],
        rows: report
            .labels
            .iter()
            .zip(&report.densities)
            .zip(&report.result.evidence.diagonal)
            .enumerate()
            .map(|(i, ((l, d), g))| {
                vec![
                    Cell::Text((i + 1).to_string()),
                    Cell::Text(l.clone()),
                    Cell::Num(*d),
                    Cell::Num(*g),
                ]
            })
            .collect(),
    };
    let (neg, zero, pos) = report.result.inertia();
    let summary = Rows {
        header: vec!["field", "value"],
        rows: vec![
            kv("class", Cell::Text(report.result.class.to_string())),
            kv(
                "inertia",
                Cell::Text(format!("neg={neg} zero={zero} pos={pos}")),
            ),
            kv(
                "factor_check_residual",
                Cell::Text(format!(
                    "{:.3e}",
                    report.result.evidence.factor_check_residual
                )),
            ),
        ],
    };
    let sep = if format == Format::Table { "\n" } else { "" };
    format!("{}{sep}{}", render(&rows, format), render(&summary, format))
}

pub fn render_sensitivity(report: &SensitivityReport, format: Format) -> String {
    if format == Format::Json {
        return serde_json::to_string_pretty(report).expect("report is serializable") + "\n";
    }
    let rows = Rows {
        header: vec![
            "mu",
            "delta",
            "base_revenue",
            "perturbed_revenue",
            "predicted_drop",
            "actual_drop",
            "relative_gap",
        ],
        rows: report
            .rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Num(r.mu),
                    Cell::Num(r.delta),
                    Cell::Num(r.base_revenue),
                    Cell::Num(r.perturbed_revenue),
                    Cell::Num(r.predicted_drop),
                    Cell::Num(r.actual_drop),
                    Cell::Num(r.relative_gap),
                ]
            })
            .collect(),
    };
    let summary = Rows {
        header: vec!["field", "value"],
        rows: vec![
            kv(
                "multiplier_stability",
                Cell::Num(report.multiplier_stability),
            ),
            kv("displacement_t", Cell::Num(report.displacement)),
            kv("revenue_per_m", Cell::Num(report.sensitivity)),
        ],
    };
    let sep = if format == Format::Table { "\n" } else { "" };
    format!("{}{sep}{}", render(&summary, format), render(&rows, format))
}
