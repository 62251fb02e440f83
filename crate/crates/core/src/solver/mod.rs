//! LP baseline, the stability-constrained solver, KKT certification and
//! μ-sensitivity.
//!
//! [`solve`] runs a feasible local method from one or more interior starts.
//! When the constraint matrix is positive semidefinite the feasible set is
//! convex and a single start is enough; otherwise starts are drawn from the
//! deadweight simplex with a seeded generator and the best point passing
//! [`kkt_verify`] is kept.

mod kkt;
mod local;
mod lp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{revenue, Problem};
use crate::quadratic_analysis::{classify_constraint_matrix, Definiteness};

pub use kkt::{
    kkt_verify, recover_multipliers, relative_slacks, KktReport, Multipliers, ACTIVE_SET_TOLERANCE,
};

use local::{LocalOutcome, Scaled};

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub multistart_count: usize,
    pub rng_seed: u64,
    pub feasibility_tolerance: f64,
    pub kkt_tolerance: f64,
    /// Newton iterations allowed per local solve.
    pub max_iterations: usize,
    /// Use a single start when the constraint matrix is PSD.
    pub convexity_dispatch: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            multistart_count: 32,
            rng_seed: 0,
            feasibility_tolerance: 1e-8,
            kkt_tolerance: 1e-6,
            max_iterations: 500,
            convexity_dispatch: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.multistart_count == 0 {
            return Err(Error::invalid("multistart_count", "must be >= 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        for (name, v) in [
            ("feasibility_tolerance", self.feasibility_tolerance),
            ("kkt_tolerance", self.kkt_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    /// Certified global optimum (convex case, LP, or lattice certification).
    Optimal,
    /// KKT point from multistart on a nonconvex problem.
    LocalOnly,
    /// The empty vessel already violates the stability margin.
    Infeasible,
    /// No start produced a KKT point.
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::LocalOnly => "LocalOnly",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::IterationLimit => "IterationLimit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    /// Loads in tons, in the problem's stack order.
    pub x: Vec<f64>,
    pub revenue: f64,
    pub multipliers: Multipliers,
    pub kkt: KktReport,
    pub status: SolveStatus,
    pub starts_used: usize,
    pub best_start_index: usize,
    /// Newton iterations spent by the winning start.
    pub iterations: usize,
}

impl Solution {
    /// Which of (deadweight, volume, stability) are binding at `tolerance`
    /// relative slack.
    pub fn binding(&self, problem: &Problem, tolerance: f64) -> [bool; 3] {
        relative_slacks(problem, &self.x).map(|s| s <= tolerance)
    }
}

/// Optimum of the problem without the stability constraint.
///
/// The KKT report is evaluated against the full problem with a zero
/// stability multiplier, so it is satisfied only when the stability
/// constraint happens to be slack at the LP vertex.
pub fn solve_lp(problem: &Problem) -> Solution {
    let rows = vec![vec![1.0; problem.dim()], problem.volume_coeffs.clone()];
    let caps = [problem.deadweight_cap, problem.volume_cap];
    let lp = lp::simplex_max(&problem.objective, &rows, &caps);
    let multipliers = Multipliers {
        deadweight: lp.duals[0],
        volume: lp.duals[1],
        stability: 0.0,
        nonneg: lp.reduced,
    };
    let kkt = kkt_verify(
        problem,
        &lp.x,
        Some(&multipliers),
        SolverOptions::default().kkt_tolerance,
    );
    Solution {
        revenue: revenue(problem, &lp.x).unwrap_or(0.0),
        x: lp.x,
        multipliers,
        kkt,
        status: SolveStatus::Optimal,
        starts_used: 1,
        best_start_index: 0,
        iterations: 0,
    }
}

/// Interior start drawn uniformly from `{y >= 0, 1'y <= 1}` (loads over
/// deadweight), stream `index` of the seeded generator.
fn random_start(scaled: &Scaled, seed: u64, index: usize) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let n = scaled.n;
    let exps: Vec<f64> = (0..=n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = exps.iter().sum();
    scaled.pull_inside(exps[..n].iter().map(|e| e / total).collect())
}

fn central_start(scaled: &Scaled) -> Option<Vec<f64>> {
    let n = scaled.n;
    scaled.pull_inside(vec![0.5 / (n as f64 + 1.0); n])
}

struct Candidate {
    start: usize,
    outcome: LocalOutcome,
    revenue: f64,
    kkt: KktReport,
}

fn evaluate(problem: &Problem, start: usize, outcome: LocalOutcome, tol: f64) -> Candidate {
    let kkt = kkt_verify(problem, &outcome.x, Some(&outcome.multipliers), tol);
    Candidate {
        start,
        revenue: revenue(problem, &outcome.x).unwrap_or(f64::NEG_INFINITY),
        outcome,
        kkt,
    }
}

/// `a` beats `b`: higher revenue, or a revenue tie and a lexicographically
/// smaller loading.
fn better(a: &Candidate, b: &Candidate) -> bool {
    let tie = 1e-9 * a.revenue.abs().max(b.revenue.abs()).max(1.0);
    if a.revenue > b.revenue + tie {
        return true;
    }
    if a.revenue < b.revenue - tie {
        return false;
    }
    a.outcome
        .x
        .iter()
        .zip(&b.outcome.x)
        .find(|(u, v)| u != v)
        .is_some_and(|(u, v)| u < v)
}

fn origin_solution(problem: &Problem, status: SolveStatus, tol: f64) -> Solution {
    let n = problem.dim();
    let x = vec![0.0; n];
    let kkt = kkt_verify(problem, &x, None, tol);
    Solution {
        multipliers: recover_multipliers(problem, &x),
        x,
        revenue: 0.0,
        kkt,
        status,
        starts_used: 0,
        best_start_index: 0,
        iterations: 0,
    }
}

/// Maximizes revenue under the deadweight, volume and stability constraints.
pub fn solve(problem: &Problem, options: &SolverOptions) -> Result<Solution> {
    options.validate()?;
    let tol = options.kkt_tolerance;
    if problem.rhs < 0.0 {
        return Ok(origin_solution(problem, SolveStatus::Infeasible, tol));
    }
    if problem.objective.iter().all(|&p| p == 0.0) {
        let mut sol = origin_solution(problem, SolveStatus::Optimal, tol);
        sol.multipliers.nonneg = vec![0.0; problem.dim()];
        sol.kkt = kkt_verify(problem, &sol.x, Some(&sol.multipliers), tol);
        return Ok(sol);
    }

    let class =
        classify_constraint_matrix(&problem.densities(), problem.environment.water_density)?;
    let convex = class.class == Definiteness::PositiveSemidefinite;
    let scaled = Scaled::new(problem);

    let candidates: Vec<Candidate> = if convex && options.convexity_dispatch {
        central_start(&scaled)
            .map(|y0| {
                evaluate(
                    problem,
                    0,
                    scaled.solve_from(y0, options.max_iterations),
                    tol,
                )
            })
            .into_iter()
            .collect()
    } else {
        (0..options.multistart_count)
            .into_par_iter()
            .filter_map(|k| {
                let y0 = random_start(&scaled, options.rng_seed, k)?;
                Some(evaluate(
                    problem,
                    k,
                    scaled.solve_from(y0, options.max_iterations),
                    tol,
                ))
            })
            .collect()
    };
    let starts_used = if convex && options.convexity_dispatch {
        1
    } else {
        options.multistart_count
    };

    let pick = |pool: &mut dyn Iterator<Item = Candidate>| {
        pool.fold(None::<Candidate>, |best, c| match best {
            Some(b) if !better(&c, &b) => Some(b),
            _ => Some(c),
        })
    };
    let (kkt_points, others): (Vec<_>, Vec<_>) =
        candidates.into_iter().partition(|c| c.kkt.satisfied);
    let feasible_others = others
        .into_iter()
        .filter(|c| c.kkt.primal_feasibility <= options.feasibility_tolerance);
    let (best, status) = match pick(&mut kkt_points.into_iter()) {
        Some(b) => (
            b,
            if convex {
                SolveStatus::Optimal
            } else {
                SolveStatus::LocalOnly
            },
        ),
        None => match pick(&mut feasible_others.into_iter()) {
            Some(b) => (b, SolveStatus::IterationLimit),
            None => return Ok(origin_solution(problem, SolveStatus::IterationLimit, tol)),
        },
    };

    Ok(Solution {
        x: best.outcome.x,
        revenue: best.revenue,
        multipliers: best.outcome.multipliers,
        kkt: best.kkt,
        status,
        starts_used,
        best_start_index: best.start,
        iterations: best.outcome.iterations,
    })
}

/// First-order change of optimal revenue per meter of stability margin:
/// `λ_S (x'1 + M)`.
pub fn mu_sensitivity(problem: &Problem, solution: &Solution) -> f64 {
    solution.multipliers.stability * (Problem::total_mass(&solution.x) + problem.vessel.light_mass)
}

/// Multiplier-based prediction against an actual re-solve at `μ + delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCheck {
    pub mu: f64,
    pub delta: f64,
    pub base_revenue: f64,
    pub perturbed_revenue: f64,
    /// `delta · λ_S · displacement`.
    pub predicted_drop: f64,
    pub actual_drop: f64,
    /// `|actual - predicted| / |actual|`.
    pub relative_gap: f64,
    pub base_status: SolveStatus,
    pub perturbed_status: SolveStatus,
}

pub fn sensitivity_check(
    problem: &Problem,
    options: &SolverOptions,
    delta: f64,
) -> Result<SensitivityCheck> {
    let base = solve(problem, options)?;
    let mu = problem.policy.min_metacentric_height;
    let perturbed_problem = problem.with_min_metacentric_height(mu + delta)?;
    let perturbed = solve(&perturbed_problem, options)?;
    let predicted_drop = delta * mu_sensitivity(problem, &base);
    let actual_drop = base.revenue - perturbed.revenue;
    Ok(SensitivityCheck {
        mu,
        delta,
        base_revenue: base.revenue,
        perturbed_revenue: perturbed.revenue,
        predicted_drop,
        actual_drop,
        relative_gap: (actual_drop - predicted_drop).abs()
            / actual_drop.abs().max(f64::MIN_POSITIVE),
        base_status: base.status,
        perturbed_status: perturbed.status,
    })
}
