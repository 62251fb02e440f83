//! First-order optimality certificate for a loading.
//!
//! Stationarity of the Lagrangian reads
//! `p = λ_C 1 + λ_V (1/d) + λ_S ∇g(x) - ν`, with `∇g = 2 quad_scale A x + linear_coeff 1`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::hydrostatics::linear_slacks;
use crate::model::{dot, Problem};

/// Relative slack below which a constraint counts as active when
/// multipliers have to be recovered from a bare loading.
pub const ACTIVE_SET_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Multipliers {
    /// Money per ton of deadweight.
    pub deadweight: f64,
    /// Money per m³ of volume.
    pub volume: f64,
    /// Money per t·m of the stability constraint.
    pub stability: f64,
    /// One per load bound `x_i >= 0`.
    pub nonneg: Vec<f64>,
}

impl Multipliers {
    pub fn zero(n: usize) -> Self {
        Self {
            deadweight: 0.0,
            volume: 0.0,
            stability: 0.0,
            nonneg: vec![0.0; n],
        }
    }
}

/// Scaled residuals; stationarity and dual feasibility are relative to
/// `max |p|`, complementarity to the objective, primal feasibility to each
/// constraint's capacity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
    pub primal_feasibility: f64,
    /// Magnitude of the most negative scaled multiplier, 0 if none.
    pub dual_feasibility: f64,
    pub satisfied: bool,
}

/// Relative slacks `(deadweight, volume, stability)`.
pub fn relative_slacks(problem: &Problem, x: &[f64]) -> [f64; 3] {
    let (dw, vol) = linear_slacks(problem, x);
    [
        dw / problem.deadweight_cap,
        vol / problem.volume_cap,
        (problem.rhs - problem.stability_lhs(x)) / problem.stability_scale(),
    ]
}

/// Least-squares multipliers on the active set of `x`.
///
/// General multipliers are fitted on the rows of loaded types; bound
/// multipliers are the clipped stationarity gaps of the empty types, so an
/// unloadable direction with positive freight shows up as a stationarity
/// failure rather than a negative `ν`.
pub fn recover_multipliers(problem: &Problem, x: &[f64]) -> Multipliers {
    let n = problem.dim();
    let slacks = relative_slacks(problem, x);
    let grad_g = problem.stability_gradient(x);
    let columns: [Vec<f64>; 3] = [vec![1.0; n], problem.volume_coeffs.clone(), grad_g];
    let active: Vec<usize> = (0..3)
        .filter(|&k| slacks[k] <= ACTIVE_SET_TOLERANCE)
        .collect();
    let free: Vec<usize> = (0..n)
        .filter(|&i| x[i] > ACTIVE_SET_TOLERANCE * problem.deadweight_cap)
        .collect();

    let mut lambda = [0.0; 3];
    if !active.is_empty() && !free.is_empty() {
        let a = DMatrix::from_fn(free.len(), active.len(), |r, c| columns[active[c]][free[r]]);
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| problem.objective[i]));
        if let Ok(sol) = a.svd(true, true).solve(&rhs, 1e-14) {
            for (c, &k) in active.iter().enumerate() {
                lambda[k] = sol[c];
            }
        }
    }
    let nonneg = (0..n)
        .map(|i| {
            if free.contains(&i) {
                0.0
            } else {
                let fitted: f64 = (0..3).map(|k| lambda[k] * columns[k][i]).sum();
                (fitted - problem.objective[i]).max(0.0)
            }
        })
        .collect();
    Multipliers {
        deadweight: lambda[0],
        volume: lambda[1],
        stability: lambda[2],
        nonneg,
    }
}

/// Evaluates the KKT conditions at `x`. Without `multipliers`, they are
/// recovered with [`recover_multipliers`].
pub fn kkt_verify(
    problem: &Problem,
    x: &[f64],
    multipliers: Option<&Multipliers>,
    tolerance: f64,
) -> KktReport {
    let n = problem.dim();
    let recovered;
    let mults = match multipliers {
        Some(m) => m,
        None => {
            recovered = recover_multipliers(problem, x);
            &recovered
        }
    };
    let pmax = problem
        .objective
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let grad_g = problem.stability_gradient(x);

    let mut stationarity = 0.0f64;
    for i in 0..n {
        let r = problem.objective[i]
            - mults.deadweight
            - mults.volume * problem.volume_coeffs[i]
            - mults.stability * grad_g[i]
            + mults.nonneg[i];
        stationarity = stationarity.max(r.abs());
    }
    let stationarity = stationarity / pmax;

    let (dw, vol) = linear_slacks(problem, x);
    let stab = problem.rhs - problem.stability_lhs(x);
    let objective = dot(&problem.objective, x).abs();
    let comp_scale = objective
        .max(pmax * problem.deadweight_cap * f64::EPSILON)
        .max(f64::MIN_POSITIVE);
    let mut comp = (mults.deadweight * dw)
        .abs()
        .max((mults.volume * vol).abs())
        .max((mults.stability * stab).abs());
    for i in 0..n {
        comp = comp.max((mults.nonneg[i] * x[i]).abs());
    }
    let complementarity = comp / comp_scale;

    let scale = problem.stability_scale();
    let mut primal = (-dw / problem.deadweight_cap)
        .max(-vol / problem.volume_cap)
        .max(-stab / scale)
        .max(0.0);
    for &xi in x {
        primal = primal.max(-xi / problem.deadweight_cap);
    }

    // multipliers scaled to money per ton so they compare with p
    let vmax = problem.volume_coeffs.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut most_negative = mults
        .deadweight
        .min(mults.volume * vmax)
        .min(mults.stability * scale / problem.deadweight_cap);
    for &v in &mults.nonneg {
        most_negative = most_negative.min(v);
    }
    let dual = (-most_negative / pmax).max(0.0);

    let all_finite = [stationarity, complementarity, primal, dual]
        .iter()
        .all(|v| v.is_finite());
    KktReport {
        stationarity_residual: stationarity,
        complementarity_residual: complementarity,
        primal_feasibility: primal,
        dual_feasibility: dual,
        satisfied: all_finite
            && stationarity <= tolerance
            && complementarity <= tolerance
            && primal <= tolerance
            && dual <= tolerance,
    }
}
