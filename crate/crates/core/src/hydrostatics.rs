//! Draft, metacenter, center of mass and metacentric height of a loaded box hull.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{dot, Environment, Problem, Vessel, Warning};

/// Hydrostatic state of a loaded vessel. All lengths are heights above the
/// keel except `buoyancy_to_metacenter` and `metacentric_height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HydroState {
    /// T, m.
    pub draft: f64,
    /// KB, m.
    pub keel_to_buoyancy: f64,
    /// BM, m.
    pub buoyancy_to_metacenter: f64,
    /// KM, m.
    pub keel_to_metacenter: f64,
    /// KG, m.
    pub keel_to_mass: f64,
    /// GM = KM - KG, m.
    pub metacentric_height: f64,
    /// Lightship plus cargo, t.
    pub displacement_mass: f64,
}

impl HydroState {
    pub fn warnings(&self, vessel: &Vessel) -> Vec<Warning> {
        let mut out = Vec::new();
        if self.draft > vessel.beam {
            out.push(Warning(format!(
                "draft {:.3} m exceeds the beam ({} m)",
                self.draft, vessel.beam
            )));
        }
        out
    }
}

/// `T = (M + cargo) / (ρ L B)`.
pub fn draft(vessel: &Vessel, environment: &Environment, total_cargo_mass: f64) -> Result<f64> {
    if !(total_cargo_mass >= 0.0) {
        return Err(Error::invalid(
            "total_cargo_mass",
            format!("must be >= 0, got {total_cargo_mass}"),
        ));
    }
    Ok((vessel.light_mass + total_cargo_mass)
        / (environment.water_density * vessel.length * vessel.beam))
}

/// `KM = B² / (12 T) + T / 2`.
pub fn keel_to_metacenter(vessel: &Vessel, draft: f64) -> Result<f64> {
    if !(draft > 0.0) {
        return Err(Error::invalid("draft", format!("must be > 0, got {draft}")));
    }
    Ok(vessel.beam * vessel.beam / (12.0 * draft) + draft / 2.0)
}

fn check_loading(problem: &Problem, x: &[f64]) -> Result<()> {
    problem.check_dim(x)?;
    match x.iter().position(|&v| !(v >= 0.0)) {
        Some(index) => Err(Error::NegativeEntry {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}

/// `x'Wx` with `W[i][j] = 1/d[min(i,j)]`, computed from stack prefix sums.
fn stacking_form(problem: &Problem, x: &[f64]) -> f64 {
    // sum_j (2 * height below j + own height) * x_j, heights in m³ units
    let mut below = 0.0;
    let mut total = 0.0;
    for (xj, vj) in x.iter().zip(&problem.volume_coeffs) {
        let own = xj * vj;
        total += (2.0 * below + own) * xj;
        below += own;
    }
    total
}

/// Height of the loaded vessel's center of mass above the keel:
/// `KG = (c_V M + x'Wx / (2A)) / (x'1 + M)` with `A = B L`.
pub fn center_of_mass(problem: &Problem, x: &[f64]) -> Result<f64> {
    check_loading(problem, x)?;
    let v = &problem.vessel;
    let num = v.light_kg * v.light_mass + stacking_form(problem, x) / (2.0 * v.waterplane_area());
    Ok(num / (Problem::total_mass(x) + v.light_mass))
}

/// Analytic gradient of [`center_of_mass`] with respect to the loads.
pub fn center_of_mass_gradient(problem: &Problem, x: &[f64]) -> Result<Vec<f64>> {
    check_loading(problem, x)?;
    let v = &problem.vessel;
    let area = v.waterplane_area();
    let den = Problem::total_mass(x) + v.light_mass;
    let num = v.light_kg * v.light_mass + stacking_form(problem, x) / (2.0 * area);
    let n = problem.dim();
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        // (Wx)_i = sum_j x_j / d_min(i,j)
        let wx: f64 = (0..n).map(|j| problem.volume_coeffs[i.min(j)] * x[j]).sum();
        grad.push((wx / area) / den - num / (den * den));
    }
    Ok(grad)
}

/// Full hydrostatic state for loading `x`.
pub fn metacentric_height(problem: &Problem, x: &[f64]) -> Result<HydroState> {
    let keel_to_mass = center_of_mass(problem, x)?;
    let cargo = Problem::total_mass(x);
    let v = &problem.vessel;
    let t = draft(v, &problem.environment, cargo)?;
    let keel_to_buoyancy = t / 2.0;
    let buoyancy_to_metacenter = v.beam * v.beam / (12.0 * t);
    let keel_to_metacenter = keel_to_buoyancy + buoyancy_to_metacenter;
    Ok(HydroState {
        draft: t,
        keel_to_buoyancy,
        buoyancy_to_metacenter,
        keel_to_metacenter,
        keel_to_mass,
        metacentric_height: keel_to_metacenter - keel_to_mass,
        displacement_mass: cargo + v.light_mass,
    })
}

/// `rhs - (quad_scale x'Ax + linear_coeff x'1)`; nonnegative iff the
/// stability constraint holds.
pub fn constraint_slack(problem: &Problem, x: &[f64]) -> Result<f64> {
    problem.check_dim(x)?;
    Ok(problem.rhs - problem.stability_lhs(x))
}

/// Deadweight and volume slacks `(C - x'1, V - x'/d)`.
pub fn linear_slacks(problem: &Problem, x: &[f64]) -> (f64, f64) {
    (
        problem.deadweight_cap - Problem::total_mass(x),
        problem.volume_cap - dot(&problem.volume_coeffs, x),
    )
}
