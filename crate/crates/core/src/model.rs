//! Vessel, cargo and environment data, and assembly of the stability
//! constrained loading problem.
//!
//! The quadratic stability constraint is kept in its unexpanded form
//!
//! ```text
//! quad_scale * x'Ax + linear_coeff * 1'x <= rhs
//! quad_scale   = 1 / (2 B L)
//! A            = W - (1/rho) 11',   W[i][j] = 1 / d[min(i, j)]
//! linear_coeff = mu - M / (rho B L)
//! rhs          = M^2 / (2 rho B L) + rho B^3 L / 12 - (mu + c_V) M
//! ```
//!
//! where cargo `j` sits at stack position `j` counted from the keel and the
//! hold's horizontal cross-section is `B * L`.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label given to the automatically inserted ballast type.
pub const BALLAST_LABEL: &str = "ballast";

/// Box-hull vessel with its lightship properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vessel {
    /// Length, m.
    pub length: f64,
    /// Breadth (beam), m.
    pub beam: f64,
    /// Deadweight capacity, t.
    pub deadweight: f64,
    /// Cargo volume capacity, m³.
    pub volume_capacity: f64,
    /// Mass of the empty vessel, t.
    pub light_mass: f64,
    /// Height of the empty vessel's center of mass above the keel, m.
    pub light_kg: f64,
}

/// Non-fatal observation about an input or a computed state.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning(pub String);

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

fn non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

impl Vessel {
    /// Checks the invariants and returns sanity warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        positive("length", self.length)?;
        positive("beam", self.beam)?;
        positive("deadweight", self.deadweight)?;
        positive("volume_capacity", self.volume_capacity)?;
        positive("light_mass", self.light_mass)?;
        non_negative("light_kg", self.light_kg)?;
        let mut warnings = Vec::new();
        if self.light_kg > self.beam {
            warnings.push(Warning(format!(
                "light_kg = {} m exceeds the beam ({} m)",
                self.light_kg, self.beam
            )));
        }
        Ok(warnings)
    }

    /// Horizontal cross-section of the hold, m².
    pub fn waterplane_area(&self) -> f64 {
        self.beam * self.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CargoType {
    pub label: String,
    /// t/m³.
    pub density: f64,
    /// Money per ton.
    pub freight_rate: f64,
}

impl CargoType {
    pub fn new(label: impl Into<String>, density: f64, freight_rate: f64) -> Self {
        Self {
            label: label.into(),
            density,
            freight_rate,
        }
    }

    /// Zero-revenue cargo with the density of the surrounding water.
    pub fn ballast(env: &Environment) -> Self {
        Self::new(BALLAST_LABEL, env.water_density, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("cargo `{}`.{name}", self.label);
        positive(&field("density"), self.density)?;
        non_negative(&field("freight_rate"), self.freight_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// Water density ρ, t/m³.
    pub water_density: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self { water_density: 1.0 }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        positive("water_density", self.water_density)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPolicy {
    /// Required metacentric height μ, m.
    pub min_metacentric_height: f64,
}

impl StabilityPolicy {
    pub fn new(min_metacentric_height: f64) -> Self {
        Self {
            min_metacentric_height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("mu", self.min_metacentric_height)
    }
}

/// Stacking order of the cargo types, bottom (keel) to top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadingOrder {
    /// Decreasing density from the keel up.
    Normal,
    /// Increasing density from the keel up.
    Reverse,
    /// Zero-based cargo indices, bottom to top.
    Explicit(Vec<usize>),
}

impl LoadingOrder {
    /// Resolves the order to a permutation of `0..densities.len()`.
    ///
    /// Normal and Reverse use a stable sort, so equal densities keep their
    /// input order.
    pub fn permutation(&self, densities: &[f64]) -> Result<Vec<usize>> {
        let n = densities.len();
        let mut perm: Vec<usize> = (0..n).collect();
        match self {
            LoadingOrder::Normal => perm.sort_by(|&a, &b| densities[b].total_cmp(&densities[a])),
            LoadingOrder::Reverse => perm.sort_by(|&a, &b| densities[a].total_cmp(&densities[b])),
            LoadingOrder::Explicit(list) => {
                if list.len() != n {
                    return Err(Error::invalid(
                        "order",
                        format!("permutation has {} entries for {n} cargo types", list.len()),
                    ));
                }
                let mut seen = vec![false; n];
                for &i in list {
                    if i >= n || seen[i] {
                        return Err(Error::invalid(
                            "order",
                            format!("{list:?} is not a permutation of the cargo indices"),
                        ));
                    }
                    seen[i] = true;
                }
                perm.clone_from(list);
            }
        }
        Ok(perm)
    }
}

/// One loading problem instance: maximize `objective · x` subject to the
/// deadweight, volume and stability constraints and `x >= 0`.
///
/// Immutable after assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub vessel: Vessel,
    pub environment: Environment,
    pub policy: StabilityPolicy,
    /// Cargo types in stack order, bottom to top.
    pub cargoes: Vec<CargoType>,
    /// Index of each stacked type in the caller's cargo list; `None` for ballast.
    pub source_index: Vec<Option<usize>>,
    pub objective: Vec<f64>,
    pub deadweight_cap: f64,
    /// Specific volume 1/d of each type, m³/t.
    pub volume_coeffs: Vec<f64>,
    pub volume_cap: f64,
    /// `W - (1/ρ) 11'`, m³/t.
    pub quad_matrix: DMatrix<f64>,
    /// `1 / (2 B L)`, 1/m².
    pub quad_scale: f64,
    /// `μ - M / (ρ B L)`, m.
    pub linear_coeff: f64,
    /// Right-hand side, t·m.
    pub rhs: f64,
    pub ballast_index: Option<usize>,
}

/// `W[i][j] = 1 / d[min(i, j)]` for densities given bottom to top.
pub fn stacking_matrix(densities: &[f64]) -> Result<DMatrix<f64>> {
    for (i, &d) in densities.iter().enumerate() {
        positive(&format!("density[{i}]"), d)?;
    }
    let n = densities.len();
    Ok(DMatrix::from_fn(n, n, |i, j| 1.0 / densities[i.min(j)]))
}

fn stability_coefficients(
    vessel: &Vessel,
    env: &Environment,
    policy: &StabilityPolicy,
) -> (f64, f64, f64) {
    let rho = env.water_density;
    let (b, l, m) = (vessel.beam, vessel.length, vessel.light_mass);
    let mu = policy.min_metacentric_height;
    let quad_scale = 1.0 / (2.0 * b * l);
    let linear_coeff = mu - m / (rho * b * l);
    let rhs = m * m / (2.0 * rho * b * l) + rho * b.powi(3) * l / 12.0 - (mu + vessel.light_kg) * m;
    (quad_scale, linear_coeff, rhs)
}

/// Builds the problem with cargoes stacked by `order`.
///
/// With `include_ballast`, a water-density type with zero freight is added:
/// by density rank for Normal and Reverse orders (after any cargo of equal
/// density), and at the keel for explicit orders.
pub fn assemble_problem(
    vessel: &Vessel,
    environment: &Environment,
    policy: &StabilityPolicy,
    cargoes: &[CargoType],
    order: &LoadingOrder,
    include_ballast: bool,
) -> Result<Problem> {
    vessel.validate()?;
    environment.validate()?;
    policy.validate()?;
    if cargoes.is_empty() && !include_ballast {
        return Err(Error::EmptyCargoList);
    }
    let mut labels = HashSet::new();
    for c in cargoes {
        c.validate()?;
        if !labels.insert(c.label.as_str()) {
            return Err(Error::DuplicateLabel(c.label.clone()));
        }
    }
    if include_ballast && labels.contains(BALLAST_LABEL) {
        return Err(Error::DuplicateLabel(BALLAST_LABEL.to_string()));
    }

    let densities: Vec<f64> = cargoes.iter().map(|c| c.density).collect();
    let perm = order.permutation(&densities)?;
    let mut stacked: Vec<(CargoType, Option<usize>)> = perm
        .iter()
        .map(|&i| (cargoes[i].clone(), Some(i)))
        .collect();

    let mut ballast_index = None;
    if include_ballast {
        let rho = environment.water_density;
        let pos = match order {
            LoadingOrder::Normal => stacked.iter().take_while(|(c, _)| c.density >= rho).count(),
            LoadingOrder::Reverse => stacked.iter().take_while(|(c, _)| c.density <= rho).count(),
            LoadingOrder::Explicit(_) => 0,
        };
        stacked.insert(pos, (CargoType::ballast(environment), None));
        ballast_index = Some(pos);
    }

    let (cargoes, source_index): (Vec<_>, Vec<_>) = stacked.into_iter().unzip();
    let densities: Vec<f64> = cargoes.iter().map(|c| c.density).collect();
    let inv_rho = 1.0 / environment.water_density;
    let n = densities.len();
    let quad_matrix = DMatrix::from_fn(n, n, |i, j| 1.0 / densities[i.min(j)] - inv_rho);
    let (quad_scale, linear_coeff, rhs) = stability_coefficients(vessel, environment, policy);

    Ok(Problem {
        vessel: *vessel,
        environment: *environment,
        policy: *policy,
        objective: cargoes.iter().map(|c| c.freight_rate).collect(),
        volume_coeffs: densities.iter().map(|d| 1.0 / d).collect(),
        cargoes,
        source_index,
        deadweight_cap: vessel.deadweight,
        volume_cap: vessel.volume_capacity,
        quad_matrix,
        quad_scale,
        linear_coeff,
        rhs,
        ballast_index,
    })
}

/// Total freight revenue `p · x`.
pub fn revenue(problem: &Problem, x: &[f64]) -> Result<f64> {
    problem.check_dim(x)?;
    Ok(dot(&problem.objective, x))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.cargoes.len()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.cargoes.iter().map(|c| c.density).collect()
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            })
        }
    }

    /// The same problem with a different stability margin.
    pub fn with_min_metacentric_height(&self, mu: f64) -> Result<Problem> {
        let policy = StabilityPolicy::new(mu);
        policy.validate()?;
        let (quad_scale, linear_coeff, rhs) =
            stability_coefficients(&self.vessel, &self.environment, &policy);
        Ok(Problem {
            policy,
            quad_scale,
            linear_coeff,
            rhs,
            ..self.clone()
        })
    }

    /// Left side of the stability constraint, t·m.
    pub fn stability_lhs(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut quad = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.quad_matrix[(i, j)] * x[j];
            }
            quad += x[i] * row;
        }
        self.quad_scale * quad + self.linear_coeff * x.iter().sum::<f64>()
    }

    /// Gradient of [`Problem::stability_lhs`]: `2 quad_scale A x + linear_coeff 1`.
    pub fn stability_gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| self.quad_matrix[(i, j)] * x[j]).sum();
                2.0 * self.quad_scale * row + self.linear_coeff
            })
            .collect()
    }

    pub fn total_mass(x: &[f64]) -> f64 {
        x.iter().sum()
    }

    pub fn volume_used(&self, x: &[f64]) -> f64 {
        dot(&self.volume_coeffs, x)
    }

    /// Magnitude used to normalize stability slacks and multipliers.
    pub fn stability_scale(&self) -> f64 {
        let c = self.deadweight_cap;
        let amax = self.quad_matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.rhs
            .abs()
            .max(self.linear_coeff.abs() * c)
            .max(self.quad_scale * c * c * amax)
            .max(f64::MIN_POSITIVE)
    }
}

/// Vessel and cargo values of the bundled 3500 TEU reference scenario.
pub mod reference {
    use super::{CargoType, Vessel};

    pub fn vessel() -> Vessel {
        Vessel {
            length: 200.0,
            beam: 25.0,
            deadweight: 45_000.0,
            volume_capacity: 120_000.0,
            light_mass: 15_000.0,
            light_kg: 2.0,
        }
    }

    /// Cargo types 1..4 in decreasing density.
    pub fn cargoes() -> Vec<CargoType> {
        vec![
            CargoType::new("1", 0.80, 4.50),
            CargoType::new("2", 0.60, 5.00),
            CargoType::new("3", 0.50, 5.10),
            CargoType::new("4", 0.45, 5.50),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn reference_problem(mu: f64, order: LoadingOrder, ballast: bool) -> Problem {
        assemble_problem(
            &reference::vessel(),
            &Environment::default(),
            &StabilityPolicy::new(mu),
            &reference::cargoes(),
            &order,
            ballast,
        )
        .unwrap()
    }

    #[test]
    fn stacking_matrix_reference_densities() {
        let w = stacking_matrix(&[0.80, 0.60, 0.50, 0.45]).unwrap();
        for j in 0..4 {
            assert!(close(w[(0, j)], 1.25, 1e-12));
        }
        let row2 = [1.25, 1.0 / 0.6, 1.0 / 0.6, 1.0 / 0.6];
        for j in 0..4 {
            assert!(close(w[(1, j)], row2[j], 1e-12));
        }
        let diag = [1.25, 1.6667, 2.0, 2.2222];
        for i in 0..4 {
            assert!(close(w[(i, i)], diag[i], 1e-4));
        }
        assert_eq!(w, w.transpose());
    }

    #[test]
    fn stacking_matrix_small_cases() {
        assert_eq!(
            stacking_matrix(&[1.0]).unwrap(),
            DMatrix::from_element(1, 1, 1.0)
        );
        let w = stacking_matrix(&[2.0, 1.0]).unwrap();
        assert_eq!(w, DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 1.0]));
    }

    #[test]
    fn stacking_matrix_rejects_nonpositive_density() {
        let err = stacking_matrix(&[0.5, 0.0, 0.3]).unwrap_err();
        assert!(err.to_string().contains("density[1]"), "{err}");
    }

    #[test]
    fn stability_coefficients_reference_vessel() {
        let p = reference_problem(4.0, LoadingOrder::Normal, false);
        assert!(close(p.linear_coeff, 1.0, 1e-12));
        assert!(close(
            p.rhs,
            22_500.0 + 260_416.666_666_666_7 - 90_000.0,
            1e-6
        ));
        assert!(close(p.rhs, 192_916.667, 1e-3));
        assert!(close(p.quad_scale, 1.0 / 10_000.0, 1e-18));

        let p6 = reference_problem(6.0, LoadingOrder::Normal, false);
        assert!(close(p6.linear_coeff, 3.0, 1e-12));
        assert!(close(p6.rhs, 162_916.667, 1e-3));
    }

    #[test]
    fn ballast_only_problem() {
        let p = assemble_problem(
            &reference::vessel(),
            &Environment::default(),
            &StabilityPolicy::new(4.0),
            &[],
            &LoadingOrder::Normal,
            true,
        )
        .unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.objective, vec![0.0]);
        assert_eq!(p.ballast_index, Some(0));
        assert_eq!(p.source_index, vec![None]);
    }

    #[test]
    fn empty_and_duplicate_cargoes_rejected() {
        let v = reference::vessel();
        let env = Environment::default();
        let pol = StabilityPolicy::new(4.0);
        let err = assemble_problem(&v, &env, &pol, &[], &LoadingOrder::Normal, false).unwrap_err();
        assert_eq!(err, Error::EmptyCargoList);
        let dup = vec![CargoType::new("a", 0.5, 1.0), CargoType::new("a", 0.6, 1.0)];
        let err = assemble_problem(&v, &env, &pol, &dup, &LoadingOrder::Normal, false).unwrap_err();
        assert_eq!(err, Error::DuplicateLabel("a".into()));
        let named = vec![CargoType::new(BALLAST_LABEL, 0.5, 1.0)];
        assert!(assemble_problem(&v, &env, &pol, &named, &LoadingOrder::Normal, true).is_err());
        assert!(assemble_problem(&v, &env, &pol, &named, &LoadingOrder::Normal, false).is_ok());
    }

    #[test]
    fn ballast_position_follows_density_rank() {
        let normal = reference_problem(4.0, LoadingOrder::Normal, true);
        assert_eq!(normal.ballast_index, Some(0));
        assert_eq!(normal.densities(), vec![1.0, 0.8, 0.6, 0.5, 0.45]);

        let reverse = reference_problem(4.0, LoadingOrder::Reverse, true);
        assert_eq!(reverse.ballast_index, Some(4));
        assert_eq!(reverse.densities(), vec![0.45, 0.5, 0.6, 0.8, 1.0]);
        assert_eq!(
            reverse.source_index,
            vec![Some(3), Some(2), Some(1), Some(0), None]
        );

        let explicit = reference_problem(4.0, LoadingOrder::Explicit(vec![2, 0, 3, 1]), true);
        assert_eq!(explicit.ballast_index, Some(0));
        assert_eq!(explicit.densities(), vec![1.0, 0.5, 0.8, 0.45, 0.6]);
    }

    #[test]
    fn explicit_order_must_be_a_permutation() {
        for bad in [vec![0, 1, 2], vec![0, 1, 1, 2], vec![0, 1, 2, 4]] {
            assert!(LoadingOrder::Explicit(bad)
                .permutation(&[1.0, 2.0, 3.0, 4.0])
                .is_err());
        }
    }

    #[test]
    fn revenue_examples() {
        let p = reference_problem(4.0, LoadingOrder::Normal, false);
        let case1 = revenue(&p, &[8_500.0, 9_100.0, 0.0, 27_400.0]).unwrap();
        assert!(close(case1, 234_450.0, 1e-9));
        assert_eq!(revenue(&p, &[0.0; 4]).unwrap(), 0.0);
        assert!(revenue(&p, &[1.0; 3]).is_err());

        let r = reference_problem(4.0, LoadingOrder::Reverse, false);
        // bottom to top: 4, 3, 2, 1
        let case1a = revenue(&r, &[2_700.0, 0.0, 42_300.0, 0.0]).unwrap();
        assert!(close(case1a, 226_350.0, 1e-9));
    }

    #[test]
    fn vessel_validation() {
        let mut v = reference::vessel();
        assert!(v.validate().unwrap().is_empty());
        v.light_kg = 30.0;
        assert_eq!(v.validate().unwrap().len(), 1);
        v.beam = 0.0;
        let err = v.validate().unwrap_err();
        assert!(err.to_string().contains("beam"));
    }

    #[test]
    fn changing_mu_matches_fresh_assembly() {
        let p = reference_problem(4.0, LoadingOrder::Reverse, true);
        let q = p.with_min_metacentric_height(6.0).unwrap();
        assert_eq!(q, reference_problem(6.0, LoadingOrder::Reverse, true));
    }
}
