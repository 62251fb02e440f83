//! Shared fixtures and generators for the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use stowopt::model::{
    assemble_problem, reference, CargoType, Environment, LoadingOrder, Problem, StabilityPolicy,
    Vessel,
};

pub fn reference_problem(mu: f64, order: LoadingOrder) -> Problem {
    assemble_problem(
        &reference::vessel(),
        &Environment::default(),
        &StabilityPolicy::new(mu),
        &reference::cargoes(),
        &order,
        true,
    )
    .unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Largest μ for which the empty vessel still meets the margin.
pub fn mu_ceiling(vessel: &Vessel, rho: f64) -> f64 {
    let (b, l, m) = (vessel.beam, vessel.length, vessel.light_mass);
    m / (2.0 * rho * b * l) + rho * b.powi(3) * l / (12.0 * m) - vessel.light_kg
}

/// Random scenario inputs; `mu` is a fraction of the lightship ceiling so
/// the origin is always feasible.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub vessel: Vessel,
    pub rho: f64,
    pub mu: f64,
    pub cargoes: Vec<CargoType>,
    pub order: LoadingOrder,
    pub ballast: bool,
}

impl RandomCase {
    pub fn problem(&self) -> Problem {
        assemble_problem(
            &self.vessel,
            &Environment {
                water_density: self.rho,
            },
            &StabilityPolicy::new(self.mu),
            &self.cargoes,
            &self.order,
            self.ballast,
        )
        .unwrap()
    }
}

fn order_strategy(n: usize) -> BoxedStrategy<LoadingOrder> {
    prop_oneof![
        Just(LoadingOrder::Normal),
        Just(LoadingOrder::Reverse),
        Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(LoadingOrder::Explicit),
    ]
    .boxed()
}

/// Scenarios with `1..=max_cargoes` cargo types.
pub fn random_case(max_cargoes: usize) -> impl Strategy<Value = RandomCase> {
    (
        (
            50.0..300.0f64,
            10.0..50.0f64,
            1_000.0..100_000.0f64,
            1.0..4.0f64,
            0.2..1.0f64,
            0.1..0.4f64,
        ),
        0.95..1.05f64,
        0.0..0.9f64,
        prop::collection::vec((0.3..2.5f64, 0.0..10.0f64), 1..=max_cargoes),
        any::<bool>(),
    )
        .prop_flat_map(|((l, b, c, vr, mr, kr), rho, mu_frac, raw, ballast)| {
            let n = raw.len();
            (
                Just((l, b, c, vr, mr, kr, rho, mu_frac, raw, ballast)),
                order_strategy(n),
            )
        })
        .prop_map(
            |((l, b, c, vr, mr, kr, rho, mu_frac, raw, ballast), order)| {
                let vessel = Vessel {
                    length: l,
                    beam: b,
                    deadweight: c,
                    volume_capacity: c * vr,
                    light_mass: c * mr,
                    light_kg: b * kr,
                };
                let mu = mu_frac * mu_ceiling(&vessel, rho).max(0.0);
                let cargoes = raw
                    .into_iter()
                    .enumerate()
                    .map(|(i, (d, p))| CargoType::new(format!("c{i}"), d, p))
                    .collect();
                RandomCase {
                    vessel,
                    rho,
                    mu,
                    cargoes,
                    order,
                    ballast,
                }
            },
        )
}

/// Draws a loading inside both capacity constraints, pulled toward the
/// origin until the stability constraint holds.
pub fn random_feasible_loading(problem: &Problem, rng: &mut impl Rng) -> Vec<f64> {
    let n = problem.dim();
    let e: Vec<f64> = (0..=n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let mut x: Vec<f64> = e[..n]
        .iter()
        .map(|v| problem.deadweight_cap * v / total)
        .collect();
    let vol: f64 = x
        .iter()
        .zip(&problem.volume_coeffs)
        .map(|(a, b)| a * b)
        .sum();
    if vol > problem.volume_cap {
        let s = problem.volume_cap / vol;
        x.iter_mut().for_each(|v| *v *= s);
    }
    for _ in 0..200 {
        if problem.stability_lhs(&x) <= problem.rhs {
            return x;
        }
        x.iter_mut().for_each(|v| *v *= 0.7);
    }
    vec![0.0; n]
}
