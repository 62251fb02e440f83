mod common;

use common::{random_case, random_feasible_loading, reference_problem, rel_close};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stowopt::model::{
    assemble_problem, CargoType, Environment, LoadingOrder, Problem, StabilityPolicy, Vessel,
};
use stowopt::quadratic_analysis::{classify_constraint_matrix, Definiteness};
use stowopt::solver::{kkt_verify, mu_sensitivity, solve, solve_lp, SolveStatus, SolverOptions};

/// Best vertex of `{x >= 0, 1'x <= C, v'x <= V}`: the origin, single-type
/// loadings, and pairs with both constraints tight.
fn lp_by_vertices(p: &[f64], v: &[f64], c: f64, cap: f64) -> f64 {
    let n = p.len();
    let feasible = |x: &[f64]| {
        x.iter().all(|&t| t >= -1e-9)
            && x.iter().sum::<f64>() <= c * (1.0 + 1e-12)
            && x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() <= cap * (1.0 + 1e-12)
    };
    let value = |x: &[f64]| x.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let mut best = 0.0f64;
    for i in 0..n {
        let mut x = vec![0.0; n];
        for t in [c, cap / v[i]] {
            x[i] = t;
            if feasible(&x) {
                best = best.max(value(&x));
            }
        }
        for j in i + 1..n {
            let det = v[j] - v[i];
            if det == 0.0 {
                continue;
            }
            let mut x = vec![0.0; n];
            x[i] = (v[j] * c - cap) / det;
            x[j] = (cap - v[i] * c) / det;
            if feasible(&x) {
                best = best.max(value(&x));
            }
        }
    }
    best
}

fn reference_lp_problem() -> Problem {
    assemble_problem(
        &stowopt::model::reference::vessel(),
        &Environment::default(),
        &StabilityPolicy::new(4.0),
        &stowopt::model::reference::cargoes(),
        &LoadingOrder::Normal,
        false,
    )
    .unwrap()
}

fn quick_options(seed: u64) -> SolverOptions {
    SolverOptions {
        multistart_count: 8,
        rng_seed: seed,
        ..SolverOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_matches_vertex_enumeration(case in random_case(6)) {
        let p = case.problem();
        let lp = solve_lp(&p);
        let oracle = lp_by_vertices(&p.objective, &p.volume_coeffs, p.deadweight_cap, p.volume_cap);
        prop_assert!(rel_close(lp.revenue, oracle, 1e-9) || (lp.revenue - oracle).abs() < 1e-9, "{} vs {}", lp.revenue, oracle);
        prop_assert!(lp.x.iter().filter(|&&v| v > 0.0).count() <= 2);
    }

    #[test]
    fn constrained_never_beats_lp(case in random_case(5), seed in 0u64..1000) {
        let p = case.problem();
        let sol = solve(&p, &quick_options(seed)).unwrap();
        let lp = solve_lp(&p);
        prop_assert!(sol.revenue <= lp.revenue * (1.0 + 1e-9) + 1e-9, "{} > {}", sol.revenue, lp.revenue);
    }

    #[test]
    fn returned_points_are_kkt(case in random_case(5), seed in 0u64..1000) {
        let p = case.problem();
        let opts = quick_options(seed);
        let sol = solve(&p, &opts).unwrap();
        if matches!(sol.status, SolveStatus::Optimal | SolveStatus::LocalOnly) {
            prop_assert!(sol.kkt.satisfied, "{:?}", sol.kkt);
            let again = kkt_verify(&p, &sol.x, Some(&sol.multipliers), opts.kkt_tolerance);
            prop_assert!(again.satisfied);
            prop_assert!(sol.x.iter().all(|&v| v >= -opts.feasibility_tolerance));
            prop_assert_eq!(sol.revenue, stowopt::model::revenue(&p, &sol.x).unwrap());
        }
    }

    #[test]
    fn convex_seed_independence(case in random_case(5), a in 0u64..1000, b in 0u64..1000) {
        let p = case.problem();
        let class = classify_constraint_matrix(&p.densities(), case.rho).unwrap();
        prop_assume!(class.class == Definiteness::PositiveSemidefinite);
        let sa = solve(&p, &SolverOptions { convexity_dispatch: false, ..quick_options(a) }).unwrap();
        let sb = solve(&p, &SolverOptions { convexity_dispatch: false, ..quick_options(b) }).unwrap();
        prop_assert!(rel_close(sa.revenue, sb.revenue, 1e-6) || sa.revenue.abs() < 1e-9, "{} vs {}", sa.revenue, sb.revenue);
        let sd = solve(&p, &quick_options(a)).unwrap();
        prop_assert!(rel_close(sa.revenue, sd.revenue, 1e-6) || sa.revenue.abs() < 1e-9);
    }

    #[test]
    fn stability_gradient_matches_finite_differences(case in random_case(6), seed in any::<u64>()) {
        let p = case.problem();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x: Vec<f64> = random_feasible_loading(&p, &mut rng)
                .into_iter()
                .map(|v| v + 1e-3 * p.deadweight_cap)
                .collect();
            let g = p.stability_gradient(&x);
            let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
            for i in 0..p.dim() {
                let h = 1e-5 * x[i];
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (p.stability_lhs(&up) - p.stability_lhs(&down)) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-6 * scale, "coord {}: {} vs {}", i, fd, g[i]);
            }
        }
    }
}

#[test]
fn deterministic_across_thread_counts() {
    let p = reference_problem(6.0, LoadingOrder::Reverse);
    let opts = SolverOptions::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| solve(&p, &opts).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    assert_eq!(one, solve(&p, &opts).unwrap());
}

#[test]
fn revenue_monotone_in_mu() {
    for order in [LoadingOrder::Normal, LoadingOrder::Reverse] {
        let revenues: Vec<f64> = [3.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&mu| {
                solve(
                    &reference_problem(mu, order.clone()),
                    &SolverOptions::default(),
                )
                .unwrap()
                .revenue
            })
            .collect();
        assert!(
            revenues.windows(2).all(|w| w[0] >= w[1]),
            "{order:?}: {revenues:?}"
        );
    }
}

#[test]
fn lp_reference_vertex() {
    let p = reference_lp_problem();
    let lp = solve_lp(&p);
    assert!((lp.revenue - 247_500.0).abs() < 1e-6);
    assert_eq!(lp.x, vec![0.0, 0.0, 0.0, 45_000.0]);
    assert!((p.volume_used(&lp.x) - 100_000.0).abs() < 1e-6);
    assert!(!lp.kkt.satisfied, "stability is violated at the LP vertex");
    assert_eq!(
        lp_by_vertices(
            &p.objective,
            &p.volume_coeffs,
            p.deadweight_cap,
            p.volume_cap
        ),
        247_500.0
    );
}

#[test]
fn lp_trivial_cases() {
    let vessel = Vessel {
        length: 200.0,
        beam: 25.0,
        deadweight: 45_000.0,
        volume_capacity: 20_000.0,
        light_mass: 15_000.0,
        light_kg: 2.0,
    };
    let single = assemble_problem(
        &vessel,
        &Environment::default(),
        &StabilityPolicy::new(0.0),
        &[CargoType::new("a", 0.5, 1.0)],
        &LoadingOrder::Normal,
        false,
    )
    .unwrap();
    assert!((solve_lp(&single).x[0] - 10_000.0).abs() < 1e-9);

    let free = assemble_problem(
        &vessel,
        &Environment::default(),
        &StabilityPolicy::new(0.0),
        &[CargoType::new("a", 0.5, 0.0), CargoType::new("b", 0.7, 0.0)],
        &LoadingOrder::Normal,
        false,
    )
    .unwrap();
    assert_eq!(solve_lp(&free).revenue, 0.0);
    let sol = solve(&free, &SolverOptions::default()).unwrap();
    assert_eq!(sol.revenue, 0.0);
    assert_eq!(sol.status, SolveStatus::Optimal);
}

#[test]
fn origin_is_not_kkt() {
    let p = reference_problem(4.0, LoadingOrder::Normal);
    let report = kkt_verify(&p, &vec![0.0; p.dim()], None, 1e-6);
    assert!(!report.satisfied);
}

#[test]
fn infeasible_when_lightship_fails_margin() {
    let p = reference_problem(40.0, LoadingOrder::Normal);
    assert!(p.rhs < 0.0);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn sensitivity_zero_when_stability_slack() {
    // a very light cargo never reaches the margin before the volume cap
    let p = assemble_problem(
        &stowopt::model::reference::vessel(),
        &Environment::default(),
        &StabilityPolicy::new(1.0),
        &[CargoType::new("a", 0.1, 1.0)],
        &LoadingOrder::Normal,
        false,
    )
    .unwrap();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert!(sol.kkt.satisfied);
    assert_eq!(sol.multipliers.stability, 0.0);
    assert_eq!(mu_sensitivity(&p, &sol), 0.0);
}

#[test]
fn options_validated() {
    let p = reference_problem(4.0, LoadingOrder::Normal);
    for bad in [
        SolverOptions {
            multistart_count: 0,
            ..Default::default()
        },
        SolverOptions {
            kkt_tolerance: 0.0,
            ..Default::default()
        },
        SolverOptions {
            feasibility_tolerance: f64::NAN,
            ..Default::default()
        },
        SolverOptions {
            max_iterations: 0,
            ..Default::default()
        },
    ] {
        assert!(solve(&p, &bad).is_err());
    }
}
