//! Exhaustive lattice search for global-optimality evidence on small problems.
//!
//! Loads range over `{0, step, 2·step, …}` with `x'1 <= C`. Every prefix of
//! the first `n - 1` coordinates is enumerated in lexicographic order; along
//! the last coordinate the stability slack is a quadratic in one variable,
//! so the extreme feasible lattice value is found from its roots and then
//! confirmed by direct evaluation. Points are checked exactly, with no
//! tolerance.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hydrostatics::constraint_slack;
use crate::model::{dot, Problem};
use crate::solver::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    /// Lattice spacing, t.
    pub step: f64,
    /// Refuse lattices with more points than this.
    pub max_points: f64,
}

impl LatticeSpec {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            max_points: 1e10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best_x: Vec<f64>,
    pub best_revenue: f64,
    /// Lattice points whose feasibility was decided.
    pub points_evaluated: u64,
    /// False when no lattice point, not even the origin, is feasible.
    pub feasible: bool,
}

/// Number of points `k ∈ ℕⁿ` with `Σk <= levels`, i.e. `C(levels + n, n)`.
pub fn lattice_size(levels: u64, n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * (levels + i as u64) as f64 / i as f64)
}

struct Search<'a> {
    problem: &'a Problem,
    step: f64,
    n: usize,
}

#[derive(Clone)]
struct Best {
    revenue: f64,
    x: Vec<f64>,
    points: u64,
}

impl Best {
    fn empty() -> Self {
        Best {
            revenue: f64::NEG_INFINITY,
            x: Vec::new(),
            points: 0,
        }
    }

    /// Keeps `self` unless `other` is strictly better; `self` comes first in
    /// enumeration order.
    fn merge(mut self, other: Best) -> Best {
        self.points += other.points;
        if other.revenue > self.revenue {
            self.revenue = other.revenue;
            self.x = other.x;
        }
        self
    }
}

/// Running state of a prefix: mass, volume, revenue, stability left side,
/// and `u[l] = Σ_j A[l][j] x_j` over placed coordinates.
#[derive(Clone)]
struct Prefix {
    x: Vec<f64>,
    mass: f64,
    volume: f64,
    revenue: f64,
    lhs: f64,
    u: Vec<f64>,
}

impl Search<'_> {
    fn levels_for(&self, prefix: &Prefix, coord: usize) -> Option<u64> {
        let p = self.problem;
        let mass_room = p.deadweight_cap - prefix.mass;
        let vol_room = p.volume_cap - prefix.volume;
        if mass_room < 0.0 || vol_room < 0.0 {
            return None;
        }
        let vc = p.volume_coeffs[coord];
        let bound = (mass_room / self.step)
            .min(vol_room / (vc * self.step))
            .floor();
        let mut k = bound.max(0.0) as u64;
        let fits = |k: u64| {
            let v = k as f64 * self.step;
            prefix.mass + v <= p.deadweight_cap && prefix.volume + v * vc <= p.volume_cap
        };
        while k > 0 && !fits(k) {
            k -= 1;
        }
        Some(k)
    }

    fn place_into(&self, prefix: &Prefix, coord: usize, value: f64, next: &mut Prefix) {
        let p = self.problem;
        let a_kk = p.quad_matrix[(coord, coord)];
        next.lhs = prefix.lhs
            + p.quad_scale * (a_kk * value * value + 2.0 * value * prefix.u[coord])
            + p.linear_coeff * value;
        for l in 0..self.n {
            next.u[l] = prefix.u[l] + p.quad_matrix[(l, coord)] * value;
        }
        next.x.copy_from_slice(&prefix.x);
        next.x[coord] = value;
        next.mass = prefix.mass + value;
        next.volume = prefix.volume + value * p.volume_coeffs[coord];
        next.revenue = prefix.revenue + value * p.objective[coord];
    }

    /// Stability slack with the last coordinate set to `level · step`.
    fn last_slack(&self, prefix: &Prefix, level: u64) -> f64 {
        let p = self.problem;
        let last = self.n - 1;
        let v = level as f64 * self.step;
        let lhs = prefix.lhs
            + p.quad_scale * (p.quad_matrix[(last, last)] * v * v + 2.0 * v * prefix.u[last])
            + p.linear_coeff * v;
        p.rhs - lhs
    }

    /// Best lattice value for the last coordinate: the largest feasible
    /// level when it earns freight, the smallest otherwise.
    fn finish(&self, prefix: &Prefix, best: &mut Best) {
        let p = self.problem;
        let last = self.n - 1;
        let Some(kmax) = self.levels_for(prefix, last) else {
            return;
        };
        best.points += kmax + 1;
        let a = p.quad_scale * p.quad_matrix[(last, last)] * self.step * self.step;
        let b = (2.0 * p.quad_scale * prefix.u[last] + p.linear_coeff) * self.step;
        let c = prefix.lhs - p.rhs;
        // the feasible set {a k² + b k + c <= 0} is bounded by these points
        let mut marks = [0.0, kmax as f64, f64::NAN, f64::NAN];
        if a != 0.0 {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                marks[2] = (-b - sq) / (2.0 * a);
                marks[3] = (-b + sq) / (2.0 * a);
            }
        } else if b != 0.0 {
            marks[2] = -c / b;
        }
        let mut candidates = [0u64; 16];
        let mut len = 0;
        for m in marks.into_iter().filter(|m| m.is_finite()) {
            for off in -1..=2 {
                let k = m.floor() + off as f64;
                if k >= 0.0 && k <= kmax as f64 {
                    candidates[len] = k as u64;
                    len += 1;
                }
            }
        }
        let candidates = &mut candidates[..len];
        candidates.sort_unstable();
        let feasible = |k: &&u64| self.last_slack(prefix, **k) >= 0.0;
        let pick = if p.objective[last] > 0.0 {
            candidates.iter().rev().find(feasible)
        } else {
            candidates.iter().find(feasible)
        };
        let Some(&k) = pick else { return };
        let v = k as f64 * self.step;
        let revenue = prefix.revenue + v * p.objective[last];
        if revenue > best.revenue {
            let mut x = prefix.x.clone();
            x[last] = v;
            // confirm with the full evaluation before accepting
            if constraint_slack(p, &x).is_ok_and(|s| s >= 0.0) {
                best.revenue = revenue;
                best.x = x;
            }
        }
    }

    /// `levels[0]` is the prefix with coordinates `< coord` placed; the rest
    /// of `levels` is scratch space for deeper coordinates.
    fn descend(&self, levels: &mut [Prefix], coord: usize, best: &mut Best) {
        let (prefix, rest) = levels.split_first_mut().expect("one level per coordinate");
        if coord == self.n - 1 {
            self.finish(prefix, best);
            return;
        }
        let Some(kmax) = self.levels_for(prefix, coord) else {
            return;
        };
        for k in 0..=kmax {
            self.place_into(prefix, coord, k as f64 * self.step, &mut rest[0]);
            self.descend(rest, coord + 1, best);
        }
    }
}

/// Max-revenue feasible lattice point; ties go to the first point in
/// lexicographic order.
pub fn grid_search(problem: &Problem, spec: &LatticeSpec) -> Result<GridResult> {
    if !(spec.step > 0.0 && spec.step.is_finite()) {
        return Err(Error::invalid(
            "step",
            format!("must be finite and > 0, got {}", spec.step),
        ));
    }
    let n = problem.dim();
    let levels = (problem.deadweight_cap / spec.step).floor() as u64;
    let estimated = lattice_size(levels, n);
    if estimated > spec.max_points {
        return Err(Error::LatticeTooLarge {
            estimated,
            max_points: spec.max_points,
        });
    }
    let search = Search {
        problem,
        step: spec.step,
        n,
    };
    let root = Prefix {
        x: vec![0.0; n],
        mass: 0.0,
        volume: 0.0,
        revenue: 0.0,
        lhs: 0.0,
        u: vec![0.0; n],
    };

    let best = if n == 1 {
        let mut best = Best::empty();
        search.finish(&root, &mut best);
        best
    } else {
        let kmax = search.levels_for(&root, 0).unwrap_or(0);
        let parts: Vec<Best> = (0..=kmax)
            .into_par_iter()
            .map(|k| {
                let mut best = Best::empty();
                let mut levels = vec![root.clone(); n];
                search.place_into(&root, 0, k as f64 * spec.step, &mut levels[0]);
                search.descend(&mut levels, 1, &mut best);
                best
            })
            .collect();
        parts.into_iter().fold(Best::empty(), Best::merge)
    };

    // the origin is a lattice point, feasible iff rhs >= 0
    let origin_ok = constraint_slack(problem, &vec![0.0; n]).is_ok_and(|s| s >= 0.0);
    let (best_x, feasible) = if best.x.is_empty() {
        (vec![0.0; n], origin_ok)
    } else {
        (best.x, true)
    };
    Ok(GridResult {
        best_revenue: if feasible {
            dot(&problem.objective, &best_x)
        } else {
            f64::NEG_INFINITY
        },
        best_x,
        points_evaluated: best.points,
        feasible,
    })
}

/// Revenue slack allowed when comparing a solution against the lattice.
pub fn certification_tolerance(best_revenue: f64) -> f64 {
    1e-9 * best_revenue.abs().max(1.0)
}

/// True iff no lattice point beats `solution` by more than the tolerance.
pub fn certify(problem: &Problem, solution: &Solution, spec: &LatticeSpec) -> Result<bool> {
    let grid = grid_search(problem, spec)?;
    Ok(solution.revenue >= grid.best_revenue - certification_tolerance(grid.best_revenue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        assemble_problem, CargoType, Environment, LoadingOrder, StabilityPolicy, Vessel,
    };

    fn single(mu: f64) -> Problem {
        let vessel = Vessel {
            length: 200.0,
            beam: 25.0,
            deadweight: 1000.0,
            volume_capacity: 1e9,
            light_mass: 15_000.0,
            light_kg: 2.0,
        };
        assemble_problem(
            &vessel,
            &Environment::default(),
            &StabilityPolicy::new(mu),
            &[CargoType::new("only", 0.5, 1.0)],
            &LoadingOrder::Normal,
            false,
        )
        .unwrap()
    }

    #[test]
    fn single_cargo_fills_deadweight() {
        let r = grid_search(&single(0.0), &LatticeSpec::new(10.0)).unwrap();
        assert_eq!(r.best_x, vec![1000.0]);
        assert_eq!(r.best_revenue, 1000.0);
        assert_eq!(r.points_evaluated, 101);
    }

    #[test]
    fn only_origin_feasible_under_large_margin() {
        let p = single(0.0);
        // margin that leaves rhs = 1 t·m: any lattice load of 10 t breaks it
        let v = &p.vessel;
        let area = v.waterplane_area();
        let mu = (v.light_mass.powi(2) / (2.0 * area) + v.beam.powi(3) * v.length / 12.0 - 1.0)
            / v.light_mass
            - v.light_kg;
        let p = p.with_min_metacentric_height(mu).unwrap();
        assert!((p.rhs - 1.0).abs() < 1e-6, "{}", p.rhs);
        let r = grid_search(&p, &LatticeSpec::new(10.0)).unwrap();
        assert!(r.feasible);
        assert_eq!(r.best_x, vec![0.0]);
        assert_eq!(r.best_revenue, 0.0);

        let past = p.with_min_metacentric_height(mu + 1.0).unwrap();
        let r = grid_search(&past, &LatticeSpec::new(10.0)).unwrap();
        assert!(!r.feasible);
    }

    #[test]
    fn refuses_oversized_lattice() {
        let p = single(0.0);
        let spec = LatticeSpec {
            step: 1.0,
            max_points: 100.0,
        };
        assert!(matches!(
            grid_search(&p, &spec),
            Err(Error::LatticeTooLarge { .. })
        ));
        assert!(grid_search(&p, &LatticeSpec::new(0.0)).is_err());
    }

    #[test]
    fn lattice_size_counts_simplex_points() {
        assert_eq!(lattice_size(2, 2), 6.0);
        assert_eq!(lattice_size(180, 1), 181.0);
        assert!((lattice_size(180, 4) - 46_217_626.0).abs() < 1.0);
    }
}
