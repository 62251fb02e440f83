//! Feasible local method: a primal log-barrier path followed by an
//! active-set Newton polish of the KKT equations.
//!
//! Everything here works on a normalized copy of the problem: loads are
//! divided by the deadweight, freight rates by the largest rate, and each
//! constraint by its capacity, so the Newton systems stay well scaled.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::model::Problem;

use super::kkt::Multipliers;

const CONSTRAINTS: usize = 3;
const T_INITIAL: f64 = 1e-3;
const T_FINAL: f64 = 1e-11;
const T_FACTOR: f64 = 0.1;
const INNER_TOLERANCE: f64 = 1e-15;
const POLISH_TOLERANCE: f64 = 1e-12;

pub(crate) struct Scaled {
    pub n: usize,
    mass_scale: f64,
    price_scale: f64,
    stab_scale: f64,
    volume_cap: f64,
    p: Vec<f64>,
    vol: Vec<f64>,
    q: DMatrix<f64>,
    beta: f64,
    caps: [f64; CONSTRAINTS],
}

/// Outcome of one local solve, in original units.
pub(crate) struct LocalOutcome {
    pub x: Vec<f64>,
    pub multipliers: Multipliers,
    pub iterations: usize,
}

impl Scaled {
    pub fn new(problem: &Problem) -> Self {
        let n = problem.dim();
        let c = problem.deadweight_cap;
        let pmax = problem
            .objective
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let sigma = problem.stability_scale();
        Scaled {
            n,
            mass_scale: c,
            price_scale: pmax,
            stab_scale: sigma,
            volume_cap: problem.volume_cap,
            p: problem.objective.iter().map(|v| v / pmax).collect(),
            vol: problem
                .volume_coeffs
                .iter()
                .map(|v| v * c / problem.volume_cap)
                .collect(),
            q: problem
                .quad_matrix
                .map(|a| a * problem.quad_scale * c * c / sigma),
            beta: problem.linear_coeff * c / sigma,
            caps: [1.0, 1.0, problem.rhs / sigma],
        }
    }

    fn values(&self, y: &[f64]) -> [f64; CONSTRAINTS] {
        let sum: f64 = y.iter().sum();
        let vol: f64 = y.iter().zip(&self.vol).map(|(a, b)| a * b).sum();
        let yv = DVector::from_row_slice(y);
        let quad = yv.dot(&(&self.q * &yv));
        [sum, vol, quad + self.beta * sum]
    }

    fn slacks(&self, y: &[f64]) -> [f64; CONSTRAINTS] {
        let v = self.values(y);
        [
            self.caps[0] - v[0],
            self.caps[1] - v[1],
            self.caps[2] - v[2],
        ]
    }

    fn gradients(&self, y: &[f64]) -> [Vec<f64>; CONSTRAINTS] {
        let yv = DVector::from_row_slice(y);
        let qy = &self.q * &yv;
        [
            vec![1.0; self.n],
            self.vol.clone(),
            qy.iter().map(|v| 2.0 * v + self.beta).collect(),
        ]
    }

    fn strictly_feasible(&self, y: &[f64]) -> bool {
        y.iter().all(|&v| v > 0.0) && self.slacks(y).iter().all(|&s| s > 0.0)
    }

    /// Scales `y` toward the origin until it is strictly feasible.
    pub fn pull_inside(&self, mut y: Vec<f64>) -> Option<Vec<f64>> {
        for v in y.iter_mut() {
            *v = v.max(1e-9);
        }
        let [sum, vol, _] = self.values(&y);
        let shrink = 0.999 / vol.max(sum).max(0.999);
        for v in y.iter_mut() {
            *v *= shrink;
        }
        for _ in 0..400 {
            if self.strictly_feasible(&y) {
                return Some(y);
            }
            for v in y.iter_mut() {
                *v *= 0.8;
            }
        }
        None
    }

    fn barrier_value(&self, y: &[f64], t: f64) -> f64 {
        let s = self.slacks(y);
        let obj: f64 = y.iter().zip(&self.p).map(|(a, b)| a * b).sum();
        let logs: f64 =
            s.iter().map(|v| v.ln()).sum::<f64>() + y.iter().map(|v| v.ln()).sum::<f64>();
        -obj - t * logs
    }

    /// Runs the barrier path and the polish from a strictly feasible `y0`.
    pub fn solve_from(&self, y0: Vec<f64>, max_iterations: usize) -> LocalOutcome {
        let n = self.n;
        let mut y = y0;
        let mut t = T_INITIAL;
        let mut iterations = 0;

        'outer: loop {
            loop {
                if iterations >= max_iterations {
                    break 'outer;
                }
                iterations += 1;
                let s = self.slacks(&y);
                let a = self.gradients(&y);
                let mut grad = DVector::from_iterator(n, self.p.iter().map(|v| -v));
                let mut hess = DMatrix::<f64>::zeros(n, n);
                for k in 0..CONSTRAINTS {
                    let ak = DVector::from_row_slice(&a[k]);
                    grad.axpy(t / s[k], &ak, 1.0);
                    hess.ger(t / (s[k] * s[k]), &ak, &ak, 1.0);
                }
                hess += &self.q * (2.0 * t / s[2]);
                for i in 0..n {
                    grad[i] -= t / y[i];
                    hess[(i, i)] += t / (y[i] * y[i]);
                }
                let Some(step) = modified_newton_step(&hess, &grad) else {
                    break;
                };
                let decrement = -grad.dot(&step);
                if decrement <= INNER_TOLERANCE {
                    break;
                }
                let mut alpha = 1.0f64;
                for i in 0..n {
                    if step[i] < 0.0 {
                        alpha = alpha.min(-0.995 * y[i] / step[i]);
                    }
                }
                let f0 = self.barrier_value(&y, t);
                let mut accepted = false;
                while alpha > 1e-18 {
                    let trial: Vec<f64> = (0..n).map(|i| y[i] + alpha * step[i]).collect();
                    if self.strictly_feasible(&trial)
                        && self.barrier_value(&trial, t) <= f0 - 1e-4 * alpha * decrement
                    {
                        y = trial;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            if t <= T_FINAL {
                break;
            }
            t *= T_FACTOR;
        }

        let s = self.slacks(&y);
        let lambda: [f64; CONSTRAINTS] = [t / s[0], t / s[1], t / s[2]];
        let nu: Vec<f64> = y.iter().map(|v| t / v).collect();
        let (y, lambda, nu) = match self.polish(&y, &lambda, &nu) {
            Some(p) => p,
            None => (y, lambda, nu),
        };
        self.unscale(y, lambda, nu, iterations)
    }

    fn unscale(
        &self,
        y: Vec<f64>,
        lambda: [f64; CONSTRAINTS],
        nu: Vec<f64>,
        iterations: usize,
    ) -> LocalOutcome {
        let (c, pmax) = (self.mass_scale, self.price_scale);
        LocalOutcome {
            x: y.iter().map(|v| (v * c).max(0.0)).collect(),
            multipliers: Multipliers {
                deadweight: pmax * lambda[0],
                volume: pmax * lambda[1] * c / self.volume_cap,
                stability: pmax * lambda[2] * c / self.stab_scale,
                nonneg: nu.iter().map(|v| v * pmax).collect(),
            },
            iterations,
        }
    }

    /// Solves the KKT equations exactly on a guessed active set, repairing
    /// the guess one constraint at a time.
    fn polish(
        &self,
        y: &[f64],
        lambda: &[f64; CONSTRAINTS],
        nu: &[f64],
    ) -> Option<(Vec<f64>, [f64; CONSTRAINTS], Vec<f64>)> {
        let n = self.n;
        let s = self.slacks(y);
        let mut free: Vec<bool> = (0..n).map(|i| y[i] > nu[i]).collect();
        let mut active: [bool; CONSTRAINTS] = [0, 1, 2].map(|k| lambda[k] > s[k]);
        let mut y = y.to_vec();
        let mut lambda = *lambda;
        for i in 0..n {
            if !free[i] {
                y[i] = 0.0;
            }
        }
        for k in 0..CONSTRAINTS {
            if !active[k] {
                lambda[k] = 0.0;
            }
        }

        for _ in 0..(2 * n + 8) {
            let (ny, nl) = self.newton_kkt(&y, &lambda, &free, &active)?;
            y = ny;
            lambda = nl;

            let a = self.gradients(&y);
            let s = self.slacks(&y);
            let nu: Vec<f64> = (0..n)
                .map(|i| {
                    if free[i] {
                        0.0
                    } else {
                        (0..CONSTRAINTS).map(|k| lambda[k] * a[k][i]).sum::<f64>() - self.p[i]
                    }
                })
                .collect();

            if let Some(i) = argmin(
                (0..n).filter(|&i| free[i]).map(|i| (i, y[i])),
                -POLISH_TOLERANCE,
            ) {
                free[i] = false;
                y[i] = 0.0;
                continue;
            }
            if let Some(k) = argmin(
                (0..CONSTRAINTS).filter(|&k| !active[k]).map(|k| (k, s[k])),
                -POLISH_TOLERANCE,
            ) {
                active[k] = true;
                lambda[k] = 0.0;
                continue;
            }
            if let Some(k) = argmin(
                (0..CONSTRAINTS)
                    .filter(|&k| active[k])
                    .map(|k| (k, lambda[k])),
                -POLISH_TOLERANCE,
            ) {
                active[k] = false;
                lambda[k] = 0.0;
                continue;
            }
            if let Some(i) = argmin(
                (0..n).filter(|&i| !free[i]).map(|i| (i, nu[i])),
                -POLISH_TOLERANCE,
            ) {
                free[i] = true;
                continue;
            }
            return Some((y, lambda, nu));
        }
        None
    }

    /// Newton's method on the stationarity rows of the free loads and the
    /// equations of the active constraints.
    fn newton_kkt(
        &self,
        y: &[f64],
        lambda: &[f64; CONSTRAINTS],
        free: &[bool],
        active: &[bool; CONSTRAINTS],
    ) -> Option<(Vec<f64>, [f64; CONSTRAINTS])> {
        let fi: Vec<usize> = (0..self.n).filter(|&i| free[i]).collect();
        let ak: Vec<usize> = (0..CONSTRAINTS).filter(|&k| active[k]).collect();
        let dim = fi.len() + ak.len();
        let mut y = y.to_vec();
        let mut lambda = *lambda;
        if dim == 0 {
            return Some((y, lambda));
        }
        for _ in 0..60 {
            let a = self.gradients(&y);
            let s = self.slacks(&y);
            let mut res = DVector::zeros(dim);
            for (r, &i) in fi.iter().enumerate() {
                res[r] = self.p[i] - ak.iter().map(|&k| lambda[k] * a[k][i]).sum::<f64>();
            }
            for (r, &k) in ak.iter().enumerate() {
                res[fi.len() + r] = s[k];
            }
            if res.amax() <= 1e-14 {
                return Some((y, lambda));
            }
            let mut jac = DMatrix::zeros(dim, dim);
            for (r, &i) in fi.iter().enumerate() {
                if active[2] {
                    for (c, &j) in fi.iter().enumerate() {
                        jac[(r, c)] = -2.0 * lambda[2] * self.q[(i, j)];
                    }
                }
                for (c, &k) in ak.iter().enumerate() {
                    jac[(r, fi.len() + c)] = -a[k][i];
                }
            }
            for (r, &k) in ak.iter().enumerate() {
                for (c, &j) in fi.iter().enumerate() {
                    jac[(fi.len() + r, c)] = -a[k][j];
                }
            }
            let delta = jac.lu().solve(&res)?;
            if !delta.iter().all(|v| v.is_finite()) {
                return None;
            }
            for (c, &i) in fi.iter().enumerate() {
                y[i] -= delta[c];
            }
            for (c, &k) in ak.iter().enumerate() {
                lambda[k] -= delta[fi.len() + c];
            }
            if delta.amax() <= 1e-15 {
                return Some((y, lambda));
            }
        }
        None
    }
}

/// Index with the smallest value, if that value is below `threshold`.
fn argmin(items: impl Iterator<Item = (usize, f64)>, threshold: f64) -> Option<usize> {
    items
        .filter(|&(_, v)| v < threshold)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Newton direction with a diagonal shift when the Hessian is not
/// positive definite.
fn modified_newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let diag_max = (0..n)
        .fold(0.0f64, |m, i| m.max(hess[(i, i)].abs()))
        .max(1e-300);
    let mut shift = 0.0;
    for _ in 0..40 {
        let mut h = hess.clone();
        for i in 0..n {
            h[(i, i)] += shift;
        }
        if let Some(chol) = Cholesky::new(h) {
            let step = chol.solve(&(-grad));
            if step.iter().all(|v| v.is_finite()) {
                return Some(step);
            }
        }
        shift = if shift == 0.0 {
            1e-12 * diag_max
        } else {
            shift * 10.0
        };
    }
    None
}
