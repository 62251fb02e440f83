//! Dense tableau simplex for `max c'x  s.t.  A x <= b, x >= 0` with `b >= 0`.

pub(crate) struct LpResult {
    pub x: Vec<f64>,
    /// Row duals, one per constraint.
    pub duals: Vec<f64>,
    /// `A'y - c` for every column; nonnegative at optimality.
    pub reduced: Vec<f64>,
}

/// Solves from the slack basis with Bland's rule, so it cannot cycle.
pub(crate) fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpResult {
    let n = c.len();
    let m = b.len();
    let width = n + m + 1;
    let mut tab = vec![vec![0.0; width]; m];
    for (i, row) in tab.iter_mut().enumerate() {
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[width - 1] = b[i];
    }
    // objective row holds z_j - c_j
    let mut obj = vec![0.0; width];
    for j in 0..n {
        obj[j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let cmax = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let eps = 1e-12 * cmax;

    for _ in 0..10_000 {
        let Some(enter) = (0..n + m).find(|&j| obj[j] < -eps) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = tab[i][enter];
            if coef > 1e-14 {
                let ratio = tab[i][width - 1] / coef;
                let better = match leave {
                    None => true,
                    Some((l, best)) => ratio < best || (ratio == best && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // bounded: every column has positive entries in the capacity rows
        let Some((row, _)) = leave else { break };
        let pivot = tab[row][enter];
        for v in tab[row].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = tab[row].clone();
        for (i, r) in tab.iter_mut().enumerate() {
            if i != row && r[enter] != 0.0 {
                let f = r[enter];
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        let f = obj[enter];
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
        basis[row] = enter;
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[i][width - 1].max(0.0);
        }
    }
    LpResult {
        x,
        duals: (0..m).map(|i| obj[n + i]).collect(),
        reduced: obj[..n].to_vec(),
    }
}
