//! Definiteness of the stability constraint matrix by congruence.
//!
//! A matrix `Q[i][j] = m[min(i, j)]` factors as `Q = B D Bᵀ` with `B` the
//! unit lower-triangular matrix of ones and
//! `D = diag(m₁, m₂ - m₁, …, mₙ - mₙ₋₁)`. The constraint matrix
//! `W - (1/ρ) 11'` has this structure with `m_k = 1/d_k - 1/ρ`, so by
//! Sylvester's law of inertia its definiteness is read off the consecutive
//! differences of the inverse densities.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative threshold below which congruent diagonal entries count as zero.
pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CongruenceResult {
    pub diagonal: Vec<f64>,
    /// `max |Q - B D Bᵀ|` over all entries.
    pub factor_check_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    PositiveSemidefinite,
    NegativeSemidefinite,
    Indefinite,
}

impl std::fmt::Display for Definiteness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Definiteness::PositiveSemidefinite => "PositiveSemidefinite",
            Definiteness::NegativeSemidefinite => "NegativeSemidefinite",
            Definiteness::Indefinite => "Indefinite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinitenessClass {
    pub class: Definiteness,
    pub evidence: CongruenceResult,
}

impl DefinitenessClass {
    /// Sign counts `(negative, zero, positive)` of the congruent diagonal.
    pub fn inertia(&self) -> (usize, usize, usize) {
        inertia_of(&self.evidence.diagonal)
    }
}

fn inertia_of(diagonal: &[f64]) -> (usize, usize, usize) {
    let scale = diagonal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero = SIGN_TOLERANCE * scale;
    diagonal.iter().fold((0, 0, 0), |(neg, z, pos), &v| {
        if v.abs() <= zero {
            (neg, z + 1, pos)
        } else if v < 0.0 {
            (neg + 1, z, pos)
        } else {
            (neg, z, pos + 1)
        }
    })
}

/// Congruent diagonal of `Q[i][j] = m[min(i, j)]`, with the factorization
/// checked by reconstruction.
pub fn congruence_diagonal(m: &[f64]) -> Result<CongruenceResult> {
    if m.is_empty() {
        return Err(Error::EmptyVector);
    }
    let n = m.len();
    let diagonal: Vec<f64> = (0..n)
        .map(|k| if k == 0 { m[0] } else { m[k] - m[k - 1] })
        .collect();
    let q = DMatrix::from_fn(n, n, |i, j| m[i.min(j)]);
    let b = DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 });
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&diagonal));
    let rebuilt = &b * d * b.transpose();
    let factor_check_residual = (q - rebuilt).amax();
    Ok(CongruenceResult {
        diagonal,
        factor_check_residual,
    })
}

/// Classifies `W - (1/ρ) 11'` for densities listed bottom to top.
pub fn classify_constraint_matrix(
    densities: &[f64],
    water_density: f64,
) -> Result<DefinitenessClass> {
    if !(water_density > 0.0) {
        return Err(Error::invalid("water_density", "must be > 0"));
    }
    for (i, &d) in densities.iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::invalid(
                format!("density[{i}]"),
                format!("must be > 0, got {d}"),
            ));
        }
    }
    let inv_rho = 1.0 / water_density;
    let m: Vec<f64> = densities.iter().map(|d| 1.0 / d - inv_rho).collect();
    let evidence = congruence_diagonal(&m)?;
    let (neg, _, pos) = inertia_of(&evidence.diagonal);
    let class = match (neg, pos) {
        (0, _) => Definiteness::PositiveSemidefinite,
        (_, 0) => Definiteness::NegativeSemidefinite,
        _ => Definiteness::Indefinite,
    };
    Ok(DefinitenessClass { class, evidence })
}

/// Eigenvalue sign counts `(negative, zero, positive)` of a symmetric matrix.
pub fn eigen_sign_check(matrix: &DMatrix<f64>) -> Result<(usize, usize, usize)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.ncols(),
        });
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            let gap = (matrix[(i, j)] - matrix[(j, i)]).abs();
            if gap > 1e-12 * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    gap,
                });
            }
        }
    }
    if n == 0 {
        return Ok((0, 0, 0));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let emax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // eigenvalues carry O(n ε |A|) error, so zero is judged against the matrix scale
    let zero = 1e-10 * emax.max(scale);
    Ok(values.iter().fold((0, 0, 0), |(neg, z, pos), &v| {
        if v.abs() <= zero {
            (neg, z + 1, pos)
        } else if v < 0.0 {
            (neg + 1, z, pos)
        } else {
            (neg, z, pos + 1)
        }
    }))
}
