//! Singular value decomposition, backed by nalgebra's bidiagonal QR SVD.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// `A = U diag(sigma) V†`, singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<C>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<C>,
}

impl Svd {
    pub fn new(a: &DMatrix<C>) -> Result<Self> {
        let raw = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0).ok_or(Error::SvdNoConvergence)?;
        let u = raw.u.ok_or(Error::SvdNoConvergence)?;
        let v_t = raw.v_t.ok_or(Error::SvdNoConvergence)?;
        let mut order: Vec<usize> = (0..raw.singular_values.len()).collect();
        order.sort_by(|&i, &j| raw.singular_values[j].total_cmp(&raw.singular_values[i]));
        let sigma = order.iter().map(|&i| raw.singular_values[i]).collect();
        let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
        let v = DMatrix::from_fn(v_t.ncols(), order.len(), |r, c| v_t[(order[c], r)].conj());
        Ok(Self { u, sigma, v })
    }

    pub fn max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values at or below `rtol · σ_max`.
    pub fn nullity(&self, rtol: f64) -> usize {
        let cut = rtol * self.max();
        self.sigma.iter().filter(|&&s| s <= cut).count()
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values at or below `rtol · σ_max`.
    pub fn solve_min_norm(&self, b: &DVector<C>, rtol: f64) -> DVector<C> {
        let cut = rtol * self.max();
        let mut x = DVector::<C>::zeros(self.v.nrows());
        for (i, &s) in self.sigma.iter().enumerate() {
            if s <= cut {
                continue;
            }
            let coeff = self.u.column(i).dotc(b) / s;
            x += self.v.column(i) * coeff;
        }
        x
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<C>) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let raw = SVD::try_new(a.clone(), false, false, f64::EPSILON, 0).ok_or(Error::SvdNoConvergence)?;
    let mut s: Vec<f64> = raw.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Largest singular value, the operator 2-norm.
pub fn spectral_norm(a: &DMatrix<C>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}
