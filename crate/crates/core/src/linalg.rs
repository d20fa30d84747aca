//! Small dense and iterative linear-algebra helpers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric operator `y = A x` for matrix-free solvers.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`, recomputed from scratch at exit.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradient for SPD operators.
///
/// Fails if the true relative residual still exceeds `tol` after `max_iter`
/// iterations.
pub fn conjugate_gradient<A: LinearOperator>(
    op: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.dim();
    assert_eq!(b.len(), n, "rhs length must match operator dimension");
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut ax = vec![0.0; n];
    op.apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    // The recurrence residual drifts from the true one; stop a little below
    // the target and verify against the true residual below.
    let target = 0.5 * tol * bnorm;
    while iterations < max_iter && dot(&r, &r).sqrt() > target {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::numerical(format!(
                "conjugate gradient breakdown (pAp = {pap:e}); operator not positive definite"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }

    op.apply(&x, &mut ax);
    let res = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt()
        / bnorm;
    if res > tol {
        return Err(Error::numerical(format!(
            "conjugate gradient did not converge: relative residual {res:e} after {iterations} iterations"
        )));
    }
    Ok(CgOutcome {
        x,
        iterations,
        relative_residual: res,
    })
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// if factorization fails.
pub fn cholesky_lower(m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(m).map(|c| c.unpack())
}

/// Dense row-major lower-triangular matrix, stored packed by rows.
#[derive(Debug, Clone)]
pub struct LowerTriangular {
    n: usize,
    packed: Vec<f64>,
}

impl LowerTriangular {
    pub fn from_dense(l: &DMatrix<f64>) -> Self {
        let n = l.nrows();
        let mut packed = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                packed.push(l[(i, j)]);
            }
        }
        Self { n, packed }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `L z`
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n);
        let mut out = Vec::with_capacity(self.n);
        let mut off = 0;
        for i in 0..self.n {
            let row = &self.packed[off..off + i + 1];
            out.push(dot(row, &z[..=i]));
            off += i + 1;
        }
        out
    }
}
