//! Exact synthesis by covariance-matrix factorization.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{fbm_covariance_2d, fgn_autocovariance, FbmParams};
use crate::error::{Error, Result};
use crate::field::GrayField;
use crate::linalg::{cholesky_lower, LowerTriangular};
use crate::seed;

/// Largest grid side accepted by the exact 2D synthesizer.
pub const MAX_EXACT_SIDE: usize = 96;

/// Factorizes `m` in place; on failure retries once with
/// `jitter · trace / n` added to the diagonal.
fn factor_with_jitter(mut m: DMatrix<f64>, jitter: f64, what: &str) -> Result<LowerTriangular> {
    let n = m.nrows();
    if let Some(l) = cholesky_lower(m.clone()) {
        return Ok(LowerTriangular::from_dense(&l));
    }
    let bump = jitter * m.trace() / n as f64;
    for i in 0..n {
        m[(i, i)] += bump;
    }
    cholesky_lower(m)
        .map(|l| LowerTriangular::from_dense(&l))
        .ok_or_else(|| {
            Error::numerical(format!(
                "{what} covariance is not numerically positive definite even after jitter"
            ))
        })
}

fn standard_normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Exact sampler for the isotropic fractional Brownian field on an `n x n`
/// unit grid with the origin pinned at pixel `(0, 0)`.
///
/// The factorization depends only on `H` and `n`; build one sampler and draw
/// many seeds from it.
#[derive(Debug, Clone)]
pub struct ExactFbm2d {
    params: FbmParams,
    n: usize,
    factor: LowerTriangular,
}

impl ExactFbm2d {
    pub fn new(params: FbmParams, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "exact synthesis needs a grid side of at least 2",
            ));
        }
        if n > MAX_EXACT_SIDE {
            return Err(Error::invalid(format!(
                "exact synthesis is limited to n <= {MAX_EXACT_SIDE}, got {n}"
            )));
        }
        let unit = FbmParams::new(params.hurst(), 1.0)?;
        let pts: Vec<[f64; 2]> = (1..n * n)
            .map(|k| [(k % n) as f64, (k / n) as f64])
            .collect();
        let m = pts.len();
        let cov = DMatrix::from_fn(m, m, |i, j| fbm_covariance_2d(&unit, pts[i], pts[j]));
        // diagonal jitter of 1e-10 * trace / n^2
        let factor = factor_with_jitter(cov, 1e-10 * m as f64 / (n * n) as f64, "fBm field")?;
        Ok(Self { params, n, factor })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn sample(&self, seed: u64) -> GrayField {
        let z = standard_normals(self.factor.dim(), seed);
        let values = self.factor.mul_vec(&z);
        let s = self.params.sigma_h();
        let mut data = Vec::with_capacity(self.n * self.n);
        data.push(0.0);
        data.extend(values.into_iter().map(|v| s * v));
        GrayField::new(self.n, self.n, data).expect("finite synthesis output")
    }
}

/// One-shot exact synthesis. Factorizes on every call; prefer
/// [`ExactFbm2d`] for Monte Carlo loops.
pub fn synth_fbm_exact(params: &FbmParams, n: usize, seed: u64) -> Result<GrayField> {
    Ok(ExactFbm2d::new(*params, n)?.sample(seed))
}

/// Exact 1D fBm sampler: factorizes the Toeplitz covariance of unit-spaced
/// fractional Gaussian noise and integrates, so `B(0) = 0` and
/// `Var B(t) = σ² t^{2H}` at integer `t`.
#[derive(Debug, Clone)]
pub struct ExactFbm1d {
    params: FbmParams,
    len: usize,
    factor: LowerTriangular,
}

impl ExactFbm1d {
    /// Sampler for signals of `len` samples `B(0), ..., B(len-1)`.
    pub fn new(params: FbmParams, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid("1D synthesis needs at least 2 samples"));
        }
        let m = len - 1;
        let h = params.hurst();
        let acov: Vec<f64> = (0..m).map(|k| fgn_autocovariance(h, k)).collect();
        let cov = DMatrix::from_fn(m, m, |i, j| acov[i.abs_diff(j)]);
        let factor = factor_with_jitter(cov, 1e-10, "fGn")?;
        Ok(Self {
            params,
            len,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let z = standard_normals(self.factor.dim(), seed);
        let incr = self.factor.mul_vec(&z);
        let s = self.params.sigma_h();
        let mut out = Vec::with_capacity(self.len);
        let mut acc = 0.0;
        out.push(0.0);
        for g in incr {
            acc += s * g;
            out.push(acc);
        }
        out
    }
}
