//! One-vs-one soft-margin SVMs trained by SMO.

use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Linear,
    /// `None` selects `1 / (dim · variance)` of the standardized training data.
    Rbf {
        gamma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelChoice,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            kernel: KernelChoice::Rbf { gamma: None },
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        let gamma_ok = match self.kernel {
            KernelChoice::Rbf { gamma: Some(g) } => g > 0.0 && g.is_finite(),
            _ => true,
        };
        if self.c > 0.0 && self.c.is_finite() && self.tol > 0.0 && self.max_iter > 0 && gamma_ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid SVM parameters: {self:?}")))
        }
    }
}

/// Solution of one binary dual problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ α_i y_i K(x_i, x) + b`.
    pub b: f64,
    pub iterations: usize,
    /// Dual objective `Σ α − ½ αᵀQα` (to be maximized).
    pub objective: f64,
}

/// `Σ α − ½ Σ_ij α_i α_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], gram: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// SMO with maximal-violating-pair working set selection.
///
/// `y` holds ±1 labels and `gram` the kernel matrix. Ties in the selection
/// go to the lowest index.
pub fn smo_solve(
    gram: &[Vec<f64>],
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DualSolution> {
    let n = y.len();
    if n < 2 || gram.len() != n {
        return Err(Error::invalid(
            "SMO needs at least two examples and a square kernel matrix",
        ));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::invalid("SMO needs examples of both signs"));
    }
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::numerical(format!(
                "SMO did not reach KKT tolerance {tol} in {max_iter} iterations (gap {:e})",
                gmax - gmin
            )));
        }
        iterations += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let tau = 1e-12;
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // b from free vectors, else the midpoint of the feasible interval
    let mut sum = 0.0;
    let mut free = 0usize;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        0.5 * (ub + lb)
    };
    let objective = dual_objective(&alpha, y, gram);
    Ok(DualSolution {
        alpha,
        b: -rho,
        iterations,
        objective,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Class treated as `+1`.
    pub positive: usize,
    /// Class treated as `−1`.
    pub negative: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub coef: Vec<f64>,
    pub b: f64,
    /// `‖w‖` in feature space.
    pub w_norm: f64,
    pub iterations: usize,
    pub dual_objective: f64,
}

impl BinarySvm {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * kernel.eval(sv, x))
            .sum::<f64>()
            + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    /// Decision-function value `f(x)`.
    #[default]
    Functional,
    /// `f(x) / ‖w‖`.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub k: usize,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub standardizer: Standardizer,
    /// Pairs `(i, j)`, `i < j`, in lexicographic order.
    pub pairs: Vec<BinarySvm>,
}

/// Trains `k(k−1)/2` binary machines on z-scored features. For pair
/// `(i, j)` with `i < j`, class `i` is the positive side.
pub fn svm_train(
    features: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    params: &SvmParams,
) -> Result<SvmModel> {
    params.validate()?;
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if k < 2 {
        return Err(Error::invalid("at least two classes are required"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!(
            "label {l} out of range for k = {k}"
        )));
    }
    for class in 0..k {
        if !labels.contains(&class) {
            return Err(Error::invalid(format!(
                "class {class} has no training examples"
            )));
        }
    }
    let standardizer = Standardizer::fit(features)?;
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|r| standardizer.apply(r))
        .collect::<Result<_>>()?;
    let kernel = match params.kernel {
        KernelChoice::Linear => Kernel::Linear,
        KernelChoice::Rbf { gamma: Some(g) } => Kernel::Rbf { gamma: g },
        KernelChoice::Rbf { gamma: None } => {
            let all: Vec<f64> = z.iter().flatten().copied().collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            let var = all.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / all.len() as f64;
            let dim = standardizer.dim() as f64;
            Kernel::Rbf {
                gamma: if var > 0.0 {
                    1.0 / (dim * var)
                } else {
                    1.0 / dim
                },
            }
        }
    };
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let idx: Vec<usize> = (0..labels.len())
                .filter(|&t| labels[t] == i || labels[t] == j)
                .collect();
            let y: Vec<f64> = idx
                .iter()
                .map(|&t| if labels[t] == i { 1.0 } else { -1.0 })
                .collect();
            let gram: Vec<Vec<f64>> = idx
                .iter()
                .map(|&a| idx.iter().map(|&b| kernel.eval(&z[a], &z[b])).collect())
                .collect();
            let sol = smo_solve(&gram, &y, params.c, params.tol, params.max_iter)?;
            let sv: Vec<usize> = (0..idx.len()).filter(|&t| sol.alpha[t] > 0.0).collect();
            let coef: Vec<f64> = sv.iter().map(|&t| sol.alpha[t] * y[t]).collect();
            let mut w2 = 0.0;
            for (a, &ta) in sv.iter().enumerate() {
                for (b, &tb) in sv.iter().enumerate() {
                    w2 += coef[a] * coef[b] * gram[ta][tb];
                }
            }
            pairs.push(BinarySvm {
                positive: i,
                negative: j,
                support_vectors: sv.iter().map(|&t| z[idx[t]].clone()).collect(),
                coef,
                b: sol.b,
                w_norm: w2.max(0.0).sqrt(),
                iterations: sol.iterations,
                dual_objective: sol.objective,
            });
        }
    }
    Ok(SvmModel {
        k,
        kernel,
        c: params.c,
        tol: params.tol,
        standardizer,
        pairs,
    })
}

impl SvmModel {
    /// Decision values for every pair, lexicographic pair order.
    pub fn decision_distances(&self, x: &[f64], kind: DistanceKind) -> Result<Vec<f64>> {
        let z = self.standardizer.apply(x)?;
        Ok(self
            .pairs
            .iter()
            .map(|p| {
                let f = p.decision(&self.kernel, &z);
                match kind {
                    DistanceKind::Functional => f,
                    DistanceKind::Geometric if p.w_norm > 0.0 => f / p.w_norm,
                    DistanceKind::Geometric => 0.0,
                }
            })
            .collect())
    }

    /// One-vs-one vote; ties go to the largest summed `|f|` over won pairs,
    /// then to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let d = self.decision_distances(x, DistanceKind::Functional)?;
        Ok(vote(self.k, &self.pairs, &d))
    }
}

pub fn svm_decision_distances(model: &SvmModel, x: &[f64]) -> Result<Vec<f64>> {
    model.decision_distances(x, DistanceKind::Functional)
}

pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}

fn vote(k: usize, pairs: &[BinarySvm], d: &[f64]) -> usize {
    let mut votes = vec![0usize; k];
    let mut strength = vec![0.0; k];
    for (p, &f) in pairs.iter().zip(d) {
        // f = 0 counts for the positive (lower-index) class
        let winner = if f >= 0.0 { p.positive } else { p.negative };
        votes[winner] += 1;
        strength[winner] += f.abs();
    }
    let mut best = 0;
    for c in 1..k {
        if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear_params(c: f64) -> SvmParams {
        SvmParams {
            c,
            kernel: KernelChoice::Linear,
            tol: 1e-8,
            ..Default::default()
        }
    }

    #[test]
    fn two_point_max_margin() {
        let m = svm_train(&[vec![-1.0], vec![1.0]], &[0, 1], 2, &linear_params(1e6)).unwrap();
        let p = &m.pairs[0];
        assert!(p.b.abs() <= 1e-6);
        let d = m
            .decision_distances(&[0.0], DistanceKind::Functional)
            .unwrap();
        assert!(d[0].abs() <= 1e-6);
        assert!((svm_decision_distances(&m, &[-1.0]).unwrap()[0] - 1.0).abs() < 1e-6);
        assert!((svm_decision_distances(&m, &[1.0]).unwrap()[0] + 1.0).abs() < 1e-6);
        // unit geometric margin as well: ‖w‖ = 1 in standardized units
        assert!(
            (m.decision_distances(&[-1.0], DistanceKind::Geometric)
                .unwrap()[0]
                - 1.0)
                .abs()
                < 1e-6
        );
        assert_eq!(m.predict(&[-0.3]).unwrap(), 0);
        assert_eq!(m.predict(&[0.3]).unwrap(), 1);
    }

    #[test]
    fn xor_with_rbf() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = [0, 0, 1, 1];
        let params = SvmParams {
            c: 10.0,
            kernel: KernelChoice::Rbf { gamma: Some(1.0) },
            ..Default::default()
        };
        let m = svm_train(&x, &y, 2, &params).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), yi);
        }
    }

    #[test]
    fn kkt_conditions_hold() {
        let mut rng = crate::seed::rng(44);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let y: Vec<usize> = x
            .iter()
            .map(|p| {
                if p[0] + 0.5 * p[1] > 0.3 {
                    0
                } else if p[1] > 0.0 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let params = SvmParams::default();
        let m = svm_train(&x, &y, 3, &params).unwrap();
        assert_eq!(m.pairs.len(), 3);
        for p in &m.pairs {
            assert!(p
                .coef
                .iter()
                .map(|c| c.abs())
                .all(|a| a > 0.0 && a <= params.c));
            assert!(p.coef.iter().sum::<f64>().abs() < 1e-8);
            for (sv, c) in p.support_vectors.iter().zip(&p.coef) {
                if c.abs() < params.c {
                    let f = p.decision(&m.kernel, sv);
                    assert!((f * c.signum() - 1.0).abs() <= 10.0 * params.tol, "{f}");
                }
            }
        }
    }

    #[test]
    fn vote_tie_breaks() {
        let mk = |positive, negative| BinarySvm {
            positive,
            negative,
            support_vectors: vec![],
            coef: vec![],
            b: 0.0,
            w_norm: 0.0,
            iterations: 0,
            dual_objective: 0.0,
        };
        let pairs = vec![mk(0, 1), mk(0, 2), mk(1, 2)];
        // 0 beats 1, 2 beats 0, 1 beats 2: one vote each
        assert_eq!(vote(3, &pairs, &[1.0, -1.0, 1.0]), 0);
        assert_eq!(vote(3, &pairs, &[1.0, -1.0, 2.0]), 1);
        assert_eq!(vote(3, &pairs, &[0.5, -3.0, 0.5]), 2);
    }

    #[test]
    fn input_validation() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(svm_train(&x, &[0, 0], 2, &SvmParams::default()).is_err());
        assert!(svm_train(&x, &[0], 2, &SvmParams::default()).is_err());
        assert!(svm_train(
            &[vec![0.0], vec![f64::NAN]],
            &[0, 1],
            2,
            &SvmParams::default()
        )
        .is_err());
        let m = svm_train(&x, &[0, 1], 2, &SvmParams::default()).unwrap();
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn k6_distance_length() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<usize> = (0..12).map(|i| i / 2).collect();
        let m = svm_train(&x, &y, 6, &SvmParams::default()).unwrap();
        assert_eq!(svm_decision_distances(&m, &[1.0, 2.0]).unwrap().len(), 15);
    }
}
