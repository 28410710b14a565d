//! Linear least squares with known noise: weighted, generalized (full
//! covariance) and errors-in-variables via effective variances.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{arg_err, num_err, Result};

#[derive(Clone, Debug, Serialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Row-major covariance of the coefficients.
    pub covariance: Vec<f64>,
    /// ‖y − Xβ‖ / ‖y‖.
    pub relative_residual: f64,
    /// Condition number of the whitened, column-equilibrated design.
    pub condition: f64,
    /// Whitened residual sum of squares.
    pub chi2: f64,
    pub dof: usize,
}

impl LinearFit {
    pub fn sigma(&self, i: usize) -> f64 {
        let p = self.coefficients.len();
        self.covariance[i * p + i].max(0.0).sqrt()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let p = self.coefficients.len();
        DMatrix::from_row_slice(p, p, &self.covariance)
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    /// Standard deviation of a prediction due to coefficient uncertainty.
    pub fn predict_sigma(&self, row: &[f64]) -> f64 {
        let r = DVector::from_column_slice(row);
        (r.transpose() * self.covariance_matrix() * &r)[(0, 0)].max(0.0).sqrt()
    }
}

/// Least squares on an already whitened system.
fn solve_whitened(xw: &DMatrix<f64>, yw: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearFit> {
    let (n, p) = xw.shape();
    if n < p {
        return arg_err(format!("{n} observations cannot determine {p} unknowns"));
    }
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let s = xw.column(j).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut xs = xw.clone();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = xs.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || smin <= smax * 1e-14 {
        return num_err(format!("design matrix is rank deficient (condition {condition:.3e})"));
    }
    let u = svd.u.as_ref().expect("requested");
    let v_t = svd.v_t.as_ref().expect("requested");
    let uty = u.tr_mul(yw);
    let mut beta_s = DVector::zeros(p);
    let mut cov_s = DMatrix::zeros(p, p);
    for i in 0..p {
        let vi = v_t.row(i).transpose();
        beta_s += &vi * (uty[i] / sv[i]);
        cov_s += &vi * vi.transpose() / (sv[i] * sv[i]);
    }
    let beta = DVector::from_fn(p, |j, _| beta_s[j] / scales[j]);
    let cov = DMatrix::from_fn(p, p, |a, b| cov_s[(a, b)] / (scales[a] * scales[b]));
    let resid_w = yw - xw * &beta;
    let resid = y - x * &beta;
    let ynorm = y.norm();
    Ok(LinearFit {
        coefficients: beta.iter().copied().collect(),
        covariance: cov.transpose().iter().copied().collect(),
        relative_residual: if ynorm > 0.0 { resid.norm() / ynorm } else { resid.norm() },
        condition,
        chi2: resid_w.norm_squared(),
        dof: n - p,
    })
}

/// Minimizes Σ ((yᵢ − xᵢ·β)/σᵢ)². Zero σᵢ are floored relative to the data.
pub fn weighted_least_squares(x: &DMatrix<f64>, y: &DVector<f64>, sigma: &DVector<f64>) -> Result<LinearFit> {
    if x.nrows() != y.len() || y.len() != sigma.len() {
        return arg_err("least-squares inputs have mismatched lengths");
    }
    let floor = 1e-12 * y.amax().max(1e-300);
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / s.max(floor)).collect();
    let mut xw = x.clone();
    for (i, wi) in w.iter().enumerate() {
        xw.row_mut(i).scale_mut(*wi);
    }
    let yw = DVector::from_fn(y.len(), |i, _| y[i] * w[i]);
    solve_whitened(&xw, &yw, x, y)
}

/// Minimizes (y − Xβ)ᵀ C⁻¹ (y − Xβ) for a full covariance C of y.
pub fn generalized_least_squares(x: &DMatrix<f64>, y: &DVector<f64>, cov: &DMatrix<f64>) -> Result<LinearFit> {
    let n = y.len();
    if x.nrows() != n || cov.shape() != (n, n) {
        return arg_err("least-squares inputs have mismatched shapes");
    }
    let jitter = 1e-12 * (0..n).map(|i| cov[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut c = cov.clone();
    for i in 0..n {
        c[(i, i)] += jitter;
    }
    let Some(chol) = c.cholesky() else {
        return num_err("observation covariance is not positive definite");
    };
    let l = chol.l();
    let xw = l.solve_lower_triangular(x).ok_or_else(|| crate::error::Error::Numerical("whitening failed".into()))?;
    let yw = l.solve_lower_triangular(y).ok_or_else(|| crate::error::Error::Numerical("whitening failed".into()))?;
    solve_whitened(&xw, &yw, x, y)
}

/// Errors-in-variables fit: the design entries carry independent noise
/// `sx`, folded into per-row effective variances σᵢ² + Σⱼ βⱼ² sxᵢⱼ² and
/// iterated to a fixed point.
pub fn effective_variance_fit(
    x: &DMatrix<f64>,
    sx: &DMatrix<f64>,
    y: &DVector<f64>,
    sy: &DVector<f64>,
    iterations: usize,
) -> Result<LinearFit> {
    let mut fit = weighted_least_squares(x, y, sy)?;
    for _ in 0..iterations {
        let sigma = DVector::from_fn(y.len(), |i, _| {
            let extra: f64 = (0..x.ncols())
                .map(|j| (fit.coefficients[j] * sx[(i, j)]).powi(2))
                .sum();
            (sy[i] * sy[i] + extra).sqrt()
        });
        fit = weighted_least_squares(x, y, &sigma)?;
    }
    Ok(fit)
}
