//! Euclidean distance to a polytope by Wolfe's minimum-norm-point method on
//! the vertex set.

use nalgebra::{DMatrix, DVector};

use super::Polytope;
use crate::error::{num_err, Result};

const MAX_ITER: usize = 1000;

/// Affine minimum-norm combination of the columns `s` of `pts`: minimize
/// |Σ μᵢ pᵢ|² subject to Σ μᵢ = 1.
fn affine_min_norm(pts: &[DVector<f64>], s: &[usize]) -> Option<Vec<f64>> {
    let k = s.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = pts[s[i]].dot(&pts[s[j]]);
        }
        a[(i, k)] = 1.0;
        a[(k, i)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = a.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(sol.iter().take(k).copied().collect())
}

fn combine(pts: &[DVector<f64>], s: &[usize], w: &[f64]) -> DVector<f64> {
    let mut y = DVector::zeros(pts[0].len());
    for (i, &j) in s.iter().enumerate() {
        y.axpy(w[i], &pts[j], 1.0);
    }
    y
}

/// Nearest point of conv(vertices) to `x` and its distance.
pub fn nearest_point(p: &Polytope, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if p.is_full_dim() && p.contains(x, 0.0) {
        return Ok((x.clone(), 0.0));
    }
    let pts: Vec<DVector<f64>> = p.vertices().iter().map(|v| v - x).collect();
    let scale2 = pts.iter().map(|v| v.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale2;
    let first = (0..pts.len())
        .min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared()))
        .unwrap();
    let mut s = vec![first];
    let mut lambda = vec![1.0];
    let mut y = pts[first].clone();
    for _ in 0..MAX_ITER {
        let (j, min_dot) = (0..pts.len())
            .map(|j| (j, y.dot(&pts[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if y.norm_squared() - min_dot <= tol || s.contains(&j) {
            let d = y.norm();
            return Ok((y + x, d));
        }
        s.push(j);
        lambda.push(0.0);
        loop {
            let Some(mu) = affine_min_norm(&pts, &s) else {
                // Dependent support set: keep the last feasible point.
                s.pop();
                lambda.pop();
                let y = combine(&pts, &s, &lambda);
                let d = y.norm();
                return Ok((y + x, d));
            };
            if mu.iter().all(|&m| m > 1e-14) {
                lambda = mu;
                y = combine(&pts, &s, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for i in 0..s.len() {
                if mu[i] <= 1e-14 {
                    let denom = lambda[i] - mu[i];
                    if denom > 0.0 {
                        theta = theta.min(lambda[i] / denom);
                    }
                }
            }
            for i in 0..s.len() {
                lambda[i] += theta * (mu[i] - lambda[i]);
            }
            let keep: Vec<usize> = (0..s.len()).filter(|&i| lambda[i] > 1e-14).collect();
            s = keep.iter().map(|&i| s[i]).collect();
            lambda = keep.iter().map(|&i| lambda[i]).collect();
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
    }
    num_err(format!(
        "minimum-norm iteration did not converge after {MAX_ITER} steps (support size {})",
        s.len()
    ))
}

pub fn distance(p: &Polytope, x: &DVector<f64>) -> Result<f64> {
    Ok(nearest_point(p, x)?.1)
}
