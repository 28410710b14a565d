use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Subspace;
use crate::error::{arg_err, num_err, Result};
use crate::stream::RandomStream;

/// The standard complex structure on ℝ^{2n} = ℝⁿ_x ⊕ ℝⁿ_y, J(x,y) = (−y,x).
/// A complex vector z ∈ ℂⁿ is realified as (Re z, Im z), so J is
/// multiplication by i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexStructure {
    pub n: usize,
}

impl ComplexStructure {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = -1.0;
            j[(n + i, i)] = 1.0;
        }
        j
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(2 * n, |r, _| if r < n { -v[n + r] } else { v[r - n] })
    }

    pub fn realify(&self, z: &[Complex64]) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(2 * n, |r, _| if r < n { z[r].re } else { z[r - n].im })
    }

    /// J-image of a subspace.
    pub fn image(&self, e: &Subspace) -> Result<Subspace> {
        e.transform(&self.matrix())
    }

    /// Realification of the complex span of orthonormal vectors u_1..u_l,
    /// with frame ordered (u_1..u_l, Ju_1..Ju_l).
    pub fn complex_span(&self, vectors: &[Vec<Complex64>]) -> Result<Subspace> {
        let q = complex_gram_schmidt(vectors)?;
        let mut cols: Vec<DVector<f64>> = q.iter().map(|u| self.realify(u)).collect();
        let js: Vec<DVector<f64>> = cols.iter().map(|c| self.apply(c)).collect();
        cols.extend(js);
        Subspace::from_frame(if cols.is_empty() {
            DMatrix::zeros(2 * self.n, 0)
        } else {
            DMatrix::from_columns(&cols)
        })
    }

    /// Whether J maps `e` into itself, measured as the largest deviation.
    pub fn invariance_defect(&self, e: &Subspace) -> f64 {
        let je = self.matrix() * e.frame();
        let residual = &je - e.projector() * &je;
        residual.amax()
    }

    /// Largest |⟨J v_i, v_j⟩| over frame vectors; zero for isotropic subspaces.
    pub fn isotropy_defect(&self, e: &Subspace) -> f64 {
        let je = self.matrix() * e.frame();
        e.frame().tr_mul(&je).amax()
    }
}

fn hermitian_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn complex_gram_schmidt(vectors: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let norm0 = hermitian_dot(v, v).re.sqrt();
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = hermitian_dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let norm = hermitian_dot(&w, &w).re.sqrt();
        if !(norm > 1e-9 * norm0) {
            return num_err("complex vectors are numerically dependent");
        }
        out.push(w.into_iter().map(|x| x / norm).collect());
    }
    Ok(out)
}

fn complex_gaussian(n: usize, rng: &mut RandomStream) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Haar-unitary n×n matrix as a list of orthonormal columns.
pub(crate) fn sample_unitary_columns(n: usize, rng: &mut RandomStream) -> Result<Vec<Vec<Complex64>>> {
    for _ in 0..8 {
        let g: Vec<Vec<Complex64>> = (0..n).map(|_| complex_gaussian(n, rng)).collect();
        if let Ok(q) = complex_gram_schmidt(&g) {
            return Ok(q);
        }
    }
    num_err("Gaussian unitary sample repeatedly rank deficient")
}

/// Haar sample from the complex Grassmannian of complex `l`-planes in ℂⁿ,
/// returned as a J-invariant real 2l-plane.
pub fn sample_complex_subspace(l: usize, j: &ComplexStructure, rng: &mut RandomStream) -> Result<Subspace> {
    if l > j.n {
        return arg_err(format!("complex {l}-planes do not exist in ℂ^{}", j.n));
    }
    for _ in 0..8 {
        let g: Vec<Vec<Complex64>> = (0..l).map(|_| complex_gaussian(j.n, rng)).collect();
        if let Ok(e) = j.complex_span(&g) {
            return Ok(e);
        }
    }
    num_err("complex Gaussian frame repeatedly rank deficient")
}

/// Haar sample U·ℝⁿ_x from the Lagrangian Grassmannian, U Haar-unitary.
pub fn sample_lagrangian(j: &ComplexStructure, rng: &mut RandomStream) -> Result<Subspace> {
    let u = sample_unitary_columns(j.n, rng)?;
    let cols: Vec<DVector<f64>> = u.iter().map(|c| j.realify(c)).collect();
    Subspace::from_frame(DMatrix::from_columns(&cols))
}

/// Real orthogonal 2n×2n matrix of a Haar-random unitary map.
pub fn sample_unitary_real(j: &ComplexStructure, rng: &mut RandomStream) -> Result<DMatrix<f64>> {
    let u = sample_unitary_columns(j.n, rng)?;
    let n = j.n;
    // column e_k ↦ u_k, i e_k ↦ i u_k
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, col) in u.iter().enumerate() {
        let re = j.realify(col);
        let im = j.apply(&re);
        m.set_column(k, &re);
        m.set_column(n + k, &im);
    }
    Ok(m)
}
