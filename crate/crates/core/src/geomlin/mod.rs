//! Frames, the fixed complex structure, angle cosines and Haar sampling on
//! real, complex and Lagrangian Grassmannians.

mod complex;
mod gr24;
mod strichartz;

pub use complex::{sample_complex_subspace, sample_lagrangian, sample_unitary_real, ComplexStructure};
pub use gr24::{gr24_plane, quaternion_to_r4, Quaternion};
pub use strichartz::strichartz_hwv;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bodies::Body;
use crate::error::{arg_err, num_err, Result};
use crate::stream::RandomStream;

/// Orthonormality tolerance for frames.
pub const FRAME_TOL: f64 = 1e-10;

/// A linear subspace of ℝ^d carried by an orthonormal frame (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    frame: DMatrix<f64>,
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns whose
/// residual falls below `drop_tol` (relative to their input norm) are skipped.
fn gram_schmidt(cols: &[DVector<f64>], drop_tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let norm0 = c.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &out {
                let dot = q.dot(&v);
                v.axpy(-dot, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > drop_tol * norm0 {
            out.push(v / norm);
        }
    }
    out
}

/// Orthonormal basis of the column space of a symmetric projector, picking
/// at each step the column with the largest remaining residual. The result
/// depends only on the projector, so equal subspaces get equal frames.
fn frame_from_projector(p: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let d = p.nrows();
    let mut residual: Vec<DVector<f64>> = (0..d).map(|i| p.column(i).into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        // Near-ties go to the lowest index so rounding noise cannot flip the choice.
        let norms: Vec<f64> = residual.iter().map(|r| r.norm_squared()).collect();
        let top = norms.iter().copied().fold(0.0, f64::max);
        let best = norms.iter().position(|&n| n >= top * (1.0 - 1e-9)).unwrap_or(0);
        let mut v = residual[best].clone();
        for q in &basis {
            let dot = q.dot(&v);
            v.axpy(-dot, q, 1.0);
        }
        let q = v.normalize();
        for r in residual.iter_mut() {
            let dot = q.dot(r);
            r.axpy(-dot, &q, 1.0);
        }
        basis.push(q);
    }
    if basis.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

impl Subspace {
    /// Span of the given vectors, which must be linearly independent.
    pub fn from_vectors(ambient_dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return arg_err("vector length differs from ambient dimension");
        }
        let q = gram_schmidt(vectors, 1e-9);
        if q.len() != vectors.len() {
            return num_err("spanning vectors are numerically dependent");
        }
        Ok(Self::from_orthonormal(ambient_dim, q))
    }

    /// Span of the given vectors, discarding dependent ones.
    pub fn span(ambient_dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return arg_err("vector length differs from ambient dimension");
        }
        Ok(Self::from_orthonormal(ambient_dim, gram_schmidt(vectors, 1e-9)))
    }

    fn from_orthonormal(ambient_dim: usize, q: Vec<DVector<f64>>) -> Self {
        let frame = if q.is_empty() {
            DMatrix::zeros(ambient_dim, 0)
        } else {
            DMatrix::from_columns(&q)
        };
        Self { ambient_dim, frame }
    }

    /// Wraps a frame, re-orthonormalizing if it drifted past [`FRAME_TOL`].
    pub fn from_frame(frame: DMatrix<f64>) -> Result<Self> {
        let d = frame.nrows();
        let gram = frame.transpose() * &frame;
        let k = frame.ncols();
        if (gram - DMatrix::identity(k, k)).amax() <= FRAME_TOL {
            return Ok(Self { ambient_dim: d, frame });
        }
        let cols: Vec<DVector<f64>> = frame.column_iter().map(|c| c.into_owned()).collect();
        Self::from_vectors(d, &cols)
    }

    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let mut frame = DMatrix::zeros(ambient_dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            if a >= ambient_dim {
                return arg_err(format!("axis {a} outside ℝ^{ambient_dim}"));
            }
            frame[(a, c)] = 1.0;
        }
        Self::from_frame(frame)
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            frame: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            frame: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    /// Orthonormal basis vectors as columns, `ambient_dim × dim`.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }

    /// Same subspace with a frame that is a function of the subspace alone.
    pub fn canonical(&self) -> Self {
        Self {
            ambient_dim: self.ambient_dim,
            frame: frame_from_projector(&self.projector(), self.dim()),
        }
    }

    /// Orthogonal complement, with a canonical frame.
    pub fn complement(&self) -> Self {
        let d = self.ambient_dim;
        let p = DMatrix::identity(d, d) - self.projector();
        Self {
            ambient_dim: d,
            frame: frame_from_projector(&p, d - self.dim()),
        }
    }

    /// Coordinates of `x` in the frame.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.frame.tr_mul(x)
    }

    /// Point of ℝ^d with the given frame coordinates.
    pub fn embed(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.frame * c
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.embed(&self.coords(x))
    }

    /// Image under a linear map of ℝ^d (assumed injective on the subspace).
    pub fn transform(&self, m: &DMatrix<f64>) -> Result<Self> {
        let image = m * &self.frame;
        let cols: Vec<DVector<f64>> = image.column_iter().map(|c| c.into_owned()).collect();
        Self::from_vectors(self.ambient_dim, &cols)
    }

    /// Largest distance of a unit vector of `self` from `other`.
    pub fn max_deviation_from(&self, other: &Subspace) -> f64 {
        let p = other.projector();
        let residual = &self.frame - &p * &self.frame;
        residual
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Principal angles (radians, ascending) between subspaces of equal dimension.
    pub fn principal_angles(&self, other: &Subspace) -> Result<Vec<f64>> {
        if self.ambient_dim != other.ambient_dim || self.dim() != other.dim() {
            return arg_err("principal angles need subspaces of equal dimension");
        }
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        let m = self.frame.tr_mul(&other.frame);
        let mut s: Vec<f64> = m.singular_values().iter().map(|v| v.clamp(0.0, 1.0).acos()).collect();
        s.sort_by(|a, b| a.total_cmp(b));
        Ok(s)
    }
}

/// Gaussian-orthonormalization sample from the probability Haar measure on
/// the real Grassmannian of `k`-planes in ℝ^d.
pub fn sample_subspace(k: usize, d: usize, rng: &mut RandomStream) -> Result<Subspace> {
    if k > d {
        return arg_err(format!("cannot sample a {k}-plane in ℝ^{d}"));
    }
    for _ in 0..8 {
        let cols: Vec<DVector<f64>> = (0..k)
            .map(|_| DVector::from_fn(d, |_, _| rng.sample(StandardNormal)))
            .collect();
        let q = gram_schmidt(&cols, 1e-9);
        if q.len() == k {
            return Ok(Subspace::from_orthonormal(d, q));
        }
    }
    num_err("Gaussian frame repeatedly rank deficient")
}

/// |cos(E,F)|: the factor by which orthogonal projection onto F scales
/// dim(E)-volumes in E. When dim E > dim F the complements are compared.
pub fn cosine_angle(e: &Subspace, f: &Subspace) -> Result<f64> {
    if e.ambient_dim != f.ambient_dim {
        return arg_err("cosine of subspaces in different ambient spaces");
    }
    if e.dim() > f.dim() {
        return cosine_angle(&e.complement(), &f.complement());
    }
    if e.dim() == 0 {
        return Ok(1.0);
    }
    let m = e.frame.tr_mul(&f.frame);
    let det = (&m * m.transpose()).determinant();
    Ok(det.max(0.0).sqrt().min(1.0))
}

/// Which Grassmannian a direction is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrassmannianKind {
    /// Real `dim`-planes in ℝ^`ambient`.
    Real { dim: usize, ambient: usize },
    /// Complex `dim`-planes in ℂ^`n`, realified in ℝ^{2n}.
    Complex { dim: usize, n: usize },
    /// Lagrangian planes in ℂ^`n`.
    Lagrangian { n: usize },
}

impl GrassmannianKind {
    pub fn sample(&self, rng: &mut RandomStream) -> Result<Subspace> {
        match *self {
            GrassmannianKind::Real { dim, ambient } => sample_subspace(dim, ambient, rng),
            GrassmannianKind::Complex { dim, n } => {
                sample_complex_subspace(dim, &ComplexStructure::new(n), rng)
            }
            GrassmannianKind::Lagrangian { n } => sample_lagrangian(&ComplexStructure::new(n), rng),
        }
    }

    pub fn ambient(&self) -> usize {
        match *self {
            GrassmannianKind::Real { ambient, .. } => ambient,
            GrassmannianKind::Complex { n, .. } | GrassmannianKind::Lagrangian { n } => 2 * n,
        }
    }

    /// Real dimension of the sampled planes.
    pub fn real_dim(&self) -> usize {
        match *self {
            GrassmannianKind::Real { dim, .. } => dim,
            GrassmannianKind::Complex { dim, .. } => 2 * dim,
            GrassmannianKind::Lagrangian { n } => n,
        }
    }
}

/// An affine flat `offset + direction` with `offset ⟂ direction`.
#[derive(Clone, Debug)]
pub struct AffineFlat {
    pub direction: Subspace,
    pub offset: DVector<f64>,
    /// Importance weight attached by the sampler (bounding-box volume).
    pub weight: f64,
}

impl AffineFlat {
    pub fn new(direction: Subspace, point: &DVector<f64>) -> Result<Self> {
        if point.len() != direction.ambient_dim() {
            return arg_err("flat offset has the wrong length");
        }
        let offset = point - direction.project(point);
        Ok(Self {
            direction,
            offset,
            weight: 1.0,
        })
    }

    /// Ambient point with the given coordinates inside the flat.
    pub fn point(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.offset + self.direction.embed(c)
    }

    /// Coordinates of the orthogonal projection of `x` onto the flat.
    pub fn local_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.direction.coords(&(x - &self.offset))
    }
}

/// Samples a flat `x + F^⟂` with F from `normal_kind` and x uniform in the
/// axis-aligned bounding box (in F's frame) of the projection of `body` onto F.
/// The box volume is stored as the flat's weight, so the mean of
/// `weight · g(flat)` estimates ∫_F dF ∫_{x∈F} g(x + F^⟂) dx whenever g
/// vanishes on flats missing the body.
pub fn sample_affine_flat(
    normal_kind: &GrassmannianKind,
    body: &Body,
    rng: &mut RandomStream,
) -> Result<AffineFlat> {
    if body.ambient_dim() != normal_kind.ambient() {
        return arg_err("flat sampler and body live in different spaces");
    }
    if body.is_empty() {
        return arg_err("cannot sample flats through an empty body");
    }
    let f = normal_kind.sample(rng)?;
    let mut weight = 1.0;
    let mut x = DVector::zeros(f.dim());
    for i in 0..f.dim() {
        let u = f.frame().column(i).into_owned();
        let hi = body.support(&u);
        let lo = -body.support(&(-&u));
        let side = (hi - lo).max(0.0);
        weight *= side;
        x[i] = lo + side * rng.random::<f64>();
    }
    let offset = f.embed(&x);
    Ok(AffineFlat {
        direction: f.complement(),
        offset,
        weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn cosine_of_tilted_planes() {
        let e = Subspace::coordinate(4, &[0, 1]).unwrap();
        let s = 0.5f64.sqrt();
        let f = Subspace::from_vectors(4, &[v(&[1.0, 0.0, 0.0, 0.0]), v(&[0.0, s, s, 0.0])]).unwrap();
        // project the unit square of E onto F and take the area directly
        let a = f.coords(&v(&[1.0, 0.0, 0.0, 0.0]));
        let b = f.coords(&v(&[0.0, 1.0, 0.0, 0.0]));
        let area = (a[0] * b[1] - a[1] * b[0]).abs();
        assert!((cosine_angle(&e, &f).unwrap() - area).abs() < 1e-12);
        assert!((area - s).abs() < 1e-12);
    }

    #[test]
    fn cosine_trivial_cases() {
        let e1 = Subspace::coordinate(2, &[0]).unwrap();
        let e2 = Subspace::coordinate(2, &[1]).unwrap();
        assert_eq!(cosine_angle(&e1, &e1).unwrap(), 1.0);
        assert!(cosine_angle(&e1, &e2).unwrap().abs() < 1e-15);
        assert!(cosine_angle(&e1, &Subspace::coordinate(3, &[0]).unwrap()).is_err());
    }

    #[test]
    fn complement_twice_is_identity_on_frames() {
        let mut rng = RandomStream::new(1, 0);
        for k in 0..=5 {
            let e = sample_subspace(k, 5, &mut rng).unwrap().canonical();
            let back = e.complement().complement();
            assert!((back.frame() - e.frame()).amax() < 1e-12);
        }
    }

    #[test]
    fn full_plane_sample() {
        let mut rng = RandomStream::new(2, 0);
        let e = sample_subspace(3, 3, &mut rng).unwrap();
        assert!((e.projector() - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!(sample_subspace(4, 3, &mut rng).is_err());
    }

    #[test]
    fn affine_flat_weight_is_box_volume() {
        let mut rng = RandomStream::new(3, 0);
        let ball = Body::ball(v(&[0.0, 0.0, 0.0]), 2.0).unwrap();
        let kind = GrassmannianKind::Real { dim: 2, ambient: 3 };
        for _ in 0..20 {
            let flat = sample_affine_flat(&kind, &ball, &mut rng).unwrap();
            assert!((flat.weight - 16.0).abs() < 1e-12);
            assert!(flat.direction.coords(&flat.offset).amax() < 1e-10);
            assert!(flat.offset.norm() <= 2.0 * 2f64.sqrt() + 1e-12);
        }
    }
}
