//! Convex bodies: polytopes, balls and outer parallel bodies K + εD.

mod angles;
mod distance;
mod hull;
mod polytope;
mod section;
pub mod shapes;

pub use angles::{external_angle, external_angle_exact, random_unit};
pub use distance::{distance as polytope_distance, nearest_point};
pub use polytope::{Face, Halfspace, Polytope, DEDUP_TOL, FACET_TOL, MAX_AMBIENT_DIM};

pub(crate) use angles::{exact_angle, sampled_angle};
pub use hull::brute_force_facets;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::geomlin::{AffineFlat, Subspace};

/// Cap on pairwise vertex sums fed to the hull in Minkowski sums.
pub const MINKOWSKI_CAP: usize = 10_000;

#[derive(Clone, Debug)]
pub enum Body {
    /// The empty set in ℝ^ambient.
    Empty { ambient: usize },
    Polytope(Polytope),
    Ball { center: DVector<f64>, radius: f64 },
    /// K + εD for a polytope K and the unit ball D.
    Parallel { polytope: Polytope, eps: f64 },
}

impl Body {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return arg_err(format!("ball radius must be positive, got {radius}"));
        }
        Ok(Body::Ball { center, radius })
    }

    pub fn unit_ball(d: usize) -> Self {
        Body::Ball { center: DVector::zeros(d), radius: 1.0 }
    }

    pub fn parallel(polytope: Polytope, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return arg_err(format!("parallel distance must be non-negative, got {eps}"));
        }
        Ok(Body::Parallel { polytope, eps })
    }

    pub fn from_points(points: &[DVector<f64>]) -> Result<Self> {
        Ok(Body::Polytope(Polytope::from_points(points)?))
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Body::Empty { ambient } => *ambient,
            Body::Polytope(p) | Body::Parallel { polytope: p, .. } => p.ambient_dim(),
            Body::Ball { center, .. } => center.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Body::Empty { .. })
    }

    /// Dimension of the affine hull (−1 is not representable; empty gives 0).
    pub fn dim(&self) -> usize {
        match self {
            Body::Empty { .. } => 0,
            Body::Polytope(p) => p.dim(),
            Body::Ball { center, .. } => center.len(),
            Body::Parallel { polytope, eps } => {
                if *eps > 0.0 {
                    polytope.ambient_dim()
                } else {
                    polytope.dim()
                }
            }
        }
    }

    /// Support function h_K(u).
    pub fn support(&self, u: &DVector<f64>) -> f64 {
        match self {
            Body::Empty { .. } => f64::NEG_INFINITY,
            Body::Polytope(p) => p.support(u),
            Body::Ball { center, radius } => center.dot(u) + radius * u.norm(),
            Body::Parallel { polytope, eps } => polytope.support(u) + eps * u.norm(),
        }
    }

    /// Orthogonal projection onto `e`, expressed in `e`'s frame coordinates.
    pub fn project(&self, e: &Subspace) -> Result<Body> {
        if e.ambient_dim() != self.ambient_dim() {
            return arg_err("projection onto a subspace of a different space");
        }
        match self {
            Body::Empty { .. } => Ok(Body::Empty { ambient: e.dim() }),
            Body::Polytope(p) => Ok(Body::Polytope(p.project(e)?)),
            Body::Ball { center, radius } => Ok(Body::Ball { center: e.coords(center), radius: *radius }),
            Body::Parallel { polytope, eps } => Ok(Body::Parallel { polytope: polytope.project(e)?, eps: *eps }),
        }
    }

    /// Intersection with an affine flat, in the flat's coordinates.
    pub fn section(&self, flat: &AffineFlat) -> Result<Body> {
        if flat.direction.ambient_dim() != self.ambient_dim() {
            return arg_err("flat and body live in different spaces");
        }
        let r = flat.direction.dim();
        match self {
            Body::Empty { .. } => Ok(Body::Empty { ambient: r }),
            Body::Polytope(p) => section::section_polytope(p, flat),
            Body::Ball { center, radius } => {
                let rel = center - &flat.offset;
                let local = flat.direction.coords(&rel);
                let dist2 = (rel.norm_squared() - local.norm_squared()).max(0.0);
                let rho2 = radius * radius - dist2;
                if rho2 <= 0.0 {
                    Ok(Body::Empty { ambient: r })
                } else if r == 0 {
                    Ok(Body::Polytope(Polytope::from_points(&[local])?))
                } else {
                    Ok(Body::Ball { center: local, radius: rho2.sqrt() })
                }
            }
            Body::Parallel { .. } => arg_err("sections of parallel bodies are not supported"),
        }
    }

    /// Euclidean distance from `x` to the body (0 inside).
    pub fn distance(&self, x: &DVector<f64>) -> Result<f64> {
        match self {
            Body::Empty { .. } => Ok(f64::INFINITY),
            Body::Polytope(p) => distance::distance(p, x),
            Body::Ball { center, radius } => Ok(((x - center).norm() - radius).max(0.0)),
            Body::Parallel { polytope, eps } => Ok((distance::distance(polytope, x)? - eps).max(0.0)),
        }
    }

    /// Image under x ↦ m·x + t, with m orthogonal for balls and parallel bodies.
    pub fn rigid_image(&self, m: &DMatrix<f64>, t: &DVector<f64>) -> Result<Body> {
        match self {
            Body::Empty { ambient } => Ok(Body::Empty { ambient: *ambient }),
            Body::Polytope(p) => Ok(Body::Polytope(p.affine_image(m, t)?)),
            Body::Ball { center, radius } => Ok(Body::Ball { center: m * center + t, radius: *radius }),
            Body::Parallel { polytope, eps } => Ok(Body::Parallel { polytope: polytope.affine_image(m, t)?, eps: *eps }),
        }
    }

    pub fn translate(&self, t: &DVector<f64>) -> Result<Body> {
        let d = self.ambient_dim();
        self.rigid_image(&DMatrix::identity(d, d), t)
    }

    /// λK for λ ≥ 0.
    pub fn dilate(&self, lambda: f64) -> Result<Body> {
        if !(lambda >= 0.0) {
            return arg_err("dilation factor must be non-negative");
        }
        match self {
            Body::Empty { ambient } => Ok(Body::Empty { ambient: *ambient }),
            Body::Polytope(p) => Ok(Body::Polytope(p.scale_by(lambda)?)),
            Body::Ball { center, radius } => {
                if lambda == 0.0 {
                    Ok(Body::Polytope(Polytope::from_points(&[center * 0.0])?))
                } else {
                    Body::ball(center * lambda, radius * lambda)
                }
            }
            Body::Parallel { polytope, eps } => Body::parallel(polytope.scale_by(lambda)?, eps * lambda),
        }
    }

    /// K + εD.
    pub fn add_ball(&self, eps: f64) -> Result<Body> {
        match self {
            Body::Empty { ambient } => Ok(Body::Empty { ambient: *ambient }),
            Body::Polytope(p) => Body::parallel(p.clone(), eps),
            Body::Ball { center, radius } => Body::ball(center.clone(), radius + eps),
            Body::Parallel { polytope, eps: e } => Body::parallel(polytope.clone(), e + eps),
        }
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let d = self.ambient_dim();
        let mut lo = DVector::zeros(d);
        let mut hi = DVector::zeros(d);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            hi[i] = self.support(&e);
            lo[i] = -self.support(&(-e));
        }
        (lo, hi)
    }

    pub fn from_json(text: &str) -> Result<Body> {
        let spec: BodySpec =
            serde_json::from_str(text).map_err(|e| Error::Argument(format!("body JSON: {e}")))?;
        spec.build()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(BodySpec::from_body(self)).expect("body serializes")
    }
}

/// Serialized form of [`Body`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodySpec {
    Polytope { vertices: Vec<Vec<f64>> },
    Ball { center: Vec<f64>, radius: f64 },
    Parallel { polytope: Box<BodySpec>, eps: f64 },
    Empty { ambient_dim: usize },
}

impl BodySpec {
    pub fn build(&self) -> Result<Body> {
        match self {
            BodySpec::Polytope { vertices } => {
                if vertices.is_empty() {
                    return arg_err("field `vertices`: empty vertex list");
                }
                let pts: Vec<DVector<f64>> = vertices.iter().map(|v| DVector::from_column_slice(v)).collect();
                Polytope::from_points(&pts)
                    .map(Body::Polytope)
                    .map_err(|e| Error::Argument(format!("field `vertices`: {e}")))
            }
            BodySpec::Ball { center, radius } => Body::ball(DVector::from_column_slice(center), *radius)
                .map_err(|e| Error::Argument(format!("field `radius`: {e}"))),
            BodySpec::Parallel { polytope, eps } => match polytope.build()? {
                Body::Polytope(p) => {
                    Body::parallel(p, *eps).map_err(|e| Error::Argument(format!("field `eps`: {e}")))
                }
                _ => arg_err("field `polytope`: parallel bodies need a polytope"),
            },
            BodySpec::Empty { ambient_dim } => Ok(Body::Empty { ambient: *ambient_dim }),
        }
    }

    pub fn from_body(body: &Body) -> Self {
        let verts = |p: &Polytope| p.vertices().iter().map(|v| v.iter().copied().collect()).collect();
        match body {
            Body::Empty { ambient } => BodySpec::Empty { ambient_dim: *ambient },
            Body::Polytope(p) => BodySpec::Polytope { vertices: verts(p) },
            Body::Ball { center, radius } => BodySpec::Ball { center: center.iter().copied().collect(), radius: *radius },
            Body::Parallel { polytope, eps } => BodySpec::Parallel {
                polytope: Box::new(BodySpec::Polytope { vertices: verts(polytope) }),
                eps: *eps,
            },
        }
    }
}

/// conv{p + q}: the Minkowski sum of two polytopes.
pub fn minkowski_sum_polytopes(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    if p.ambient_dim() != q.ambient_dim() {
        return arg_err("Minkowski sum of polytopes in different spaces");
    }
    let count = p.vertices().len() * q.vertices().len();
    if count > MINKOWSKI_CAP {
        return arg_err(format!(
            "Minkowski sum needs {count} vertex sums (cap {MINKOWSKI_CAP}); use coarser bodies"
        ));
    }
    let mut pts = Vec::with_capacity(count);
    for a in p.vertices() {
        for b in q.vertices() {
            pts.push(a + b);
        }
    }
    Polytope::from_points(&pts)
}

/// Pieces of a polytope cut by the hyperplane ⟨normal, x⟩ = offset:
/// (part with ⟨n,x⟩ ≤ b, part with ⟨n,x⟩ ≥ b, the cut itself). Absent
/// pieces are `None`.
pub fn split_polytope(
    p: &Polytope,
    normal: &DVector<f64>,
    offset: f64,
) -> Result<(Option<Polytope>, Option<Polytope>, Option<Polytope>)> {
    let tol = FACET_TOL * p.scale();
    let verts = p.vertices();
    let vals: Vec<f64> = verts.iter().map(|v| normal.dot(v) - offset).collect();
    let mut below: Vec<DVector<f64>> = Vec::new();
    let mut above: Vec<DVector<f64>> = Vec::new();
    let mut cut: Vec<DVector<f64>> = Vec::new();
    for (v, &s) in verts.iter().zip(&vals) {
        if s <= tol {
            below.push(v.clone());
        }
        if s >= -tol {
            above.push(v.clone());
        }
        if s.abs() <= tol {
            cut.push(v.clone());
        }
    }
    if p.dim() >= 1 {
        for e in p.faces(1)? {
            let (i, j) = (e.vertex_ids[0], e.vertex_ids[1]);
            if (vals[i] < -tol && vals[j] > tol) || (vals[i] > tol && vals[j] < -tol) {
                let t = vals[i] / (vals[i] - vals[j]);
                let x = &verts[i] + (&verts[j] - &verts[i]) * t;
                below.push(x.clone());
                above.push(x.clone());
                cut.push(x);
            }
        }
    }
    let build = |pts: Vec<DVector<f64>>| -> Result<Option<Polytope>> {
        if pts.is_empty() {
            Ok(None)
        } else {
            Ok(Some(Polytope::from_points(&pts)?))
        }
    };
    Ok((build(below)?, build(above)?, build(cut)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomlin::sample_subspace;
    use crate::stream::RandomStream;

    #[test]
    fn support_examples() {
        let sq = Body::Polytope(shapes::cube(2, 0.0, 1.0));
        assert_eq!(sq.support(&DVector::from_column_slice(&[1.0, 0.0])), 1.0);
        let b = Body::ball(DVector::zeros(3), 2.5).unwrap();
        let mut rng = RandomStream::new(71, 0);
        for _ in 0..20 {
            let u = random_unit(3, &mut rng);
            assert!((b.support(&u) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_support_adds_eps() {
        let mut rng = RandomStream::new(72, 0);
        let p = shapes::gaussian_polytope(10, 3, &mut rng);
        let k = Body::Polytope(p.clone());
        let kp = Body::parallel(p, 0.3).unwrap();
        for _ in 0..100 {
            let u = random_unit(3, &mut rng);
            assert!((kp.support(&u) - k.support(&u) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_support_identity() {
        let mut rng = RandomStream::new(73, 0);
        let k = Body::Polytope(shapes::gaussian_polytope(12, 4, &mut rng));
        for _ in 0..100 {
            let e = sample_subspace(2, 4, &mut rng).unwrap();
            let pk = k.project(&e).unwrap();
            let c = random_unit(2, &mut rng);
            let u = e.embed(&c);
            assert!((pk.support(&c) - k.support(&u)).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_projection_is_disk() {
        let mut rng = RandomStream::new(74, 0);
        let e = sample_subspace(2, 4, &mut rng).unwrap();
        match Body::unit_ball(4).project(&e).unwrap() {
            Body::Ball { center, radius } => {
                assert_eq!(radius, 1.0);
                assert_eq!(center.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minkowski_examples() {
        let mut rng = RandomStream::new(75, 0);
        let p = shapes::gaussian_polytope(8, 3, &mut rng);
        let t = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let s = minkowski_sum_polytopes(&p, &shapes::point(&t)).unwrap();
        assert!((s.volume() - p.volume()).abs() < 1e-9);
        let a = shapes::segment(&DVector::zeros(2), &DVector::from_column_slice(&[2.0, 0.0]));
        let b = shapes::segment(&DVector::zeros(2), &DVector::from_column_slice(&[0.0, 3.0]));
        assert!((minkowski_sum_polytopes(&a, &b).unwrap().volume() - 6.0).abs() < 1e-12);
        let q = shapes::gaussian_polytope(9, 3, &mut rng);
        let pq = minkowski_sum_polytopes(&p, &q).unwrap();
        for _ in 0..100 {
            let u = random_unit(3, &mut rng);
            assert!((pq.support(&u) - p.support(&u) - q.support(&u)).abs() < 1e-9);
        }
    }

    #[test]
    fn minkowski_cap() {
        let mut rng = RandomStream::new(76, 0);
        let p = shapes::sphere_polytope(200, 3, 1.0, &mut rng);
        assert!(matches!(minkowski_sum_polytopes(&p, &p), Err(Error::Argument(_))));
    }

    #[test]
    fn json_round_trip() {
        let cube = Body::Polytope(shapes::cube(3, 0.0, 1.0));
        let text = cube.to_json().to_string();
        let back = Body::from_json(&text).unwrap();
        let Body::Polytope(p) = back else { panic!() };
        assert_eq!(p.vertices().len(), 8);
        let par = Body::from_json(r#"{"type":"parallel","polytope":{"type":"polytope","vertices":[[0,0],[1,0],[0,1]]},"eps":0.5}"#).unwrap();
        assert!(matches!(par, Body::Parallel { .. }));
        let err = Body::from_json(r#"{"type":"ball","center":[0,0]}"#).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
        let err = Body::from_json(r#"{"type":"ball","center":[0,0],"radius":-1}"#).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
    }

    #[test]
    fn ball_section() {
        let b = Body::ball(DVector::zeros(3), 2.0).unwrap();
        let f = AffineFlat::new(Subspace::coordinate(3, &[0, 1]).unwrap(), &DVector::from_column_slice(&[0.0, 0.0, 1.0])).unwrap();
        match b.section(&f).unwrap() {
            Body::Ball { radius, .. } => assert!((radius - 3f64.sqrt()).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let far = AffineFlat::new(Subspace::coordinate(3, &[0, 1]).unwrap(), &DVector::from_column_slice(&[0.0, 0.0, 3.0])).unwrap();
        assert!(b.section(&far).unwrap().is_empty());
    }

    #[test]
    fn split_cube() {
        let c = shapes::cube(3, 0.0, 1.0);
        let n = DVector::from_column_slice(&[1.0, 1.0, 0.0]).normalize();
        let (lo, hi, cut) = split_polytope(&c, &n, n[0]).unwrap();
        let (lo, hi, cut) = (lo.unwrap(), hi.unwrap(), cut.unwrap());
        assert!((lo.volume() + hi.volume() - 1.0).abs() < 1e-12);
        assert_eq!(cut.dim(), 2);
        assert!((cut.volume() - 2f64.sqrt()).abs() < 1e-12);
    }
}
