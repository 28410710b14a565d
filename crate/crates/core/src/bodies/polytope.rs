use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::hull::{cloud_scale, dot, hull, Hull};
use crate::error::{arg_err, Result};
use crate::geomlin::Subspace;

/// Vertex deduplication distance.
pub const DEDUP_TOL: f64 = 1e-8;
/// Facet tightness and membership slack.
pub const FACET_TOL: f64 = 1e-9;
pub const MAX_AMBIENT_DIM: usize = 6;

/// Halfspace ⟨normal, x⟩ ≤ offset with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

/// Facet in the polytope's own affine coordinates.
#[derive(Clone, Debug)]
pub(crate) struct LocalFacet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertex_ids: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct FaceRec {
    pub ids: Vec<usize>,
    /// Orthonormal frame of the face direction in local coordinates.
    pub frame: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Face {
    pub dim: usize,
    pub vertex_ids: Vec<usize>,
    pub direction: Subspace,
    pub ref_point: DVector<f64>,
}

#[derive(Debug)]
struct Inner {
    ambient: usize,
    vertices: Vec<DVector<f64>>,
    origin: DVector<f64>,
    /// `ambient × dim` orthonormal basis of the affine hull's direction;
    /// the identity for full-dimensional polytopes.
    basis: DMatrix<f64>,
    local: Vec<Vec<f64>>,
    facets: Vec<LocalFacet>,
    hrep: Vec<Halfspace>,
    volume: f64,
    scale: f64,
    lattice: OnceLock<Vec<Vec<FaceRec>>>,
}

/// A convex polytope given by its vertices, with derived facet description
/// and a lazily built face lattice. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Polytope {
    inner: Arc<Inner>,
}

fn dedup(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    if points[0].is_empty() {
        return vec![points[0].clone()];
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let mut kept: Vec<usize> = Vec::with_capacity(points.len());
    let mut window_start = 0;
    for &i in &idx {
        while window_start < kept.len() && points[kept[window_start]][0] < points[i][0] - DEDUP_TOL {
            window_start += 1;
        }
        let dup = kept[window_start..]
            .iter()
            .any(|&k| (&points[k] - &points[i]).amax() <= DEDUP_TOL);
        if !dup {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|i| points[i].clone()).collect()
}

/// Greedy affinely independent subset: returns the chosen point indices and
/// an orthonormal basis of their span directions.
pub(crate) fn affine_basis(points: &[Vec<f64>], tol: f64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let d = points[0].len();
    let first = (0..points.len())
        .min_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let origin = &points[first];
    let residual = |p: &Vec<f64>, basis: &Vec<Vec<f64>>| -> Vec<f64> {
        let mut w: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        w
    };
    while basis.len() < d {
        let mut best = None;
        let mut best_n = tol;
        for (i, p) in points.iter().enumerate() {
            let w = residual(p, &basis);
            let n = dot(&w, &w).sqrt();
            if n > best_n {
                best_n = n;
                best = Some((i, w));
            }
        }
        match best {
            Some((i, w)) => {
                chosen.push(i);
                basis.push(w.iter().map(|x| x / best_n).collect());
            }
            None => break,
        }
    }
    (chosen, basis)
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

impl Polytope {
    /// Convex hull of a finite point set in ℝ^d, d ≤ 6. Lower-dimensional
    /// inputs give a polytope that lives in its affine hull.
    pub fn from_points(points: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = points.first() else {
            return arg_err("polytope needs at least one point");
        };
        let d = first.len();
        if d > MAX_AMBIENT_DIM {
            return arg_err(format!("ambient dimension {d} exceeds {MAX_AMBIENT_DIM}"));
        }
        if points.iter().any(|p| p.len() != d) {
            return arg_err("points of differing dimension");
        }
        if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return arg_err("non-finite coordinate");
        }
        let pts = dedup(points);
        let raw: Vec<Vec<f64>> = pts.iter().map(to_vec).collect();
        let scale = cloud_scale(&raw);
        let (chosen, dirs) = affine_basis(&raw, FACET_TOL * scale);
        let m = dirs.len();
        let (origin, basis, local) = if m == d {
            (DVector::zeros(d), DMatrix::identity(d, d), raw.clone())
        } else {
            let origin = pts[chosen[0]].clone();
            let cols: Vec<DVector<f64>> = dirs.iter().map(|v| DVector::from_column_slice(v)).collect();
            let basis = if cols.is_empty() {
                DMatrix::zeros(d, 0)
            } else {
                DMatrix::from_columns(&cols)
            };
            let local = pts
                .iter()
                .map(|p| to_vec(&basis.tr_mul(&(p - &origin))))
                .collect();
            (origin, basis, local)
        };
        let Hull { vertices, facets, volume } = hull(&local, &chosen);
        let vertex_pts: Vec<DVector<f64>> = vertices.iter().map(|&i| pts[i].clone()).collect();
        let local_v: Vec<Vec<f64>> = vertices.iter().map(|&i| local[i].clone()).collect();
        let facets: Vec<LocalFacet> = facets
            .into_iter()
            .map(|f| LocalFacet { normal: f.normal, offset: f.offset, vertex_ids: f.vertex_ids })
            .collect();
        let hrep = Self::ambient_hrep(&origin, &basis, &facets);
        Ok(Self {
            inner: Arc::new(Inner {
                ambient: d,
                vertices: vertex_pts,
                origin,
                basis,
                local: local_v,
                facets,
                hrep,
                volume,
                scale,
                lattice: OnceLock::new(),
            }),
        })
    }

    fn ambient_hrep(origin: &DVector<f64>, basis: &DMatrix<f64>, facets: &[LocalFacet]) -> Vec<Halfspace> {
        let d = basis.nrows();
        let mut out: Vec<Halfspace> = facets
            .iter()
            .map(|f| {
                let normal = basis * DVector::from_column_slice(&f.normal);
                let offset = f.offset + normal.dot(origin);
                Halfspace { normal, offset }
            })
            .collect();
        if basis.ncols() < d {
            let hull_dir = Subspace::from_frame(basis.clone()).expect("orthonormal basis");
            for c in hull_dir.complement().frame().column_iter() {
                let n = c.into_owned();
                let b = n.dot(origin);
                out.push(Halfspace { normal: -&n, offset: -b });
                out.push(Halfspace { normal: n, offset: b });
            }
        }
        out
    }

    pub fn ambient_dim(&self) -> usize {
        self.inner.ambient
    }

    /// Dimension of the affine hull.
    pub fn dim(&self) -> usize {
        self.inner.basis.ncols()
    }

    pub fn is_full_dim(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.inner.vertices
    }

    /// Halfspaces whose intersection is the polytope. Lower-dimensional
    /// polytopes include pairs of opposite halfspaces cutting out the hull.
    pub fn hrep(&self) -> &[Halfspace] {
        &self.inner.hrep
    }

    /// Number of facets within the affine hull.
    pub fn facet_count(&self) -> usize {
        self.inner.facets.len()
    }

    /// Typical coordinate magnitude, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.inner.scale
    }

    /// `dim`-dimensional volume within the affine hull (1 for a point).
    pub fn volume(&self) -> f64 {
        self.inner.volume
    }

    /// k-dimensional volume: the hull volume if k = dim, 0 if k > dim.
    pub fn volume_k(&self, k: usize) -> Result<f64> {
        use std::cmp::Ordering::*;
        match k.cmp(&self.dim()) {
            Equal => Ok(self.volume()),
            Greater => Ok(0.0),
            Less => arg_err(format!("{k}-volume of a {}-dimensional polytope", self.dim())),
        }
    }

    pub fn support(&self, u: &DVector<f64>) -> f64 {
        self.inner
            .vertices
            .iter()
            .map(|v| v.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.hrep().iter().all(|h| h.normal.dot(x) <= h.offset + tol)
    }

    pub fn centroid_of_vertices(&self) -> DVector<f64> {
        let n = self.inner.vertices.len() as f64;
        self.inner.vertices.iter().fold(DVector::zeros(self.ambient_dim()), |a, v| a + v) / n
    }

    pub(crate) fn origin(&self) -> &DVector<f64> {
        &self.inner.origin
    }

    pub(crate) fn basis(&self) -> &DMatrix<f64> {
        &self.inner.basis
    }

    pub(crate) fn local_vertices(&self) -> &[Vec<f64>] {
        &self.inner.local
    }

    pub(crate) fn local_facets(&self) -> &[LocalFacet] {
        &self.inner.facets
    }

    /// Image under x ↦ m·x + t.
    pub fn affine_image(&self, m: &DMatrix<f64>, t: &DVector<f64>) -> Result<Self> {
        let pts: Vec<DVector<f64>> = self.vertices().iter().map(|v| m * v + t).collect();
        Self::from_points(&pts)
    }

    pub fn translate(&self, t: &DVector<f64>) -> Result<Self> {
        let pts: Vec<DVector<f64>> = self.vertices().iter().map(|v| v + t).collect();
        Self::from_points(&pts)
    }

    pub fn scale_by(&self, lambda: f64) -> Result<Self> {
        let pts: Vec<DVector<f64>> = self.vertices().iter().map(|v| v * lambda).collect();
        Self::from_points(&pts)
    }

    /// Orthogonal projection onto `e`, in `e`'s frame coordinates.
    pub fn project(&self, e: &Subspace) -> Result<Self> {
        if e.ambient_dim() != self.ambient_dim() {
            return arg_err("projection onto a subspace of a different space");
        }
        if e.dim() == 0 {
            return arg_err("projection onto the zero subspace");
        }
        let pts: Vec<DVector<f64>> = self.vertices().iter().map(|v| e.coords(v)).collect();
        Self::from_points(&pts)
    }

    /// Facet ids (local) containing every vertex in `ids`.
    pub(crate) fn facets_containing(&self, ids: &[usize]) -> Vec<usize> {
        self.inner
            .facets
            .iter()
            .enumerate()
            .filter(|(_, f)| ids.iter().all(|v| f.vertex_ids.binary_search(v).is_ok()))
            .map(|(i, _)| i)
            .collect()
    }

    pub(crate) fn lattice(&self) -> &Vec<Vec<FaceRec>> {
        self.inner.lattice.get_or_init(|| self.build_lattice())
    }

    fn affine_span(&self, ids: &[usize]) -> Vec<Vec<f64>> {
        let pts: Vec<Vec<f64>> = ids.iter().map(|&i| self.inner.local[i].clone()).collect();
        affine_basis(&pts, FACET_TOL * self.inner.scale).1
    }

    fn build_lattice(&self) -> Vec<Vec<FaceRec>> {
        let m = self.dim();
        let nv = self.inner.vertices.len();
        let mut levels: Vec<Vec<FaceRec>> = vec![Vec::new(); m + 1];
        let all: Vec<usize> = (0..nv).collect();
        levels[m].push(FaceRec { frame: self.affine_span(&all), ids: all });
        if m == 0 {
            return levels;
        }
        let facet_sets: Vec<Vec<usize>> = self
            .inner
            .facets
            .iter()
            .map(|f| {
                let mut ids = f.vertex_ids.clone();
                ids.sort_unstable();
                ids
            })
            .collect();
        levels[m - 1] = facet_sets
            .iter()
            .map(|ids| FaceRec { frame: self.affine_span(ids), ids: ids.clone() })
            .collect();
        for j in (0..m - 1).rev() {
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            let mut next = Vec::new();
            for g in &levels[j + 1] {
                for f in &facet_sets {
                    let inter: Vec<usize> = g.ids.iter().copied().filter(|v| f.binary_search(v).is_ok()).collect();
                    if inter.len() < j + 1 || inter.len() == g.ids.len() || seen.contains(&inter) {
                        continue;
                    }
                    let frame = self.affine_span(&inter);
                    if frame.len() == j {
                        seen.insert(inter.clone());
                        next.push(FaceRec { ids: inter, frame });
                    }
                }
            }
            next.sort_by(|a, b| a.ids.cmp(&b.ids));
            levels[j] = next;
        }
        levels
    }

    /// All j-dimensional faces.
    pub fn faces(&self, j: usize) -> Result<Vec<Face>> {
        if j > self.dim() {
            return arg_err(format!("no {j}-faces on a {}-dimensional polytope", self.dim()));
        }
        let basis = &self.inner.basis;
        self.lattice()[j]
            .iter()
            .map(|rec| {
                let frame = if rec.frame.is_empty() {
                    DMatrix::zeros(self.ambient_dim(), 0)
                } else {
                    let cols: Vec<DVector<f64>> =
                        rec.frame.iter().map(|c| basis * DVector::from_column_slice(c)).collect();
                    DMatrix::from_columns(&cols)
                };
                Ok(Face {
                    dim: j,
                    vertex_ids: rec.ids.clone(),
                    direction: Subspace::from_frame(frame)?,
                    ref_point: self.inner.vertices[rec.ids[0]].clone(),
                })
            })
            .collect()
    }

    pub fn face_count(&self, j: usize) -> usize {
        self.lattice().get(j).map_or(0, |l| l.len())
    }

    /// j-volume of a face given by vertex ids.
    pub fn face_volume(&self, ids: &[usize]) -> Result<f64> {
        match ids.len() {
            1 => Ok(1.0),
            2 => Ok((&self.inner.vertices[ids[0]] - &self.inner.vertices[ids[1]]).norm()),
            _ => {
                let pts: Vec<DVector<f64>> = ids.iter().map(|&i| self.inner.vertices[i].clone()).collect();
                Ok(Polytope::from_points(&pts)?.volume())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::hull::brute_force_facets;
    use crate::bodies::shapes;
    use crate::stream::RandomStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_points(n: usize, d: usize, rng: &mut RandomStream) -> Vec<DVector<f64>> {
        (0..n).map(|_| DVector::from_fn(d, |_, _| rng.sample(StandardNormal))).collect()
    }

    #[test]
    fn cube_counts() {
        let c = shapes::cube(3, 0.0, 1.0);
        assert_eq!(c.vertices().len(), 8);
        assert_eq!(c.facet_count(), 6);
        assert_eq!(c.face_count(1), 12);
        assert!((c.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_counts_and_volume() {
        for d in 2..=6 {
            let s = shapes::simplex(d);
            assert_eq!(s.facet_count(), d + 1);
            let fact: f64 = (1..=d).map(|v| v as f64).product();
            assert!((s.volume() - 1.0 / fact).abs() < 1e-12);
        }
        let s4 = shapes::simplex(4);
        assert_eq!(s4.face_count(2), 10);
    }

    #[test]
    fn cross_polytope_volume() {
        let c = shapes::cross_polytope(3, 1.0);
        assert!((c.volume() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.facet_count(), 8);
    }

    #[test]
    fn gaussian_hull_matches_brute_force() {
        let mut rng = RandomStream::new(31, 0);
        for d in [3, 4] {
            let pts = gaussian_points(20, d, &mut rng);
            let p = Polytope::from_points(&pts).unwrap();
            let raw: Vec<Vec<f64>> = pts.iter().map(to_vec).collect();
            let brute = brute_force_facets(&raw);
            assert_eq!(brute.len(), p.facet_count());
            for h in p.hrep() {
                assert!(brute.iter().any(|(n, o)| {
                    (o - h.offset).abs() < 1e-8 && n.iter().zip(h.normal.iter()).all(|(a, b)| (a - b).abs() < 1e-7)
                }));
                let tight = p.vertices().iter().filter(|v| (h.normal.dot(v) - h.offset).abs() <= 1e-9).count();
                assert!(tight >= d);
                for x in &pts {
                    assert!(h.normal.dot(x) <= h.offset + 1e-9);
                }
            }
        }
    }

    #[test]
    fn interior_points_are_not_vertices() {
        let mut pts = shapes::cube(3, -1.0, 1.0).vertices().to_vec();
        pts.push(DVector::from_column_slice(&[0.0, 0.0, 0.0]));
        pts.push(DVector::from_column_slice(&[1.0, 0.0, 0.0]));
        pts.push(DVector::from_column_slice(&[1.0, 1.0, 0.0]));
        pts.push(DVector::from_column_slice(&[1.0, 1.0, 1.0 + 1e-10]));
        let p = Polytope::from_points(&pts).unwrap();
        assert_eq!(p.vertices().len(), 8);
        assert_eq!(p.facet_count(), 6);
    }

    #[test]
    fn lower_dimensional_square_in_r4() {
        let pts: Vec<DVector<f64>> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|[a, b]| DVector::from_column_slice(&[*a, 0.5, *b, 0.5]))
            .collect();
        let p = Polytope::from_points(&pts).unwrap();
        assert_eq!(p.dim(), 2);
        assert!((p.volume() - 1.0).abs() < 1e-12);
        assert_eq!(p.face_count(1), 4);
        for v in p.vertices() {
            assert!(p.contains(v, 1e-9));
        }
        assert!(!p.contains(&DVector::from_column_slice(&[0.5, 0.6, 0.5, 0.5]), 1e-9));
    }

    #[test]
    fn euler_relation_on_random_polytopes() {
        let mut rng = RandomStream::new(32, 0);
        for d in 2..=5 {
            for _ in 0..3 {
                let p = Polytope::from_points(&gaussian_points(14, d, &mut rng)).unwrap();
                let chi: i64 = (0..=d).map(|j| if j % 2 == 0 { 1 } else { -1 } * p.face_count(j) as i64).sum();
                assert_eq!(chi, 1, "d={d}");
            }
        }
    }

    #[test]
    fn round_trip_reproduces_facets() {
        let mut rng = RandomStream::new(33, 0);
        let p = Polytope::from_points(&gaussian_points(25, 4, &mut rng)).unwrap();
        let q = Polytope::from_points(p.vertices()).unwrap();
        assert_eq!(p.facet_count(), q.facet_count());
        for h in p.hrep() {
            assert!(q.hrep().iter().any(|g| (g.offset - h.offset).abs() < 1e-9 && (&g.normal - &h.normal).amax() < 1e-9));
        }
    }

    #[test]
    fn volume_is_rigid_motion_invariant() {
        let mut rng = RandomStream::new(34, 0);
        let p = Polytope::from_points(&gaussian_points(15, 4, &mut rng)).unwrap();
        let rot = crate::geomlin::sample_subspace(4, 4, &mut rng).unwrap();
        let t = DVector::from_fn(4, |_, _| rng.random::<f64>() * 5.0);
        let q = p.affine_image(rot.frame(), &t).unwrap();
        assert!((p.volume() - q.volume()).abs() < 1e-9 * p.volume());
    }

    #[test]
    fn projection_of_square_onto_diagonal() {
        let sq = shapes::cube(2, 0.0, 1.0);
        let diag = Subspace::from_vectors(2, &[DVector::from_column_slice(&[1.0, 1.0])]).unwrap();
        let seg = sq.project(&diag).unwrap();
        assert!((seg.volume() - 2f64.sqrt()).abs() < 1e-12);
    }
}
