//! Intersections of polytopes with affine flats, in flat coordinates.

use nalgebra::{DMatrix, DVector};

use super::hull::dot;
use super::polytope::{Polytope, FACET_TOL};
use super::Body;
use crate::error::{arg_err, Result};
use crate::geomlin::AffineFlat;

/// The set {s0 + Ns·t} of polytope-local points that lie on the flat, with
/// the matching flat coordinates c0 + Nc·t.
struct Slice {
    s0: DVector<f64>,
    ns: DMatrix<f64>,
    c0: DVector<f64>,
    nc: DMatrix<f64>,
}

fn slice(p: &Polytope, flat: &AffineFlat) -> Option<Slice> {
    let w = flat.direction.frame();
    let r = w.ncols();
    if p.is_full_dim() {
        return Some(Slice {
            s0: flat.offset.clone(),
            ns: w.clone(),
            c0: DVector::zeros(r),
            nc: DMatrix::identity(r, r),
        });
    }
    // Solve origin + B s = offset + W c.
    let b = p.basis();
    let m = b.ncols();
    let d = b.nrows();
    let mut a = DMatrix::zeros(d, m + r);
    a.view_mut((0, 0), (d, m)).copy_from(b);
    a.view_mut((0, m), (d, r)).copy_from(&(-w));
    let rhs = &flat.offset - p.origin();
    let scale = p.scale().max(rhs.amax());
    let svd = a.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("requested");
    let u = svd.u.as_ref().expect("requested");
    let tol = 1e-10;
    let mut z = DVector::zeros(m + r);
    let mut null_cols: Vec<DVector<f64>> = Vec::new();
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > tol {
            let coef = u.column(i).dot(&rhs) / sigma;
            z += v_t.row(i).transpose() * coef;
        }
    }
    // Rows of Vᵀ with negligible σ, plus any the thin SVD omitted, span the null space.
    let n_sv = svd.singular_values.len();
    for i in 0..n_sv {
        if svd.singular_values[i] <= tol {
            null_cols.push(v_t.row(i).transpose());
        }
    }
    if n_sv < m + r {
        // thin SVD omits the trailing null directions; complete them
        let known: Vec<DVector<f64>> = (0..n_sv).map(|i| v_t.row(i).transpose()).collect();
        let q = crate::geomlin::Subspace::span(m + r, &known).ok()?;
        for c in q.complement().frame().column_iter() {
            null_cols.push(c.into_owned());
        }
    }
    if (&a * &z - &rhs).amax() > FACET_TOL * scale {
        return None;
    }
    let q = null_cols.len();
    let mut ns = DMatrix::zeros(m, q);
    let mut nc = DMatrix::zeros(r, q);
    for (j, col) in null_cols.iter().enumerate() {
        ns.set_column(j, &col.rows(0, m));
        nc.set_column(j, &col.rows(m, r));
    }
    Some(Slice {
        s0: z.rows(0, m).into_owned(),
        ns,
        c0: z.rows(m, r).into_owned(),
        nc,
    })
}

fn to_body(points: Vec<DVector<f64>>, flat_dim: usize) -> Result<Body> {
    if points.is_empty() {
        Ok(Body::Empty { ambient: flat_dim })
    } else {
        Ok(Body::Polytope(Polytope::from_points(&points)?))
    }
}

pub(crate) fn section_polytope(p: &Polytope, flat: &AffineFlat) -> Result<Body> {
    if p.ambient_dim() != flat.direction.ambient_dim() {
        return arg_err("flat and polytope live in different spaces");
    }
    let r = flat.direction.dim();
    let Some(sl) = slice(p, flat) else {
        return Ok(Body::Empty { ambient: r });
    };
    let tol = FACET_TOL * p.scale();
    let facets = p.local_facets();
    let feasible = |s: &DVector<f64>| facets.iter().all(|f| dot(&f.normal, s.as_slice()) <= f.offset + tol);
    let q = sl.ns.ncols();
    let to_flat = |t: &DVector<f64>| &sl.c0 + &sl.nc * t;
    match q {
        0 => {
            if feasible(&sl.s0) {
                to_body(vec![sl.c0.clone()], r)
            } else {
                Ok(Body::Empty { ambient: r })
            }
        }
        1 => {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let dir = sl.ns.column(0);
            for f in facets {
                let a: f64 = f.normal.iter().zip(dir.iter()).map(|(x, y)| x * y).sum();
                let rhs = f.offset - dot(&f.normal, sl.s0.as_slice());
                if a.abs() <= 1e-14 {
                    if rhs < -tol {
                        return Ok(Body::Empty { ambient: r });
                    }
                } else if a > 0.0 {
                    hi = hi.min(rhs / a);
                } else {
                    lo = lo.max(rhs / a);
                }
            }
            if lo > hi + tol {
                return Ok(Body::Empty { ambient: r });
            }
            let hi = hi.max(lo);
            to_body(
                vec![to_flat(&DVector::from_element(1, lo)), to_flat(&DVector::from_element(1, hi))],
                r,
            )
        }
        _ => {
            let m = p.dim();
            let mut pts: Vec<DVector<f64>> = Vec::new();
            let locals = p.local_vertices();
            let gram = sl.ns.tr_mul(&sl.ns);
            let gram_inv = gram.try_inverse();
            // vertices lying on the slice
            if let Some(gi) = &gram_inv {
                for v in locals {
                    let diff = DVector::from_column_slice(v) - &sl.s0;
                    let t = gi * sl.ns.tr_mul(&diff);
                    if (&sl.ns * &t - &diff).amax() <= tol {
                        pts.push(to_flat(&t));
                    }
                }
            }
            // crossings of the slice with (m − q)-faces
            if q <= m {
                let mut sys = DMatrix::zeros(m, m);
                sys.view_mut((0, 0), (m, q)).copy_from(&sl.ns);
                for rec in &p.lattice()[m - q] {
                    for (j, col) in rec.frame.iter().enumerate() {
                        for i in 0..m {
                            sys[(i, q + j)] = -col[i];
                        }
                    }
                    let g = DVector::from_column_slice(&locals[rec.ids[0]]);
                    let Some(sol) = sys.clone().lu().solve(&(&g - &sl.s0)) else {
                        continue;
                    };
                    if sol.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
                        continue;
                    }
                    let t = sol.rows(0, q).into_owned();
                    let s = &sl.s0 + &sl.ns * &t;
                    if feasible(&s) {
                        pts.push(to_flat(&t));
                    }
                }
            }
            to_body(pts, r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::shapes;
    use crate::geomlin::{sample_subspace, Subspace};
    use crate::stream::RandomStream;
    use rand::Rng;

    fn flat(dir: Subspace, pt: &[f64]) -> AffineFlat {
        AffineFlat::new(dir, &DVector::from_column_slice(pt)).unwrap()
    }

    #[test]
    fn cube_midplane() {
        let c = shapes::cube(3, -1.0, 1.0);
        let f = flat(Subspace::coordinate(3, &[0, 1]).unwrap(), &[0.0, 0.0, 0.0]);
        let Body::Polytope(s) = section_polytope(&c, &f).unwrap() else { panic!() };
        assert!((s.volume() - 4.0).abs() < 1e-12);
        // a facet plane is a degenerate but valid section
        let top = flat(Subspace::coordinate(3, &[0, 1]).unwrap(), &[0.0, 0.0, 1.0]);
        let Body::Polytope(s) = section_polytope(&c, &top).unwrap() else { panic!() };
        assert!((s.volume() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_flat_is_empty() {
        let c = shapes::cube(3, -1.0, 1.0);
        let f = flat(Subspace::coordinate(3, &[0, 1]).unwrap(), &[0.0, 0.0, 3.0]);
        assert!(section_polytope(&c, &f).unwrap().is_empty());
        let line = flat(Subspace::coordinate(3, &[2]).unwrap(), &[5.0, 0.0, 0.0]);
        assert!(section_polytope(&c, &line).unwrap().is_empty());
    }

    #[test]
    fn random_section_vertices_satisfy_hrep() {
        let mut rng = RandomStream::new(61, 0);
        for d in [3, 4] {
            let p = shapes::gaussian_polytope(20, d, &mut rng);
            for k in 1..d {
                for _ in 0..10 {
                    let dir = sample_subspace(k, d, &mut rng).unwrap();
                    let pt = DVector::from_fn(d, |_, _| 0.5 * (rng.random::<f64>() - 0.5));
                    let fl = AffineFlat::new(dir, &pt).unwrap();
                    if let Body::Polytope(s) = section_polytope(&p, &fl).unwrap() {
                        for v in s.vertices() {
                            assert!(p.contains(&fl.point(v), 1e-9));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn section_of_lower_dimensional_polytope() {
        // unit square in the x₁x₃-plane of ℝ⁴, cut by the flat x₁ = 0.25
        let sq = Polytope::from_points(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
                .iter()
                .map(|[a, b]| DVector::from_column_slice(&[*a, 0.0, *b, 0.0]))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let f = flat(Subspace::coordinate(4, &[1, 2, 3]).unwrap(), &[0.25, 0.0, 0.0, 0.0]);
        let Body::Polytope(s) = section_polytope(&sq, &f).unwrap() else { panic!() };
        assert_eq!(s.dim(), 1);
        assert!((s.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn section_volumes_integrate_to_volume() {
        // Fubini along x₃ for the cross-polytope: ∫ area(slice) dz = vol
        let c = shapes::cross_polytope(3, 1.0);
        let n = 400;
        let mut total = 0.0;
        for i in 0..n {
            let z = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
            let f = flat(Subspace::coordinate(3, &[0, 1]).unwrap(), &[0.0, 0.0, z]);
            if let Body::Polytope(s) = section_polytope(&c, &f).unwrap() {
                total += s.volume() * 2.0 / n as f64;
            }
        }
        assert!((total - 4.0 / 3.0).abs() < 1e-4);
    }
}
