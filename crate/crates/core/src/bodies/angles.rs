//! External angles of faces: the normalized measure of the normal cone
//! inside the orthogonal complement of the face (within the affine hull).

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::hull::dot;
use super::polytope::{Face, Polytope, FACET_TOL};
use crate::error::{arg_err, Result};
use crate::estimate::{monte_carlo, Estimate};
use crate::stream::RandomStream;

/// Orthonormal basis of the complement of `frame` in ℝ^m.
fn complement_basis(frame: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = frame.to_vec();
    let mut out = Vec::new();
    for axis in 0..m {
        let mut w = vec![0.0; m];
        w[axis] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > 1e-6 {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w.clone());
            out.push(w);
        }
    }
    out
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Solid angle of the cone over a spherical triangle (Van Oosterom–Strackee).
fn triangle_solid_angle(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let triple = dot(a, &cross(b, c));
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * triple.abs().atan2(denom)
}

/// Exact external angle when the normal cone has dimension ≤ 3 or is an
/// orthant (pairwise orthogonal facet normals).
pub(crate) fn exact_angle(p: &Polytope, ids: &[usize], face_frame: &[Vec<f64>]) -> Option<f64> {
    let m = p.dim();
    let codim = m - face_frame.len();
    match codim {
        0 => return Some(1.0),
        1 => return Some(0.5),
        _ => {}
    }
    let facets = p.local_facets();
    let normals: Vec<&Vec<f64>> = p.facets_containing(ids).into_iter().map(|f| &facets[f].normal).collect();
    if codim > 3 {
        let orthant = normals.len() == codim
            && (0..codim).all(|i| (i + 1..codim).all(|j| dot(normals[i], normals[j]).abs() < 1e-12));
        return orthant.then(|| 0.5f64.powi(codim as i32));
    }
    if codim == 2 {
        if normals.len() != 2 {
            return None;
        }
        return Some(dot(normals[0], normals[1]).clamp(-1.0, 1.0).acos() / (2.0 * std::f64::consts::PI));
    }
    let perp = complement_basis(face_frame, m);
    let gens: Vec<Vec<f64>> = normals
        .iter()
        .map(|n| {
            let v: Vec<f64> = perp.iter().map(|b| dot(b, n)).collect();
            let len = dot(&v, &v).sqrt();
            v.iter().map(|x| x / len).collect()
        })
        .collect();
    if gens.len() < 3 {
        return None;
    }
    let mut c = vec![0.0; 3];
    for g in &gens {
        c.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    let cn = dot(&c, &c).sqrt();
    c.iter_mut().for_each(|x| *x /= cn);
    let helper = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let a = cross(&c, &helper);
    let an = dot(&a, &a).sqrt();
    let a: Vec<f64> = a.iter().map(|x| x / an).collect();
    let b = cross(&c, &a);
    let mut order: Vec<(f64, usize)> = gens
        .iter()
        .enumerate()
        .map(|(i, g)| (dot(g, &b).atan2(dot(g, &a)), i))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0));
    let g0 = &gens[order[0].1];
    let mut omega = 0.0;
    for w in order[1..].windows(2) {
        omega += triangle_solid_angle(g0, &gens[w[0].1], &gens[w[1].1]);
    }
    Some(omega / (4.0 * std::f64::consts::PI))
}

/// Hit-or-miss external angle: the fraction of uniform unit vectors u in
/// the face's orthogonal complement whose maximizing vertex set is exactly
/// the face.
pub(crate) fn sampled_angle(
    p: &Polytope,
    ids: &[usize],
    face_frame: &[Vec<f64>],
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    let m = p.dim();
    let perp = complement_basis(face_frame, m);
    let verts = p.local_vertices();
    let tol = FACET_TOL * p.scale();
    monte_carlo(rng, samples, |s| {
        let g: Vec<f64> = (0..perp.len()).map(|_| s.sample(StandardNormal)).collect();
        let mut u = vec![0.0; m];
        for (gi, b) in g.iter().zip(&perp) {
            u.iter_mut().zip(b).for_each(|(x, y)| *x += gi * y);
        }
        let n = dot(&u, &u).sqrt();
        u.iter_mut().for_each(|x| *x /= n);
        let vals: Vec<f64> = verts.iter().map(|v| dot(&u, v)).collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax = vals.iter().enumerate().filter(|(_, v)| **v >= max - tol).map(|(i, _)| i);
        Ok(if argmax.eq(ids.iter().copied()) { 1.0 } else { 0.0 })
    })
}

fn locate(p: &Polytope, face: &Face) -> Result<Vec<Vec<f64>>> {
    let mut ids = face.vertex_ids.clone();
    ids.sort_unstable();
    let level = p.lattice().get(face.dim).ok_or_else(|| {
        crate::error::Error::Argument(format!("no {}-faces on this polytope", face.dim))
    })?;
    match level.iter().find(|r| r.ids == ids) {
        Some(r) => Ok(r.frame.clone()),
        None => arg_err("vertex set is not a face of the polytope"),
    }
}

/// Monte-Carlo external angle of `face` with `samples` directions; the
/// standard error is √(p(1−p)/N).
pub fn external_angle(p: &Polytope, face: &Face, rng: &mut RandomStream, samples: usize) -> Result<Estimate> {
    let frame = locate(p, face)?;
    let mut ids = face.vertex_ids.clone();
    ids.sort_unstable();
    sampled_angle(p, &ids, &frame, rng, samples)
}

/// Closed-form external angle, available when the face has codimension ≤ 3
/// in the polytope's affine hull or its normal cone is an orthant.
pub fn external_angle_exact(p: &Polytope, face: &Face) -> Result<Option<f64>> {
    let frame = locate(p, face)?;
    let mut ids = face.vertex_ids.clone();
    ids.sort_unstable();
    Ok(exact_angle(p, &ids, &frame))
}

/// Haar-random unit vector in ℝ^d (helper shared with tests).
pub fn random_unit(d: usize, rng: &mut RandomStream) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    v.normalize()
}
