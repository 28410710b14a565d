//! Stock polytopes used by tests, examples and the constant fits.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Polytope;
use crate::stream::RandomStream;

fn build(points: Vec<DVector<f64>>) -> Polytope {
    Polytope::from_points(&points).expect("stock polytope is well formed")
}

/// The cube [lo, hi]^d.
pub fn cube(d: usize, lo: f64, hi: f64) -> Polytope {
    axis_box(&vec![lo; d], &vec![hi; d])
}

pub fn axis_box(lo: &[f64], hi: &[f64]) -> Polytope {
    let d = lo.len();
    let pts = (0..1usize << d)
        .map(|mask| DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }))
        .collect();
    build(pts)
}

/// conv{0, e₁, …, e_d}.
pub fn simplex(d: usize) -> Polytope {
    let mut pts = vec![DVector::zeros(d)];
    pts.extend((0..d).map(|i| {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }));
    build(pts)
}

/// conv{±r·eᵢ}.
pub fn cross_polytope(d: usize, r: f64) -> Polytope {
    let mut pts = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [-r, r] {
            let mut v = DVector::zeros(d);
            v[i] = s;
            pts.push(v);
        }
    }
    build(pts)
}

pub fn segment(a: &DVector<f64>, b: &DVector<f64>) -> Polytope {
    build(vec![a.clone(), b.clone()])
}

pub fn point(x: &DVector<f64>) -> Polytope {
    build(vec![x.clone()])
}

/// Hull of `n` standard Gaussian points in ℝ^d.
pub fn gaussian_polytope(n: usize, d: usize, rng: &mut RandomStream) -> Polytope {
    loop {
        let pts: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(d, |_, _| rng.sample(StandardNormal)))
            .collect();
        let p = build(pts);
        if p.dim() == d {
            return p;
        }
    }
}

/// Hull of `n` uniform points on the sphere of radius `r`, an inscribed
/// approximation of the ball.
pub fn sphere_polytope(n: usize, d: usize, r: f64, rng: &mut RandomStream) -> Polytope {
    let pts: Vec<DVector<f64>> = (0..n)
        .map(|_| {
            let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            v.normalize() * r
        })
        .collect();
    build(pts)
}

/// Regular m-gon of circumradius r in the plane spanned by orthonormal u, v.
pub fn regular_polygon(m: usize, r: f64, u: &DVector<f64>, v: &DVector<f64>) -> Polytope {
    let pts = (0..m)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            u * (r * a.cos()) + v * (r * a.sin())
        })
        .collect();
    build(pts)
}
