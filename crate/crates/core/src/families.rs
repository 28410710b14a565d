//! Standard test bodies for the constant fits and identity checks. The
//! families mix round, box-like, flat complex, flat Lagrangian and
//! capsule-shaped bodies so that the U(n)-moments of the bodies vary
//! enough to separate every basis product.

use nalgebra::DVector;

use crate::bodies::{shapes, Body, Polytope};
use crate::error::Result;
use crate::stream::RandomStream;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Square of side `s` spanned by two coordinate axes of ℝ^d.
pub fn coordinate_square(d: usize, axes: [usize; 2], s: f64) -> Result<Body> {
    let mut pts = Vec::with_capacity(4);
    for m in 0..4 {
        let mut x = DVector::zeros(d);
        if m & 1 != 0 {
            x[axes[0]] = s;
        }
        if m & 2 != 0 {
            x[axes[1]] = s;
        }
        pts.push(x);
    }
    Ok(Body::Polytope(Polytope::from_points(&pts)?))
}

/// Named bodies in ℝ⁴ = ℂ² (coordinates x₁, x₂, y₁, y₂).
pub struct C2Bodies {
    pub ball: Body,
    pub small_ball: Body,
    pub cube: Body,
    /// Box elongated along the complex line span{x₁, y₁}.
    pub complex_slab: Body,
    /// Box elongated along the Lagrangian plane span{x₁, x₂}.
    pub lagrangian_slab: Body,
    pub capsule: Body,
    pub random: Body,
    pub cross: Body,
    pub complex_square: Body,
    pub lagrangian_square: Body,
    pub segment: Body,
    pub tiny_simplex: Body,
    pub simplex: Body,
}

pub fn c2_bodies() -> Result<C2Bodies> {
    let mut rng = RandomStream::new(0x5eed_c2, 0);
    Ok(C2Bodies {
        ball: Body::unit_ball(4),
        small_ball: Body::ball(v(&[0.5, 0.0, 0.2, 0.0]), 0.5)?,
        cube: Body::Polytope(shapes::cube(4, 0.0, 1.0)),
        complex_slab: Body::Polytope(shapes::axis_box(&[0.0; 4], &[1.5, 0.3, 1.5, 0.3])),
        lagrangian_slab: Body::Polytope(shapes::axis_box(&[0.0; 4], &[1.5, 1.5, 0.3, 0.3])),
        capsule: Body::parallel(shapes::segment(&v(&[0.0; 4]), &v(&[1.5, 0.0, 0.0, 0.0])), 0.3)?,
        random: Body::Polytope(shapes::gaussian_polytope(8, 4, &mut rng)),
        cross: Body::Polytope(shapes::cross_polytope(4, 1.0)),
        complex_square: coordinate_square(4, [0, 2], 1.2)?,
        lagrangian_square: coordinate_square(4, [0, 1], 1.2)?,
        segment: Body::Polytope(shapes::segment(&v(&[0.0; 4]), &v(&[1.0, 0.5, 0.3, 0.0]))),
        tiny_simplex: Body::Polytope(shapes::simplex(4).scale_by(0.3)?),
        simplex: Body::Polytope(shapes::simplex(4).scale_by(1.5)?),
    })
}

/// Training pairs for the kinematic constants in ℂ² (14 pairs, 8 unknowns).
pub fn kappa_training_pairs() -> Result<Vec<(Body, Body)>> {
    let b = c2_bodies()?;
    Ok(vec![
        (b.complex_square.clone(), b.complex_square.clone()),
        (b.complex_square.clone(), b.lagrangian_square.clone()),
        (b.lagrangian_square.clone(), b.complex_square.clone()),
        (b.lagrangian_square.clone(), b.lagrangian_square.clone()),
        (b.tiny_simplex.clone(), b.cube.clone()),
        (b.cube.clone(), b.tiny_simplex.clone()),
        (b.segment.clone(), b.cube.clone()),
        (b.random.clone(), b.segment.clone()),
        (b.ball.clone(), b.cube.clone()),
        (b.complex_slab.clone(), b.lagrangian_slab.clone()),
        (b.capsule.clone(), b.cross.clone()),
        (b.small_ball.clone(), b.complex_slab.clone()),
        (b.lagrangian_slab.clone(), b.capsule.clone()),
        (b.random.clone(), b.complex_square.clone()),
    ])
}

pub fn kappa_heldout_pair() -> Result<(Body, Body)> {
    let b = c2_bodies()?;
    Ok((b.simplex, b.capsule))
}

pub fn beta_training_bodies() -> Result<Vec<Body>> {
    let b = c2_bodies()?;
    Ok(vec![
        b.ball,
        b.cube,
        b.complex_slab,
        b.lagrangian_slab,
        b.capsule,
        b.random,
        b.complex_square,
        b.lagrangian_square,
    ])
}

pub fn beta_heldout_body() -> Result<Body> {
    Ok(c2_bodies()?.simplex)
}

/// `bodies` hulls of `count` Gaussian points in ℝ⁴.
pub fn random_c2_polytopes(bodies: usize, count: usize, rng: &mut RandomStream) -> Vec<Body> {
    (0..bodies)
        .map(|_| Body::Polytope(shapes::gaussian_polytope(count, 4, rng)))
        .collect()
}

/// Bodies in ℝ⁶ = ℂ³ for the complex Crofton constants.
pub fn gamma_training_bodies() -> Result<Vec<Body>> {
    let mut rng = RandomStream::new(0x5eed_c3, 0);
    Ok(vec![
        Body::unit_ball(6),
        Body::Polytope(shapes::cube(6, 0.0, 1.0)),
        Body::Polytope(shapes::cross_polytope(6, 1.2)),
        Body::Polytope(shapes::axis_box(&[0.0; 6], &[2.0, 1.0, 0.5, 1.0, 0.7, 1.5])),
        Body::Polytope(shapes::gaussian_polytope(12, 6, &mut rng)),
    ])
}

pub fn gamma_heldout_body() -> Result<Body> {
    Ok(Body::Polytope(shapes::simplex(6).scale_by(2.0)?))
}
