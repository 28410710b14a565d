//! Oriented 2-planes in ℝ⁴ ≅ ℍ parameterized by pairs of points on spheres.
//!
//! ℍ is identified with ℂ² = ℝ²_x ⊕ ℝ²_y by
//! a + bi + cj + dk ↦ (x₁, x₂, y₁, y₂) = (a, c, b, −d).
//! Under this isometry right multiplication by i is the global complex
//! structure J(x,y) = (−y,x), and E₀ = span{1, i} is the first complex axis.

use std::ops::Mul;

use nalgebra::DVector;

use super::Subspace;
use crate::error::{arg_err, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn pure(v: [f64; 3]) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn vector(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

pub fn quaternion_to_r4(q: Quaternion) -> DVector<f64> {
    DVector::from_column_slice(&[q.w, q.y, q.x, -q.z])
}

const CENTER: [f64; 3] = [0.5, 0.0, 0.0];

/// Unit quaternion q with q i q̄ = v for a unit pure vector v.
fn hopf_lift(v: [f64; 3]) -> Quaternion {
    // 1 − v·i is the unnormalized half-way rotation from i to v
    let q = Quaternion::new(1.0 + v[0], 0.0, -v[2], v[1]);
    if q.norm() < 1e-8 {
        Quaternion::J
    } else {
        q.normalize()
    }
}

fn sphere_direction(t: [f64; 3]) -> Result<[f64; 3]> {
    let v = [2.0 * (t[0] - CENTER[0]), 2.0 * t[1], 2.0 * t[2]];
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if (r - 1.0).abs() > 2e-9 {
        return arg_err(format!(
            "point {t:?} is off the sphere of radius 1/2 about (1/2,0,0)"
        ));
    }
    Ok([v[0] / r, v[1] / r, v[2] / r])
}

/// The 2-plane q₁·E₀·q₂⁻¹, where qᵢ lifts tᵢ through q ↦ center + ½·vec(q i q̄).
pub fn gr24_plane(t1: [f64; 3], t2: [f64; 3]) -> Result<Subspace> {
    let q1 = hopf_lift(sphere_direction(t1)?);
    let q2 = hopf_lift(sphere_direction(t2)?);
    let a = q1 * Quaternion::ONE * q2.conj();
    let b = q1 * Quaternion::I * q2.conj();
    Subspace::from_frame(nalgebra::DMatrix::from_columns(&[
        quaternion_to_r4(a),
        quaternion_to_r4(b),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomlin::{cosine_angle, ComplexStructure};

    #[test]
    fn right_i_is_the_complex_structure() {
        let j = ComplexStructure::new(2);
        let h = Quaternion::new(0.3, -1.2, 0.7, 2.0);
        let lhs = j.apply(&quaternion_to_r4(h));
        let rhs = quaternion_to_r4(h * Quaternion::I);
        assert!((lhs - rhs).amax() < 1e-15);
    }

    #[test]
    fn lift_inverts_hopf_map() {
        for v in [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.6, -0.8],
            [0.48, 0.6, 0.64],
        ] {
            let q = hopf_lift(v);
            let w = (q * Quaternion::I * q.conj()).vector();
            for i in 0..3 {
                assert!((w[i] - v[i]).abs() < 1e-12, "{v:?} -> {w:?}");
            }
        }
    }

    #[test]
    fn base_point_is_first_complex_axis() {
        let e = gr24_plane([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        let e0 = Subspace::coordinate(4, &[0, 2]).unwrap();
        assert!((cosine_angle(&e, &e0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_cases_match_cosine_formula() {
        let e0 = Subspace::coordinate(4, &[0, 2]).unwrap();
        let pts = [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [0.5, 0.0, 0.5],
            [0.5, 0.0, -0.5],
            [0.5, 0.5, 0.0],
        ];
        for t1 in pts {
            for t2 in pts {
                let c = cosine_angle(&gr24_plane(t1, t2).unwrap(), &e0).unwrap();
                assert!((c - (t1[0] + t2[0] - 1.0).abs()).abs() < 1e-12, "{t1:?} {t2:?}");
            }
        }
    }

    #[test]
    fn off_sphere_rejected() {
        assert!(gr24_plane([0.2, 0.0, 0.0], [1.0, 0.0, 0.0]).is_err());
    }
}
