use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ComplexStructure, Subspace};
use crate::error::{arg_err, Result};

/// det[A(k)·A(k)ᵗ] for a real k-plane E ⊂ ℝ^{2n}, k even and k ≤ n.
///
/// Frame coordinates are taken in the ordered basis
/// e₁, …, e_k, i·e₁, −i·e₂, i·e₃, …, (−1)^{k+1} i·e_k, (remaining vectors),
/// and row j of A(k) is X_{2j−1} + i·X_{2j} for rows X of that coordinate
/// matrix.
pub fn strichartz_hwv(e: &Subspace, j: &ComplexStructure) -> Result<Complex64> {
    let n = j.n;
    let k = e.dim();
    if e.ambient_dim() != 2 * n {
        return arg_err("subspace is not in the realified ℂⁿ");
    }
    if k % 2 != 0 || k > n {
        return arg_err(format!("need even k ≤ n, got k={k}, n={n}"));
    }
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let f = e.frame();
    let row = |r: usize| -> Vec<f64> {
        if r < k {
            f.row(r).iter().copied().collect()
        } else {
            let idx = r - k;
            let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
            f.row(n + idx).iter().map(|v| sign * v).collect()
        }
    };
    let a = DMatrix::from_fn(k, k, |r, c| Complex64::new(row(2 * r)[c], row(2 * r + 1)[c]));
    Ok((&a * a.transpose()).determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomlin::{sample_complex_subspace, sample_subspace};
    use crate::stream::RandomStream;

    #[test]
    fn base_point_value() {
        for n in 2..=6 {
            let j = ComplexStructure::new(n);
            for k in (2..=n).step_by(2) {
                // span_ℂ{e₁, e₃, …, e_{k−1}}
                let axes: Vec<usize> = (0..k / 2).map(|t| 2 * t).chain((0..k / 2).map(|t| n + 2 * t)).collect();
                let e0 = Subspace::coordinate(2 * n, &axes).unwrap();
                let v = strichartz_hwv(&e0, &j).unwrap();
                assert!((v.re - 1.0).abs() < 1e-12 && v.im.abs() < 1e-12, "n={n} k={k} {v}");
            }
        }
    }

    #[test]
    fn frame_independent() {
        let j = ComplexStructure::new(3);
        let mut rng = RandomStream::new(21, 0);
        for _ in 0..50 {
            let e = sample_subspace(2, 6, &mut rng).unwrap();
            let rot = sample_subspace(2, 2, &mut rng).unwrap();
            let other = Subspace::from_frame(e.frame() * rot.frame()).unwrap();
            let (a, b) = (strichartz_hwv(&e, &j).unwrap(), strichartz_hwv(&other, &j).unwrap());
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn real_and_nonnegative_on_complex_planes() {
        let mut rng = RandomStream::new(22, 0);
        for n in [2, 3] {
            let j = ComplexStructure::new(n);
            for _ in 0..200 {
                let e = sample_complex_subspace(1, &j, &mut rng).unwrap();
                let v = strichartz_hwv(&e, &j).unwrap();
                assert!(v.im.abs() < 1e-9 && v.re > -1e-9, "{v}");
            }
        }
    }

    #[test]
    fn rejects_odd_or_large_k() {
        let j = ComplexStructure::new(2);
        assert!(strichartz_hwv(&Subspace::coordinate(4, &[0]).unwrap(), &j).is_err());
        assert!(strichartz_hwv(&Subspace::coordinate(4, &[0, 1, 2]).unwrap(), &j).is_err());
    }
}
