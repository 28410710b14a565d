//! Hermitian valuations C_{k,l} and U_{k,p}, Kazarnovskii's pseudovolume,
//! Klain functions, the Λ operator, duality and the cosine transform.

mod checks;
mod klain;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bodies::{external_angle, external_angle_exact, Body, Polytope};
use crate::error::{arg_err, Result};
use crate::estimate::{monte_carlo, Estimate};
use crate::geomlin::{sample_affine_flat, ComplexStructure, GrassmannianKind, Subspace};
use crate::intrinsic::{intrinsic_volume, kappa, ANGLE_SAMPLES};
use crate::stream::RandomStream;

pub use checks::{
    gram_rank, kazarnovskii_span, verify_lefschetz, verify_u_equals_dual_c, GramReport, RatioReport,
    SpanReport,
};
pub use klain::{
    complex_cosine_transform, cosine_transform, duality, klain_function, klain_function_with_probe, lambda_op,
    probe_polytope, KlainFunction, Probe,
};

/// Frames drawn for C_{k,n}, whose Grassmannian is a single point.
const POINT_GRASSMANNIAN_SAMPLES: usize = 16;

type EvalFn = dyn Fn(&Body, &mut RandomStream) -> Result<Estimate> + Send + Sync;

/// A named, homogeneous valuation with its evaluation procedure.
#[derive(Clone)]
pub struct ValuationEvaluator {
    name: String,
    degree: usize,
    ambient: usize,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for ValuationEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValuationEvaluator")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("ambient", &self.ambient)
            .finish()
    }
}

impl ValuationEvaluator {
    pub fn new<F>(name: impl Into<String>, degree: usize, ambient: usize, eval: F) -> Self
    where
        F: Fn(&Body, &mut RandomStream) -> Result<Estimate> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            degree,
            ambient,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn evaluate(&self, body: &Body, rng: &mut RandomStream) -> Result<Estimate> {
        if body.ambient_dim() != self.ambient {
            return arg_err(format!(
                "{} acts on ℝ^{}, body lives in ℝ^{}",
                self.name,
                self.ambient,
                body.ambient_dim()
            ));
        }
        (self.eval)(body, rng)
    }

    /// The intrinsic volume V_j on ℝ^d.
    pub fn intrinsic(j: usize, d: usize) -> Result<Self> {
        if j > d {
            return arg_err(format!("V_{j} requested in ℝ^{d}"));
        }
        Ok(Self::new(format!("V_{j}"), j, d, move |b, r| intrinsic_volume(b, j, r)))
    }

    /// Euler characteristic V₀.
    pub fn euler(d: usize) -> Self {
        Self::new("chi", 0, d, |b, r| intrinsic_volume(b, 0, r))
    }

    pub fn volume(d: usize) -> Self {
        Self::new("vol", d, d, move |b, r| intrinsic_volume(b, d, r))
    }

    pub fn c(k: usize, l: usize, n: usize, samples: usize) -> Result<Self> {
        check_c_indices(k, l, n)?;
        let j = ComplexStructure::new(n);
        Ok(Self::new(format!("C_{{{k},{l}}}"), k, 2 * n, move |b, r| {
            eval_c(k, l, b, &j, r, samples)
        }))
    }

    pub fn u(k: usize, p: usize, n: usize, samples: usize) -> Result<Self> {
        check_u_indices(k, p, n)?;
        let j = ComplexStructure::new(n);
        Ok(Self::new(format!("U_{{{k},{p}}}"), k, 2 * n, move |b, r| {
            eval_u(k, p, b, &j, r, samples)
        }))
    }

    /// Mean k-th intrinsic volume of projections onto planes from `kind`.
    pub fn projection_mean(name: impl Into<String>, kind: GrassmannianKind, k: usize, samples: usize) -> Result<Self> {
        if k > kind.real_dim() {
            return arg_err(format!("V_{k} of projections onto {}-planes", kind.real_dim()));
        }
        Ok(Self::new(name, k, kind.ambient(), move |b, r| {
            projection_mean(&kind, k, b, r, samples)
        }))
    }

    pub fn kazarnovskii(n: usize) -> Result<Self> {
        if n == 0 || n > 3 {
            return arg_err(format!("pseudovolume is supported for 1 ≤ n ≤ 3, got n = {n}"));
        }
        let j = ComplexStructure::new(n);
        Ok(Self::new("kaz", n, 2 * n, move |b, r| match b {
            Body::Empty { .. } => Ok(Estimate::exact(0.0)),
            Body::Polytope(p) => kazarnovskii(p, &j, r),
            _ => arg_err("pseudovolume is evaluated on polytopes only"),
        }))
    }
}

fn check_c_indices(k: usize, l: usize, n: usize) -> Result<()> {
    if n == 0 || k > 2 * n || l > n || k > 2 * l {
        return arg_err(format!("C_{{{k},{l}}} needs 0 ≤ k ≤ 2n, k/2 ≤ l ≤ n (n = {n})"));
    }
    Ok(())
}

fn check_u_indices(k: usize, p: usize, n: usize) -> Result<()> {
    if n == 0 || k > 2 * n || 2 * p > k {
        return arg_err(format!("U_{{{k},{p}}} needs 0 ≤ 2p ≤ k ≤ 2n (n = {n})"));
    }
    Ok(())
}

/// E_F V_k(Pr_F K) over F drawn from `kind`.
pub fn projection_mean(
    kind: &GrassmannianKind,
    k: usize,
    body: &Body,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    if body.ambient_dim() != kind.ambient() {
        return arg_err("projection planes and body live in different spaces");
    }
    if body.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    if k == 0 {
        return Ok(Estimate::exact(1.0));
    }
    monte_carlo(rng, samples, |s| {
        let f = kind.sample(s)?;
        let proj = body.project(&f)?;
        Ok(intrinsic_volume(&proj, k, s)?.value)
    })
}

/// C_{k,l}(K) = ∫_{ᶜGr_{l,n}} V_k(Pr_F K) dF, probability Haar measure.
pub fn eval_c(
    k: usize,
    l: usize,
    body: &Body,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    let n = j.n;
    check_c_indices(k, l, n)?;
    let samples = if l == n { samples.min(POINT_GRASSMANNIAN_SAMPLES) } else { samples };
    projection_mean(&GrassmannianKind::Complex { dim: l, n }, k, body, rng, samples)
}

/// U_{k,p}(K) = ∫_{ᶜGr_{p,n}} dF ∫_{x∈F} V_{k−2p}(K ∩ (x + F^⟂)) dx, with x
/// drawn uniformly from the bounding box of Pr_F K in F's frame.
pub fn eval_u(
    k: usize,
    p: usize,
    body: &Body,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    let n = j.n;
    check_u_indices(k, p, n)?;
    if body.ambient_dim() != 2 * n {
        return arg_err(format!("U_{{{k},{p}}} acts on ℝ^{}, body lives in ℝ^{}", 2 * n, body.ambient_dim()));
    }
    if body.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    if p == 0 {
        return intrinsic_volume(body, k, rng);
    }
    let kind = GrassmannianKind::Complex { dim: p, n };
    let r = k - 2 * p;
    monte_carlo(rng, samples, |s| {
        let flat = sample_affine_flat(&kind, body, s)?;
        if flat.weight == 0.0 {
            return Ok(0.0);
        }
        let v = match body {
            Body::Parallel { .. } if r == 0 => {
                // The flat meets K iff its foot point lies in Pr_F K.
                let normal = flat.direction.complement();
                let proj = body.project(&normal)?;
                if proj.distance(&normal.coords(&flat.offset))? == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let sec = body.section(&flat)?;
                if sec.is_empty() {
                    0.0
                } else {
                    intrinsic_volume(&sec, r, s)?.value
                }
            }
        };
        Ok(flat.weight * v)
    })
}

/// vol_{2n}(D_L + J·D_L) = κ_n²·|det[L | JL]| for an n-plane L; zero when
/// L ∩ JL ≠ 0 since the sum is then lower-dimensional.
pub fn kazarnovskii_face_weight(l: &Subspace, j: &ComplexStructure) -> Result<f64> {
    let n = j.n;
    if l.ambient_dim() != 2 * n || l.dim() != n {
        return arg_err(format!("face weight needs an {n}-plane in ℝ^{}", 2 * n));
    }
    let jl = j.matrix() * l.frame();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (2 * n, n)).copy_from(l.frame());
    m.view_mut((0, n), (2 * n, n)).copy_from(&jl);
    Ok(kappa(n).powi(2) * m.determinant().abs())
}

/// Hit-or-miss estimate of vol(D_L + J·D_L) over the box [−2, 2]^{2n}.
pub fn kazarnovskii_face_weight_mc(
    l: &Subspace,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    use rand::Rng;
    let n = j.n;
    if l.ambient_dim() != 2 * n || l.dim() != n {
        return arg_err(format!("face weight needs an {n}-plane in ℝ^{}", 2 * n));
    }
    let jl = j.matrix() * l.frame();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (2 * n, n)).copy_from(l.frame());
    m.view_mut((0, n), (2 * n, n)).copy_from(&jl);
    let svd = m.clone().svd(false, false);
    let smin = svd.singular_values.min();
    if smin < 1e-12 {
        return Ok(Estimate::exact(0.0));
    }
    let Some(inv) = m.try_inverse() else {
        return Ok(Estimate::exact(0.0));
    };
    let box_vol = 4f64.powi(2 * n as i32);
    let est = monte_carlo(rng, samples, |s| {
        let x = nalgebra::DVector::from_fn(2 * n, |_, _| s.random_range(-2.0..2.0));
        let c = &inv * x;
        let a = c.rows(0, n).norm();
        let b = c.rows(n, n).norm();
        Ok(if a <= 1.0 && b <= 1.0 { box_vol } else { 0.0 })
    })?;
    Ok(est)
}

/// P(A) = Σ_F f(F)·γ(F)·vol_n(F) over the n-faces of A, with κ = 1.
pub fn kazarnovskii(p: &Polytope, j: &ComplexStructure, rng: &mut RandomStream) -> Result<Estimate> {
    let n = j.n;
    if p.ambient_dim() != 2 * n {
        return arg_err(format!("pseudovolume on ℂ^{n} needs a polytope in ℝ^{}", 2 * n));
    }
    let m = p.dim();
    if m < n {
        return Ok(Estimate::exact(0.0));
    }
    let mut exact = 0.0;
    let mut sampled = Estimate::exact(0.0);
    for face in p.faces(n)? {
        let w = kazarnovskii_face_weight(&face.direction, j)?;
        if w == 0.0 {
            continue;
        }
        let vol = p.face_volume(&face.vertex_ids)?;
        if m == n {
            exact += w * vol;
            continue;
        }
        match external_angle_exact(p, &face)? {
            Some(g) => exact += g * w * vol,
            None => {
                let mut s = rng.fork();
                let g = external_angle(p, &face, &mut s, ANGLE_SAMPLES)?;
                let samples = g.samples;
                let seed = g.seed;
                sampled = sampled.add(g.scale(w * vol));
                sampled.samples = samples;
                sampled.seed = seed;
            }
        }
    }
    Ok(Estimate {
        value: exact + sampled.value,
        ..sampled
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{shapes, split_polytope};
    use crate::geomlin::{sample_subspace, sample_unitary_real};
    use crate::intrinsic::ball_intrinsic_volume;
    use nalgebra::DVector;

    fn agree(a: &Estimate, b: &Estimate, nsigma: f64) -> bool {
        a.agrees_with(b, nsigma)
    }

    #[test]
    fn c_degree_zero_is_euler_characteristic() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(1, 0);
        let k = Body::Polytope(shapes::cube(4, -1.0, 1.0));
        for l in 0..=2 {
            let c = eval_c(0, l, &k, &j, &mut rng, 100).unwrap();
            assert_eq!(c.value, 1.0);
            assert!(c.is_exact());
        }
        let e = eval_c(0, 1, &Body::Empty { ambient: 4 }, &j, &mut rng, 100).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn c_top_level_is_intrinsic_volume() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(2, 0);
        let k = Body::Polytope(shapes::gaussian_polytope(9, 4, &mut rng));
        for deg in 1..=4 {
            let c = eval_c(deg, 2, &k, &j, &mut rng, 100).unwrap();
            let v = intrinsic_volume(&k, deg, &mut rng).unwrap();
            assert!(agree(&c, &v, 3.0), "k={deg}: {c:?} vs {v:?}");
        }
    }

    #[test]
    fn c_index_errors() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(3, 0);
        let k = Body::unit_ball(4);
        assert!(eval_c(3, 1, &k, &j, &mut rng, 10).is_err());
        assert!(eval_c(1, 3, &k, &j, &mut rng, 10).is_err());
        assert!(eval_u(3, 2, &k, &j, &mut rng, 10).is_err());
        assert!(eval_u(5, 0, &k, &j, &mut rng, 10).is_err());
    }

    #[test]
    fn c_on_ball_is_exact_disk_area() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(4, 0);
        let c = eval_c(2, 1, &Body::unit_ball(4), &j, &mut rng, 50).unwrap();
        assert!((c.value - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn c_unitary_invariance() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(5, 0);
        let p = shapes::gaussian_polytope(8, 4, &mut rng);
        let u = sample_unitary_real(&j, &mut rng).unwrap();
        let q = p.affine_image(&u, &DVector::zeros(4)).unwrap();
        let a = eval_c(2, 1, &Body::Polytope(p), &j, &mut rng, 4000).unwrap();
        let b = eval_c(2, 1, &Body::Polytope(q), &j, &mut rng, 4000).unwrap();
        assert!(agree(&a, &b, 3.0), "{a:?} {b:?}");
    }

    #[test]
    fn u_with_p_zero_is_intrinsic_volume() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(6, 0);
        let k = Body::Polytope(shapes::cube(4, 0.0, 1.0));
        for deg in 0..=4 {
            let u = eval_u(deg, 0, &k, &j, &mut rng, 10).unwrap();
            let v = intrinsic_volume(&k, deg, &mut rng).unwrap();
            assert!(u.is_exact());
            assert_eq!(u.value, v.value);
        }
        assert_eq!(eval_u(2, 1, &Body::Empty { ambient: 4 }, &j, &mut rng, 10).unwrap().value, 0.0);
    }

    #[test]
    fn u_of_complex_flats_matches_projection_area() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(7, 0);
        let k = Body::Polytope(shapes::gaussian_polytope(10, 4, &mut rng));
        let u = eval_u(2, 1, &k, &j, &mut rng, 20_000).unwrap();
        let c = eval_c(2, 1, &k, &j, &mut rng, 20_000).unwrap();
        assert!(agree(&u, &c, 3.0), "{u:?} {c:?}");
    }

    #[test]
    fn u_of_ball_matches_closed_form() {
        // U_{4,2}(B) is the volume: every point flat meets B with probability vol/box
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(8, 0);
        let u = eval_u(4, 2, &Body::unit_ball(4), &j, &mut rng, 20_000).unwrap();
        let vol = ball_intrinsic_volume(4, 1.0, 4);
        assert!((u.value - vol).abs() < 3.0 * u.std_error, "{u:?} {vol}");
    }

    #[test]
    fn u_parallel_body_uses_foot_point() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(9, 0);
        let seg = shapes::segment(&DVector::zeros(4), &DVector::from_column_slice(&[1.0, 0.5, 0.0, 0.2]));
        let k = Body::parallel(seg, 0.3).unwrap();
        let u = eval_u(2, 1, &k, &j, &mut rng, 20_000).unwrap();
        let c = eval_c(2, 1, &k, &j, &mut rng, 20_000).unwrap();
        assert!(agree(&u, &c, 3.0), "{u:?} {c:?}");
    }

    #[test]
    fn u_translation_invariance_and_homogeneity() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(10, 0);
        let p = shapes::gaussian_polytope(8, 4, &mut rng);
        let k = Body::Polytope(p.clone());
        let t = Body::Polytope(p.translate(&DVector::from_column_slice(&[3.0, -1.0, 2.0, 0.5])).unwrap());
        let d = Body::Polytope(p.scale_by(1.7).unwrap());
        let a = eval_u(3, 1, &k, &j, &mut rng, 6000).unwrap();
        let b = eval_u(3, 1, &t, &j, &mut rng, 6000).unwrap();
        let c = eval_u(3, 1, &d, &j, &mut rng, 6000).unwrap();
        assert!(agree(&a, &b, 3.0), "{a:?} {b:?}");
        assert!(agree(&a.scale(1.7f64.powi(3)), &c, 3.0), "{a:?} {c:?}");
    }

    #[test]
    fn face_weight_closed_form_matches_hit_or_miss() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(11, 0);
        for _ in 0..3 {
            let l = sample_subspace(2, 4, &mut rng).unwrap();
            let exact = kazarnovskii_face_weight(&l, &j).unwrap();
            let mc = kazarnovskii_face_weight_mc(&l, &j, &mut rng, 40_000).unwrap();
            assert!((mc.value - exact).abs() < 3.5 * mc.std_error, "{mc:?} {exact}");
        }
        // Lagrangian planes give the product of two unit disks
        let lag = Subspace::coordinate(4, &[0, 1]).unwrap();
        assert!((kazarnovskii_face_weight(&lag, &j).unwrap() - kappa(2).powi(2)).abs() < 1e-12);
        let complex_line = Subspace::coordinate(4, &[0, 2]).unwrap();
        assert_eq!(kazarnovskii_face_weight(&complex_line, &j).unwrap(), 0.0);
    }

    #[test]
    fn kazarnovskii_point_and_lower_faces() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(12, 0);
        let pt = shapes::point(&DVector::zeros(4));
        assert_eq!(kazarnovskii(&pt, &j, &mut rng).unwrap().value, 0.0);
        let square = Polytope::from_points(&[
            DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.0]),
            DVector::from_column_slice(&[2.0, 0.0, 0.0, 0.0]),
            DVector::from_column_slice(&[0.0, 2.0, 0.0, 0.0]),
            DVector::from_column_slice(&[2.0, 2.0, 0.0, 0.0]),
        ])
        .unwrap();
        let v = kazarnovskii(&square, &j, &mut rng).unwrap();
        assert!((v.value - 4.0 * kappa(2).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn kazarnovskii_valuation_properties() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(13, 0);
        let p = shapes::gaussian_polytope(10, 4, &mut rng);
        let a = kazarnovskii(&p, &j, &mut rng).unwrap();
        let t = p.translate(&DVector::from_column_slice(&[1.0, 2.0, -3.0, 0.5])).unwrap();
        assert!(agree(&a, &kazarnovskii(&t, &j, &mut rng).unwrap(), 3.0));
        let d = p.scale_by(1.3).unwrap();
        assert!(agree(&a.scale(1.69), &kazarnovskii(&d, &j, &mut rng).unwrap(), 3.0));
        let normal = DVector::from_column_slice(&[0.3, -0.2, 0.9, 0.1]);
        let (lo, hi, cut) = split_polytope(&p, &normal, 0.05).unwrap();
        let (lo, hi, cut) = (lo.unwrap(), hi.unwrap(), cut.unwrap());
        let sum = kazarnovskii(&lo, &j, &mut rng)
            .unwrap()
            .add(kazarnovskii(&hi, &j, &mut rng).unwrap())
            .sub(kazarnovskii(&cut, &j, &mut rng).unwrap());
        assert!(agree(&a, &sum, 3.0), "{a:?} {sum:?}");
    }

    #[test]
    fn kazarnovskii_unitary_invariance() {
        let j = ComplexStructure::new(2);
        let mut rng = RandomStream::new(14, 0);
        let p = shapes::gaussian_polytope(9, 4, &mut rng);
        let u = sample_unitary_real(&j, &mut rng).unwrap();
        let q = p.affine_image(&u, &DVector::zeros(4)).unwrap();
        let a = kazarnovskii(&p, &j, &mut rng).unwrap();
        let b = kazarnovskii(&q, &j, &mut rng).unwrap();
        assert!(agree(&a, &b, 3.0), "{a:?} {b:?}");
    }
}
