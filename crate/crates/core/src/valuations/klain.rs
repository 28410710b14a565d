//! Klain functions of even valuations and the operators acting on them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ValuationEvaluator;
use crate::bodies::{Body, Polytope};
use crate::error::{arg_err, num_err, Result};
use crate::estimate::{monte_carlo, Estimate};
use crate::fit::weighted_least_squares;
use crate::geomlin::{cosine_angle, sample_subspace, GrassmannianKind, Subspace};
use crate::stream::RandomStream;

/// Largest acceptable condition number of the Λ polynomial fit.
const LAMBDA_MAX_CONDITION: f64 = 1e8;

type KlainFn = dyn Fn(&Subspace, &mut RandomStream) -> Result<Estimate> + Send + Sync;

/// f on Gr_k(ℝ^d) with φ|_E = f(E)·vol_E.
#[derive(Clone)]
pub struct KlainFunction {
    degree: usize,
    ambient: usize,
    eval: Arc<KlainFn>,
}

impl fmt::Debug for KlainFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KlainFunction")
            .field("degree", &self.degree)
            .field("ambient", &self.ambient)
            .finish()
    }
}

impl KlainFunction {
    pub fn new<F>(degree: usize, ambient: usize, eval: F) -> Self
    where
        F: Fn(&Subspace, &mut RandomStream) -> Result<Estimate> + Send + Sync + 'static,
    {
        Self {
            degree,
            ambient,
            eval: Arc::new(eval),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn eval(&self, e: &Subspace, rng: &mut RandomStream) -> Result<Estimate> {
        if e.ambient_dim() != self.ambient || e.dim() != self.degree {
            return arg_err(format!(
                "Klain function lives on {}-planes of ℝ^{}, got a {}-plane of ℝ^{}",
                self.degree,
                self.ambient,
                e.dim(),
                e.ambient_dim()
            ));
        }
        (self.eval)(e, rng)
    }
}

/// Full-dimensional body placed inside a plane to read off a Klain value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    /// Unit cube on the plane's canonical frame, volume 1.
    Cube,
    /// Cross-polytope conv{±e_i}, volume 2^k/k!.
    CrossPolytope,
}

/// The probe inside `e` (on its canonical frame) with its k-volume.
pub fn probe_polytope(e: &Subspace, probe: Probe) -> Result<(Polytope, f64)> {
    let e = e.canonical();
    let k = e.dim();
    let d = e.ambient_dim();
    let frame = e.frame();
    let mut pts: Vec<DVector<f64>> = Vec::new();
    let vol = match probe {
        Probe::Cube => {
            for mask in 0..(1usize << k) {
                let mut x = DVector::zeros(d);
                for i in 0..k {
                    if mask & (1 << i) != 0 {
                        x += frame.column(i);
                    }
                }
                pts.push(x);
            }
            1.0
        }
        Probe::CrossPolytope => {
            if k == 0 {
                pts.push(DVector::zeros(d));
            }
            for i in 0..k {
                pts.push(frame.column(i).into_owned());
                pts.push(-frame.column(i).into_owned());
            }
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            2f64.powi(k as i32) / fact
        }
    };
    Ok((Polytope::from_points(&pts)?, vol))
}

/// Klain function read off with the unit-cube probe.
pub fn klain_function(phi: &ValuationEvaluator) -> KlainFunction {
    klain_function_with_probe(phi, Probe::Cube)
}

pub fn klain_function_with_probe(phi: &ValuationEvaluator, probe: Probe) -> KlainFunction {
    let phi = phi.clone();
    KlainFunction::new(phi.degree(), phi.ambient_dim(), move |e, rng| {
        let (q, vol) = probe_polytope(e, probe)?;
        let v = phi.evaluate(&Body::Polytope(q), rng)?;
        if !v.value.is_finite() {
            return num_err(format!("{} is not finite on the probe", phi.name()));
        }
        Ok(v.scale(1.0 / vol))
    })
}

/// Chebyshev nodes on (0, hi).
fn chebyshev_nodes(count: usize, hi: f64) -> Vec<f64> {
    (0..count)
        .map(|i| hi * 0.5 * (1.0 + ((2 * i + 1) as f64 * PI / (2 * count) as f64).cos()))
        .collect()
}

/// (Λφ)(K) = d/dε φ(K + εD) at ε = 0, from a variance-weighted polynomial
/// fit of degree ≤ deg φ through d+1 Chebyshev nodes. All nodes reuse one
/// random stream so their errors are correlated and largely cancel.
pub fn lambda_op(phi: &ValuationEvaluator, body: &Body, rng: &mut RandomStream) -> Result<Estimate> {
    let d = phi.ambient_dim();
    if body.ambient_dim() != d {
        return arg_err("Λ: body and valuation live in different spaces");
    }
    if !matches!(body, Body::Polytope(_) | Body::Ball { .. } | Body::Parallel { .. }) {
        return Ok(Estimate::exact(0.0));
    }
    let degree = phi.degree().min(d);
    let base = rng.fork();
    if degree == 0 {
        return Ok(Estimate::exact(0.0));
    }
    let (lo, hi) = body.bounding_box();
    let width = (&hi - &lo).amax() * 0.5;
    let eps_max = if width > 1e-9 { width } else { 1.0 };
    let nodes = chebyshev_nodes(d + 1, eps_max);
    let mut ys = Vec::with_capacity(nodes.len());
    for &eps in &nodes {
        let mut s = base.clone();
        ys.push(phi.evaluate(&body.add_ball(eps)?, &mut s)?);
    }
    // Powers of ε/ε_max keep the design well scaled.
    let x = DMatrix::from_fn(nodes.len(), degree + 1, |i, p| (nodes[i] / eps_max).powi(p as i32));
    let y = DVector::from_iterator(ys.len(), ys.iter().map(|e| e.value));
    let all_exact = ys.iter().all(|e| e.is_exact());
    let sigma = if all_exact {
        DVector::from_element(ys.len(), 1.0)
    } else {
        DVector::from_iterator(ys.len(), ys.iter().map(|e| e.std_error))
    };
    let fit = weighted_least_squares(&x, &y, &sigma)?;
    if fit.condition > LAMBDA_MAX_CONDITION {
        return num_err(format!("Λ fit condition number {:.3e} exceeds {LAMBDA_MAX_CONDITION:.0e}", fit.condition));
    }
    let deriv = fit.coefficients[1] / eps_max;
    if all_exact {
        return Ok(Estimate::exact(deriv));
    }
    let sample = ys.iter().find(|e| !e.is_exact()).expect("some node is sampled");
    Ok(Estimate {
        value: deriv,
        std_error: fit.sigma(1) / eps_max,
        samples: sample.samples,
        seed: sample.seed,
    })
}

impl ValuationEvaluator {
    /// Λφ as a valuation of degree deg φ − 1.
    pub fn lambda(&self) -> Result<ValuationEvaluator> {
        if self.degree() == 0 {
            return arg_err("Λ of a degree-0 valuation is zero and has no degree");
        }
        let phi = self.clone();
        Ok(ValuationEvaluator::new(
            format!("Lambda({})", self.name()),
            self.degree() - 1,
            self.ambient_dim(),
            move |b, r| lambda_op(&phi, b, r),
        ))
    }
}

/// 𝔻f: E ↦ f(E^⟂).
pub fn duality(f: &KlainFunction) -> KlainFunction {
    let f = f.clone();
    let d = f.ambient_dim();
    KlainFunction::new(d - f.degree(), d, move |e, rng| f.eval(&e.complement(), rng))
}

/// (T f)(F) = ∫_{Gr_i} |cos(E,F)| f(E) dE for F in Gr_j, i = deg f.
pub fn cosine_transform(f: &KlainFunction, j: usize, samples: usize) -> Result<KlainFunction> {
    let d = f.ambient_dim();
    if j > d {
        return arg_err(format!("cosine transform onto {j}-planes of ℝ^{d}"));
    }
    let f = f.clone();
    let i = f.degree();
    Ok(KlainFunction::new(j, d, move |plane, rng| {
        monte_carlo(rng, samples, |s| {
            let e = sample_subspace(i, d, s)?;
            let v = f.eval(&e, s)?;
            Ok(cosine_angle(&e, plane)? * v.value)
        })
    }))
}

/// Cosine transform of the Haar measure carried by ᶜGr_{l,n}:
/// F ↦ ∫_{ᶜGr_l} |cos(F,E)| dE for F in Gr_j(ℝ^{2n}).
pub fn complex_cosine_transform(l: usize, n: usize, j: usize, samples: usize) -> Result<KlainFunction> {
    if l > n || j > 2 * n {
        return arg_err(format!("complex {l}-planes and {j}-planes in ℂ^{n}"));
    }
    let kind = GrassmannianKind::Complex { dim: l, n };
    Ok(KlainFunction::new(j, 2 * n, move |plane, rng| {
        monte_carlo(rng, samples, |s| cosine_angle(plane, &kind.sample(s)?))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::shapes;
    use crate::geomlin::{sample_unitary_real, ComplexStructure};
    use crate::intrinsic::kappa;

    #[test]
    fn intrinsic_volume_klain_is_one() {
        let mut rng = RandomStream::new(1, 0);
        for k in 0..=4 {
            let f = klain_function(&ValuationEvaluator::intrinsic(k, 4).unwrap());
            for _ in 0..5 {
                let e = sample_subspace(k, 4, &mut rng).unwrap();
                let v = f.eval(&e, &mut rng).unwrap();
                assert!((v.value - 1.0).abs() < 1e-9, "k={k}: {v:?}");
            }
        }
        let vol = klain_function(&ValuationEvaluator::volume(3));
        assert!((vol.eval(&Subspace::full(3), &mut rng).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probes_agree() {
        let mut rng = RandomStream::new(2, 0);
        let phi = ValuationEvaluator::c(2, 1, 2, 4000).unwrap();
        let a = klain_function_with_probe(&phi, Probe::Cube);
        let b = klain_function_with_probe(&phi, Probe::CrossPolytope);
        for _ in 0..3 {
            let e = sample_subspace(2, 4, &mut rng).unwrap();
            let x = a.eval(&e, &mut rng).unwrap();
            let y = b.eval(&e, &mut rng).unwrap();
            assert!(x.agrees_with(&y, 3.0), "{x:?} {y:?}");
        }
    }

    #[test]
    fn klain_rejects_wrong_dimension() {
        let mut rng = RandomStream::new(3, 0);
        let f = klain_function(&ValuationEvaluator::intrinsic(2, 4).unwrap());
        assert!(f.eval(&sample_subspace(3, 4, &mut rng).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn lambda_of_euler_characteristic_vanishes() {
        let mut rng = RandomStream::new(4, 0);
        let k = Body::Polytope(shapes::cube(4, 0.0, 1.0));
        let v = lambda_op(&ValuationEvaluator::euler(4), &k, &mut rng).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn lambda_of_volume_on_balls() {
        let mut rng = RandomStream::new(5, 0);
        for d in 2..=4 {
            let r = 0.7;
            let v = lambda_op(&ValuationEvaluator::volume(d), &Body::ball(DVector::zeros(d), r).unwrap(), &mut rng)
                .unwrap();
            let expected = d as f64 * kappa(d) * r.powi(d as i32 - 1);
            assert!((v.value - expected).abs() < 1e-9 * expected, "d={d}: {} vs {expected}", v.value);
        }
    }

    #[test]
    fn lambda_of_volume_on_cube_is_surface_area() {
        let mut rng = RandomStream::new(6, 0);
        let k = Body::Polytope(shapes::cube(3, 0.0, 2.0));
        let v = lambda_op(&ValuationEvaluator::volume(3), &k, &mut rng).unwrap();
        assert!((v.value - 24.0).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn lambda_lowers_degree() {
        let mut rng = RandomStream::new(7, 0);
        let p = shapes::gaussian_polytope(8, 4, &mut rng);
        let phi = ValuationEvaluator::c(2, 1, 2, 3000).unwrap();
        let lam = phi.lambda().unwrap();
        assert_eq!(lam.degree(), 1);
        let a = lam.evaluate(&Body::Polytope(p.clone()), &mut rng).unwrap();
        let b = lam.evaluate(&Body::Polytope(p.scale_by(2.0).unwrap()), &mut rng).unwrap();
        assert!(a.scale(2.0).agrees_with(&b, 3.0), "{a:?} {b:?}");
    }

    #[test]
    fn duality_of_euler_is_volume() {
        let mut rng = RandomStream::new(8, 0);
        let chi = klain_function(&ValuationEvaluator::euler(4));
        let dual = duality(&chi);
        assert_eq!(dual.degree(), 4);
        let vol = klain_function(&ValuationEvaluator::volume(4));
        let full = Subspace::full(4);
        let a = dual.eval(&full, &mut rng).unwrap();
        let b = vol.eval(&full, &mut rng).unwrap();
        assert!((a.value - b.value).abs() < 1e-12 && (a.value - 1.0).abs() < 1e-12);
    }

    fn smooth_function(k: usize, d: usize) -> KlainFunction {
        let a = DMatrix::from_fn(d, d, |i, j| ((i + 2 * j) as f64).sin());
        KlainFunction::new(k, d, move |e, _| {
            let p = e.projector();
            Ok(Estimate::exact((&p * &a).trace() + (&p * &a * &p * &a).trace()))
        })
    }

    #[test]
    fn duality_is_an_involution() {
        let mut rng = RandomStream::new(9, 0);
        for k in 0..=4 {
            let f = smooth_function(k, 4);
            let dd = duality(&duality(&f));
            for _ in 0..20 {
                let e = sample_subspace(k, 4, &mut rng).unwrap();
                let a = f.eval(&e, &mut rng).unwrap().value;
                let b = dd.eval(&e, &mut rng).unwrap().value;
                assert!((a - b).abs() < 1e-12, "k={k}: {a} {b}");
            }
        }
    }

    #[test]
    fn duality_commutes_with_orthogonal_maps() {
        let mut rng = RandomStream::new(10, 0);
        let g = sample_subspace(4, 4, &mut rng).unwrap().frame().clone();
        let f = smooth_function(1, 4);
        let gm = g.clone();
        let fg = {
            let f = f.clone();
            KlainFunction::new(1, 4, move |e, r| f.eval(&e.transform(&gm)?, r))
        };
        let lhs = duality(&fg);
        let df = duality(&f);
        for _ in 0..50 {
            let e = sample_subspace(3, 4, &mut rng).unwrap();
            let a = lhs.eval(&e, &mut rng).unwrap().value;
            let b = df.eval(&e.transform(&g).unwrap(), &mut rng).unwrap().value;
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn cosine_transform_of_constant_is_constant() {
        let mut rng = RandomStream::new(11, 0);
        let one = KlainFunction::new(2, 4, |_, _| Ok(Estimate::exact(1.0)));
        let t = cosine_transform(&one, 2, 20_000).unwrap();
        let first = t.eval(&sample_subspace(2, 4, &mut rng).unwrap(), &mut rng).unwrap();
        for _ in 0..3 {
            let v = t.eval(&sample_subspace(2, 4, &mut rng).unwrap(), &mut rng).unwrap();
            assert!(v.agrees_with(&first, 3.5), "{v:?} {first:?}");
        }
    }

    #[test]
    fn cosine_transform_is_selfadjoint() {
        // ⟨Tf, g⟩ and ⟨f, Tg⟩ as one double integral over independent E, F
        let mut rng = RandomStream::new(12, 0);
        let f = smooth_function(2, 4);
        let gm = DMatrix::from_fn(4, 4, |i, j| ((3 * i + j) as f64).cos());
        let g = KlainFunction::new(2, 4, move |e, _| Ok(Estimate::exact((e.projector() * &gm).trace().powi(2))));
        let (f1, g1) = (f.clone(), g.clone());
        let lhs = monte_carlo(&mut rng, 40_000, move |s| {
            let e = sample_subspace(2, 4, s)?;
            let h = sample_subspace(2, 4, s)?;
            Ok(cosine_angle(&e, &h)? * f1.eval(&e, s)?.value * g1.eval(&h, s)?.value)
        })
        .unwrap();
        let rhs = monte_carlo(&mut rng, 40_000, move |s| {
            let e = sample_subspace(2, 4, s)?;
            let h = sample_subspace(2, 4, s)?;
            Ok(cosine_angle(&h, &e)? * f.eval(&h, s)?.value * g.eval(&e, s)?.value)
        })
        .unwrap();
        assert!(lhs.agrees_with(&rhs, 3.0), "{lhs:?} {rhs:?}");
    }

    #[test]
    fn cosine_transform_commutes_with_rotation() {
        let mut rng = RandomStream::new(13, 0);
        let f = smooth_function(2, 4);
        let t = cosine_transform(&f, 2, 20_000).unwrap();
        let j = ComplexStructure::new(2);
        let g = sample_unitary_real(&j, &mut rng).unwrap();
        let gi = g.transpose();
        let fg = {
            let f = f.clone();
            KlainFunction::new(2, 4, move |e, r| f.eval(&e.transform(&gi)?, r))
        };
        let tg = cosine_transform(&fg, 2, 20_000).unwrap();
        let e = sample_subspace(2, 4, &mut rng).unwrap();
        // (T(f∘g⁻¹))(gE) = (Tf)(E)
        let a = t.eval(&e, &mut rng).unwrap();
        let b = tg.eval(&e.transform(&g).unwrap(), &mut rng).unwrap();
        assert!(a.agrees_with(&b, 3.0), "{a:?} {b:?}");
    }
}
