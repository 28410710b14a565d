//! Intrinsic volumes V_j by the face formula, with two independent
//! Monte-Carlo oracles (Steiner polynomial fit, Kubota mean projections).

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::bodies::{exact_angle, nearest_point, random_unit, sampled_angle, Body, Polytope};
use crate::error::{arg_err, num_err, Result};
use crate::estimate::{monte_carlo, monte_carlo_vec, Estimate};
use crate::fit::{generalized_least_squares, LinearFit};
use crate::geomlin::sample_subspace;
use crate::stream::RandomStream;

/// Directions per external angle when no closed form applies.
pub const ANGLE_SAMPLES: usize = 20_000;

/// Volume κ_m of the unit ball in ℝ^m.
pub fn kappa(m: usize) -> f64 {
    // κ_m = κ_{m−2} · 2π/m, from Γ(x+1) = xΓ(x)
    let (mut k, start) = if m % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut i = start;
    while i <= m {
        k *= 2.0 * std::f64::consts::PI / i as f64;
        i += 2;
    }
    k
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// V_j of the ball of radius r in ℝ^d: C(d,j)·κ_d/κ_{d−j}·r^j.
pub fn ball_intrinsic_volume(d: usize, r: f64, j: usize) -> f64 {
    if j > d {
        return 0.0;
    }
    binomial(d, j) * kappa(d) / kappa(d - j) * r.powi(j as i32)
}

/// Coefficient of ε^{j−i}·V_i(K) in V_j(K + εD), D the unit ball of ℝ^d.
pub fn steiner_coefficient(d: usize, i: usize, j: usize) -> f64 {
    binomial(d - i, j - i) * kappa(d - i) / kappa(d - j)
}

/// V_j of a polytope from its j-faces and their external angles, taken
/// inside the polytope's affine hull.
pub fn polytope_intrinsic_volume(p: &Polytope, j: usize, rng: &mut RandomStream) -> Result<Estimate> {
    let m = p.dim();
    if j > m {
        return Ok(Estimate::exact(0.0));
    }
    if j == 0 {
        return Ok(Estimate::exact(1.0));
    }
    if j == m {
        return Ok(Estimate::exact(p.volume()));
    }
    if j + 1 == m {
        let mut total = 0.0;
        for f in p.faces(j)? {
            total += p.face_volume(&f.vertex_ids)?;
        }
        return Ok(Estimate::exact(0.5 * total));
    }
    let mut exact = 0.0;
    let mut sampled = Estimate::exact(0.0);
    for rec in &p.lattice()[j] {
        let vol = p.face_volume(&rec.ids)?;
        match exact_angle(p, &rec.ids, &rec.frame) {
            Some(g) => exact += g * vol,
            None => {
                let mut s = rng.fork();
                let g = sampled_angle(p, &rec.ids, &rec.frame, &mut s, ANGLE_SAMPLES)?;
                sampled = sampled.add(g.scale(vol));
                sampled.samples = g.samples;
                sampled.seed = g.seed;
            }
        }
    }
    Ok(Estimate {
        value: exact + sampled.value,
        ..sampled
    })
}

/// V_j(K) with the normalization V₀ = 1 on nonempty bodies.
pub fn intrinsic_volume(body: &Body, j: usize, rng: &mut RandomStream) -> Result<Estimate> {
    let d = body.ambient_dim();
    if j > d {
        return arg_err(format!("V_{j} requested in ℝ^{d}"));
    }
    match body {
        Body::Empty { .. } => Ok(Estimate::exact(0.0)),
        Body::Polytope(p) => polytope_intrinsic_volume(p, j, rng),
        Body::Ball { radius, .. } => Ok(Estimate::exact(ball_intrinsic_volume(d, *radius, j))),
        Body::Parallel { polytope, eps } => {
            let mut total = Estimate::exact(0.0);
            for i in 0..=j {
                let vi = polytope_intrinsic_volume(polytope, i, rng)?;
                let c = steiner_coefficient(d, i, j) * eps.powi((j - i) as i32);
                total = total.add(vi.scale(c));
                if !vi.is_exact() {
                    total.samples = vi.samples;
                    total.seed = vi.seed;
                }
            }
            Ok(total)
        }
    }
}

/// All of V_0, …, V_d.
pub fn intrinsic_volumes(body: &Body, rng: &mut RandomStream) -> Result<Vec<Estimate>> {
    (0..=body.ambient_dim()).map(|j| intrinsic_volume(body, j, rng)).collect()
}

/// ε-nodes and options for the Steiner oracle.
#[derive(Clone, Debug)]
pub struct SteinerConfig {
    /// Chebyshev nodes on (0, max_eps]; ε = 0 is always added.
    pub nodes: usize,
    /// Largest ε as a multiple of the polytope's circumradius about its
    /// vertex centroid.
    pub max_eps_factor: f64,
}

impl SteinerConfig {
    pub fn for_dim(d: usize) -> Self {
        Self { nodes: 2 * d + 2, max_eps_factor: 1.5 }
    }
}

/// Result of a Steiner fit: V_0..V_d estimates plus the raw fit.
#[derive(Clone, Debug)]
pub struct SteinerFit {
    pub volumes: Vec<Estimate>,
    pub eps_nodes: Vec<f64>,
    pub fit: LinearFit,
}

fn chebyshev_nodes(count: usize, max: f64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let theta = (2 * i + 1) as f64 * std::f64::consts::PI / (2 * count) as f64;
            0.5 * max * (1.0 - theta.cos())
        })
        .collect()
}

/// Radius r ≥ lo along the ray c + r·u at which the distance to `p`
/// reaches ε. The distance is convex along the ray, so Newton from the
/// right converges monotonically.
fn ray_exit(p: &Polytope, c: &DVector<f64>, u: &DVector<f64>, eps: f64, lo: f64, hi: f64) -> Result<f64> {
    let mut r = hi;
    for _ in 0..100 {
        let x = c + u * r;
        let (y, g) = nearest_point(p, &x)?;
        let f = g - eps;
        if f.abs() <= 1e-13 * (1.0 + eps) {
            return Ok(r);
        }
        let slope = if g > 0.0 { u.dot(&(&x - &y)) / g } else { 0.0 };
        if slope <= 1e-12 {
            return num_err("distance along the ray stopped increasing");
        }
        let next = r - f / slope;
        if (next - r).abs() <= 1e-14 * r.abs().max(1.0) {
            return Ok(next.max(lo));
        }
        r = next.max(lo);
    }
    num_err("Newton iteration for the ray exit did not converge")
}

/// Radial distance from interior point `c` to the boundary of a
/// full-dimensional polytope along unit `u`.
fn radial(p: &Polytope, c: &DVector<f64>, u: &DVector<f64>) -> f64 {
    p.hrep()
        .iter()
        .filter_map(|h| {
            let a = h.normal.dot(u);
            (a > 0.0).then(|| (h.offset - h.normal.dot(c)) / a)
        })
        .fold(f64::INFINITY, f64::min)
}

fn fit_steiner(d: usize, eps: &[f64], mean: &[f64], cov: &DMatrix<f64>, samples: u64, seed: u64) -> Result<SteinerFit> {
    let x = DMatrix::from_fn(eps.len(), d + 1, |i, j| kappa(d - j) * eps[i].powi((d - j) as i32));
    let fit = generalized_least_squares(&x, &DVector::from_column_slice(mean), cov)?;
    if fit.condition > 1e8 {
        return num_err(format!(
            "Steiner fit is ill-conditioned (condition {:.3e}); choose different ε nodes",
            fit.condition
        ));
    }
    let volumes = (0..=d)
        .map(|j| Estimate { value: fit.coefficients[j], std_error: fit.sigma(j), samples, seed })
        .collect();
    Ok(SteinerFit { volumes, eps_nodes: eps.to_vec(), fit })
}

/// Steiner oracle: estimates vol(P + εD) at several ε by integrating the
/// radial function of P + εD over random directions from the vertex
/// centroid (antithetic pairs u, −u), then fits Σ_j κ_{d−j} ε^{d−j} V_j.
pub fn steiner_oracle(p: &Polytope, rng: &mut RandomStream, samples: usize, cfg: &SteinerConfig) -> Result<SteinerFit> {
    let d = p.ambient_dim();
    if !p.is_full_dim() {
        return arg_err("the Steiner oracle needs a full-dimensional polytope");
    }
    let c = p.centroid_of_vertices();
    let circum = p.vertices().iter().map(|v| (v - &c).norm()).fold(0.0, f64::max);
    let mut eps = vec![0.0];
    eps.extend(chebyshev_nodes(cfg.nodes, cfg.max_eps_factor * circum));
    let kd = kappa(d);
    let est = monte_carlo_vec(rng, samples, eps.len(), |s, out| {
        let u0 = random_unit(d, s);
        for u in [u0.clone(), -u0] {
            let r0 = radial(p, &c, &u);
            for (i, &e) in eps.iter().enumerate() {
                let r = if e == 0.0 { r0 } else { ray_exit(p, &c, &u, e, r0 + e, circum + e)? };
                out[i] += 0.5 * kd * r.powi(d as i32);
            }
        }
        Ok(())
    })?;
    let cov = DMatrix::from_row_slice(eps.len(), eps.len(), &est.covariance);
    fit_steiner(d, &eps, &est.mean, &cov, est.samples, est.seed)
}

/// Steiner oracle by hit-or-miss: uniform points in a box around P + ε_max D,
/// membership by distance ≤ ε.
pub fn steiner_oracle_hit_or_miss(
    p: &Polytope,
    rng: &mut RandomStream,
    samples: usize,
    cfg: &SteinerConfig,
) -> Result<SteinerFit> {
    let d = p.ambient_dim();
    if !p.is_full_dim() {
        return arg_err("the Steiner oracle needs a full-dimensional polytope");
    }
    let c = p.centroid_of_vertices();
    let circum = p.vertices().iter().map(|v| (v - &c).norm()).fold(0.0, f64::max);
    let mut eps = vec![0.0];
    eps.extend(chebyshev_nodes(cfg.nodes, cfg.max_eps_factor * circum));
    let emax = *eps.last().unwrap();
    let body = Body::Polytope(p.clone());
    let (lo, hi) = body.bounding_box();
    let lo = lo.add_scalar(-emax);
    let hi = hi.add_scalar(emax);
    let box_vol: f64 = (0..d).map(|i| hi[i] - lo[i]).product();
    let est = monte_carlo_vec(rng, samples, eps.len(), |s, out| {
        let x = DVector::from_fn(d, |i, _| lo[i] + (hi[i] - lo[i]) * s.random::<f64>());
        let dist = body.distance(&x)?;
        for (i, &e) in eps.iter().enumerate() {
            if dist <= e {
                out[i] = box_vol;
            }
        }
        Ok(())
    })?;
    let cov = DMatrix::from_row_slice(eps.len(), eps.len(), &est.covariance);
    fit_steiner(d, &eps, &est.mean, &cov, est.samples, est.seed)
}

/// c(d,j) = C(d,j)·κ_d/(κ_j·κ_{d−j}): the constant making the Kubota mean
/// exact on the unit ball, where every projection is a unit j-ball.
pub fn kubota_constant(d: usize, j: usize) -> f64 {
    ball_intrinsic_volume(d, 1.0, j) / kappa(j)
}

/// Kubota oracle: c(d,j)·E_E[vol_j(Pr_E K)] over Haar random j-planes.
pub fn kubota_oracle(body: &Body, j: usize, rng: &mut RandomStream, samples: usize) -> Result<Estimate> {
    let d = body.ambient_dim();
    if j > d {
        return arg_err(format!("V_{j} requested in ℝ^{d}"));
    }
    if body.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    if j == 0 {
        return Ok(Estimate::exact(1.0));
    }
    if j == d {
        return intrinsic_volume(body, d, rng);
    }
    let c = kubota_constant(d, j);
    let est = monte_carlo(rng, samples, |s| {
        let e = sample_subspace(j, d, s)?;
        let proj = body.project(&e)?;
        Ok(projected_volume(&proj, s)?)
    })?;
    Ok(est.scale(c))
}

/// Full-dimensional volume of a body in its own ambient space.
pub(crate) fn projected_volume(body: &Body, rng: &mut RandomStream) -> Result<f64> {
    let d = body.ambient_dim();
    match body {
        Body::Polytope(p) => p.volume_k(d),
        _ => Ok(intrinsic_volume(body, d, rng)?.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::shapes;

    #[test]
    fn ball_volumes() {
        assert!((kappa(0) - 1.0).abs() < 1e-15);
        assert!((kappa(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((kappa(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert!((kappa(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
        assert!((kappa(5) - 8.0 * std::f64::consts::PI.powi(2) / 15.0).abs() < 1e-14);
    }

    #[test]
    fn cube_and_disk_values() {
        let mut rng = RandomStream::new(81, 0);
        let cube = Body::Polytope(shapes::cube(3, 0.0, 1.0));
        let v: Vec<f64> = intrinsic_volumes(&cube, &mut rng).unwrap().iter().map(|e| e.value).collect();
        for (a, b) in v.iter().zip([1.0, 3.0, 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
        let disk = Body::unit_ball(2);
        assert!((intrinsic_volume(&disk, 1, &mut rng).unwrap().value - std::f64::consts::PI).abs() < 1e-14);
        // 3σ(B⁴) chain: V₂(B⁴) = 3π
        let b4 = Body::unit_ball(4);
        assert!((intrinsic_volume(&b4, 2, &mut rng).unwrap().value - 3.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn parallel_of_point_is_ball() {
        let mut rng = RandomStream::new(82, 0);
        let pt = shapes::point(&DVector::zeros(4));
        let par = Body::parallel(pt, 0.7).unwrap();
        for j in 0..=4 {
            let a = intrinsic_volume(&par, j, &mut rng).unwrap().value;
            let b = ball_intrinsic_volume(4, 0.7, j);
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn segment_kubota() {
        let mut rng = RandomStream::new(83, 0);
        let seg = Body::Polytope(shapes::segment(&DVector::zeros(3), &DVector::from_column_slice(&[0.0, 2.0, 0.0])));
        let est = kubota_oracle(&seg, 1, &mut rng, 20_000).unwrap();
        assert!((est.value - 2.0).abs() < 3.0 * est.std_error, "{est:?}");
        let ball = Body::unit_ball(4);
        for j in 1..4 {
            let est = kubota_oracle(&ball, j, &mut rng, 100).unwrap();
            assert!((est.value - ball_intrinsic_volume(4, 1.0, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_and_hit_or_miss_steiner_agree() {
        let mut rng = RandomStream::new(85, 0);
        let p = shapes::gaussian_polytope(9, 3, &mut rng);
        let cfg = SteinerConfig::for_dim(3);
        let radial = steiner_oracle(&p, &mut rng.fork(), 20_000, &cfg).unwrap();
        let hom = steiner_oracle_hit_or_miss(&p, &mut rng.fork(), 200_000, &cfg).unwrap();
        let face = intrinsic_volumes(&Body::Polytope(p.clone()), &mut rng.fork()).unwrap();
        for j in 0..=3 {
            assert!(radial.volumes[j].agrees_with(&hom.volumes[j], 4.0), "j={j}: {:?} vs {:?}", radial.volumes[j], hom.volumes[j]);
            assert!(hom.volumes[j].agrees_with(&face[j], 4.0), "j={j}: {:?} vs {:?}", hom.volumes[j], face[j]);
        }
    }

    #[test]
    fn homogeneity_exact() {
        let mut rng = RandomStream::new(84, 0);
        let p = shapes::gaussian_polytope(12, 4, &mut rng);
        let q = p.scale_by(1.7).unwrap();
        for j in 0..=4 {
            let a = polytope_intrinsic_volume(&p, j, &mut rng).unwrap().value;
            let b = polytope_intrinsic_volume(&q, j, &mut rng).unwrap().value;
            assert!((b - 1.7f64.powi(j as i32) * a).abs() < 1e-9 * b.abs().max(1.0));
        }
    }
}
