//! Kinematic and Crofton integrals over unitary motions, the ℂ² identity
//! φ + 2ψ = V₂, and least-squares estimation of the unknown constants.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::bodies::{minkowski_sum_polytopes, shapes, Body, Polytope};
use crate::error::{arg_err, num_err, Result};
use crate::estimate::{monte_carlo, Estimate, CONVENTION};
use crate::fit::{effective_variance_fit, LinearFit};
use crate::geomlin::{sample_affine_flat, sample_unitary_real, AffineFlat, ComplexStructure, GrassmannianKind};
use crate::intrinsic::{intrinsic_volume, kappa};
use crate::stream::RandomStream;
use crate::valuations::{eval_u, projection_mean};

/// Largest acceptable condition number of a constant-fit design.
pub const MAX_DESIGN_CONDITION: f64 = 1e6;

/// Fitted constants with their joint uncertainty.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantFit {
    pub names: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    /// Row-major covariance of `values`.
    pub covariance: Vec<f64>,
    /// Relative ℓ² residual on the training set.
    pub residual: f64,
    pub condition: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl ConstantFit {
    fn from_fit(names: Vec<Vec<usize>>, fit: LinearFit) -> Result<Self> {
        if fit.condition > MAX_DESIGN_CONDITION {
            return num_err(format!(
                "design condition number {:.3e} exceeds {MAX_DESIGN_CONDITION:.0e}; use more diverse bodies",
                fit.condition
            ));
        }
        Ok(Self {
            names,
            values: fit.coefficients,
            covariance: fit.covariance,
            residual: fit.relative_residual,
            condition: fit.condition,
            chi2: fit.chi2,
            dof: fit.dof,
        })
    }

    pub fn sigma(&self, i: usize) -> f64 {
        let p = self.values.len();
        self.covariance[i * p + i].max(0.0).sqrt()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let p = self.values.len();
        DMatrix::from_row_slice(p, p, &self.covariance)
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }

    pub fn predict_sigma(&self, row: &[f64]) -> f64 {
        let r = DVector::from_column_slice(row);
        (r.transpose() * self.covariance_matrix() * &r)[(0, 0)].max(0.0).sqrt()
    }

    /// Mahalanobis distance of the fitted values from `target`.
    pub fn joint_sigma_distance(&self, target: &[f64]) -> Result<f64> {
        let diff = DVector::from_iterator(self.values.len(), self.values.iter().zip(target).map(|(a, b)| a - b));
        let Some(inv) = self.covariance_matrix().try_inverse() else {
            return num_err("fit covariance is singular");
        };
        Ok((diff.transpose() * inv * &diff)[(0, 0)].max(0.0).sqrt())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let constants: Vec<serde_json::Value> = self
            .names
            .iter()
            .enumerate()
            .map(|(i, name)| serde_json::json!({"index": name, "value": self.values[i], "sigma": self.sigma(i)}))
            .collect();
        serde_json::json!({
            "constants": constants,
            "covariance": self.covariance,
            "residual": self.residual,
            "condition": self.condition,
            "chi2": self.chi2,
            "dof": self.dof,
            "convention": CONVENTION,
        })
    }
}

/// Polytope part and ball radius of a body of the form P + εD.
fn polytope_and_radius(body: &Body) -> Option<(Polytope, f64)> {
    match body {
        Body::Empty { .. } => None,
        Body::Polytope(p) => Some((p.clone(), 0.0)),
        Body::Ball { center, radius } => Some((shapes::point(center), *radius)),
        Body::Parallel { polytope, eps } => Some((polytope.clone(), *eps)),
    }
}

/// vol(P + εD) by the Steiner formula Σ_i κ_{d−i} ε^{d−i} V_i(P).
fn parallel_volume(p: &Polytope, eps: f64, rng: &mut RandomStream) -> Result<f64> {
    let d = p.ambient_dim();
    if eps == 0.0 {
        return Ok(if p.is_full_dim() { p.volume() } else { 0.0 });
    }
    let body = Body::Polytope(p.clone());
    let mut total = 0.0;
    for i in 0..=d {
        let vi = intrinsic_volume(&body, i, rng)?.value;
        total += kappa(d - i) * eps.powi((d - i) as i32) * vi;
    }
    Ok(total)
}

/// vol(K₁ + (−K₂)) for bodies of the form polytope + ball.
pub fn difference_body_volume(k1: &Body, k2: &Body, rng: &mut RandomStream) -> Result<f64> {
    if k1.ambient_dim() != k2.ambient_dim() {
        return arg_err("bodies live in different spaces");
    }
    let (Some((p1, r1)), Some((p2, r2))) = (polytope_and_radius(k1), polytope_and_radius(k2)) else {
        return Ok(0.0);
    };
    let d = p1.ambient_dim();
    let neg = p2.affine_image(&(-DMatrix::<f64>::identity(d, d)), &DVector::zeros(d))?;
    let sum = minkowski_sum_polytopes(&p1, &neg)?;
    parallel_volume(&sum, r1 + r2, rng)
}

/// ∫_{IU(n)} χ(K₁ ∩ g K₂) dg: the mean over Haar unitaries ρ of the exact
/// volume of K₁ + (−ρK₂), which is the measure of translations t with
/// K₁ ∩ (ρK₂ + t) ≠ ∅.
pub fn principal_kinematic_lhs(
    k1: &Body,
    k2: &Body,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    let d = 2 * j.n;
    if k1.ambient_dim() != d || k2.ambient_dim() != d {
        return arg_err(format!("kinematic integral in ℂ^{} needs bodies in ℝ^{d}", j.n));
    }
    if k1.is_empty() || k2.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    if let (Body::Ball { radius: a, .. }, Body::Ball { radius: b, .. }) = (k1, k2) {
        return Ok(Estimate::exact(kappa(d) * (a + b).powi(d as i32)));
    }
    monte_carlo(rng, samples, |s| {
        let rho = sample_unitary_real(j, s)?;
        let moved = k2.rigid_image(&rho, &DVector::zeros(d))?;
        difference_body_volume(k1, &moved, s)
    })
}

/// U_{k,p} values of one body in ℂ²: V₀..V₄ exactly and U_{2,1} sampled.
#[derive(Clone, Debug)]
pub struct C2Profile {
    pub v: [f64; 5],
    pub u21: Estimate,
}

pub fn c2_profile(body: &Body, rng: &mut RandomStream, samples: usize) -> Result<C2Profile> {
    if body.ambient_dim() != 4 {
        return arg_err("ℂ² profiles need bodies in ℝ⁴");
    }
    let mut v = [0.0; 5];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = intrinsic_volume(body, i, rng)?.value;
    }
    let u21 = eval_u(2, 1, body, &ComplexStructure::new(2), rng, samples)?;
    Ok(C2Profile { v, u21 })
}

/// Index tuples (k₁,k₂,p₁,p₂) of the products U_{k₁,p₁}(K₁)·U_{k₂,p₂}(K₂)
/// forming a basis of the right-hand side in ℂ².
pub fn kappa_names() -> Vec<Vec<usize>> {
    vec![
        vec![0, 4, 0, 0],
        vec![1, 3, 0, 0],
        vec![2, 2, 0, 0],
        vec![2, 2, 0, 1],
        vec![2, 2, 1, 0],
        vec![2, 2, 1, 1],
        vec![3, 1, 0, 0],
        vec![4, 0, 0, 0],
    ]
}

/// Design row for a pair and the standard errors of its entries.
pub fn kappa_row(a: &C2Profile, b: &C2Profile) -> (Vec<f64>, Vec<f64>) {
    let u = |p: &C2Profile, k: usize, q: usize| -> (f64, f64) {
        if q == 1 {
            (p.u21.value, p.u21.std_error)
        } else {
            (p.v[k], 0.0)
        }
    };
    let mut row = Vec::new();
    let mut err = Vec::new();
    for name in kappa_names() {
        let (x, sx) = u(a, name[0], name[2]);
        let (y, sy) = u(b, name[1], name[3]);
        row.push(x * y);
        err.push((sx * y).hypot(x * sy));
    }
    (row, err)
}

/// Least-squares κ(k₁,k₂,p₁,p₂) in ℂ² from kinematic integrals of pairs.
pub fn solve_kappa(
    n: usize,
    pairs: &[(Body, Body)],
    rng: &mut RandomStream,
    samples: usize,
    profile_samples: usize,
) -> Result<ConstantFit> {
    if n != 2 {
        return arg_err(format!("kinematic constants are supported for n = 2, got n = {n}"));
    }
    let names = kappa_names();
    if 2 * pairs.len() < 3 * names.len() {
        return arg_err(format!("{} pairs for {} unknowns; need at least 1.5× as many", pairs.len(), names.len()));
    }
    let j = ComplexStructure::new(2);
    let mut x = DMatrix::zeros(pairs.len(), names.len());
    let mut sx = DMatrix::zeros(pairs.len(), names.len());
    let mut y = DVector::zeros(pairs.len());
    let mut sy = DVector::zeros(pairs.len());
    for (i, (a, b)) in pairs.iter().enumerate() {
        let pa = c2_profile(a, &mut rng.fork(), profile_samples)?;
        let pb = c2_profile(b, &mut rng.fork(), profile_samples)?;
        let (row, err) = kappa_row(&pa, &pb);
        for c in 0..names.len() {
            x[(i, c)] = row[c];
            sx[(i, c)] = err[c];
        }
        let lhs = principal_kinematic_lhs(a, b, &j, &mut rng.fork(), samples)?;
        y[i] = lhs.value;
        sy[i] = lhs.std_error;
    }
    ConstantFit::from_fit(names, effective_variance_fit(&x, &sx, &y, &sy, 4)?)
}

/// Whether a sampled flat meets the body.
fn flat_meets(body: &Body, flat: &AffineFlat) -> Result<bool> {
    match body {
        Body::Parallel { .. } => {
            let normal = flat.direction.complement();
            let proj = body.project(&normal)?;
            Ok(proj.distance(&normal.coords(&flat.offset))? == 0.0)
        }
        _ => Ok(!body.section(flat)?.is_empty()),
    }
}

/// ∫_{𝒜LGr} χ(E ∩ K) dE = ∫_{LGr} vol_n(Pr_{F^⟂} K) dF.
pub fn lagrangian_crofton_lhs(
    body: &Body,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    let n = j.n;
    if body.ambient_dim() != 2 * n {
        return arg_err(format!("Lagrangian flats of ℂ^{n} need a body in ℝ^{}", 2 * n));
    }
    if body.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let kind = GrassmannianKind::Lagrangian { n };
    monte_carlo(rng, samples, |s| {
        let f = kind.sample(s)?;
        let proj = body.project(&f.complement())?;
        Ok(intrinsic_volume(&proj, n, s)?.value)
    })
}

/// The same integral by sampling affine Lagrangian flats and testing
/// whether they meet K.
pub fn lagrangian_crofton_lhs_flats(
    body: &Body,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
) -> Result<Estimate> {
    let n = j.n;
    if body.ambient_dim() != 2 * n {
        return arg_err(format!("Lagrangian flats of ℂ^{n} need a body in ℝ^{}", 2 * n));
    }
    if body.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    // Flats x + F^⟂ with F Lagrangian: F^⟂ = JF is Lagrangian and Haar.
    let kind = GrassmannianKind::Lagrangian { n };
    monte_carlo(rng, samples, |s| {
        let flat = sample_affine_flat(&kind, body, s)?;
        if flat.weight == 0.0 {
            return Ok(0.0);
        }
        Ok(if flat_meets(body, &flat)? { flat.weight } else { 0.0 })
    })
}

/// β_p in ℂ² against U_{2,0} = V₂ and U_{2,1}.
pub fn beta_row(p: &C2Profile) -> (Vec<f64>, Vec<f64>) {
    (vec![p.v[2], p.u21.value], vec![0.0, p.u21.std_error])
}

pub fn solve_beta(
    n: usize,
    bodies: &[Body],
    rng: &mut RandomStream,
    samples: usize,
    profile_samples: usize,
) -> Result<ConstantFit> {
    if n != 2 {
        return arg_err(format!("Lagrangian Crofton constants are supported for n = 2, got n = {n}"));
    }
    if bodies.len() < 4 {
        return arg_err(format!("{} bodies given, at least 4 needed", bodies.len()));
    }
    let j = ComplexStructure::new(2);
    let m = bodies.len();
    let mut x = DMatrix::zeros(m, 2);
    let mut sx = DMatrix::zeros(m, 2);
    let mut y = DVector::zeros(m);
    let mut sy = DVector::zeros(m);
    for (i, b) in bodies.iter().enumerate() {
        let p = c2_profile(b, &mut rng.fork(), profile_samples)?;
        let (row, err) = beta_row(&p);
        for c in 0..2 {
            x[(i, c)] = row[c];
            sx[(i, c)] = err[c];
        }
        let lhs = lagrangian_crofton_lhs(b, &j, &mut rng.fork(), samples)?;
        y[i] = lhs.value;
        sy[i] = lhs.std_error;
    }
    ConstantFit::from_fit(vec![vec![0], vec![1]], effective_variance_fit(&x, &sx, &y, &sy, 4)?)
}

/// ∫_{ᶜ𝒜Gr_{q,n}} U_{k,p}(K ∩ E) dE, with U_{k,p} taken inside E ≅ ℂ^q.
/// Each outer draw picks a complex q-plane E, an offset in the bounding
/// box of Pr_{E^⟂} K, and evaluates U_{k,p} of the section with
/// `inner_samples` inner draws.
#[allow(clippy::too_many_arguments)]
pub fn complex_crofton_lhs(
    body: &Body,
    k: usize,
    p: usize,
    q: usize,
    j: &ComplexStructure,
    rng: &mut RandomStream,
    samples: usize,
    inner_samples: usize,
) -> Result<Estimate> {
    let n = j.n;
    if !(0 < q && q < n && 0 < 2 * p && 2 * p < k && k < 2 * q) {
        return arg_err(format!("need 0 < q < n and 0 < 2p < k < 2q, got n={n}, q={q}, k={k}, p={p}"));
    }
    if body.ambient_dim() != 2 * n {
        return arg_err(format!("complex flats of ℂ^{n} need a body in ℝ^{}", 2 * n));
    }
    if body.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let kind = GrassmannianKind::Complex { dim: q, n };
    let jq = ComplexStructure::new(q);
    monte_carlo(rng, samples, |s| {
        // E keeps its complex frame (u, Ju), so sections live in ℂ^q with
        // the standard complex structure.
        let e = kind.sample(s)?;
        let normal = e.complement();
        let mut weight = 1.0;
        let mut x = DVector::zeros(normal.dim());
        for i in 0..normal.dim() {
            let u = normal.frame().column(i).into_owned();
            let hi = body.support(&u);
            let lo = -body.support(&(-&u));
            let side = (hi - lo).max(0.0);
            weight *= side;
            x[i] = lo + side * s.random::<f64>();
        }
        if weight == 0.0 {
            return Ok(0.0);
        }
        let flat = AffineFlat::new(e, &normal.embed(&x))?;
        let sec = body.section(&flat)?;
        if sec.is_empty() {
            return Ok(0.0);
        }
        Ok(weight * eval_u(k, p, &sec, &jq, s, inner_samples)?.value)
    })
}

/// γ for the complex Crofton integrals in ℂ³. The right-hand side
/// has degree k + 2(n − q); its U-family spans a space of dimension
/// 1 + min(⌊m/2⌋, ⌊(2n − m)/2⌋), and γ is fitted over the p-range of that
/// basis, U_{m,0} = V_m first.
#[allow(clippy::too_many_arguments)]
pub fn solve_gamma(
    n: usize,
    k: usize,
    p: usize,
    q: usize,
    bodies: &[Body],
    rng: &mut RandomStream,
    samples: usize,
    inner_samples: usize,
    profile_samples: usize,
) -> Result<ConstantFit> {
    if n != 3 {
        return arg_err(format!("complex Crofton constants are supported for n = 3, got n = {n}"));
    }
    let m = k + 2 * (n - q);
    let basis = 1 + (m / 2).min((2 * n - m) / 2);
    if bodies.len() < basis + 1 {
        return arg_err(format!("{} bodies given, at least {} needed", bodies.len(), basis + 1));
    }
    let j = ComplexStructure::new(n);
    let rows = bodies.len();
    let mut x = DMatrix::zeros(rows, basis);
    let mut sx = DMatrix::zeros(rows, basis);
    let mut y = DVector::zeros(rows);
    let mut sy = DVector::zeros(rows);
    for (i, b) in bodies.iter().enumerate() {
        for c in 0..basis {
            let u = eval_u(m, c, b, &j, &mut rng.fork(), profile_samples)?;
            x[(i, c)] = u.value;
            sx[(i, c)] = u.std_error;
        }
        let lhs = complex_crofton_lhs(b, k, p, q, &j, &mut rng.fork(), samples, inner_samples)?;
        y[i] = lhs.value;
        sy[i] = lhs.std_error;
    }
    ConstantFit::from_fit((0..basis).map(|c| vec![c]).collect(), effective_variance_fit(&x, &sx, &y, &sy, 4)?)
}

/// φ(K) = ∫_{ℂP¹} vol₂(Pr_ξ K) dξ.
pub fn c2_phi(body: &Body, rng: &mut RandomStream, samples: usize) -> Result<Estimate> {
    projection_mean(&GrassmannianKind::Complex { dim: 1, n: 2 }, 2, body, rng, samples)
}

/// ψ(K) = ∫_{LGr₂} vol₂(Pr_F K) dF.
pub fn c2_psi(body: &Body, rng: &mut RandomStream, samples: usize) -> Result<Estimate> {
    projection_mean(&GrassmannianKind::Lagrangian { n: 2 }, 2, body, rng, samples)
}

/// φ + 2ψ − V₂ for one body.
#[derive(Clone, Debug, Serialize)]
pub struct C2Check {
    pub phi: Estimate,
    pub psi: Estimate,
    pub v2: Estimate,
    pub delta: Estimate,
    /// |Δ| in units of its standard error.
    pub sigmas: f64,
    /// σ(Δ)/V₂.
    pub relative_sigma: f64,
    pub pass: bool,
}

pub fn verify_c2_identity(
    bodies: &[Body],
    rng: &mut RandomStream,
    samples: usize,
    nsigma: f64,
) -> Result<Vec<C2Check>> {
    bodies
        .iter()
        .map(|b| {
            if b.ambient_dim() != 4 {
                return arg_err("the ℂ² identity needs bodies in ℝ⁴");
            }
            let phi = c2_phi(b, &mut rng.fork(), samples)?;
            let psi = c2_psi(b, &mut rng.fork(), samples)?;
            let v2 = intrinsic_volume(b, 2, &mut rng.fork())?;
            let delta = phi.add(psi.scale(2.0)).sub(v2);
            let sigmas = delta.sigma_distance(&Estimate::exact(0.0));
            let relative_sigma = delta.std_error / v2.value.abs();
            let pass = delta.agrees_with(&Estimate::exact(0.0), nsigma) && relative_sigma <= 0.01;
            Ok(C2Check {
                phi,
                psi,
                v2,
                delta,
                sigmas,
                relative_sigma,
                pass,
            })
        })
        .collect()
}
