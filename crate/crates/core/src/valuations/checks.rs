//! Numerical checks of the structural statements about Hermitian
//! valuations: proportionality under Λ and duality, linear independence of
//! the U_{k,p}, and the pseudovolume's position in the C_{n,l} span.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::klain::{duality, klain_function, KlainFunction};
use super::ValuationEvaluator;
use crate::error::{arg_err, Result};
use crate::estimate::Estimate;
use crate::fit::{effective_variance_fit, LinearFit};
use crate::geomlin::{sample_subspace, Subspace};
use crate::stream::RandomStream;

/// Ratios f(E)/g(E) over sampled planes.
#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub ratios: Vec<Estimate>,
    pub mean: f64,
    /// Sample standard deviation of the ratios over |mean|.
    pub relative_spread: f64,
    /// Planes whose denominator was within 3σ of zero.
    pub excluded: usize,
}

impl RatioReport {
    fn from_pairs(pairs: &[(Estimate, Estimate)]) -> Self {
        let mut ratios = Vec::new();
        let mut excluded = 0;
        for (num, den) in pairs {
            if den.value == 0.0 || den.value.abs() <= 3.0 * den.std_error {
                excluded += 1;
            } else {
                ratios.push(num.ratio(*den));
            }
        }
        let m = ratios.len() as f64;
        let mean = ratios.iter().map(|r| r.value).sum::<f64>() / m;
        let var = if ratios.len() > 1 {
            ratios.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Self {
            ratios,
            mean,
            relative_spread: var.sqrt() / mean.abs(),
            excluded,
        }
    }
}

fn ratio_over_planes(
    num: &KlainFunction,
    den: &KlainFunction,
    planes: usize,
    rng: &mut RandomStream,
) -> Result<RatioReport> {
    let k = num.degree();
    let d = num.ambient_dim();
    let mut pairs = Vec::with_capacity(planes);
    for _ in 0..planes {
        let e = sample_subspace(k, d, rng)?;
        let a = num.eval(&e, &mut rng.fork())?;
        let b = den.eval(&e, &mut rng.fork())?;
        pairs.push((a, b));
    }
    Ok(RatioReport::from_pairs(&pairs))
}

/// Klain ratio of Λ(C_{k+1,l}) to C_{k,l} over random k-planes of ℂⁿ.
pub fn verify_lefschetz(
    n: usize,
    k: usize,
    l: usize,
    rng: &mut RandomStream,
    samples: usize,
    planes: usize,
) -> Result<RatioReport> {
    let upper = ValuationEvaluator::c(k + 1, l, n, samples)?;
    let lower = ValuationEvaluator::c(k, l, n, samples)?;
    ratio_over_planes(&klain_function(&upper.lambda()?), &klain_function(&lower), planes, rng)
}

/// Ratio klain(U_{k,p})(L) / klain(C_{2n−k,n−p})(L^⟂) over random k-planes.
pub fn verify_u_equals_dual_c(
    k: usize,
    p: usize,
    n: usize,
    rng: &mut RandomStream,
    samples: usize,
    planes: usize,
) -> Result<RatioReport> {
    if 2 * p > k || k > 2 * n {
        return arg_err(format!("U_{{{k},{p}}} needs 0 ≤ 2p ≤ k ≤ 2n (n = {n})"));
    }
    let u = klain_function(&ValuationEvaluator::u(k, p, n, samples)?);
    let c = klain_function(&ValuationEvaluator::c(2 * n - k, n - p, n, samples)?);
    ratio_over_planes(&u, &duality(&c), planes, rng)
}

/// Numerical rank of sampled Klain functions of U_{k,0}, …, U_{k,⌊k/2⌋}.
#[derive(Clone, Debug, Serialize)]
pub struct GramReport {
    pub k: usize,
    pub columns: Vec<String>,
    /// Singular values of the column-normalized sample matrix.
    pub singular_values: Vec<f64>,
    /// Frobenius norm of the Monte-Carlo noise in the normalized matrix.
    pub noise: f64,
    pub rank: usize,
    pub expected_rank: usize,
    /// Smallest retained singular value over the largest discarded one (or
    /// over the noise level when nothing is discarded).
    pub gap: f64,
}

/// Samples klain(U_{k,p}) for every 0 ≤ 2p ≤ k at `planes` Haar k-planes,
/// and counts singular values that stand above three times the noise.
pub fn gram_rank(n: usize, k: usize, rng: &mut RandomStream, samples: usize, planes: usize) -> Result<GramReport> {
    if k > 2 * n {
        return arg_err(format!("degree {k} exceeds 2n = {}", 2 * n));
    }
    let d = 2 * n;
    let fs: Vec<KlainFunction> = (0..=k / 2)
        .map(|p| Ok(klain_function(&ValuationEvaluator::u(k, p, n, samples)?)))
        .collect::<Result<_>>()?;
    let cols = fs.len();
    let mut values = DMatrix::zeros(planes, cols);
    let mut errors = DMatrix::zeros(planes, cols);
    for i in 0..planes {
        let e: Subspace = sample_subspace(k, d, rng)?;
        for (c, f) in fs.iter().enumerate() {
            let v = f.eval(&e, &mut rng.fork())?;
            values[(i, c)] = v.value;
            errors[(i, c)] = v.std_error;
        }
    }
    let mut noise2 = 0.0;
    for c in 0..cols {
        let norm = values.column(c).norm();
        if norm > 0.0 {
            values.column_mut(c).scale_mut(1.0 / norm);
            noise2 += errors.column(c).norm_squared() / (norm * norm);
        }
    }
    let noise = noise2.sqrt();
    let mut sv: Vec<f64> = values.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let threshold = (3.0 * noise).max(1e-10 * sv[0]);
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let gap = if rank == 0 {
        0.0
    } else if rank < sv.len() {
        sv[rank - 1] / sv[rank].max(f64::MIN_POSITIVE)
    } else if noise > 0.0 {
        sv[rank - 1] / noise
    } else {
        f64::INFINITY
    };
    Ok(GramReport {
        k,
        columns: (0..cols).map(|p| format!("U_{{{k},{p}}}")).collect(),
        singular_values: sv,
        noise,
        rank,
        expected_rank: 1 + (k / 2).min((d - k) / 2),
        gap,
    })
}

/// Fit of klain(P) by klain(C_{n,l}), n/2 ≤ l ≤ n.
#[derive(Clone, Debug, Serialize)]
pub struct SpanReport {
    pub levels: Vec<usize>,
    pub fit: LinearFit,
}

pub fn kazarnovskii_span(n: usize, rng: &mut RandomStream, samples: usize, planes: usize) -> Result<SpanReport> {
    let target = klain_function(&ValuationEvaluator::kazarnovskii(n)?);
    let levels: Vec<usize> = (n.div_ceil(2)..=n).collect();
    let basis: Vec<KlainFunction> = levels
        .iter()
        .map(|&l| Ok(klain_function(&ValuationEvaluator::c(n, l, n, samples)?)))
        .collect::<Result<_>>()?;
    let mut x = DMatrix::zeros(planes, basis.len());
    let mut sx = DMatrix::zeros(planes, basis.len());
    let mut y = DVector::zeros(planes);
    let mut sy = DVector::zeros(planes);
    for i in 0..planes {
        let e = sample_subspace(n, 2 * n, rng)?;
        let t = target.eval(&e, &mut rng.fork())?;
        y[i] = t.value;
        sy[i] = t.std_error;
        for (c, f) in basis.iter().enumerate() {
            let v = f.eval(&e, &mut rng.fork())?;
            x[(i, c)] = v.value;
            sx[(i, c)] = v.std_error;
        }
    }
    let fit = effective_variance_fit(&x, &sx, &y, &sy, 4)?;
    Ok(SpanReport { levels, fit })
}
