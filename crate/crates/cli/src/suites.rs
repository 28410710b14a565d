//! Verification suites. Each suite runs a batch of numerical checks and
//! reports, per check, whether it passed and how far off it was in σ units.

use hermval::bodies::{shapes, split_polytope, Body, Polytope};
use hermval::families;
use hermval::geomlin::{gr24_plane, sample_complex_subspace, sample_subspace, strichartz_hwv, ComplexStructure, Subspace};
use hermval::intrinsic::{intrinsic_volume, intrinsic_volumes, kubota_oracle, steiner_oracle, SteinerConfig};
use hermval::kinematics::verify_c2_identity;
use hermval::valuations::{
    duality, gram_rank, kazarnovskii_span, klain_function, klain_function_with_probe, verify_lefschetz,
    verify_u_equals_dual_c, KlainFunction, Probe, RatioReport, ValuationEvaluator,
};
use hermval::{Error, Estimate, RandomStream, Result};
use nalgebra::DVector;
use serde_json::{json, Value};

pub const SUITES: &[&str] = &[
    "oracles", "gr24", "hwv", "anchors", "lefschetz", "duality", "gram", "c2", "klain", "kaz-span",
];

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Largest measured deviation in units of the combined standard error,
    /// where that notion applies.
    pub deviation_sigma: Option<f64>,
    pub details: Value,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, deviation_sigma: Option<f64>, details: Value) -> Self {
        Self { name: name.into(), pass, deviation_sigma, details }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "pass": self.pass,
            "deviation_sigma": self.deviation_sigma,
            "details": self.details,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "pass": self.pass(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Options shared by all suites. `None` fields take suite defaults.
#[derive(Clone, Debug)]
pub struct SuiteParams {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub p: Option<usize>,
    pub samples: Option<usize>,
    pub sigma: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self { n: None, k: None, l: None, p: None, samples: None, sigma: 3.0 }
    }
}

impl SuiteParams {
    fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}

pub fn run_suite(name: &str, params: &SuiteParams, rng: &mut RandomStream) -> Result<SuiteReport> {
    let checks = match name {
        "oracles" => oracles(params, rng)?,
        "gr24" => gr24(params, rng)?,
        "hwv" => hwv(params, rng)?,
        "anchors" => anchors(params, rng)?,
        "lefschetz" => lefschetz(params, rng)?,
        "duality" => dual(params, rng)?,
        "gram" => gram(params, rng)?,
        "c2" => c2(params, rng)?,
        "klain" => klain(params, rng)?,
        "kaz-span" => kaz_span(params, rng)?,
        _ => {
            return Err(Error::Argument(format!(
                "unknown suite `{name}`; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport { suite: name.to_string(), checks })
}

fn est_json(e: &Estimate) -> Value {
    json!({"value": e.value, "std_error": e.std_error})
}

fn ratio_json(r: &RatioReport) -> Value {
    json!({
        "mean": r.mean,
        "relative_spread": r.relative_spread,
        "planes_used": r.ratios.len(),
        "planes_excluded": r.excluded,
    })
}

fn frame_rows(e: &Subspace) -> Vec<Vec<f64>> {
    let f = e.frame();
    (0..f.nrows()).map(|r| f.row(r).iter().copied().collect()).collect()
}

/// Face formula, Steiner fit and Kubota means on random polytopes in ℝ³ and ℝ⁴.
fn oracles(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let steiner_samples = params.samples_or(20_000);
    let kubota_samples = 5 * steiner_samples;
    let per_dim = 10;
    let mut checks = Vec::new();
    for d in [3usize, 4] {
        let cfg = SteinerConfig::for_dim(d);
        for t in 0..per_dim {
            let p = shapes::gaussian_polytope(3 * d, d, rng);
            let body = Body::Polytope(p.clone());
            let face = intrinsic_volumes(&body, &mut rng.fork())?;
            let steiner = steiner_oracle(&p, &mut rng.fork(), steiner_samples, &cfg)?;
            for j in 0..=d {
                let kubota = kubota_oracle(&body, j, &mut rng.fork(), kubota_samples)?;
                let trio = [face[j], steiner.volumes[j], kubota];
                let mut worst_sigma: f64 = 0.0;
                let mut worst_rel: f64 = 0.0;
                let mut pass = true;
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    let (x, y) = (trio[a], trio[b]);
                    worst_sigma = worst_sigma.max(x.sigma_distance(&y));
                    let rel = (x.value - y.value).abs() / face[j].value.abs();
                    worst_rel = worst_rel.max(rel);
                    pass &= x.agrees_with(&y, params.sigma) && rel <= 0.02;
                }
                checks.push(Check::new(
                    format!("R{d} polytope {t} V_{j}"),
                    pass,
                    Some(worst_sigma),
                    json!({
                        "face": est_json(&trio[0]),
                        "steiner": est_json(&trio[1]),
                        "kubota": est_json(&trio[2]),
                        "max_relative_difference": worst_rel,
                    }),
                ));
            }
        }
    }
    Ok(checks)
}

/// Uniform point on the sphere of radius 1/2 about (1/2, 0, 0).
fn gr24_sphere_point(rng: &mut RandomStream) -> [f64; 3] {
    let u = hermval::bodies::random_unit(3, rng);
    [0.5 + 0.5 * u[0], 0.5 * u[1], 0.5 * u[2]]
}

/// |cos(gr24_plane(t₁,t₂), E₀)| = |x₁ + x₂ − 1| on random sphere pairs.
fn gr24(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let pairs = params.samples_or(10_000);
    let e0 = Subspace::coordinate(4, &[0, 2])?;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let t1 = gr24_sphere_point(rng);
        let t2 = gr24_sphere_point(rng);
        let c = hermval::geomlin::cosine_angle(&gr24_plane(t1, t2)?, &e0)?;
        worst = worst.max((c - (t1[0] + t2[0] - 1.0).abs()).abs());
    }
    Ok(vec![Check::new(
        "cosine to the base complex line",
        worst <= 1e-9,
        None,
        json!({"pairs": pairs, "max_abs_error": worst}),
    )])
}

/// The highest-weight function: F(E₀) = 1, real, nonnegative on ᶜGr.
fn hwv(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let count = params.samples_or(1000);
    let mut checks = Vec::new();
    for (n, k) in [(2usize, 2usize), (3, 2)] {
        let j = ComplexStructure::new(n);
        let axes: Vec<usize> = (0..k / 2).map(|t| 2 * t).chain((0..k / 2).map(|t| n + 2 * t)).collect();
        let base = strichartz_hwv(&Subspace::coordinate(2 * n, &axes)?, &j)?;
        let base_err = (base.re - 1.0).abs().max(base.im.abs());
        checks.push(Check::new(
            format!("n={n} k={k} F(E0) = 1"),
            base_err <= 1e-9,
            None,
            json!({"re": base.re, "im": base.im}),
        ));
        let mut max_im: f64 = 0.0;
        let mut min_re = f64::INFINITY;
        for _ in 0..count {
            let e = sample_complex_subspace(k / 2, &j, rng)?;
            let f = strichartz_hwv(&e, &j)?;
            max_im = max_im.max(f.im.abs());
            min_re = min_re.min(f.re);
        }
        checks.push(Check::new(
            format!("n={n} k={k} F real and nonnegative on complex planes"),
            max_im <= 1e-9 && min_re >= -1e-9,
            None,
            json!({"subspaces": count, "max_abs_imag": max_im, "min_real": min_re}),
        ));
    }
    Ok(checks)
}

fn exact_check(name: String, got: Estimate, want: Estimate) -> Check {
    let pass = got.is_exact() && (got.value - want.value).abs() <= 1e-12 * want.value.abs().max(1.0);
    Check::new(name, pass, None, json!({"got": est_json(&got), "expected": est_json(&want), "exact": got.is_exact()}))
}

/// Degenerate indices that reduce to classical valuations.
fn anchors(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let samples = params.samples_or(4000);
    let mut checks = Vec::new();
    let mut bodies4 = vec![("ball", Body::unit_ball(4)), ("cube", Body::Polytope(shapes::cube(4, 0.0, 1.0)))];
    bodies4.push(("random", Body::Polytope(shapes::gaussian_polytope(10, 4, rng))));
    let bodies6 = vec![("cube", Body::Polytope(shapes::cube(6, 0.0, 1.0)))];

    for (n, bodies) in [(2usize, &bodies4), (3, &bodies6)] {
        for (name, b) in bodies.iter() {
            for l in 0..=n {
                let got = ValuationEvaluator::c(0, l, n, samples)?.evaluate(b, &mut rng.fork())?;
                checks.push(exact_check(format!("n={n} C_{{0,{l}}}({name}) = 1"), got, Estimate::exact(1.0)));
            }
            for k in 0..=2 * n {
                let s = rng.fork();
                let got = ValuationEvaluator::u(k, 0, n, samples)?.evaluate(b, &mut s.clone())?;
                let want = intrinsic_volume(b, k, &mut s.clone())?;
                checks.push(Check::new(
                    format!("n={n} U_{{{k},0}}({name}) = V_{k}"),
                    got.value == want.value && got.std_error == want.std_error,
                    None,
                    json!({"got": est_json(&got), "expected": est_json(&want)}),
                ));
            }
        }
    }
    for (name, b) in bodies4.iter() {
        for k in 1..=4 {
            let got = ValuationEvaluator::c(k, 2, 2, samples)?.evaluate(b, &mut rng.fork())?;
            let want = intrinsic_volume(b, k, &mut rng.fork())?;
            let label = if k == 4 { "vol".to_string() } else { format!("V_{k}") };
            checks.push(Check::new(
                format!("n=2 C_{{{k},2}}({name}) = {label}"),
                got.agrees_with(&want, params.sigma),
                Some(got.sigma_distance(&want)),
                json!({"got": est_json(&got), "expected": est_json(&want)}),
            ));
        }
    }
    checks.extend(duality_identities(rng)?);
    Ok(checks)
}

/// 𝔻χ = vol and 𝔻² = Id on Klain functions, compared plane by plane.
fn duality_identities(rng: &mut RandomStream) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let d = 4;
    let chi = klain_function(&ValuationEvaluator::euler(d));
    let vol = klain_function(&ValuationEvaluator::volume(d));
    let full = Subspace::full(d);
    let a = duality(&chi).eval(&full, &mut rng.fork())?;
    let b = vol.eval(&full, &mut rng.fork())?;
    let err = (a.value - b.value).abs();
    checks.push(Check::new("D(chi) = vol", err <= 1e-12, None, json!({"abs_error": err})));

    let f = klain_function(&ValuationEvaluator::c(2, 1, 2, 500)?);
    let dd = duality(&duality(&f));
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let e = sample_subspace(2, d, rng)?;
        let s = rng.fork();
        let x = f.eval(&e, &mut s.clone())?;
        let y = dd.eval(&e, &mut s.clone())?;
        worst = worst.max((x.value - y.value).abs() / x.value.abs().max(1.0));
    }
    checks.push(Check::new("D^2 = Id on klain(C_{2,1})", worst <= 1e-12, None, json!({"max_relative_error": worst})));
    Ok(checks)
}

fn spread_check(name: String, r: &RatioReport, limit: f64) -> Check {
    Check::new(
        name,
        r.relative_spread <= limit && r.ratios.len() >= 2,
        None,
        ratio_json(r),
    )
}

fn lefschetz(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let n = params.n.unwrap_or(2);
    let samples = params.samples_or(10_000);
    let cases: Vec<(usize, usize)> = match (params.k, params.l) {
        (Some(k), Some(l)) => vec![(k, l)],
        (None, None) if n == 2 => vec![(1, 1), (2, 2), (3, 2)],
        _ => return Err(Error::Argument("give both --k and --l, or neither (n = 2 defaults)".into())),
    };
    cases
        .into_iter()
        .map(|(k, l)| {
            let r = verify_lefschetz(n, k, l, &mut rng.fork(), samples, 20)?;
            Ok(spread_check(format!("n={n} Lambda(C_{{{},{l}}}) / C_{{{k},{l}}}", k + 1), &r, 0.03))
        })
        .collect()
}

fn dual(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let n = params.n.unwrap_or(2);
    let k = params.k.unwrap_or(2);
    let p = params.p.unwrap_or(1);
    let samples = params.samples_or(20_000);
    let r = verify_u_equals_dual_c(k, p, n, &mut rng.fork(), samples, 20)?;
    let mut checks = vec![spread_check(
        format!("n={n} klain(U_{{{k},{p}}})(L) / klain(C_{{{},{}}})(L^perp)", 2 * n - k, n - p),
        &r,
        0.03,
    )];
    checks.extend(duality_identities(rng)?);
    Ok(checks)
}

fn gram(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let n = params.n.unwrap_or(2);
    let samples = params.samples_or(10_000);
    let ks: Vec<usize> = match params.k {
        Some(k) => vec![k],
        None => (0..=2 * n).collect(),
    };
    ks.into_iter()
        .map(|k| {
            // the two-column degree needs a lower noise floor to show its gap
            let s = if (k / 2).min((2 * n - k) / 2) > 0 { 4 * samples } else { samples };
            let g = gram_rank(n, k, &mut rng.fork(), s, 40)?;
            Ok(Check::new(
                format!("n={n} k={k} rank"),
                g.rank == g.expected_rank && g.gap >= 10.0,
                None,
                json!({
                    "rank": g.rank,
                    "expected_rank": g.expected_rank,
                    "gap": g.gap,
                    "singular_values": g.singular_values,
                    "noise": g.noise,
                    "columns": g.columns,
                }),
            ))
        })
        .collect()
}

/// klain(φ)(E) for φ = C_{2,1} at gr24 planes against (x₂ − ½)² + ¼.
fn klain_formula_checks(samples: usize, planes: usize, sigma: f64, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let phi = klain_function(&ValuationEvaluator::c(2, 1, 2, samples)?);
    (0..planes)
        .map(|i| {
            let t1 = gr24_sphere_point(rng);
            let t2 = gr24_sphere_point(rng);
            let e = gr24_plane(t1, t2)?;
            let got = phi.eval(&e, &mut rng.fork())?;
            let want = Estimate::exact((t2[0] - 0.5).powi(2) + 0.25);
            Ok(Check::new(
                format!("klain(phi) formula at plane {i}"),
                got.agrees_with(&want, sigma),
                Some(got.sigma_distance(&want)),
                json!({"t1": t1, "t2": t2, "got": est_json(&got), "expected": want.value}),
            ))
        })
        .collect()
}

fn c2(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let samples = params.samples_or(40_000);
    let mut bodies = vec![("ball".to_string(), Body::unit_ball(4))];
    for (i, b) in families::random_c2_polytopes(10, 10, rng)
        .into_iter()
        .enumerate()
    {
        bodies.push((format!("random polytope {i}"), b));
    }
    let (names, bodies): (Vec<String>, Vec<Body>) = bodies.into_iter().unzip();
    let results = verify_c2_identity(&bodies, &mut rng.fork(), samples, params.sigma)?;
    let mut checks: Vec<Check> = names
        .into_iter()
        .zip(results)
        .map(|(name, r)| {
            Check::new(
                format!("phi + 2 psi = V_2 on {name}"),
                r.pass,
                Some(r.sigmas),
                json!({
                    "phi": est_json(&r.phi),
                    "psi": est_json(&r.psi),
                    "v2": est_json(&r.v2),
                    "delta": est_json(&r.delta),
                    "relative_sigma": r.relative_sigma,
                }),
            )
        })
        .collect();
    let ball_v2 = intrinsic_volume(&Body::unit_ball(4), 2, &mut rng.fork())?;
    let err = (ball_v2.value - 3.0 * std::f64::consts::PI).abs();
    checks.push(Check::new("V_2(B^4) = 3 pi", err <= 1e-12, None, json!({"v2": ball_v2.value})));
    checks.extend(klain_formula_checks(params.samples_or(80_000), 20, params.sigma, rng)?);
    Ok(checks)
}

fn klain(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let d = 4;
    for k in 0..=d {
        let f = klain_function(&ValuationEvaluator::intrinsic(k, d)?);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let e = sample_subspace(k, d, rng)?;
            worst = worst.max((f.eval(&e, &mut rng.fork())?.value - 1.0).abs());
        }
        checks.push(Check::new(format!("klain(V_{k}) = 1"), worst <= 1e-9, None, json!({"max_abs_error": worst})));
    }
    let samples = params.samples_or(20_000);
    let phi = ValuationEvaluator::c(2, 1, 2, samples)?;
    let cube: KlainFunction = klain_function_with_probe(&phi, Probe::Cube);
    let cross: KlainFunction = klain_function_with_probe(&phi, Probe::CrossPolytope);
    for i in 0..5 {
        let e = sample_subspace(2, d, rng)?;
        let a = cube.eval(&e, &mut rng.fork())?;
        let b = cross.eval(&e, &mut rng.fork())?;
        checks.push(Check::new(
            format!("cube and cross-polytope probes agree at plane {i}"),
            a.agrees_with(&b, params.sigma),
            Some(a.sigma_distance(&b)),
            json!({"cube": est_json(&a), "cross": est_json(&b), "frame": frame_rows(&e)}),
        ));
    }
    checks.extend(klain_formula_checks(samples, 20, params.sigma, rng)?);
    Ok(checks)
}

fn random_polytope_pair(d: usize, rng: &mut RandomStream) -> Result<(Polytope, Polytope, Polytope, Polytope)> {
    let p = shapes::gaussian_polytope(12, d, rng);
    let c = p.centroid_of_vertices();
    let normal = hermval::bodies::random_unit(d, rng);
    let (lo, hi, cut) = split_polytope(&p, &normal, normal.dot(&c))?;
    match (lo, hi, cut) {
        (Some(lo), Some(hi), Some(cut)) => Ok((p, lo, hi, cut)),
        _ => Err(Error::Numerical("cut through the centroid missed the polytope".into())),
    }
}

/// Pseudovolume properties and its fit by the C_{n,l}.
fn kaz_span(params: &SuiteParams, rng: &mut RandomStream) -> Result<Vec<Check>> {
    let n = params.n.unwrap_or(2);
    let d = 2 * n;
    let kaz = ValuationEvaluator::kazarnovskii(n)?;
    let eval = |p: &Polytope, r: &mut RandomStream| kaz.evaluate(&Body::Polytope(p.clone()), r);
    let mut checks = Vec::new();
    for t in 0..3 {
        let (p, lo, hi, cut) = random_polytope_pair(d, rng)?;
        let whole = eval(&p, &mut rng.fork())?;
        let parts = eval(&lo, &mut rng.fork())?.add(eval(&hi, &mut rng.fork())?).sub(eval(&cut, &mut rng.fork())?);
        checks.push(Check::new(
            format!("additivity on cut polytope {t}"),
            whole.agrees_with(&parts, params.sigma),
            Some(whole.sigma_distance(&parts)),
            json!({"whole": est_json(&whole), "pieces": est_json(&parts)}),
        ));
        let shift = DVector::from_fn(d, |i, _| 0.7 - 0.3 * i as f64);
        let moved = eval(&p.translate(&shift)?, &mut rng.fork())?;
        checks.push(Check::new(
            format!("translation invariance on polytope {t}"),
            moved.agrees_with(&whole, params.sigma),
            Some(moved.sigma_distance(&whole)),
            json!({"original": est_json(&whole), "translated": est_json(&moved)}),
        ));
        let lambda = 1.7;
        let scaled = eval(&p.scale_by(lambda)?, &mut rng.fork())?;
        let want = whole.scale(lambda.powi(n as i32));
        checks.push(Check::new(
            format!("degree-{n} homogeneity on polytope {t}"),
            scaled.agrees_with(&want, params.sigma),
            Some(scaled.sigma_distance(&want)),
            json!({"scaled": est_json(&scaled), "expected": est_json(&want), "lambda": lambda}),
        ));
    }
    let samples = params.samples_or(20_000);
    let span = kazarnovskii_span(n, &mut rng.fork(), samples, 40)?;
    checks.push(Check::new(
        format!("pseudovolume in span of C_{{{n},l}}"),
        span.fit.relative_residual <= 0.03,
        None,
        json!({
            "levels": span.levels,
            "coefficients": span.fit.coefficients,
            "sigmas": (0..span.levels.len()).map(|i| span.fit.sigma(i)).collect::<Vec<_>>(),
            "relative_residual": span.fit.relative_residual,
        }),
    ));
    Ok(checks)
}
