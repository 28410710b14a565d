//! Constant estimation on the built-in body families, with a held-out
//! prediction for each fit.

use hermval::families;
use hermval::geomlin::ComplexStructure;
use hermval::kinematics::{
    beta_row, c2_profile, complex_crofton_lhs, kappa_row, lagrangian_crofton_lhs, principal_kinematic_lhs,
    solve_beta, solve_gamma, solve_kappa, ConstantFit,
};
use hermval::valuations::eval_u;
use hermval::{Error, Estimate, RandomStream, Result};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Kappa,
    Beta,
    Gamma,
}

#[derive(Clone, Debug)]
pub struct ConstantsRequest {
    pub which: Which,
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    /// Outer Monte-Carlo draws for the left-hand sides; `None` takes the
    /// default of each fit.
    pub samples: Option<usize>,
}

impl ConstantsRequest {
    pub fn new(which: Which) -> Self {
        let n = if which == Which::Gamma { 3 } else { 2 };
        Self { which, n, k: 3, p: 1, q: 2, samples: None }
    }
}

/// Fitted constants plus the model prediction and measured value on a body
/// (or pair) left out of the fit.
#[derive(Clone, Debug)]
pub struct ConstantsReport {
    pub fit: ConstantFit,
    pub predicted: Estimate,
    pub measured: Estimate,
}

impl ConstantsReport {
    pub fn heldout_relative_error(&self) -> f64 {
        (self.predicted.value - self.measured.value).abs() / self.measured.value.abs()
    }

    /// |predicted − measured| over their combined standard error.
    pub fn heldout_sigma(&self) -> f64 {
        self.predicted.sigma_distance(&self.measured)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.fit.to_json();
        v["heldout"] = json!({
            "predicted": self.predicted.value,
            "predicted_sigma": self.predicted.std_error,
            "measured": self.measured.value,
            "measured_sigma": self.measured.std_error,
            "relative_error": self.heldout_relative_error(),
            "deviation_sigma": self.heldout_sigma(),
        });
        v
    }
}

const PROFILE_SAMPLES: usize = 20_000;

fn prediction(fit: &ConstantFit, row: &[f64]) -> Estimate {
    Estimate { value: fit.predict(row), std_error: fit.predict_sigma(row), samples: 0, seed: 0 }
}

pub fn run_constants(req: &ConstantsRequest, rng: &mut RandomStream) -> Result<ConstantsReport> {
    match req.which {
        Which::Kappa => {
            if req.n != 2 {
                return Err(Error::Argument(format!("kappa is supported for n = 2, got --n {}", req.n)));
            }
            let samples = req.samples.unwrap_or(400);
            let pairs = families::kappa_training_pairs()?;
            let fit = solve_kappa(2, &pairs, &mut rng.fork(), samples, PROFILE_SAMPLES)?;
            let (a, b) = families::kappa_heldout_pair()?;
            let pa = c2_profile(&a, &mut rng.fork(), PROFILE_SAMPLES)?;
            let pb = c2_profile(&b, &mut rng.fork(), PROFILE_SAMPLES)?;
            let (row, _) = kappa_row(&pa, &pb);
            let measured = principal_kinematic_lhs(&a, &b, &ComplexStructure::new(2), &mut rng.fork(), samples)?;
            Ok(ConstantsReport { predicted: prediction(&fit, &row), fit, measured })
        }
        Which::Beta => {
            if req.n != 2 {
                return Err(Error::Argument(format!("beta is supported for n = 2, got --n {}", req.n)));
            }
            let samples = req.samples.unwrap_or(20_000);
            let bodies = families::beta_training_bodies()?;
            let fit = solve_beta(2, &bodies, &mut rng.fork(), samples, PROFILE_SAMPLES)?;
            let b = families::beta_heldout_body()?;
            let (row, _) = beta_row(&c2_profile(&b, &mut rng.fork(), PROFILE_SAMPLES)?);
            let measured = lagrangian_crofton_lhs(&b, &ComplexStructure::new(2), &mut rng.fork(), samples)?;
            Ok(ConstantsReport { predicted: prediction(&fit, &row), fit, measured })
        }
        Which::Gamma => {
            if req.n != 3 {
                return Err(Error::Argument(format!("gamma is supported for n = 3, got --n {}", req.n)));
            }
            let samples = req.samples.unwrap_or(20_000);
            let bodies = families::gamma_training_bodies()?;
            let fit = solve_gamma(3, req.k, req.p, req.q, &bodies, &mut rng.fork(), samples, 1, 1000)?;
            let b = families::gamma_heldout_body()?;
            let j = ComplexStructure::new(3);
            let m = req.k + 2 * (3 - req.q);
            let row: Vec<f64> = (0..fit.values.len())
                .map(|c| Ok(eval_u(m, c, &b, &j, &mut rng.fork(), 1000)?.value))
                .collect::<Result<_>>()?;
            let measured = complex_crofton_lhs(&b, req.k, req.p, req.q, &j, &mut rng.fork(), samples, 1)?;
            Ok(ConstantsReport { predicted: prediction(&fit, &row), fit, measured })
        }
    }
}
