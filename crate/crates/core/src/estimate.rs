//! Monte-Carlo results and the chunked, thread-count-independent driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stream::RandomStream;

/// Normalization conventions every reported number is stamped with.
pub const CONVENTION: &str = "V0=chi;Haar=prob;dx=Lebesgue";

/// Samples handled by one substream. Fixed so the partition of work, and
/// hence every draw, is independent of the number of worker threads.
const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Zero flags an exact result.
    pub samples: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: 0,
            seed: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.samples == 0
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            ..self
        }
    }

    /// Sum of independent estimates.
    pub fn add(self, other: Estimate) -> Self {
        Self {
            value: self.value + other.value,
            std_error: self.std_error.hypot(other.std_error),
            samples: self.samples.max(other.samples),
            seed: self.seed,
        }
    }

    pub fn sub(self, other: Estimate) -> Self {
        self.add(other.scale(-1.0))
    }

    /// Ratio of independent estimates with first-order error propagation.
    pub fn ratio(self, other: Estimate) -> Self {
        let value = self.value / other.value;
        let rel = (self.std_error / self.value).hypot(other.std_error / other.value);
        Self {
            value,
            std_error: if rel.is_finite() { (value * rel).abs() } else { f64::INFINITY },
            samples: self.samples.max(other.samples),
            seed: self.seed,
        }
    }

    /// |a − b| in units of the combined standard error, after discounting a
    /// 1e-9 relative rounding floor; infinite when both are exact and differ
    /// by more than the floor.
    pub fn sigma_distance(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let floor = 1e-9 * self.value.abs().max(other.value.abs()).max(1.0);
        let excess = (diff - floor).max(0.0);
        let sigma = self.std_error.hypot(other.std_error);
        if excess == 0.0 {
            0.0
        } else if sigma > 0.0 {
            excess / sigma
        } else {
            f64::INFINITY
        }
    }

    /// Within `nsigma` combined standard errors, up to the rounding floor.
    pub fn agrees_with(&self, other: &Estimate, nsigma: f64) -> bool {
        self.sigma_distance(other) <= nsigma
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
            "convention": CONVENTION,
        })
    }
}

/// Running moments for a vector of per-sample quantities.
#[derive(Clone, Debug)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    // Co-moment matrix, row-major.
    comoment: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    fn push(&mut self, x: &[f64], delta: &mut [f64]) {
        let dim = self.mean.len();
        self.count += 1;
        let n = self.count as f64;
        for i in 0..dim {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / n;
        }
        for i in 0..dim {
            let after = x[i] - self.mean[i];
            for j in 0..dim {
                self.comoment[i * dim + j] += delta[j] * after;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let dim = self.mean.len();
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..dim).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..dim {
            for j in 0..dim {
                self.comoment[i * dim + j] +=
                    other.comoment[i * dim + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..dim {
            self.mean[i] += delta[i] * nb / n;
        }
        self.count += other.count;
    }
}

/// Sample mean of a vector-valued integrand with the covariance of that mean.
#[derive(Clone, Debug)]
pub struct VectorEstimate {
    pub mean: Vec<f64>,
    /// Covariance of `mean` (already divided by the sample count), row-major.
    pub covariance: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
}

impl VectorEstimate {
    pub fn component(&self, i: usize) -> Estimate {
        let dim = self.mean.len();
        Estimate {
            value: self.mean[i],
            std_error: self.covariance[i * dim + i].max(0.0).sqrt(),
            samples: self.samples,
            seed: self.seed,
        }
    }
}

/// Mean of `f` over `samples` draws, each chunk of draws on its own substream.
pub fn monte_carlo<F>(stream: &mut RandomStream, samples: usize, f: F) -> Result<Estimate>
where
    F: Fn(&mut RandomStream) -> Result<f64> + Sync,
{
    let v = monte_carlo_vec(stream, samples, 1, |s, out| {
        out[0] = f(s)?;
        Ok(())
    })?;
    Ok(v.component(0))
}

/// Vector version of [`monte_carlo`]: `f` writes `dim` quantities per draw.
pub fn monte_carlo_vec<F>(
    stream: &mut RandomStream,
    samples: usize,
    dim: usize,
    f: F,
) -> Result<VectorEstimate>
where
    F: Fn(&mut RandomStream, &mut [f64]) -> Result<()> + Sync,
{
    let base = stream.fork();
    let samples = samples.max(1);
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = base.substream(c as u64);
            let mut m = Moments::new(dim);
            let mut out = vec![0.0; dim];
            let mut scratch = vec![0.0; dim];
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                out.iter_mut().for_each(|v| *v = 0.0);
                f(&mut s, &mut out)?;
                m.push(&out, &mut scratch);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::new(dim);
    for p in parts {
        total.merge(&p?);
    }
    let n = total.count as f64;
    let denom = if total.count > 1 { (n - 1.0) * n } else { f64::INFINITY };
    Ok(VectorEstimate {
        mean: total.mean,
        covariance: total.comoment.iter().map(|c| c / denom).collect(),
        samples: total.count,
        seed: base.seed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn uniform_mean_is_half() {
        let mut s = RandomStream::new(3, 0);
        let e = monte_carlo(&mut s, 20_000, |r| Ok(r.random::<f64>())).unwrap();
        assert!((e.value - 0.5).abs() < 4.0 * e.std_error);
        // sd of U(0,1) is 1/sqrt(12)
        let expected_se = (1.0f64 / 12.0).sqrt() / (20_000f64).sqrt();
        assert!((e.std_error / expected_se - 1.0).abs() < 0.05);
    }

    #[test]
    fn independent_of_thread_count() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut s = RandomStream::new(99, 1);
                monte_carlo(&mut s, 5_000, |r| Ok(r.random::<f64>().powi(2))).unwrap()
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn vector_covariance_of_identical_components() {
        let mut s = RandomStream::new(5, 0);
        let v = monte_carlo_vec(&mut s, 4_000, 2, |r, out| {
            let x: f64 = r.random();
            out[0] = x;
            out[1] = x;
            Ok(())
        })
        .unwrap();
        assert!((v.covariance[1] - v.covariance[0]).abs() < 1e-15);
    }

    #[test]
    fn rounding_differences_are_not_deviations() {
        let a = Estimate { value: 6.0, std_error: 1e-16, samples: 10, seed: 0 };
        let b = Estimate::exact(6.0 - 1e-15);
        assert_eq!(a.sigma_distance(&b), 0.0);
        assert!(a.agrees_with(&b, 3.0));
        let c = Estimate::exact(6.1);
        assert!(a.sigma_distance(&c) > 1e10);
        assert!(!a.agrees_with(&c, 3.0));
    }

    #[test]
    fn ratio_propagates_relative_errors() {
        let a = Estimate { value: 2.0, std_error: 0.02, samples: 10, seed: 0 };
        let b = Estimate { value: 4.0, std_error: 0.04, samples: 10, seed: 0 };
        let r = a.ratio(b);
        assert!((r.value - 0.5).abs() < 1e-15);
        assert!((r.std_error - 0.5 * (2.0f64).sqrt() * 0.01).abs() < 1e-12);
    }
}
