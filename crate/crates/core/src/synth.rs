//! Synthetic failure-count generators: closed-form PMFs and seeded samplers.
//! Used for fixtures, self-checks and the `synth` CLI subcommand.

use rand::Rng;

use crate::distributions::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::records::FailureRecord;

/// Discrete power law `P(X = x) ∝ x^-alpha` on `x_min..=x_max`.
#[derive(Debug, Clone)]
pub struct DiscretePowerLaw {
    alpha: f64,
    x_min: u64,
    x_max: u64,
    cdf: Vec<f64>,
}

impl DiscretePowerLaw {
    pub fn new(alpha: f64, x_min: u64, x_max: u64) -> Result<Self> {
        if !alpha.is_finite() || x_min == 0 || x_max < x_min {
            return Err(Error::InvalidArgument(format!(
                "power law needs finite alpha and 1 <= x_min <= x_max (got {alpha}, {x_min}, {x_max})"
            )));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (x_min..=x_max)
            .map(|x| {
                acc += (x as f64).powf(-alpha);
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(DiscretePowerLaw {
            alpha,
            x_min,
            x_max,
            cdf,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pmf(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::from_pmf(
            (self.x_min..=self.x_max).map(|x| (x, (x as f64).powf(-self.alpha))),
        )
        .expect("power-law pmf has positive mass")
    }

    /// Inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
        self.x_min + i as u64
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// `n` sampled records with ids `"{prefix}{i}"`.
    pub fn records<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        prefix: &str,
    ) -> Vec<FailureRecord> {
        (0..n)
            .map(|i| FailureRecord::new(format!("{prefix}{i}"), self.sample(rng)))
            .collect()
    }
}

/// Geometric PMF `P(X = x) ∝ (1 - p)^x` on `0..=x_max`.
pub fn geometric_pmf(p: f64, x_max: u64) -> Result<EmpiricalDistribution> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "geometric p must be in (0, 1), got {p}"
        )));
    }
    let q = 1.0 - p;
    EmpiricalDistribution::from_pmf((0..=x_max).map(|x| (x, q.powf(x as f64))))
}
