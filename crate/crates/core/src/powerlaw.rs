//! Decay-rate estimation: fit `P(X = x) = C x^-alpha` to a failure-count
//! distribution over a fixed count window.
//!
//! The default estimator is least squares on log-binned densities. Bins are
//! anchored at the window's lower end, and each bin is placed at the geometric
//! mean of the first and last lattice point it holds, which keeps the discrete
//! bins unbiased for steep exponents. A discrete truncated maximum-likelihood
//! estimator is available as a cross-check.

use serde::{Deserialize, Serialize};

use crate::distributions::{log_bin_window, EmpiricalDistribution, LogBinnedDistribution};
use crate::error::{Error, Result};
use crate::regression::{ols, LinearFit};

/// A fit needs at least this many non-empty bins.
pub const MIN_FIT_POINTS: usize = 3;

/// Inclusive failure-count window used for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRange {
    pub x_min: u64,
    pub x_max: u64,
}

impl FitRange {
    pub fn new(x_min: u64, x_max: u64) -> Result<Self> {
        if x_min < 1 || x_max <= x_min {
            return Err(Error::InvalidArgument(format!(
                "fit range needs 1 <= x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(FitRange { x_min, x_max })
    }

    /// `[k * x_min, k * x_max]`.
    pub fn scaled(&self, k: u64) -> Result<Self> {
        let mul = |x: u64| {
            x.checked_mul(k)
                .ok_or_else(|| Error::InvalidArgument(format!("range bound {x} * {k} overflows")))
        };
        FitRange::new(mul(self.x_min)?, mul(self.x_max)?)
    }

    pub fn contains(&self, x: u64) -> bool {
        (self.x_min..=self.x_max).contains(&x)
    }
}

impl Default for FitRange {
    fn default() -> Self {
        FitRange {
            x_min: 10,
            x_max: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "logbin-least-squares")]
    LogBinLeastSquares,
    #[serde(rename = "mle-discrete")]
    MleDiscrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Decay rate.
    pub alpha: f64,
    /// log10 of the prefactor C in density units (mass per lattice point).
    pub log_c: f64,
    #[serde(flatten)]
    pub range: FitRange,
    pub r_squared: f64,
    pub points_used: usize,
    pub method: FitMethod,
    /// Advisory standard error of alpha.
    pub alpha_std_err: f64,
}

impl PowerLawFit {
    /// Fitted density at `x`.
    pub fn density_at(&self, x: f64) -> f64 {
        10f64.powf(self.log_c - self.alpha * x.log10())
    }
}

/// Log-binned points inside the window: `(log10 center, log10 density)`.
fn binned_points(
    dist: &EmpiricalDistribution,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let binned: LogBinnedDistribution = log_bin_window(
        dist,
        bins_per_decade,
        range.x_min as f64,
        range.x_max as f64,
    )?;
    Ok(binned
        .nonempty()
        .map(|b| {
            (
                b.center().expect("non-empty bin has a span").log10(),
                b.density.log10(),
            )
        })
        .unzip())
}

fn regression(
    dist: &EmpiricalDistribution,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<LinearFit> {
    let (xs, ys) = binned_points(dist, range, bins_per_decade)?;
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            found: xs.len(),
            required: MIN_FIT_POINTS,
        });
    }
    ols(&xs, &ys)
}

/// Least squares of log density on log bin center over the bins inside
/// `range`; empty bins are skipped.
pub fn fit_powerlaw(
    dist: &EmpiricalDistribution,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<PowerLawFit> {
    let line = regression(dist, range, bins_per_decade)?;
    Ok(PowerLawFit {
        alpha: -line.slope,
        log_c: line.intercept,
        range,
        r_squared: line.r_squared,
        points_used: line.n,
        method: FitMethod::LogBinLeastSquares,
        alpha_std_err: line.slope_std_err,
    })
}

/// Maximum likelihood for the discrete power law truncated to `range`. The
/// normalizer runs over the lattice the data lives on, so data that is a
/// multiple of some k is treated as living on `k * Z`. `r_squared` comes
/// from the binned regression with `bins_per_decade`.
pub fn fit_powerlaw_mle(
    dist: &EmpiricalDistribution,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = dist
        .iter()
        .filter(|&(x, _)| range.contains(x))
        .map(|(x, m)| ((x as f64).ln(), m))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            found: points.len(),
            required: 2,
        });
    }
    let line = regression(dist, range, bins_per_decade)?;

    let in_range: f64 = points.iter().map(|p| p.1).sum();
    let mean_log = points.iter().map(|(lx, m)| lx * m).sum::<f64>() / in_range;

    let step = dist.lattice_step().unwrap_or(1);
    let lattice: Vec<f64> = (range.x_min.div_ceil(step)..=range.x_max / step)
        .map(|j| ((j * step) as f64).ln())
        .collect();
    let model = TruncatedModel { log_x: &lattice };

    // d/dalpha of the mean log-likelihood is E_alpha[ln x] - mean_log, and
    // E_alpha[ln x] is strictly decreasing in alpha.
    let (mut lo, mut hi) = (-20.0_f64, 50.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.mean_log(mid) > mean_log {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);

    let n_eff = dist.total_weight() * in_range;
    let var_log = model.var_log(alpha);
    let alpha_std_err = if var_log > 0.0 {
        1.0 / (n_eff * var_log).sqrt()
    } else {
        f64::NAN
    };

    Ok(PowerLawFit {
        alpha,
        log_c: (in_range.ln() - model.log_normalizer(alpha)) / std::f64::consts::LN_10,
        range,
        r_squared: line.r_squared,
        points_used: points.len(),
        method: FitMethod::MleDiscrete,
        alpha_std_err,
    })
}

struct TruncatedModel<'a> {
    log_x: &'a [f64],
}

impl TruncatedModel<'_> {
    /// Log-sum-exp of `-alpha * ln x` shifted by the largest exponent.
    fn shifted_weights(&self, alpha: f64) -> (f64, impl Iterator<Item = (f64, f64)> + '_) {
        let shift = self
            .log_x
            .iter()
            .map(|lx| -alpha * lx)
            .fold(f64::NEG_INFINITY, f64::max);
        (
            shift,
            self.log_x
                .iter()
                .map(move |&lx| (lx, (-alpha * lx - shift).exp())),
        )
    }

    fn log_normalizer(&self, alpha: f64) -> f64 {
        let (shift, w) = self.shifted_weights(alpha);
        shift + w.map(|(_, w)| w).sum::<f64>().ln()
    }

    fn mean_log(&self, alpha: f64) -> f64 {
        let (_, w) = self.shifted_weights(alpha);
        let (s, z) = w.fold((0.0, 0.0), |(s, z), (lx, w)| (s + lx * w, z + w));
        s / z
    }

    fn var_log(&self, alpha: f64) -> f64 {
        let mean = self.mean_log(alpha);
        let (_, w) = self.shifted_weights(alpha);
        let (s, z) = w.fold((0.0, 0.0), |(s, z), (lx, w)| {
            (s + (lx - mean).powi(2) * w, z + w)
        });
        s / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::DiscretePowerLaw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_range() -> FitRange {
        FitRange::default()
    }

    #[test]
    fn closed_form_pmf_recovers_exponent() {
        let dist = DiscretePowerLaw::new(2.5, 1, 10_000).unwrap().pmf();
        let fit = fit_powerlaw(&dist, default_range(), 10).unwrap();
        assert!((fit.alpha - 2.5).abs() <= 0.02, "alpha {}", fit.alpha);
        assert!(fit.r_squared >= 0.999);
        assert_eq!(fit.points_used, 10);
        assert_eq!(fit.method, FitMethod::LogBinLeastSquares);
    }

    #[test]
    fn flat_tail_has_zero_slope() {
        let dist = EmpiricalDistribution::from_counts(10..=100).unwrap();
        let fit = fit_powerlaw(&dist, default_range(), 10).unwrap();
        assert!(fit.alpha.abs() <= 0.05, "alpha {}", fit.alpha);
    }

    #[test]
    fn sampled_power_law() {
        let pl = DiscretePowerLaw::new(3.5, 10, 10_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let dist = EmpiricalDistribution::from_counts(pl.sample_n(&mut rng, 1_000_000)).unwrap();
        let ols_fit = fit_powerlaw(&dist, default_range(), 10).unwrap();
        let mle_fit = fit_powerlaw_mle(&dist, default_range(), 10).unwrap();
        assert!((ols_fit.alpha - 3.5).abs() <= 0.1, "ols {}", ols_fit.alpha);
        assert!(
            (mle_fit.alpha - ols_fit.alpha).abs() <= 0.15,
            "mle {}",
            mle_fit.alpha
        );
    }

    #[test]
    fn mle_on_exact_truncated_pmf() {
        let dist = DiscretePowerLaw::new(2.5, 10, 100).unwrap().pmf();
        let fit = fit_powerlaw_mle(&dist, default_range(), 10).unwrap();
        assert!((fit.alpha - 2.5).abs() <= 0.01, "alpha {}", fit.alpha);
        assert_eq!(fit.method, FitMethod::MleDiscrete);
        assert_eq!(fit.points_used, 91);
        // log_c reproduces the pmf: C x^-alpha at x = 10.
        assert!((fit.density_at(10.0) / dist.mass_at(10) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mle_agrees_with_grid_search_likelihood() {
        // Independent brute force: scan the log-likelihood on a fine grid.
        let dist = EmpiricalDistribution::from_counts([10, 10, 10, 11, 12, 15, 15, 20, 33, 50, 97])
            .unwrap();
        let fit = fit_powerlaw_mle(&dist, default_range(), 5).unwrap();
        let ll = |a: f64| {
            let z: f64 = (10..=100).map(|x| (x as f64).powf(-a)).sum();
            dist.iter()
                .filter(|(x, _)| (10..=100).contains(x))
                .map(|(x, m)| m * (-a * (x as f64).ln() - z.ln()))
                .sum::<f64>()
        };
        let best = (0..=8000)
            .map(|i| i as f64 * 0.001)
            .max_by(|a, b| ll(*a).total_cmp(&ll(*b)))
            .unwrap();
        assert!((fit.alpha - best).abs() < 2e-3, "{} vs {}", fit.alpha, best);
    }

    #[test]
    fn mass_at_one_point_is_insufficient() {
        let dist = EmpiricalDistribution::from_counts([1, 2, 42, 42, 42, 500]).unwrap();
        assert!(matches!(
            fit_powerlaw_mle(&dist, default_range(), 10),
            Err(Error::InsufficientData { found: 1, .. })
        ));
        assert!(matches!(
            fit_powerlaw(&dist, default_range(), 10),
            Err(Error::InsufficientData {
                found: 1,
                required: 3
            })
        ));
    }

    #[test]
    fn two_bins_are_insufficient() {
        let dist = EmpiricalDistribution::from_counts([10, 11, 12, 13]).unwrap();
        let err = fit_powerlaw(&dist, default_range(), 10).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                found: 2,
                required: 3
            }
        ));
    }

    #[test]
    fn weights_scale_does_not_matter() {
        let pairs: Vec<(u64, f64)> = (10..=100).map(|x| (x, 1.0 + (x % 7) as f64)).collect();
        let a = EmpiricalDistribution::from_weighted_counts(pairs.iter().copied()).unwrap();
        let b =
            EmpiricalDistribution::from_weighted_counts(pairs.iter().map(|&(x, w)| (x, w * 37.5)))
                .unwrap();
        let fa = fit_powerlaw(&a, default_range(), 10).unwrap();
        let fb = fit_powerlaw(&b, default_range(), 10).unwrap();
        assert!((fa.alpha - fb.alpha).abs() < 1e-12);
    }

    #[test]
    fn range_validation() {
        assert!(FitRange::new(0, 10).is_err());
        assert!(FitRange::new(10, 10).is_err());
        assert_eq!(
            FitRange::new(10, 100).unwrap().scaled(7).unwrap(),
            FitRange::new(70, 700).unwrap()
        );
    }

    #[test]
    fn report_json_shape() {
        let dist = DiscretePowerLaw::new(2.0, 1, 1000).unwrap().pmf();
        let fit = fit_powerlaw(&dist, default_range(), 10).unwrap();
        let v = serde_json::to_value(&fit).unwrap();
        for key in [
            "alpha",
            "log_c",
            "x_min",
            "x_max",
            "r_squared",
            "points_used",
            "method",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["method"], "logbin-least-squares");
        assert_eq!(v["x_min"], 10);
    }
}
