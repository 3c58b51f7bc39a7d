//! Checks that a decay-rate estimate survives linear rescaling of the
//! failure counts.
//!
//! Counting failures up to a reference answer instead of any correct answer
//! is only safe if the two counts differ by a constant factor and the counts
//! follow a power law: then `P(kX = x) ∝ x^-alpha` keeps the exponent. The
//! linear relation itself needs doubly labelled data and is not tested here;
//! this module verifies the consequence, that scaling the counts by `k` (and
//! the fit window with them) leaves alpha and the level unchanged.

use serde::Serialize;

use crate::classifier::{classify, IntelligenceLevel};
use crate::distributions::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::powerlaw::{fit_powerlaw, FitRange, PowerLawFit};
use crate::records::FailureRecord;

/// Below this r^2 the original data is not plausibly a power law.
pub const ASSUMPTION_R_SQUARED: f64 = 0.95;

pub const SCOPE_NOTE: &str = "verifies exponent preservation under linear scaling only; \
     the linear relation between reference-based and true failure counts is not tested";

/// Multiplies every failure count by `k`; ids, weights and extra fields are kept.
pub fn scale_records(records: &[FailureRecord], k: u64) -> Result<Vec<FailureRecord>> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "scale factor k must be at least 1".into(),
        ));
    }
    records
        .iter()
        .map(|r| {
            let failure_count = r.failure_count.checked_mul(k).ok_or_else(|| {
                Error::InvalidArgument(format!("failure count {} * {k} overflows", r.failure_count))
            })?;
            Ok(FailureRecord {
                failure_count,
                ..r.clone()
            })
        })
        .collect()
}

/// Inverse of [`scale_records`]; fails unless every count is divisible by `k`.
pub fn unscale_records(records: &[FailureRecord], k: u64) -> Result<Vec<FailureRecord>> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "scale factor k must be at least 1".into(),
        ));
    }
    records
        .iter()
        .map(|r| {
            if r.failure_count % k != 0 {
                return Err(Error::InvalidArgument(format!(
                    "failure count {} is not a multiple of {k}",
                    r.failure_count
                )));
            }
            Ok(FailureRecord {
                failure_count: r.failure_count / k,
                ..r.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub k: u64,
    pub alpha_original: f64,
    pub alpha_scaled: f64,
    pub delta: f64,
    pub level_original: IntelligenceLevel,
    pub level_scaled: IntelligenceLevel,
    pub levels_match: bool,
    pub r_squared_original: f64,
    /// Original fit too poor (r^2 below 0.95) for the power-law premise.
    pub assumption_violated: bool,
    pub original_fit: PowerLawFit,
    pub scaled_fit: PowerLawFit,
    pub scope: &'static str,
}

/// Fits the distribution on `range` and its `k`-scaled copy on `k * range`.
pub fn check_distribution_invariance(
    dist: &EmpiricalDistribution,
    k: u64,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<InvarianceReport> {
    compare_fits(dist, &dist.scale_support(k)?, k, range, bins_per_decade)
}

/// Scales the records by `k` and compares fits of the original and scaled
/// sets.
pub fn check_exponent_invariance(
    records: &[FailureRecord],
    k: u64,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<InvarianceReport> {
    let scaled = scale_records(records, k)?;
    compare_fits(
        &EmpiricalDistribution::from_records(records)?,
        &EmpiricalDistribution::from_records(&scaled)?,
        k,
        range,
        bins_per_decade,
    )
}

fn compare_fits(
    original: &EmpiricalDistribution,
    scaled: &EmpiricalDistribution,
    k: u64,
    range: FitRange,
    bins_per_decade: u32,
) -> Result<InvarianceReport> {
    let original_fit = fit_powerlaw(original, range, bins_per_decade)?;
    let scaled_fit = fit_powerlaw(scaled, range.scaled(k)?, bins_per_decade)?;
    let level_original = classify(&original_fit)?;
    let level_scaled = classify(&scaled_fit)?;
    Ok(InvarianceReport {
        k,
        alpha_original: original_fit.alpha,
        alpha_scaled: scaled_fit.alpha,
        delta: (original_fit.alpha - scaled_fit.alpha).abs(),
        level_original,
        level_scaled,
        levels_match: level_original == level_scaled,
        r_squared_original: original_fit.r_squared,
        assumption_violated: original_fit.r_squared < ASSUMPTION_R_SQUARED,
        original_fit,
        scaled_fit,
        scope: SCOPE_NOTE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{geometric_pmf, DiscretePowerLaw};

    #[test]
    fn scaling_multiplies_counts() {
        let recs: Vec<_> = [1, 5, 10]
            .iter()
            .map(|&c| FailureRecord::new(format!("i{c}"), c))
            .collect();
        let scaled = scale_records(&recs, 3).unwrap();
        assert_eq!(
            scaled.iter().map(|r| r.failure_count).collect::<Vec<_>>(),
            [3, 15, 30]
        );
        assert_eq!(scaled[1].instance_id, "i5");
        assert_eq!(scale_records(&recs, 1).unwrap(), recs);
        assert!(scale_records(&recs, 0).is_err());
        assert_eq!(unscale_records(&scaled, 3).unwrap(), recs);
        assert!(unscale_records(&recs, 3).is_err());
    }

    #[test]
    fn scaling_commutes_with_distribution() {
        let recs: Vec<_> = [0, 2, 2, 9]
            .iter()
            .map(|&c| FailureRecord::new("x", c))
            .collect();
        let a = EmpiricalDistribution::from_records(&scale_records(&recs, 4).unwrap()).unwrap();
        let b = EmpiricalDistribution::from_records(&recs)
            .unwrap()
            .scale_support(4)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_power_law_is_invariant() {
        let dist = DiscretePowerLaw::new(2.5, 1, 10_000).unwrap().pmf();
        for k in [2, 3, 7, 10] {
            let r = check_distribution_invariance(&dist, k, FitRange::default(), 10).unwrap();
            assert!(r.delta <= 0.02, "k {k}: delta {}", r.delta);
            assert!(r.levels_match);
            assert!(!r.assumption_violated);
        }
    }

    #[test]
    fn geometric_tail_is_flagged() {
        let dist = geometric_pmf(0.05, 2000).unwrap();
        let r = check_distribution_invariance(&dist, 2, FitRange::default(), 10).unwrap();
        assert!(
            r.r_squared_original < ASSUMPTION_R_SQUARED,
            "r2 {}",
            r.r_squared_original
        );
        assert!(r.assumption_violated);
    }
}
