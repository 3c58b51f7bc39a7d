//! Three-level classification of a decay rate, plus the data behind the
//! log-log region plot.
//!
//! A power-law tail `x^-alpha` has infinite mean and variance for
//! `alpha <= 2`, finite mean but infinite variance for `2 < alpha <= 3`, and
//! both finite above 3. The levels follow those inequalities exactly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::{log_bin, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::powerlaw::PowerLawFit;

pub const CAPABLE_BOUNDARY: f64 = 2.0;
pub const AUTONOMOUS_BOUNDARY: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntelligenceLevel {
    Limited,
    Capable,
    Autonomous,
}

impl IntelligenceLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntelligenceLevel::Limited => "Limited",
            IntelligenceLevel::Capable => "Capable",
            IntelligenceLevel::Autonomous => "Autonomous",
        }
    }
}

impl fmt::Display for IntelligenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Level for a decay rate. Non-finite rates are an error; every finite rate
/// (including non-positive ones) has a level.
pub fn classify_alpha(alpha: f64) -> Result<IntelligenceLevel> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "decay rate {alpha} is not finite"
        )));
    }
    Ok(if alpha <= CAPABLE_BOUNDARY {
        IntelligenceLevel::Limited
    } else if alpha <= AUTONOMOUS_BOUNDARY {
        IntelligenceLevel::Capable
    } else {
        IntelligenceLevel::Autonomous
    })
}

pub fn classify(fit: &PowerLawFit) -> Result<IntelligenceLevel> {
    classify_alpha(fit.alpha)
}

/// A straight line on log-log axes: `y = y0 * (x / x0)^-exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLine {
    pub exponent: f64,
    pub x0: f64,
    pub y0: f64,
}

impl PowerLine {
    pub fn at(&self, x: f64) -> f64 {
        self.y0 * (x / self.x0).powf(-self.exponent)
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<(f64, f64)> {
        xs.iter().map(|&x| (x, self.at(x))).collect()
    }
}

/// Reference lines `x^-2` and `x^-3` pinned to the subject's fit at the
/// lower end of the fit window. Above the anchor they cut the plane into
/// Limited (top), Capable and Autonomous (bottom).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationRegions {
    pub anchor: (f64, f64),
    pub reference_exponents: [f64; 2],
    pub capable_line: PowerLine,
    pub autonomous_line: PowerLine,
}

impl ClassificationRegions {
    pub fn anchored_at(x0: f64, y0: f64) -> Self {
        ClassificationRegions {
            anchor: (x0, y0),
            reference_exponents: [CAPABLE_BOUNDARY, AUTONOMOUS_BOUNDARY],
            capable_line: PowerLine {
                exponent: CAPABLE_BOUNDARY,
                x0,
                y0,
            },
            autonomous_line: PowerLine {
                exponent: AUTONOMOUS_BOUNDARY,
                x0,
                y0,
            },
        }
    }

    /// Region containing the point `(x, y)`, for `x` right of the anchor.
    pub fn region_of(&self, x: f64, y: f64) -> Option<IntelligenceLevel> {
        if x <= self.anchor.0 {
            return None;
        }
        Some(if y >= self.capable_line.at(x) {
            IntelligenceLevel::Limited
        } else if y >= self.autonomous_line.at(x) {
            IntelligenceLevel::Capable
        } else {
            IntelligenceLevel::Autonomous
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPlot {
    pub regions: ClassificationRegions,
    /// Binned subject distribution `(bin center, density)`.
    pub scatter: Vec<(f64, f64)>,
    pub fitted: Vec<(f64, f64)>,
    pub capable_reference: Vec<(f64, f64)>,
    pub autonomous_reference: Vec<(f64, f64)>,
    pub zero_mass: f64,
}

/// Plot series for the classification figure. Lines are sampled on a
/// logarithmic grid from the anchor to the largest observed count (at least
/// one decade past the anchor).
pub fn region_plot_data(
    dist: &EmpiricalDistribution,
    fit: &PowerLawFit,
    bins_per_decade: u32,
) -> Result<RegionPlot> {
    classify(fit)?;
    let x0 = fit.range.x_min as f64;
    let y0 = fit.density_at(x0);
    let regions = ClassificationRegions::anchored_at(x0, y0);
    let fitted_line = PowerLine {
        exponent: fit.alpha,
        x0,
        y0,
    };

    let binned = log_bin(dist, bins_per_decade)?;
    let scatter = binned
        .nonempty()
        .map(|b| (b.center().expect("non-empty bin"), b.density))
        .collect();

    let x_end = (dist.max_count() as f64)
        .max(fit.range.x_max as f64)
        .max(10.0 * x0);
    let n = 50;
    let xs: Vec<f64> = (0..=n)
        .map(|i| x0 * (x_end / x0).powf(i as f64 / n as f64))
        .collect();

    Ok(RegionPlot {
        scatter,
        fitted: fitted_line.sample(&xs),
        capable_reference: regions.capable_line.sample(&xs),
        autonomous_reference: regions.autonomous_line.sample(&xs),
        zero_mass: binned.zero_mass,
        regions,
    })
}

/// Mean and variance of the power law `x^-alpha` truncated to `1..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedMoments {
    pub n_max: u64,
    pub mean: f64,
    pub variance: f64,
}

pub fn truncated_moments(alpha: f64, n_max: u64) -> TruncatedMoments {
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    // Sum small terms first.
    for x in (1..=n_max).rev() {
        let xf = x as f64;
        let p = xf.powf(-alpha);
        z += p;
        m1 += p * xf;
        m2 += p * xf * xf;
    }
    let mean = m1 / z;
    TruncatedMoments {
        n_max,
        mean,
        variance: m2 / z - mean * mean,
    }
}

/// How a moment behaves as the truncation point grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MomentTrend {
    /// Relative change over the last step is below the tolerance.
    Converging,
    /// Strictly increasing with every step changing by more than the tolerance.
    Diverging,
    Undetermined,
}

pub fn moment_trend(values: &[f64], rel_tol: f64) -> MomentTrend {
    let rel = |w: &[f64]| (w[1] - w[0]).abs() / w[0].abs();
    let steps: Vec<f64> = values.windows(2).map(rel).collect();
    let Some(&last) = steps.last() else {
        return MomentTrend::Undetermined;
    };
    if last < rel_tol {
        MomentTrend::Converging
    } else if values.windows(2).all(|w| w[1] > w[0]) && steps.iter().all(|&s| s > rel_tol) {
        MomentTrend::Diverging
    } else {
        MomentTrend::Undetermined
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSweep {
    pub alpha: f64,
    pub points: Vec<TruncatedMoments>,
    pub mean: MomentTrend,
    pub variance: MomentTrend,
}

impl MomentSweep {
    /// Level implied by which moments settle.
    pub fn implied_level(&self) -> Option<IntelligenceLevel> {
        use MomentTrend::*;
        match (self.mean, self.variance) {
            (Diverging, Diverging) => Some(IntelligenceLevel::Limited),
            (Converging, Diverging) => Some(IntelligenceLevel::Capable),
            (Converging, Converging) => Some(IntelligenceLevel::Autonomous),
            _ => None,
        }
    }
}

/// Truncation sweep: moments of the truncated law at each `n_max`.
pub fn moment_sweep(alpha: f64, truncations: &[u64], rel_tol: f64) -> MomentSweep {
    let points: Vec<TruncatedMoments> = truncations
        .iter()
        .map(|&n| truncated_moments(alpha, n))
        .collect();
    let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
    let vars: Vec<f64> = points.iter().map(|p| p.variance).collect();
    MomentSweep {
        alpha,
        mean: moment_trend(&means, rel_tol),
        variance: moment_trend(&vars, rel_tol),
        points,
    }
}
